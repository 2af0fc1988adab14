"""Result tables: CSV with header rows, gnuplot data files and run manifests."""

import logging
from pathlib import Path
from typing import Any, Dict

import pandas as pd

from app import __version__
from app.errors import DatasetError
from app.store.datasets import CSV_FLOAT_FORMAT, config_hash, dump_json

logger = logging.getLogger(__name__)

RESULT_MANIFEST = "result.json"


def write_table(frame: pd.DataFrame, path) -> Path:
    """CSV with a header row; missing cells are written empty."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, na_rep="", lineterminator="\n")
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def read_table(path) -> pd.DataFrame:
    path = Path(path)
    try:
        return pd.read_csv(path)
    except FileNotFoundError as e:
        raise DatasetError(f"result table {path} not found") from e
    except pd.errors.ParserError as e:
        raise DatasetError(f"cannot parse {path}: {e}") from e


def write_gnuplot(frame: pd.DataFrame, path) -> Path:
    """Whitespace-separated columns under a commented header; gaps as NaN."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = frame.to_csv(sep=" ", index=False, header=False, float_format=CSV_FLOAT_FORMAT, na_rep="NaN", lineterminator="\n")
    path.write_text("# " + " ".join(str(c) for c in frame.columns) + "\n" + body)
    return path


def write_result_manifest(directory, command: str, config: Dict[str, Any], seed: int, summary: Dict[str, Any]) -> Path:
    """Config echo, hash, seed and headline numbers of one command run."""
    path = Path(directory) / RESULT_MANIFEST
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "command": command,
        "config": config,
        "config_hash": config_hash(config),
        "seed": seed,
        "version": __version__,
        "summary": summary,
    }
    path.write_bytes(dump_json(payload))
    return path
