"""evaluate: merge metric tables of several result directories into one report."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence

import pandas as pd

from app.errors import DatasetError
from app.store.results import read_table, write_gnuplot, write_table

logger = logging.getLogger(__name__)

METRIC_PATTERNS = ("metrics_*.csv", "rmse.csv")
KEY_COLUMNS = ("step", "frame")


def _run_names(dirs: Sequence[Path]) -> List[str]:
    names, seen = [], {}
    for d in dirs:
        name = d.name or str(d)
        count = seen.get(name, 0)
        seen[name] = count + 1
        names.append(name if count == 0 else f"{name}_{count}")
    return names


def _metric_files(directory: Path) -> Dict[str, Path]:
    found = {}
    for pattern in METRIC_PATTERNS:
        for path in sorted(directory.glob(pattern)):
            found[path.stem] = path
    return found


def _key(frame: pd.DataFrame, path: Path) -> str:
    for key in KEY_COLUMNS:
        if key in frame.columns:
            return key
    raise DatasetError(f"{path} has neither a step nor a frame column")


def cmd_evaluate(result_dirs: Sequence, out_dir) -> Dict[str, Any]:
    """
    Merge metric CSVs by table name across result directories.

    With one input the merged tables equal that input's; with several, metric
    columns are qualified by run name (``<run>:<column>``) and outer-joined on
    the step/frame column, leaving absent cells empty. Writes ``<table>.csv``
    and ``<table>.dat`` per table plus ``comparison.csv`` and
    ``comparison.txt`` with per-run column means.

    Raises:
        DatasetError: listing every missing directory or directory without metrics
    """
    dirs = [Path(d) for d in result_dirs]
    if not dirs:
        raise DatasetError("no result directories given")
    missing = [str(d) for d in dirs if not d.is_dir()]
    empty = [str(d) for d in dirs if d.is_dir() and not _metric_files(d)]
    if missing or empty:
        problems = [f"missing: {d}" for d in missing] + [f"no metric tables: {d}" for d in empty]
        raise DatasetError("cannot evaluate; " + "; ".join(problems))

    runs = _run_names(dirs)
    single = len(dirs) == 1
    tables: Dict[str, List] = {}
    for run, directory in zip(runs, dirs):
        for stem, path in _metric_files(directory).items():
            tables.setdefault(stem, []).append((run, path, read_table(path)))

    out_dir = Path(out_dir)
    rows = []
    for stem in sorted(tables):
        merged = None
        for run, path, frame in tables[stem]:
            key = _key(frame, path)
            metrics = [c for c in frame.columns if c != key]
            for column in metrics:
                rows.append({"table": stem, "metric": column, "run": run, "mean": frame[column].mean()})
            if not single:
                frame = frame.rename(columns={c: f"{run}:{c}" for c in metrics})
            merged = frame if merged is None else merged.merge(frame, on=key, how="outer")
        merged = merged.sort_values(key).reset_index(drop=True)
        write_table(merged, out_dir / f"{stem}.csv")
        write_gnuplot(merged, out_dir / f"{stem}.dat")

    pairs = list(dict.fromkeys((r["table"], r["metric"]) for r in rows))
    means = {(r["table"], r["metric"], r["run"]): r["mean"] for r in rows}
    comparison = pd.DataFrame(
        [{"table": t, "metric": m, **{run: means.get((t, m, run)) for run in runs}} for t, m in pairs],
        columns=["table", "metric", *runs],
    )
    write_table(comparison, out_dir / "comparison.csv")
    (out_dir / "comparison.txt").write_text(comparison.to_string(index=False, na_rep="") + "\n")

    logger.info(f"Compared {len(runs)} runs over {len(tables)} tables -> {out_dir}")
    print(comparison.to_string(index=False, na_rep=""))
    return {"runs": runs, "tables": sorted(tables)}
