"""On-disk dataset bundles.

A bundle is a directory holding ``manifest.json`` (shapes, timestamps, seed,
config echo and provenance) plus one raw little-endian float64 file per
tensor in row-major order, with CSV mirrors of the frame-0 endmembers and the
abundances for inspection.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import orjson
import pandas as pd

from app import __version__
from app.errors import DatasetError
from app.model.types import AbundanceMatrix, ImageSequence, SpectralSeries

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
ARRAY_DTYPE = "<f8"
CSV_FLOAT_FORMAT = "%.10g"


def config_hash(config: Dict[str, Any]) -> str:
    """Stable hash of a config echo (sorted-key JSON)."""
    return hashlib.sha256(orjson.dumps(config, option=orjson.OPT_SORT_KEYS)).hexdigest()


def dump_json(payload: Dict[str, Any]) -> bytes:
    return orjson.dumps(payload, option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY)


@dataclass(frozen=True)
class DatasetBundle:
    """Observations and/or pure-pixel series with ground truth and provenance."""

    scenario: str
    config: Dict[str, Any]
    seed: int
    truth: SpectralSeries
    observations: Optional[ImageSequence] = None
    abundances: Optional[AbundanceMatrix] = None
    extras: Dict[str, np.ndarray] = field(default_factory=dict)
    materials: Optional[List[str]] = None
    version: str = __version__

    def __post_init__(self):
        if self.observations is not None:
            obs = self.observations
            if (obs.n_frames, obs.bands) != (self.truth.n_frames, self.truth.bands):
                raise ValueError(
                    f"observations ({obs.n_frames} frames, {obs.bands} bands) do not match "
                    f"ground truth ({self.truth.n_frames}, {self.truth.bands})"
                )
        if self.abundances is not None:
            if self.abundances.n_endmembers != self.truth.n_endmembers:
                raise ValueError("abundances and ground truth disagree on P")
            if self.observations is not None and self.abundances.n_pixels != self.observations.n_pixels:
                raise ValueError("abundances and observations disagree on N")

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    @property
    def provenance(self) -> Dict[str, Any]:
        return {"config_hash": self.config_hash, "seed": self.seed, "version": self.version}

    def material_names(self) -> List[str]:
        if self.materials:
            return list(self.materials)
        return [f"endmember_{p}" for p in range(self.truth.n_endmembers)]


def _write_array(directory: Path, name: str, values: np.ndarray) -> Dict[str, Any]:
    values = np.ascontiguousarray(values, dtype=ARRAY_DTYPE)
    filename = f"{name}.f64"
    (directory / filename).write_bytes(values.tobytes())
    return {"file": filename, "shape": list(values.shape)}


def _read_array(directory: Path, name: str, entry: Dict[str, Any]) -> np.ndarray:
    path = directory / entry["file"]
    try:
        raw = path.read_bytes()
    except FileNotFoundError as e:
        raise DatasetError(f"dataset array {name} missing: {path}") from e
    shape = tuple(entry["shape"])
    expected = int(np.prod(shape)) * 8
    if len(raw) != expected:
        raise DatasetError(f"{path} holds {len(raw)} bytes, expected {expected} for shape {shape}")
    return np.frombuffer(raw, dtype=ARRAY_DTYPE).reshape(shape).astype(np.float64)


def write_bundle(bundle: DatasetBundle, directory) -> Path:
    """
    Write a bundle to a directory (created if needed).

    Returns:
        Path of the written manifest
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    arrays = {"truth": _write_array(directory, "truth", bundle.truth.frames)}
    if bundle.observations is not None:
        arrays["observations"] = _write_array(directory, "observations", bundle.observations.frames)
        arrays["noise_sigma"] = _write_array(directory, "noise_sigma", bundle.observations.noise_sigma)
    if bundle.abundances is not None:
        arrays["abundances"] = _write_array(directory, "abundances", bundle.abundances.entries)
    for name, values in sorted(bundle.extras.items()):
        arrays[name] = _write_array(directory, name, values)

    names = bundle.material_names()
    endmembers = pd.DataFrame(bundle.truth.frames[0], columns=names)
    endmembers.insert(0, "band", np.arange(bundle.truth.bands))
    endmembers.to_csv(directory / "endmembers_t0.csv", index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    if bundle.abundances is not None:
        abundances = pd.DataFrame(bundle.abundances.entries.T, columns=names)
        abundances.insert(0, "pixel", np.arange(bundle.abundances.n_pixels))
        abundances.to_csv(directory / "abundances.csv", index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")

    manifest = {
        "scenario": bundle.scenario,
        "config": bundle.config,
        "provenance": bundle.provenance,
        "seed": bundle.seed,
        "version": bundle.version,
        "materials": names,
        "timestamps": bundle.truth.timestamps.tolist(),
        "shapes": {
            "T": bundle.truth.n_frames,
            "L": bundle.truth.bands,
            "P": bundle.truth.n_endmembers,
            "N": None if bundle.observations is None else bundle.observations.n_pixels,
        },
        "arrays": arrays,
    }
    path = directory / MANIFEST
    path.write_bytes(dump_json(manifest))
    logger.info(f"Wrote scenario {bundle.scenario} dataset to {directory}")
    return path


def read_manifest(directory) -> Dict[str, Any]:
    path = Path(directory) / MANIFEST
    try:
        return orjson.loads(path.read_bytes())
    except FileNotFoundError as e:
        raise DatasetError(f"no dataset manifest at {path}") from e
    except orjson.JSONDecodeError as e:
        raise DatasetError(f"corrupt dataset manifest {path}: {e}") from e


def read_bundle(directory) -> DatasetBundle:
    """Load a bundle written by ``write_bundle``; input files are only read."""
    directory = Path(directory)
    manifest = read_manifest(directory)
    try:
        arrays = {name: _read_array(directory, name, entry) for name, entry in manifest["arrays"].items()}
        timestamps = np.asarray(manifest["timestamps"], dtype=np.float64)
        truth = SpectralSeries(arrays.pop("truth"), timestamps)
        observations = None
        if "observations" in arrays:
            observations = ImageSequence(arrays.pop("observations"), arrays.pop("noise_sigma", None), timestamps)
        abundances = AbundanceMatrix(arrays.pop("abundances")) if "abundances" in arrays else None
        bundle = DatasetBundle(
            scenario=manifest["scenario"],
            config=manifest["config"],
            seed=int(manifest["seed"]),
            truth=truth,
            observations=observations,
            abundances=abundances,
            extras=arrays,
            materials=manifest.get("materials"),
            version=manifest.get("version", __version__),
        )
    except KeyError as e:
        raise DatasetError(f"dataset manifest in {directory} lacks {e}") from e
    except ValueError as e:
        raise DatasetError(f"inconsistent dataset in {directory}: {e}") from e
    if bundle.config_hash != manifest.get("provenance", {}).get("config_hash"):
        raise DatasetError(f"config hash mismatch in {directory}; the manifest was edited")
    logger.info(f"Loaded scenario {bundle.scenario} dataset from {directory}")
    return bundle
