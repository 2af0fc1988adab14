"""simulate: generate a dataset bundle."""

import logging
from pathlib import Path
from typing import Any, Dict

import numpy as np

from app.experiments.config import ExperimentConfig
from app.model.types import ImageSequence, SpectralSeries
from app.simulate.scenarios import generate_scenario_a, generate_scenario_b
from app.store.datasets import DatasetBundle, write_bundle

logger = logging.getLogger(__name__)


def achieved_snr_db(observations: ImageSequence, clean: np.ndarray) -> float:
    """Mean over frames of 10 log10(||signal||^2 / ||noise||^2)."""
    values = []
    for t in range(observations.n_frames):
        noise = float(np.sum((observations.frames[t] - clean[t]) ** 2))
        signal = float(np.sum(clean[t] ** 2))
        values.append(np.inf if noise == 0 else 10.0 * np.log10(signal / noise))
    return float(np.mean(values))


def _clean(truth: SpectralSeries, abundances) -> np.ndarray:
    return np.einsum("tlp,pn->tln", truth.frames, abundances.entries)


def build_bundle(config: ExperimentConfig) -> DatasetBundle:
    if config.scenario == "A":
        cfg = config.scenario_a
        data = generate_scenario_a(cfg)
        return DatasetBundle(
            scenario="A",
            config=cfg.model_dump(mode="json"),
            seed=cfg.rng_seed,
            truth=data.truth,
            observations=data.observations,
            abundances=data.abundances,
            extras={"s_bar": data.s_bar, "variable_states": data.variable_states},
        )
    cfg = config.scenario_b
    data = generate_scenario_b(cfg)
    return DatasetBundle(
        scenario="B",
        config=cfg.model_dump(mode="json"),
        seed=cfg.rng_seed,
        truth=data.pure_pixels,
        observations=data.observations,
        abundances=data.abundances,
        extras={"albedos": data.albedos, "mu0": data.mu0},
        materials=data.materials,
    )


def cmd_simulate(config: ExperimentConfig, out_dir) -> Dict[str, Any]:
    """
    Generate the configured scenario and write it as a dataset bundle.

    Returns:
        Summary with L, P, N, T and the achieved SNR
    """
    bundle = build_bundle(config)
    write_bundle(bundle, Path(out_dir))

    summary: Dict[str, Any] = {
        "scenario": bundle.scenario,
        "L": bundle.truth.bands,
        "P": bundle.truth.n_endmembers,
        "N": None if bundle.observations is None else bundle.observations.n_pixels,
        "T": bundle.truth.n_frames,
        "snr_db": None,
    }
    if bundle.observations is not None:
        summary["snr_db"] = achieved_snr_db(bundle.observations, _clean(bundle.truth, bundle.abundances))
    if bundle.scenario == "B":
        summary["train_frames"] = config.scenario_b.train_frames
        summary["test_frames"] = config.scenario_b.T - config.scenario_b.train_frames

    snr = "n/a" if summary["snr_db"] is None else f"{summary['snr_db']:.2f} dB"
    print(
        f"Scenario {summary['scenario']}: L={summary['L']} P={summary['P']} N={summary['N']} "
        f"T={summary['T']} SNR achieved {snr} -> {out_dir}"
    )
    logger.info(f"Dataset written to {out_dir}")
    return summary
