"""learn: train the three dynamics networks and score their test predictions."""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from app.errors import DatasetError, NumericalError
from app.experiments.config import ExperimentConfig
from app.learndyn.checkpoint import save_checkpoint
from app.learndyn.networks import build_model
from app.learndyn.training import predict_test, train
from app.model.metrics import spectral_rmse
from app.model.types import SpectralSeries
from app.simulate.scenarios import ScenarioBConfig
from app.store.datasets import read_bundle
from app.store.results import write_result_manifest, write_table
from app.unmix.align import align_endmembers, match_to_reference
from app.unmix.vca import vca_per_frame

logger = logging.getLogger(__name__)

SPECTRA_STEP = 4


def _vca_baseline(bundle, test_index: np.ndarray, truth: SpectralSeries, rng) -> Optional[SpectralSeries]:
    """Per-frame VCA on the mixed test images, aligned and matched to the first test frame."""
    if bundle.observations is None:
        logger.warning("Dataset has no mixed images; skipping the VCA baseline")
        return None
    extracted = vca_per_frame(bundle.observations, truth.n_endmembers, rng, frames=test_index)
    aligned, _ = align_endmembers(extracted)
    _, order = match_to_reference(aligned.frames[0], truth.frames[0])
    return SpectralSeries(aligned.frames[:, :, order], aligned.timestamps)


def cmd_learn(config: ExperimentConfig, dataset_dir, out_dir) -> Dict[str, Any]:
    """
    Train every configured architecture on the first T_train frames and predict the rest.

    Writes ``metrics_<material>.csv`` (step, lstm, euler, rk4[, vca]),
    ``spectra_step4_<material>.csv``, ``loss_<arch>.csv``,
    ``checkpoints/<arch>.ckpt`` and ``result.json``. A diverging architecture
    is logged and reported; the others still run.
    """
    bundle = read_bundle(dataset_dir)
    if bundle.scenario != "B":
        raise DatasetError(f"{dataset_dir} is not a Scenario B dataset")
    scenario = ScenarioBConfig.model_validate(bundle.config)
    series = bundle.truth
    train_frames = scenario.train_frames
    test_index = np.arange(train_frames, series.n_frames)
    test_truth = SpectralSeries(series.frames[test_index], series.timestamps[test_index])
    training = config.training.model_copy(update={"train_frames": train_frames})
    out_dir = Path(out_dir)

    predictions: Dict[str, Optional[SpectralSeries]] = {}
    final_loss: Dict[str, Optional[float]] = {}
    for arch in config.architectures:
        model = build_model(arch, series.bands, config.architecture, seed=training.seed)
        try:
            result = train(model, series, training)
        except NumericalError as e:
            logger.error(f"{arch}: {e}")
            predictions[arch] = None
            final_loss[arch] = None
            continue
        predictions[arch] = predict_test(
            result.model,
            series.frames[train_frames - 1],
            len(test_index),
            history=series.slice(0, train_frames),
            timestamps=test_truth.timestamps,
        )
        final_loss[arch] = result.final_loss
        save_checkpoint(result.model, out_dir / "checkpoints" / f"{arch}.ckpt", extra={"dataset": bundle.provenance})
        write_table(
            pd.DataFrame({"epoch": np.arange(len(result.loss_history)), "loss": result.loss_history}),
            out_dir / f"loss_{arch}.csv",
        )

    if config.vca_baseline:
        predictions["vca"] = _vca_baseline(bundle, test_index, test_truth, np.random.default_rng(config.seed))

    n_test = len(test_index)
    spectra_row = min(SPECTRA_STEP, n_test) - 1
    means: Dict[str, Dict[str, Optional[float]]] = {}
    for m, material in enumerate(bundle.material_names()):
        table = pd.DataFrame({"step": np.arange(1, n_test + 1)})
        spectra = pd.DataFrame({"band": np.arange(series.bands), "truth": test_truth.frames[spectra_row, :, m]})
        for name, predicted in predictions.items():
            if predicted is None:
                table[name] = np.nan
                spectra[name] = np.nan
                continue
            table[name] = [spectral_rmse(predicted.frames[t, :, m], test_truth.frames[t, :, m]) for t in range(n_test)]
            spectra[name] = predicted.frames[spectra_row, :, m]
        write_table(table, out_dir / f"metrics_{material}.csv")
        if n_test:
            write_table(spectra, out_dir / f"spectra_step{SPECTRA_STEP}_{material}.csv")
        means[material] = {name: None if predicted is None else float(table[name].mean()) for name, predicted in predictions.items()}

    summary = {
        "train_frames": train_frames,
        "test_frames": n_test,
        "final_loss": final_loss,
        "diverged": [arch for arch, value in final_loss.items() if value is None],
        "mean_test_rmse": means,
        "dataset": bundle.provenance,
    }
    write_result_manifest(out_dir, "learn", config.echo(), config.seed, summary)
    for material, row in means.items():
        cells = ", ".join(f"{name} {'diverged' if v is None else f'{v:.4e}'}" for name, v in row.items())
        print(f"{material}: {cells}")
    return summary
