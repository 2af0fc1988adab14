"""Trajectory-level error metrics."""

from typing import Optional

import numpy as np

from app.model.metrics import spectral_rmse
from app.model.types import SpectralSeries


def trajectory_rmse(
    estimate: SpectralSeries, truth: SpectralSeries, p: int, s_bar: Optional[np.ndarray] = None
) -> np.ndarray:
    """
    Per-frame spectral RMSE of endmember p.

    With ``s_bar`` the error is taken on the variable part only: the offset is
    subtracted from both spectra first. It cancels in the difference, so the
    values match the plain mode up to rounding.

    Args:
        estimate: Aligned estimated series
        truth: Ground-truth series of the same shape
        p: Endmember index
        s_bar: Optional (L,) offset spectrum of endmember p

    Returns:
        Vector of T RMSE values
    """
    if estimate.frames.shape != truth.frames.shape:
        raise ValueError(f"shape mismatch: {estimate.frames.shape} vs {truth.frames.shape}")
    if not (0 <= p < truth.n_endmembers):
        raise ValueError(f"endmember {p} out of range for P={truth.n_endmembers}")
    offset = np.zeros(truth.bands)
    if s_bar is not None:
        offset = np.asarray(s_bar, dtype=np.float64)
        if offset.shape != (truth.bands,):
            raise ValueError(f"s_bar has shape {offset.shape}, expected ({truth.bands},)")
    return np.array(
        [
            spectral_rmse(estimate.frames[t, :, p] - offset, truth.frames[t, :, p] - offset)
            for t in range(truth.n_frames)
        ]
    )
