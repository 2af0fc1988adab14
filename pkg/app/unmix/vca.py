"""Vertex Component Analysis.

Follows the published algorithm: estimate the SNR from the data covariance,
project onto a P-dimensional subspace (high SNR) or use the projective
projection onto P-1 dimensions (low SNR), then repeatedly pick the pixel with
the largest projection onto a random direction orthogonal to the vertices
found so far.
"""

import logging
from typing import Iterable, Optional, Tuple

import numpy as np
import scipy.linalg as splin

from app.model.types import EndmemberMatrix, ImageSequence, SpectralSeries

logger = logging.getLogger(__name__)

RANK_TOL = 1e-10


def estimate_snr(Y: np.ndarray, y_mean: np.ndarray, x_proj: np.ndarray) -> float:
    """SNR estimate (dB) from the data and its projection on the signal subspace."""
    L, N = Y.shape
    p = x_proj.shape[0]
    power_y = float(np.sum(Y**2)) / N
    power_x = float(np.sum(x_proj**2)) / N + float(np.sum(y_mean**2))
    noise = power_y - power_x
    signal = power_x - p / L * power_y
    if noise <= RANK_TOL * power_y:
        return float("inf")
    if signal <= 0:
        return float("-inf")
    return float(10.0 * np.log10(signal / noise))


def vca_extract(
    frame: np.ndarray,
    P: int,
    rng: np.random.Generator,
    snr_input: Optional[float] = None,
) -> EndmemberMatrix:
    """
    Extract P endmembers from one L x N frame.

    Args:
        frame: Observations, one pixel per column
        P: Number of endmembers
        rng: Random generator for the projection directions
        snr_input: Known SNR in dB; estimated from the data when omitted

    Returns:
        EndmemberMatrix whose columns are (projected) pixels of the frame
    """
    endmembers, _ = vca_with_indices(frame, P, rng, snr_input)
    return endmembers


def vca_with_indices(
    frame: np.ndarray,
    P: int,
    rng: np.random.Generator,
    snr_input: Optional[float] = None,
) -> Tuple[EndmemberMatrix, np.ndarray]:
    """VCA returning the selected pixel indices as well."""
    Y = np.asarray(frame, dtype=np.float64)
    if Y.ndim != 2:
        raise ValueError(f"frame must be L x N, got shape {Y.shape}")
    L, N = Y.shape
    if not np.all(np.isfinite(Y)):
        raise ValueError("frame contains non-finite values")
    if not (1 <= P <= L):
        raise ValueError(f"P must lie in [1, L={L}], got {P}")
    if N < P:
        raise ValueError(f"need at least P={P} pixels, got N={N}")

    if P == 1:
        index = int(np.argmax(np.sum(Y**2, axis=0)))
        return EndmemberMatrix(Y[:, [index]]), np.array([index])

    y_mean = Y.mean(axis=1, keepdims=True)
    Y_o = Y - y_mean
    eigvals, eigvecs = splin.eigh(Y_o @ Y_o.T / N)
    order = np.argsort(eigvals)[::-1]
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]
    if eigvals[0] <= 0 or eigvals[P - 2] <= RANK_TOL * eigvals[0]:
        raise ValueError(f"degenerate frame: centered data rank below P-1={P - 1}")

    if snr_input is None:
        Ud = eigvecs[:, :P]
        snr = estimate_snr(Y, y_mean, Ud.T @ Y_o)
    else:
        snr = float(snr_input)
    snr_threshold = 15.0 + 10.0 * np.log10(P)
    logger.debug(f"VCA SNR {snr:.2f} dB (threshold {snr_threshold:.2f} dB)")

    if snr < snr_threshold:
        d = P - 1
        Ud = eigvecs[:, :d]
        x_p = Ud.T @ Y_o
        Yp = Ud @ x_p + y_mean
        c = np.sqrt(np.max(np.sum(x_p**2, axis=0)))
        y = np.vstack([x_p, c * np.ones((1, N))])
    else:
        d = P
        w, v = splin.eigh(Y @ Y.T / N)
        Ud = v[:, np.argsort(w)[::-1][:d]]
        x_p = Ud.T @ Y
        Yp = Ud @ x_p
        u = x_p.mean(axis=1, keepdims=True)
        denom = np.sum(x_p * u, axis=0)
        if np.any(denom == 0):
            raise ValueError("degenerate frame: pixels orthogonal to the mean direction")
        y = x_p / denom

    indices = np.zeros(P, dtype=int)
    A = np.zeros((P, P))
    A[-1, 0] = 1.0
    for i in range(P):
        w = rng.random(P)
        f = w - A @ (np.linalg.pinv(A) @ w)
        norm = np.linalg.norm(f)
        if norm == 0:
            raise ValueError("degenerate frame: projection direction vanished")
        f /= norm
        indices[i] = int(np.argmax(np.abs(f @ y)))
        A[:, i] = y[:, indices[i]]
    return EndmemberMatrix(Yp[:, indices]), indices


def vca_per_frame(
    observations: ImageSequence,
    P: int,
    rng: np.random.Generator,
    frames: Optional[Iterable[int]] = None,
) -> SpectralSeries:
    """Run VCA independently on each requested frame (unaligned)."""
    frame_ids = list(range(observations.n_frames)) if frames is None else list(frames)
    extracted = [vca_extract(observations.frames[t], P, rng).columns for t in frame_ids]
    logger.info(f"VCA extracted {P} endmembers on {len(frame_ids)} frames")
    return SpectralSeries(np.stack(extracted), observations.timestamps[frame_ids])
