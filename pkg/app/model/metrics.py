"""Spectral comparison metrics."""

import numpy as np

from app.model.types import Spectrum


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, Spectrum) else np.asarray(x, dtype=np.float64)


def spectral_rmse(estimate, truth) -> float:
    """(1 / sqrt(L)) * ||estimate - truth||_2."""
    est, ref = _values(estimate), _values(truth)
    if est.shape != ref.shape:
        raise ValueError(f"spectra differ in length: {est.shape} vs {ref.shape}")
    return float(np.linalg.norm(est - ref) / np.sqrt(est.shape[0]))


def spectral_angle(a, b) -> float:
    """Angle in radians between two spectra; brightness invariant."""
    x, y = _values(a), _values(b)
    denom = np.linalg.norm(x) * np.linalg.norm(y)
    if denom == 0:
        raise ValueError("spectral angle undefined for a zero spectrum")
    return float(np.arccos(np.clip(np.dot(x, y) / denom, -1.0, 1.0)))


def spectral_angle_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise angles between the columns of a (L x P) and b (L x Q)."""
    an = a / np.linalg.norm(a, axis=0, keepdims=True)
    bn = b / np.linalg.norm(b, axis=0, keepdims=True)
    return np.arccos(np.clip(an.T @ bn, -1.0, 1.0))
