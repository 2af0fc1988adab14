"""Spectrum synthesis, abundance sampling and noise."""

import logging
from pathlib import Path
from typing import List, Tuple

import numpy as np
import pandas as pd
from scipy.stats import dirichlet

from app.errors import DatasetError
from app.model.types import AbundanceMatrix, Spectrum

logger = logging.getLogger(__name__)

SPECTRUM_FLOOR = 0.05
SPECTRUM_CEIL = 0.95


def synth_spectrum(rng: np.random.Generator, L: int) -> Spectrum:
    """
    Draw a smooth reflectance spectrum.

    A positive mixture of 3-6 Gaussian absorption/reflection bumps over a random
    constant offset, clipped to [0.05, 0.95].

    Args:
        rng: Random generator owned by the caller
        L: Number of bands

    Returns:
        Spectrum of length L
    """
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    bands = np.arange(L, dtype=np.float64)
    n_bumps = int(rng.integers(3, 7))
    centers = rng.uniform(0.0, L, size=n_bumps)
    widths = rng.uniform(max(L / 20.0, 1.0), max(L / 4.0, 1.0), size=n_bumps)
    heights = rng.uniform(0.05, 0.4, size=n_bumps)
    offset = rng.uniform(0.05, 0.3)
    values = offset + np.sum(
        heights[:, None] * np.exp(-0.5 * ((bands[None, :] - centers[:, None]) / widths[:, None]) ** 2),
        axis=0,
    )
    return Spectrum(np.clip(values, SPECTRUM_FLOOR, SPECTRUM_CEIL))


def sample_dirichlet(rng: np.random.Generator, alpha, N: int) -> AbundanceMatrix:
    """P x N abundances, each column an independent Dirichlet(alpha) draw."""
    alpha = np.asarray(alpha, dtype=np.float64).reshape(-1)
    if alpha.size < 1 or np.any(~np.isfinite(alpha)) or np.any(alpha <= 0):
        raise ValueError(f"Dirichlet concentration must be positive, got {alpha}")
    if alpha.size == 1:
        return AbundanceMatrix(np.ones((1, N)))
    draws = dirichlet.rvs(alpha, size=N, random_state=rng).T
    # renormalise so the sum-to-one invariant holds to machine precision
    draws = np.maximum(draws, 0.0)
    return AbundanceMatrix(draws / draws.sum(axis=0, keepdims=True))


def add_awgn_snr(signal: np.ndarray, snr_db: float, rng: np.random.Generator) -> Tuple[np.ndarray, float]:
    """
    Add white Gaussian noise at a target SNR.

    Args:
        signal: Noise-free array (any shape)
        snr_db: Target signal-to-noise ratio in dB (power ratio)
        rng: Random generator owned by the caller

    Returns:
        (noisy array, noise standard deviation used)
    """
    signal = np.asarray(signal, dtype=np.float64)
    if not np.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db}")
    power = float(np.mean(signal**2))
    if power == 0.0:
        raise ValueError("SNR undefined for an all-zero signal")
    sigma = float(np.sqrt(power / 10.0 ** (snr_db / 10.0)))
    return signal + sigma * rng.standard_normal(signal.shape), sigma


def load_spectra_csv(path) -> Tuple[List[str], np.ndarray]:
    """
    Read user spectra: one row per band, one column per endmember, header of names.

    Returns:
        (endmember names, L x P matrix)
    """
    path = Path(path)
    try:
        table = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as e:
        raise DatasetError(f"cannot read spectra from {path}: {e}") from e
    values = table.to_numpy(dtype=np.float64)
    if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
        raise DatasetError(f"{path} holds no spectra")
    if not np.all(np.isfinite(values)):
        raise DatasetError(f"{path} contains non-numeric or non-finite entries")
    logger.info(f"Loaded {values.shape[1]} spectra with {values.shape[0]} bands from {path}")
    return [str(c) for c in table.columns], values
