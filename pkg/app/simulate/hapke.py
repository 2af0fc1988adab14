"""Simplified Hapke reflectance model and its exact inverse.

    s = w / ((1 + 2 mu sqrt(1 - w)) (1 + 2 mu0 sqrt(1 - w)))

with w the single-scattering albedo, mu = cos(emergence), mu0 = cos(incidence).
"""

import logging
from dataclasses import dataclass

import numpy as np

from app.errors import NumericalError
from app.model.types import Spectrum

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AlbedoSpectrum:
    """Single-scattering albedo per band, strictly inside (0, 1)."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise ValueError("albedo contains non-finite values")
        outside = np.flatnonzero((values <= 0.0) | (values >= 1.0))
        if outside.size:
            band = int(outside[0])
            raise ValueError(f"albedo must lie in (0, 1); band {band} has {values[band]}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def _check_cosine(name: str, value: float) -> float:
    value = float(value)
    if not (0.0 < value <= 1.0):
        raise ValueError(f"{name} must lie in (0, 1], got {value}")
    return value


def hapke_forward(omega: AlbedoSpectrum, mu: float, mu0: float) -> Spectrum:
    """Bandwise reflectance for albedo ``omega`` under cosines (mu, mu0)."""
    mu = _check_cosine("mu", mu)
    mu0 = _check_cosine("mu0", mu0)
    w = omega.values
    root = np.sqrt(1.0 - w)
    return Spectrum(w / ((1.0 + 2.0 * mu * root) * (1.0 + 2.0 * mu0 * root)))


def hapke_invert(reflectance, mu: float, mu0: float) -> AlbedoSpectrum:
    """
    Recover the albedo from a reflectance spectrum.

    With x = sqrt(1 - w) the model becomes the quadratic
    (4 r mu mu0 + 1) x^2 + 2 r (mu + mu0) x + (r - 1) = 0, whose non-negative
    root gives w = 1 - x^2.

    Args:
        reflectance: Spectrum (or array) with entries in (0, 1)
        mu: Cosine of the emergence angle
        mu0: Cosine of the incidence angle

    Returns:
        AlbedoSpectrum

    Raises:
        NumericalError: when a band has no root in [0, 1]
    """
    mu = _check_cosine("mu", mu)
    mu0 = _check_cosine("mu0", mu0)
    r = reflectance.values if isinstance(reflectance, Spectrum) else np.asarray(reflectance, dtype=np.float64)
    outside = np.flatnonzero(~np.isfinite(r) | (r <= 0.0) | (r >= 1.0))
    if outside.size:
        band = int(outside[0])
        raise NumericalError(f"reflectance must lie in (0, 1) for inversion; band {band} has {r[band]}")

    a = 4.0 * r * mu * mu0 + 1.0
    b = 2.0 * r * (mu + mu0)
    one_minus_r = 1.0 - r
    # citardauq form of the positive root, stable as r -> 1
    x = 2.0 * one_minus_r / (b + np.sqrt(b * b + 4.0 * a * one_minus_r))
    bad = np.flatnonzero((x < 0.0) | (x > 1.0))
    if bad.size:
        band = int(bad[0])
        raise NumericalError(f"no Hapke root in [0, 1] for band {band} (r={r[band]})")
    w = 1.0 - x * x
    # w == 1 exactly only through rounding at r ~ 1
    return AlbedoSpectrum(np.minimum(w, np.nextafter(1.0, 0.0)))


def albedos_from_reflectance(reflectance: np.ndarray, mu: float, mu0: float) -> np.ndarray:
    """Invert every endmember column of an L x P reflectance matrix."""
    reflectance = np.asarray(reflectance, dtype=np.float64)
    return np.stack(
        [hapke_invert(reflectance[:, p], mu, mu0).values for p in range(reflectance.shape[1])],
        axis=1,
    )
