"""Immutable value types for spectra, endmembers, abundances and image sequences.

Arrays handed to the constructors are copied to float64 and frozen
(``writeable = False``), so instances can be shared between threads.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

SUM_TO_ONE_TOL = 1e-9
NONNEG_TOL = 1e-12


def _frozen(values, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


def _frozen_timestamps(timestamps, count: int) -> np.ndarray:
    if timestamps is None:
        ts = np.arange(count, dtype=np.float64)
    else:
        ts = np.array(timestamps, dtype=np.float64, copy=True).reshape(-1)
    if ts.shape[0] != count:
        raise ValueError(f"expected {count} timestamps, got {ts.shape[0]}")
    if count > 1 and not np.all(np.diff(ts) > 0):
        raise ValueError("timestamps must be strictly increasing")
    ts.setflags(write=False)
    return ts


@dataclass(frozen=True)
class Spectrum:
    """Reflectance per spectral band (length L)."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, 1, "Spectrum"))
        if self.values.shape[0] < 1:
            raise ValueError("Spectrum needs at least one band")

    @property
    def bands(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class EndmemberMatrix:
    """Endmember signatures S (L bands x P endmembers)."""

    columns: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "columns", _frozen(self.columns, 2, "EndmemberMatrix"))
        if self.columns.shape[1] < 1:
            raise ValueError("EndmemberMatrix needs P >= 1")

    @property
    def bands(self) -> int:
        return self.columns.shape[0]

    @property
    def n_endmembers(self) -> int:
        return self.columns.shape[1]

    def spectrum(self, p: int) -> Spectrum:
        return Spectrum(self.columns[:, p])


@dataclass(frozen=True)
class SpectralSeries:
    """A trajectory of endmember matrices, stored as a (T, L, P) array."""

    frames: np.ndarray
    timestamps: Optional[np.ndarray] = None

    def __post_init__(self):
        frames = _frozen(self.frames, 3, "SpectralSeries")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "timestamps", _frozen_timestamps(self.timestamps, frames.shape[0]))

    @classmethod
    def from_matrices(cls, matrices, timestamps=None) -> "SpectralSeries":
        mats = [m.columns if isinstance(m, EndmemberMatrix) else np.asarray(m) for m in matrices]
        shapes = {m.shape for m in mats}
        if len(shapes) > 1:
            raise ValueError(f"all frames must share (L, P), got {sorted(shapes)}")
        return cls(np.stack(mats), timestamps)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def bands(self) -> int:
        return self.frames.shape[1]

    @property
    def n_endmembers(self) -> int:
        return self.frames.shape[2]

    def frame(self, t: int) -> EndmemberMatrix:
        return EndmemberMatrix(self.frames[t])

    def endmember(self, p: int) -> np.ndarray:
        """(T, L) trajectory of one endmember."""
        return self.frames[:, :, p]

    def slice(self, start: int, stop: int) -> "SpectralSeries":
        return SpectralSeries(self.frames[start:stop], self.timestamps[start:stop])


@dataclass(frozen=True)
class AbundanceMatrix:
    """Proportions (P x N) on the column simplex."""

    entries: np.ndarray

    def __post_init__(self):
        entries = _frozen(self.entries, 2, "AbundanceMatrix")
        if entries.size and entries.min() < -NONNEG_TOL:
            bad = np.unravel_index(np.argmin(entries), entries.shape)
            raise ValueError(f"negative abundance {entries[bad]:.3e} at (endmember, pixel) {bad}")
        deviation = np.abs(entries.sum(axis=0) - 1.0)
        if deviation.size and deviation.max() > SUM_TO_ONE_TOL:
            pixel = int(np.argmax(deviation))
            raise ValueError(f"abundances of pixel {pixel} sum to {entries[:, pixel].sum():.12f}")
        object.__setattr__(self, "entries", entries)

    @property
    def n_endmembers(self) -> int:
        return self.entries.shape[0]

    @property
    def n_pixels(self) -> int:
        return self.entries.shape[1]

    def permuted(self, order) -> "AbundanceMatrix":
        return AbundanceMatrix(self.entries[np.asarray(order)])


@dataclass(frozen=True)
class ImageSequence:
    """T observed frames (L x N each) with per-frame noise level."""

    frames: np.ndarray
    noise_sigma: Optional[np.ndarray] = None
    timestamps: Optional[np.ndarray] = None

    def __post_init__(self):
        frames = _frozen(self.frames, 3, "ImageSequence")
        object.__setattr__(self, "frames", frames)
        sigma = np.zeros(frames.shape[0]) if self.noise_sigma is None else self.noise_sigma
        sigma = _frozen(np.reshape(sigma, -1), 1, "noise_sigma")
        if sigma.shape[0] != frames.shape[0]:
            raise ValueError(f"expected {frames.shape[0]} noise levels, got {sigma.shape[0]}")
        object.__setattr__(self, "noise_sigma", sigma)
        object.__setattr__(self, "timestamps", _frozen_timestamps(self.timestamps, frames.shape[0]))

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def bands(self) -> int:
        return self.frames.shape[1]

    @property
    def n_pixels(self) -> int:
        return self.frames.shape[2]

    def slice(self, start: int, stop: int) -> "ImageSequence":
        return ImageSequence(self.frames[start:stop], self.noise_sigma[start:stop], self.timestamps[start:stop])


@dataclass(frozen=True)
class AugmentedState:
    """Bandwise second-order state: position and velocity."""

    position: np.ndarray
    velocity: np.ndarray = field(default=None)

    def __post_init__(self):
        position = _frozen(self.position, 1, "position")
        velocity = np.zeros_like(position) if self.velocity is None else self.velocity
        velocity = _frozen(velocity, 1, "velocity")
        if position.shape != velocity.shape:
            raise ValueError(f"position {position.shape} and velocity {velocity.shape} differ in length")
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "velocity", velocity)

    def as_array(self) -> np.ndarray:
        """(2, L) array, rows position and velocity."""
        return np.stack([self.position, self.velocity])

    @classmethod
    def from_array(cls, state: np.ndarray) -> "AugmentedState":
        return cls(state[0], state[1])
