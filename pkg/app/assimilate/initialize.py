"""Initial guesses for the assimilation from a VCA + FCLS pass."""

import logging
from dataclasses import dataclass
from typing import Literal, Optional, Sequence, Tuple

import numpy as np

from app.model.dynamics import DynamicsModel
from app.model.types import AbundanceMatrix, EndmemberMatrix, ImageSequence
from app.unmix.align import match_to_reference
from app.unmix.fcls import fcls_abundances
from app.unmix.vca import vca_extract

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InitialGuess:
    """Endmember positions (L x P) and velocities (L x P) at frame 0."""

    endmembers: EndmemberMatrix
    velocities: np.ndarray

    def permuted(self, order) -> "InitialGuess":
        order = np.asarray(order)
        return InitialGuess(EndmemberMatrix(self.endmembers.columns[:, order]), self.velocities[:, order])

    def state(self, dynamics: DynamicsModel, variable: Sequence[int]) -> np.ndarray:
        """(J, k, L) dynamics state of the listed endmembers."""
        S = self.endmembers.columns
        return np.stack([dynamics.lift(S[:, j], self.velocities[:, j]) for j in variable])


def initialize_from_vca(
    observations: ImageSequence,
    P: int,
    frame0_only: bool = True,
    rng: Optional[np.random.Generator] = None,
    n_jobs: Optional[int] = None,
    source: Literal["first", "mean"] = "first",
) -> Tuple[AbundanceMatrix, InitialGuess]:
    """
    Crude endmembers by VCA and abundances by FCLS.

    With ``source="mean"`` both run on the time-averaged image instead of the
    first frame. Abundances are constant in time, so the average keeps the
    mixing structure while the noise drops by sqrt(T).

    Args:
        observations: Image sequence
        P: Number of endmembers
        frame0_only: Zero initial velocity when True; otherwise the velocity
            is the difference between the (matched) VCA endmembers of frames
            1 and 0 divided by the frame interval
        rng: Generator for the VCA projections
        n_jobs: FCLS workers
        source: "first" for frame 0, "mean" for the time average

    Returns:
        (abundances, initial guess)
    """
    if source not in ("first", "mean"):
        raise ValueError(f"unknown initialization source {source!r}")
    rng = np.random.default_rng(0) if rng is None else rng
    image = observations.frames[0] if source == "first" else observations.frames.mean(axis=0)
    S0 = vca_extract(image, P, rng)
    abundances = fcls_abundances(image, S0, n_jobs=n_jobs)

    velocities = np.zeros_like(S0.columns)
    if not frame0_only:
        if observations.n_frames < 2:
            raise ValueError("a finite-difference velocity needs at least two frames")
        first = S0.columns
        if source == "mean":
            first, _ = match_to_reference(vca_extract(observations.frames[0], P, rng).columns, S0.columns)
        S1_matched, _ = match_to_reference(vca_extract(observations.frames[1], P, rng).columns, S0.columns)
        dt = float(observations.timestamps[1] - observations.timestamps[0])
        velocities = (S1_matched - first) / dt

    logger.info(
        f"VCA initialization on the {'first frame' if source == 'first' else 'time average'}: "
        f"{P} endmembers, velocity from {'zero' if frame0_only else 'frames 0-1'}"
    )
    return abundances, InitialGuess(S0, velocities)
