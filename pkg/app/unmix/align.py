"""Cross-frame endmember alignment by optimal assignment."""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from app.model.metrics import spectral_angle_matrix
from app.model.types import SpectralSeries

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AlignmentMap:
    """Per-frame permutations: aligned column i of frame t is original column permutations[t, i]."""

    permutations: np.ndarray

    def __post_init__(self):
        perms = np.array(self.permutations, dtype=int, copy=True)
        if perms.ndim != 2:
            raise ValueError(f"permutations must be (T, P), got {perms.shape}")
        expected = np.arange(perms.shape[1])
        for t, perm in enumerate(perms):
            if not np.array_equal(np.sort(perm), expected):
                raise ValueError(f"frame {t} entry {perm.tolist()} is not a permutation")
        perms.setflags(write=False)
        object.__setattr__(self, "permutations", perms)

    def is_identity(self) -> bool:
        return bool(np.all(self.permutations == np.arange(self.permutations.shape[1])))


def match_to_reference(S: np.ndarray, reference: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Reorder the columns of S to best match the reference columns.

    Cost is the spectral angle; the assignment is solved exactly (Hungarian).

    Returns:
        (S with permuted columns, permutation such that result[:, i] = S[:, perm[i]])
    """
    S = np.asarray(S, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if S.shape != reference.shape:
        raise ValueError(f"cannot match {S.shape} endmembers to a {reference.shape} reference")
    cost = spectral_angle_matrix(reference, S)
    rows, cols = linear_sum_assignment(cost)
    perm = cols[np.argsort(rows)]
    return S[:, perm], perm


def align_endmembers(series: SpectralSeries) -> Tuple[SpectralSeries, AlignmentMap]:
    """
    Align endmember columns frame to frame.

    Frame 0 is the reference; every later frame is matched to the previously
    aligned frame.
    """
    frames = series.frames
    P = series.n_endmembers
    aligned = [frames[0]] if series.n_frames else []
    perms = [np.arange(P)] if series.n_frames else []
    for t in range(1, series.n_frames):
        matched, perm = match_to_reference(frames[t], aligned[-1])
        aligned.append(matched)
        perms.append(perm)
    changed = sum(int(not np.array_equal(p, np.arange(P))) for p in perms)
    logger.debug(f"Aligned {series.n_frames} frames, {changed} permuted")
    aligned_frames = np.stack(aligned) if aligned else frames
    return SpectralSeries(aligned_frames, series.timestamps), AlignmentMap(
        np.stack(perms) if perms else np.zeros((0, P), dtype=int)
    )
