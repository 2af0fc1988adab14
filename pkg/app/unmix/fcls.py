"""Fully constrained least squares abundances.

Per pixel: min ||y - S a||^2 subject to a >= 0 and 1^T a = 1, solved by a
primal active-set method on the Gram matrix. Each pixel is independent, so
pixels are optionally spread across joblib workers.
"""

import logging
from typing import Optional

import numpy as np
from joblib import Parallel, delayed

from app.config import settings
from app.model.types import AbundanceMatrix, EndmemberMatrix

logger = logging.getLogger(__name__)

KKT_TOL = 1e-10
ZERO_TOL = 1e-14


def _equality_qp(G_ff: np.ndarray, b_f: np.ndarray) -> np.ndarray:
    """Minimiser of 1/2 a^T G a - b^T a on {1^T a = 1} restricted to the free set."""
    k = G_ff.shape[0]
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = G_ff
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.append(b_f, 1.0)
    return np.linalg.solve(kkt, rhs)[:k]


def fcls_pixel(G: np.ndarray, b: np.ndarray, max_iter: Optional[int] = None) -> np.ndarray:
    """
    Active-set FCLS for one pixel given G = S^T S and b = S^T y.

    Starts from the best simplex vertex, so every iterate is feasible.
    """
    P = G.shape[0]
    if P == 1:
        return np.ones(1)
    max_iter = 10 * P if max_iter is None else max_iter

    vertex_cost = 0.5 * np.diag(G) - b
    start = int(np.argmin(vertex_cost))
    a = np.zeros(P)
    a[start] = 1.0
    free = np.zeros(P, dtype=bool)
    free[start] = True

    for _ in range(max_iter):
        idx = np.flatnonzero(free)
        z = _equality_qp(G[np.ix_(idx, idx)], b[idx])
        if np.all(z >= -ZERO_TOL):
            a = np.zeros(P)
            a[idx] = np.maximum(z, 0.0)
            grad = G @ a - b
            nu = -float(np.mean(grad[idx]))
            multipliers = grad + nu
            multipliers[free] = np.inf
            j = int(np.argmin(multipliers))
            if multipliers[j] >= -KKT_TOL * max(1.0, float(np.abs(b).max())):
                break
            free[j] = True
        else:
            direction = z - a[idx]
            blocking = direction < 0
            ratios = np.full(idx.shape, np.inf)
            ratios[blocking] = a[idx][blocking] / -direction[blocking]
            alpha = min(1.0, float(ratios.min()))
            a[idx] = a[idx] + alpha * direction
            leaving = idx[a[idx] <= ZERO_TOL]
            a[leaving] = 0.0
            free[leaving] = False
            if not free.any():
                keep = int(idx[np.argmax(a[idx])])
                free[keep] = True
    else:
        logger.warning(f"FCLS reached the iteration cap ({max_iter}); returning the last feasible iterate")

    a = np.maximum(a, 0.0)
    return a / a.sum()


def _solve_block(G: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.stack([fcls_pixel(G, B[:, n]) for n in range(B.shape[1])], axis=1)


def fcls_abundances(frame: np.ndarray, S, n_jobs: Optional[int] = None) -> AbundanceMatrix:
    """
    Fully constrained abundances of every pixel of an L x N frame.

    Args:
        frame: Observations, one pixel per column
        S: EndmemberMatrix or L x P array with full column rank
        n_jobs: joblib workers (defaults to settings.n_jobs)

    Returns:
        AbundanceMatrix (P x N)
    """
    S = S.columns if isinstance(S, EndmemberMatrix) else np.asarray(S, dtype=np.float64)
    Y = np.asarray(frame, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if S.ndim != 2 or Y.shape[0] != S.shape[0]:
        raise ValueError(f"frame has {Y.shape[0]} bands but S is {S.shape}")
    P = S.shape[1]
    if np.linalg.matrix_rank(S) < P:
        raise ValueError(f"endmember matrix is rank deficient (rank < P={P})")

    G = S.T @ S
    B = S.T @ Y
    n_jobs = settings.n_jobs if n_jobs is None else n_jobs
    if n_jobs <= 1 or Y.shape[1] < 2 * n_jobs:
        entries = _solve_block(G, B)
    else:
        blocks = np.array_split(np.arange(Y.shape[1]), n_jobs)
        parts = Parallel(n_jobs=n_jobs)(delayed(_solve_block)(G, B[:, block]) for block in blocks)
        entries = np.concatenate(parts, axis=1)
    return AbundanceMatrix(entries)
