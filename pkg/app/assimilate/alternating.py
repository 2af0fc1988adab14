"""Alternating refinement of the abundances and constant endmembers around the assimilation."""

import logging
from dataclasses import replace
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as splin

from app.assimilate.closed_form import solve_linear_closed_form
from app.assimilate.problem import AssimilationConfig, AssimilationProblem, AssimilationResult
from app.assimilate.variational import InitialState, solve
from app.model.types import SpectralSeries
from app.unmix.fcls import fcls_abundances

logger = logging.getLogger(__name__)


def refine_constant_parts(
    problem: AssimilationProblem, trajectory: SpectralSeries, n_jobs: Optional[int] = None
) -> AssimilationProblem:
    """
    Re-estimate the abundances and the constant endmembers with the trajectory held fixed.

    Abundances come from FCLS on every frame stacked along the band axis.
    Constant endmembers come from least squares on the time-averaged
    residual left after removing the variable endmembers. Neither step can
    raise the data misfit of ``trajectory``.

    Args:
        problem: Current problem
        trajectory: Full (T, L, P) endmember series, e.g. ``result.trajectory``
        n_jobs: FCLS workers

    Returns:
        A new problem with updated abundances and fixed endmembers
    """
    frames = problem.observations.frames
    T, L, N = frames.shape
    series = trajectory.frames
    if series.shape != (T, L, problem.n_endmembers):
        raise ValueError(f"trajectory must be ({T}, {L}, {problem.n_endmembers}), got {series.shape}")

    abundances = fcls_abundances(frames.reshape(T * L, N), series.reshape(T * L, -1), n_jobs=n_jobs)
    if problem.fixed_endmembers is None:
        return replace(problem, abundances=abundances)

    fixed = np.array(problem.fixed_endmembers, copy=True)
    mask = problem.fixed_mask
    if mask.any():
        A = abundances.entries
        variable = list(problem.variable)
        residual = frames.mean(axis=0) - series[:, :, variable].mean(axis=0) @ A[variable]
        A_fixed = A[mask]
        if np.linalg.matrix_rank(A_fixed) < A_fixed.shape[0]:
            logger.warning("Constant-endmember abundances are rank deficient; keeping the constant endmembers")
        else:
            fixed[:, mask] = splin.lstsq(A_fixed.T, residual.T)[0].T
    return replace(problem, abundances=abundances, fixed_endmembers=fixed)


def _solve_once(problem: AssimilationProblem, guess: InitialState, config: AssimilationConfig) -> AssimilationResult:
    if config.method == "closed_form":
        return solve_linear_closed_form(problem)
    return solve(problem, guess, config)


def solve_alternating(
    problem: AssimilationProblem,
    initial_guess: InitialState,
    config: Optional[AssimilationConfig] = None,
    n_jobs: Optional[int] = None,
) -> Tuple[AssimilationProblem, AssimilationResult]:
    """
    Assimilate, then alternate ``config.refine_iters`` times between
    ``refine_constant_parts`` and a warm-started re-solve.

    Every pass minimizes the same objective over one block of unknowns, so
    the objective never increases from one pass to the next.

    Returns:
        (refined problem, result on the refined problem)
    """
    config = config or AssimilationConfig(lam=problem.lam, mode=problem.mode)
    result = _solve_once(problem, initial_guess, config)
    for iteration in range(config.refine_iters):
        previous = result.objective
        problem = refine_constant_parts(problem, result.trajectory, n_jobs=n_jobs)
        warm = result.states if problem.mode == "weak" else result.initial_state
        result = _solve_once(problem, warm, config)
        logger.info(f"Refinement pass {iteration + 1}: objective {previous:.6e} -> {result.objective:.6e}")
    return problem, result
