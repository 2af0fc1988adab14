"""Normal-equation solver for strong-constraint assimilation under linear dynamics."""

import logging

import numpy as np
import scipy.linalg as splin

from app.assimilate.problem import AssimilationProblem, AssimilationResult
from app.assimilate.variational import forward_states, objective, observed_positions
from app.errors import NumericalError

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e12


def solve_linear_closed_form(problem: AssimilationProblem) -> AssimilationResult:
    """
    Exact minimizer of the strong-constraint objective when Phi(x) = M x.

    The observed spectrum of variable endmember j at frame t is
    g_t^T X0[j] with g_t = (h^T M^t), so S_t A is linear in the initial state
    and the objective is a least-squares problem in Z (L x J*k):
    Z (sum_t B_t B_t^T) = sum_t (Y_t - C) B_t^T, shared by every band.

    Raises:
        ValueError: dynamics are not linear or the problem is in weak mode
        NumericalError: the normal matrix is singular or badly conditioned
    """
    dynamics = problem.dynamics
    if not getattr(dynamics, "is_linear", False):
        raise ValueError("closed-form assimilation needs linear dynamics")
    if problem.mode != "strong":
        raise ValueError("closed-form assimilation solves the strong-constraint problem only")

    J = len(problem.variable)
    k = dynamics.state_components
    A_var = problem.variable_abundances
    targets = problem.observations.frames - problem.fixed_contribution[None]

    gram = np.zeros((J * k, J * k))
    rhs = np.zeros((problem.bands, J * k))
    g = dynamics.observation.copy()
    for t in range(problem.n_frames):
        # rows indexed (j, c): g_t[c] * a_j
        B = np.kron(A_var, g[:, None])
        gram += B @ B.T
        rhs += targets[t] @ B.T
        g = g @ dynamics.transition

    condition = float(np.linalg.cond(gram))
    if not np.isfinite(condition) or condition > MAX_CONDITION:
        raise NumericalError(f"normal matrix is singular (condition number {condition:.3e})")
    Z = splin.solve(gram, rhs.T, assume_a="pos").T

    initial = Z.reshape(problem.bands, J, k).transpose(1, 2, 0).copy()
    states = forward_states(initial, dynamics, problem.n_frames)
    value = objective(problem, initial)
    logger.info(f"Closed-form assimilation: objective {value:.6e}, condition {condition:.3e}")
    return AssimilationResult(
        initial_state=initial,
        trajectory=problem.assemble(observed_positions(states, dynamics)),
        objective_history=np.array([value]),
        converged=True,
        iterations=0,
        method="closed_form",
        states=states,
    )
