"""Variational assimilation: forward model, objective, adjoint gradient and descent."""

import logging
from typing import Optional, Sequence, Union

import numpy as np

from app.assimilate.problem import AssimilationConfig, AssimilationProblem, AssimilationResult
from app.errors import NumericalError
from app.model.dynamics import DynamicsModel
from app.model.types import AugmentedState, SpectralSeries

logger = logging.getLogger(__name__)

MAX_HALVINGS = 60

InitialState = Union[np.ndarray, AugmentedState, Sequence[AugmentedState]]


def as_initial_state(initial: InitialState, dynamics: DynamicsModel) -> np.ndarray:
    """Normalize an initial condition to a (J, k, L) array."""
    if isinstance(initial, AugmentedState):
        initial = [initial]
    if isinstance(initial, (list, tuple)) and initial and isinstance(initial[0], AugmentedState):
        return np.stack([dynamics.lift(s.position, s.velocity) for s in initial])
    state = np.asarray(initial, dtype=np.float64)
    if state.ndim == 2:
        state = state[None]
    if state.ndim != 3 or state.shape[1] != dynamics.state_components:
        raise ValueError(f"initial state must be (J, {dynamics.state_components}, L), got {state.shape}")
    return state


def forward_states(initial: np.ndarray, dynamics: DynamicsModel, T: int) -> np.ndarray:
    """Iterate the flow: (J, k, L) initial state to (T, J, k, L) states."""
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    states = np.empty((T,) + initial.shape)
    states[0] = initial
    for t in range(1, T):
        for j in range(initial.shape[0]):
            states[t, j] = dynamics.step(states[t - 1, j])
    return states


def observed_positions(states: np.ndarray, dynamics: DynamicsModel) -> np.ndarray:
    """(T, J, k, L) states to (T, L, J) observed spectra."""
    T, J = states.shape[:2]
    out = np.empty((T, states.shape[-1], J))
    for t in range(T):
        for j in range(J):
            out[t, :, j] = dynamics.position(states[t, j])
    return out


def forward_propagate(initial: InitialState, dynamics: DynamicsModel, T: int) -> SpectralSeries:
    """
    Trajectory generated by the dynamics from an initial condition.

    Args:
        initial: One AugmentedState per endmember, or a (J, k, L) state array
        dynamics: Flow over one frame interval
        T: Number of frames, T >= 1

    Returns:
        SpectralSeries (T, L, J) of observed positions
    """
    state = as_initial_state(initial, dynamics)
    return SpectralSeries(observed_positions(forward_states(state, dynamics, T), dynamics))


def _states(problem: AssimilationProblem, x: np.ndarray) -> np.ndarray:
    if x.shape != problem.state_shape:
        raise ValueError(f"{problem.mode}-mode state must have shape {problem.state_shape}, got {x.shape}")
    if problem.mode == "strong":
        return forward_states(x, problem.dynamics, problem.n_frames)
    return x


def _residuals(problem: AssimilationProblem, positions: np.ndarray) -> np.ndarray:
    """R_t = S_t A - Y_t, (T, L, N)."""
    modelled = np.einsum("tlj,jn->tln", positions, problem.variable_abundances)
    return modelled + problem.fixed_contribution[None] - problem.observations.frames


def _model_errors(problem: AssimilationProblem, states: np.ndarray) -> np.ndarray:
    """D_t = X_t - Phi(X_{t-1}) for t >= 1; D_0 = 0."""
    errors = np.zeros_like(states)
    for t in range(1, states.shape[0]):
        for j in range(states.shape[1]):
            errors[t, j] = states[t, j] - problem.dynamics.step(states[t - 1, j])
    return errors


def objective(problem: AssimilationProblem, x: np.ndarray) -> float:
    """
    Half the data misfit plus, in weak mode, half the weighted model error.

    In strong mode the trajectory is generated by the dynamics, so the model
    error term vanishes identically.
    """
    x = np.asarray(x, dtype=np.float64)
    states = _states(problem, x)
    residuals = _residuals(problem, observed_positions(states, problem.dynamics))
    value = 0.5 * float(np.sum(residuals**2))
    if problem.mode == "weak" and problem.lam > 0:
        value += 0.5 * problem.lam * float(np.sum(_model_errors(problem, states) ** 2))
    return value


def _position_cotangents(problem: AssimilationProblem, states: np.ndarray) -> np.ndarray:
    """Gradient of the data term w.r.t. each X_t through the observation row."""
    residuals = _residuals(problem, observed_positions(states, problem.dynamics))
    grad_pos = np.einsum("tln,jn->tjl", residuals, problem.variable_abundances)
    cot = np.empty_like(states)
    for t in range(states.shape[0]):
        for j in range(states.shape[1]):
            cot[t, j] = problem.dynamics.position_adjoint(grad_pos[t, j])
    return cot


def gradient(problem: AssimilationProblem, x: np.ndarray) -> np.ndarray:
    """
    Exact gradient of ``objective`` by the adjoint method.

    Strong mode sweeps backwards, accumulating the data cotangents through the
    transposed Jacobian of the flow. Weak mode differentiates each frame's
    state directly, coupling neighbours through the model-error term.
    """
    x = np.asarray(x, dtype=np.float64)
    states = _states(problem, x)
    cot = _position_cotangents(problem, states)
    dynamics = problem.dynamics
    T, J = states.shape[:2]

    if problem.mode == "strong":
        adj = cot[T - 1].copy()
        for t in range(T - 2, -1, -1):
            for j in range(J):
                adj[j] = cot[t, j] + dynamics.jacobian_transpose_apply(states[t, j], adj[j])
        return adj

    grad = cot
    if problem.lam > 0:
        errors = _model_errors(problem, states)
        grad = grad + problem.lam * errors
        for t in range(T - 1):
            for j in range(J):
                grad[t, j] -= problem.lam * dynamics.jacobian_transpose_apply(states[t, j], errors[t + 1, j])
    return grad


def _as_guess(problem: AssimilationProblem, initial_guess: InitialState) -> np.ndarray:
    if isinstance(initial_guess, np.ndarray) and initial_guess.ndim == 4:
        state = np.asarray(initial_guess, dtype=np.float64)
    else:
        state = as_initial_state(initial_guess, problem.dynamics)
    if problem.mode == "weak" and state.ndim == 3:
        state = forward_states(state, problem.dynamics, problem.n_frames)
    if state.shape != problem.state_shape:
        raise ValueError(f"initial guess must have shape {problem.state_shape}, got {state.shape}")
    return state.copy()


def _result(problem: AssimilationProblem, x: np.ndarray, history, converged: bool, iterations: int) -> AssimilationResult:
    states = _states(problem, x)
    return AssimilationResult(
        initial_state=states[0].copy(),
        trajectory=problem.assemble(observed_positions(states, problem.dynamics)),
        objective_history=np.asarray(history),
        converged=converged,
        iterations=iterations,
        method="iterative",
        states=states,
    )


def solve(
    problem: AssimilationProblem,
    initial_guess: InitialState,
    config: Optional[AssimilationConfig] = None,
) -> AssimilationResult:
    """
    Minimize the objective by gradient descent with a backtracking line search.

    The first trial step of each iteration is the Barzilai-Borwein step
    length; the Armijo condition (sufficient decrease with constant c, step
    halving) keeps every accepted iterate monotone.

    Args:
        problem: Assimilation problem (strong or weak mode)
        initial_guess: (J, k, L) initial state, AugmentedStates, or a full
            (T, J, k, L) trajectory in weak mode
        config: Solver caps and tolerances

    Returns:
        AssimilationResult for the best iterate

    Raises:
        ValueError: If config.mode or config.lam disagree with the problem
    """
    config = config or AssimilationConfig(lam=problem.lam, mode=problem.mode)
    if config.mode != problem.mode or config.lam != problem.lam:
        raise ValueError(
            f"config (mode={config.mode}, lam={config.lam}) does not match "
            f"problem (mode={problem.mode}, lam={problem.lam})"
        )
    x = _as_guess(problem, initial_guess)
    f = objective(problem, x)
    if not np.isfinite(f):
        raise NumericalError(f"objective is not finite at the initial guess ({f})")

    history = [f]
    converged = False
    step = None
    x_prev = g_prev = None
    iterations = 0
    for iterations in range(1, config.max_iter + 1):
        g = gradient(problem, x)
        g_sq = float(np.sum(g**2))
        if np.sqrt(g_sq) < config.grad_tol or f == 0.0:
            converged = True
            iterations -= 1
            break

        if x_prev is not None:
            s = x - x_prev
            y = g - g_prev
            sy = float(np.sum(s * y))
            if sy > 0:
                step = float(np.sum(s * s)) / sy
        if step is None:
            step = 1.0 / np.sqrt(g_sq)

        trial = step
        for _ in range(MAX_HALVINGS):
            candidate = x - trial * g
            f_new = objective(problem, candidate)
            if np.isfinite(f_new) and f_new <= f - config.armijo_c * trial * g_sq:
                break
            trial *= 0.5
        else:
            logger.warning(f"Line search failed at iteration {iterations}; keeping the current iterate")
            iterations -= 1
            break

        x_prev, g_prev = x, g
        x = candidate
        decrease = f - f_new
        f = f_new
        history.append(f)
        step = trial
        if iterations % 500 == 0:
            logger.debug(f"Iteration {iterations}: objective {f:.6e}, |grad| {np.sqrt(g_sq):.3e}")
        if decrease <= config.rel_tol * max(abs(history[-2]), np.finfo(float).tiny):
            converged = True
            break
    else:
        if config.max_iter > 0:
            logger.warning(f"Assimilation stopped at the iteration cap ({config.max_iter})")

    logger.info(
        f"Assimilation ({problem.mode}) finished after {iterations} iterations: "
        f"objective {f:.6e}, converged={converged}"
    )
    return _result(problem, x, history, converged, iterations)
