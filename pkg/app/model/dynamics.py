"""Discrete flow operators for endmember dynamics.

A state is a ``(k, L)`` array: ``k`` bandwise components (position, velocity,
offset, ...) over ``L`` bands. One ``step`` spans one frame interval.
"""

import logging
import math
from typing import Optional, Protocol, runtime_checkable

import numpy as np

from app.model.types import AugmentedState

logger = logging.getLogger(__name__)


@runtime_checkable
class DynamicsModel(Protocol):
    """The flow Phi over one frame, its adjoint and the state's observation layout."""

    state_components: int

    def step(self, state: np.ndarray) -> np.ndarray:
        ...

    def jacobian_transpose_apply(self, state: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
        ...

    def lift(self, position: np.ndarray, velocity: Optional[np.ndarray] = None) -> np.ndarray:
        ...

    def position(self, state: np.ndarray) -> np.ndarray:
        ...

    def position_adjoint(self, cotangent: np.ndarray) -> np.ndarray:
        ...

    @property
    def descriptor(self) -> dict:
        ...


def second_order_propagator(beta: float, dt: float) -> np.ndarray:
    """exp(dt * [[0, 1], [beta, 0]]) in closed form."""
    if not (math.isfinite(beta) and math.isfinite(dt)):
        raise ValueError(f"beta and dt must be finite, got beta={beta}, dt={dt}")
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    if beta < 0:
        omega = math.sqrt(-beta)
        c, s = math.cos(omega * dt), math.sin(omega * dt)
        return np.array([[c, s / omega], [-omega * s, c]])
    if beta == 0:
        return np.array([[1.0, dt], [0.0, 1.0]])
    omega = math.sqrt(beta)
    c, s = math.cosh(omega * dt), math.sinh(omega * dt)
    return np.array([[c, s / omega], [omega * s, c]])


def linear_second_order_step(state: AugmentedState, beta: float, dt: float) -> AugmentedState:
    """Advance [position; velocity] by dt under s'' = beta * s, bandwise."""
    prop = second_order_propagator(beta, dt)
    out = prop @ state.as_array()
    if not np.all(np.isfinite(out)):
        raise ValueError(f"non-finite state after step (beta={beta}, dt={dt})")
    return AugmentedState.from_array(out)


class LinearDynamics:
    """Phi(x) = M x applied bandwise, observed position = h^T x."""

    is_linear = True

    def __init__(self, transition: np.ndarray, observation: np.ndarray, name: str = "linear"):
        transition = np.asarray(transition, dtype=np.float64)
        observation = np.asarray(observation, dtype=np.float64)
        if transition.ndim != 2 or transition.shape[0] != transition.shape[1]:
            raise ValueError(f"transition must be square, got {transition.shape}")
        if observation.shape != (transition.shape[0],):
            raise ValueError(f"observation row must have length {transition.shape[0]}")
        self.transition = transition
        self.observation = observation
        self.state_components = transition.shape[0]
        self.name = name

    def _check(self, state: np.ndarray) -> np.ndarray:
        state = np.asarray(state, dtype=np.float64)
        if state.ndim != 2 or state.shape[0] != self.state_components:
            raise ValueError(f"{self.name} expects a ({self.state_components}, L) state, got {state.shape}")
        if not np.all(np.isfinite(state)):
            raise ValueError(f"{self.name} received a non-finite state")
        return state

    def step(self, state: np.ndarray) -> np.ndarray:
        return self.transition @ self._check(state)

    def jacobian_transpose_apply(self, state: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
        return self.transition.T @ np.asarray(cotangent, dtype=np.float64)

    def power(self, n: int) -> np.ndarray:
        return np.linalg.matrix_power(self.transition, n)

    def lift(self, position: np.ndarray, velocity: Optional[np.ndarray] = None) -> np.ndarray:
        position = np.asarray(position, dtype=np.float64)
        state = np.zeros((self.state_components, position.shape[0]))
        state[int(np.argmax(self.observation != 0))] = position
        return state

    def position(self, state: np.ndarray) -> np.ndarray:
        return self.observation @ state

    def position_adjoint(self, cotangent: np.ndarray) -> np.ndarray:
        return np.outer(self.observation, cotangent)

    @property
    def descriptor(self) -> dict:
        return {
            "name": self.name,
            "transition": self.transition.tolist(),
            "observation": self.observation.tolist(),
        }


class IdentityDynamics(LinearDynamics):
    """Phi = id: endmembers constant in time."""

    def __init__(self):
        super().__init__(np.eye(1), np.ones(1), name="identity")


class LinearSecondOrderDynamics(LinearDynamics):
    """Bandwise oscillator s'' = beta * s with the state augmented by the velocity.

    With ``estimate_offset`` the oscillation happens around an unknown constant
    level carried as a third component: state rows are (deviation, velocity,
    offset) and the observed spectrum is deviation + offset.
    """

    def __init__(self, beta: float = -0.1, dt: float = 1.0, estimate_offset: bool = False):
        prop = second_order_propagator(beta, dt)
        if estimate_offset:
            transition = np.eye(3)
            transition[:2, :2] = prop
            observation = np.array([1.0, 0.0, 1.0])
        else:
            transition = prop
            observation = np.array([1.0, 0.0])
        super().__init__(transition, observation, name="linear_second_order")
        self.beta = float(beta)
        self.dt = float(dt)
        self.estimate_offset = estimate_offset

    def lift(self, position: np.ndarray, velocity: Optional[np.ndarray] = None) -> np.ndarray:
        position = np.asarray(position, dtype=np.float64)
        velocity = np.zeros_like(position) if velocity is None else np.asarray(velocity, dtype=np.float64)
        if self.estimate_offset:
            return np.stack([np.zeros_like(position), velocity, position])
        return np.stack([position, velocity])

    @property
    def descriptor(self) -> dict:
        return {
            **super().descriptor,
            "beta": self.beta,
            "dt": self.dt,
            "estimate_offset": self.estimate_offset,
        }


def adjoint_mismatch(
    model: DynamicsModel,
    state: np.ndarray,
    u: np.ndarray,
    v: np.ndarray,
    eps: float = 1e-6,
) -> float:
    """Relative gap between <u, J v> (central differences) and <J^T u, v>."""
    jv = (model.step(state + eps * v) - model.step(state - eps * v)) / (2.0 * eps)
    lhs = float(np.sum(u * jv))
    rhs = float(np.sum(model.jacobian_transpose_apply(state, u) * v))
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return abs(lhs - rhs) / scale
