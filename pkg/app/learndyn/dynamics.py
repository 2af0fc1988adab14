"""A trained integrator network used as the flow of an assimilation problem."""

from typing import Optional

import numpy as np
import torch
from torch.autograd.functional import vjp

from app.learndyn.networks import DynamicsNet


class LearnedDynamics:
    """Wraps an Euler or RK4 network as a DynamicsModel over (1, L) position-only states."""

    is_linear = False
    state_components = 1

    def __init__(self, net: DynamicsNet):
        if net.architecture not in ("euler", "rk4"):
            raise ValueError(f"only stateless integrators can drive assimilation, got {net.architecture}")
        self.net = net
        self.bands = net.descriptor()["bands"]

    def _map(self, s: torch.Tensor) -> torch.Tensor:
        return self.net.step(s[None])[0][0]

    def _tensor(self, state: np.ndarray) -> torch.Tensor:
        state = np.asarray(state, dtype=np.float64)
        if state.shape != (1, self.bands):
            raise ValueError(f"learned dynamics expect a (1, {self.bands}) state, got {state.shape}")
        return torch.as_tensor(state[0])

    def step(self, state: np.ndarray) -> np.ndarray:
        with torch.no_grad():
            return self._map(self._tensor(state)).numpy()[None].copy()

    def jacobian_transpose_apply(self, state: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
        cot = torch.as_tensor(np.asarray(cotangent, dtype=np.float64).reshape(-1))
        _, grad = vjp(self._map, self._tensor(state), cot)
        return grad.detach().numpy()[None].copy()

    def lift(self, position: np.ndarray, velocity: Optional[np.ndarray] = None) -> np.ndarray:
        return np.asarray(position, dtype=np.float64)[None].copy()

    def position(self, state: np.ndarray) -> np.ndarray:
        return np.asarray(state)[0]

    def position_adjoint(self, cotangent: np.ndarray) -> np.ndarray:
        return np.asarray(cotangent, dtype=np.float64)[None].copy()

    @property
    def descriptor(self) -> dict:
        return {"name": "learned", **self.net.descriptor()}
