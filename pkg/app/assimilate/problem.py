"""Assimilation problem definition, solver settings and results."""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.model.dynamics import DynamicsModel
from app.model.types import AbundanceMatrix, AugmentedState, ImageSequence, SpectralSeries

Mode = Literal["strong", "weak"]


class AssimilationConfig(BaseModel):
    """Solver settings for the variational assimilation."""

    model_config = ConfigDict(extra="forbid")

    lam: float = Field(1.0, ge=0, description="Model-error weight of the weak-constraint penalty")
    mode: Mode = Field("strong", description="strong: optimize the initial state; weak: optimize every frame")
    method: Literal["iterative", "closed_form"] = Field("iterative", description="Solver for the strong mode")
    max_iter: int = Field(10000, ge=0, description="Gradient-descent iteration cap")
    armijo_c: float = Field(1e-4, gt=0, lt=1, description="Sufficient-decrease constant")
    rel_tol: float = Field(1e-10, ge=0, description="Stop when the relative objective decrease falls below this")
    grad_tol: float = Field(1e-8, ge=0, description="Stop when the gradient norm falls below this")
    velocity_init: Literal["zero", "finite_difference"] = Field(
        "zero", description="Initial velocity guess: zero, or the difference of the first two VCA frames"
    )
    init_source: Literal["first", "mean"] = Field(
        "mean", description="Image the VCA + FCLS initialization runs on: frame 0, or the time average"
    )
    refine_iters: int = Field(
        3, ge=0, description="Passes re-estimating abundances and constant endmembers from the assimilated trajectory"
    )


@dataclass(frozen=True)
class AssimilationProblem:
    """
    Observed frames, abundances and a dynamical model for the variable endmembers.

    Endmembers outside ``variable`` stay at the columns of ``fixed_endmembers``
    for every frame. A strong-mode state has shape ``(J, k, L)`` (one
    dynamics state per variable endmember); a weak-mode state adds a leading
    time axis, ``(T, J, k, L)``.
    """

    observations: ImageSequence
    abundances: AbundanceMatrix
    dynamics: DynamicsModel
    variable: Tuple[int, ...] = (0,)
    fixed_endmembers: Optional[np.ndarray] = None
    lam: float = 1.0
    mode: Mode = "strong"

    def __post_init__(self):
        if not math.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lam must be a finite value >= 0, got {self.lam}")
        if self.mode not in ("strong", "weak"):
            raise ValueError(f"unknown assimilation mode {self.mode!r}")
        if self.abundances.n_pixels != self.observations.n_pixels:
            raise ValueError(
                f"abundances cover {self.abundances.n_pixels} pixels, frames have {self.observations.n_pixels}"
            )
        if self.observations.n_frames < 1:
            raise ValueError("assimilation needs at least one frame")
        P = self.abundances.n_endmembers
        variable = tuple(int(j) for j in self.variable)
        if not variable or len(set(variable)) != len(variable) or not all(0 <= j < P for j in variable):
            raise ValueError(f"variable endmembers {variable} must be distinct indices in [0, {P})")
        object.__setattr__(self, "variable", variable)
        if self.fixed_endmembers is not None:
            fixed = np.array(self.fixed_endmembers, dtype=np.float64, copy=True)
            if fixed.shape != (self.observations.bands, P):
                raise ValueError(f"fixed_endmembers must be ({self.observations.bands}, {P}), got {fixed.shape}")
            fixed.setflags(write=False)
            object.__setattr__(self, "fixed_endmembers", fixed)
        elif len(variable) < P:
            raise ValueError("fixed_endmembers are required when only some endmembers vary")

    @property
    def n_frames(self) -> int:
        return self.observations.n_frames

    @property
    def bands(self) -> int:
        return self.observations.bands

    @property
    def n_endmembers(self) -> int:
        return self.abundances.n_endmembers

    @property
    def state_shape(self) -> Tuple[int, ...]:
        strong = (len(self.variable), self.dynamics.state_components, self.bands)
        return strong if self.mode == "strong" else (self.n_frames,) + strong

    @cached_property
    def fixed_mask(self) -> np.ndarray:
        mask = np.ones(self.n_endmembers, dtype=bool)
        mask[list(self.variable)] = False
        return mask

    @cached_property
    def variable_abundances(self) -> np.ndarray:
        """A restricted to the variable endmembers (J x N)."""
        return self.abundances.entries[list(self.variable)]

    @cached_property
    def fixed_contribution(self) -> np.ndarray:
        """S_fixed A over the constant endmembers (L x N), identical in every frame."""
        if not self.fixed_mask.any():
            return np.zeros((self.bands, self.observations.n_pixels))
        return self.fixed_endmembers[:, self.fixed_mask] @ self.abundances.entries[self.fixed_mask]

    def assemble(self, positions: np.ndarray) -> SpectralSeries:
        """Full endmember series from (T, L, J) variable positions."""
        T = positions.shape[0]
        if self.fixed_endmembers is None:
            frames = np.zeros((T, self.bands, self.n_endmembers))
        else:
            frames = np.repeat(self.fixed_endmembers[None], T, axis=0)
        frames[:, :, list(self.variable)] = positions
        return SpectralSeries(frames, self.observations.timestamps[:T])


@dataclass(frozen=True)
class AssimilationResult:
    """Optimal initial state, the trajectory it generates and the solver trace."""

    initial_state: np.ndarray
    trajectory: SpectralSeries
    objective_history: np.ndarray
    converged: bool
    iterations: int = 0
    method: str = "iterative"
    states: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def objective(self) -> float:
        return float(self.objective_history[-1])

    def augmented_initial(self, dynamics: DynamicsModel) -> List[AugmentedState]:
        """Initial (position, velocity) of each variable endmember."""
        out = []
        for state in self.initial_state:
            velocity = state[1] if state.shape[0] > 1 else None
            out.append(AugmentedState(dynamics.position(state), velocity))
        return out
