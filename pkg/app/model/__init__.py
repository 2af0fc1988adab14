"""Domain types and dynamical-system interfaces."""

from app.model.types import (
    AbundanceMatrix,
    AugmentedState,
    EndmemberMatrix,
    ImageSequence,
    SpectralSeries,
    Spectrum,
)
from app.model.dynamics import (
    DynamicsModel,
    IdentityDynamics,
    LinearDynamics,
    LinearSecondOrderDynamics,
    adjoint_mismatch,
    linear_second_order_step,
    second_order_propagator,
)
from app.model.metrics import spectral_angle, spectral_rmse

__all__ = [
    "AbundanceMatrix",
    "AugmentedState",
    "EndmemberMatrix",
    "ImageSequence",
    "SpectralSeries",
    "Spectrum",
    "DynamicsModel",
    "IdentityDynamics",
    "LinearDynamics",
    "LinearSecondOrderDynamics",
    "adjoint_mismatch",
    "linear_second_order_step",
    "second_order_propagator",
    "spectral_angle",
    "spectral_rmse",
]
