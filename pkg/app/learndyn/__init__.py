"""Learned endmember dynamics from pure-pixel sequences."""

from app.learndyn.networks import (
    ARCHITECTURES,
    ArchitectureConfig,
    DynamicsNet,
    EulerNet,
    GatedRecurrentNet,
    MlpBlock,
    RK4Net,
    build_model,
    euler_step,
    mlp_forward,
    rk4_step,
)
from app.learndyn.training import (
    TrainConfig,
    TrainResult,
    backprop,
    flat_parameters,
    loss,
    predict_test,
    rollout,
    set_flat_parameters,
    train,
)
from app.learndyn.checkpoint import load_checkpoint, save_checkpoint
from app.learndyn.dynamics import LearnedDynamics

__all__ = [
    "ARCHITECTURES",
    "ArchitectureConfig",
    "DynamicsNet",
    "EulerNet",
    "GatedRecurrentNet",
    "MlpBlock",
    "RK4Net",
    "build_model",
    "euler_step",
    "mlp_forward",
    "rk4_step",
    "TrainConfig",
    "TrainResult",
    "backprop",
    "flat_parameters",
    "loss",
    "predict_test",
    "rollout",
    "set_flat_parameters",
    "train",
    "load_checkpoint",
    "save_checkpoint",
    "LearnedDynamics",
]
