"""Teacher-forced training with ADAM, free-running rollouts and test prediction."""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, Field

from app.config import settings
from app.errors import NumericalError
from app.learndyn.networks import DTYPE, DynamicsNet
from app.model.types import SpectralSeries

logger = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    """ADAM settings; one epoch is one full-batch pass over all endmember trajectories."""

    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(50000, ge=1, description="Number of full-batch ADAM updates")
    lr: float = Field(1e-3, ge=0, description="ADAM step size")
    beta1: float = Field(0.9, ge=0, lt=1, description="First-moment decay")
    beta2: float = Field(0.999, ge=0, lt=1, description="Second-moment decay")
    eps: float = Field(1e-8, gt=0, description="ADAM denominator offset")
    seed: int = Field(0, ge=0, description="Seed for weight initialization")
    train_frames: int = Field(20, ge=2, description="Leading frames used for training")


@dataclass
class TrainResult:
    model: DynamicsNet
    loss_history: np.ndarray

    @property
    def final_loss(self) -> float:
        return float(self.loss_history[-1])


def trajectories(series: SpectralSeries) -> torch.Tensor:
    """(T, L, P) series to a (P, T, L) batch, one trajectory per endmember."""
    return torch.as_tensor(np.ascontiguousarray(series.frames.transpose(2, 0, 1)), dtype=DTYPE)


def teacher_forced(model: DynamicsNet, batch: torch.Tensor) -> torch.Tensor:
    """One-step predictions of frames 1..T-1, each from the true previous frame."""
    state = model.init_state(batch.shape[0])
    preds = []
    for t in range(batch.shape[1] - 1):
        s_next, state = model.step(batch[:, t], state)
        preds.append(s_next)
    return torch.stack(preds, dim=1)


def _loss(model: DynamicsNet, batch: torch.Tensor) -> torch.Tensor:
    if batch.shape[1] < 2:
        raise ValueError(f"loss needs at least two frames, got {batch.shape[1]}")
    return torch.sum((teacher_forced(model, batch) - batch[:, 1:]) ** 2)


def loss(model: DynamicsNet, series: SpectralSeries) -> float:
    """Sum over endmembers and frames of squared one-step prediction errors."""
    _check_bands(model, series)
    with torch.no_grad():
        return float(_loss(model, trajectories(series)))


def backprop(model: DynamicsNet, series: SpectralSeries) -> np.ndarray:
    """Gradient of ``loss`` w.r.t. every parameter, flattened in ``model.parameters()`` order."""
    _check_bands(model, series)
    params = list(model.parameters())
    value = _loss(model, trajectories(series))
    grads = torch.autograd.grad(value, params, allow_unused=True)
    flat = [
        torch.zeros_like(p).reshape(-1) if g is None else g.reshape(-1)
        for p, g in zip(params, grads)
    ]
    return torch.cat(flat).detach().numpy()


def flat_parameters(model: DynamicsNet) -> np.ndarray:
    return torch.nn.utils.parameters_to_vector(model.parameters()).detach().numpy().copy()


def set_flat_parameters(model: DynamicsNet, values: np.ndarray) -> None:
    vector = torch.as_tensor(np.asarray(values, dtype=np.float64))
    torch.nn.utils.vector_to_parameters(vector, model.parameters())


def _check_bands(model: DynamicsNet, series: SpectralSeries) -> None:
    bands = model.descriptor()["bands"]
    if series.bands != bands:
        raise ValueError(f"model expects {bands} bands, series has {series.bands}")


def train(model: DynamicsNet, series: SpectralSeries, config: Optional[TrainConfig] = None) -> TrainResult:
    """
    Fit the model on the first ``train_frames`` frames of every trajectory.

    Args:
        model: Network to train in place
        series: Pure-pixel series (T, L, P)
        config: Optimizer settings

    Returns:
        TrainResult with the trained model and the per-epoch loss

    Raises:
        NumericalError: the loss became non-finite (reports the epoch)
    """
    config = config or TrainConfig()
    if series.n_frames < config.train_frames:
        raise ValueError(f"series has {series.n_frames} frames, training needs {config.train_frames}")
    _check_bands(model, series)
    torch.set_num_threads(settings.torch_threads)
    torch.manual_seed(config.seed)

    batch = trajectories(series.slice(0, config.train_frames))
    optimizer = torch.optim.Adam(
        model.parameters(), lr=config.lr, betas=(config.beta1, config.beta2), eps=config.eps
    )
    history = np.empty(config.epochs)
    for epoch in range(config.epochs):
        optimizer.zero_grad()
        value = _loss(model, batch)
        if not torch.isfinite(value):
            raise NumericalError(f"{model.architecture} training diverged at epoch {epoch} (loss {float(value)})")
        value.backward()
        optimizer.step()
        history[epoch] = float(value)
        if epoch % settings.log_every == 0:
            logger.debug(f"{model.architecture} epoch {epoch}: loss {history[epoch]:.6e}")

    logger.info(
        f"Trained {model.architecture} ({model.n_parameters} parameters) for {config.epochs} epochs: "
        f"loss {history[0]:.4e} -> {history[-1]:.4e}"
    )
    return TrainResult(model, history)


def rollout(model: DynamicsNet, s0, n_steps: int) -> np.ndarray:
    """
    Free-running iteration of the one-step map.

    Args:
        model: Any of the three networks
        s0: (L,) spectrum or (batch, L) spectra
        n_steps: Number of steps, >= 0

    Returns:
        Array of n_steps + 1 states, starting with s0
    """
    if n_steps < 0:
        raise ValueError(f"n_steps must be >= 0, got {n_steps}")
    s = torch.as_tensor(np.asarray(s0, dtype=np.float64))
    single = s.ndim == 1
    if single:
        s = s[None]
    states = [s]
    state = model.init_state(s.shape[0])
    with torch.no_grad():
        for _ in range(n_steps):
            s, state = model.step(s, state)
            states.append(s)
    out = torch.stack(states).numpy()
    return out[:, 0] if single else out


def predict_test(
    model: DynamicsNet,
    s_last,
    n_test: int,
    history: Optional[SpectralSeries] = None,
    timestamps: Optional[np.ndarray] = None,
) -> SpectralSeries:
    """
    Predict the frames following the last training sample without teacher forcing.

    Args:
        model: Trained network
        s_last: Endmembers (L x P) at the last training frame
        n_test: Number of frames to predict
        history: Training frames ending at s_last; warms up the recurrent state
        timestamps: Times of the predicted frames

    Returns:
        SpectralSeries (n_test, L, P)
    """
    if n_test < 0:
        raise ValueError(f"n_test must be >= 0, got {n_test}")
    s = torch.as_tensor(np.asarray(s_last, dtype=np.float64).T.copy())
    state = model.init_state(s.shape[0])
    preds = []
    with torch.no_grad():
        if history is not None:
            warmup = trajectories(history)
            for t in range(warmup.shape[1] - 1):
                _, state = model.step(warmup[:, t], state)
        for _ in range(n_test):
            s, state = model.step(s, state)
            preds.append(s.numpy().T)
    bands = s.shape[1]
    frames = np.stack(preds) if preds else np.zeros((0, bands, s.shape[0]))
    return SpectralSeries(frames, timestamps)
