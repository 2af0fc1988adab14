"""One-step endmember dynamics networks: gated recurrent baseline, Euler and RK4 integrators.

All networks operate in float64 on batches of spectra shaped ``(batch, L)``
and expose the same one-step interface ``step(s, state) -> (s_next, state)``;
``state`` is the recurrent hidden state (``None`` for the integrators).
"""

import logging
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn
from pydantic import BaseModel, ConfigDict, Field

from app.model.types import Spectrum

logger = logging.getLogger(__name__)

DTYPE = torch.float64

RK4_ALPHA = (1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0)
RK4_BETA = (0.0, 0.5, 0.5, 1.0)

Architecture = Literal["lstm", "euler", "rk4"]
ARCHITECTURES: Tuple[str, ...] = ("lstm", "euler", "rk4")


class ArchitectureConfig(BaseModel):
    """Layer sizes shared by the three architectures."""

    model_config = ConfigDict(extra="forbid")

    hidden: List[int] = Field([100, 100], description="Hidden widths of the residual block F")
    h: float = Field(
        0.1, gt=0, description="Integration step of the Euler and RK4 schemes, close to the Scenario B frame spacing in hours"
    )
    lstm_input_width: int = Field(200, ge=1, description="Dense projection in front of the recurrent cell")
    lstm_hidden: int = Field(10, ge=1, description="Recurrent cell units")


def _xavier(layer: nn.Linear) -> None:
    nn.init.xavier_uniform_(layer.weight)
    nn.init.zeros_(layer.bias)


class MlpBlock(nn.Module):
    """Fully connected L -> hidden... -> L map, rectifier on hidden layers, linear output."""

    def __init__(self, bands: int, hidden: Sequence[int] = (100, 100)):
        super().__init__()
        if bands < 1 or any(w < 1 for w in hidden):
            raise ValueError(f"invalid layer sizes: bands={bands}, hidden={list(hidden)}")
        self.bands = bands
        self.hidden = tuple(int(w) for w in hidden)
        sizes = [bands, *self.hidden, bands]
        self.layers = nn.ModuleList(nn.Linear(a, b, dtype=DTYPE) for a, b in zip(sizes[:-1], sizes[1:]))
        for layer in self.layers:
            _xavier(layer)

    @property
    def layer_sizes(self) -> List[int]:
        return [self.bands, *self.hidden, self.bands]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for layer in self.layers[:-1]:
            x = torch.relu(layer(x))
        return self.layers[-1](x)


class DynamicsNet(nn.Module):
    """Common one-step interface."""

    architecture: str = ""

    def init_state(self, batch: int):
        return None

    def step(self, s: torch.Tensor, state=None):
        raise NotImplementedError

    def forward(self, s: torch.Tensor) -> torch.Tensor:
        return self.step(s)[0]

    @property
    def n_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def descriptor(self) -> dict:
        raise NotImplementedError


class EulerNet(DynamicsNet):
    """s_{t+1} = s_t + h F(s_t): a residual block read as an explicit Euler step."""

    architecture = "euler"

    def __init__(self, block: MlpBlock, h: float = 1.0):
        super().__init__()
        if h < 0:
            raise ValueError(f"step h must be >= 0, got {h}")
        self.block = block
        self.h = float(h)

    def step(self, s: torch.Tensor, state=None):
        return s + self.h * self.block(s), None

    def descriptor(self) -> dict:
        return {
            "architecture": self.architecture,
            "bands": self.block.bands,
            "hidden": list(self.block.hidden),
            "h": self.h,
        }


class RK4Net(DynamicsNet):
    """Classical four-stage Runge-Kutta step with stages k_i = h F(s + beta_i k_{i-1}).

    The coefficients are constants, not parameters.
    """

    architecture = "rk4"

    def __init__(self, block: MlpBlock, h: float = 1.0):
        super().__init__()
        if h < 0:
            raise ValueError(f"step h must be >= 0, got {h}")
        self.block = block
        self.h = float(h)

    def step(self, s: torch.Tensor, state=None):
        k = torch.zeros_like(s)
        out = s
        for alpha, beta in zip(RK4_ALPHA, RK4_BETA):
            k = self.h * self.block(s + beta * k)
            out = out + alpha * k
        return out, None

    def descriptor(self) -> dict:
        return {
            "architecture": self.architecture,
            "bands": self.block.bands,
            "hidden": list(self.block.hidden),
            "h": self.h,
            "alpha": list(RK4_ALPHA),
            "beta": list(RK4_BETA),
        }


class GatedRecurrentNet(DynamicsNet):
    """Dense projection, one LSTM cell, dense readout to the next spectrum."""

    architecture = "lstm"

    def __init__(self, bands: int, input_width: int = 200, hidden_units: int = 10):
        super().__init__()
        self.bands = bands
        self.input_width = input_width
        self.hidden_units = hidden_units
        self.project = nn.Linear(bands, input_width, dtype=DTYPE)
        self.cell = nn.LSTMCell(input_width, hidden_units, dtype=DTYPE)
        self.readout = nn.Linear(hidden_units, bands, dtype=DTYPE)
        _xavier(self.project)
        _xavier(self.readout)

    def init_state(self, batch: int):
        zeros = torch.zeros(batch, self.hidden_units, dtype=DTYPE)
        return zeros, zeros.clone()

    def step(self, s: torch.Tensor, state=None):
        if state is None:
            state = self.init_state(s.shape[0])
        hx, cx = self.cell(self.project(s), state)
        return self.readout(hx), (hx, cx)

    def descriptor(self) -> dict:
        return {
            "architecture": self.architecture,
            "bands": self.bands,
            "input_width": self.input_width,
            "hidden_units": self.hidden_units,
        }


def build_model(
    architecture: str,
    bands: int,
    config: Optional[ArchitectureConfig] = None,
    seed: Optional[int] = None,
) -> DynamicsNet:
    """Construct one of the three architectures with seeded initial weights."""
    config = config or ArchitectureConfig()
    if seed is not None:
        torch.manual_seed(seed)
    if architecture == "lstm":
        model = GatedRecurrentNet(bands, config.lstm_input_width, config.lstm_hidden)
    elif architecture == "euler":
        model = EulerNet(MlpBlock(bands, config.hidden), config.h)
    elif architecture == "rk4":
        model = RK4Net(MlpBlock(bands, config.hidden), config.h)
    else:
        raise ValueError(f"unknown architecture {architecture!r}; expected one of {ARCHITECTURES}")
    logger.debug(f"Built {architecture} with {model.n_parameters} parameters")
    return model


def model_from_descriptor(descriptor: dict) -> DynamicsNet:
    architecture = descriptor.get("architecture")
    bands = int(descriptor["bands"])
    if architecture == "lstm":
        return GatedRecurrentNet(bands, int(descriptor["input_width"]), int(descriptor["hidden_units"]))
    block = MlpBlock(bands, descriptor["hidden"])
    if architecture == "euler":
        return EulerNet(block, descriptor["h"])
    if architecture == "rk4":
        return RK4Net(block, descriptor["h"])
    raise ValueError(f"unknown architecture {architecture!r}")


def _as_batch(x, bands: int) -> Tuple[torch.Tensor, bool]:
    values = x.values if isinstance(x, Spectrum) else x
    tensor = torch.as_tensor(np.asarray(values, dtype=np.float64))
    single = tensor.ndim == 1
    if single:
        tensor = tensor[None]
    if tensor.ndim != 2 or tensor.shape[1] != bands:
        raise ValueError(f"expected spectra of length {bands}, got shape {tuple(tensor.shape)}")
    return tensor, single


def _apply(fn, x, bands: int) -> np.ndarray:
    batch, single = _as_batch(x, bands)
    with torch.no_grad():
        out = fn(batch).numpy()
    return out[0] if single else out


def mlp_forward(block: MlpBlock, x):
    """F(x) for a Spectrum or an (L,) / (batch, L) array."""
    out = _apply(block, x, block.bands)
    return Spectrum(out) if isinstance(x, Spectrum) else out


def euler_step(net: EulerNet, s) -> np.ndarray:
    return _apply(lambda b: net.step(b)[0], s, net.block.bands)


def rk4_step(net: RK4Net, s) -> np.ndarray:
    return _apply(lambda b: net.step(b)[0], s, net.block.bands)
