"""Experiment configuration files (JSON) and command-line overrides."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import orjson
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.assimilate.problem import AssimilationConfig
from app.errors import ConfigError
from app.learndyn.networks import Architecture, ArchitectureConfig
from app.learndyn.training import TrainConfig
from app.simulate.scenarios import ScenarioAConfig, ScenarioBConfig

logger = logging.getLogger(__name__)

DESK_SCALE = {"scenario_b": {"L": 50}, "training": {"epochs": 5000}}


class ExperimentConfig(BaseModel):
    """Everything one command needs; nested invariants are checked on load."""

    model_config = ConfigDict(extra="forbid")

    scenario: Literal["A", "B"] = Field("A", description="Dataset generated by simulate")
    scenario_a: ScenarioAConfig = Field(default_factory=ScenarioAConfig)
    scenario_b: ScenarioBConfig = Field(default_factory=ScenarioBConfig)
    assimilation: AssimilationConfig = Field(default_factory=AssimilationConfig)
    architecture: ArchitectureConfig = Field(default_factory=ArchitectureConfig)
    training: TrainConfig = Field(default_factory=TrainConfig)
    architectures: List[Architecture] = Field(["lstm", "euler", "rk4"], description="Networks trained by learn")
    oracle_abundances: bool = Field(False, description="Assimilate with the true abundances and frame-0 endmembers")
    vca_baseline: bool = Field(True, description="Also run the per-frame VCA baseline")
    output_dir: Optional[str] = Field(None, description="Default output directory")
    seed: int = Field(0, ge=0, description="Seed of the stochastic steps of a command (VCA projections)")

    @model_validator(mode="after")
    def _sync_train_frames(self) -> "ExperimentConfig":
        if "train_frames" not in self.training.model_fields_set:
            self.training = self.training.model_copy(update={"train_frames": self.scenario_b.train_frames})
        elif self.training.train_frames > self.scenario_b.T:
            raise ValueError(f"training.train_frames exceeds scenario_b.T ({self.scenario_b.T})")
        if not self.architectures:
            raise ValueError("architectures must name at least one network")
        return self

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def _section(raw: Dict[str, Any], name: str) -> Dict[str, Any]:
    section = raw.setdefault(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    return section


def load_experiment_config(
    path=None,
    seed: Optional[int] = None,
    desk_scale: bool = False,
    overrides: Optional[Dict[str, Any]] = None,
) -> ExperimentConfig:
    """
    Parse a JSON config file and apply command-line overrides.

    Args:
        path: Config file; defaults only when omitted
        seed: Replaces every seed in the config
        desk_scale: Reduced Scenario B size and epochs for fields the file leaves unset
        overrides: Top-level keys set after reading the file

    Raises:
        ConfigError: unreadable or malformed file
        pydantic.ValidationError: a field violates its constraints
    """
    raw: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            raw = orjson.loads(path.read_bytes())
        except FileNotFoundError as e:
            raise ConfigError(f"config file {path} not found") from e
        except orjson.JSONDecodeError as e:
            raise ConfigError(f"{path} is not valid JSON: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError(f"{path} must hold a JSON object")

    raw.update(overrides or {})
    if desk_scale:
        for section, values in DESK_SCALE.items():
            target = _section(raw, section)
            for key, value in values.items():
                target.setdefault(key, value)
    if seed is not None:
        raw["seed"] = seed
        _section(raw, "scenario_a")["rng_seed"] = seed
        _section(raw, "scenario_b")["rng_seed"] = seed
        _section(raw, "training")["seed"] = seed

    config = ExperimentConfig.model_validate(raw)
    logger.debug(f"Loaded experiment config (scenario {config.scenario}, desk_scale={desk_scale})")
    return config
