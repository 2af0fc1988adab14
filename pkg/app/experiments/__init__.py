"""Command implementations behind the command-line interface."""

from app.experiments.config import ExperimentConfig, load_experiment_config
from app.experiments.simulation import cmd_simulate
from app.experiments.assimilation import cmd_assimilate
from app.experiments.learning import cmd_learn
from app.experiments.evaluation import cmd_evaluate

__all__ = [
    "ExperimentConfig",
    "load_experiment_config",
    "cmd_simulate",
    "cmd_assimilate",
    "cmd_learn",
    "cmd_evaluate",
]
