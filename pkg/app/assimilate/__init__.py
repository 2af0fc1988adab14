"""Variational assimilation of endmember trajectories under a known dynamical model."""

from app.assimilate.problem import AssimilationConfig, AssimilationProblem, AssimilationResult
from app.assimilate.variational import forward_propagate, forward_states, gradient, objective, solve
from app.assimilate.closed_form import solve_linear_closed_form
from app.assimilate.initialize import InitialGuess, initialize_from_vca
from app.assimilate.alternating import refine_constant_parts, solve_alternating

__all__ = [
    "AssimilationConfig",
    "AssimilationProblem",
    "AssimilationResult",
    "forward_propagate",
    "forward_states",
    "gradient",
    "objective",
    "solve",
    "solve_linear_closed_form",
    "InitialGuess",
    "initialize_from_vca",
    "refine_constant_parts",
    "solve_alternating",
]
