"""Multitemporal hyperspectral unmixing under a state-space formulation."""

__version__ = "1.0.0"
