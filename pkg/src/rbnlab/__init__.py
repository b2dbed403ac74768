"""Simulation and evolutionary training of random Boolean networks."""

__version__ = "0.1.0"
