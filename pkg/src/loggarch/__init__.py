"""Asymmetric log variance models: simulation, quasi likelihood fitting,
misspecification tests, and forecast comparison utilities."""

__version__ = "0.1.0"
