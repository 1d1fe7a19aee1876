"""Bayesian search, elastic-net and reset-qudit simulations."""

__version__ = "0.1.0"
