"""Polynomial dimensional decomposition surrogates with topology-derivative sensitivities."""

__version__ = "0.1.0"
