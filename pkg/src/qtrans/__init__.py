"""Quasi-transitivity checks, functorial stratifications and p-adic pushforwards."""

__version__ = "0.1.0"
