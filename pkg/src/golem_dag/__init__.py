"""Likelihood-based linear DAG structure learning with soft acyclicity penalties."""

__version__ = "0.1.0"
