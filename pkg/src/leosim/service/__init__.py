"""HTTP facade over the simulator: run experiments, query analytic laws."""

from .app import create_app

__all__ = ["create_app"]
