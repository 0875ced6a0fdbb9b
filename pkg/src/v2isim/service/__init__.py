"""HTTP service exposing scenario runs and sweeps."""

from .app import create_app

__all__ = ["create_app"]
