"""HTTP service layer."""

from .app import app

__all__ = ["app"]
