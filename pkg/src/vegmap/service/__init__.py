"""HTTP service for the annotation workflow."""

from .app import create_app, open_project_app

__all__ = ["create_app", "open_project_app"]
