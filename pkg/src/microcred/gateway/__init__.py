"""HTTP gateway: the platform's system boundary for portals and verifiers."""

from .app import create_app

__all__ = ["create_app"]
