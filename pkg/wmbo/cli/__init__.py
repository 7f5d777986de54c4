"""Command handlers and artifact writers behind `python -m wmbo.main`."""

from wmbo.cli.handlers import CommandHandlers

__all__ = ["CommandHandlers"]
