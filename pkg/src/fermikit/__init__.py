"""Finite-temperature free fermions: gap probabilities, correlations, limit laws and oracles."""

from __future__ import annotations

from typing import Any

__all__ = ["create_cli_app", "__version__"]

__version__ = "0.1.0"


def create_cli_app(*args: Any, **kwargs: Any):
    """Create the CLI Typer application lazily to avoid importing scipy up front."""

    from .cli import create_app

    return create_app(*args, **kwargs)
