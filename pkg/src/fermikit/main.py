#!/usr/bin/env python3
"""Global entry point for fermikit that handles config path resolution."""

import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import typer

from .cli import EXIT_FAILED
from .cli import main as cli_main

CONFIG_ENV = "FERMIKIT_CONFIG"


def find_config_file() -> Optional[Path]:
    """Find the config file in the standard locations; None means built-in defaults."""

    # List of possible config locations (in order of preference)
    possible_paths = [
        # Project-specific config (highest priority)
        Path.cwd() / ".fermikit" / "config.json",
        Path.cwd() / ".fermikit" / "config.yaml",
        # Current working directory
        Path.cwd() / "fermikit.json",
        Path.cwd() / "config" / "fermikit.json",
        # Environment variable
        Path(os.getenv(CONFIG_ENV, "")) if os.getenv(CONFIG_ENV) else None,
        # User home directory (fallback)
        Path.home() / ".config" / "fermikit" / "config.json",
    ]

    for config_path in possible_paths:
        if config_path and config_path.is_file():
            return config_path

    return None


def with_config(argv: Sequence[str]) -> List[str]:
    """Prepend --config when the arguments do not name one and a file is found."""
    args = list(argv)
    if "--config" in args or "-c" in args:
        return args
    config_path = find_config_file()
    if config_path is None:
        return args
    return ["--config", str(config_path), *args]


def main(argv: Optional[Sequence[str]] = None) -> None:
    """Main entry point that finds a config file and delegates to the CLI."""
    args = with_config(sys.argv[1:] if argv is None else argv)
    try:
        cli_main(args)
    except SystemExit:
        raise
    except Exception as e:
        typer.echo(f"CLI error: {str(e)}", err=True)
        sys.exit(EXIT_FAILED)


if __name__ == "__main__":
    main()
