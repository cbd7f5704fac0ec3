"""Configuration loading for the fermikit CLI and library defaults."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional
import json
import os

import yaml

from .errors import ConfigError

THREADS_ENV = "FERMIKIT_THREADS"


@dataclass
class ContourSettings:
    """Trapezoid rule on the z-circle."""

    nodes: int = 128
    max_nodes: int = 1024
    tol: float = 1e-10


@dataclass
class FredholmSettings:
    order: Optional[int] = None  # None: chosen from interval length and kernel bandwidth
    max_order: int = 512
    kernel_tol: float = 1e-15
    adaptive_start: int = 24
    adaptive_doublings: int = 4


@dataclass
class SamplingSettings:
    seed: int = 20240607
    draws: int = 100_000
    energy_cutoff: int = 40


@dataclass
class OutputSettings:
    format: str = "csv"  # csv or json
    digits: int = 17


def _build(cls, data: Dict[str, Any], section: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"Unknown keys in '{section}': {', '.join(sorted(unknown))}")
    return cls(**data)


@dataclass
class FermikitConfig:
    contour: ContourSettings = field(default_factory=ContourSettings)
    fredholm: FredholmSettings = field(default_factory=FredholmSettings)
    sampling: SamplingSettings = field(default_factory=SamplingSettings)
    output: OutputSettings = field(default_factory=OutputSettings)
    threads: Optional[int] = None

    @classmethod
    def default(cls) -> "FermikitConfig":
        return cls()

    @classmethod
    def load(cls, path: Path) -> "FermikitConfig":
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        try:
            if path.suffix in (".yaml", ".yml"):
                data = yaml.safe_load(text) or {}
            else:
                data = json.loads(text)
        except (json.JSONDecodeError, yaml.YAMLError) as exc:
            raise ConfigError(f"Failed to parse {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must contain a mapping at top level")

        sections = {
            "contour": ContourSettings,
            "fredholm": FredholmSettings,
            "sampling": SamplingSettings,
            "output": OutputSettings,
        }
        unknown = set(data) - set(sections) - {"threads"}
        if unknown:
            raise ConfigError(f"Unknown configuration sections: {', '.join(sorted(unknown))}")

        config = cls(
            **{name: _build(kind, data.get(name, {}) or {}, name) for name, kind in sections.items()},
            threads=data.get("threads"),
        )
        if config.output.format not in ("csv", "json"):
            raise ConfigError(f"Unsupported output format '{config.output.format}'")
        return config

    def resolve_threads(self, override: Optional[int] = None) -> int:
        """Flag beats config file beats FERMIKIT_THREADS; default is one worker."""
        if override is not None:
            value = override
        elif self.threads is not None:
            value = self.threads
        else:
            raw = os.getenv(THREADS_ENV)
            try:
                value = int(raw) if raw else 1
            except ValueError as exc:
                raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
        if value < 1:
            raise ConfigError(f"Thread count must be positive, got {value}")
        return value

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)
