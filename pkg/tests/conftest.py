"""Shared fixtures; makes ``src`` importable without installing the package."""
from __future__ import annotations

import sys
from pathlib import Path

import pytest

SRC_PATH = Path(__file__).resolve().parents[1] / "src"
if str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))

from fermikit.qseries import ModelParams  # noqa: E402
from fermikit.workers import thread_cap  # noqa: E402


@pytest.fixture()
def small_params() -> ModelParams:
    return ModelParams(2, 0.5)


@pytest.fixture()
def single_threaded():
    with thread_cap(1):
        yield
