"""Scaling-limit convergence and the remaining self-test checks; run with ``pytest -m slow``."""
from __future__ import annotations

import pytest

from fermikit.config import FermikitConfig
from fermikit.selftest import SelfTestContext, run_checks
from fermikit.statistics import edge_scan, limit_crossover, limit_tracy_widom, scan_errors

pytestmark = pytest.mark.slow

SLOW_CHECKS = [
    "normalization",
    "oracle_gap",
    "identities",
    "edge_tracy_widom",
    "edge_crossover",
    "bulk_sine",
    "bulk_interp",
    "multitime",
    "path_invariance",
]


@pytest.mark.parametrize("name", SLOW_CHECKS)
def test_self_test_check(name):
    (outcome,) = run_checks(SelfTestContext.from_config(FermikitConfig.default()), [name])
    assert outcome.passed, outcome


def test_edge_error_shrinks_with_n():
    errors = scan_errors(edge_scan((25, 100), (0.0,), q=0.1))
    assert errors[100] < errors[25] < 0.1


def test_tracy_widom_tails():
    assert limit_tracy_widom(-6.0) < 1e-6
    assert 1.0 - limit_tracy_widom(4.0) < 1e-4


def test_large_c_crossover_law_approaches_tracy_widom():
    assert abs(limit_crossover(0.0, 50.0) - limit_tracy_widom(0.0)) < 2e-3
