"""Self-test registry; the cheap checks run here, the scans in test_limits_slow."""
from __future__ import annotations

import pytest

from fermikit.config import FermikitConfig
from fermikit.errors import DomainError
from fermikit.selftest import CHECKS, SelfTestContext, report, run_checks, select_checks


@pytest.fixture()
def context() -> SelfTestContext:
    return SelfTestContext.from_config(FermikitConfig.default())


def test_select_checks():
    assert select_checks(None) == list(CHECKS)
    assert select_checks(["determinism,normalization"]) == ["normalization", "determinism"]
    assert select_checks(["multitime", "identities"]) == ["identities", "multitime"]
    with pytest.raises(DomainError):
        select_checks(["normalisation"])


def test_cheap_checks_pass(context):
    outcomes = run_checks(context, ["determinism", "bulk_density", "oracle_correlation"])
    assert [outcome.name for outcome in outcomes] == ["oracle_correlation", "bulk_density", "determinism"]
    for outcome in outcomes:
        assert outcome.passed, outcome


def test_report_table(context):
    outcomes = run_checks(context, ["determinism"])
    table = report(outcomes, {"command": "self-test"})
    assert list(table.columns) == ["check", "passed", "statistic", "threshold", "detail"]
    assert table.records()[0]["check"] == "determinism"
    assert table.records()[0]["passed"] is True


@pytest.mark.slow
def test_identity_check_covers_random_presets(context):
    (outcome,) = run_checks(context, ["identities"])
    assert outcome.passed, outcome
    assert "over 29 presets" in outcome.detail
