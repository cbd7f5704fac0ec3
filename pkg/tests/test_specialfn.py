"""Airy functions and the polylogarithm Li_{1/2} on the negative axis."""
from __future__ import annotations

import math

import numpy as np
import pytest

from fermikit.errors import DomainError
from fermikit.specialfn import (
    AI_PRIME_ZERO,
    AI_ZERO,
    AiryEvalPolicy,
    airy_ai,
    airy_ai_expansion,
    airy_ai_pair,
    airy_ai_prime,
    polylog_half_neg,
    polylog_half_neg_log,
    polylog_half_neg_series,
)


def test_airy_values_at_origin():
    assert airy_ai(0.0) == pytest.approx(AI_ZERO, rel=1e-15)
    assert airy_ai_prime(0.0) == pytest.approx(AI_PRIME_ZERO, rel=1e-15)


@pytest.mark.parametrize("x", [-6.0, -2.5, -0.4, 0.0, 1.0, 2.5])
def test_maclaurin_branch_matches_library(x):
    assert airy_ai_expansion(x) == pytest.approx(airy_ai(x), abs=1e-10)


@pytest.mark.parametrize("x", [-20.0, -12.0, 10.0, 25.0])
def test_asymptotic_branch_matches_library(x):
    assert airy_ai_expansion(x) == pytest.approx(airy_ai(x), rel=1e-9, abs=1e-14)


def test_leading_order_decay_at_five():
    x = 5.0
    zeta = 2.0 / 3.0 * x ** 1.5
    leading = math.exp(-zeta) / (2.0 * math.sqrt(math.pi) * x ** 0.25)
    assert abs(leading / airy_ai(x) - 1.0) < 1e-2
    corrected = leading * (1.0 - 5.0 / (72.0 * zeta))
    assert abs(corrected / airy_ai(x) - 1.0) < 1e-3


def test_airy_pair_is_vectorised():
    xs = np.array([-1.0, 0.5, 3.0])
    ai, aip = airy_ai_pair(xs)
    np.testing.assert_allclose(ai, airy_ai(xs))
    np.testing.assert_allclose(aip, airy_ai_prime(xs))


def test_airy_policy_range():
    with pytest.raises(DomainError):
        airy_ai(-40.0)
    with pytest.raises(DomainError):
        airy_ai(np.nan)
    with pytest.raises(DomainError):
        AiryEvalPolicy(lower=1.0, upper=0.0)


@pytest.mark.parametrize("u", [1e-3, 0.3, 0.9])
def test_polylog_integral_matches_series(u):
    assert polylog_half_neg(u) == pytest.approx(polylog_half_neg_series(u), rel=1e-10)


def test_polylog_large_argument_asymptotics():
    # Li_{1/2}(-e^L) ~ -(2/sqrt(pi)) sqrt(L) (1 - pi^2/(24 L^2))
    big = 400.0
    expected = -2.0 / math.sqrt(math.pi) * math.sqrt(big) * (1.0 - math.pi ** 2 / (24.0 * big ** 2))
    assert polylog_half_neg_log(big) == pytest.approx(expected, rel=1e-8)


def test_polylog_log_form_handles_underflow():
    log_u = -60.0
    u = math.exp(log_u)
    assert polylog_half_neg_log(log_u) == pytest.approx(-u + u * u / math.sqrt(2.0), rel=1e-12)
    values = polylog_half_neg_log(np.array([-2.0, 0.0, 3.0]))
    np.testing.assert_allclose(values, polylog_half_neg(np.exp([-2.0, 0.0, 3.0])), rtol=1e-10)


def test_polylog_domain():
    with pytest.raises(DomainError):
        polylog_half_neg(0.0)
    with pytest.raises(DomainError):
        polylog_half_neg_series(1.5)
    with pytest.raises(DomainError):
        polylog_half_neg_log(np.inf)


def test_reference_values():
    # Li_{1/2}(-1) = -(1 - sqrt 2) zeta(1/2)
    assert polylog_half_neg(1.0) == pytest.approx(-0.6048986434, abs=1e-9)
    assert abs(airy_ai(-2.338107410459767)) < 1e-9


@pytest.mark.parametrize("x", [-4.0, -1.5, 0.0, 0.6, 2.0])
def test_airy_solves_its_equation(x):
    h = 1e-3
    second = (airy_ai(x + h) - 2.0 * airy_ai(x) + airy_ai(x - h)) / (h * h)
    assert second == pytest.approx(x * airy_ai(x), abs=1e-6)


def test_polylog_is_decreasing():
    us = np.logspace(-3.0, 3.0, 40)
    values = np.asarray(polylog_half_neg(us))
    assert np.all(np.diff(values) < 0.0)
