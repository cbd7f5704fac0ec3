"""Finite-temperature kernels and their limits."""
from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from fermikit.errors import DomainError, PoleProximityError
from fermikit.hermite import mehler_M, phi_matrix, propagator_E
from fermikit.kernels import (
    ZERO_KERNEL,
    EdgeCoefficients,
    edge_point,
    fermi_weight,
    interp_diagonal,
    kernel_airy,
    kernel_coefficients,
    kernel_crossover,
    kernel_edge_scaled,
    kernel_finite,
    kernel_interp,
    kernel_multitime,
    kernel_sine,
    truncation_level,
)
from fermikit.qseries import ModelParams
from fermikit.specialfn import airy_ai

POINTS = np.array([-1.3, -0.2, 0.4, 1.7])


def test_finite_kernel_matches_explicit_sum():
    params = ModelParams(3, 0.4)
    z = 2.0 + 1.0j
    levels = 80
    a = params.q ** np.arange(levels) * z / (1.0 + params.q ** np.arange(levels) * z)
    basis = phi_matrix(levels - 1, POINTS)
    expected = (basis * a[:, None]).T @ basis
    np.testing.assert_allclose(kernel_finite(z, params).matrix(POINTS), expected, atol=1e-14)


def test_finite_kernel_pointwise_agrees_with_matrix():
    kernel = kernel_finite(1.5, ModelParams(2, 0.5))
    matrix = kernel.matrix(POINTS)
    assert kernel(POINTS[0], POINTS[2]) == pytest.approx(matrix[0, 2], abs=1e-15)
    np.testing.assert_allclose(matrix, matrix.T, atol=1e-15)


def test_split_strategy_matches_direct():
    params = ModelParams(6, 0.5)
    z = params.q ** (-params.n + 0.5) * np.exp(0.7j)
    direct = kernel_finite(z, params).matrix(POINTS)
    split = kernel_finite(z, params, strategy="split").matrix(POINTS)
    np.testing.assert_allclose(split, direct, atol=1e-11)


def test_zero_and_pole_handling():
    assert kernel_finite(0.0, ModelParams(2, 0.5)) is ZERO_KERNEL
    with pytest.raises(PoleProximityError) as info:
        kernel_coefficients(-4.0, 0.5, 10)
    assert info.value.k == 2
    with pytest.raises(DomainError):
        kernel_finite(1.0, ModelParams(2, 0.5), strategy="other")


def test_truncation_level_bound():
    level = truncation_level(3.0, 0.5, 1e-15)
    bound = 2.0 * 3.0 * 0.5 ** level * 1.086435 ** 2 / (math.sqrt(2.0 * math.pi) * 0.5)
    assert bound < 1e-15
    assert truncation_level(0.0, 0.5, 1e-15) == 0


def test_edge_kernel_is_rescaled_finite_kernel():
    params = ModelParams(8, 0.3)
    theta = 0.35
    z = params.q ** (-params.n + 0.5) * np.exp(1j * math.pi * theta)
    ts = np.array([-1.0, 0.0, 1.5])
    scaled = kernel_edge_scaled(theta, params).matrix(ts)
    raw = params.n ** (-1.0 / 6.0) * kernel_finite(z, params).matrix(edge_point(ts, params.n))
    np.testing.assert_allclose(scaled, raw, atol=1e-12)
    with pytest.raises(DomainError):
        kernel_edge_scaled(1.5, params)


def test_multitime_kernel_reduces_at_equal_times():
    params = ModelParams(2, 0.5)
    z = 1.2 - 0.4j
    equal = kernel_multitime(z, 0.3, 0.3, params).matrix(POINTS)
    np.testing.assert_allclose(equal, kernel_finite(z, params).matrix(POINTS), atol=1e-14)


def test_multitime_kernel_subtracts_propagator_below_diagonal():
    params = ModelParams(1, 0.5)
    z = 0.8
    tau, sigma = 0.1, 0.4
    x, y = 0.3, -0.5
    levels = 120
    k = np.arange(levels)
    a = params.q ** k * z / (1.0 + params.q ** k * z) * np.exp(k * (tau - sigma))
    phis = phi_matrix(levels - 1, np.array([x, y]))
    expected = np.sum(a * phis[:, 0] * phis[:, 1]) - propagator_E(x, y, tau, sigma)
    assert kernel_multitime(z, tau, sigma, params)(x, y) == pytest.approx(expected, abs=1e-13)


def test_multitime_kernel_time_range():
    params = ModelParams(1, 0.5)
    with pytest.raises(DomainError):
        kernel_multitime(1.0, params.beta, 0.0, params)
    with pytest.raises(DomainError):
        kernel_multitime(1.0, -0.1, 0.0, params)


@pytest.mark.parametrize("q", [0.3, 0.7])
def test_finite_kernel_is_a_resolvent_series_of_mehler_kernels(q):
    # K(z) = sum_{l>=1} (-1)^{l+1} z^l M(q^l) for |z| < 1
    params = ModelParams(3, q)
    z = 0.5 - 0.3j
    rng = np.random.default_rng(17)
    xs, ys = rng.uniform(-3.0, 3.0, size=(2, 20))
    expected = sum((-1) ** (l + 1) * z ** l * mehler_M(xs, ys, q ** l) for l in range(1, 90))
    np.testing.assert_allclose(kernel_finite(z, params)(xs, ys), expected, atol=1e-9)


@pytest.mark.parametrize("theta", [-1.0, -0.4, 0.0, 0.35, 1.0])
def test_edge_coefficients_are_finite_kernel_coefficients(theta):
    params = ModelParams(6, 0.4)
    coefficients = EdgeCoefficients(theta, params)
    z = params.q ** (-params.n + 0.5) * np.exp(1j * math.pi * theta)
    expected = kernel_coefficients(z, params.q, coefficients.levels)
    np.testing.assert_allclose(coefficients.values, expected, rtol=1e-10)
    bounds = np.array([coefficients.bound(k) for k in range(coefficients.levels + 1)])
    assert np.all(np.abs(coefficients.values) <= bounds * (1.0 + 1e-12))


def test_edge_coefficient_bound_is_attained_at_theta_one():
    coefficients = EdgeCoefficients(1.0, ModelParams(6, 0.4))
    bounds = np.array([coefficients.bound(k) for k in range(coefficients.levels + 1)])
    np.testing.assert_allclose(np.abs(coefficients.values), bounds, rtol=1e-10)


def test_edge_kernel_conjugation_symmetry():
    params = ModelParams(8, 0.3)
    ts = np.array([-1.0, 0.0, 1.5])
    forward = kernel_edge_scaled(0.35, params).matrix(ts)
    backward = kernel_edge_scaled(-0.35, params).matrix(ts)
    np.testing.assert_allclose(backward, np.conj(forward), atol=1e-14)


def test_multitime_kernel_at_zero_is_minus_the_propagator():
    params = ModelParams(2, 0.5)
    tau, sigma = 0.1, 0.5
    kernel = kernel_multitime(0.0, tau, sigma, params)
    expected = -propagator_E(POINTS[:, None], POINTS[None, :], tau, sigma)
    np.testing.assert_allclose(kernel.matrix(POINTS), expected, atol=1e-15)
    assert kernel(0.3, -0.2) == pytest.approx(-propagator_E(0.3, -0.2, tau, sigma), abs=1e-15)


def test_airy_closed_form_matches_integral():
    xs = np.array([-2.0, 0.0, 0.7, 3.0])
    closed = kernel_airy().matrix(xs)
    integral = kernel_airy("quadrature").matrix(xs)
    np.testing.assert_allclose(closed, integral, atol=1e-9)


def test_airy_kernel_is_continuous_across_the_diagonal():
    kernel = kernel_airy()
    assert kernel(0.5, 0.5 + 1e-7) == pytest.approx(kernel(0.5, 0.5), abs=1e-6)
    with pytest.raises(DomainError):
        kernel_airy("tabulated")


def test_crossover_kernel_matches_adaptive_quadrature():
    c, x, y = 2.0, 0.0, 0.5

    def integrand(r: float) -> float:
        return float(fermi_weight(np.array(r), c).real * airy_ai(x - r) * airy_ai(y - r))

    expected, _ = integrate.quad(integrand, -30.0, 25.0, limit=400, epsabs=1e-13)
    assert kernel_crossover(c)(x, y).real == pytest.approx(expected, abs=1e-9)
    matrix = kernel_crossover(c).matrix(np.array([x, y]))
    assert matrix[0, 1] == pytest.approx(kernel_crossover(c)(x, y), abs=1e-12)
    with pytest.raises(DomainError):
        kernel_crossover(0.0)


def test_large_c_crossover_approaches_airy():
    assert abs(kernel_crossover(50.0)(0.0, 0.0) - kernel_airy()(0.0, 0.0)) < 1e-3
    assert kernel_airy()(0.0, 0.0).real == pytest.approx(0.066987, abs=1e-6)


def test_sine_kernel_values():
    kernel = kernel_sine()
    assert kernel(0.3, 0.3) == pytest.approx(1.0)
    assert kernel(0.0, 0.5) == pytest.approx(2.0 / math.pi)


@pytest.mark.parametrize("a", [0.05, 0.5, 3.0])
def test_interp_diagonal_matches_quadrature(a):
    assert kernel_interp(a)(0.2, 0.2).real == pytest.approx(interp_diagonal(a), abs=1e-8)


def test_interp_matrix_agrees_with_pointwise():
    kernel = kernel_interp(0.5)
    xs = np.array([0.0, 0.4, 1.1])
    matrix = kernel.matrix(xs)
    assert matrix[0, 2] == pytest.approx(kernel(0.0, 1.1), abs=1e-10)
    with pytest.raises(DomainError):
        kernel_interp(-1.0)
