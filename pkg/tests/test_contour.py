"""Contour specifications and trapezoid-rule integration."""
from __future__ import annotations

import math

import numpy as np
import pytest

from fermikit.contour import (
    MIN_CLEARANCE,
    Z_CONTOUR_MAX_N,
    ContourSpec,
    adaptive_average,
    choose_radius,
    circle_integral,
    contour_observable,
    gap_integrand_theta,
    pole_clearance,
    resolve_path,
)
from fermikit.errors import ConvergenceError, DomainError, PathValidityError
from fermikit.fredholm import fredholm_det
from fermikit.kernels import kernel_finite
from fermikit.qseries import ModelParams, log_prefactor_F
from fermikit.regions import RegionSet, complement_bound, default_order
from fermikit.statistics import rightmost_cdf


def test_spec_validation():
    with pytest.raises(DomainError):
        ContourSpec(radius=1.0, nodes=100)
    with pytest.raises(DomainError):
        ContourSpec(radius=-1.0)
    with pytest.raises(DomainError):
        ContourSpec(radius=1.0, center=1j)
    assert ContourSpec(radius=2.0, nodes=16).points().shape == (16,)


def test_circle_integral_picks_residues():
    spec = ContourSpec(radius=1.0, nodes=64)
    assert circle_integral(lambda z: 1.0 / z, spec) == pytest.approx(1.0, abs=1e-15)
    assert circle_integral(lambda z: np.exp(z) / z ** 3, spec) == pytest.approx(0.5, abs=1e-14)


def test_edge_radius_and_pole_nudging():
    params = ModelParams(4, 0.5)
    assert choose_radius(params, "edge").radius == pytest.approx(0.5 ** -3.5)
    # e^c - 1 = 2 = q^{-1} sits on a pole
    spec = choose_radius(params, "bulk", c=math.log(3.0))
    assert spec.radius != 2.0
    assert pole_clearance(spec.radius, params.q) > MIN_CLEARANCE
    with pytest.raises(DomainError):
        choose_radius(params, "bulk")
    with pytest.raises(DomainError):
        choose_radius(params, "elsewhere")


def test_adaptive_average_of_smooth_periodic_function():
    result = adaptive_average(lambda f: math.exp(math.cos(2 * math.pi * f)), 16, 1024, 1e-14)
    # mean of e^{cos t} is I_0(1)
    assert result.value.real == pytest.approx(1.2660658777520082, abs=1e-14)
    assert result.nodes <= 64


def test_adaptive_average_handles_vector_samples():
    result = adaptive_average(lambda f: np.array([1.0, math.cos(2 * math.pi * f) ** 2]), 16, 256, 1e-13)
    np.testing.assert_allclose(result.value.real, [1.0, 0.5], atol=1e-14)


def test_adaptive_average_reports_non_convergence():
    with pytest.raises(ConvergenceError) as info:
        # the 16, 32 and 64 node estimates of the mean of f differ by 1/(4N)
        adaptive_average(lambda f: f, 16, 64, 1e-14)
    assert info.value.diagnostics["nodes"] == 64
    assert "changes" in info.value.describe()


def test_resolve_path_defaults_and_refusal():
    assert resolve_path(ModelParams(Z_CONTOUR_MAX_N, 0.5), None) == "z_contour"
    assert resolve_path(ModelParams(Z_CONTOUR_MAX_N + 1, 0.5), None) == "theta"
    with pytest.raises(PathValidityError):
        resolve_path(ModelParams(Z_CONTOUR_MAX_N + 1, 0.5), "z_contour")
    with pytest.raises(DomainError):
        resolve_path(ModelParams(2, 0.5), "spiral")


@pytest.mark.parametrize("path", ["z_contour", "theta"])
def test_constant_observable_integrates_to_one(path):
    params = ModelParams(5, 0.4)
    result = contour_observable(lambda z: 1.0 + 0j, params, path)
    assert result.value == pytest.approx(1.0, abs=1e-9)


def test_radius_does_not_change_the_integral():
    params = ModelParams(3, 0.5)
    balanced = contour_observable(lambda z: 1.0 + 0j, params, "z_contour").value
    shifted = contour_observable(lambda z: 1.0 + 0j, params, "z_contour", radius=0.5 ** -2.2).value
    assert shifted == pytest.approx(balanced, abs=1e-9)
    with pytest.raises(DomainError):
        contour_observable(lambda z: 1.0 + 0j, params, "z_contour", radius=4.0)
    with pytest.raises(DomainError):
        contour_observable(lambda z: 1.0 + 0j, params, "theta", radius=3.0)


def test_theta_integrand_is_conjugation_symmetric():
    params = ModelParams(6, 0.5)
    forward = gap_integrand_theta(0.37, 6.0, params)
    backward = gap_integrand_theta(-0.37, 6.0, params)
    assert backward == pytest.approx(forward.conjugate(), abs=1e-14)
    with pytest.raises(DomainError):
        gap_integrand_theta(1.5, 6.0, params)


def _theta_integral(s: float, params: ModelParams) -> complex:
    # int_{-1}^{1} g(theta) d theta = 2 * mean of g(-1 + 2 f) over f in [0, 1)
    result = adaptive_average(lambda f: gap_integrand_theta(-1.0 + 2.0 * f, s, params), 32, 1024, 1e-12)
    return 2.0 * result.value


def test_theta_integral_matches_z_contour():
    params = ModelParams(6, 0.5)
    direct = rightmost_cdf(6.0, params, path="z_contour").value
    assert _theta_integral(6.0, params).real == pytest.approx(direct, abs=1e-8)


def test_theta_integral_far_right_is_one():
    assert _theta_integral(40.0, ModelParams(6, 0.5)) == pytest.approx(1.0, abs=1e-10)


def test_gap_integrand_node_doubling_decays_geometrically():
    params = ModelParams(4, 0.5)
    complement = RegionSet.half_line(2.0).complement(complement_bound(params))
    order = default_order(complement, params, 1e-15)
    radius = params.q ** (-params.n + 0.5)
    fractions = np.arange(64) / 64

    def integrand(f: float) -> complex:
        z = radius * complex(math.cos(2 * math.pi * f), math.sin(2 * math.pi * f))
        return complex(np.exp(log_prefactor_F(z, params))) * fredholm_det(kernel_finite(z, params), complement, order)

    samples = np.array([integrand(f) for f in fractions])
    # nested trapezoid sums on 4, 8, 16, 32 and 64 nodes
    estimates = [np.mean(samples[:: 64 // nodes]) for nodes in (4, 8, 16, 32, 64)]
    errors = [abs(estimate - estimates[-1]) for estimate in estimates[:-1]]
    assert errors[0] > 1e-6
    for coarse, fine in zip(errors, errors[1:]):
        if coarse > 1e-13:
            assert fine / coarse < 0.3
