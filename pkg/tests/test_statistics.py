"""Finite-n observables against closed forms and enumeration, and the limit laws."""
from __future__ import annotations

import math

import numpy as np
import pytest

from fermikit.contour import ContourResult
from fermikit.errors import DomainError
from fermikit.fredholm import build_grid
from fermikit.hermite import joint_density
from fermikit.kernels import interp_diagonal
from fermikit.oracle import enumerate_gap
from fermikit.qseries import ModelParams
from fermikit.regions import RegionSet
from fermikit.statistics import (
    CorrelationRequest,
    ObservableResult,
    bulk_scale,
    bulk_scan,
    correlation,
    density,
    edge_scan,
    gap_probability,
    interp_parameter,
    limit_bulk_density,
    limit_corr_interp,
    limit_corr_sine,
    limit_crossover,
    limit_tracy_widom,
    occupation_numbers,
    rightmost_cdf,
    scaled_edge_point,
)


@pytest.mark.parametrize("n,q", [(1, 0.2), (3, 0.5), (6, 0.8)])
def test_whole_line_gap_is_normalised(n, q):
    result = gap_probability(RegionSet.whole_line(), ModelParams(n, q))
    assert result.value == pytest.approx(1.0, abs=1e-8)
    assert abs(result.imag) < 1e-8


def test_single_particle_cdf_is_gaussian():
    q = 0.5
    s = 0.8
    variance = (1.0 + q) / (1.0 - q)
    expected = 0.5 * (1.0 + math.erf(s / math.sqrt(2.0 * variance)))
    assert rightmost_cdf(s, ModelParams(1, q)).value == pytest.approx(expected, abs=1e-9)


def test_rightmost_cdf_matches_enumeration():
    params = ModelParams(2, 0.3)
    for s in (0.0, 1.5):
        exact = enumerate_gap(RegionSet.half_line(s), params)
        assert rightmost_cdf(s, params).value == pytest.approx(exact.value, abs=1e-6)


def test_two_interval_gap_matches_enumeration():
    params = ModelParams(2, 0.4)
    region = RegionSet.parse("-inf:-1,0:2")
    assert gap_probability(region, params).value == pytest.approx(enumerate_gap(region, params).value, abs=1e-6)


def test_cdf_paths_agree():
    params = ModelParams(4, 0.5)
    theta = rightmost_cdf(3.0, params, path="theta").value
    direct = rightmost_cdf(3.0, params, path="z_contour").value
    assert theta == pytest.approx(direct, abs=1e-7)


def test_pair_correlation_is_twice_the_joint_density():
    params = ModelParams(2, 0.5)
    for pair in ((-1.2, 0.8), (0.3, 2.0)):
        value = correlation(CorrelationRequest(pair, params)).value
        assert value == pytest.approx(2.0 * joint_density(pair, params), abs=1e-6)


def test_repeated_points_give_zero_correlation():
    params = ModelParams(3, 0.5)
    assert correlation(CorrelationRequest((0.4, 0.4), params)).value == pytest.approx(0.0, abs=1e-12)


def test_correlation_request_validation():
    with pytest.raises(DomainError):
        CorrelationRequest((), ModelParams(2, 0.5))
    with pytest.raises(DomainError):
        CorrelationRequest((0.0, math.inf), ModelParams(2, 0.5))


def test_occupation_numbers():
    q = 0.4
    single = occupation_numbers(ModelParams(1, q))
    np.testing.assert_allclose(single[:6], (1.0 - q) * q ** np.arange(6), atol=1e-10)
    assert occupation_numbers(ModelParams(3, q)).sum() == pytest.approx(3.0, abs=1e-8)


def test_density_integrates_to_one():
    params = ModelParams(3, 0.5)
    grid = build_grid((-16.0, 16.0), 240)
    values = density(grid.nodes, params)
    assert values.shape == grid.nodes.shape
    assert np.sum(grid.weights * values) == pytest.approx(1.0, abs=1e-6)
    assert density(0.7, params) == pytest.approx(density(-0.7, params), rel=1e-9)


def test_observable_result_keeps_imaginary_part():
    result = ObservableResult.from_contour(ContourResult(1.0 + 1e-3j, 0.0, 64), "theta", "gap")
    assert result.clamped == 1.0
    assert result.imag == pytest.approx(1e-3)
    assert float(result) == 1.0


def test_tracy_widom_values():
    assert limit_tracy_widom(0.0) == pytest.approx(0.969372828, abs=1e-6)
    assert limit_tracy_widom(-2.0) < limit_tracy_widom(0.0) < limit_tracy_widom(2.0) < 1.0


def test_crossover_is_a_distribution_function():
    values = [limit_crossover(t, 1.0) for t in (-1.0, 1.0, 3.0)]
    assert 0.0 < values[0] < values[1] < values[2] < 1.0


def test_bulk_density_limits():
    assert limit_bulk_density(0.0, 200.0) == pytest.approx(2.0 / math.pi, abs=2e-2)
    grid = build_grid((-6.0, 6.0), 240)
    assert np.sum(grid.weights * limit_bulk_density(grid.nodes, 4.0)) == pytest.approx(1.0, abs=1e-4)
    with pytest.raises(DomainError):
        limit_bulk_density(0.0, 0.0)


def test_sine_and_interpolating_correlations():
    assert limit_corr_sine([0.3]) == pytest.approx(1.0)
    assert limit_corr_sine([0.0, 0.5]) == pytest.approx(1.0 - 4.0 / math.pi ** 2)
    a = interp_parameter(0.4, 2.0)
    assert a == pytest.approx(math.exp(0.32) / math.expm1(2.0))
    assert limit_corr_interp([0.1], a) == pytest.approx(interp_diagonal(a))
    assert limit_corr_interp([0.0, 0.0], a) == pytest.approx(0.0, abs=1e-12)


def test_scaling_helpers():
    assert scaled_edge_point(0.0, 64) == pytest.approx(16.0)
    assert bulk_scale(0.0, ModelParams(100, 0.2)) == pytest.approx(math.pi / 10.0)
    assert bulk_scale(0.9, ModelParams(100, 0.2), c=2.0) == pytest.approx(math.pi / math.sqrt(50.0))
    with pytest.raises(DomainError):
        bulk_scale(1.0, ModelParams(100, 0.2))


def test_scans_need_exactly_one_regime():
    with pytest.raises(DomainError):
        edge_scan([4], [0.0])
    with pytest.raises(DomainError):
        bulk_scan([4], [0.0], 0.2, q=0.3, c=1.0)


def test_small_edge_scan_rows():
    rows = edge_scan([4], [0.0, 1.0], q=0.3)
    assert [(row.n, row.t) for row in rows] == [(4, 0.0), (4, 1.0)]
    assert all(0.0 <= row.finite <= 1.0 for row in rows)
    assert rows[0].error == pytest.approx(abs(rows[0].finite - rows[0].limit))


def test_rightmost_cdf_is_monotone():
    params = ModelParams(3, 0.5)
    values = np.array([rightmost_cdf(s, params).value for s in np.arange(-2.0, 6.5, 1.0)])
    assert np.all(np.diff(values) >= -1e-9)
    assert values[0] < 0.01 and values[-1] > 0.9
