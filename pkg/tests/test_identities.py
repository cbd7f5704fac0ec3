"""Contour Fredholm identities and the Mehler kernel checks."""
from __future__ import annotations

import numpy as np
import pytest

from fermikit.errors import ContinuationError, ContourConditionError, DomainError
from fermikit.identities import (
    Circle,
    ContourKernelConfig,
    circles_intersect,
    k_contour_kernel,
    mehler_factorization,
    mehler_identity,
    preset,
    random_preset_params,
    single_pole,
    verify_identity,
)
from fermikit.oracle import RngStream
from fermikit.regions import RegionSet

PRESET_PARAMS = {
    "qtasep": dict(a=(1.0, 0.8), t=0.5, q=0.4),
    "qtazrp": dict(b=(1.0,), t=0.5, q=0.4),
    "whittaker": dict(a=(1.0,), alpha=(0.3,), beta=(0.0,), gamma=0.5, q=0.4),
    "asep": dict(tau=0.4, rho=0.5, x=1, t=0.0),
}


@pytest.mark.parametrize("z", [0.3, 0.7, 0.3 + 0.2j])
def test_mehler_determinant_is_a_q_pochhammer(z):
    assert mehler_identity(z, 0.5).gap < 1e-8


def test_mehler_factorization():
    assert mehler_factorization(0.5, 0.5, RegionSet.half_line(0.5)).gap < 1e-7
    assert mehler_factorization(0.5, 0.5, RegionSet.whole_line()).gap < 1e-12


@pytest.mark.parametrize("model", sorted(PRESET_PARAMS))
@pytest.mark.parametrize("variant", ["main", "alt"])
def test_preset_identities(model, variant):
    config = preset(model, **PRESET_PARAMS[model])
    for z in (0.4, -0.3 + 0.2j):
        assert verify_identity(config, z, order=96, variant=variant).gap < 1e-6


@pytest.mark.parametrize("index,model", list(enumerate(("asep", "qtasep", "qtazrp", "single_pole", "whittaker"))))
def test_preset_identities_at_random_admissible_parameters(index, model):
    generator = RngStream(41, (index,)).generator
    for _ in range(5):
        config = preset(model, **random_preset_params(model, generator))
        for variant in ("main", "alt"):
            for z in (0.4, -0.3 + 0.2j):
                assert verify_identity(config, z, order=96, variant=variant).gap < 1e-6


def test_random_parameters_need_a_known_model():
    with pytest.raises(DomainError):
        random_preset_params("tasep", RngStream(1).generator)


@pytest.mark.parametrize("z", [0.4, 1.5])
def test_mellin_barnes_continuation(z):
    config = single_pole(1.0, 0.3)
    assert verify_identity(config, z, order=96, mode="mellin_barnes").gap < 1e-6


def test_mellin_barnes_matches_the_series_inside_the_disc():
    config = single_pole(1.0, 0.3)
    nodes, _ = config.gamma_A[0].nodes(8)
    series = k_contour_kernel(config, 0.4, "series")(nodes, nodes)
    continued = k_contour_kernel(config, 0.4, "mellin_barnes")(nodes, nodes)
    np.testing.assert_allclose(continued, series, atol=1e-9)


def test_kernel_mode_errors():
    config = single_pole(1.0, 0.3)
    with pytest.raises(DomainError):
        k_contour_kernel(config, 1.5, "series")
    with pytest.raises(DomainError):
        k_contour_kernel(config, 0.4, "residues")
    with pytest.raises(DomainError):
        verify_identity(config, 0.4, variant="other")
    nodes, _ = config.gamma_A[0].nodes(4)
    with pytest.raises(DomainError):
        k_contour_kernel(config, -2.0, "mellin_barnes")(nodes, nodes)


def test_asep_with_time_has_no_continuation():
    config = preset("asep", tau=0.4, rho=0.5, x=1, t=0.5)
    assert verify_identity(config, 0.4, order=96).gap < 1e-6
    nodes, _ = config.gamma_A[0].nodes(4)
    with pytest.raises(ContinuationError):
        k_contour_kernel(config, 0.4, "mellin_barnes")(nodes, nodes)


def test_contour_conditions():
    assert circles_intersect(Circle(0j, 1.0), Circle(1.5 + 0j, 1.0))
    assert not circles_intersect(Circle(0j, 1.0), Circle(0j, 0.5))
    with pytest.raises(ContourConditionError):
        Circle(0j, 0.0)
    with pytest.raises(ContourConditionError):
        ContourKernelConfig.build(lambda eta: 1.0 / ((1.0 - eta) * (1.0 - eta / 5.0)), [1.0, 5.0], 0.3)


def test_preset_validation():
    with pytest.raises(DomainError):
        preset("tasep")
    with pytest.raises(DomainError):
        preset("qtasep", a=(), t=0.5, q=0.4)
    with pytest.raises(DomainError):
        preset("asep", tau=0.4, rho=1.5)
    with pytest.raises(DomainError):
        ContourKernelConfig.build(lambda eta: 2.0 / (1.0 - eta), [1.0], 0.3)
