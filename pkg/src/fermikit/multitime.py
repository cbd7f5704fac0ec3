"""Imaginary-time correlations and gap probabilities, and the C coefficients of level subsets."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np

from .contour import ContourSpec, adaptive_average, contour_observable, resolve_path
from .errors import DomainError
from .fredholm import fredholm_det_block
from .kernels import kernel_multitime
from .qseries import ModelParams, log_qpochhammer, qbinom
from .regions import RegionSet, as_region, complement_bound, default_order
from .statistics import KERNEL_TOL, ObservableResult

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimeGrid:
    """Imaginary times tau_1..tau_m, each in [0, beta)."""

    times: Tuple[float, ...]
    beta: float

    def __post_init__(self) -> None:
        times = tuple(float(t) for t in self.times)
        if not times:
            raise DomainError("A time grid needs at least one time")
        for tau in times:
            if not 0.0 <= tau < self.beta:
                raise DomainError(f"Imaginary time {tau} outside [0, {self.beta:.6g})")
        object.__setattr__(self, "times", times)

    @classmethod
    def for_params(cls, times: Sequence[float], params: ModelParams) -> "TimeGrid":
        return cls(tuple(times), params.beta)

    @property
    def distinct(self) -> bool:
        return len(set(self.times)) == len(self.times)

    def __len__(self) -> int:
        return len(self.times)


def _check_grid(tg: TimeGrid, params: ModelParams) -> None:
    if not math.isclose(tg.beta, params.beta, rel_tol=1e-12):
        raise DomainError(f"Time grid period {tg.beta} does not match -log q = {params.beta}")


def multitime_correlation(
    points: Sequence[float],
    tg: TimeGrid,
    params: ModelParams,
    tol: float = 1e-10,
    path: Optional[str] = None,
    kernel_tol: float = KERNEL_TOL,
) -> ObservableResult:
    """(2 pi i)^{-1} oint F(z) det[K(x_i, x_j; tau_i, tau_j; z)] dz/z."""
    xs = np.asarray(points, dtype=float).ravel()
    if xs.size != len(tg):
        raise DomainError(f"{xs.size} points for {len(tg)} times")
    _check_grid(tg, params)
    times = tg.times

    def observable(z: complex) -> complex:
        matrix = np.empty((xs.size, xs.size), dtype=complex)
        for i, tau in enumerate(times):
            for j, sigma in enumerate(times):
                matrix[i, j] = kernel_multitime(z, tau, sigma, params, kernel_tol)(xs[i], xs[j])
        return complex(np.linalg.det(matrix))

    route = resolve_path(params, path)
    label = f"multitime_correlation(m={xs.size})"
    return ObservableResult.from_contour(contour_observable(observable, params, route, tol=tol, label=label), route, label)


def multitime_gap(
    regions: Sequence[Union[RegionSet, str]],
    tg: TimeGrid,
    params: ModelParams,
    tol: float = 1e-10,
    path: Optional[str] = None,
    order: Optional[int] = None,
    kernel_tol: float = KERNEL_TOL,
) -> ObservableResult:
    """P(x_i(tau_k) in A_k for all i, k) as a contour integral of a block Fredholm determinant."""
    sets = [as_region(region) for region in regions]
    if len(sets) != len(tg):
        raise DomainError(f"{len(sets)} regions for {len(tg)} times")
    if not tg.distinct:
        raise DomainError(f"Multi-time gap probabilities need distinct times, got {tg.times}")
    _check_grid(tg, params)
    bound = complement_bound(params, kernel_tol)
    complements = [region.complement(bound) for region in sets]
    nonempty = [c for c in complements if c]
    size = order or default_order([iv for c in nonempty for iv in c], params, kernel_tol)
    times = tg.times

    def observable(z: complex) -> complex:
        if not nonempty:
            return 1.0 + 0j
        kernels = [[kernel_multitime(z, tau, sigma, params, kernel_tol) for sigma in times] for tau in times]
        return fredholm_det_block(kernels, complements, size)

    route = resolve_path(params, path)
    label = f"multitime_gap(m={len(times)})"
    return ObservableResult.from_contour(contour_observable(observable, params, route, tol=tol, label=label), route, label)


def _check_levels(js: Sequence[int], params: ModelParams) -> Tuple[int, ...]:
    levels = tuple(int(j) for j in js)
    if any(j != float(raw) for j, raw in zip(levels, js)):
        raise DomainError(f"Levels must be integers, got {tuple(js)}")
    if not levels or levels[0] < 0 or any(b <= a for a, b in zip(levels, levels[1:])):
        raise DomainError(f"Levels must be strictly increasing non-negative integers, got {levels}")
    if len(levels) > params.n:
        raise DomainError(f"{len(levels)} levels exceed n={params.n}")
    return levels


def g_factor_coefficients(js: Sequence[int], q: float, degree: int) -> List[np.ndarray]:
    """Power-series coefficients (up to z^degree) of the factors G_0..G_m of prod_{l not in js} (1 + q^l z).

    G_i runs over the levels strictly between j_i and j_{i+1} (j_0 = -1), the last one to infinity;
    each is expanded by the q-binomial theorem.
    """
    levels = [int(j) for j in js]
    edges = [-1] + levels
    i = np.arange(degree + 1, dtype=float)
    factors = []
    for index, start in enumerate(edges):
        first = start + 1
        log_base = i * first * math.log(q) + 0.5 * i * (i - 1) * math.log(q)
        if index + 1 < len(edges):
            length = edges[index + 1] - first
            binomials = np.array([qbinom(length, int(k), q) if k <= length else 0.0 for k in i])
            factors.append(np.exp(log_base) * binomials)
        else:
            # (q; q)_k in the denominator of the infinite q-binomial expansion
            log_qfact = np.concatenate([[0.0], np.cumsum(np.log1p(-q ** np.arange(1, degree + 1)))])
            factors.append(np.exp(log_base - log_qfact))
    return factors


def _series_product(factors: Sequence[np.ndarray], degree: int) -> np.ndarray:
    product = np.zeros(degree + 1)
    product[0] = 1.0
    for factor in factors:
        product = np.convolve(product, factor)[: degree + 1]
    return product


def c_coefficient(
    js: Sequence[int],
    params: ModelParams,
    method: str = "contour",
    tol: float = 1e-13,
) -> float:
    """C_{j_1..j_m} = sum over eigenstates containing every j of q^{sum k}.

    Equals q^{sum j} (2 pi i)^{-1} oint z^{-(n-m+1)} (-z; q)_inf / prod (1 + q^{j_i} z) dz.
    """
    levels = _check_levels(js, params)
    n, q, m = params.n, params.q, len(levels)
    prefix = sum(levels) * math.log(q)
    power = n - m
    if method == "qbinomial":
        coefficient = _series_product(g_factor_coefficients(levels, q, power), power)[power]
        return float(math.exp(prefix) * coefficient)
    if method != "contour":
        raise DomainError(f"Unknown method '{method}', expected contour or qbinomial")

    # between the poles -1 and -1/q; the integrand is entire apart from z = 0
    spec = ContourSpec(radius=q ** -0.5, nodes=64)
    radius = spec.radius

    def sample(fraction: float) -> complex:
        z = radius * complex(math.cos(2 * math.pi * fraction), math.sin(2 * math.pi * fraction))
        log_value = log_qpochhammer(-z, q) - sum(np.log1p(q ** j * z) for j in levels) - power * np.log(z)
        return complex(np.exp(log_value))

    result = adaptive_average(sample, spec.nodes, 1024, tol, label="c_coefficient")
    logger.debug("C%s: %.17g (imag %.2e)", levels, result.value.real, result.value.imag)
    return float(math.exp(prefix) * complex(result.value).real)
