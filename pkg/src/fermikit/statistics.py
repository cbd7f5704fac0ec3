"""Finite-n observables of the fermion ensemble and the limit laws they approach."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np

from .contour import ContourResult, choose_radius, contour_observable, resolve_path
from .errors import DomainError
from .fredholm import fredholm_det, fredholm_det_adaptive
from .hermite import phi_matrix
from .kernels import (
    edge_point,
    interp_diagonal,
    kernel_airy,
    kernel_coefficients,
    kernel_crossover,
    kernel_finite,
    kernel_interp,
    kernel_sine,
    truncation_level,
)
from .qseries import ModelParams
from .regions import RegionSet, as_region, complement_bound, default_order
from .specialfn import polylog_half_neg_log

logger = logging.getLogger(__name__)

# imaginary parts above this (relative) are logged
IMAG_WARN = 1e-8
KERNEL_TOL = 1e-15


@dataclass(frozen=True)
class ObservableResult:
    """A contour-integrated observable.

    ``value`` is the real part of the integral, ``clamped`` the same value
    forced into [0, 1] for reporting; the imaginary residual is kept, never
    dropped.
    """

    value: float
    raw: complex
    clamped: float
    imag: float
    error: float
    nodes: int
    path: str

    def __float__(self) -> float:
        return self.value

    @classmethod
    def from_contour(cls, result: ContourResult, path: str, label: str) -> "ObservableResult":
        raw = complex(result.value)
        if abs(raw.imag) > IMAG_WARN * (1.0 + abs(raw)):
            logger.warning("%s: imaginary residual %.3e exceeds %.0e", label, raw.imag, IMAG_WARN)
        return cls(
            value=raw.real,
            raw=raw,
            clamped=min(1.0, max(0.0, raw.real)),
            imag=raw.imag,
            error=result.error,
            nodes=result.nodes,
            path=path,
        )


@dataclass(frozen=True)
class CorrelationRequest:
    points: Tuple[float, ...]
    params: ModelParams
    tolerance: float = 1e-10

    def __post_init__(self) -> None:
        points = tuple(float(x) for x in np.asarray(self.points, dtype=float).ravel())
        if not points:
            raise DomainError("A correlation needs at least one point")
        if not all(math.isfinite(x) for x in points):
            raise DomainError(f"Correlation points must be finite, got {points}")
        object.__setattr__(self, "points", points)


def _observable(
    fn,
    params: ModelParams,
    tol: float,
    path: Optional[str],
    label: str,
    nodes: int = 128,
    max_nodes: int = 1024,
    radius: Optional[float] = None,
) -> ObservableResult:
    route = resolve_path(params, path)
    result = contour_observable(
        fn, params, route, radius=radius, nodes=nodes, max_nodes=max_nodes, tol=tol, label=label
    )
    return ObservableResult.from_contour(result, route, label)


def gap_probability(
    region: Union[RegionSet, str],
    params: ModelParams,
    tol: float = 1e-10,
    path: Optional[str] = None,
    order: Optional[int] = None,
    kernel_tol: float = KERNEL_TOL,
    nodes: int = 128,
    max_nodes: int = 1024,
    radius: Optional[float] = None,
) -> ObservableResult:
    """P(all particles in A) = (2 pi i)^{-1} oint F(z) det(I - K(z) chi_{A^c}) dz/z."""
    region = as_region(region)
    complement = region.complement(complement_bound(params, kernel_tol))
    if not complement:
        # det over an empty complement is one; the contour then returns the normalization
        return _observable(lambda z: 1.0 + 0j, params, tol, path, "gap", nodes, max_nodes, radius)
    size = order or default_order(complement, params, kernel_tol)
    logger.debug("gap: complement %s, order %d", complement, size)

    def observable(z: complex) -> complex:
        return fredholm_det(kernel_finite(z, params, kernel_tol), complement, size)

    return _observable(observable, params, tol, path, "gap", nodes, max_nodes, radius)


def rightmost_cdf(
    s: float,
    params: ModelParams,
    tol: float = 1e-10,
    path: Optional[str] = None,
    order: Optional[int] = None,
    kernel_tol: float = KERNEL_TOL,
    nodes: int = 128,
    max_nodes: int = 1024,
    radius: Optional[float] = None,
) -> ObservableResult:
    """P(max_i x_i <= s)."""
    return gap_probability(RegionSet.half_line(s), params, tol, path, order, kernel_tol, nodes, max_nodes, radius)


def correlation(req: CorrelationRequest, path: Optional[str] = None, kernel_tol: float = KERNEL_TOL) -> ObservableResult:
    """R^(m)(x_1..x_m) = (2 pi i)^{-1} oint F(z) det[K(x_i, x_j; z)] dz/z.

    Repeated points give equal rows and therefore zero.
    """
    points = np.array(req.points)

    def observable(z: complex) -> complex:
        matrix = kernel_finite(z, req.params, kernel_tol).matrix(points)
        return complex(np.linalg.det(matrix))

    return _observable(observable, req.params, req.tolerance, path, f"correlation(m={points.size})")


def occupation_numbers(params: ModelParams, tol: float = 1e-10, path: Optional[str] = None) -> np.ndarray:
    """P(level k occupied) for k = 0..K, through the contour integral of q^k z/(1 + q^k z)."""
    radius = choose_radius(params, "edge").radius
    k_max = truncation_level(radius, params.q, KERNEL_TOL)

    def observable(z: complex) -> np.ndarray:
        return kernel_coefficients(z, params.q, k_max)

    route = resolve_path(params, path)
    result = contour_observable(observable, params, route, tol=tol, label="occupation")
    return np.real(np.asarray(result.value))


def density(x, params: ModelParams, tol: float = 1e-10, path: Optional[str] = None):
    """rho_n(x) = R^(1)(x)/n = (1/n) sum_k P(k occupied) phi_k(x)^2; vectorized in x."""
    occupied = occupation_numbers(params, tol, path)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    values = occupied @ phi_matrix(occupied.size - 1, xs.ravel()) ** 2 / params.n
    values = values.reshape(xs.shape)
    return float(values[0]) if np.ndim(x) == 0 else values


def limit_tracy_widom(t: float, tol: float = 1e-12, start_order: int = 24, doublings: int = 4) -> float:
    """F_GUE(t) = det(I - K_Airy) on L^2(t, infinity)."""
    value, _ = fredholm_det_adaptive(kernel_airy(), t, tol, start_order, doublings)
    return float(value.real)


def limit_crossover(t: float, c: float, tol: float = 1e-10, start_order: int = 24, doublings: int = 4) -> float:
    """F_crossover(t; c) = det(I - K_c) on L^2(t, infinity), K_c the Fermi-weighted Airy kernel."""
    value, _ = fredholm_det_adaptive(kernel_crossover(c), t, tol, start_order, doublings)
    return float(value.real)


def limit_bulk_density(x, c: float):
    """-(pi c)^{-1/2} Li_{1/2}(e^{-c x^2} - e^{c(1 - x^2)}); tends to the semicircle as c grows."""
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    xs = np.asarray(x, dtype=float)
    log_u = -c * xs * xs + math.log(math.expm1(c))
    values = -np.asarray(polylog_half_neg_log(log_u)) / math.sqrt(math.pi * c)
    return float(values) if np.ndim(x) == 0 else values


def limit_corr_sine(points: Sequence[float]) -> float:
    xs = np.asarray(points, dtype=float).ravel()
    return float(np.linalg.det(kernel_sine().matrix(xs)).real)


def limit_corr_interp(points: Sequence[float], a: float) -> float:
    xs = np.asarray(points, dtype=float).ravel()
    if xs.size == 1:
        return interp_diagonal(a)
    return float(np.linalg.det(kernel_interp(a).matrix(xs)).real)


def scaled_edge_point(t, n: int):
    """2 sqrt(n) + t n^{-1/6}."""
    return edge_point(t, n)


@dataclass(frozen=True)
class ScanRow:
    n: int
    q: float
    t: float
    finite: float
    limit: float

    @property
    def error(self) -> float:
        return abs(self.finite - self.limit)


def edge_scan(
    ns: Iterable[int],
    ts: Sequence[float],
    q: Optional[float] = None,
    c: Optional[float] = None,
    tol: float = 1e-10,
) -> List[ScanRow]:
    """P(max <= 2 sqrt n + t n^{-1/6}) against F_GUE(t) (fixed q) or F_crossover(t; c) (q = e^{-c n^{-1/3}})."""
    if (q is None) == (c is None):
        raise DomainError("edge_scan needs exactly one of q (Tracy-Widom) or c (crossover)")
    limits: Dict[float, float] = {
        t: limit_tracy_widom(t) if c is None else limit_crossover(t, c) for t in ts
    }
    rows = []
    for n in ns:
        params = ModelParams(n, q) if c is None else ModelParams.edge_scaling(n, c)
        for t in ts:
            finite = rightmost_cdf(float(scaled_edge_point(t, n)), params, tol).value
            rows.append(ScanRow(n, params.q, float(t), finite, limits[t]))
            logger.info("edge scan n=%d t=%g: %.10f vs %.10f", n, t, finite, limits[t])
    return rows


def scan_errors(rows: Iterable[ScanRow]) -> Dict[int, float]:
    """sup_t |finite - limit| per n."""
    errors: Dict[int, float] = {}
    for row in rows:
        errors[row.n] = max(errors.get(row.n, 0.0), row.error)
    return errors


def bulk_scale(x: float, params: ModelParams, c: Optional[float] = None) -> float:
    """Local mean spacing at 2 x sqrt(n): pi/((1 - x^2)^{1/2} sqrt n) at fixed q, pi/sqrt(n/c) when q = e^{-c/n}."""
    n = params.n
    if c is None:
        if not abs(x) < 1:
            raise DomainError(f"Bulk point x must satisfy |x| < 1, got {x}")
        return math.pi / (math.sqrt(1.0 - x * x) * math.sqrt(n))
    return math.pi / math.sqrt(n / c)


def interp_parameter(x: float, c: float) -> float:
    """a = e^{c x^2}/(e^c - 1)."""
    return math.exp(c * x * x) / math.expm1(c)


def bulk_scaled_correlation(
    xi: Sequence[float],
    x: float,
    params: ModelParams,
    c: Optional[float] = None,
    tol: float = 1e-10,
) -> float:
    """scale^m R^(m)(2 x sqrt n + scale xi_i); tends to det K_sin (fixed q) or det K_interp (q = e^{-c/n})."""
    xi = np.asarray(xi, dtype=float).ravel()
    scale = bulk_scale(x, params, c)
    points = 2.0 * x * math.sqrt(params.n) + scale * xi
    value = correlation(CorrelationRequest(tuple(points), params, tol)).value
    return scale ** xi.size * value


@dataclass(frozen=True)
class BulkRow:
    n: int
    q: float
    xi: Tuple[float, ...]
    finite: float
    limit: float

    @property
    def error(self) -> float:
        return abs(self.finite - self.limit)


def bulk_scan(
    ns: Iterable[int],
    xi: Sequence[float],
    x: float,
    q: Optional[float] = None,
    c: Optional[float] = None,
    tol: float = 1e-10,
) -> List[BulkRow]:
    """Scaled R^(m) at fixed q against the sine process, or at q = e^{-c/n} against the interpolating process."""
    if (q is None) == (c is None):
        raise DomainError("bulk_scan needs exactly one of q (sine) or c (interpolating)")
    points = tuple(float(v) for v in xi)
    limit = limit_corr_sine(points) if c is None else limit_corr_interp(points, interp_parameter(x, c))
    rows = []
    for n in ns:
        params = ModelParams(n, q) if c is None else ModelParams.bulk_scaling(n, c)
        finite = bulk_scaled_correlation(points, x, params, c, tol)
        rows.append(BulkRow(n, params.q, points, finite, limit))
        logger.info("bulk scan n=%d: %.10f vs %.10f", n, finite, limit)
    return rows

