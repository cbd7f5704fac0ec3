"""Trapezoid quadrature on circles for the z-integrals, radius policy and the theta path."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Callable, Optional, Union
import logging
import math

import numpy as np

from .errors import ConvergenceError, DomainError, PathValidityError
from .fredholm import fredholm_det
from .kernels import kernel_finite
from .qseries import ModelParams, log_prefactor_F, prefactor_F_theta, theta_weight
from .regions import RegionSet, complement_bound, default_order
from .workers import parallel_map

logger = logging.getLogger(__name__)

MIN_NODES = 16
MIN_CLEARANCE = 1e-8
NUDGE = 1e-6
MAX_NUDGES = 8
Z_CONTOUR_MAX_N = 40
REGIMES = ("generic", "edge", "bulk")
PATHS = ("z_contour", "theta")


def _is_power_of_two(value: int) -> bool:
    return value >= 1 and value & (value - 1) == 0


@dataclass(frozen=True)
class ContourSpec:
    """Circle |z| = radius sampled at ``nodes`` equally spaced points."""

    radius: float
    nodes: int = 128
    center: complex = 0j
    pole_clearance: float = 1.0
    regime: str = "generic"

    def __post_init__(self) -> None:
        if not self.radius > 0 or not math.isfinite(self.radius):
            raise DomainError(f"Contour radius must be positive and finite, got {self.radius}")
        if self.nodes < MIN_NODES or not _is_power_of_two(self.nodes):
            raise DomainError(f"Contour nodes must be a power of two >= {MIN_NODES}, got {self.nodes}")
        if not self.pole_clearance > MIN_CLEARANCE:
            raise DomainError(f"Pole clearance {self.pole_clearance:g} is below {MIN_CLEARANCE:g}")
        if self.center != 0:
            raise DomainError("Only contours centred at the origin are supported")

    def points(self, nodes: Optional[int] = None) -> np.ndarray:
        count = self.nodes if nodes is None else nodes
        return self.radius * np.exp(2j * np.pi * np.arange(count) / count)

    def with_nodes(self, nodes: int) -> "ContourSpec":
        return replace(self, nodes=nodes)


@dataclass(frozen=True)
class ContourResult:
    value: Union[complex, np.ndarray]
    error: float
    nodes: int


def pole_clearance(radius: float, q: float) -> float:
    """min over k >= 0 of |1 - q^k radius|: relative distance of the circle to the poles -q^-k."""
    nearest = math.log(radius) / -math.log(q)
    candidates = {0, max(0, math.floor(nearest)), max(0, math.ceil(nearest))}
    return min(abs(1.0 - q ** k * radius) for k in candidates)


def choose_radius(params: ModelParams, regime: str = "generic", c: Optional[float] = None, nodes: int = 128) -> ContourSpec:
    """generic: 1; edge: q^{-n+1/2} (|w| = sqrt(q) for w = q^n z); bulk: e^c - 1, nudged off the poles."""
    n, q = params.n, params.q
    if regime == "generic":
        radius = 1.0
    elif regime == "edge":
        radius = math.exp((-n + 0.5) * math.log(q))
    elif regime == "bulk":
        if c is None or not c > 0:
            raise DomainError("bulk regime needs a positive c")
        radius = math.expm1(c)
    else:
        raise DomainError(f"Unknown regime '{regime}', expected one of {REGIMES}")

    clearance = pole_clearance(radius, q)
    nudges = 0
    while clearance <= MIN_CLEARANCE and nudges < MAX_NUDGES:
        radius *= 1.0 + NUDGE
        clearance = pole_clearance(radius, q)
        nudges += 1
        logger.info("Contour radius nudged to %.12g (clearance %.3g)", radius, clearance)
    if clearance <= MIN_CLEARANCE:
        raise DomainError(f"No pole-clear radius found near {radius:g} after {MAX_NUDGES} nudges")
    return ContourSpec(radius=radius, nodes=nodes, pole_clearance=clearance, regime=regime)


def _checked(samples: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(samples)):
        raise DomainError(f"Non-finite sample in {what}")
    return samples


def circle_integral(g: Callable[[complex], complex], spec: ContourSpec) -> complex:
    """(2 pi i)^{-1} oint g(z) dz over |z| = radius, as the average of g(z_j) z_j."""
    points = spec.points()
    samples = _checked(np.array([g(z) for z in points], dtype=complex) * points, "circle_integral")
    return complex(np.sum(samples) / spec.nodes)


def _unwrap(value: np.ndarray):
    return complex(value) if np.ndim(value) == 0 else value


def adaptive_average(
    sample: Callable[[float], Any],
    start: int,
    max_nodes: int,
    tol: float,
    label: str = "contour",
) -> ContourResult:
    """Average of sample(f) (scalar or array) over f = j/N, doubling N (reusing the even nodes) until |I_N - I_2N| <= tol(1 + |I|)."""
    count = start
    terms = np.array(parallel_map(sample, (np.arange(count) / count).tolist()), dtype=complex)
    _checked(terms, label)
    value = np.sum(terms, axis=0) / count
    changes = []
    while count < max_nodes:
        fresh = np.array(parallel_map(sample, ((np.arange(count) + 0.5) / count).tolist()), dtype=complex)
        _checked(fresh, label)
        merged = np.empty((2 * count,) + terms.shape[1:], dtype=complex)
        merged[0::2], merged[1::2] = terms, fresh
        count *= 2
        refined = np.sum(merged, axis=0) / count
        error = float(np.max(np.abs(refined - value)))
        changes.append(error)
        terms, value = merged, refined
        logger.debug("%s: %d nodes, change %.3e", label, count, error)
        if error <= tol * (1.0 + float(np.max(np.abs(value)))):
            logger.debug("%s converged with %d nodes", label, count)
            return ContourResult(_unwrap(value), error, count)
    raise ConvergenceError(
        f"{label} did not converge to tol={tol:g} within {max_nodes} nodes",
        {"nodes": count, "changes": changes, "value": _unwrap(value)},
    )


def resolve_path(params: ModelParams, path: Optional[str]) -> str:
    if path is None:
        return "z_contour" if params.n <= Z_CONTOUR_MAX_N else "theta"
    if path not in PATHS:
        raise DomainError(f"Unknown path '{path}', expected one of {PATHS}")
    if path == "z_contour" and params.n > Z_CONTOUR_MAX_N:
        raise PathValidityError(f"z_contour path is refused for n={params.n} > {Z_CONTOUR_MAX_N}; use theta")
    return path


def contour_observable(
    observable: Callable[[complex], Any],
    params: ModelParams,
    path: Optional[str] = None,
    radius: Optional[float] = None,
    nodes: int = 128,
    max_nodes: int = 1024,
    tol: float = 1e-10,
    label: str = "contour",
) -> ContourResult:
    """(2 pi i)^{-1} oint F(z) D(z) dz/z for a z-dependent observable D.

    The theta path samples z = q^{-n+1/2} e^{i pi theta} with F(z) = T(theta) F_n(theta);
    the z_contour path evaluates F in log space on |z| = radius.
    """
    route = resolve_path(params, path)
    q, n = params.q, params.n
    if route == "theta":
        if radius is not None:
            raise DomainError("the theta path runs on the fixed radius q^(-n+1/2)")
        edge = math.exp((-n + 0.5) * math.log(q))

        def sample(fraction: float) -> complex:
            theta = -1.0 + 2.0 * fraction
            weight = theta_weight(theta, q) * prefactor_F_theta(theta, params)
            return weight * observable(edge * complex(math.cos(math.pi * theta), math.sin(math.pi * theta)))

    else:
        r = choose_radius(params, "edge").radius if radius is None else float(radius)
        if pole_clearance(r, q) < MIN_CLEARANCE:
            raise DomainError(f"Contour radius {r} is within {MIN_CLEARANCE:g} of a pole")

        def sample(fraction: float) -> complex:
            z = r * complex(math.cos(2 * math.pi * fraction), math.sin(2 * math.pi * fraction))
            return complex(np.exp(log_prefactor_F(z, params))) * observable(z)

    return adaptive_average(sample, nodes, max_nodes, tol, label=f"{label}[{route}]")


def gap_integrand_theta(theta: float, s: float, params: ModelParams, fredholm_tol: float = 1e-15, order: Optional[int] = None) -> complex:
    """(1/2) T(theta) F_n(theta) det(I - P_s K(q^{-n+1/2} e^{i pi theta}) P_s); integrates to P(max <= s) over [-1, 1]."""
    if not -1.0 <= theta <= 1.0:
        raise DomainError(f"theta must lie in [-1, 1], got {theta}")
    q, n = params.q, params.n
    z = math.exp((-n + 0.5) * math.log(q)) * complex(math.cos(math.pi * theta), math.sin(math.pi * theta))
    kernel = kernel_finite(z, params, fredholm_tol)
    complement = RegionSet.half_line(s).complement(complement_bound(params, fredholm_tol))
    size = order or default_order(complement, params, fredholm_tol)
    det = fredholm_det(kernel, complement, size)
    return 0.5 * theta_weight(theta, q) * prefactor_F_theta(theta, params) * det
