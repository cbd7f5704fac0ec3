"""Fredholm determinant identities for kernels on circle contours.

For f meromorphic with poles A (f(0) = 1), M(xi, eta) = f(eta)/(xi - q eta) and
K(xi, eta; z) = sum_{k>=1} (-1)^{k+1} z^k F_k(eta)/(xi - q^k eta) with
F_k(eta) = prod_{j<k} f(q^j eta):

    det(I + z M) on Gamma_{0,A} = (-z; q)_inf det(I + K) on Gamma_A
    det(I - z M) on Gamma_A     = (-z; q)_inf det(I - K) on Gamma_{0,A}

Both contours are positively oriented with measure d eta/(2 pi i). Gamma_{0,A}
is one circle about the origin; Gamma_A is a small circle about each pole.
The Mehler-kernel identities on L^2(R) live here as well.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, NamedTuple, Optional, Sequence, Tuple, Union
import cmath
import logging
import math

import numpy as np

from .errors import ContinuationError, ContourConditionError, ConvergenceError, DomainError
from .fredholm import build_grid, det_identity_plus, fredholm_det
from .hermite import mehler_M
from .kernels import KernelHandle, kernel_finite
from .qseries import ModelParams, check_q, log_qpochhammer, qpochhammer
from .regions import RegionSet, as_region

logger = logging.getLogger(__name__)

ComplexFn = Callable[[np.ndarray], np.ndarray]

CERTIFICATE_TOL = 1e-12
SERIES_TOL = 1e-16
SERIES_MAX_TERMS = 2000
MB_STEP = 0.05
MB_DELTA = 0.5
MB_DECAY_LOG = 37.0  # e^{-37} < 1e-16
MB_ARG_MARGIN = 0.05
SEPARATION_POWERS = 60
CIRCLE_SHRINK = 0.4
MODES = ("series", "mellin_barnes")
VARIANTS = ("main", "alt")


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ContourConditionError(f"Circle radius must be positive, got {self.radius}")

    def nodes(self, order: int) -> Tuple[np.ndarray, np.ndarray]:
        """Trapezoid nodes eta_j and weights for the measure d eta/(2 pi i), positive orientation."""
        offsets = self.radius * np.exp(2j * np.pi * np.arange(order) / order)
        return self.center + offsets, offsets / order

    def encloses(self, point: complex) -> bool:
        return abs(complex(point) - self.center) < self.radius

    def scaled(self, factor: float) -> "Circle":
        return Circle(self.center * factor, self.radius * factor)


def circles_intersect(first: Circle, second: Circle) -> bool:
    """Two circles meet iff |r1 - r2| <= |c1 - c2| <= r1 + r2."""
    distance = abs(first.center - second.center)
    return abs(first.radius - second.radius) <= distance <= first.radius + second.radius


@dataclass(frozen=True)
class ContourKernelConfig:
    """f with its poles, q, the two contours and (optionally) log g with f(eta) = g(eta)/g(q eta)."""

    f: ComplexFn
    poles: Tuple[complex, ...]
    q: float
    gamma_0A: Circle
    gamma_A: Tuple[Circle, ...]
    log_g: Optional[ComplexFn] = field(default=None, repr=False)
    name: str = "custom"
    # largest |eta| at which log g stays analytic under eta -> q^s eta, Re s >= 1/2
    mb_limit: float = math.inf

    @classmethod
    def build(
        cls,
        f: ComplexFn,
        poles: Sequence[complex],
        q: float,
        log_g: Optional[ComplexFn] = None,
        name: str = "custom",
        mb_limit: float = math.inf,
    ) -> "ContourKernelConfig":
        q = check_q(q)
        unique = _unique_poles(poles)
        value = complex(np.asarray(f(np.array([0j]))).ravel()[0])
        if abs(value - 1.0) >= CERTIFICATE_TOL:
            raise DomainError(f"f(0) = {value} but the identities need f(0) = 1")
        config = cls(f, unique, q, _outer_circle(unique, q), tuple(_pole_circles(unique, q)), log_g, name, mb_limit)
        check_contours(config)
        return config


def _unique_poles(poles: Sequence[complex]) -> Tuple[complex, ...]:
    unique = []
    for pole in poles:
        pole = complex(pole)
        if pole == 0:
            raise DomainError("f may not have a pole at 0")
        if not any(abs(pole - seen) < 1e-12 * max(1.0, abs(seen)) for seen in unique):
            unique.append(pole)
    return tuple(unique)


def _outer_circle(poles: Sequence[complex], q: float) -> Circle:
    """Circle about 0 with radius sqrt(max|a| min|a|/q): the poles inside, q^{-1} times them outside."""
    if not poles:
        return Circle(0j, 1.0)
    moduli = [abs(p) for p in poles]
    largest, smallest = max(moduli), min(moduli)
    if largest >= smallest / q:
        raise ContourConditionError(
            f"No circle about 0 separates the poles from their q^-1 images (max|a|={largest:g}, min|a|/q={smallest / q:g})"
        )
    return Circle(0j, math.sqrt(largest * smallest / q))


def _pole_circles(poles: Sequence[complex], q: float) -> list:
    root = math.sqrt(q)
    circles = []
    for index, center in enumerate(poles):
        radius = 0.5 * abs(center) * (1.0 - root) / (1.0 + root)
        for other_index, other in enumerate(poles):
            if other_index == index:
                continue
            for k in range(SEPARATION_POWERS + 1):
                gap = min(abs(center - q ** k * other), abs(center - other / q ** k))
                radius = min(radius, CIRCLE_SHRINK * gap)
        circles.append(Circle(center, radius))
    return circles


def check_contours(config: ContourKernelConfig) -> None:
    """Raise ContourConditionError unless Gamma_0A and Gamma_A satisfy the separation conditions."""
    q, outer = config.q, config.gamma_0A
    for pole in config.poles:
        if not outer.encloses(pole):
            raise ContourConditionError(f"Gamma_0A does not enclose the pole {pole}")
        if outer.encloses(pole / q) or abs(abs(pole / q) - outer.radius) < 1e-12:
            raise ContourConditionError(f"Gamma_0A encloses q^-1 times the pole {pole}")
    if circles_intersect(outer, outer.scaled(q)):
        raise ContourConditionError("Gamma_0A meets q Gamma_0A")
    for circle in config.gamma_A:
        if circle.encloses(0j):
            raise ContourConditionError(f"Gamma_A circle about {circle.center} encloses 0")
        for pole in config.poles:
            if pole != circle.center and circle.encloses(pole):
                raise ContourConditionError(f"Gamma_A circle about {circle.center} encloses the pole {pole}")
    for k in range(1, SEPARATION_POWERS + 1):
        for first in config.gamma_A:
            for second in config.gamma_A:
                if circles_intersect(first, second.scaled(q ** k)):
                    raise ContourConditionError(
                        f"Gamma_A circle about {first.center} meets q^{k} times the circle about {second.center}"
                    )


def _contour_nodes(circles: Sequence[Circle], order: int) -> Tuple[np.ndarray, np.ndarray]:
    if not circles:
        return np.empty(0, dtype=complex), np.empty(0, dtype=complex)
    pairs = [circle.nodes(order) for circle in circles]
    return np.concatenate([p[0] for p in pairs]), np.concatenate([p[1] for p in pairs])


def m_contour_kernel(config: ContourKernelConfig) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """M(xi, eta) = f(eta)/(xi - q eta), for broadcast complex arrays."""

    def kernel(xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
        xi, eta = np.broadcast_arrays(np.asarray(xi, dtype=complex), np.asarray(eta, dtype=complex))
        denominator = xi - config.q * eta
        if np.any(np.abs(denominator) < 1e-14):
            raise ContourConditionError("xi = q eta on a node pair; the contours collide")
        return np.asarray(config.f(eta)) / denominator

    return kernel


def _series_matrix(config: ContourKernelConfig, z: complex, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    q = config.q
    product = np.ones(eta.size, dtype=complex)
    scaled = eta.copy()
    total = np.zeros((xi.size, eta.size), dtype=complex)
    power = 1.0 + 0j
    for k in range(1, SERIES_MAX_TERMS + 1):
        product = product * np.asarray(config.f(scaled))
        scaled = scaled * q
        power = power * z
        denominator = xi[:, None] - scaled[None, :]
        term = power * product[None, :] / denominator
        total += (-1) ** (k + 1) * term
        size = abs(power) * float(np.max(np.abs(product))) * float(np.max(1.0 / np.abs(denominator)))
        if size < SERIES_TOL:
            logger.debug("%s: K series stopped after %d terms", config.name, k)
            return total
    raise ConvergenceError(
        f"K series for '{config.name}' did not fall below {SERIES_TOL:g} in {SERIES_MAX_TERMS} terms",
        {"z": z, "last_term": size},
    )


def _mellin_barnes_matrix(config: ContourKernelConfig, z: complex, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    if config.log_g is None:
        raise ContinuationError(f"Preset '{config.name}' supplies no continuation g for the Mellin-Barnes kernel")
    angle = abs(cmath.phase(z))
    if angle > math.pi - MB_ARG_MARGIN:
        raise DomainError(f"|arg z| = {angle:.4f} is too close to pi for the Mellin-Barnes integral")
    if eta.size and float(np.max(np.abs(eta))) * math.sqrt(config.q) >= config.mb_limit:
        raise ContinuationError(f"Preset '{config.name}': g(q^s eta) is singular on the integration line")
    reach = MB_DECAY_LOG / (math.pi - angle)
    y = np.arange(-reach, reach + MB_STEP / 2, MB_STEP)
    s = MB_DELTA + 1j * y
    log_z = cmath.log(z)
    # pi z^s / sin(pi s) with sin(pi (1/2 + i y)) = cosh(pi y)
    weights = MB_STEP / (2.0 * math.pi) * np.pi * np.exp(s * log_z) / np.cosh(np.pi * y)
    shifted = eta[:, None] * np.exp(s[None, :] * math.log(config.q))
    ratio = np.exp(np.asarray(config.log_g(eta))[:, None] - np.asarray(config.log_g(shifted)))
    weighted = ratio * weights[None, :]
    return np.array([np.sum(weighted / (point - shifted), axis=1) for point in xi])


def k_contour_kernel(
    config: ContourKernelConfig,
    z: complex,
    mode: str = "series",
) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """K(xi, eta; z) as a function building the matrix K(xi_i, eta_j) for 1-d node arrays."""
    z = complex(z)
    if mode not in MODES:
        raise DomainError(f"Unknown mode '{mode}', expected one of {MODES}")
    if mode == "series" and abs(z) >= 1.0:
        raise DomainError(f"The K series needs |z| < 1, got |z| = {abs(z):g}")

    def matrix(xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=complex).ravel()
        eta = np.asarray(eta, dtype=complex).ravel()
        if z == 0 or xi.size == 0 or eta.size == 0:
            return np.zeros((xi.size, eta.size), dtype=complex)
        if mode == "series":
            return _series_matrix(config, z, xi, eta)
        return _mellin_barnes_matrix(config, z, xi, eta)

    return matrix


def _nystrom(kernel_matrix: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return kernel_matrix * weights[None, :]


class IdentityCheck(NamedTuple):
    lhs: complex
    rhs: complex
    gap: float


def verify_identity(
    config: ContourKernelConfig,
    z: complex,
    order: int = 64,
    mode: str = "series",
    variant: str = "main",
) -> IdentityCheck:
    """Both sides of the contour identity by Nystrom discretization on the circles."""
    if variant not in VARIANTS:
        raise DomainError(f"Unknown variant '{variant}', expected one of {VARIANTS}")
    z = complex(z)
    outer_nodes, outer_weights = _contour_nodes([config.gamma_0A], order)
    inner_nodes, inner_weights = _contour_nodes(config.gamma_A, order)
    m_kernel = m_contour_kernel(config)
    k_kernel = k_contour_kernel(config, z, mode)
    prefactor = complex(qpochhammer(-z, config.q))
    if variant == "main":
        lhs = det_identity_plus(z * _nystrom(m_kernel(outer_nodes[:, None], outer_nodes[None, :]), outer_weights), "plus")
        rhs = prefactor * det_identity_plus(_nystrom(k_kernel(inner_nodes, inner_nodes), inner_weights), "plus")
    else:
        lhs = det_identity_plus(z * _nystrom(m_kernel(inner_nodes[:, None], inner_nodes[None, :]), inner_weights), "minus")
        rhs = prefactor * det_identity_plus(_nystrom(k_kernel(outer_nodes, outer_nodes), outer_weights), "minus")
    check = IdentityCheck(lhs, rhs, abs(lhs - rhs))
    logger.debug("%s identity (%s, %s) at z=%s: gap %.3e", config.name, variant, mode, z, check.gap)
    return check


def _log_poles(eta: np.ndarray, poles: Sequence[complex], q: float) -> np.ndarray:
    """-sum_a log (eta/a; q)_inf."""
    total = np.zeros(np.shape(eta), dtype=complex)
    for a in poles:
        total = total - np.asarray(log_qpochhammer(np.asarray(eta) / a, q))
    return total


def _pole_product(eta: np.ndarray, poles: Sequence[float]) -> np.ndarray:
    value = np.ones(np.shape(eta), dtype=complex)
    for a in poles:
        value = value * a / (a - eta)
    return value


def _positive(values: Sequence[float], what: str) -> Tuple[float, ...]:
    values = tuple(float(v) for v in values)
    if not values or any(not v > 0 for v in values):
        raise DomainError(f"{what} must be a non-empty list of positive numbers, got {values}")
    return values


def single_pole(a: float = 1.0, q: float = 0.3) -> ContourKernelConfig:
    """f(eta) = a/(a - eta), g(eta) = 1/(eta/a; q)_inf."""
    (a,) = _positive([a], "a")

    def f(eta: np.ndarray) -> np.ndarray:
        return a / (a - np.asarray(eta, dtype=complex))

    def log_g(eta: np.ndarray) -> np.ndarray:
        return _log_poles(np.asarray(eta, dtype=complex), [a], q)

    return ContourKernelConfig.build(f, [a], q, log_g, name=f"single_pole(a={a:g})")


def qtasep(a: Sequence[float], t: float, q: float) -> ContourKernelConfig:
    """f(eta) = prod a_m/(a_m - eta) e^{(q-1) t eta}, g(eta) = e^{-t eta} prod 1/(eta/a_m; q)_inf."""
    rates = _positive(a, "a")
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")

    def f(eta: np.ndarray) -> np.ndarray:
        eta = np.asarray(eta, dtype=complex)
        return _pole_product(eta, rates) * np.exp((q - 1.0) * t * eta)

    def log_g(eta: np.ndarray) -> np.ndarray:
        eta = np.asarray(eta, dtype=complex)
        return -t * eta + _log_poles(eta, rates, q)

    return ContourKernelConfig.build(f, rates, q, log_g, name="qtasep")


def qtazrp(b: Sequence[float], t: float, q: float) -> ContourKernelConfig:
    """f(eta) = prod b_k/(b_k - eta) e^{-t eta}, g(eta) = e^{-t eta/(1-q)} prod 1/(eta/b_k; q)_inf."""
    rates = _positive(b, "b")
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")

    def f(eta: np.ndarray) -> np.ndarray:
        eta = np.asarray(eta, dtype=complex)
        return _pole_product(eta, rates) * np.exp(-t * eta)

    def log_g(eta: np.ndarray) -> np.ndarray:
        eta = np.asarray(eta, dtype=complex)
        return -t * eta / (1.0 - q) + _log_poles(eta, rates, q)

    return ContourKernelConfig.build(f, rates, q, log_g, name="qtazrp")


def whittaker(
    a: Sequence[float],
    alpha: Sequence[float],
    beta: Sequence[float],
    gamma: float,
    q: float,
) -> ContourKernelConfig:
    """f(eta) = prod a_m/(a_m - eta) prod (1 - alpha_i eta)(1 + q beta_i eta)/(1 + beta_i eta) e^{(q-1) gamma eta}."""
    rates = _positive(a, "a")
    alphas = tuple(float(v) for v in alpha)
    betas = tuple(float(v) for v in beta)
    if any(v < 0 for v in alphas + betas) or gamma < 0:
        raise DomainError("alpha, beta and gamma must be non-negative")
    poles = list(rates) + [-1.0 / b for b in betas if b > 0]

    def f(eta: np.ndarray) -> np.ndarray:
        eta = np.asarray(eta, dtype=complex)
        value = _pole_product(eta, rates) * np.exp((q - 1.0) * gamma * eta)
        for al in alphas:
            value = value * (1.0 - al * eta)
        for be in betas:
            value = value * (1.0 + q * be * eta) / (1.0 + be * eta)
        return value

    def log_g(eta: np.ndarray) -> np.ndarray:
        eta = np.asarray(eta, dtype=complex)
        value = -gamma * eta + _log_poles(eta, rates, q)
        for al in alphas:
            if al > 0:
                value = value + np.asarray(log_qpochhammer(al * eta, q))
        for be in betas:
            value = value - np.log(1.0 + be * eta)
        return value

    largest_alpha = max(alphas, default=0.0)
    limit = 1.0 / largest_alpha if largest_alpha > 0 else math.inf
    return ContourKernelConfig.build(f, poles, q, log_g, name="whittaker", mb_limit=limit)


def asep(tau: float, rho: float, x: int = 0, t: float = 0.0) -> ContourKernelConfig:
    """ASEP with asymmetry tau (the q of the identities) and Bernoulli density rho, theta = rho/(1 - rho).

    f(eta) = ((1 + eta)/(1 + eta/tau))^x exp(-(1-tau) t/(1+tau) (1/(1+eta/tau) - 1/(1+eta))) / (1 - eta/(theta tau)).
    For t > 0 the exponential factor has essential singularities at -tau (circled like a pole) and at -1,
    which lies outside both contours; the continuation g is attached only for t = 0.
    """
    q = check_q(tau)
    if not 0.0 < rho < 1.0:
        raise DomainError(f"rho must lie in (0, 1), got {rho}")
    if int(x) != x or x < 0:
        raise DomainError(f"x must be a non-negative integer, got {x}")
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    x = int(x)
    theta = rho / (1.0 - rho)
    drift = (1.0 - q) * t / (1.0 + q)
    poles = [theta * q]
    if x > 0 or t > 0:
        poles.append(-q)

    def f(eta: np.ndarray) -> np.ndarray:
        eta = np.asarray(eta, dtype=complex)
        value = ((1.0 + eta) / (1.0 + eta / q)) ** x / (1.0 - eta / (theta * q))
        if t > 0:
            value = value * np.exp(-drift * (1.0 / (1.0 + eta / q) - 1.0 / (1.0 + eta)))
        return value

    def log_g(eta: np.ndarray) -> np.ndarray:
        eta = np.asarray(eta, dtype=complex)
        return -x * np.log(1.0 + eta / q) - np.asarray(log_qpochhammer(eta / (theta * q), q))

    return ContourKernelConfig.build(
        f, poles, q, log_g if t == 0 else None, name=f"asep(x={x}, t={t:g})"
    )


PRESETS: Dict[str, Callable[..., ContourKernelConfig]] = {
    "single_pole": single_pole,
    "whittaker": whittaker,
    "qtasep": qtasep,
    "qtazrp": qtazrp,
    "asep": asep,
}


def random_preset_params(model: str, generator: np.random.Generator) -> Dict[str, Any]:
    """Admissible parameters for a preset with pole moduli within a factor 4/3 and q <= 0.4.

    That keeps sqrt(q max|a| / min|a|) below 0.75, so 96 trapezoid nodes per circle
    resolve both identities far below 1e-6.
    """
    q = float(generator.uniform(0.25, 0.4))
    scale = float(generator.uniform(0.8, 1.2))

    def spread() -> float:
        return scale * float(generator.uniform(0.75, 0.9))

    if model == "single_pole":
        return dict(a=float(generator.uniform(0.5, 2.0)), q=q)
    if model == "qtasep":
        return dict(a=(scale, spread()), t=float(generator.uniform(0.0, 1.0)), q=q)
    if model == "qtazrp":
        rates = (scale,) if generator.integers(2) == 0 else (scale, spread())
        return dict(b=rates, t=float(generator.uniform(0.0, 1.0)), q=q)
    if model == "whittaker":
        return dict(
            a=(scale,),
            alpha=(float(generator.uniform(0.0, 0.5)),),
            beta=(1.0 / spread(),),
            gamma=float(generator.uniform(0.0, 1.0)),
            q=q,
        )
    if model == "asep":
        return dict(tau=q, rho=float(generator.uniform(0.45, 0.55)), x=int(generator.integers(3)), t=0.0)
    raise DomainError(f"Unknown model '{model}', expected one of {sorted(PRESETS)}")


def preset(model: str, **model_params) -> ContourKernelConfig:
    try:
        factory = PRESETS[model]
    except KeyError:
        raise DomainError(f"Unknown model '{model}', expected one of {sorted(PRESETS)}") from None
    return factory(**model_params)


def mehler_identity(z: complex, q: float, order: int = 160) -> IdentityCheck:
    """det(I + z M(q)) on L^2(R) against (-z; q)_inf, M the Mehler kernel."""
    q = check_q(q)
    z = complex(z)
    bound = math.sqrt(80.0 * (1.0 + q) / (1.0 - q))
    grid = build_grid((-bound, bound), order)
    root = np.sqrt(grid.weights)
    matrix = root[:, None] * mehler_M(grid.nodes[:, None], grid.nodes[None, :], q) * root[None, :]
    lhs = det_identity_plus(z * matrix, "plus")
    rhs = complex(qpochhammer(-z, q))
    return IdentityCheck(lhs, rhs, abs(lhs - rhs))


def mehler_factorization(
    z: complex,
    q: float,
    region: Union[RegionSet, str],
    order: int = 160,
    kernel_tol: float = 1e-15,
) -> IdentityCheck:
    """det(I + z M chi_A) against det(I + z M) det(I - K(z) chi_{A^c}) on L^2(R)."""
    q = check_q(q)
    z = complex(z)
    region = as_region(region)
    bound = math.sqrt(80.0 * (1.0 + q) / (1.0 - q))

    def scaled_mehler(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return z * np.asarray(mehler_M(x, y, q), dtype=complex)

    handle = KernelHandle(scaled_mehler, symmetric=True, name=f"mehler(q={q:g})")
    inside = region.clipped(bound)
    lhs = fredholm_det(handle, inside, order, sign="plus") if inside else 1.0 + 0j
    whole = fredholm_det(handle, [(-bound, bound)], order, sign="plus")
    complement = region.complement(bound)
    tail = fredholm_det(kernel_finite(z, ModelParams(1, q), kernel_tol), complement, order) if complement else 1.0 + 0j
    rhs = whole * tail
    return IdentityCheck(lhs, rhs, abs(lhs - rhs))
