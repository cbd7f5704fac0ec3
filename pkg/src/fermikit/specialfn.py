"""Airy function Ai and Li_{1/2} on the negative real axis."""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate, special

from .errors import DomainError

AI_ZERO = 0.355028053887817239  # Ai(0) = 3^{-2/3} / Gamma(2/3)
AI_PRIME_ZERO = -0.258819403792806798  # Ai'(0) = -3^{-1/3} / Gamma(1/3)
MACLAURIN_TERMS = 40
LOG_U_SERIES = 40.0
_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class AiryEvalPolicy:
    """Validated range and branch switch for Airy evaluation."""

    taylor_cutoff: float = 8.0
    asymptotic_terms: int = 12
    lower: float = -30.0
    upper: float = 200.0

    def __post_init__(self) -> None:
        if self.taylor_cutoff <= 0:
            raise DomainError(f"taylor_cutoff must be positive, got {self.taylor_cutoff}")
        if self.asymptotic_terms < 1:
            raise DomainError(f"asymptotic_terms must be positive, got {self.asymptotic_terms}")
        if not self.lower < self.upper:
            raise DomainError("Airy range must satisfy lower < upper")

    def check(self, x: np.ndarray) -> None:
        if x.size and (np.min(x) < self.lower or np.max(x) > self.upper or not np.all(np.isfinite(x))):
            raise DomainError(
                f"Airy argument outside validated range [{self.lower}, {self.upper}]: "
                f"min={np.min(x)}, max={np.max(x)}"
            )


DEFAULT_AIRY_POLICY = AiryEvalPolicy()
# integrals over shifted arguments Ai(x - r) reach far into the oscillatory side
KERNEL_AIRY_POLICY = AiryEvalPolicy(lower=-2000.0)


def _scalar_or_array(value: np.ndarray, like):
    return float(value) if np.ndim(like) == 0 else value


def airy_ai(x, policy: AiryEvalPolicy = DEFAULT_AIRY_POLICY):
    xs = np.asarray(x, dtype=float)
    policy.check(xs)
    ai, _, _, _ = special.airy(xs)
    return _scalar_or_array(ai, x)


def airy_ai_prime(x, policy: AiryEvalPolicy = DEFAULT_AIRY_POLICY):
    xs = np.asarray(x, dtype=float)
    policy.check(xs)
    _, aip, _, _ = special.airy(xs)
    return _scalar_or_array(aip, x)


def airy_ai_pair(x, policy: AiryEvalPolicy = DEFAULT_AIRY_POLICY):
    """(Ai(x), Ai'(x)) from a single evaluation."""
    xs = np.asarray(x, dtype=float)
    policy.check(xs)
    ai, aip, _, _ = special.airy(xs)
    return _scalar_or_array(ai, x), _scalar_or_array(aip, x)


def _asymptotic_coefficients(count: int) -> np.ndarray:
    u = np.empty(count)
    u[0] = 1.0
    for k in range(1, count):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
    return u


def _maclaurin(x: float) -> float:
    cube = x ** 3
    f_term, g_term = 1.0, x
    f_sum, g_sum = f_term, g_term
    for k in range(1, MACLAURIN_TERMS):
        f_term *= cube / ((3 * k - 1) * (3 * k))
        g_term *= cube / ((3 * k) * (3 * k + 1))
        f_sum += f_term
        g_sum += g_term
    return AI_ZERO * f_sum + AI_PRIME_ZERO * g_sum


def _asymptotic(x: float, terms: int) -> float:
    u = _asymptotic_coefficients(2 * terms)
    if x > 0:
        zeta = 2.0 / 3.0 * x ** 1.5
        series = sum((-1) ** k * u[k] / zeta ** k for k in range(terms))
        return math.exp(-zeta) / (2.0 * _SQRT_PI * x ** 0.25) * series
    y = -x
    zeta = 2.0 / 3.0 * y ** 1.5
    even = sum((-1) ** k * u[2 * k] / zeta ** (2 * k) for k in range(terms))
    odd = sum((-1) ** k * u[2 * k + 1] / zeta ** (2 * k + 1) for k in range(terms))
    phase = zeta + math.pi / 4.0
    return (math.sin(phase) * even - math.cos(phase) * odd) / (_SQRT_PI * y ** 0.25)


def airy_ai_expansion(x: float, policy: AiryEvalPolicy = DEFAULT_AIRY_POLICY) -> float:
    """Ai from its 40-term Maclaurin series for |x| <= taylor_cutoff, else the asymptotic series.

    An independent check on airy_ai. The Maclaurin branch loses digits to cancellation
    for positive x beyond about 3.
    """
    x = float(x)
    policy.check(np.asarray(x))
    if abs(x) <= policy.taylor_cutoff:
        return _maclaurin(x)
    return _asymptotic(x, policy.asymptotic_terms)


def _check_polylog_argument(us: np.ndarray) -> None:
    if us.size and (not np.all(np.isfinite(us)) or np.min(us) <= 0):
        raise DomainError("polylog_half_neg requires u > 0")


def _fermi_dirac_half(log_u: float) -> float:
    if log_u < -LOG_U_SERIES:
        # e^{-s^2} dominates the Fermi factor; int_0^inf u e^{-s^2} ds (1 - u e^{-s^2}/sqrt 2)
        u = math.exp(log_u)
        return 0.5 * _SQRT_PI * u * (1.0 - u / math.sqrt(2.0))

    def integrand(s: float) -> float:
        return float(special.expit(log_u - s * s))

    options = dict(epsabs=0.0, epsrel=1e-12, limit=200)
    if log_u > 0.0:
        edge = math.sqrt(log_u)
        head, _ = integrate.quad(integrand, 0.0, edge, **options)
        tail, _ = integrate.quad(integrand, edge, np.inf, **options)
        return head + tail
    value, _ = integrate.quad(integrand, 0.0, np.inf, **options)
    return value


def polylog_half_neg(u):
    """Li_{1/2}(-u) = -(2/sqrt(pi)) int_0^inf ds / (e^{s^2}/u + 1), for u > 0."""
    us = np.asarray(u, dtype=float)
    _check_polylog_argument(us)
    values = np.array([-2.0 / _SQRT_PI * _fermi_dirac_half(math.log(float(v))) for v in us.ravel()])
    return _scalar_or_array(values.reshape(us.shape), u)


def polylog_half_neg_series(u):
    """Li_{1/2}(-u) = sum_{k>=1} (-u)^k / sqrt(k), for 0 < u < 1."""
    us = np.asarray(u, dtype=float)
    _check_polylog_argument(us)
    if us.size and np.max(us) >= 1.0:
        raise DomainError("polylog_half_neg_series converges only for u < 1")
    largest = float(np.max(us)) if us.size else 0.5
    terms = max(1, int(math.ceil(math.log(1e-18) / math.log(largest)))) if largest > 0 else 1
    k = np.arange(1, terms + 1, dtype=float)
    values = ((-us[..., None]) ** k / np.sqrt(k)).sum(axis=-1)
    return _scalar_or_array(values, u)


def polylog_half_neg_log(log_u):
    """Li_{1/2}(-e^{log_u}); accepts arguments whose exponential would underflow."""
    logs = np.asarray(log_u, dtype=float)
    if logs.size and not np.all(np.isfinite(logs)):
        raise DomainError("polylog_half_neg_log requires a finite log argument")
    values = np.array([-2.0 / _SQRT_PI * _fermi_dirac_half(float(v)) for v in logs.ravel()])
    return _scalar_or_array(values.reshape(logs.shape), log_u)
