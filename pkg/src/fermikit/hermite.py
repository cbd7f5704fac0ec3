"""Harmonic-oscillator eigenfunctions, Mehler propagators and the closed joint density.

phi_k(x) = (sqrt(2 pi) k!)^{-1/2} H_k(x) e^{-x^2/4} with H_k the monic Hermite
polynomials orthogonal for e^{-x^2/2}; energies are k + 1/2.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List
import math

import numpy as np

from .errors import DomainError
from .qseries import ModelParams, check_q, log_partition_Z

LN2 = math.log(2.0)
LOG2_SEED = -0.25 * math.log2(2.0 * math.pi)
PLAIN_X_LIMIT = 52.0
PLAIN_K_LIMIT = 50_000
_RESCALE = 2.0 ** 600

# uniform bound |phi_k(x)| <= KAPPA / (2 pi)^{1/4}
KAPPA = 1.086435
PHI_BOUND = KAPPA / (2.0 * math.pi) ** 0.25


@dataclass(frozen=True)
class ScaledReal:
    """mantissa * 2**exponent with |mantissa| in [1, 2), or the zero (0.0, 0)."""

    mantissa: float
    exponent: int

    @classmethod
    def normalized(cls, mantissa: float, exponent: int = 0) -> "ScaledReal":
        if mantissa == 0.0 or not math.isfinite(mantissa):
            return cls(0.0, 0)
        frac, shift = math.frexp(mantissa)
        return cls(frac * 2.0, int(exponent) + shift - 1)

    @property
    def value(self) -> float:
        try:
            return math.ldexp(self.mantissa, self.exponent)
        except OverflowError:
            return math.copysign(math.inf, self.mantissa)

    @property
    def log_abs(self) -> float:
        if self.mantissa == 0.0:
            return -math.inf
        return math.log(abs(self.mantissa)) + self.exponent * LN2

    def __float__(self) -> float:
        return self.value


def phi_column(k_max: int, x: float) -> List[ScaledReal]:
    """phi_0(x), ..., phi_{k_max}(x) from one sweep of the normalized recurrence."""
    if k_max < 0:
        raise DomainError(f"k_max must be nonnegative, got {k_max}")
    x = float(x)
    log2_seed = -(x * x / 4.0) / LN2 + LOG2_SEED
    exponent = math.floor(log2_seed)
    prev = 2.0 ** (log2_seed - exponent)
    column = [ScaledReal.normalized(prev, exponent)]
    if k_max == 0:
        return column
    cur = x * prev
    column.append(ScaledReal.normalized(cur, exponent))
    for k in range(1, k_max):
        prev, cur = cur, (x * cur - math.sqrt(k) * prev) / math.sqrt(k + 1)
        if abs(cur) > _RESCALE:
            shift = math.frexp(cur)[1]
            prev = math.ldexp(prev, -shift)
            cur = math.ldexp(cur, -shift)
            exponent += shift
        column.append(ScaledReal.normalized(cur, exponent))
    return column


def phi(k: int, x: float) -> ScaledReal:
    if k < 0:
        raise DomainError(f"k must be nonnegative, got {k}")
    return phi_column(k, x)[k]


@dataclass(frozen=True)
class HermiteBasis:
    """Vectorized evaluation of phi_0..phi_{max_index} on a grid of points.

    mode "plain" runs the recurrence in doubles and is only admitted for
    |x| <= 52; "scaled" carries a per-point binary exponent; "auto" picks.
    """

    max_index: int
    mode: str = "auto"

    def __post_init__(self) -> None:
        if self.max_index < 0:
            raise DomainError(f"max_index must be nonnegative, got {self.max_index}")
        if self.mode not in ("auto", "plain", "scaled"):
            raise DomainError(f"Unknown evaluation mode '{self.mode}'")

    def resolve_mode(self, xs: np.ndarray) -> str:
        widest = float(np.max(np.abs(xs))) if xs.size else 0.0
        if self.mode == "plain":
            if widest > PLAIN_X_LIMIT:
                raise DomainError(f"plain mode certified only for |x| <= {PLAIN_X_LIMIT}, got {widest}")
            return "plain"
        if self.mode == "scaled" or widest > PLAIN_X_LIMIT or self.max_index > PLAIN_K_LIMIT:
            return "scaled"
        return "plain"

    def evaluate(self, xs) -> np.ndarray:
        points = np.asarray(xs, dtype=float).ravel()
        if self.resolve_mode(points) == "plain":
            return self._plain(points)
        return self._scaled(points)

    def _plain(self, x: np.ndarray) -> np.ndarray:
        k_max = self.max_index
        out = np.empty((k_max + 1, x.size))
        out[0] = (2.0 * math.pi) ** -0.25 * np.exp(-0.25 * x * x)
        if k_max >= 1:
            out[1] = x * out[0]
        roots = np.sqrt(np.arange(k_max + 1, dtype=float))
        for k in range(1, k_max):
            out[k + 1] = (x * out[k] - roots[k] * out[k - 1]) / roots[k + 1]
        return out

    def _scaled(self, x: np.ndarray) -> np.ndarray:
        k_max = self.max_index
        out = np.empty((k_max + 1, x.size))
        log2_seed = -(x * x / 4.0) / LN2 + LOG2_SEED
        exponent = np.floor(log2_seed).astype(np.int64)
        prev = np.exp2(log2_seed - exponent)
        out[0] = np.ldexp(prev, exponent)
        if k_max == 0:
            return out
        cur = x * prev
        out[1] = np.ldexp(cur, exponent)
        roots = np.sqrt(np.arange(k_max + 1, dtype=float))
        for k in range(1, k_max):
            prev, cur = cur, (x * cur - roots[k] * prev) / roots[k + 1]
            big = np.abs(cur) > _RESCALE
            if big.any():
                shift = np.frexp(cur[big])[1].astype(np.int64)
                prev[big] = np.ldexp(prev[big], -shift)
                cur[big] = np.ldexp(cur[big], -shift)
                exponent[big] += shift
            out[k + 1] = np.ldexp(cur, exponent)
        return out


def phi_matrix(k_max: int, xs, mode: str = "auto") -> np.ndarray:
    """Array of shape (k_max + 1, len(xs)) with entry [k, i] = phi_k(xs[i])."""
    return HermiteBasis(k_max, mode).evaluate(xs)


def propagator_E(x, y, tau, sigma):
    """E(x, y; tau, sigma) = sum_k phi_k(x) phi_k(y) e^{k(tau - sigma)} for tau < sigma, else 0."""
    x, y, tau, sigma = np.broadcast_arrays(
        np.asarray(x, dtype=float), np.asarray(y, dtype=float),
        np.asarray(tau, dtype=float), np.asarray(sigma, dtype=float),
    )
    gap = tau - sigma
    active = gap < 0
    safe_gap = np.where(active, gap, -1.0)
    r = np.exp(safe_gap)
    one_minus = -np.expm1(2.0 * safe_gap)
    exponent = (-(1.0 + r * r) * (x * x + y * y) + 4.0 * r * x * y) / (4.0 * one_minus)
    value = np.where(active, np.exp(exponent) / np.sqrt(2.0 * math.pi * one_minus), 0.0)
    return float(value) if value.ndim == 0 else value


def mehler_M(x, y, q: float):
    """M(x, y; q) = sum_k q^k phi_k(x) phi_k(y) in closed form."""
    q = check_q(q)
    return propagator_E(x, y, math.log(q), 0.0)


def mehler_series(x, y, r: float, terms: int = 400):
    """Truncated series sum_{k<terms} r^k phi_k(x) phi_k(y); an independent check on mehler_M."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    xs, ys = np.broadcast_arrays(xs, ys)
    weights = r ** np.arange(terms, dtype=float)
    value = np.einsum("k,ki,ki->i", weights, phi_matrix(terms - 1, xs.ravel()), phi_matrix(terms - 1, ys.ravel()))
    value = value.reshape(xs.shape)
    return float(value[0]) if np.ndim(x) == 0 and np.ndim(y) == 0 else value


def joint_density(xs, params: ModelParams) -> float:
    """Closed-form particle density P_n(x_1, ..., x_n), normalized to one on R^n.

    Uses det(e^{q x_j x_k/(1-q^2)}) = prod_j e^{q x_j^2/(1-q^2)} det(e^{-q (x_j-x_k)^2/(2(1-q^2))})
    so that no matrix entry exceeds one.
    """
    points = np.asarray(xs, dtype=float).ravel()
    n, q = params.n, params.q
    if points.size != n:
        raise DomainError(f"joint_density needs {n} coordinates, got {points.size}")
    spread = 1.0 - q * q
    log_prefactor = (
        0.5 * n * math.log(q)
        - log_partition_Z(params)
        - 0.5 * n * math.log(2.0 * math.pi * spread)
        - math.lgamma(n + 1)
    )
    gaussian = -(1.0 - q) * float(np.sum(points * points)) / (2.0 * (1.0 + q))
    diffs = points[:, None] - points[None, :]
    sign, log_det = np.linalg.slogdet(np.exp(-q * diffs * diffs / (2.0 * spread)))
    if sign == 0:
        return 0.0
    return float(sign * math.exp(log_prefactor + gaussian + log_det))
