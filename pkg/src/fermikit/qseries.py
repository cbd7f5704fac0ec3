"""q-analogue scalar functions: q-Pochhammer symbols, q-binomials, Z_n(q), F(z).

Every product is accumulated as a sum of complex logarithms so that the large
prefactors q^{-n(n-1)/2} and the tiny weights q^{n^2/2} never leave the
representable range.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union
import math

import numpy as np

from .errors import DomainError

INF = math.inf

# infinite products stop once |a| q^k drops below this
PRODUCT_GUARD = 1e-17
THETA_GUARD = 1e-18
_CHUNK = 4096

ComplexLike = Union[complex, float, np.ndarray]


def check_q(q: float) -> float:
    q = float(q)
    if not math.isfinite(q) or not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in the open interval (0, 1), got {q!r}")
    return q


@dataclass(frozen=True)
class ModelParams:
    """Particle number n and Boltzmann parameter q = e^{-1/T}."""

    n: int
    q: float

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "q", check_q(self.q))

    @property
    def beta(self) -> float:
        """Imaginary-time period 1/T = -log q."""
        return -math.log(self.q)

    @property
    def temperature(self) -> float:
        return 1.0 / self.beta

    @classmethod
    def edge_scaling(cls, n: int, c: float) -> "ModelParams":
        """q = e^{-c n^{-1/3}}, the crossover regime at the right edge."""
        if c <= 0:
            raise DomainError(f"c must be positive, got {c!r}")
        return cls(n, math.exp(-c * n ** (-1.0 / 3.0)))

    @classmethod
    def bulk_scaling(cls, n: int, c: float) -> "ModelParams":
        """q = e^{-c/n}, the interpolating regime in the bulk."""
        if c <= 0:
            raise DomainError(f"c must be positive, got {c!r}")
        return cls(n, math.exp(-c / n))


def _as_output(value: np.ndarray, like: ComplexLike):
    if np.ndim(like) == 0:
        return complex(value)
    return value


def _term_count(max_abs_a: float, q: float) -> int:
    if max_abs_a == 0.0:
        return 1
    needed = math.log(PRODUCT_GUARD / max_abs_a) / math.log(q)
    return max(int(math.ceil(needed)), 0) + 1


def log_qpochhammer(a: ComplexLike, q: float, n: float = INF) -> ComplexLike:
    """Complex logarithm of (a; q)_n; the imaginary part carries the phase."""
    q = check_q(q)
    arr = np.asarray(a, dtype=complex)
    if n == INF:
        count = _term_count(float(np.max(np.abs(arr))) if arr.size else 0.0, q)
    else:
        if int(n) != n or n < 0:
            raise DomainError(f"n must be a nonnegative integer or INF, got {n!r}")
        count = int(n)

    total = np.zeros(arr.shape, dtype=complex)
    log_q = math.log(q)
    with np.errstate(divide="ignore"):
        for start in range(0, count, _CHUNK):
            powers = np.exp(log_q * np.arange(start, min(start + _CHUNK, count)))
            total = total + np.log1p(-arr[..., None] * powers).sum(axis=-1)
    return _as_output(total, a)


def qpochhammer(a: ComplexLike, q: float, n: float = INF) -> ComplexLike:
    """(a; q)_n = prod_{k<n} (1 - a q^k), with n = INF for the infinite product."""
    value = np.exp(np.asarray(log_qpochhammer(a, q, n)))
    return _as_output(value, a)


def _log_one_minus_power(j: np.ndarray, log_q: float) -> np.ndarray:
    # log(1 - q^j) without the cancellation of 1 - q^j for q near 1
    return np.log(-np.expm1(j * log_q))


def log_qfactorial(n: int, q: float) -> float:
    """log (q; q)_n for real q in (0, 1)."""
    if n == 0:
        return 0.0
    return float(_log_one_minus_power(np.arange(1, n + 1, dtype=float), math.log(q)).sum())


def qbinom(n: int, m: int, q: float) -> float:
    if int(n) != n or int(m) != m or n < 0 or m < 0:
        raise DomainError(f"qbinom needs nonnegative integers, got n={n!r}, m={m!r}")
    n, m = int(n), int(m)
    if m > n:
        raise DomainError(f"qbinom requires m <= n, got m={m}, n={n}")
    if q == 1.0:
        return float(math.comb(n, m))
    q = check_q(q)
    if m == 0 or m == n:
        return 1.0
    log_q = math.log(q)
    i = np.arange(m, dtype=float)
    log_value = _log_one_minus_power(n - i, log_q).sum() - _log_one_minus_power(i + 1, log_q).sum()
    return float(math.exp(log_value))


def log_partition_Z(params: ModelParams) -> float:
    return 0.5 * params.n ** 2 * math.log(params.q) - log_qfactorial(params.n, params.q)


def partition_Z(params: ModelParams) -> float:
    """Z_n(q) = q^{n^2/2} / (q; q)_n. Underflows to 0.0 for large n; use the log form there."""
    return math.exp(log_partition_Z(params))


def log_prefactor_F(z: ComplexLike, params: ModelParams) -> ComplexLike:
    zs = np.asarray(z, dtype=complex)
    if np.any(zs == 0):
        raise DomainError("F(z) is undefined at z = 0")
    n, q = params.n, params.q
    value = (
        -0.5 * n * (n - 1) * math.log(q)
        + log_qfactorial(n, q)
        + np.asarray(log_qpochhammer(-zs, q, INF))
        - n * np.log(zs)
    )
    return _as_output(value, z)


def prefactor_F(z: ComplexLike, params: ModelParams) -> ComplexLike:
    """F(z) = q^{-n(n-1)/2} (q;q)_n (-z;q)_inf / z^n, evaluated in log space."""
    return _as_output(np.exp(np.asarray(log_prefactor_F(z, params))), z)


def _theta_cutoff(largest: float, q: float) -> int:
    log_q = math.log(q)
    log_w = math.log(max(largest, 1e-300))
    target = math.log(THETA_GUARD)
    k = 1
    while 0.5 * k * (k - 1) * log_q + k * log_w >= target:
        k += 1
    return k


def theta_sum(w: ComplexLike, q: float) -> ComplexLike:
    """sum_{k in Z} q^{k(k-1)/2} w^k, equal to (-w;q)_inf (-q/w;q)_inf (q;q)_inf."""
    q = check_q(q)
    ws = np.asarray(w, dtype=complex)
    if np.any(ws == 0):
        raise DomainError("theta_sum is undefined at w = 0")
    moduli = np.abs(ws)
    largest = max(float(np.max(moduli)), q / float(np.min(moduli)))
    k_star = _theta_cutoff(largest, q)
    ks = np.arange(-k_star, k_star + 1, dtype=float)
    exponents = 0.5 * ks * (ks - 1) * math.log(q) + ks * np.log(ws)[..., None]
    return _as_output(np.exp(exponents).sum(axis=-1), w)


def prefactor_F_theta(theta: Union[float, np.ndarray], params: ModelParams):
    """F_n(theta; q) = (q;q)_n/(q;q)_inf * (-sqrt(q) e^{-i pi theta}; q)_n / (...)_inf.

    Computed as 1 / [(q^{n+1}; q)_inf (-q^{n+1/2} e^{-i pi theta}; q)_inf], which is
    O(1) for every theta and n.
    """
    thetas = np.asarray(theta, dtype=float)
    n, q = params.n, params.q
    head = complex(log_qpochhammer(q ** (n + 1), q, INF))
    tail = np.asarray(log_qpochhammer(-(q ** (n + 0.5)) * np.exp(-1j * np.pi * thetas), q, INF))
    return _as_output(np.exp(-(head + tail)), theta)


def theta_weight(theta: Union[float, np.ndarray], q: float):
    """sum_k q^{k^2/2} e^{i k pi theta}, the theta-sum at w = sqrt(q) e^{i pi theta}."""
    thetas = np.asarray(theta, dtype=float)
    value = np.asarray(theta_sum(math.sqrt(q) * np.exp(1j * np.pi * thetas), q))
    return _as_output(value, theta)
