"""Correlation kernels: the finite-n kernel, its edge scaling, the multi-time kernel and the limit kernels."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Optional, Tuple
import logging
import math

import numpy as np

from .errors import DomainError, PoleProximityError
from .fredholm import QuadratureGrid, panel_grid
from .hermite import KAPPA, phi_matrix, propagator_E
from .qseries import ModelParams
from .specialfn import KERNEL_AIRY_POLICY, airy_ai, airy_ai_pair, polylog_half_neg

logger = logging.getLogger(__name__)

POLE_GUARD = 1e-8
DEFAULT_TOL = 1e-15
MAX_LEVELS = 200_000
# |x - y| below this (relative) switches Christoffel-Darboux to the direct sum
CD_NEAR_DIAGONAL = 1e-5
AIRY_DIAGONAL = 1e-7
AIRY_TAIL = 16.0

Pointwise = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class KernelHandle:
    """A two-point kernel with its truncation hints.

    ``evaluate`` works elementwise on broadcast arrays; ``assemble`` (optional)
    builds the full matrix K(xs_i, ys_j) faster than broadcasting would.
    """

    evaluate: Pointwise
    domain: Tuple[float, float] = (-math.inf, math.inf)
    decay_hint: float = 0.0
    symmetric: bool = False
    name: str = "kernel"
    assemble: Optional[Pointwise] = field(default=None, repr=False)

    def __call__(self, x, y):
        value = self.evaluate(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        if np.ndim(x) == 0 and np.ndim(y) == 0:
            return complex(np.asarray(value).reshape(()))
        return value

    def matrix(self, xs, ys=None) -> np.ndarray:
        xs = np.asarray(xs, dtype=float).ravel()
        ys = xs if ys is None else np.asarray(ys, dtype=float).ravel()
        if self.assemble is not None:
            return self.assemble(xs, ys)
        return self.evaluate(xs[:, None], ys[None, :])


def _zero(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.zeros(np.broadcast(x, y).shape, dtype=complex)


ZERO_KERNEL = KernelHandle(_zero, symmetric=True, name="zero", decay_hint=math.inf)


@lru_cache(maxsize=32)
def _basis(k_max: int, points: Tuple[float, ...]) -> np.ndarray:
    values = phi_matrix(k_max, np.array(points))
    values.flags.writeable = False
    return values


def hermite_basis(k_max: int, xs: np.ndarray) -> np.ndarray:
    """phi_matrix with a small cache keyed on the node set; quadrature grids repeat across contour nodes."""
    return _basis(int(k_max), tuple(np.asarray(xs, dtype=float).ravel().tolist()))


def truncation_level(z_abs: float, ratio: float, tol: float, floor: int = 0) -> int:
    """Smallest K >= floor with 2 |z| ratio^K kappa^2 / (sqrt(2 pi) (1 - ratio)) < tol."""
    if z_abs == 0.0:
        return floor
    scale = 2.0 * z_abs * KAPPA ** 2 / (math.sqrt(2.0 * math.pi) * (1.0 - ratio))
    needed = math.log(tol / scale) / math.log(ratio)
    # the bound on 1/|1 + q^k z| needs |q^k z| <= 1/2
    half = math.log(0.5 / z_abs) / math.log(ratio)
    level = max(floor, int(math.ceil(max(needed, half, 0.0))))
    if level > MAX_LEVELS:
        raise DomainError(f"Kernel series needs {level} levels; beyond the supported {MAX_LEVELS}")
    return level


def kernel_coefficients(z: complex, q: float, k_max: int) -> np.ndarray:
    """a_k = q^k z / (1 + q^k z), k = 0..k_max, with the pole guard applied."""
    z = complex(z)
    k = np.arange(k_max + 1, dtype=float)
    if z == 0:
        return np.zeros(k.size, dtype=complex)
    denominators = 1.0 + np.exp(k * math.log(q) + np.log(z))
    close = np.flatnonzero(np.abs(denominators) < POLE_GUARD)
    if close.size:
        offender = int(close[0])
        raise PoleProximityError(f"z={z} lies within {POLE_GUARD:g} of the pole -q^-{offender}", offender)
    return 1.0 / (1.0 + np.exp(-(k * math.log(q) + np.log(z))))


def _series_kernel(coefficients: np.ndarray, name: str, decay: float, symmetric: bool) -> KernelHandle:
    k_max = coefficients.size - 1

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x, y = np.broadcast_arrays(x, y)
        px = hermite_basis(k_max, x.ravel())
        py = hermite_basis(k_max, y.ravel())
        return np.einsum("k,ki,ki->i", coefficients, px, py).reshape(x.shape)

    def assemble(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        px = hermite_basis(k_max, xs)
        py = px if ys is xs else hermite_basis(k_max, ys)
        return (px * coefficients[:, None]).T @ py

    return KernelHandle(evaluate, decay_hint=decay, symmetric=symmetric, name=name, assemble=assemble)


def _christoffel_darboux(n: int, xs: np.ndarray, ys: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """sum_{k<n} phi_k(x) phi_k(y) on the grid xs x ys, given phi rows 0..n."""
    if n == 0:
        return np.zeros((xs.size, ys.size))
    root = math.sqrt(n)
    diff = xs[:, None] - ys[None, :]
    near = np.abs(diff) < CD_NEAR_DIAGONAL * (1.0 + np.abs(xs)[:, None])
    safe = np.where(near, 1.0, diff)
    out = root * (np.outer(px[n], py[n - 1]) - np.outer(px[n - 1], py[n])) / safe
    if near.any():
        rows, cols = np.nonzero(near)
        out[rows, cols] = np.einsum("ki,ki->i", px[:n, rows], py[:n, cols])
    return out


def kernel_gue(n: int) -> KernelHandle:
    """Zero-temperature kernel sum_{k<n} phi_k(x) phi_k(y) in Christoffel-Darboux form."""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")

    def assemble(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return _christoffel_darboux(n, xs, ys, hermite_basis(n, xs), hermite_basis(n, ys))

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x, y = np.broadcast_arrays(x, y)
        flat_x, flat_y = x.ravel(), y.ravel()
        px, py = hermite_basis(n, flat_x), hermite_basis(n, flat_y)
        values = np.array([_christoffel_darboux(n, flat_x[i:i + 1], flat_y[i:i + 1], px[:, i:i + 1], py[:, i:i + 1])[0, 0]
                           for i in range(flat_x.size)])
        return values.reshape(x.shape)

    return KernelHandle(evaluate, symmetric=True, name=f"gue(n={n})", assemble=assemble)


def _split_kernel(z: complex, params: ModelParams, tol: float) -> KernelHandle:
    """K = K0 + K1 - K2 with w = q^n z: K0 the Christoffel-Darboux sum over k < n,
    K1 = sum_{j>=0} q^j w/(1 + q^j w) phi_{n+j}^2, K2 = sum_{j=1}^n phi_{n-j}^2 / (1 + w q^{-j})."""
    n, q = params.n, params.q
    log_w = math.log(q) * n + np.log(complex(z))
    upper = truncation_level(abs(complex(z)), q, tol, floor=n)
    k = np.arange(upper + 1, dtype=float)
    full = kernel_coefficients(z, q, upper)
    above = np.where(k >= n, full, 0.0)
    j = n - k[:n]
    below = np.zeros(upper + 1, dtype=complex)
    below[:n] = 1.0 / (1.0 + np.exp(log_w - j * math.log(q)))
    correction = above - below
    logger.debug("split kernel: n=%d, levels=%d", n, upper)

    def assemble(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        px = hermite_basis(upper, xs)
        py = px if ys is xs else hermite_basis(upper, ys)
        return _christoffel_darboux(n, xs, ys, px, py) + (px * correction[:, None]).T @ py

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x, y = np.broadcast_arrays(x, y)
        flat_x, flat_y = x.ravel(), y.ravel()
        values = np.array([assemble(flat_x[i:i + 1], flat_y[i:i + 1])[0, 0] for i in range(flat_x.size)])
        return values.reshape(x.shape)

    return KernelHandle(evaluate, symmetric=True, name="finite(split)", assemble=assemble)


def kernel_finite(z: complex, params: ModelParams, tol: float = DEFAULT_TOL, strategy: str = "direct") -> KernelHandle:
    """K(x, y; z; q) = sum_k q^k z/(1 + q^k z) phi_k(x) phi_k(y)."""
    z = complex(z)
    if z == 0:
        return ZERO_KERNEL
    q = params.q
    if strategy == "split":
        return _split_kernel(z, params, tol)
    if strategy != "direct":
        raise DomainError(f"Unknown kernel strategy '{strategy}'")
    k_max = truncation_level(abs(z), q, tol)
    logger.debug("finite kernel: |z|=%.4g, levels=%d", abs(z), k_max + 1)
    return _series_kernel(kernel_coefficients(z, q, k_max), "finite", 0.0, True)


@dataclass(frozen=True)
class EdgeCoefficients:
    """c_k(theta) = e^{i pi theta} q^{k-n+1/2} / (1 + e^{i pi theta} q^{k-n+1/2})."""

    theta: float
    params: ModelParams
    tol: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        if not -1.0 <= self.theta <= 1.0:
            raise DomainError(f"theta must lie in [-1, 1], got {self.theta}")

    @property
    def levels(self) -> int:
        n, q = self.params.n, self.params.q
        return n + max(0, int(math.ceil(math.log(self.tol) / math.log(q))))

    @cached_property
    def values(self) -> np.ndarray:
        n, q = self.params.n, self.params.q
        k = np.arange(self.levels + 1, dtype=float)
        exponent = (k - n + 0.5) * math.log(q) + 1j * math.pi * self.theta
        return 1.0 / (1.0 + np.exp(-exponent))

    def __getitem__(self, k: int) -> complex:
        return complex(self.values[k])

    def bound(self, k: int) -> float:
        """Uniform in theta: |c_k| <= 1/|1 - q^{-(k-n+1/2)}|, attained at theta = +-1."""
        n, q = self.params.n, self.params.q
        return 1.0 / abs(1.0 - q ** (-(k - n + 0.5)))


def edge_point(t, n: int):
    """2 sqrt(n) + t n^{-1/6}."""
    return 2.0 * math.sqrt(n) + np.asarray(t, dtype=float) * n ** (-1.0 / 6.0)


def kernel_edge_scaled(
    theta: float,
    params: ModelParams,
    t_window: Optional[Tuple[float, float]] = None,
    tol: float = DEFAULT_TOL,
) -> KernelHandle:
    """n^{-1/6} sum_k c_k(theta) phi_k(2 sqrt n + x n^{-1/6}) phi_k(2 sqrt n + y n^{-1/6})."""
    coefficients = EdgeCoefficients(theta, params, tol)
    n = params.n
    scale = n ** (-1.0 / 6.0)
    if t_window is not None:
        lo, hi = map(float, t_window)
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise DomainError(f"t_window must be a finite interval, got {t_window}")
        domain = (lo, hi)
    else:
        domain = (-math.inf, math.inf)
    inner = _series_kernel(coefficients.values, "edge", 0.0, True)

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return scale * inner.evaluate(edge_point(x, n), edge_point(y, n))

    def assemble(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return scale * inner.assemble(edge_point(xs, n), edge_point(ys, n))

    return KernelHandle(evaluate, domain=domain, decay_hint=1.0, symmetric=True,
                        name=f"edge(theta={theta:g})", assemble=assemble)


def kernel_multitime(
    z: complex,
    tau: float,
    sigma: float,
    params: ModelParams,
    tol: float = DEFAULT_TOL,
) -> KernelHandle:
    """sum_k q^k z/(1 + q^k z) e^{k(tau - sigma)} phi_k(x) phi_k(y) - E(x, y; tau, sigma)."""
    q, beta = params.q, params.beta
    for label, value in (("tau", tau), ("sigma", sigma)):
        if not 0.0 <= value < beta:
            raise DomainError(f"{label}={value} outside the imaginary-time range [0, {beta:.6g})")
    gap = float(tau) - float(sigma)
    ratio = q * math.exp(gap)
    if ratio >= 1.0:
        raise DomainError(f"Kernel series diverges: q e^(tau - sigma) = {ratio:.6g} >= 1")
    z = complex(z)
    if z == 0:
        coefficients = np.zeros(1, dtype=complex)
    else:
        k_max = truncation_level(abs(z), ratio, tol)
        k = np.arange(k_max + 1, dtype=float)
        coefficients = kernel_coefficients(z, q, k_max) * np.exp(k * gap)
    series = _series_kernel(coefficients, "multitime", 0.0, gap == 0.0)

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return series.evaluate(x, y) - propagator_E(x, y, tau, sigma)

    def assemble(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return series.assemble(xs, ys) - propagator_E(xs[:, None], ys[None, :], tau, sigma)

    return KernelHandle(evaluate, symmetric=gap == 0.0, name=f"multitime(tau={tau:g}, sigma={sigma:g})",
                        assemble=assemble)


def _airy_closed(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    ai_x, aip_x = airy_ai_pair(x, KERNEL_AIRY_POLICY)
    ai_y, aip_y = airy_ai_pair(y, KERNEL_AIRY_POLICY)
    diff = x - y
    near = np.abs(diff) < AIRY_DIAGONAL
    off = (ai_x * aip_y - aip_x * ai_y) / np.where(near, 1.0, diff)
    mid = 0.5 * (x + y)
    ai_m, aip_m = airy_ai_pair(mid, KERNEL_AIRY_POLICY)
    return np.where(near, aip_m * aip_m - mid * ai_m * ai_m, off)


def _airy_quadrature(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    lowest = float(min(np.min(x), np.min(y))) if x.size else 0.0
    grid = panel_grid((0.0, max(AIRY_TAIL - lowest, 1.0)), 1.0)
    r = grid.nodes
    ax = airy_ai(x[..., None] + r, KERNEL_AIRY_POLICY)
    ay = airy_ai(y[..., None] + r, KERNEL_AIRY_POLICY)
    return np.sum(ax * ay * grid.weights, axis=-1)


def kernel_airy(method: str = "closed") -> KernelHandle:
    """K_Airy(x, y) = int_0^inf Ai(x + r) Ai(y + r) dr."""
    if method == "closed":
        return KernelHandle(_airy_closed, decay_hint=2.0, symmetric=True, name="airy")
    if method == "quadrature":
        return KernelHandle(_airy_quadrature, decay_hint=2.0, symmetric=True, name="airy(quadrature)")
    raise DomainError(f"Unknown Airy kernel method '{method}'")


def fermi_weight(r: np.ndarray, c: float, theta: float = 0.0) -> np.ndarray:
    """e^{i pi theta} e^{-c r} / (1 + e^{i pi theta} e^{-c r})."""
    return 1.0 / (1.0 + np.exp(np.clip(c * r, -700.0, 700.0) - 1j * math.pi * theta))


def _crossover_grid(lowest: float, c: float):
    lo = lowest - AIRY_TAIL
    hi = max(39.0 / c, lo + 1.0) + 2.0
    # Ai(x - r) oscillates with local frequency sqrt(r - x)
    width = min(1.0, 4.0 / math.sqrt(max(hi - lowest, 1.0)))
    # the Fermi factor steps from 1 to 0 over |r| ~ 1/c
    start, stop = max(lo, -40.0 / c), min(hi, 40.0 / c)
    if stop <= start:
        return panel_grid((lo, hi), width)
    pieces = [panel_grid((start, stop), min(width, 2.0 / c))]
    if start > lo:
        pieces.insert(0, panel_grid((lo, start), width))
    if stop < hi:
        pieces.append(panel_grid((stop, hi), width))
    return QuadratureGrid.concatenate(pieces)


def kernel_crossover(c: float, theta: float = 0.0) -> KernelHandle:
    """int_R e^{i pi theta} e^{-c r}/(1 + e^{i pi theta} e^{-c r}) Ai(x - r) Ai(y - r) dr."""
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    if not -1.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (-1, 1), got {theta}")
    c, theta = float(c), float(theta)

    def assemble(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        grid = _crossover_grid(float(min(xs.min(), ys.min())), c)
        weights = grid.weights * fermi_weight(grid.nodes, c, theta)
        ax = airy_ai(xs[:, None] - grid.nodes[None, :], KERNEL_AIRY_POLICY)
        ay = ax if ys is xs else airy_ai(ys[:, None] - grid.nodes[None, :], KERNEL_AIRY_POLICY)
        return (ax * weights[None, :]) @ ay.T

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        if x.size == 0:
            return np.zeros(x.shape, dtype=complex)
        grid = _crossover_grid(float(min(x.min(), y.min())), c)
        weights = grid.weights * fermi_weight(grid.nodes, c, theta)
        ax = airy_ai(x[..., None] - grid.nodes, KERNEL_AIRY_POLICY)
        ay = airy_ai(y[..., None] - grid.nodes, KERNEL_AIRY_POLICY)
        return np.sum(ax * ay * weights, axis=-1)

    return KernelHandle(evaluate, decay_hint=min(c, 2.0), symmetric=True,
                        name=f"crossover(c={c:g}, theta={theta:g})", assemble=assemble)


def kernel_sine() -> KernelHandle:
    """sin(pi (x - y)) / (pi (x - y)), equal to 1 on the diagonal."""

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.sinc(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)).astype(complex)

    return KernelHandle(evaluate, symmetric=True, name="sine")


def _interp_grid(a: float, spread: float):
    top = math.sqrt(max(math.log(1e17 / a), 1.0))
    width = min(0.5, 2.0 / max(math.pi * spread, 1e-300))
    return panel_grid((0.0, top), width)


def kernel_interp(a: float) -> KernelHandle:
    """int_0^inf cos(pi (x - y) t) / (a e^{t^2} + 1) dt."""
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    a = float(a)

    def profile(t: np.ndarray) -> np.ndarray:
        return 1.0 / (a * np.exp(t * t) + 1.0)

    def assemble(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        spread = float(max(xs.max(), ys.max()) - min(xs.min(), ys.min()))
        grid = _interp_grid(a, spread)
        weights = grid.weights * profile(grid.nodes)
        cx, sx = np.cos(math.pi * np.outer(xs, grid.nodes)), np.sin(math.pi * np.outer(xs, grid.nodes))
        cy, sy = np.cos(math.pi * np.outer(ys, grid.nodes)), np.sin(math.pi * np.outer(ys, grid.nodes))
        return ((cx * weights) @ cy.T + (sx * weights) @ sy.T).astype(complex)

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        spread = float(np.max(np.abs(diff))) if diff.size else 0.0
        grid = _interp_grid(a, spread)
        weights = grid.weights * profile(grid.nodes)
        return np.sum(np.cos(math.pi * diff[..., None] * grid.nodes) * weights, axis=-1).astype(complex)

    return KernelHandle(evaluate, symmetric=True, name=f"interp(a={a:g})", assemble=assemble)


def interp_diagonal(a: float) -> float:
    """K_interp(x, x; a) = -(sqrt(pi)/2) Li_{1/2}(-1/a)."""
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    return -0.5 * math.sqrt(math.pi) * polylog_half_neg(1.0 / a)
