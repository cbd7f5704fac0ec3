"""Nystrom discretization of integral operators and Fredholm determinants."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING, List, Sequence, Tuple, Union
import logging
import math

import numpy as np
from scipy import linalg, special

from .errors import ConvergenceError, DomainError

if TYPE_CHECKING:
    from .kernels import KernelHandle

logger = logging.getLogger(__name__)

Interval = Tuple[float, float]
Sign = Union[str, int]


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    domain: Interval

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    @classmethod
    def empty(cls) -> "QuadratureGrid":
        return cls(np.empty(0), np.empty(0), (0.0, 0.0))

    @classmethod
    def concatenate(cls, grids: Sequence["QuadratureGrid"]) -> "QuadratureGrid":
        if not grids:
            return cls.empty()
        return cls(
            np.concatenate([g.nodes for g in grids]),
            np.concatenate([g.weights for g in grids]),
            (grids[0].domain[0], grids[-1].domain[1]),
        )


@lru_cache(maxsize=64)
def _legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = special.roots_legendre(order)
    return x, w


def build_grid(domain: Interval, order: int) -> QuadratureGrid:
    """Gauss-Legendre nodes and weights mapped onto [a, b]."""
    a, b = float(domain[0]), float(domain[1])
    if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
        raise DomainError(f"build_grid needs a finite interval with a < b, got [{a}, {b}]")
    if order < 2:
        raise DomainError(f"Quadrature order must be at least 2, got {order}")
    x, w = _legendre(int(order))
    half = 0.5 * (b - a)
    return QuadratureGrid(a + half * (x + 1.0), half * w, (a, b))


def panel_grid(domain: Interval, width: float, order: int = 16) -> QuadratureGrid:
    """Composite Gauss-Legendre rule with panels no wider than ``width``."""
    a, b = float(domain[0]), float(domain[1])
    panels = max(1, int(math.ceil((b - a) / width)))
    edges = np.linspace(a, b, panels + 1)
    return QuadratureGrid.concatenate([build_grid((lo, hi), order) for lo, hi in zip(edges[:-1], edges[1:])])


def _intervals(domain) -> List[Interval]:
    if hasattr(domain, "intervals"):
        return [tuple(map(float, iv)) for iv in domain.intervals]
    if len(domain) == 2 and np.isscalar(domain[0]):
        return [(float(domain[0]), float(domain[1]))]
    return [(float(a), float(b)) for a, b in domain]


def region_grid(domain, order: int) -> QuadratureGrid:
    """One Gauss-Legendre grid per interval, concatenated."""
    return QuadratureGrid.concatenate([build_grid(iv, order) for iv in _intervals(domain) if iv[0] < iv[1]])


def _sign(sign: Sign) -> float:
    if sign in ("minus", -1):
        return -1.0
    if sign in ("plus", 1):
        return 1.0
    raise DomainError(f"sign must be 'plus' or 'minus', got {sign!r}")


def log_det(matrix: np.ndarray) -> complex:
    """Complex log-determinant through LU with partial pivoting."""
    if matrix.size == 0:
        return 0j
    lu, piv = linalg.lu_factor(np.asarray(matrix, dtype=complex), check_finite=False)
    diagonal = np.diag(lu)
    if np.any(diagonal == 0):
        return complex(-np.inf)
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    return complex(np.sum(np.log(diagonal)) + (1j * np.pi if swaps % 2 else 0.0))


def det_identity_plus(matrix: np.ndarray, sign: Sign = "minus") -> complex:
    """det(I + sign * matrix)."""
    if matrix.size == 0:
        return 1.0 + 0j
    value = log_det(np.eye(matrix.shape[0]) + _sign(sign) * matrix)
    return complex(np.exp(value))


@dataclass(frozen=True)
class DiscretizedOperator:
    matrix: np.ndarray
    grids: Tuple[QuadratureGrid, ...]
    weighting: str = "symmetric"

    def determinant(self, sign: Sign = "minus") -> complex:
        return det_identity_plus(self.matrix, sign)


def _weighted(values: np.ndarray, row_weights: np.ndarray, col_weights: np.ndarray, weighting: str) -> np.ndarray:
    if weighting == "symmetric":
        return np.sqrt(row_weights)[:, None] * values * np.sqrt(col_weights)[None, :]
    if weighting == "one-sided":
        return values * col_weights[None, :]
    raise DomainError(f"Unknown weighting '{weighting}'")


def discretize(kernel: "KernelHandle", grid: QuadratureGrid, weighting: str = "symmetric") -> DiscretizedOperator:
    if grid.size == 0:
        return DiscretizedOperator(np.zeros((0, 0), dtype=complex), (grid,), weighting)
    values = np.asarray(kernel.matrix(grid.nodes, grid.nodes), dtype=complex)
    if not np.all(np.isfinite(values)):
        raise DomainError(f"Kernel '{kernel.name}' is not finite on the quadrature nodes")
    return DiscretizedOperator(_weighted(values, grid.weights, grid.weights, weighting), (grid,), weighting)


def fredholm_det(
    kernel: "KernelHandle",
    domain,
    order: int,
    sign: Sign = "minus",
    weighting: str = "symmetric",
) -> complex:
    """det(I +/- K) on ``domain``: an interval, a list of intervals or a RegionSet.

    ``order`` is the Gauss-Legendre order per interval.
    """
    grid = region_grid(domain, order)
    return discretize(kernel, grid, weighting).determinant(sign)


def fredholm_det_adaptive(
    kernel: "KernelHandle",
    tail_start: float,
    tol: float = 1e-12,
    start_order: int = 24,
    doublings: int = 4,
) -> Tuple[complex, float]:
    """det(I - K) on [t, infinity), truncated to [t, t + L] with L = max(20, 40/decay)."""
    rate = kernel.decay_hint
    if not rate > 0:
        raise DomainError(f"Kernel '{kernel.name}' carries no decay rate; cannot truncate a half-line")
    length = max(20.0, 40.0 / rate)
    domain = (float(tail_start), float(tail_start) + length)
    order = start_order
    previous = fredholm_det(kernel, domain, order)
    history = []
    for _ in range(doublings):
        order *= 2
        current = fredholm_det(kernel, domain, order)
        error = abs(current - previous)
        history.append(error)
        logger.debug("%s on [%g, %g]: order %d, change %.3e", kernel.name, domain[0], domain[1], order, error)
        if error < tol:
            return current, error
        previous = current
    raise ConvergenceError(
        f"Fredholm determinant of '{kernel.name}' did not reach tol={tol:g} after {doublings} doublings",
        {"domain": domain, "final_order": order, "changes": history},
    )


def fredholm_det_block(
    kernels: Sequence[Sequence["KernelHandle"]],
    domains: Sequence,
    order: int,
    sign: Sign = "minus",
) -> complex:
    """Determinant of I +/- [K_ij] on the direct sum of L^2(domain_i)."""
    slices = len(domains)
    if slices < 1 or len(kernels) != slices or any(len(row) != slices for row in kernels):
        raise DomainError(f"Block kernel must be {slices}x{slices} to match the domains")
    grids = [region_grid(domain, order) for domain in domains]
    sizes = [g.size for g in grids]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    matrix = np.zeros((offsets[-1], offsets[-1]), dtype=complex)
    for i, row_grid in enumerate(grids):
        for j, col_grid in enumerate(grids):
            if row_grid.size == 0 or col_grid.size == 0:
                continue
            values = np.asarray(kernels[i][j].matrix(row_grid.nodes, col_grid.nodes), dtype=complex)
            if not np.all(np.isfinite(values)):
                raise DomainError(f"Block ({i}, {j}) is not finite on the quadrature nodes")
            matrix[offsets[i]:offsets[i + 1], offsets[j]:offsets[j + 1]] = _weighted(
                values, row_grid.weights, col_grid.weights, "symmetric"
            )
    return det_identity_plus(matrix, sign)

