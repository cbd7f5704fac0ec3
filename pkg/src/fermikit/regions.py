"""Finite unions of intervals and their bounded complements."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple
import math

import numpy as np

from .errors import DomainError
from .qseries import ModelParams

Interval = Tuple[float, float]

MIN_ORDER = 48
MAX_ORDER = 512


def _parse_bound(text: str) -> float:
    token = text.strip().lower()
    if token in ("-inf", "-infinity"):
        return -math.inf
    if token in ("inf", "+inf", "infinity", "+infinity"):
        return math.inf
    try:
        return float(token)
    except ValueError as exc:
        raise DomainError(f"Cannot read interval bound '{text}'") from exc


@dataclass(frozen=True)
class RegionSet:
    """Sorted, disjoint closed intervals; endpoints may be infinite."""

    intervals: Tuple[Interval, ...] = ()

    def __post_init__(self) -> None:
        cleaned: List[Interval] = []
        for a, b in sorted((float(a), float(b)) for a, b in self.intervals):
            if math.isnan(a) or math.isnan(b) or not a < b:
                raise DomainError(f"Interval [{a}, {b}] is empty or malformed")
            if cleaned and a <= cleaned[-1][1]:
                cleaned[-1] = (cleaned[-1][0], max(cleaned[-1][1], b))
            else:
                cleaned.append((a, b))
        object.__setattr__(self, "intervals", tuple(cleaned))

    @classmethod
    def whole_line(cls) -> "RegionSet":
        return cls(((-math.inf, math.inf),))

    @classmethod
    def half_line(cls, s: float) -> "RegionSet":
        """(-infinity, s]."""
        return cls(((-math.inf, float(s)),))

    @classmethod
    def parse(cls, text: str) -> "RegionSet":
        """'-inf:1,2:3' -> (-inf, 1] u [2, 3]."""
        if text.strip().lower() in ("r", "all", "-inf:inf"):
            return cls.whole_line()
        pieces = []
        for chunk in text.split(","):
            if ":" not in chunk:
                raise DomainError(f"Interval '{chunk}' must look like a:b")
            lo, hi = chunk.split(":", 1)
            pieces.append((_parse_bound(lo), _parse_bound(hi)))
        return cls(tuple(pieces))

    @property
    def is_whole_line(self) -> bool:
        return self.intervals == ((-math.inf, math.inf),)

    def contains(self, x) -> np.ndarray:
        xs = np.asarray(x, dtype=float)
        inside = np.zeros(xs.shape, dtype=bool)
        for a, b in self.intervals:
            inside |= (xs >= a) & (xs <= b)
        return inside

    def complement(self, bound: float) -> List[Interval]:
        """R minus this set, intersected with [-bound, bound]."""
        pieces: List[Interval] = []
        cursor = -bound
        for a, b in self.intervals:
            if a > cursor:
                pieces.append((cursor, min(a, bound)))
            cursor = max(cursor, b)
            if cursor >= bound:
                break
        if cursor < bound:
            pieces.append((cursor, bound))
        return [(a, b) for a, b in pieces if b > a]

    def clipped(self, bound: float) -> List[Interval]:
        """This set intersected with [-bound, bound]."""
        pieces = [(max(a, -bound), min(b, bound)) for a, b in self.intervals]
        return [(a, b) for a, b in pieces if b > a]

    def __str__(self) -> str:
        return ",".join(f"{a:g}:{b:g}" for a, b in self.intervals)


def significant_levels(params: ModelParams, tol: float) -> int:
    n, q = params.n, params.q
    return n + max(1, int(math.ceil(math.log(tol) / math.log(q))))


def complement_bound(params: ModelParams, tol: float = 1e-15) -> float:
    """B = 2 sqrt(n) + 15 n^{-1/6} + 10, past which the kernel has decayed.

    Near q = 1 the occupied levels reach beyond 2 sqrt(n); B then grows to
    2 sqrt(K) + 10 with K the number of levels above tol.
    """
    n = params.n
    base = 2.0 * math.sqrt(n) + 15.0 * n ** (-1.0 / 6.0) + 10.0
    return max(base, 2.0 * math.sqrt(significant_levels(params, tol)) + 10.0)


def default_order(intervals: Sequence[Interval], params: ModelParams, tol: float, cap: Optional[int] = None) -> int:
    """Gauss-Legendre order per interval from its length and the number of significant levels."""
    if not intervals:
        return MIN_ORDER
    longest = max(b - a for a, b in intervals)
    order = int(math.ceil(longest * math.sqrt(significant_levels(params, tol)))) + 32
    return int(np.clip(order, MIN_ORDER, cap or MAX_ORDER))


def as_region(value) -> RegionSet:
    if isinstance(value, RegionSet):
        return value
    if isinstance(value, str):
        return RegionSet.parse(value)
    return RegionSet(tuple(value))


def regions(values: Iterable) -> List[RegionSet]:
    return [as_region(v) for v in values]
