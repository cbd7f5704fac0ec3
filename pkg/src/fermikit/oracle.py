"""Brute-force reference values: eigenstate sums, exact eigenstate sampling and small-n Monte Carlo.

Eigenstates are strictly increasing level tuples k_1 < ... < k_n with Boltzmann
weight q^{sum k}. Writing k_i = m_i + (i - 1) with 0 <= m_1 <= ... <= m_n and
d_i = m_i - m_{i-1}, the weight becomes prod_i (q^{n-i+1})^{d_i}, so the d_i are
independent geometric variables; docs/sampling.md has the details.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, List, NamedTuple, Sequence, Tuple, Union
import logging
import math

import numpy as np

from .errors import ConvergenceError, DomainError
from .fredholm import QuadratureGrid, panel_grid
from .hermite import mehler_M, phi_matrix, propagator_E
from .qseries import ModelParams, check_q, log_qfactorial
from .regions import RegionSet, as_region
from .workers import parallel_map

logger = logging.getLogger(__name__)

MAX_ORACLE_N = 4
OVERLAP_MARGIN = 14.0
ENVELOPE_RATIOS = np.linspace(0.02, 0.98, 97)
PROPOSAL_BATCH = 4096
MAX_PROPOSALS = 50_000_000
# Philox is counter based: streams with equal keys replay identically on every platform
RNG_ALGORITHM = "philox4x64"


class TruncatedSum(NamedTuple):
    value: float
    truncation_bound: float


class MonteCarloEstimate(NamedTuple):
    estimate: float
    stderr: float


@dataclass(frozen=True)
class EigenstateSample:
    ks: Tuple[int, ...]

    def __post_init__(self) -> None:
        ks = tuple(int(k) for k in self.ks)
        if not ks or ks[0] < 0 or any(b <= a for a, b in zip(ks, ks[1:])):
            raise DomainError(f"Occupied levels must be strictly increasing and non-negative, got {self.ks}")
        object.__setattr__(self, "ks", ks)

    @property
    def n(self) -> int:
        return len(self.ks)

    @property
    def energy(self) -> float:
        """sum k_i + n/2 in units of the level spacing."""
        return sum(self.ks) + 0.5 * self.n


@dataclass
class RngStream:
    """Seeded Philox stream; ``split`` derives independent child streams."""

    seed: int
    spawn_key: Tuple[int, ...] = ()
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError(f"Seed must be a 64-bit unsigned integer, got {self.seed}")
        sequence = np.random.SeedSequence(int(self.seed), spawn_key=self.spawn_key)
        self.generator = np.random.Generator(np.random.Philox(sequence))

    def split(self, count: int) -> List["RngStream"]:
        return [RngStream(self.seed, self.spawn_key + (index,)) for index in range(count)]


def _check_small(params: ModelParams, what: str) -> None:
    if params.n > MAX_ORACLE_N:
        raise DomainError(f"{what} enumerates states and is limited to n <= {MAX_ORACLE_N}, got n={params.n}")


def ground_energy(n: int) -> int:
    return n * (n - 1) // 2


def iter_states(n: int, cutoff: int, start: int = 0) -> Iterator[Tuple[int, ...]]:
    """All strictly increasing n-tuples of levels >= start with sum <= cutoff."""
    if n == 0:
        yield ()
        return
    # the n - 1 levels above k need at least (n-1)k + (n-1)n/2
    k = start
    while n * k + ground_energy(n) <= cutoff:
        for rest in iter_states(n - 1, cutoff - k, k + 1):
            yield (k,) + rest
        k += 1


def state_array(n: int, cutoff: int) -> np.ndarray:
    states = list(iter_states(n, cutoff))
    return np.array(states, dtype=int).reshape(len(states), n)


def log_state_weight(params: ModelParams) -> float:
    """log of (q;q)_n / q^{n(n-1)/2}, the normalization of q^{sum k}."""
    return log_qfactorial(params.n, params.q) - ground_energy(params.n) * math.log(params.q)


def eigenstate_probability(ks: Sequence[int], params: ModelParams) -> float:
    state = EigenstateSample(tuple(ks))
    if state.n != params.n:
        raise DomainError(f"State has {state.n} levels, expected n={params.n}")
    return math.exp(sum(state.ks) * math.log(params.q) + log_state_weight(params))


def mean_energy(params: ModelParams) -> float:
    """E[sum k_i] = n(n-1)/2 + sum_{l=1}^n l q^l / (1 - q^l)."""
    q = params.q
    return ground_energy(params.n) + sum(l * q ** l / (1.0 - q ** l) for l in range(1, params.n + 1))


def excitation_tail(n: int, q: float, excitations: int) -> float:
    """sum_{m > excitations} C(m + n - 1, n - 1) q^m, bounding the weight of the states left out."""
    total, m = 0.0, max(excitations + 1, 0)
    while True:
        term = math.comb(m + n - 1, n - 1) * q ** m
        total += term
        if term < 1e-18 * max(total, 1e-300) and m > excitations + n:
            return total
        m += 1


def overlap_matrix(k_max: int, region: Union[RegionSet, str], panel_order: int = 16) -> np.ndarray:
    """<phi_j, phi_k>_A for j, k <= k_max, as delta_jk minus the integral over the complement of A."""
    region = as_region(region)
    bound = 2.0 * math.sqrt(k_max + 1) + OVERLAP_MARGIN
    grids = [panel_grid(iv, 0.5, panel_order) for iv in region.complement(bound)]
    grid = QuadratureGrid.concatenate(grids)
    identity = np.eye(k_max + 1)
    if grid.size == 0:
        return identity
    values = phi_matrix(k_max, grid.nodes)
    return identity - (values * grid.weights) @ values.T


def enumerate_gap(region: Union[RegionSet, str], params: ModelParams, energy_cutoff: int = 40) -> TruncatedSum:
    """P(all particles in A) = sum over states of P(state) det(<phi_{k_i}, phi_{k_j}>_A), truncated at sum k <= cutoff."""
    _check_small(params, "enumerate_gap")
    n, q = params.n, params.q
    if energy_cutoff < ground_energy(n):
        raise DomainError(f"Energy cutoff {energy_cutoff} is below the ground state {ground_energy(n)}")
    states = state_array(n, energy_cutoff)
    overlaps = overlap_matrix(int(states.max()), region)
    blocks = overlaps[states[:, :, None], states[:, None, :]]
    weights = np.exp(states.sum(axis=1) * math.log(q) + log_state_weight(params))
    value = float(np.sum(weights * np.linalg.det(blocks)))
    bound = math.exp(log_qfactorial(n, q)) * excitation_tail(n, q, energy_cutoff - ground_energy(n))
    logger.debug("enumerate_gap: %d states, tail bound %.3e", len(states), bound)
    return TruncatedSum(value, bound)


def brute_C(js: Sequence[int], params: ModelParams, cutoff: int = 60) -> TruncatedSum:
    """sum of q^{sum k} over eigenstates containing every level in js, with sum k <= cutoff."""
    _check_small(params, "brute_C")
    required = set(int(j) for j in js)
    if len(required) > params.n:
        raise DomainError(f"{len(required)} levels exceed n={params.n}")
    n, q = params.n, params.q
    value = 0.0
    for state in iter_states(n, cutoff):
        if required.issubset(state):
            value += q ** sum(state)
    bound = q ** ground_energy(n) * excitation_tail(n, q, cutoff - ground_energy(n))
    return TruncatedSum(value, bound)


def sample_eigenstates(params: ModelParams, rng: RngStream, size: int) -> np.ndarray:
    """``size`` exact Boltzmann draws, one state per row."""
    n, q = params.n, params.q
    ratios = q ** (n - np.arange(n))  # q^{n-i+1} for i = 1..n
    gaps = rng.generator.geometric(1.0 - ratios, size=(size, n)) - 1
    return np.cumsum(gaps, axis=1) + np.arange(n)


def sample_eigenstate(params: ModelParams, rng: RngStream) -> EigenstateSample:
    return EigenstateSample(tuple(int(k) for k in sample_eigenstates(params, rng, 1)[0]))


@dataclass(frozen=True)
class GaussianEnvelope:
    """|Phi_ks(x)|^2 <= bound * prod_j g(x_j), g the N(0, variance) density.

    From phi_k(x)^2 <= r^{-k} M(x, x; r) = r^{-k} g(x)/(1 - r) and Hadamard's
    inequality on the columns of the Slater matrix.
    """

    ratio: float
    variance: float
    bound: float

    @classmethod
    def for_state(cls, ks: Sequence[int]) -> "GaussianEnvelope":
        levels = np.asarray(ks, dtype=float)
        n = levels.size
        r = ENVELOPE_RATIOS
        log_bounds = (
            n * np.log(np.sum(r[:, None] ** (-levels[None, :]), axis=1))
            - n * np.log1p(-r)
            - math.lgamma(n + 1)
        )
        best = int(np.argmin(log_bounds))
        ratio = float(r[best])
        return cls(ratio, (1.0 + ratio) / (1.0 - ratio), float(np.exp(log_bounds[best])))

    def log_density(self, xs: np.ndarray) -> np.ndarray:
        return np.sum(-0.5 * xs * xs / self.variance - 0.5 * math.log(2.0 * math.pi * self.variance), axis=-1)


def slater_density(ks: Sequence[int], xs: np.ndarray) -> np.ndarray:
    """det(phi_{k_i}(x_j))^2 / n! for each row of xs."""
    points = np.atleast_2d(np.asarray(xs, dtype=float))
    levels = np.asarray(ks, dtype=int)
    n = levels.size
    values = phi_matrix(int(levels.max()), points.ravel())[levels]
    matrices = values.reshape(n, points.shape[0], n).transpose(1, 0, 2)
    return np.linalg.det(matrices) ** 2 / math.factorial(n)


def sample_positions_batch(state: EigenstateSample, rng: RngStream, count: int) -> np.ndarray:
    """``count`` rejection draws from |Phi_state|^2, each row sorted."""
    if state.n > MAX_ORACLE_N:
        raise DomainError(f"sample_positions is limited to n <= {MAX_ORACLE_N}, got n={state.n}")
    envelope = GaussianEnvelope.for_state(state.ks)
    accepted: List[np.ndarray] = []
    have, proposed = 0, 0
    scale = math.sqrt(envelope.variance)
    while have < count:
        if proposed >= MAX_PROPOSALS:
            raise ConvergenceError(
                f"Rejection sampler for {state.ks} exceeded {MAX_PROPOSALS} proposals",
                {"accepted": have, "proposed": proposed, "envelope_bound": envelope.bound},
            )
        xs = rng.generator.normal(0.0, scale, size=(PROPOSAL_BATCH, state.n))
        ratio = slater_density(state.ks, xs) / (envelope.bound * np.exp(envelope.log_density(xs)))
        if np.any(ratio > 1.0 + 1e-9):
            raise ConvergenceError(
                f"Envelope violated for state {state.ks}",
                {"max_ratio": float(ratio.max()), "envelope_ratio": envelope.ratio},
            )
        keep = xs[rng.generator.random(PROPOSAL_BATCH) < ratio]
        accepted.append(keep)
        have += keep.shape[0]
        proposed += PROPOSAL_BATCH
    logger.debug("state %s: acceptance %.4f over %d proposals", state.ks, have / proposed, proposed)
    return np.sort(np.concatenate(accepted)[:count], axis=1)


def sample_positions(state: EigenstateSample, rng: RngStream) -> np.ndarray:
    return sample_positions_batch(state, rng, 1)[0]


def mc_gap(
    region: Union[RegionSet, str],
    params: ModelParams,
    draws: int,
    rng: RngStream,
) -> MonteCarloEstimate:
    """Fraction of draws (state, then positions) with every particle in A, with its binomial standard error."""
    _check_small(params, "mc_gap")
    region = as_region(region)
    if region.is_whole_line:
        return MonteCarloEstimate(1.0, 0.0)
    if draws < 1:
        raise DomainError(f"draws must be positive, got {draws}")
    state_stream, position_stream = rng.split(2)
    states = sample_eigenstates(params, state_stream, draws)
    unique, counts = np.unique(states, axis=0, return_counts=True)
    streams = position_stream.split(len(unique))

    def hits(index: int) -> int:
        positions = sample_positions_batch(EigenstateSample(tuple(unique[index])), streams[index], int(counts[index]))
        return int(np.count_nonzero(np.all(region.contains(positions), axis=1)))

    total = sum(parallel_map(hits, range(len(unique))))
    estimate = total / draws
    return MonteCarloEstimate(estimate, math.sqrt(estimate * (1.0 - estimate) / draws))


def joint2_density_n1(x, y, tau1: float, tau2: float, q: float):
    """Density of a single particle at x at time tau1 and at y at time tau2.

    (1 - q) M(x, y; e^{-d}) M(y, x; e^{-(beta - d)}) with d = tau2 - tau1 and beta = -log q.
    """
    q = check_q(q)
    beta = -math.log(q)
    if not 0.0 <= tau1 < tau2 < beta:
        raise DomainError(f"Need 0 <= tau1 < tau2 < beta={beta:.6g}, got tau1={tau1}, tau2={tau2}")
    d = tau2 - tau1
    forward = propagator_E(x, y, -d, 0.0)
    backward = propagator_E(y, x, -(beta - d), 0.0)
    return (1.0 - q) * forward * backward


def one_time_density_n1(x, q: float):
    """(1 - q) sum_k q^k phi_k(x)^2 = (1 - q) M(x, x; q)."""
    return (1.0 - q) * mehler_M(x, x, q)
