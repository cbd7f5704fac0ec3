"""Acceptance checks run by ``fermikit self-test``.

Every check compares a numerical path against an independent in-repo oracle
(enumeration, closed forms, quadrature or a second numerical path) and
reports the worst deviation next to its threshold. Checks are deterministic
for a fixed seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from io import StringIO
from typing import Callable, Dict, Iterable, List, Optional, Sequence
import logging
import math

import numpy as np

from .config import FermikitConfig
from .errors import DomainError
from .fredholm import build_grid
from .hermite import joint_density
from .identities import (
    PRESETS,
    mehler_factorization,
    mehler_identity,
    preset,
    random_preset_params,
    verify_identity,
)
from .kernels import interp_diagonal, kernel_interp
from .multitime import TimeGrid, c_coefficient, multitime_correlation, multitime_gap
from .oracle import RngStream, brute_C, enumerate_gap, joint2_density_n1, mc_gap
from .qseries import ModelParams
from .regions import RegionSet
from .specialfn import polylog_half_neg
from .statistics import (
    CorrelationRequest,
    bulk_scan,
    correlation,
    density,
    edge_scan,
    gap_probability,
    interp_parameter,
    limit_bulk_density,
    rightmost_cdf,
    scan_errors,
)
from .tables import Table, write_table

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckOutcome:
    name: str
    passed: bool
    statistic: float
    threshold: float
    detail: str = ""


@dataclass(frozen=True)
class SelfTestContext:
    seed: int
    draws: int
    energy_cutoff: int

    @classmethod
    def from_config(cls, config: FermikitConfig) -> "SelfTestContext":
        return cls(config.sampling.seed, config.sampling.draws, config.sampling.energy_cutoff)


Check = Callable[[SelfTestContext], CheckOutcome]


def _outcome(name: str, statistic: float, threshold: float, detail: str = "", extra: bool = True) -> CheckOutcome:
    return CheckOutcome(name, bool(statistic < threshold and extra), float(statistic), float(threshold), detail)


def _strictly_decreasing(values: Sequence[float]) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


def check_normalization(ctx: SelfTestContext) -> CheckOutcome:
    worst = 0.0
    for q in (0.2, 0.5, 0.8):
        for n in range(1, 11):
            value = gap_probability(RegionSet.whole_line(), ModelParams(n, q)).value
            worst = max(worst, abs(value - 1.0))
    return _outcome("normalization", worst, 1e-8, "n=1..10, q in {0.2, 0.5, 0.8}")


def check_oracle_gap(ctx: SelfTestContext) -> CheckOutcome:
    cases = [(n, q, s) for n in (1, 2, 3) for q in (0.3, 0.6) for s in (0.0, 1.0, 2.0)]
    streams = RngStream(ctx.seed).split(len(cases))
    worst, worst_sigma = 0.0, 0.0
    for (n, q, s), stream in zip(cases, streams):
        params = ModelParams(n, q)
        region = RegionSet.half_line(s)
        value = rightmost_cdf(s, params).value
        exact = enumerate_gap(region, params, ctx.energy_cutoff).value
        sampled = mc_gap(region, params, ctx.draws, stream)
        worst = max(worst, abs(value - exact))
        if sampled.stderr > 0:
            worst_sigma = max(worst_sigma, abs(value - sampled.estimate) / sampled.stderr)
    return _outcome(
        "oracle_gap",
        worst,
        1e-6,
        f"max MC deviation {worst_sigma:.2f} sigma at {ctx.draws} draws",
        extra=worst_sigma <= 3.0,
    )


CORRELATION_PAIRS = [(a, b) for a in (-1.2, 0.3, 1.1) for b in (-0.5, 0.8, 2.0)]


def check_oracle_correlation(ctx: SelfTestContext) -> CheckOutcome:
    params = ModelParams(2, 0.5)
    worst = 0.0
    for pair in CORRELATION_PAIRS:
        value = correlation(CorrelationRequest(pair, params)).value
        worst = max(worst, abs(value - 2.0 * joint_density(pair, params)))
    grid = build_grid((-14.0, 14.0), 240)
    mass = params.n * float(np.sum(grid.weights * density(grid.nodes, params)))
    mass_error = abs(mass - params.n)
    return _outcome(
        "oracle_correlation",
        worst,
        1e-6,
        f"integrated density error {mass_error:.3e}",
        extra=mass_error < 1e-5,
    )


IDENTITY_PRESETS = {
    "qtasep": dict(a=(1.0, 0.8), t=0.5, q=0.4),
    "qtazrp": dict(b=(1.0,), t=0.5, q=0.4),
    "whittaker": dict(a=(1.0,), alpha=(0.3,), beta=(0.0,), gamma=0.5, q=0.4),
    "asep": dict(tau=0.4, rho=0.5, x=1, t=0.0),
}


IDENTITY_DRAWS = 5


def check_identities(ctx: SelfTestContext) -> CheckOutcome:
    mehler = max(mehler_identity(z, 0.5).gap for z in (0.3, 0.7, 0.3 + 0.2j))
    factorization = mehler_factorization(0.5, 0.5, RegionSet.half_line(0.5)).gap
    configs = [preset(model, **options) for model, options in IDENTITY_PRESETS.items()]
    for index, model in enumerate(sorted(PRESETS)):
        generator = RngStream(ctx.seed, (index,)).generator
        configs.extend(preset(model, **random_preset_params(model, generator)) for _ in range(IDENTITY_DRAWS))
    contour = max(
        verify_identity(config, z, order=96, variant=variant).gap
        for config in configs
        for variant in ("main", "alt")
        for z in (0.4, -0.3 + 0.2j)
    )
    return _outcome(
        "identities",
        mehler,
        1e-8,
        f"factorization gap {factorization:.3e}, contour gap {contour:.3e} over {len(configs)} presets",
        extra=factorization < 1e-7 and contour < 1e-6,
    )


EDGE_TIMES = (-2.0, 0.0, 2.0)


def check_edge_tracy_widom(ctx: SelfTestContext) -> CheckOutcome:
    errors = scan_errors(edge_scan((25, 50, 100), EDGE_TIMES, q=0.1))
    ordered = [errors[n] for n in sorted(errors)]
    detail = ", ".join(f"e_{n}={errors[n]:.3e}" for n in sorted(errors))
    return _outcome("edge_tracy_widom", ordered[-1], 3e-2, detail, extra=_strictly_decreasing(ordered))


def check_edge_crossover(ctx: SelfTestContext) -> CheckOutcome:
    errors = scan_errors(edge_scan((27, 64, 125), EDGE_TIMES, c=1.0))
    ordered = [errors[n] for n in sorted(errors)]
    detail = ", ".join(f"e_{n}={errors[n]:.3e}" for n in sorted(errors))
    return _outcome("edge_crossover", ordered[-1], 5e-2, detail, extra=_strictly_decreasing(ordered))


def check_bulk_sine(ctx: SelfTestContext) -> CheckOutcome:
    (row,) = bulk_scan((100,), (0.0, 0.5), 0.3, q=0.2)
    return _outcome("bulk_sine", row.error, 5e-2, f"finite {row.finite:.6f}, limit {row.limit:.6f}")


def check_bulk_interp(ctx: SelfTestContext) -> CheckOutcome:
    (row,) = bulk_scan((100,), (0.0,), 0.4, c=2.0)
    a = interp_parameter(0.4, 2.0)
    quadrature = float(kernel_interp(a)(0.0, 0.0).real)
    closed = -0.5 * math.sqrt(math.pi) * polylog_half_neg(1.0 / a)
    diagonal = max(abs(quadrature - closed), abs(interp_diagonal(a) - closed))
    return _outcome(
        "bulk_interp",
        row.error,
        5e-2,
        f"finite {row.finite:.6f}, limit {row.limit:.6f}, diagonal gap {diagonal:.3e}",
        extra=diagonal < 1e-8,
    )


def check_bulk_density(ctx: SelfTestContext) -> CheckOutcome:
    centre = abs(limit_bulk_density(0.0, 200.0) - 2.0 / math.pi)
    grid = build_grid((-6.0, 6.0), 240)
    mass = float(np.sum(grid.weights * limit_bulk_density(grid.nodes, 4.0)))
    return _outcome(
        "bulk_density",
        centre,
        2e-2,
        f"mass at c=4 off by {abs(mass - 1.0):.3e}",
        extra=abs(mass - 1.0) < 1e-4,
    )


def _two_time_mass(regions: Sequence[RegionSet], times: Sequence[float], q: float) -> float:
    first, second = (build_grid(region.clipped(14.0)[0], 160) for region in regions)
    values = joint2_density_n1(first.nodes[:, None], second.nodes[None, :], times[0], times[1], q)
    return float(first.weights @ values @ second.weights)


def check_multitime(ctx: SelfTestContext) -> CheckOutcome:
    params = ModelParams(2, 0.5)
    points = (-0.4, 0.9)
    equal = multitime_correlation(points, TimeGrid.for_params((0.3, 0.3), params), params).value
    reduction = abs(equal - correlation(CorrelationRequest(points, params)).value)

    single = ModelParams(1, 0.3)
    times = (0.2, 0.9)
    grid = TimeGrid.for_params(times, single)
    regions = [RegionSet.half_line(0.5), RegionSet(((-0.3, math.inf),))]
    gap = multitime_gap(regions, grid, single).value
    two_time = abs(gap - _two_time_mass(regions, times, single.q))
    for pair in ((0.1, -0.6), (1.2, 0.4)):
        value = multitime_correlation(pair, grid, single).value
        two_time = max(two_time, abs(value - joint2_density_n1(pair[0], pair[1], times[0], times[1], single.q)))

    coefficients = 0.0
    for params_c, levels in ((ModelParams(2, 0.4), (0,)), (ModelParams(2, 0.4), (1, 3)), (ModelParams(3, 0.4), (0, 2))):
        exact = brute_C(levels, params_c).value
        for method in ("contour", "qbinomial"):
            coefficients = max(coefficients, abs(c_coefficient(levels, params_c, method) - exact))
    return _outcome(
        "multitime",
        reduction,
        1e-9,
        f"two-time gap {two_time:.3e}, C coefficients {coefficients:.3e}",
        extra=two_time < 1e-6 and coefficients < 1e-9,
    )


def check_path_invariance(ctx: SelfTestContext) -> CheckOutcome:
    worst = 0.0
    q = 0.5
    for n in (4, 10, 20):
        params = ModelParams(n, q)
        s = 2.0 * math.sqrt(n)
        theta = rightmost_cdf(s, params, path="theta").value
        direct = rightmost_cdf(s, params, path="z_contour").value
        worst = max(worst, abs(theta - direct))
    params = ModelParams(4, q)
    balanced = q ** (-params.n + 0.5)
    values = [rightmost_cdf(2.0, params, path="z_contour", radius=balanced * q ** shift).value for shift in (0.0, -0.25, 0.25)]
    radius_gap = max(values) - min(values)
    return _outcome(
        "path_invariance",
        worst,
        1e-7,
        f"radius perturbation gap {radius_gap:.3e}",
        extra=radius_gap < 1e-8,
    )


def check_determinism(ctx: SelfTestContext) -> CheckOutcome:
    params = ModelParams(2, 0.4)
    renders = []
    for _ in range(2):
        table = Table(("estimate", "stderr"), config={"seed": ctx.seed})
        estimate = mc_gap(RegionSet.half_line(1.0), params, 2000, RngStream(ctx.seed))
        table.add(estimate.estimate, estimate.stderr)
        buffer = StringIO()
        write_table(table, "csv", buffer)
        renders.append(buffer.getvalue())
    return _outcome("determinism", 0.0 if renders[0] == renders[1] else 1.0, 0.5, "repeated seeded draw")


CHECKS: Dict[str, Check] = {
    "normalization": check_normalization,
    "oracle_gap": check_oracle_gap,
    "oracle_correlation": check_oracle_correlation,
    "identities": check_identities,
    "edge_tracy_widom": check_edge_tracy_widom,
    "edge_crossover": check_edge_crossover,
    "bulk_sine": check_bulk_sine,
    "bulk_interp": check_bulk_interp,
    "bulk_density": check_bulk_density,
    "multitime": check_multitime,
    "path_invariance": check_path_invariance,
    "determinism": check_determinism,
}


def select_checks(only: Optional[Iterable[str]] = None) -> List[str]:
    if not only:
        return list(CHECKS)
    names = [name.strip() for item in only for name in item.split(",") if name.strip()]
    unknown = [name for name in names if name not in CHECKS]
    if unknown:
        raise DomainError(f"Unknown self-test checks {unknown}; available: {', '.join(CHECKS)}")
    return [name for name in CHECKS if name in names]


def run_checks(ctx: SelfTestContext, only: Optional[Iterable[str]] = None) -> List[CheckOutcome]:
    outcomes = []
    for name in select_checks(only):
        logger.info("self-test: running %s", name)
        outcome = CHECKS[name](ctx)
        logger.info("self-test: %s %s (%.3e < %.0e)", name, "passed" if outcome.passed else "FAILED", outcome.statistic, outcome.threshold)
        outcomes.append(outcome)
    return outcomes


def report(outcomes: Sequence[CheckOutcome], config: Dict) -> Table:
    table = Table(("check", "passed", "statistic", "threshold", "detail"), config=config)
    for outcome in outcomes:
        table.add(outcome.name, outcome.passed, outcome.statistic, outcome.threshold, outcome.detail)
    return table
