"""fermikit command-line entry point."""
from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence
import logging
import math
import sys

import numpy as np
import typer

from .config import FermikitConfig
from .errors import ConfigError, ConvergenceError, DomainError, FermikitError
from .identities import IdentityCheck, mehler_identity, preset, verify_identity
from .multitime import TimeGrid, multitime_correlation, multitime_gap
from .oracle import RNG_ALGORITHM, EigenstateSample, RngStream, mc_gap, sample_eigenstates, sample_positions
from .qseries import ModelParams
from .regions import RegionSet
from .selftest import IDENTITY_PRESETS, SelfTestContext, report, run_checks
from .statistics import (
    CorrelationRequest,
    bulk_scan,
    correlation,
    density,
    edge_scan,
    gap_probability,
    interp_parameter,
    limit_bulk_density,
    limit_corr_interp,
    limit_corr_sine,
    limit_crossover,
    limit_tracy_widom,
    rightmost_cdf,
)
from .tables import FORMATS, Table, write_table
from .workers import thread_cap

logger = logging.getLogger(__name__)

EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_CONVERGENCE = 3


class VerificationFailed(FermikitError):
    pass


@dataclass
class RunState:
    config: FermikitConfig
    config_path: Optional[Path]
    fmt: str
    output: Optional[Path]
    threads: int

    def run_config(self, command: str, **options: Any) -> Dict[str, Any]:
        return {
            "command": command,
            "options": dict(options),
            "settings": self.config.as_dict(),
            "threads": self.threads,
            "config_path": str(self.config_path) if self.config_path else None,
        }


def parse_grid(text: str) -> List[float]:
    """'a:b:step' (inclusive of b) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise DomainError(f"Grid '{text}' must look like start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if not step > 0 or stop < start:
            raise DomainError(f"Grid '{text}' needs step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(count)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise DomainError(f"Cannot read number list '{text}'") from exc


def parse_ints(text: str) -> List[int]:
    values = parse_grid(text)
    if any(v != int(v) for v in values):
        raise DomainError(f"Expected integers, got '{text}'")
    return [int(v) for v in values]


def parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise DomainError(f"Cannot read complex number '{text}'") from exc


def model_params(n: int, q: Optional[float], c: Optional[float], scaling: str) -> ModelParams:
    if (q is None) == (c is None):
        raise DomainError("Give exactly one of --q or --c")
    if q is not None:
        return ModelParams(n, q)
    if scaling == "edge":
        return ModelParams.edge_scaling(n, c)
    if scaling == "bulk":
        return ModelParams.bulk_scaling(n, c)
    raise DomainError(f"Unknown scaling '{scaling}', expected edge or bulk")


def _emit(state: RunState, table: Table) -> None:
    if state.output is None:
        write_table(table, state.fmt, sys.stdout, state.config.output.digits)
        return
    with open(state.output, "w", encoding="utf-8", newline="") as handle:
        write_table(table, state.fmt, handle, state.config.output.digits)


@contextmanager
def _guarded(state: RunState) -> Iterator[None]:
    """Map library errors onto exit codes."""
    try:
        with thread_cap(state.threads):
            yield
    except typer.Exit:
        raise
    except VerificationFailed as exc:
        typer.echo(str(exc), err=True)
        raise typer.Exit(EXIT_FAILED)
    except DomainError as exc:
        typer.echo(f"Error: {exc}", err=True)
        raise typer.Exit(EXIT_USAGE)
    except ConvergenceError as exc:
        typer.echo(f"Did not converge: {exc.describe()}", err=True)
        raise typer.Exit(EXIT_CONVERGENCE)
    except Exception as exc:
        typer.echo(f"Command failed: {exc}", err=True)
        raise typer.Exit(EXIT_FAILED)


def _state(ctx: typer.Context) -> RunState:
    return ctx.obj


N_OPTION = typer.Option(..., "--n", help="Particle number")
Q_OPTION = typer.Option(None, "--q", help="Boltzmann parameter q = e^{-1/T} in (0, 1)")
C_OPTION = typer.Option(None, "--c", help="Scaling constant: q = e^{-c n^{-1/3}} (edge) or e^{-c/n} (bulk)")
SCALING_OPTION = typer.Option("edge", "--scaling", help="Rule turning --c into q: edge or bulk")
PATH_OPTION = typer.Option(None, "--path", help="Contour path: z_contour or theta (default by n)")
TOL_OPTION = typer.Option(None, "--tol", help="Contour tolerance (default from config)")


def create_app(config: Optional[FermikitConfig] = None) -> typer.Typer:
    app = typer.Typer(help="Finite-temperature free fermion statistics", no_args_is_help=True)
    limit_app = typer.Typer(help="Limit laws: tw, crossover, sine, interp, bulk-density")

    @app.callback()
    def _callback(
        ctx: typer.Context,
        config_path: Optional[Path] = typer.Option(None, "--config", "-c", help="JSON or YAML configuration file"),
        threads: Optional[int] = typer.Option(None, "--threads", help="Worker pool cap (overrides FERMIKIT_THREADS)"),
        fmt: Optional[str] = typer.Option(None, "--format", help="Output format: csv or json"),
        output: Optional[Path] = typer.Option(None, "--output", "-o", help="Write the table to this file"),
        verbose: bool = typer.Option(False, "--verbose", "-v", help="Log at DEBUG level on standard error"),
    ):
        """Shared options for every command."""
        logging.basicConfig(
            level=logging.DEBUG if verbose else logging.WARNING,
            stream=sys.stderr,
            format="%(levelname)s %(name)s: %(message)s",
            force=True,
        )
        try:
            loaded = FermikitConfig.load(config_path) if config_path else (config or FermikitConfig.default())
            chosen = fmt or loaded.output.format
            if chosen not in FORMATS:
                raise ConfigError(f"Unsupported output format '{chosen}', expected one of {FORMATS}")
            resolved_threads = loaded.resolve_threads(threads)
        except (ConfigError, OSError) as exc:
            typer.echo(f"Failed to load configuration: {exc}", err=True)
            raise typer.Exit(EXIT_USAGE)
        ctx.obj = RunState(loaded, config_path, chosen, output, resolved_threads)

    def contour_kwargs(state: RunState, tol: Optional[float]) -> Dict[str, Any]:
        settings = state.config.contour
        return {
            "tol": tol if tol is not None else settings.tol,
            "nodes": settings.nodes,
            "max_nodes": settings.max_nodes,
            "order": state.config.fredholm.order,
            "kernel_tol": state.config.fredholm.kernel_tol,
        }

    @app.command("gap")
    def gap_command(
        ctx: typer.Context,
        n: int = N_OPTION,
        q: Optional[float] = Q_OPTION,
        c: Optional[float] = C_OPTION,
        scaling: str = SCALING_OPTION,
        region: str = typer.Option(..., "--region", help="Union of intervals, e.g. '-inf:1,2:3'"),
        path: Optional[str] = PATH_OPTION,
        tol: Optional[float] = TOL_OPTION,
    ):
        """P(all particles in the region)."""
        state = _state(ctx)
        with _guarded(state):
            params = model_params(n, q, c, scaling)
            options = contour_kwargs(state, tol)
            area = RegionSet.parse(region)
            result = gap_probability(area, params, path=path, **options)
            table = Table(
                ("region", "probability", "clamped", "im_residual", "nodes", "path"),
                config=state.run_config("gap", n=n, q=params.q, region=str(area), **options),
            )
            table.add(str(area), result.value, result.clamped, result.imag, result.nodes, result.path)
            _emit(state, table)

    @app.command("rightmost")
    def rightmost_command(
        ctx: typer.Context,
        n: int = N_OPTION,
        q: Optional[float] = Q_OPTION,
        c: Optional[float] = C_OPTION,
        scaling: str = SCALING_OPTION,
        s_grid: str = typer.Option(..., "--s-grid", help="start:stop:step or a comma list"),
        path: Optional[str] = PATH_OPTION,
        tol: Optional[float] = TOL_OPTION,
    ):
        """CDF of the rightmost particle."""
        state = _state(ctx)
        with _guarded(state):
            params = model_params(n, q, c, scaling)
            options = contour_kwargs(state, tol)
            table = Table(
                ("s", "cdf", "im_residual"),
                config=state.run_config("rightmost", n=n, q=params.q, s_grid=s_grid, path=path, **options),
            )
            for s in parse_grid(s_grid):
                result = rightmost_cdf(s, params, path=path, **options)
                table.add(s, result.value, result.imag)
            _emit(state, table)

    @app.command("corr")
    def corr_command(
        ctx: typer.Context,
        n: int = N_OPTION,
        q: Optional[float] = Q_OPTION,
        c: Optional[float] = C_OPTION,
        scaling: str = SCALING_OPTION,
        points: str = typer.Option(..., "--points", help="Comma list x_1,...,x_m"),
        path: Optional[str] = PATH_OPTION,
        tol: Optional[float] = TOL_OPTION,
    ):
        """m-point correlation function R^(m)."""
        state = _state(ctx)
        with _guarded(state):
            params = model_params(n, q, c, scaling)
            xs = tuple(parse_grid(points))
            tolerance = tol if tol is not None else state.config.contour.tol
            result = correlation(CorrelationRequest(xs, params, tolerance), path, state.config.fredholm.kernel_tol)
            table = Table(
                ("points", "correlation", "im_residual"),
                config=state.run_config("corr", n=n, q=params.q, points=list(xs), path=path, tol=tolerance),
            )
            table.add(list(xs), result.value, result.imag)
            _emit(state, table)

    @app.command("density")
    def density_command(
        ctx: typer.Context,
        n: int = N_OPTION,
        q: Optional[float] = Q_OPTION,
        c: Optional[float] = C_OPTION,
        scaling: str = SCALING_OPTION,
        x_grid: str = typer.Option(..., "--x-grid", help="start:stop:step or a comma list"),
        path: Optional[str] = PATH_OPTION,
        tol: Optional[float] = TOL_OPTION,
    ):
        """One-point density rho_n(x) = R^(1)(x)/n."""
        state = _state(ctx)
        with _guarded(state):
            params = model_params(n, q, c, scaling)
            xs = np.array(parse_grid(x_grid))
            tolerance = tol if tol is not None else state.config.contour.tol
            values = density(xs, params, tolerance, path)
            table = Table(
                ("x", "density"),
                config=state.run_config("density", n=n, q=params.q, x_grid=x_grid, path=path, tol=tolerance),
            )
            for x, value in zip(xs, np.atleast_1d(values)):
                table.add(float(x), float(value))
            _emit(state, table)

    @app.command("multitime-corr")
    def multitime_corr_command(
        ctx: typer.Context,
        n: int = N_OPTION,
        q: Optional[float] = Q_OPTION,
        c: Optional[float] = C_OPTION,
        scaling: str = SCALING_OPTION,
        points: str = typer.Option(..., "--points", help="Comma list x_1,...,x_m"),
        times: str = typer.Option(..., "--times", help="Comma list tau_1,...,tau_m in [0, -log q)"),
        path: Optional[str] = PATH_OPTION,
        tol: Optional[float] = TOL_OPTION,
    ):
        """Imaginary-time correlation of x_i at tau_i."""
        state = _state(ctx)
        with _guarded(state):
            params = model_params(n, q, c, scaling)
            xs = parse_grid(points)
            grid = TimeGrid.for_params(parse_grid(times), params)
            tolerance = tol if tol is not None else state.config.contour.tol
            result = multitime_correlation(xs, grid, params, tolerance, path, state.config.fredholm.kernel_tol)
            table = Table(
                ("points", "times", "correlation", "im_residual"),
                config=state.run_config(
                    "multitime-corr", n=n, q=params.q, points=xs, times=list(grid.times), path=path, tol=tolerance
                ),
            )
            table.add(xs, list(grid.times), result.value, result.imag)
            _emit(state, table)

    @app.command("multitime-gap")
    def multitime_gap_command(
        ctx: typer.Context,
        n: int = N_OPTION,
        q: Optional[float] = Q_OPTION,
        c: Optional[float] = C_OPTION,
        scaling: str = SCALING_OPTION,
        regions: List[str] = typer.Option(..., "--region", help="One region per time, repeated"),
        times: str = typer.Option(..., "--times", help="Comma list of distinct tau_k in [0, -log q)"),
        path: Optional[str] = PATH_OPTION,
        tol: Optional[float] = TOL_OPTION,
    ):
        """P(every particle in A_k at time tau_k)."""
        state = _state(ctx)
        with _guarded(state):
            params = model_params(n, q, c, scaling)
            areas = [RegionSet.parse(r) for r in regions]
            grid = TimeGrid.for_params(parse_grid(times), params)
            tolerance = tol if tol is not None else state.config.contour.tol
            result = multitime_gap(
                areas, grid, params, tolerance, path, state.config.fredholm.order, state.config.fredholm.kernel_tol
            )
            table = Table(
                ("regions", "times", "probability", "im_residual"),
                config=state.run_config(
                    "multitime-gap",
                    n=n,
                    q=params.q,
                    regions=[str(a) for a in areas],
                    times=list(grid.times),
                    path=path,
                    tol=tolerance,
                ),
            )
            table.add(" ; ".join(str(a) for a in areas), list(grid.times), result.value, result.imag)
            _emit(state, table)

    @limit_app.command("tw")
    def limit_tw(ctx: typer.Context, t: str = typer.Option("0", "--t", help="t value, grid or list")):
        """Tracy-Widom GUE distribution F_GUE(t)."""
        state = _state(ctx)
        with _guarded(state):
            table = Table(("t", "F"), config=state.run_config("limit tw", t=t))
            for value in parse_grid(t):
                table.add(value, limit_tracy_widom(value))
            _emit(state, table)

    @limit_app.command("crossover")
    def limit_crossover_command(
        ctx: typer.Context,
        t: str = typer.Option("0", "--t", help="t value, grid or list"),
        c: float = typer.Option(1.0, "--c", help="Crossover parameter"),
    ):
        """Crossover distribution F(t; c)."""
        state = _state(ctx)
        with _guarded(state):
            table = Table(("t", "F"), config=state.run_config("limit crossover", t=t, c=c))
            for value in parse_grid(t):
                table.add(value, limit_crossover(value, c))
            _emit(state, table)

    @limit_app.command("sine")
    def limit_sine(ctx: typer.Context, points: str = typer.Option(..., "--points", help="Comma list xi_1,...,xi_m")):
        """det of the sine kernel at the given points."""
        state = _state(ctx)
        with _guarded(state):
            xs = parse_grid(points)
            table = Table(("points", "correlation"), config=state.run_config("limit sine", points=xs))
            table.add(xs, limit_corr_sine(xs))
            _emit(state, table)

    @limit_app.command("interp")
    def limit_interp(
        ctx: typer.Context,
        points: str = typer.Option(..., "--points", help="Comma list xi_1,...,xi_m"),
        a: Optional[float] = typer.Option(None, "--a", help="Kernel parameter a > 0"),
        x: Optional[float] = typer.Option(None, "--x", help="Bulk point; with --c gives a = e^{c x^2}/(e^c - 1)"),
        c: Optional[float] = typer.Option(None, "--c", help="Bulk scaling constant"),
    ):
        """det of the interpolating kernel at the given points."""
        state = _state(ctx)
        with _guarded(state):
            if a is None:
                if x is None or c is None:
                    raise DomainError("Give --a, or both --x and --c")
                a = interp_parameter(x, c)
            xs = parse_grid(points)
            table = Table(("points", "a", "correlation"), config=state.run_config("limit interp", points=xs, a=a))
            table.add(xs, a, limit_corr_interp(xs, a))
            _emit(state, table)

    @limit_app.command("bulk-density")
    def limit_bulk(
        ctx: typer.Context,
        x_grid: str = typer.Option(..., "--x-grid", help="start:stop:step or a comma list"),
        c: float = typer.Option(..., "--c", help="Bulk scaling constant"),
    ):
        """Limiting global density at q = e^{-c/n}."""
        state = _state(ctx)
        with _guarded(state):
            xs = np.array(parse_grid(x_grid))
            values = np.atleast_1d(limit_bulk_density(xs, c))
            table = Table(("x", "density"), config=state.run_config("limit bulk-density", x_grid=x_grid, c=c))
            for x, value in zip(xs, values):
                table.add(float(x), float(value))
            _emit(state, table)

    app.add_typer(limit_app, name="limit")

    @app.command("edge-scan")
    def edge_scan_command(
        ctx: typer.Context,
        ns: str = typer.Option(..., "--ns", help="Comma list of n"),
        t: str = typer.Option("-2,0,2", "--t", help="t grid or list"),
        q: Optional[float] = Q_OPTION,
        c: Optional[float] = typer.Option(None, "--c", help="Crossover scaling q = e^{-c n^{-1/3}}"),
        tol: Optional[float] = TOL_OPTION,
    ):
        """Finite-n rightmost CDF at 2 sqrt n + t n^{-1/6} against its edge limit."""
        state = _state(ctx)
        with _guarded(state):
            tolerance = tol if tol is not None else state.config.contour.tol
            rows = edge_scan(parse_ints(ns), parse_grid(t), q=q, c=c, tol=tolerance)
            table = Table(
                ("n", "q", "t", "finite", "limit", "error"),
                config=state.run_config("edge-scan", ns=ns, t=t, q=q, c=c, tol=tolerance),
            )
            for row in rows:
                table.add(row.n, row.q, row.t, row.finite, row.limit, row.error)
            _emit(state, table)

    @app.command("bulk-scan")
    def bulk_scan_command(
        ctx: typer.Context,
        ns: str = typer.Option(..., "--ns", help="Comma list of n"),
        xi: str = typer.Option(..., "--xi", help="Comma list of scaled points"),
        x: float = typer.Option(..., "--x", help="Bulk point, |x| < 1 at fixed q"),
        q: Optional[float] = Q_OPTION,
        c: Optional[float] = typer.Option(None, "--c", help="Bulk scaling q = e^{-c/n}"),
        tol: Optional[float] = TOL_OPTION,
    ):
        """Scaled bulk correlations against the sine or interpolating process."""
        state = _state(ctx)
        with _guarded(state):
            tolerance = tol if tol is not None else state.config.contour.tol
            rows = bulk_scan(parse_ints(ns), parse_grid(xi), x, q=q, c=c, tol=tolerance)
            table = Table(
                ("n", "q", "xi", "finite", "limit", "error"),
                config=state.run_config("bulk-scan", ns=ns, xi=xi, x=x, q=q, c=c, tol=tolerance),
            )
            for row in rows:
                table.add(row.n, row.q, list(row.xi), row.finite, row.limit, row.error)
            _emit(state, table)

    @app.command("sample")
    def sample_command(
        ctx: typer.Context,
        n: int = N_OPTION,
        q: Optional[float] = Q_OPTION,
        c: Optional[float] = C_OPTION,
        scaling: str = SCALING_OPTION,
        draws: Optional[int] = typer.Option(None, "--draws", help="Number of draws (default from config)"),
        seed: Optional[int] = typer.Option(None, "--seed", help="Random seed (default from config)"),
        region: Optional[str] = typer.Option(None, "--region", help="Estimate the gap probability of this region"),
    ):
        """Exact draws of (eigenstate, positions), or a Monte Carlo gap estimate."""
        state = _state(ctx)
        with _guarded(state):
            params = model_params(n, q, c, scaling)
            count = draws if draws is not None else state.config.sampling.draws
            chosen_seed = seed if seed is not None else state.config.sampling.seed
            rng = RngStream(chosen_seed)
            options = dict(n=n, q=params.q, draws=count, seed=chosen_seed, rng=RNG_ALGORITHM, region=region)
            if region is not None:
                area = RegionSet.parse(region)
                estimate = mc_gap(area, params, count, rng)
                table = Table(("region", "estimate", "stderr", "draws"), config=state.run_config("sample", **options))
                table.add(str(area), estimate.estimate, estimate.stderr, count)
            else:
                state_stream, position_stream = rng.split(2)
                levels = sample_eigenstates(params, state_stream, count)
                streams = position_stream.split(count)
                table = Table(("draw", "levels", "positions"), config=state.run_config("sample", **options))
                for index, (ks, stream) in enumerate(zip(levels, streams)):
                    positions = sample_positions(EigenstateSample(tuple(int(k) for k in ks)), stream)
                    table.add(index, [int(k) for k in ks], [float(x) for x in positions])
            _emit(state, table)

    @app.command("verify-identities")
    def verify_command(
        ctx: typer.Context,
        model: str = typer.Option(..., "--model", help="mehler, single_pole, qtasep, qtazrp, whittaker or asep"),
        q: Optional[float] = typer.Option(None, "--q", help="q of the identity (tau for asep)"),
        z: str = typer.Option("0.3", "--z", help="Comma list of (complex) z values"),
        mode: str = typer.Option("series", "--mode", help="K evaluation: series or mellin_barnes"),
        variant: str = typer.Option("main", "--variant", help="main or alt"),
        order: int = typer.Option(96, "--order", help="Trapezoid nodes per circle"),
        tol: float = typer.Option(1e-6, "--tol", help="Largest acceptable gap"),
    ):
        """Both sides of the operator identities; exit 0 iff every gap is below --tol."""
        state = _state(ctx)
        with _guarded(state):
            values = [parse_complex(v) for v in z.split(",") if v.strip()]
            checks: List[IdentityCheck]
            if model == "mehler":
                checks = [mehler_identity(value, q if q is not None else 0.5) for value in values]
                options: Dict[str, Any] = {"q": q if q is not None else 0.5}
            else:
                options = dict(IDENTITY_PRESETS.get(model, {}))
                if q is not None:
                    options["tau" if model == "asep" else "q"] = q
                config = preset(model, **options)
                checks = [verify_identity(config, value, order, mode, variant) for value in values]
            table = Table(
                ("z", "lhs", "rhs", "gap"),
                config=state.run_config(
                    "verify-identities", model=model, model_params=options, mode=mode, variant=variant, order=order, tol=tol
                ),
            )
            for value, check in zip(values, checks):
                table.add(value, check.lhs, check.rhs, check.gap)
            _emit(state, table)
            worst = max(check.gap for check in checks)
            if not worst < tol:
                raise VerificationFailed(f"Identity gap {worst:.3e} exceeds {tol:.0e}")

    @app.command("self-test")
    def self_test_command(
        ctx: typer.Context,
        only: Optional[List[str]] = typer.Option(None, "--only", help="Run only these checks (repeat or comma list)"),
        seed: Optional[int] = typer.Option(None, "--seed", help="Random seed (default from config)"),
    ):
        """Run the acceptance checks and report pass/fail per check."""
        state = _state(ctx)
        with _guarded(state):
            context = SelfTestContext.from_config(state.config)
            if seed is not None:
                context = SelfTestContext(seed, context.draws, context.energy_cutoff)
            outcomes = run_checks(context, only)
            _emit(state, report(outcomes, state.run_config("self-test", only=only, seed=context.seed)))
            failed = [outcome.name for outcome in outcomes if not outcome.passed]
            if failed:
                raise VerificationFailed(f"Failed checks: {', '.join(failed)}")

    return app


def main(argv: Optional[Sequence[str]] = None) -> None:
    app = create_app()
    try:
        app(prog_name="fermikit", args=list(argv) if argv is not None else None)
    except SystemExit:
        raise
    except Exception as e:
        typer.echo(f"Application error: {str(e)}", err=True)
        sys.exit(EXIT_FAILED)


if __name__ == "__main__":
    main()
