"""Command-line interface.

Subcommands: gen-demand, solve, validate, forecast, bench.  Exit codes:
0 success, 1 I/O failure, 2 usage or input validation, 3 infeasible,
4 constraint validation failure, 5 numerical failure.

Every run that produces an output directory writes a run.manifest of
flat key = value pairs recording the invocation.  The manifest is the
one file allowed to differ between identical reruns (it records wall
time); all data outputs are byte-identical for identical arguments.
"""

from __future__ import annotations

import argparse
import statistics
import sys
import time
from decimal import Decimal
from pathlib import Path

import numpy as np

from . import __version__
from .domain import (ConfigError, DemandSeries, FleetParams, gen_demand,
                     load_config, load_demand, save_demand)
from .forecast import (ArimaOrder, DegenerateSeriesError, LengthMismatchError,
                       NoninvertibleMAError, NumericalBreakdownError,
                       SeriesTooShortError, acf, astrom_predict, pacf,
                       r_squared, rls_fit, whiteness_check,
                       write_diagnostics_csv, write_forecast_csv)
from .greedy import UnseedableError
from .metaheuristic import (AnnealSchedule, SolverConfig, solve, solve_plain_ga,
                            write_trace_csv)
from .model import (InfeasibleError, ScheduleFormatError, UnrepairableError,
                    read_schedule_csv, validate, write_schedule_csv)

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_VALIDATION = 4
EXIT_NUMERICAL = 5

SCENARIOS = {
    "base": {"attrition_rate": Decimal("0")},
    "k20": {"attrition_rate": Decimal("0.20")},
    "k10g20": {"attrition_rate": Decimal("0.10"), "instruct_capacity": 20},
}


def _apply_scenario(fleet: FleetParams, name: str | None) -> FleetParams:
    if not name:
        return fleet
    overrides = SCENARIOS[name]
    return FleetParams(
        instruct_capacity=overrides.get("instruct_capacity", fleet.instruct_capacity),
        attrition_rate=overrides.get("attrition_rate", fleet.attrition_rate),
        initial_vessels=fleet.initial_vessels,
        initial_operators=fleet.initial_operators,
        horizon=fleet.horizon,
    )


def write_manifest(path: Path, entries: dict) -> None:
    lines = [f"{k} = {v}" for k, v in entries.items()]
    path.write_text("\n".join(lines) + "\n")


def _solver_config(args, seed: int) -> SolverConfig:
    return SolverConfig(
        population_size=args.population,
        crossover_rate=args.crossover_rate,
        base_mutation_rate=args.mutation_rate,
        mutation_magnitude_per_temp=args.mutation_magnitude,
        rng_seed=seed,
        max_iterations=args.max_evals,
    )


def _anneal_schedule(args) -> AnnealSchedule:
    return AnnealSchedule(initial_temp=args.t0, cooling_coeff=args.cooling,
                          termination_temp=args.termination)


def _add_solver_flags(sub) -> None:
    sub.add_argument("--population", type=int, default=60)
    sub.add_argument("--t0", type=float, default=100.0)
    sub.add_argument("--cooling", type=float, default=0.98)
    sub.add_argument("--termination", type=float, default=0.01)
    sub.add_argument("--crossover-rate", type=float, default=0.8)
    sub.add_argument("--mutation-rate", type=float, default=0.1)
    sub.add_argument("--mutation-magnitude", type=float, default=0.05)
    sub.add_argument("--max-evals", type=int, default=200_000)


def cmd_gen_demand(args) -> int:
    demand = gen_demand(args.horizon, args.seed, args.level, args.volatility)
    save_demand(args.out, demand)
    print(f"wrote {len(demand)} weeks to {args.out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    started = time.perf_counter_ns()
    costs, fleet = load_config(args.config)
    fleet = _apply_scenario(fleet, args.scenario)
    demand = load_demand(args.demand)
    if len(demand) != fleet.horizon:
        raise ConfigError(
            f"demand covers {len(demand)} weeks but config horizon is {fleet.horizon}")
    config = _solver_config(args, args.seed)
    schedule_prog = _anneal_schedule(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    result = solve(demand, fleet, costs, config, schedule_prog,
                   use_greedy_seed=not args.no_greedy_seed)
    write_schedule_csv(out_dir / "schedule.csv", result.schedule)
    write_trace_csv(out_dir / "trace.csv", result.trace)
    wall_ms = (time.perf_counter_ns() - started) // 1_000_000
    write_manifest(out_dir / "run.manifest", {
        "command": "solve",
        "config_path": args.config,
        "demand_path": args.demand,
        "rng_seed": args.seed,
        "output_dir": out_dir,
        "tool_version": __version__,
        "scenario": args.scenario or "",
        "population": config.population_size,
        "t0": schedule_prog.initial_temp,
        "cooling": schedule_prog.cooling_coeff,
        "termination": schedule_prog.termination_temp,
        "crossover_rate": config.crossover_rate,
        "mutation_rate": config.base_mutation_rate,
        "mutation_magnitude": config.mutation_magnitude_per_temp,
        "max_evals": config.max_iterations,
        "greedy_seed": not args.no_greedy_seed,
        "best_cost": result.schedule.total_cost,
        "evals_total": result.trace.evals_total,
        "evals_to_best": result.trace.evals_to_best,
        "wall_ms": wall_ms,
    })
    print(f"best cost {result.schedule.total_cost}, reached after "
          f"{result.trace.evals_to_best} iterations "
          f"({result.trace.evals_total} total evaluations); outputs in {out_dir}")
    return EXIT_OK


def cmd_validate(args) -> int:
    costs, fleet = load_config(args.config)
    fleet = _apply_scenario(fleet, args.scenario)
    demand = load_demand(args.demand)
    try:
        schedule = read_schedule_csv(args.schedule)
    except ScheduleFormatError as err:
        print(f"schedule rejected: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    violations = validate(schedule, demand, fleet, costs)
    if violations:
        for v in violations:
            print(f"week {v.week}: {v.constraint}: {v.detail}")
        return EXIT_VALIDATION
    print("OK")
    return EXIT_OK


def _parse_order(raw: str) -> ArimaOrder:
    parts = raw.split(",")
    if len(parts) != 3:
        raise ConfigError(f"order must be p,d,q, got {raw!r}")
    try:
        p, d, q = (int(v) for v in parts)
    except ValueError:
        raise ConfigError(f"order must be three integers, got {raw!r}") from None
    try:
        return ArimaOrder(p, d, q)
    except ValueError as err:
        raise ConfigError(str(err)) from None


def _residual_acf_pacf(resid, max_lag: int) -> tuple[np.ndarray, np.ndarray]:
    # all-zero residuals (perfect fit) have no correlation structure
    if float(np.max(np.abs(resid))) == 0.0:
        flat = np.zeros(max_lag + 1)
        flat[0] = 1.0
        return flat, flat.copy()
    return acf(resid, max_lag), pacf(resid, max_lag)


def cmd_forecast(args) -> int:
    started = time.perf_counter_ns()
    demand = load_demand(args.demand)
    order = _parse_order(args.order)
    if args.horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {args.horizon}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    model, resid = rls_fit(demand.values, order, args.forgetting)
    extension = []
    for k in range(1, args.horizon + 1):
        raw = astrom_predict(model, demand.values, k)
        extension.append(max(0, int(np.floor(raw + 0.5))))
    forecast_series = DemandSeries(tuple(extension))

    n_params = order.p + order.q
    max_lag = min(args.max_lag, len(resid) - 1)
    if max_lag <= n_params:
        raise ConfigError(
            f"need max_lag > {n_params} fitted coefficients, feasible max is {max_lag}")
    q_stat, white = whiteness_check(resid, max_lag, n_params)
    acf_vals, pacf_vals = _residual_acf_pacf(resid, max_lag)
    actual = np.asarray(demand.values, dtype=float)[order.d:]
    fitted = actual - resid
    try:
        r2 = r_squared(fitted, actual)
    except DegenerateSeriesError:
        r2 = float("nan")

    write_forecast_csv(out_dir / "forecast.csv", demand, forecast_series)
    write_diagnostics_csv(out_dir / "diagnostics.csv", acf_vals, pacf_vals,
                          q_stat, max_lag - n_params, white, r2)
    wall_ms = (time.perf_counter_ns() - started) // 1_000_000
    write_manifest(out_dir / "run.manifest", {
        "command": "forecast",
        "config_path": "",
        "demand_path": args.demand,
        "rng_seed": "",
        "output_dir": out_dir,
        "tool_version": __version__,
        "order": f"{order.p},{order.d},{order.q}",
        "horizon": args.horizon,
        "lambda": args.forgetting,
        "max_lag": max_lag,
        "q_statistic": repr(q_stat),
        "white": str(white).lower(),
        "r_squared": repr(r2),
        "wall_ms": wall_ms,
    })
    print(f"forecast {args.horizon} weeks; residual Q={q_stat:.3f} "
          f"(white={str(white).lower()}), r_squared={r2:.4f}; outputs in {out_dir}")
    return EXIT_OK


def cmd_bench(args) -> int:
    started = time.perf_counter_ns()
    costs, fleet = load_config(args.config)
    fleet = _apply_scenario(fleet, args.scenario)
    demand = load_demand(args.demand)
    if len(demand) != fleet.horizon:
        raise ConfigError(
            f"demand covers {len(demand)} weeks but config horizon is {fleet.horizon}")
    out_path = Path(args.out)
    out_dir = out_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    schedule_prog = _anneal_schedule(args)

    rows = []
    timings = {"hybrid": 0, "plain": 0}
    for seed in range(args.seed_base, args.seed_base + args.seeds):
        config = _solver_config(args, seed)
        t0 = time.perf_counter_ns()
        hybrid = solve(demand, fleet, costs, config, schedule_prog)
        timings["hybrid"] += (time.perf_counter_ns() - t0) // 1_000_000
        # the baseline gets the same evaluation budget the hybrid spent
        plain_config = SolverConfig(
            population_size=config.population_size,
            crossover_rate=config.crossover_rate,
            base_mutation_rate=config.base_mutation_rate,
            mutation_magnitude_per_temp=config.mutation_magnitude_per_temp,
            rng_seed=seed,
            max_iterations=max(hybrid.trace.evals_total, config.population_size),
        )
        t0 = time.perf_counter_ns()
        plain = solve_plain_ga(demand, fleet, costs, plain_config)
        timings["plain"] += (time.perf_counter_ns() - t0) // 1_000_000
        rows.append(("hybrid", seed, hybrid.schedule.total_cost,
                     hybrid.trace.evals_to_best))
        rows.append(("plain", seed, plain.schedule.total_cost,
                     plain.trace.evals_to_best))
        if args.traces:
            write_trace_csv(out_dir / f"trace_hybrid_seed{seed}.csv", hybrid.trace)
            write_trace_csv(out_dir / f"trace_plain_seed{seed}.csv", plain.trace)

    # wall_ms stays 0 in the CSV so identical reruns are byte-identical;
    # measured times go to stdout and the manifest
    lines = ["method,seed,best_cost,iterations_to_best,wall_ms"]
    for method, seed, cost, iters in rows:
        lines.append(f"{method},{seed},{cost},{iters},0")
    summary = {}
    for method in ("hybrid", "plain"):
        costs_ = [cost for m, _, cost, _ in rows if m == method]
        iters_ = [it for m, _, _, it in rows if m == method]
        med_cost = statistics.median(costs_)
        med_iters = statistics.median(iters_)
        summary[method] = (med_cost, med_iters)
        lines.append(f"{method},median,{med_cost},{med_iters},0")
    out_path.write_text("\n".join(lines) + "\n")

    wall_ms = (time.perf_counter_ns() - started) // 1_000_000
    write_manifest(out_dir / "run.manifest", {
        "command": "bench",
        "config_path": args.config,
        "demand_path": args.demand,
        "rng_seed": args.seed_base,
        "output_dir": out_dir,
        "tool_version": __version__,
        "scenario": args.scenario or "",
        "seeds": args.seeds,
        "population": args.population,
        "t0": args.t0,
        "cooling": args.cooling,
        "termination": args.termination,
        "max_evals": args.max_evals,
        "hybrid_median_cost": summary["hybrid"][0],
        "hybrid_median_iters": summary["hybrid"][1],
        "plain_median_cost": summary["plain"][0],
        "plain_median_iters": summary["plain"][1],
        "hybrid_wall_ms": timings["hybrid"],
        "plain_wall_ms": timings["plain"],
        "wall_ms": wall_ms,
    })
    print(f"hybrid median cost {summary['hybrid'][0]} at {summary['hybrid'][1]} evals; "
          f"plain median cost {summary['plain'][0]} at {summary['plain'][1]} evals "
          f"(wall: hybrid {timings['hybrid']}ms, plain {timings['plain']}ms)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fleetplan",
        description="Weekly fleet procurement planning and demand forecasting.")
    parser.add_argument("--version", action="version", version=f"fleetplan {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-demand", help="generate a synthetic demand series")
    g.add_argument("--horizon", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--level", type=float, required=True)
    g.add_argument("--volatility", type=float, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_demand)

    s = sub.add_parser("solve", help="optimize a purchase schedule")
    s.add_argument("--config", required=True)
    s.add_argument("--demand", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--scenario", choices=sorted(SCENARIOS))
    s.add_argument("--no-greedy-seed", action="store_true")
    _add_solver_flags(s)
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("validate", help="check a schedule against the constraints")
    v.add_argument("--config", required=True)
    v.add_argument("--demand", required=True)
    v.add_argument("--schedule", required=True)
    v.add_argument("--scenario", choices=sorted(SCENARIOS))
    v.set_defaults(func=cmd_validate)

    f = sub.add_parser("forecast", help="extend a demand series")
    f.add_argument("--demand", required=True)
    f.add_argument("--order", required=True, help="p,d,q")
    f.add_argument("--horizon", type=int, required=True)
    f.add_argument("--lambda", dest="forgetting", type=float, default=0.98,
                   help="forgetting factor in (0.9, 1]")
    f.add_argument("--max-lag", type=int, default=20)
    f.add_argument("--out-dir", required=True)
    f.set_defaults(func=cmd_forecast)

    b = sub.add_parser("bench", help="compare hybrid and plain GA over seeds")
    b.add_argument("--config", required=True)
    b.add_argument("--demand", required=True)
    b.add_argument("--seeds", type=int, required=True)
    b.add_argument("--seed-base", type=int, default=0)
    b.add_argument("--scenario", choices=sorted(SCENARIOS))
    b.add_argument("--traces", action="store_true",
                   help="also write per-run convergence traces")
    b.add_argument("--out", required=True,
                   help="path of the summary CSV; companion files go beside it")
    _add_solver_flags(b)
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handles usage errors and --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (UnseedableError, UnrepairableError, InfeasibleError) as err:
        print(f"infeasible: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NoninvertibleMAError, NumericalBreakdownError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SeriesTooShortError, LengthMismatchError, DegenerateSeriesError,
            ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as err:
        print(f"io error: {err}", file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
