"""Command-line front end.

Exit codes: 0 success, 1 validation or parse failure, 2 solver time limit
reached (partial results are still written), 3 I/O failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .makespan import EvaluationError, evaluate, phase_breakdown, timeline_csv
from .mip import PiecewiseSpec
from .plan import BarrierConfig, PlanError, load_plan, save_plan, validate_plan
from .platform import (
    ENVIRONMENT_KINDS,
    ScenarioError,
    Scenario,
    load_scenario,
    make_environment,
    make_two_cluster_example,
    save_scenario,
)
from .reporting import (
    STRATEGIES,
    barrier_sweep,
    compare_strategies,
    format_rows,
    plan_for_strategy,
)
from .simulate import SimConfig, SimulationError, simulate, trace_csv
from .units import UnitSuffixError, parse_size

EXIT_VALIDATION = 1
EXIT_SOLVER_LIMIT = 2
EXIT_IO = 3

_VALIDATION_ERRORS = (ScenarioError, PlanError, EvaluationError, SimulationError,
                      UnitSuffixError, ValueError)


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_scenario(path: str, alpha: float | None) -> Scenario:
    if not Path(path).exists():
        _fail(EXIT_IO, f"scenario file not found: {path}")
    try:
        scenario = load_scenario(path)
    except ScenarioError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    if alpha is not None:
        scenario = scenario.with_alpha(alpha)
    return scenario


def _load_plan(path: str):
    if not Path(path).exists():
        _fail(EXIT_IO, f"plan file not found: {path}")
    try:
        return load_plan(path)
    except PlanError as exc:
        _fail(EXIT_VALIDATION, str(exc))


def _barriers(code: str) -> BarrierConfig:
    try:
        return BarrierConfig.from_code(code)
    except ValueError as exc:
        _fail(EXIT_VALIDATION, str(exc))


solver_options = [
    click.option("--breakpoints", type=int, default=10, show_default=True,
                 help="Piecewise breakpoints per quadratic term."),
    click.option("--tol", type=float, default=1e-4, show_default=True,
                 help="Relative optimality gap target."),
    click.option("--time-limit", type=float, default=300.0, show_default=True,
                 help="Solver wall-clock budget per program, seconds."),
]


def _with_options(options):
    def wrap(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn
    return wrap


@click.group()
@click.version_option(package_name="gdmr")
def main():
    """Plan, optimize, and simulate MapReduce jobs over geo-distributed
    data sources and clusters."""


@main.command()
@click.argument("kind", type=click.Choice(("two-cluster",) + ENVIRONMENT_KINDS))
@click.option("--seed", type=int, default=0, show_default=True, help="Generator seed.")
@click.option("--alpha", type=float, default=1.0, show_default=True)
@click.option("-o", "--output", type=click.Path(), required=True)
def scenario(kind, seed, alpha, output):
    """Write a named scenario file (the tutorial two-cluster platform or a
    generated 8-node environment)."""
    if kind == "two-cluster":
        sc = make_two_cluster_example(alpha)
    else:
        sc = make_environment(kind, seed, alpha)
    try:
        save_scenario(sc, output)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write {output}: {exc}")
    click.echo(f"wrote {sc.name} to {output}")


@main.command("evaluate")
@click.option("--scenario", "scenario_path", required=True, type=click.Path())
@click.option("--plan", "plan_path", required=True, type=click.Path())
@click.option("--barriers", default="G-G-G", show_default=True,
              help="Barrier triple: push/map, map/shuffle, shuffle/reduce.")
@click.option("--alpha", type=float, default=None, help="Override the scenario's alpha.")
@click.option("--format", "fmt", type=click.Choice(["table", "csv"]), default="table")
def evaluate_cmd(scenario_path, plan_path, barriers, alpha, fmt):
    """Evaluate a plan file's phase timeline and makespan."""
    sc = _load_scenario(scenario_path, alpha)
    plan = _load_plan(plan_path)
    b = _barriers(barriers)
    result = validate_plan(plan, sc.platform)
    if not result.ok:
        for v in result.violations:
            click.echo(f"invalid plan: {v}", err=True)
        sys.exit(EXIT_VALIDATION)
    timeline = evaluate(sc.platform, sc.workload, plan, b)
    if fmt == "csv":
        click.echo(timeline_csv(timeline, sc.platform), nl=False)
    else:
        click.echo(f"scenario: {sc.name}   barriers: {b.code}   alpha: {sc.workload.alpha:g}")
        for node, phase, start, end in _timeline_rows(timeline, sc.platform):
            click.echo(f"  {node:>8s} {phase:<8s} {start:14.3f} .. {end:14.3f} s")
        parts = "  ".join(f"{k}={v:.3f}" for k, v in phase_breakdown(timeline).items())
        click.echo(f"breakdown: {parts}")
        click.echo(f"makespan: {timeline.makespan!r} s")


def _timeline_rows(timeline, platform):
    from .makespan import timeline_rows

    return timeline_rows(timeline, platform)


@main.command("plan")
@click.option("--scenario", "scenario_path", required=True, type=click.Path())
@click.option("--strategy", type=click.Choice(STRATEGIES), required=True)
@click.option("--barriers", default="G-G-G", show_default=True)
@click.option("--alpha", type=float, default=None)
@_with_options(solver_options)
@click.option("-o", "--output", type=click.Path(), required=True, help="Plan file to write.")
@click.option("--report", "report_path", type=click.Path(), default=None,
              help="Also write the solve report as JSON.")
@click.option("--buckets", type=int, default=None,
              help="Include a bucketized rendering with this many hash buckets.")
def plan_cmd(scenario_path, strategy, barriers, alpha, breakpoints, tol, time_limit,
             output, report_path, buckets):
    """Construct a plan with the given strategy and write it to a file."""
    sc = _load_scenario(scenario_path, alpha)
    b = _barriers(barriers)
    spec = PiecewiseSpec(breakpoint_count=breakpoints)
    try:
        plan, rep = plan_for_strategy(sc, strategy, b, spec, tol, time_limit)
    except _VALIDATION_ERRORS as exc:
        _fail(EXIT_VALIDATION, str(exc))
    timeline = evaluate(sc.platform, sc.workload, plan, b)
    try:
        save_plan(plan, output, bucket_count=buckets)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write {output}: {exc}")
    payload = {
        "scenario": sc.name,
        "strategy": strategy,
        "barriers": b.code,
        "alpha": sc.workload.alpha,
        "predicted_makespan_s": timeline.makespan,
        "breakdown": phase_breakdown(timeline),
    }
    if rep is not None:
        payload.update({
            "mip_objective_s": rep.mip_objective,
            "gap": rep.gap,
            "node_count": rep.node_count,
            "wall_time_s": rep.wall_time,
            "certified_error_s": rep.certified_error,
            "time_limited": rep.time_limited,
            "stages": rep.stages,
        })
    if report_path is not None:
        try:
            Path(report_path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        except OSError as exc:
            _fail(EXIT_IO, f"cannot write {report_path}: {exc}")
    click.echo(f"wrote plan to {output}; predicted makespan {timeline.makespan!r} s")
    if rep is not None and rep.time_limited:
        click.echo("warning: solver hit its time limit; plan is the best incumbent", err=True)
        sys.exit(EXIT_SOLVER_LIMIT)


@main.command("compare")
@click.option("--scenario", "scenario_path", required=True, type=click.Path())
@click.option("--strategy", "strategies", type=click.Choice(STRATEGIES), multiple=True,
              default=("uniform", "myopic", "e2e"), show_default=True)
@click.option("--alpha", "alphas", type=float, multiple=True, default=(1.0,), show_default=True)
@click.option("--barriers", default="G-G-G", show_default=True)
@_with_options(solver_options)
@click.option("--format", "fmt", type=click.Choice(["csv", "table", "json-lines"]),
              default="table", show_default=True)
def compare_cmd(scenario_path, strategies, alphas, barriers, breakpoints, tol,
                time_limit, fmt):
    """Compare strategies across alpha values; makespans are normalized to
    the uniform baseline of the same scenario, alpha, and barriers."""
    sc = _load_scenario(scenario_path, None)
    b = _barriers(barriers)
    spec = PiecewiseSpec(breakpoint_count=breakpoints)
    try:
        rows, limited = compare_strategies(sc, list(strategies), list(alphas), b,
                                           spec, tol, time_limit)
    except _VALIDATION_ERRORS as exc:
        _fail(EXIT_VALIDATION, str(exc))
    click.echo(format_rows(rows, fmt), nl=False)
    if limited:
        click.echo("warning: at least one solve hit its time limit", err=True)
        sys.exit(EXIT_SOLVER_LIMIT)


@main.command("barrier-sweep")
@click.option("--scenario", "scenario_path", required=True, type=click.Path())
@click.option("--alpha", "alphas", type=float, multiple=True, default=(1.0,), show_default=True)
@_with_options(solver_options)
@click.option("--format", "fmt", type=click.Choice(["csv", "table", "json-lines"]),
              default="table", show_default=True)
def barrier_sweep_cmd(scenario_path, alphas, breakpoints, tol, time_limit, fmt):
    """Optimize under all-global barriers, then relax one boundary at a
    time to pipelining (and all of them); report normalized makespans."""
    sc = _load_scenario(scenario_path, None)
    spec = PiecewiseSpec(breakpoint_count=breakpoints)
    try:
        rows, limited = barrier_sweep(sc, list(alphas), spec, tol, time_limit)
    except _VALIDATION_ERRORS as exc:
        _fail(EXIT_VALIDATION, str(exc))
    click.echo(format_rows(rows, fmt), nl=False)
    if limited:
        click.echo("warning: at least one solve hit its time limit", err=True)
        sys.exit(EXIT_SOLVER_LIMIT)


@main.command("simulate")
@click.option("--scenario", "scenario_path", required=True, type=click.Path())
@click.option("--plan", "plan_path", required=True, type=click.Path())
@click.option("--chunk", default="64MB", show_default=True,
              help="Transfer/compute granularity; 0 for fluid mode.")
@click.option("--barriers", default="G-G-G", show_default=True)
@click.option("--alpha", type=float, default=None)
@click.option("--trace", "trace_path", type=click.Path(), default=None,
              help="Write the event trace as CSV.")
def simulate_cmd(scenario_path, plan_path, chunk, barriers, alpha, trace_path):
    """Simulate a plan and report measured vs predicted makespan."""
    sc = _load_scenario(scenario_path, alpha)
    plan = _load_plan(plan_path)
    b = _barriers(barriers)
    try:
        chunk_bytes = parse_size(chunk, "chunk")
        cfg = SimConfig(chunk_size=chunk_bytes, barriers=b)
        trace = simulate(sc.platform, sc.workload, plan, cfg)
    except _VALIDATION_ERRORS as exc:
        _fail(EXIT_VALIDATION, str(exc))
    predicted = evaluate(sc.platform, sc.workload, plan, b).makespan
    measured = trace.measured_timeline.makespan
    rel = abs(measured - predicted) / predicted if predicted else 0.0
    if trace_path is not None:
        try:
            Path(trace_path).write_text(trace_csv(trace))
        except OSError as exc:
            _fail(EXIT_IO, f"cannot write {trace_path}: {exc}")
        click.echo(f"wrote {len(trace.events)} events to {trace_path}")
    click.echo(f"predicted: {predicted!r} s")
    click.echo(f"measured:  {measured!r} s")
    click.echo(f"relative error: {rel:.3e}")


if __name__ == "__main__":
    main()
