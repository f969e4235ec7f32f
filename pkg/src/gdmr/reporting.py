"""Strategy comparison tables and barrier-relaxation sweeps.

Every makespan is normalized against the same scenario's uniform plan
under the same barrier configuration (or, for barrier sweeps, against the
optimized all-global-barrier makespan), so rows are comparable across
heterogeneous environments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .makespan import evaluate
from .mip import PiecewiseSpec
from .optimize import (
    optimize_end_to_end,
    optimize_myopic,
    optimize_single_phase,
)
from .plan import Barrier, BarrierConfig, ExecutionPlan, affinity_plan, uniform_plan
from .platform import Scenario
from .solve import DEFAULT_TIME_LIMIT, DEFAULT_TOL, SolveReport

STRATEGIES = ("uniform", "affinity", "myopic", "single-push", "single-shuffle", "e2e")

CSV_HEADER = "scenario,strategy,barriers,alpha,makespan_s,normalized,push_s,map_s,shuffle_s,reduce_s"


@dataclass(frozen=True)
class ComparisonRow:
    scenario: str
    strategy: str
    barriers: str
    alpha: float
    makespan_s: float
    normalized: float
    breakdown: dict[str, float]


def plan_for_strategy(scenario: Scenario, strategy: str, barriers: BarrierConfig,
                      spec: PiecewiseSpec = PiecewiseSpec(),
                      tol: float = DEFAULT_TOL,
                      time_limit: float = DEFAULT_TIME_LIMIT) -> tuple[ExecutionPlan, SolveReport | None]:
    """Produce the plan a named strategy yields on this scenario; solver
    strategies also return their report."""
    p, w = scenario.platform, scenario.workload
    if strategy == "uniform":
        return uniform_plan(p), None
    if strategy == "affinity":
        return affinity_plan(p), None
    if strategy == "myopic":
        rep = optimize_myopic(p, w, barriers, spec, tol, time_limit)
    elif strategy == "single-push":
        rep = optimize_single_phase(p, w, barriers, "push", spec, tol, time_limit)
    elif strategy == "single-shuffle":
        rep = optimize_single_phase(p, w, barriers, "shuffle", spec, tol, time_limit)
    elif strategy == "e2e":
        rep = optimize_end_to_end(p, w, barriers, spec, tol, time_limit)
    else:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    return rep.plan, rep


def compare_strategies(scenario: Scenario, strategies: list[str], alphas: list[float],
                       barriers: BarrierConfig,
                       spec: PiecewiseSpec = PiecewiseSpec(),
                       tol: float = DEFAULT_TOL,
                       time_limit: float = DEFAULT_TIME_LIMIT) -> tuple[list[ComparisonRow], bool]:
    """One row per (alpha ascending, strategy in given order). Returns the
    rows and whether any solve hit its time limit."""
    rows: list[ComparisonRow] = []
    limited = False
    for alpha in sorted(alphas):
        sc = scenario.with_alpha(alpha)
        baseline = evaluate(sc.platform, sc.workload, uniform_plan(sc.platform), barriers).makespan
        for strategy in strategies:
            plan, rep = plan_for_strategy(sc, strategy, barriers, spec, tol, time_limit)
            if rep is not None and rep.time_limited:
                limited = True
            timeline = evaluate(sc.platform, sc.workload, plan, barriers)
            normalized = 1.0 if strategy == "uniform" else timeline.makespan / baseline
            rows.append(ComparisonRow(sc.name, strategy, barriers.code, alpha,
                                      timeline.makespan, normalized, timeline.breakdown))
    return rows, limited


_SWEEP_LABELS = (
    ("all-global", BarrierConfig.all_global()),
    ("pipelined-push/map", BarrierConfig(Barrier.PIPELINED, Barrier.GLOBAL, Barrier.GLOBAL)),
    ("pipelined-map/shuffle", BarrierConfig(Barrier.GLOBAL, Barrier.PIPELINED, Barrier.GLOBAL)),
    ("pipelined-shuffle/reduce", BarrierConfig(Barrier.GLOBAL, Barrier.GLOBAL, Barrier.PIPELINED)),
    ("all-pipelined", BarrierConfig.all_pipelined()),
)


def barrier_sweep(scenario: Scenario, alphas: list[float],
                  spec: PiecewiseSpec = PiecewiseSpec(),
                  tol: float = DEFAULT_TOL,
                  time_limit: float = DEFAULT_TIME_LIMIT) -> tuple[list[ComparisonRow], bool]:
    """For each alpha: optimize under all-global barriers, then with each
    single boundary relaxed to pipelining, then all-pipelined; normalize to
    the all-global optimum."""
    rows: list[ComparisonRow] = []
    limited = False
    for alpha in sorted(alphas):
        sc = scenario.with_alpha(alpha)
        baseline = None
        for label, barriers in _SWEEP_LABELS:
            rep = optimize_end_to_end(sc.platform, sc.workload, barriers, spec, tol, time_limit)
            limited = limited or rep.time_limited
            timeline = evaluate(sc.platform, sc.workload, rep.plan, barriers)
            if baseline is None:
                baseline = timeline.makespan  # the all-global entry comes first
            normalized = 1.0 if label == "all-global" else timeline.makespan / baseline
            rows.append(ComparisonRow(sc.name, label, barriers.code, alpha,
                                      timeline.makespan, normalized, timeline.breakdown))
    return rows, limited


def rows_to_csv(rows: list[ComparisonRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        bd = r.breakdown
        lines.append(
            f"{r.scenario},{r.strategy},{r.barriers},{r.alpha!r},{r.makespan_s!r},"
            f"{r.normalized!r},{bd['push']!r},{bd['map']!r},{bd['shuffle']!r},{bd['reduce']!r}")
    return "\n".join(lines) + "\n"


def rows_to_jsonl(rows: list[ComparisonRow]) -> str:
    out = []
    for r in rows:
        out.append(json.dumps({
            "scenario": r.scenario, "strategy": r.strategy, "barriers": r.barriers,
            "alpha": r.alpha, "makespan_s": r.makespan_s, "normalized": r.normalized,
            "breakdown": r.breakdown,
        }, sort_keys=True))
    return "\n".join(out) + "\n"


def rows_to_table(rows: list[ComparisonRow]) -> str:
    header = ["scenario", "strategy", "barriers", "alpha", "makespan_s", "normalized",
              "push_s", "map_s", "shuffle_s", "reduce_s"]
    table = [header]
    for r in rows:
        bd = r.breakdown
        table.append([
            r.scenario, r.strategy, r.barriers, f"{r.alpha:g}", f"{r.makespan_s:.3f}",
            f"{r.normalized:.4f}", f"{bd['push']:.3f}", f"{bd['map']:.3f}",
            f"{bd['shuffle']:.3f}", f"{bd['reduce']:.3f}"])
    widths = [max(len(row[c]) for row in table) for c in range(len(header))]
    lines = []
    for i, row in enumerate(table):
        lines.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * widths[c] for c in range(len(header))))
    return "\n".join(lines) + "\n"


def format_rows(rows: list[ComparisonRow], fmt: str) -> str:
    if fmt == "csv":
        return rows_to_csv(rows)
    if fmt == "json-lines":
        return rows_to_jsonl(rows)
    if fmt == "table":
        return rows_to_table(rows)
    raise ValueError(f"unknown format {fmt!r}")
