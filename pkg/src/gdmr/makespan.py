"""Analytic makespan model.

Evaluates the full phase timeline of a valid plan. Phase boundaries follow
the configured discipline:

* global: every node waits for the slowest node of the previous phase, and
  the phase ends start + duration later;
* local: each node starts when its own inputs are complete (start +
  duration);
* pipelined: full overlap, so a node's phase ends at max(start, duration).

Durations: a mapper receives D_i * x[i, j] over link (i, j), computes its
total input at C_j, ships alpha * input * y_k over link (j, k), and reducer
k processes alpha * total_data * y_k at C_k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .plan import Barrier, BarrierConfig, ExecutionPlan, validate_plan
from .platform import PlatformGraph, Workload


class EvaluationError(ValueError):
    """Raised when a plan or workload cannot be evaluated on a platform."""


def _readonly(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PhaseTimeline:
    """Per-node phase start/end times (seconds) and the makespan."""

    push_end: np.ndarray
    map_start: np.ndarray
    map_end: np.ndarray
    shuffle_start: np.ndarray
    shuffle_end: np.ndarray
    reduce_start: np.ndarray
    reduce_end: np.ndarray
    makespan: float
    breakdown: dict[str, float]

    def __post_init__(self):
        for name in ("push_end", "map_start", "map_end", "shuffle_start",
                     "shuffle_end", "reduce_start", "reduce_end"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))


def _combine(start: np.ndarray, duration: np.ndarray, barrier: Barrier) -> np.ndarray:
    if barrier is Barrier.PIPELINED:
        return np.maximum(start, duration)
    return start + duration


def evaluate(p: PlatformGraph, w: Workload, plan: ExecutionPlan,
             barriers: BarrierConfig = BarrierConfig.all_global()) -> PhaseTimeline:
    """Compute the phase timeline of a valid plan. Pure function."""
    if len(w.data_at_source) != p.n_sources:
        raise EvaluationError(
            f"workload has {len(w.data_at_source)} volumes for {p.n_sources} sources")
    result = validate_plan(plan, p)
    if not result.ok:
        raise EvaluationError("invalid plan: " + "; ".join(str(v) for v in result.violations))

    x = plan.push_fraction
    y = plan.reducer_fraction
    d = w.data_at_source
    alpha = w.alpha
    total = d.sum()

    # Push: volume d[i] * x[i, j] over link (i, j); zero volume contributes 0.
    push_end = np.max(d[:, None] * x / p.push_bandwidth, axis=0)

    mapper_in = d @ x
    map_duration = mapper_in / p.map_capacity
    if barriers.push_map is Barrier.GLOBAL:
        map_start = np.full(p.n_mappers, push_end.max())
    else:
        map_start = push_end
    map_end = _combine(map_start, map_duration, barriers.push_map)

    if barriers.map_shuffle is Barrier.GLOBAL:
        shuffle_start = np.full(p.n_mappers, map_end.max())
    else:
        shuffle_start = map_end
    # shuffle_duration[j, k]: alpha * input_j * y_k over link (j, k)
    shuffle_duration = alpha * mapper_in[:, None] * y[None, :] / p.shuffle_bandwidth
    per_link_end = _combine(shuffle_start[:, None], shuffle_duration, barriers.map_shuffle)
    shuffle_end = per_link_end.max(axis=0)

    reduce_duration = alpha * total * y / p.reduce_capacity
    if barriers.shuffle_reduce is Barrier.GLOBAL:
        reduce_start = np.full(p.n_reducers, shuffle_end.max())
    else:
        reduce_start = shuffle_end
    reduce_end = _combine(reduce_start, reduce_duration, barriers.shuffle_reduce)

    makespan = float(reduce_end.max())
    breakdown = _critical_path_breakdown(
        push_end, map_start, map_end, shuffle_start, per_link_end,
        shuffle_end, reduce_start, reduce_end, barriers)
    return PhaseTimeline(push_end, map_start, map_end, shuffle_start,
                         shuffle_end, reduce_start, reduce_end, makespan, breakdown)


def _critical_path_breakdown(push_end, map_start, map_end, shuffle_start,
                             per_link_end, shuffle_end, reduce_start,
                             reduce_end, barriers: BarrierConfig) -> dict[str, float]:
    """Attribute the makespan to the four phases along the critical path.

    Walking back from the last reducer, each phase's share is the segment
    between that phase's start and end on the path; under pipelined
    boundaries the overlapped portion is attributed to the later phase.
    Components are nonnegative and sum to the makespan.
    """
    k_star = int(np.argmax(reduce_end))
    makespan = float(reduce_end[k_star])
    reduce_component = makespan - float(reduce_start[k_star])

    if barriers.shuffle_reduce is Barrier.GLOBAL:
        k_shuffle = int(np.argmax(shuffle_end))
    else:
        k_shuffle = k_star
    se = float(shuffle_end[k_shuffle])
    j_star = int(np.argmax(per_link_end[:, k_shuffle]))
    shuffle_component = se - float(shuffle_start[j_star])

    if barriers.map_shuffle is Barrier.GLOBAL:
        j_map = int(np.argmax(map_end))
    else:
        j_map = j_star
    me = float(map_end[j_map])
    map_component = me - float(map_start[j_map])
    push_component = float(map_start[j_map])

    return {
        "push": push_component,
        "map": map_component,
        "shuffle": shuffle_component,
        "reduce": reduce_component,
    }


def phase_breakdown(timeline: PhaseTimeline) -> dict[str, float]:
    """Per-phase critical-path durations; they sum to the makespan."""
    return dict(timeline.breakdown)


def timeline_rows(timeline: PhaseTimeline, p: PlatformGraph) -> list[tuple[str, str, float, float]]:
    """Flatten a timeline into (node, phase, start, end) rows plus a summary
    row, for CSV export."""
    rows: list[tuple[str, str, float, float]] = []
    for j, m in enumerate(p.mappers):
        rows.append((m, "push", 0.0, float(timeline.push_end[j])))
        rows.append((m, "map", float(timeline.map_start[j]), float(timeline.map_end[j])))
    for k, r in enumerate(p.reducers):
        rows.append((r, "shuffle", float(np.min(timeline.shuffle_start)), float(timeline.shuffle_end[k])))
        rows.append((r, "reduce", float(timeline.reduce_start[k]), float(timeline.reduce_end[k])))
    rows.append(("job", "makespan", 0.0, timeline.makespan))
    return rows


def timeline_csv(timeline: PhaseTimeline, p: PlatformGraph) -> str:
    lines = ["node,phase,start_s,end_s"]
    for node, phase, start, end in timeline_rows(timeline, p):
        lines.append(f"{node},{phase},{start!r},{end!r}")
    return "\n".join(lines) + "\n"
