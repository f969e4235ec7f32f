"""Chunk-granular execution of a plan on a platform.

Entities are the push links, mapper computations, shuffle links, and
reducer computations; each processes its assigned volume at its dedicated
rate (no link sharing, matching the analytic model). Phase boundaries
follow the configured discipline:

* global: an entity starts when the whole upstream phase has finished;
* local: an entity starts when its own inputs are complete;
* pipelined: an entity consumes chunk by chunk as input becomes available,
  where each upstream's output counts as available uniformly over its own
  active window (the idealized full-overlap semantics of the analytic
  model, whose fluid limit this reproduces exactly).

chunk_size = 0 selects fluid mode: continuous rates, and for any barrier
configuration the measured timeline coincides with the analytic one up to
rounding. Positive chunk sizes add pipeline fill latency of a few chunks.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .makespan import PhaseTimeline, _critical_path_breakdown
from .plan import Barrier, BarrierConfig, ExecutionPlan, validate_plan
from .platform import PlatformGraph, Workload

_EVENT_RANK = {
    "transfer_end": 0,
    "compute_start": 1,
    "barrier_release": 2,
    "transfer_start": 3,
    "compute_end": 4,
}


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    """chunk_size in bytes; 0 means fluid (continuous) mode."""

    chunk_size: float = 64e6
    barriers: BarrierConfig = BarrierConfig.all_global()

    def __post_init__(self):
        if self.chunk_size < 0:
            raise SimulationError("chunk_size must be >= 0")


@dataclass(frozen=True)
class TraceEvent:
    time: float
    entity: str
    kind: str
    nbytes: float


@dataclass(frozen=True)
class SimTrace:
    events: tuple[TraceEvent, ...]
    measured_timeline: PhaseTimeline


def _chunk_sizes(volume: float, chunk: float) -> np.ndarray:
    if volume <= 0:
        return np.empty(0)
    if chunk <= 0 or chunk >= volume:
        return np.array([volume])
    n_full = int(np.ceil(volume / chunk)) - 1
    rest = volume - n_full * chunk
    return np.concatenate([np.full(n_full, chunk), [rest]])


def _availability_curve(upstreams: list[tuple[float, float]]):
    """Merged availability from (volume, end) upstreams, each spreading its
    volume uniformly over [0, end]. Returns interpolation knots (cum_volume,
    time) with avail_time(v) = interp(v)."""
    instant = sum(v for v, e in upstreams if v > 0 and e <= 0)
    ramps = [(v, e) for v, e in upstreams if v > 0 and e > 0]
    times = sorted({e for _, e in ramps})
    t_pts = [0.0] + times
    c_pts = []
    for t in t_pts:
        total = instant + sum(v * min(1.0, t / e) for v, e in ramps)
        c_pts.append(total)
    return np.array(c_pts), np.array(t_pts)


def _schedule(volume: float, rate: float, start_gate: float | None,
              upstreams: list[tuple[float, float]] | None,
              chunk: float) -> tuple[float, float, np.ndarray, np.ndarray]:
    """Chunk schedule for one entity.

    start_gate set: the entity runs back to back from the gate (global or
    local discipline). upstreams set: pipelined; chunk c may start once the
    merged availability covers its cumulative input, and the entity cannot
    finish before any of its upstreams.
    Returns (start, end, chunk_starts, chunk_ends).
    """
    sizes = _chunk_sizes(volume, chunk)
    if start_gate is not None:
        starts = start_gate + np.concatenate([[0.0], np.cumsum(sizes)[:-1]]) / rate
        ends = start_gate + np.cumsum(sizes) / rate
        end = float(ends[-1]) if sizes.size else start_gate
        return start_gate, end, starts, ends

    up_end = max((e for _, e in upstreams), default=0.0)
    if sizes.size == 0:
        return up_end, up_end, np.empty(0), np.empty(0)
    if chunk <= 0:
        # Fluid limit: uniform concave availability makes the completion
        # max(last input, own busy time).
        end = max(up_end, volume / rate)
        start = end - volume / rate
        return start, end, np.array([start]), np.array([end])
    c_pts, t_pts = _availability_curve(upstreams)
    cum = np.cumsum(sizes)
    avail = np.interp(cum, c_pts, t_pts)
    durations = sizes / rate
    starts = np.empty(sizes.size)
    ends = np.empty(sizes.size)
    t = 0.0
    for i in range(sizes.size):
        t = max(t, avail[i])
        starts[i] = t
        t += durations[i]
        ends[i] = t
    end = max(float(ends[-1]), up_end)
    return float(starts[0]), end, starts, ends


def simulate(p: PlatformGraph, w: Workload, plan: ExecutionPlan,
             cfg: SimConfig = SimConfig()) -> SimTrace:
    """Run the plan to completion and return the event trace plus the
    measured timeline (same shape as the analytic one)."""
    result = validate_plan(plan, p)
    if not result.ok:
        raise SimulationError("invalid plan: " + "; ".join(str(v) for v in result.violations))
    d = w.data_at_source
    total = float(d.sum())
    alpha = w.alpha
    x = plan.push_fraction
    y = plan.reducer_fraction
    chunk = cfg.chunk_size
    bar = cfg.barriers

    push_vol = d[:, None] * x
    mapper_in = d @ x
    shuffle_vol = mapper_in[:, None] * (alpha * y)[None, :]
    reduce_vol = alpha * total * y

    if chunk > 0:
        positive = push_vol[push_vol > 0]
        pos_shuffle = shuffle_vol[shuffle_vol > 0]
        smallest = min([v.min() for v in (positive, pos_shuffle) if v.size], default=np.inf)
        if chunk >= smallest:
            warnings.warn(
                f"chunk_size {chunk:g} is not smaller than the smallest link volume "
                f"{smallest:g}; granularity effects degenerate", stacklevel=2)

    events: list[tuple[float, int, int, str, str, float]] = []
    order = 0

    def emit(t, entity, kind, nbytes):
        nonlocal order
        events.append((float(t), _EVENT_RANK[kind], order, entity, kind, float(nbytes)))
        order += 1

    def emit_entity(entity, kind_start, kind_end, starts, ends, sizes):
        for s, e, v in zip(starts, ends, sizes):
            emit(s, entity, kind_start, v)
            emit(e, entity, kind_end, v)

    # Push links all start at time zero.
    push_end_links = push_vol / p.push_bandwidth
    for i, src in enumerate(p.sources):
        for j, mp in enumerate(p.mappers):
            sizes = _chunk_sizes(push_vol[i, j], chunk)
            if sizes.size == 0:
                continue
            ends = np.cumsum(sizes) / p.push_bandwidth[i, j]
            starts = ends - sizes / p.push_bandwidth[i, j]
            emit_entity(f"{src}->{mp}", "transfer_start", "transfer_end", starts, ends, sizes)
    push_end = push_end_links.max(axis=0)

    def gates(discipline, phase_ends, own):
        if discipline is Barrier.GLOBAL:
            return float(np.max(phase_ends))
        return float(own)

    map_end = np.empty(p.n_mappers)
    map_start = np.empty(p.n_mappers)
    if bar.push_map is Barrier.GLOBAL:
        emit(float(push_end.max()), "push/map", "barrier_release", 0.0)
    for j, mp in enumerate(p.mappers):
        ups = [(float(push_vol[i, j]), float(push_end_links[i, j])) for i in range(p.n_sources)]
        if bar.push_map is Barrier.PIPELINED:
            start, end, starts, ends = _schedule(float(mapper_in[j]), float(p.map_capacity[j]), None, ups, chunk)
        else:
            gate = gates(bar.push_map, push_end_links, push_end[j])
            if bar.push_map is Barrier.LOCAL:
                emit(gate, mp, "barrier_release", 0.0)
            start, end, starts, ends = _schedule(float(mapper_in[j]), float(p.map_capacity[j]), gate, None, chunk)
        sizes = _chunk_sizes(float(mapper_in[j]), chunk)
        emit_entity(mp, "compute_start", "compute_end", starts, ends, sizes)
        map_start[j], map_end[j] = start, end

    link_end = np.empty((p.n_mappers, p.n_reducers))
    if bar.map_shuffle is Barrier.GLOBAL:
        emit(float(map_end.max()), "map/shuffle", "barrier_release", 0.0)
    for j, mp in enumerate(p.mappers):
        for k, rd in enumerate(p.reducers):
            vol = float(shuffle_vol[j, k])
            rate = float(p.shuffle_bandwidth[j, k])
            if bar.map_shuffle is Barrier.PIPELINED:
                # This link's share of the mapper's output becomes available
                # uniformly over the mapper's active window.
                ups = [(vol, float(map_end[j]))]
                start, end, starts, ends = _schedule(vol, rate, None, ups, chunk)
            else:
                gate = gates(bar.map_shuffle, map_end, map_end[j])
                if bar.map_shuffle is Barrier.LOCAL and k == 0:
                    emit(gate, mp, "barrier_release", 0.0)
                start, end, starts, ends = _schedule(vol, rate, gate, None, chunk)
            sizes = _chunk_sizes(vol, chunk)
            emit_entity(f"{mp}->{rd}", "transfer_start", "transfer_end", starts, ends, sizes)
            link_end[j, k] = end

    shuffle_end = link_end.max(axis=0)
    reduce_end = np.empty(p.n_reducers)
    reduce_start = np.empty(p.n_reducers)
    if bar.shuffle_reduce is Barrier.GLOBAL:
        emit(float(shuffle_end.max()), "shuffle/reduce", "barrier_release", 0.0)
    for k, rd in enumerate(p.reducers):
        vol = float(reduce_vol[k])
        rate = float(p.reduce_capacity[k])
        ups = [(float(shuffle_vol[j, k]), float(link_end[j, k])) for j in range(p.n_mappers)]
        if bar.shuffle_reduce is Barrier.PIPELINED:
            start, end, starts, ends = _schedule(vol, rate, None, ups, chunk)
        else:
            gate = gates(bar.shuffle_reduce, link_end, shuffle_end[k])
            if bar.shuffle_reduce is Barrier.LOCAL:
                emit(gate, rd, "barrier_release", 0.0)
            start, end, starts, ends = _schedule(vol, rate, gate, None, chunk)
        sizes = _chunk_sizes(vol, chunk)
        emit_entity(rd, "compute_start", "compute_end", starts, ends, sizes)
        reduce_start[k], reduce_end[k] = start, end

    # Assemble the measured timeline with the analytic start conventions.
    if bar.push_map is Barrier.GLOBAL:
        t_map_start = np.full(p.n_mappers, push_end.max())
    else:
        t_map_start = push_end.copy()
    if bar.map_shuffle is Barrier.GLOBAL:
        t_shuffle_start = np.full(p.n_mappers, map_end.max())
    else:
        t_shuffle_start = map_end.copy()
    if bar.shuffle_reduce is Barrier.GLOBAL:
        t_reduce_start = np.full(p.n_reducers, shuffle_end.max())
    else:
        t_reduce_start = shuffle_end.copy()
    makespan = float(reduce_end.max())
    breakdown = _critical_path_breakdown(
        push_end, t_map_start, map_end, t_shuffle_start, link_end,
        shuffle_end, t_reduce_start, reduce_end, bar)
    timeline = PhaseTimeline(push_end, t_map_start, map_end, t_shuffle_start,
                             shuffle_end, t_reduce_start, reduce_end, makespan, breakdown)

    events.sort(key=lambda ev: (ev[0], ev[1], ev[2]))
    trace = tuple(TraceEvent(t, entity, kind, nbytes)
                  for t, _, _, entity, kind, nbytes in events)
    return SimTrace(trace, timeline)


def correlate(pairs: list[tuple[float, float]]) -> tuple[float, float, float]:
    """Ordinary least squares of measured on predicted: (slope, intercept,
    r_squared). Closed form; raises on degenerate input."""
    if len(pairs) < 2:
        raise ValueError("need at least two (predicted, measured) pairs")
    pred = np.array([a for a, _ in pairs], dtype=float)
    meas = np.array([b for _, b in pairs], dtype=float)
    var = pred.var()
    if var <= 0:
        raise ValueError("degenerate input: all predicted values equal")
    slope = float(np.cov(pred, meas, bias=True)[0, 1] / var)
    intercept = float(meas.mean() - slope * pred.mean())
    resid = meas - (slope * pred + intercept)
    ss_tot = float(((meas - meas.mean()) ** 2).sum())
    if ss_tot == 0:
        return slope, intercept, 1.0
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot
    return slope, intercept, r2


def trace_csv(trace: SimTrace) -> str:
    lines = ["time_s,entity,event,bytes"]
    for ev in trace.events:
        lines.append(f"{ev.time!r},{ev.entity},{ev.kind},{ev.nbytes!r}")
    return "\n".join(lines) + "\n"
