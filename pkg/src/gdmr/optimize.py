"""Plan optimization strategies, a direct-search refiner, and a
brute-force lattice oracle.

Strategies:

* end-to-end: one program minimizing the full makespan over both the push
  and shuffle fractions;
* myopic: minimize push time over x, then with x pinned minimize shuffle
  time over y;
* single-phase: pin one communication phase to the uniform split and
  optimize the other for end-to-end makespan.
"""

from __future__ import annotations

import itertools
import time as _time

import numpy as np

from .makespan import evaluate
from .mip import FixedAssignment, PiecewiseSpec, build_mip
from .plan import Barrier, BarrierConfig, ExecutionPlan, uniform_plan
from .platform import PlatformGraph, Workload
from .solve import DEFAULT_TIME_LIMIT, DEFAULT_TOL, SolveReport, solve_mip


class InstanceTooLargeError(ValueError):
    """The oracle's exhaustive enumeration would not complete."""


def optimize_end_to_end(p: PlatformGraph, w: Workload, b: BarrierConfig,
                        spec: PiecewiseSpec = PiecewiseSpec(),
                        tol: float = DEFAULT_TOL,
                        time_limit: float = DEFAULT_TIME_LIMIT,
                        max_nodes: int | None = None) -> SolveReport:
    """Multi-phase makespan minimization over both x and y.

    The single-phase and myopic plans are feasible points of this program
    and solve as plain LPs, so they are computed first and offered as
    starting incumbents; the returned plan is never worse than any of
    them."""
    mip = build_mip(p, w, b, "makespan", spec)
    seeds: list[tuple[np.ndarray, np.ndarray]] = []
    for builder in (
        lambda: optimize_single_phase(p, w, b, "push", spec, tol, time_limit),
        lambda: optimize_single_phase(p, w, b, "shuffle", spec, tol, time_limit),
        lambda: optimize_myopic(p, w, b, spec, tol, time_limit),
    ):
        try:
            rep = builder()
        except Exception:
            continue
        seeds.append((rep.plan.push_fraction, rep.plan.reducer_fraction))
    return solve_mip(mip, tol, time_limit, extra_seeds=seeds, max_nodes=max_nodes)


def optimize_myopic(p: PlatformGraph, w: Workload, b: BarrierConfig,
                    spec: PiecewiseSpec = PiecewiseSpec(),
                    tol: float = DEFAULT_TOL,
                    time_limit: float = DEFAULT_TIME_LIMIT) -> SolveReport:
    """Stage 1 minimizes push completion over x; stage 2 pins that x and
    minimizes shuffle completion over y. Both stages share the barrier
    config. The composed plan is re-evaluated for the reported makespan."""
    stage1 = solve_mip(build_mip(p, w, b, "push_time", spec), tol, time_limit)
    x1 = stage1.plan.push_fraction
    stage2 = solve_mip(
        build_mip(p, w, b, "shuffle_time_given_push", spec, FixedAssignment(x=x1)),
        tol, time_limit)
    plan = ExecutionPlan(x1, stage2.plan.reducer_fraction)
    predicted = evaluate(p, w, plan, b).makespan
    return SolveReport(
        plan=plan,
        predicted_makespan=predicted,
        mip_objective=stage2.mip_objective,
        gap=max(stage1.gap, stage2.gap),
        node_count=stage1.node_count + stage2.node_count,
        wall_time=stage1.wall_time + stage2.wall_time,
        certified_error=0.0,
        time_limited=stage1.time_limited or stage2.time_limited,
        stages=[
            {"objective": "push_time", "value": stage1.mip_objective,
             "wall_time": stage1.wall_time},
            {"objective": "shuffle_time_given_push", "value": stage2.mip_objective,
             "wall_time": stage2.wall_time},
        ],
    )


def optimize_single_phase(p: PlatformGraph, w: Workload, b: BarrierConfig,
                          phase: str,
                          spec: PiecewiseSpec = PiecewiseSpec(),
                          tol: float = DEFAULT_TOL,
                          time_limit: float = DEFAULT_TIME_LIMIT) -> SolveReport:
    """Optimize one communication phase for end-to-end makespan while the
    other stays uniform: phase='push' frees x (y = 1/R), phase='shuffle'
    frees y (x = 1/M)."""
    if phase == "push":
        fixed = FixedAssignment(y=np.full(p.n_reducers, 1.0 / p.n_reducers))
    elif phase == "shuffle":
        fixed = FixedAssignment(x=np.full((p.n_sources, p.n_mappers), 1.0 / p.n_mappers))
    else:
        raise ValueError(f"phase must be 'push' or 'shuffle', got {phase!r}")
    mip = build_mip(p, w, b, "makespan", spec, fixed)
    return solve_mip(mip, tol, time_limit)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, n + 1)
    cond = u - css / ind > 0
    rho = np.count_nonzero(cond)
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def refine_plan(p: PlatformGraph, w: Workload, b: BarrierConfig,
                start: ExecutionPlan,
                iterations: int = 40,
                step_schedule: tuple[float, ...] = (0.25, 0.1, 0.04, 0.015, 0.006, 0.002),
                seed: int = 0) -> ExecutionPlan:
    """Projected coordinate descent directly on the analytic makespan.

    One move nudges a single row of x (or the y vector) toward or away from
    one coordinate and projects back onto the simplex; improvements are
    kept. No linearization is involved, so this polishes solver output
    below its piecewise error. Deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    x = np.array(start.push_fraction, dtype=float)
    y = np.array(start.reducer_fraction, dtype=float)
    best = evaluate(p, w, ExecutionPlan(x, y), b).makespan
    n_s, n_m = x.shape
    n_r = y.size

    blocks = [("x", i) for i in range(n_s)] + [("y", 0)]
    for step in step_schedule:
        for _sweep in range(iterations):
            improved = False
            order = rng.permutation(len(blocks))
            for bi in order:
                kind, i = blocks[bi]
                vec = x[i] if kind == "x" else y
                width = n_m if kind == "x" else n_r
                for coord in range(width):
                    for sign in (1.0, -1.0):
                        cand = project_simplex(vec + sign * step * _unit(width, coord))
                        if kind == "x":
                            x_try = x.copy()
                            x_try[i] = cand
                            val = evaluate(p, w, ExecutionPlan(x_try, y), b).makespan
                            if val < best - 1e-12 * (1 + best):
                                x, best, improved = x_try, val, True
                                vec = x[i]
                        else:
                            val = evaluate(p, w, ExecutionPlan(x, cand), b).makespan
                            if val < best - 1e-12 * (1 + best):
                                y, best, improved = cand, val, True
                                vec = y
            if not improved:
                break
    return ExecutionPlan(x, y)


def _unit(n: int, i: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


def _simplex_lattice(dim: int, steps: int) -> np.ndarray:
    """All length-dim nonnegative integer vectors summing to steps, divided
    by steps; lexicographic order."""
    combos = itertools.combinations_with_replacement(range(dim), steps)
    out = np.zeros((_lattice_count(dim, steps), dim))
    for r, combo in enumerate(combos):
        for c in combo:
            out[r, c] += 1
    return out / steps


def _lattice_count(dim: int, steps: int) -> int:
    from math import comb

    return comb(steps + dim - 1, dim - 1)


def _grid_makespans(p: PlatformGraph, w: Workload, X: np.ndarray, Y: np.ndarray,
                    b: BarrierConfig) -> np.ndarray:
    """Makespan for every (x in X, y in Y) pair: X is (B, S, M), Y is
    (L, R); returns (B, L). Mirrors evaluate()'s formulas, vectorized."""
    d = w.data_at_source
    total = d.sum()
    alpha = w.alpha
    pe = np.max(d[None, :, None] * X / p.push_bandwidth[None, :, :], axis=1)  # (B, M)
    m_load = np.einsum("s,bsm->bm", d, X) / total
    map_dur = total * m_load / p.map_capacity[None, :]
    if b.push_map is Barrier.GLOBAL:
        ms = pe.max(axis=1, keepdims=True)
        me = np.broadcast_to(ms, pe.shape) + map_dur
    elif b.push_map is Barrier.LOCAL:
        me = pe + map_dur
    else:
        me = np.maximum(pe, map_dur)

    # shuffle durations: (B, L, M, R)
    dur = alpha * total * m_load[:, None, :, None] * Y[None, :, None, :] / p.shuffle_bandwidth[None, None, :, :]
    if b.map_shuffle is Barrier.GLOBAL:
        ss = me.max(axis=1)[:, None, None, None]
    else:
        ss = me[:, None, :, None]
    if b.map_shuffle is Barrier.PIPELINED:
        link_end = np.maximum(ss, dur)
    else:
        link_end = ss + dur
    se = link_end.max(axis=2)  # (B, L, R)

    reduce_dur = alpha * total * Y / p.reduce_capacity[None, :]  # (L, R)
    if b.shuffle_reduce is Barrier.GLOBAL:
        rs = se.max(axis=2, keepdims=True)
    else:
        rs = se
    if b.shuffle_reduce is Barrier.PIPELINED:
        re_ = np.maximum(rs, reduce_dur[None, :, :])
    else:
        re_ = rs + reduce_dur[None, :, :]
    return re_.max(axis=2)  # (B, L)


def brute_force_oracle(p: PlatformGraph, w: Workload, b: BarrierConfig,
                       grid_step: float = 0.05) -> tuple[ExecutionPlan, float]:
    """Exhaustively enumerate every valid plan on the simplex lattice with
    the given resolution and return the best plan and its makespan.
    Ground truth for optimizer tests; deliberately small-instance only."""
    steps = round(1.0 / grid_step)
    if abs(steps * grid_step - 1.0) > 1e-9:
        raise ValueError("grid_step must divide 1 evenly")
    limit = 3 if grid_step >= 0.049 else 2
    if max(p.n_sources, p.n_mappers, p.n_reducers) > limit:
        raise InstanceTooLargeError(
            f"oracle limited to {limit} nodes per role at grid_step {grid_step}")
    rows = _simplex_lattice(p.n_mappers, steps)  # (Rw, M)
    Y = _simplex_lattice(p.n_reducers, steps)  # (L, R)
    n_rows = rows.shape[0]
    combo_count = n_rows ** p.n_sources
    if combo_count * Y.shape[0] > 5e9:
        raise InstanceTooLargeError("lattice enumeration too large")

    best_val = np.inf
    best_x = None
    best_y = None
    chunk = max(1, int(2e6 // max(Y.shape[0], 1)))
    combo_iter = itertools.product(range(n_rows), repeat=p.n_sources)
    while True:
        batch_idx = np.array(list(itertools.islice(combo_iter, chunk)), dtype=int)
        if batch_idx.size == 0:
            break
        X = rows[batch_idx]  # (B, S, M)
        values = _grid_makespans(p, w, X, Y, b)  # (B, L)
        flat = int(np.argmin(values))
        bi, li = divmod(flat, Y.shape[0])
        if values[bi, li] < best_val - 0.0:
            best_val = float(values[bi, li])
            best_x = X[bi].copy()
            best_y = Y[li].copy()
    plan = ExecutionPlan(best_x, best_y)
    return plan, best_val
