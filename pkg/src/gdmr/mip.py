"""Mixed-integer formulation of plan optimization.

The makespan expressions contain two nonlinearities. Every max becomes a
set of >=-constraints on a minimized surrogate variable. Each bilinear
term m_j * y_k (normalized mapper load times reducer fraction) is rewritten
with w = (m + y)/2 and w' = (m - y)/2, so the product equals w^2 - w'^2.
The convex side w^2 is under-approximated by tangent cuts at evenly spaced
breakpoints (no integer variables); the concave side -w'^2 uses a chordal
interpolation with selector binaries choosing the active segment. Bilinear
envelope rows (product >= 0, product >= m + y - 1) tighten the relaxation
and make products exact at simplex corners.

Time variables are scaled by a reference makespan so all solver
quantities stay near unit magnitude.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field

import numpy as np

from .makespan import evaluate
from .plan import Barrier, BarrierConfig, ExecutionPlan, uniform_plan
from .platform import PlatformGraph, Workload

OBJECTIVES = ("makespan", "push_time", "shuffle_time_given_push")


class MipBuildError(ValueError):
    """Raised for invalid build requests (bad fixed assignment, objective)."""


@dataclass(frozen=True)
class PiecewiseSpec:
    """Piecewise-linear approximation control.

    breakpoint_count evenly spaced points span a width-1 domain; the sum
    variable w lives on [0, 1] and the difference variable w' on
    [-1/2, 1/2]. breakpoint_count - 1 segments approximate each quadratic.
    """

    breakpoint_count: int = 10
    domain: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.breakpoint_count < 3:
            raise ValueError("breakpoint_count must be >= 3")
        lo, hi = self.domain
        if not (hi - lo == 1.0):
            raise ValueError("domain must have width 1 (normalized variables)")

    @property
    def segment_count(self) -> int:
        return self.breakpoint_count - 1

    @property
    def spacing(self) -> float:
        return 1.0 / self.segment_count

    def sum_breakpoints(self) -> np.ndarray:
        """Grid for w = (m + y)/2, which lives on [0, 1]."""
        return np.linspace(0.0, 1.0, self.breakpoint_count)

    def diff_breakpoints(self) -> np.ndarray:
        """Grid for w' = (m - y)/2, which lives on [-1/2, 1/2]."""
        return np.linspace(-0.5, 0.5, self.breakpoint_count)


def certified_error_bound(p: PlatformGraph, w: Workload, spec: PiecewiseSpec) -> float:
    """Worst-case absolute makespan under-estimate (seconds) introduced by
    the piecewise approximation when both plan sides are free.

    A tangent hull under-estimates a quadratic by at most h^2/4 between
    breakpoints spaced h apart, and a chord over-estimates by the same
    amount, so each product is under-estimated by at most h^2/2. Products
    only enter shuffle durations, scaled by alpha * total_data / B_jk, and
    a duration error passes through max/plus composition at most once.
    """
    h = spec.spacing
    delta = h * h / 2.0
    worst_scale = w.alpha * w.total_data / float(p.shuffle_bandwidth.min())
    return worst_scale * delta


@dataclass(frozen=True)
class Variable:
    name: str
    lb: float
    ub: float


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: dict[str, float]
    sense: str  # '<', '=', '>'
    rhs: float


@dataclass
class LinearProgram:
    """Named continuous LP, direction = minimize."""

    variables: list[Variable] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[str, float] = field(default_factory=dict)

    def index_of(self) -> dict[str, int]:
        return {v.name: i for i, v in enumerate(self.variables)}

    def validate(self) -> None:
        idx = self.index_of()
        if len(idx) != len(self.variables):
            raise ValueError("duplicate variable names")
        for v in self.variables:
            if v.lb > v.ub:
                raise ValueError(f"variable {v.name}: lb {v.lb} > ub {v.ub}")
        for c in self.constraints:
            for name in c.coeffs:
                if name not in idx:
                    raise ValueError(f"constraint {c.name} references undeclared {name}")
        for name in self.objective:
            if name not in idx:
                raise ValueError(f"objective references undeclared {name}")

    def to_arrays(self):
        """Dense (c, A, sense, b, lb, ub, name->index)."""
        idx = self.index_of()
        n = len(self.variables)
        m = len(self.constraints)
        c = np.zeros(n)
        for name, coef in self.objective.items():
            c[idx[name]] = coef
        A = np.zeros((m, n))
        b = np.zeros(m)
        sense = np.empty(m, dtype="<U1")
        for r, con in enumerate(self.constraints):
            for name, coef in con.coeffs.items():
                A[r, idx[name]] = coef
            b[r] = con.rhs
            sense[r] = con.sense
        lb = np.array([v.lb for v in self.variables])
        ub = np.array([v.ub for v in self.variables])
        return c, A, sense, b, lb, ub, idx


@dataclass(frozen=True)
class FixedAssignment:
    """Pinned plan variables for staged or single-phase solves."""

    x: np.ndarray | None = None
    y: np.ndarray | None = None


@dataclass
class MipContext:
    """Everything the solver needs to rebuild, scale, and interpret the
    program: the instance, barrier config, objective, pinning, and the
    time scale (seconds per scaled unit)."""

    platform: PlatformGraph
    workload: Workload
    barriers: BarrierConfig
    objective: str
    spec: PiecewiseSpec
    fixed_x: np.ndarray | None
    fixed_y: np.ndarray | None
    t_ref: float

    @property
    def products_free(self) -> bool:
        return (self.objective != "push_time"
                and self.fixed_x is None and self.fixed_y is None)


@dataclass
class MixedIntegerProgram:
    lp: LinearProgram
    binaries: list[str]
    sos_groups: list[list[str]]
    meta: MipContext

    def validate(self) -> None:
        self.lp.validate()
        declared = {v.name for v in self.lp.variables}
        for name in self.binaries:
            if name not in declared:
                raise ValueError(f"binary {name} not declared")
        rows = {}
        for con in self.lp.constraints:
            if con.sense == "=" and con.rhs == 1.0 and all(v == 1.0 for v in con.coeffs.values()):
                rows[frozenset(con.coeffs)] = con.name
        for group in self.sos_groups:
            if not set(group) <= set(self.binaries):
                raise ValueError("sos group contains non-binary variables")
            if frozenset(group) not in rows:
                raise ValueError(f"sos group {group[0]}... lacks an exactly-one constraint")


def _validate_fraction_rows(arr: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    rows = np.atleast_2d(arr)
    if np.any(rows < -1e-9) or np.any(rows > 1 + 1e-9):
        raise MipBuildError(f"fixed {what} has entries outside [0, 1]")
    sums = rows.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-9):
        raise MipBuildError(f"fixed {what} rows must sum to 1")
    return arr


def linearized_product(m: np.ndarray, y: np.ndarray, spec: PiecewiseSpec) -> np.ndarray:
    """The value the piecewise program assigns to each product m_j * y_k:
    tangent hull of w^2 minus chordal interpolant of w'^2, floored by the
    bilinear envelope max(0, m + y - 1). Always in [product - h^2/2, product]."""
    m = np.asarray(m, dtype=float)
    y = np.asarray(y, dtype=float)
    w = (m[:, None] + y[None, :]) / 2.0
    wp = (m[:, None] - y[None, :]) / 2.0
    bw = spec.sum_breakpoints()
    u = np.max(2.0 * w[..., None] * bw - bw * bw, axis=-1)
    bd = spec.diff_breakpoints()
    v = np.interp(wp, bd, bd * bd)
    envelope = np.maximum(0.0, m[:, None] + y[None, :] - 1.0)
    return np.maximum(u - v, envelope)


def linearized_objective(ctx: MipContext, x: np.ndarray, y: np.ndarray) -> float:
    """Forward-evaluate the linearized timeline for a concrete plan, in
    seconds. This equals the program objective the plan would achieve, and
    backs incumbent completion inside the solver."""
    p, w = ctx.platform, ctx.workload
    d = w.data_at_source
    total = d.sum()
    alpha = w.alpha
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)

    pe = np.max(d[:, None] * x / p.push_bandwidth, axis=0)
    if ctx.objective == "push_time":
        return float(pe.max())

    m = d @ x / total
    map_dur = total * m / p.map_capacity
    bar = ctx.barriers
    if bar.push_map is Barrier.GLOBAL:
        ms = np.full(p.n_mappers, pe.max())
    else:
        ms = pe
    me = np.maximum(ms, map_dur) if bar.push_map is Barrier.PIPELINED else ms + map_dur

    if ctx.products_free:
        prod = linearized_product(m, y, ctx.spec)
    else:
        prod = m[:, None] * y[None, :]
    shuffle_dur = alpha * total * prod / p.shuffle_bandwidth
    if bar.map_shuffle is Barrier.GLOBAL:
        ss = np.full(p.n_mappers, me.max())
    else:
        ss = me
    if bar.map_shuffle is Barrier.PIPELINED:
        link_end = np.maximum(ss[:, None], shuffle_dur)
    else:
        link_end = ss[:, None] + shuffle_dur
    se = link_end.max(axis=0)
    if ctx.objective == "shuffle_time_given_push":
        return float(se.max())

    reduce_dur = alpha * total * y / p.reduce_capacity
    if bar.shuffle_reduce is Barrier.GLOBAL:
        rs = np.full(p.n_reducers, se.max())
    else:
        rs = se
    re_ = np.maximum(rs, reduce_dur) if bar.shuffle_reduce is Barrier.PIPELINED else rs + reduce_dur
    return float(re_.max())


def seed_plans(ctx: MipContext) -> list[tuple[np.ndarray, np.ndarray]]:
    """Feasible plans used to seed the incumbent: uniform always, the
    cluster-affinity push when every source cluster has a mapper. Pinned
    sides are respected."""
    p = ctx.platform
    seeds = []
    ux = np.full((p.n_sources, p.n_mappers), 1.0 / p.n_mappers)
    uy = np.full(p.n_reducers, 1.0 / p.n_reducers)
    base_x = ctx.fixed_x if ctx.fixed_x is not None else ux
    base_y = ctx.fixed_y if ctx.fixed_y is not None else uy
    seeds.append((base_x, base_y))
    if ctx.fixed_x is None:
        try:
            from .plan import affinity_plan

            aff = affinity_plan(p)
            seeds.append((aff.push_fraction, base_y))
        except Exception:
            pass
    return seeds


def build_mip(p: PlatformGraph, w: Workload, b: BarrierConfig, objective: str,
              spec: PiecewiseSpec = PiecewiseSpec(),
              fixed: FixedAssignment | None = None) -> MixedIntegerProgram:
    """Assemble the full program: decision variables x, y, normalized loads
    m, per-product piecewise machinery, and one time variable per max that
    was eliminated. Barrier discipline selects which start-time rows exist;
    pipelined boundaries encode end >= start and end >= duration."""
    if objective not in OBJECTIVES:
        raise MipBuildError(f"unknown objective {objective!r}; expected one of {OBJECTIVES}")
    fixed = fixed or FixedAssignment()
    fixed_x = None
    fixed_y = None
    if fixed.x is not None:
        fixed_x = _validate_fraction_rows(fixed.x, "x")
        if fixed_x.shape != (p.n_sources, p.n_mappers):
            raise MipBuildError("fixed x has wrong shape")
    if fixed.y is not None:
        fixed_y = _validate_fraction_rows(fixed.y, "y")
        if fixed_y.shape != (p.n_reducers,):
            raise MipBuildError("fixed y has wrong shape")
    if objective == "shuffle_time_given_push" and fixed_x is None:
        raise MipBuildError("shuffle_time_given_push requires a fully pinned x")

    ctx = MipContext(p, w, b, objective, spec, fixed_x, fixed_y, t_ref=1.0)
    sx, sy = seed_plans(ctx)[0]
    ctx.t_ref = linearized_objective(ctx, sx, sy)
    lp, binaries, sos_groups = _build_program(ctx, mode="full")
    mip = MixedIntegerProgram(lp, binaries, sos_groups, ctx)
    return mip


def _build_program(ctx: MipContext, mode: str) -> tuple[LinearProgram, list[str], list[list[str]]]:
    """mode='full' carries the selector binaries and lambda interpolation
    rows (the exportable artifact); mode='reduced' replaces them with a
    single root chord per product, which the branch-and-bound tightens by
    appended cuts. Both produce identical optima."""
    p, w = ctx.platform, ctx.workload
    d = w.data_at_source
    total = d.sum()
    alpha = w.alpha
    t_ref = ctx.t_ref
    bar = ctx.barriers
    n_s, n_m, n_r = p.n_sources, p.n_mappers, p.n_reducers
    spec = ctx.spec

    lp = LinearProgram()
    binaries: list[str] = []
    sos_groups: list[list[str]] = []
    time_ub = 1.0 + 1e-6

    def add_var(name, lb, ub):
        lp.variables.append(Variable(name, float(lb), float(ub)))
        return name

    def add_row(name, coeffs, sense, rhs):
        clean = {k: float(v) for k, v in coeffs.items()}
        lp.constraints.append(Constraint(name, clean, sense, float(rhs)))

    x_names = [[f"x_{i}_{j}" for j in range(n_m)] for i in range(n_s)]
    y_names = [f"y_{k}" for k in range(n_r)]
    for i in range(n_s):
        for j in range(n_m):
            if ctx.fixed_x is not None:
                add_var(x_names[i][j], ctx.fixed_x[i, j], ctx.fixed_x[i, j])
            else:
                add_var(x_names[i][j], 0.0, 1.0)
    for k in range(n_r):
        if ctx.fixed_y is not None:
            add_var(y_names[k], ctx.fixed_y[k], ctx.fixed_y[k])
        else:
            add_var(y_names[k], 0.0, 1.0)
    for i in range(n_s):
        add_row(f"rowsum_x_{i}", {x_names[i][j]: 1.0 for j in range(n_m)}, "=", 1.0)
    add_row("sum_y", {y_names[k]: 1.0 for k in range(n_r)}, "=", 1.0)

    with_map = ctx.objective != "push_time"
    with_reduce = ctx.objective == "makespan"

    m_names = [f"m_{j}" for j in range(n_m)]
    if with_map:
        for j in range(n_m):
            add_var(m_names[j], 0.0, 1.0)
            coeffs = {m_names[j]: 1.0}
            for i in range(n_s):
                coeffs[x_names[i][j]] = -d[i] / total
            add_row(f"mdef_{j}", coeffs, "=", 0.0)

    # Product machinery, only when both sides are free.
    products_free = ctx.products_free
    shuffle_expr: list[list[tuple[dict[str, float], float]]] = []
    if with_map:
        bw = spec.sum_breakpoints()
        bd = spec.diff_breakpoints()
        for j in range(n_m):
            row_exprs = []
            for k in range(n_r):
                scale = alpha * total / (p.shuffle_bandwidth[j, k] * t_ref)
                if not products_free:
                    if ctx.fixed_x is not None:
                        mj = float(d @ ctx.fixed_x[:, j] / total)
                        row_exprs.append(({y_names[k]: scale * mj}, 0.0))
                    else:
                        yk = float(ctx.fixed_y[k])
                        row_exprs.append(({m_names[j]: scale * yk}, 0.0))
                    continue
                wpn = f"wp_{j}_{k}"
                un, vn = f"u_{j}_{k}", f"v_{j}_{k}"
                add_var(wpn, -0.5, 0.5)
                add_var(un, 0.0, 2.0)
                add_var(vn, 0.0, 0.25)
                add_row(f"wpdef_{j}_{k}", {wpn: 1.0, m_names[j]: -0.5, y_names[k]: 0.5}, "=", 0.0)
                if mode == "full":
                    # The sum variable and its static tangent cuts live only
                    # in the exported artifact; the solver separates tangents
                    # from the same breakpoint family lazily.
                    wn = f"w_{j}_{k}"
                    add_var(wn, 0.0, 1.0)
                    add_row(f"wdef_{j}_{k}", {wn: 1.0, m_names[j]: -0.5, y_names[k]: -0.5}, "=", 0.0)
                    for t, bt in enumerate(bw):
                        add_row(f"ucut_{j}_{k}_{t}", {un: 1.0, wn: -2.0 * bt}, ">", -(bt * bt))
                    lam = [add_var(f"lam_{j}_{k}_{t}", 0.0, 1.0) for t in range(len(bd))]
                    zs = [add_var(f"z_{j}_{k}_{s}", 0.0, 1.0) for s in range(len(bd) - 1)]
                    binaries.extend(zs)
                    sos_groups.append(list(zs))
                    add_row(f"lamsum_{j}_{k}", {ln: 1.0 for ln in lam}, "=", 1.0)
                    add_row(f"lamwp_{j}_{k}", {**{lam[t]: float(bd[t]) for t in range(len(bd))}, wpn: -1.0}, "=", 0.0)
                    add_row(f"lamv_{j}_{k}", {**{lam[t]: float(bd[t] * bd[t]) for t in range(len(bd))}, vn: -1.0}, "=", 0.0)
                    for t in range(len(bd)):
                        coeffs = {lam[t]: 1.0}
                        if t >= 1:
                            coeffs[zs[t - 1]] = -1.0
                        if t <= len(bd) - 2:
                            coeffs[zs[t]] = -1.0
                        add_row(f"adj_{j}_{k}_{t}", coeffs, "<", 0.0)
                    add_row(f"onez_{j}_{k}", {zn: 1.0 for zn in zs}, "=", 1.0)
                else:
                    lo, hi = float(bd[0]), float(bd[-1])
                    add_row(f"chord_{j}_{k}", {vn: 1.0, wpn: -(lo + hi)}, "<", -(lo * hi))
                add_row(f"mcc0_{j}_{k}", {un: 1.0, vn: -1.0}, ">", 0.0)
                add_row(f"mcc1_{j}_{k}", {un: 1.0, vn: -1.0, m_names[j]: -1.0, y_names[k]: -1.0}, ">", -1.0)
                row_exprs.append(({un: scale, vn: -scale}, 0.0))
            shuffle_expr.append(row_exprs)

    pe_names = [add_var(f"pe_{j}", 0.0, time_ub) for j in range(n_m)]
    for j in range(n_m):
        for i in range(n_s):
            add_row(f"pe_{j}_{i}", {pe_names[j]: 1.0, x_names[i][j]: -d[i] / (p.push_bandwidth[i, j] * t_ref)}, ">", 0.0)

    if ctx.objective == "push_time":
        z = add_var("Z", 0.0, time_ub)
        for j in range(n_m):
            add_row(f"obj_{j}", {z: 1.0, pe_names[j]: -1.0}, ">", 0.0)
        lp.objective = {z: 1.0}
        lp.validate()
        return lp, binaries, sos_groups

    me_names = [add_var(f"me_{j}", 0.0, time_ub) for j in range(n_m)]
    map_dur = {j: {m_names[j]: total / (p.map_capacity[j] * t_ref)} for j in range(n_m)}
    if bar.push_map is Barrier.GLOBAL:
        ms = add_var("ms", 0.0, time_ub)
        for j in range(n_m):
            add_row(f"msge_{j}", {ms: 1.0, pe_names[j]: -1.0}, ">", 0.0)
            add_row(f"me_{j}", {me_names[j]: 1.0, ms: -1.0, **{k_: -v for k_, v in map_dur[j].items()}}, ">", 0.0)
    elif bar.push_map is Barrier.LOCAL:
        for j in range(n_m):
            add_row(f"me_{j}", {me_names[j]: 1.0, pe_names[j]: -1.0, **{k_: -v for k_, v in map_dur[j].items()}}, ">", 0.0)
    else:
        for j in range(n_m):
            add_row(f"me_a_{j}", {me_names[j]: 1.0, pe_names[j]: -1.0}, ">", 0.0)
            add_row(f"me_b_{j}", {me_names[j]: 1.0, **{k_: -v for k_, v in map_dur[j].items()}}, ">", 0.0)

    se_names = [add_var(f"se_{k}", 0.0, time_ub) for k in range(n_r)]

    def shuffle_row(name, k, j, base: dict[str, float], base_rhs: float):
        coeffs, const = shuffle_expr[j][k]
        merged = dict(base)
        for var, coef in coeffs.items():
            merged[var] = merged.get(var, 0.0) - coef
        add_row(name, merged, ">", base_rhs + const)

    if bar.map_shuffle is Barrier.GLOBAL:
        ss = add_var("ss", 0.0, time_ub)
        for j in range(n_m):
            add_row(f"ssge_{j}", {ss: 1.0, me_names[j]: -1.0}, ">", 0.0)
        for k in range(n_r):
            for j in range(n_m):
                shuffle_row(f"se_{k}_{j}", k, j, {se_names[k]: 1.0, ss: -1.0}, 0.0)
    elif bar.map_shuffle is Barrier.LOCAL:
        for k in range(n_r):
            for j in range(n_m):
                shuffle_row(f"se_{k}_{j}", k, j, {se_names[k]: 1.0, me_names[j]: -1.0}, 0.0)
    else:
        for k in range(n_r):
            for j in range(n_m):
                add_row(f"se_a_{k}_{j}", {se_names[k]: 1.0, me_names[j]: -1.0}, ">", 0.0)
                shuffle_row(f"se_b_{k}_{j}", k, j, {se_names[k]: 1.0}, 0.0)

    if ctx.objective == "shuffle_time_given_push":
        z = add_var("Z", 0.0, time_ub)
        for k in range(n_r):
            add_row(f"obj_{k}", {z: 1.0, se_names[k]: -1.0}, ">", 0.0)
        lp.objective = {z: 1.0}
        lp.validate()
        return lp, binaries, sos_groups

    re_names = [add_var(f"re_{k}", 0.0, time_ub) for k in range(n_r)]
    reduce_dur = {k: {y_names[k]: alpha * total / (p.reduce_capacity[k] * t_ref)} for k in range(n_r)}
    if bar.shuffle_reduce is Barrier.GLOBAL:
        rs = add_var("rs", 0.0, time_ub)
        for k in range(n_r):
            add_row(f"rsge_{k}", {rs: 1.0, se_names[k]: -1.0}, ">", 0.0)
            add_row(f"re_{k}", {re_names[k]: 1.0, rs: -1.0, **{k_: -v for k_, v in reduce_dur[k].items()}}, ">", 0.0)
    elif bar.shuffle_reduce is Barrier.LOCAL:
        for k in range(n_r):
            add_row(f"re_{k}", {re_names[k]: 1.0, se_names[k]: -1.0, **{k_: -v for k_, v in reduce_dur[k].items()}}, ">", 0.0)
    else:
        for k in range(n_r):
            add_row(f"re_a_{k}", {re_names[k]: 1.0, se_names[k]: -1.0}, ">", 0.0)
            add_row(f"re_b_{k}", {re_names[k]: 1.0, **{k_: -v for k_, v in reduce_dur[k].items()}}, ">", 0.0)

    z = add_var("Z", 0.0, time_ub)
    for k in range(n_r):
        add_row(f"obj_{k}", {z: 1.0, re_names[k]: -1.0}, ">", 0.0)
    lp.objective = {z: 1.0}
    lp.validate()
    return lp, binaries, sos_groups


# -- LP text format -----------------------------------------------------


def write_lp(mip: MixedIntegerProgram) -> str:
    """Render in the standard LP text format (Minimize / Subject To /
    Bounds / Binaries / End) so external solvers can cross-check."""
    out = io.StringIO()
    out.write(f"\\ time unit: {mip.meta.t_ref!r} seconds per scaled unit\n")
    out.write("Minimize\n obj:")
    for name, coef in mip.lp.objective.items():
        out.write(f" {_coef(coef, first=False)} {name}")
    out.write("\nSubject To\n")
    for con in mip.lp.constraints:
        terms = []
        for i, (name, coef) in enumerate(con.coeffs.items()):
            terms.append(f"{_coef(coef, first=i == 0)} {name}")
        op = {"<": "<=", ">": ">=", "=": "="}[con.sense]
        out.write(f" {con.name}: {' '.join(terms)} {op} {con.rhs!r}\n")
    out.write("Bounds\n")
    for v in mip.lp.variables:
        if v.lb == v.ub:
            out.write(f" {v.name} = {v.lb!r}\n")
        elif np.isinf(v.ub) and v.lb == 0.0:
            pass  # default bound
        elif np.isneginf(v.lb) and np.isinf(v.ub):
            out.write(f" {v.name} free\n")
        else:
            lo = "-inf" if np.isneginf(v.lb) else repr(v.lb)
            hi = "+inf" if np.isinf(v.ub) else repr(v.ub)
            out.write(f" {lo} <= {v.name} <= {hi}\n")
    if mip.binaries:
        out.write("Binaries\n")
        for name in mip.binaries:
            out.write(f" {name}\n")
    out.write("End\n")
    return out.getvalue()


def _coef(value: float, first: bool) -> str:
    if first:
        return repr(value)
    return f"+ {value!r}" if value >= 0 else f"- {abs(value)!r}"


_TERM_RE = re.compile(r"([+-]?)\s*([0-9.eE+-]*?)\s*([A-Za-z_][A-Za-z0-9_]*)")


def _parse_expr(text: str) -> dict[str, float]:
    coeffs: dict[str, float] = {}
    for sign, mag, name in _TERM_RE.findall(text):
        value = float(mag) if mag not in ("", "+", "-") else 1.0
        if sign == "-":
            value = -value
        coeffs[name] = coeffs.get(name, 0.0) + value
    return coeffs


def read_lp(text: str) -> tuple[LinearProgram, list[str]]:
    """Parse the subset of the LP format produced by write_lp."""
    lp = LinearProgram()
    binaries: list[str] = []
    section = None
    bounds: dict[str, tuple[float, float]] = {}
    seen: list[str] = []
    seen_set: set[str] = set()

    def note(name):
        if name not in seen_set:
            seen_set.add(name)
            seen.append(name)

    for raw in text.splitlines():
        line = raw.split("\\")[0].strip()
        if not line:
            continue
        low = line.lower()
        if low in ("minimize", "maximize"):
            section = "obj"
            continue
        if low in ("subject to", "st", "s.t."):
            section = "cons"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low in ("binaries", "binary", "bin"):
            section = "bin"
            continue
        if low == "end":
            break
        if section == "obj":
            body = line.split(":", 1)[-1]
            lp.objective = _parse_expr(body)
            for name in lp.objective:
                note(name)
        elif section == "cons":
            name, body = line.split(":", 1)
            m = re.search(r"(<=|>=|=)", body)
            if not m:
                raise ValueError(f"constraint {name} lacks a comparator")
            op = m.group(1)
            lhs, rhs = body.split(op, 1)
            sense = {"<=": "<", ">=": ">", "=": "="}[op]
            coeffs = _parse_expr(lhs)
            for v in coeffs:
                note(v)
            lp.constraints.append(Constraint(name.strip(), coeffs, sense, float(rhs)))
        elif section == "bounds":
            if line.endswith(" free"):
                name = line[:-5].strip()
                bounds[name] = (-np.inf, np.inf)
                note(name)
            elif "<=" in line:
                lo, mid, hi = line.split("<=")
                name = mid.strip()
                bounds[name] = (float(lo.replace("-inf", "-1e308")), float(hi.replace("+inf", "1e308")))
                bounds[name] = (
                    -np.inf if lo.strip() == "-inf" else float(lo),
                    np.inf if hi.strip() == "+inf" else float(hi),
                )
                note(name)
            elif "=" in line:
                name, val = line.split("=")
                bounds[name.strip()] = (float(val), float(val))
                note(name.strip())
        elif section == "bin":
            binaries.append(line)
            note(line)

    for name in seen:
        lo, hi = bounds.get(name, (0.0, np.inf))
        if name in binaries and name not in bounds:
            lo, hi = 0.0, 1.0
        lp.variables.append(Variable(name, lo, hi))
    lp.validate()
    return lp, binaries
