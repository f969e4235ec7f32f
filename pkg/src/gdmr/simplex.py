"""Dense revised simplex for bounded-variable linear programs.

Solves min c@v subject to A v (<=|=|>=) b and lb <= v <= ub. Slack and
phase-1 artificial columns are unit vectors and are handled implicitly, so
pricing and matvecs only touch the structural matrix. The primal path runs
two phases, prices with Dantzig's rule, and falls back to Bland's rule
after a run of degenerate pivots to break cycles. A bounded-variable dual
simplex re-optimizes from a caller-supplied basis after bound changes or
appended rows, which is how the branch-and-bound layer warm-starts child
nodes.

The basis inverse is kept in product form: a dense inverse from the last
refactorization plus a chain of eta updates, applied in O(m) each.

Column index space: [0, ns) structural, [ns, ns + m) slacks (one per row),
[ns + m, ...) artificials created during phase 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BASIC = 0
AT_LOWER = 1
AT_UPPER = 2
FREE_NB = 3

_FEAS_TOL = 1e-8
_OPT_TOL = 1e-9
_PIV_TOL = 1e-10
_REFACTOR_EVERY = 100
_DEGENERATE_RUN = 40


class SimplexError(RuntimeError):
    """Numerical failure inside the simplex (singular basis, stall)."""


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "limit"
    objective: float
    x: np.ndarray  # structural variable values
    basis: np.ndarray
    col_status: np.ndarray
    iterations: int


class BoundedSimplex:
    """Row-form solver state: min c@x, A x (sense) b, lb <= x <= ub."""

    def __init__(self, c, A, sense, b, lb, ub, max_iter: int | None = None):
        self.As = np.ascontiguousarray(A, dtype=float)
        self.m, self.ns = self.As.shape
        self.b = np.asarray(b, dtype=float)
        slack_lb = np.zeros(self.m)
        slack_ub = np.zeros(self.m)
        for i, s in enumerate(sense):
            if s == "<":
                slack_lb[i], slack_ub[i] = 0.0, np.inf
            elif s == ">":
                slack_lb[i], slack_ub[i] = -np.inf, 0.0
            elif s == "=":
                slack_lb[i], slack_ub[i] = 0.0, 0.0
            else:
                raise ValueError(f"unknown row sense {s!r}")
        self.c = np.concatenate([np.asarray(c, dtype=float), np.zeros(self.m)])
        self.lb = np.concatenate([np.asarray(lb, dtype=float), slack_lb])
        self.ub = np.concatenate([np.asarray(ub, dtype=float), slack_ub])
        self.n = self.ns + self.m
        self.art_row = np.empty(0, dtype=int)
        self.art_sign = np.empty(0)
        self.max_iter = max_iter or max(2000, 60 * (self.m + self.ns))
        self.basis = np.empty(self.m, dtype=int)
        self.col_status = np.empty(self.n, dtype=np.int8)
        self.binv0 = np.eye(self.m)
        self.etas: list[tuple[int, np.ndarray]] = []
        self.x_basic = np.zeros(self.m)
        self.iterations = 0
        self._degenerate_run = 0
        self._bland = False

    # -- implicit column helpers -----------------------------------------

    def _column(self, j: int) -> np.ndarray:
        if j < self.ns:
            return self.As[:, j]
        e = np.zeros(self.m)
        if j < self.ns + self.m:
            e[j - self.ns] = 1.0
        else:
            t = j - self.ns - self.m
            e[self.art_row[t]] = self.art_sign[t]
        return e

    def _price_all(self, y: np.ndarray) -> np.ndarray:
        """Reduced costs c - y@A over all columns, using slack structure."""
        d = np.empty(self.n)
        d[:self.ns] = self.c[:self.ns] - y @ self.As
        d[self.ns:self.ns + self.m] = self.c[self.ns:self.ns + self.m] - y
        if self.n > self.ns + self.m:
            d[self.ns + self.m:] = self.c[self.ns + self.m:] - self.art_sign * y[self.art_row]
        return d

    def _row_all(self, br: np.ndarray) -> np.ndarray:
        """One tableau row br@A over all columns."""
        rho = np.empty(self.n)
        rho[:self.ns] = br @ self.As
        rho[self.ns:self.ns + self.m] = br
        if self.n > self.ns + self.m:
            rho[self.ns + self.m:] = self.art_sign * br[self.art_row]
        return rho

    def _ax(self, vals: np.ndarray) -> np.ndarray:
        out = self.As @ vals[:self.ns]
        out += vals[self.ns:self.ns + self.m]
        if self.n > self.ns + self.m:
            np.add.at(out, self.art_row, self.art_sign * vals[self.ns + self.m:])
        return out

    # -- basis inverse in product form ------------------------------------

    def _binv_dot(self, v: np.ndarray) -> np.ndarray:
        t = self.binv0 @ v
        for r, g in self.etas:
            t = t - g * t[r]
        return t

    def _binv_col(self, j: int) -> np.ndarray:
        if self.ns <= j < self.ns + self.m:
            t = self.binv0[:, j - self.ns].copy()
        else:
            t = self.binv0 @ self._column(j)
        for r, g in self.etas:
            t = t - g * t[r]
        return t

    def _dot_binv(self, u: np.ndarray) -> np.ndarray:
        w = u.astype(float).copy()
        for r, g in reversed(self.etas):
            w[r] -= w @ g
        return w @ self.binv0

    def _binv_row(self, r: int) -> np.ndarray:
        e = np.zeros(self.m)
        e[r] = 1.0
        return self._dot_binv(e)

    def _refactor(self) -> None:
        B = np.empty((self.m, self.m))
        for i, j in enumerate(self.basis):
            B[:, i] = self._column(j)
        try:
            self.binv0 = np.linalg.solve(B, np.eye(self.m))
        except np.linalg.LinAlgError as exc:
            raise SimplexError("singular basis during refactorization") from exc
        self.etas = []
        self._recompute_x_basic()

    # -- state helpers -----------------------------------------------------

    def _nonbasic_values(self) -> np.ndarray:
        vals = np.zeros(self.n)
        at_lower = self.col_status == AT_LOWER
        at_upper = self.col_status == AT_UPPER
        vals[at_lower] = self.lb[at_lower]
        vals[at_upper] = self.ub[at_upper]
        return vals

    def _recompute_x_basic(self) -> None:
        vals = self._nonbasic_values()
        rhs = self.b - self._ax(vals)
        self.x_basic = self._binv_dot(rhs)

    def _values(self) -> np.ndarray:
        vals = self._nonbasic_values()
        vals[self.basis] = self.x_basic
        return vals

    def _push_eta(self, row: int, w: np.ndarray) -> None:
        piv = w[row]
        if abs(piv) < _PIV_TOL:
            raise SimplexError("pivot element vanished")
        g = w / piv
        g[row] = (piv - 1.0) / piv
        self.etas.append((row, g))

    def _track_degeneracy(self, step: float) -> None:
        if step <= _FEAS_TOL:
            self._degenerate_run += 1
        else:
            self._degenerate_run = 0
            self._bland = False
        if self._degenerate_run >= _DEGENERATE_RUN:
            self._bland = True

    # -- primal -------------------------------------------------------------

    def _primal_iterate(self, costs: np.ndarray) -> str:
        self._recompute_x_basic()
        fixed = self.lb == self.ub
        while True:
            if self.iterations >= self.max_iter:
                return "limit"
            self.iterations += 1
            if len(self.etas) >= _REFACTOR_EVERY:
                self._refactor()
            y = self._dot_binv(costs[self.basis])
            d = np.empty(self.n)
            d[:self.ns] = costs[:self.ns] - y @ self.As
            d[self.ns:self.ns + self.m] = costs[self.ns:self.ns + self.m] - y
            if self.n > self.ns + self.m:
                d[self.ns + self.m:] = costs[self.ns + self.m:] - self.art_sign * y[self.art_row]
            eligible_lower = (self.col_status == AT_LOWER) & (d < -_OPT_TOL) & ~fixed
            eligible_upper = (self.col_status == AT_UPPER) & (d > _OPT_TOL) & ~fixed
            eligible_free = (self.col_status == FREE_NB) & (np.abs(d) > _OPT_TOL)
            eligible = eligible_lower | eligible_upper | eligible_free
            if not eligible.any():
                return "optimal"
            idx = np.flatnonzero(eligible)
            if self._bland:
                e = int(idx[0])
            else:
                e = int(idx[np.argmax(np.abs(d[idx]))])
            direction = 1.0 if (eligible_lower[e] or (eligible_free[e] and d[e] < 0)) else -1.0

            w = self._binv_col(e)
            coef = direction * w
            lb_b = self.lb[self.basis]
            ub_b = self.ub[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                t_dec = np.where(coef > _PIV_TOL, (self.x_basic - lb_b) / coef, np.inf)
                t_inc = np.where(coef < -_PIV_TOL, (ub_b - self.x_basic) / (-coef), np.inf)
            limits = np.maximum(np.minimum(t_dec, t_inc), 0.0)
            theta_basic = float(limits.min()) if self.m else np.inf
            own_range = self.ub[e] - self.lb[e]
            if not np.isfinite(min(theta_basic, own_range)):
                return "unbounded"

            if own_range <= theta_basic:
                self.x_basic -= coef * own_range
                self.col_status[e] = AT_UPPER if direction > 0 else AT_LOWER
                self._track_degeneracy(own_range)
                continue

            near = np.flatnonzero(limits <= theta_basic + 1e-9 * (1.0 + abs(theta_basic)))
            if self._bland:
                r = int(near[np.argmin(self.basis[near])])
            else:
                r = int(near[np.argmax(np.abs(coef[near]))])

            theta = max(theta_basic, 0.0)
            self.x_basic -= coef * theta
            entering_value = (self.lb[e] if self.col_status[e] == AT_LOWER
                              else self.ub[e] if self.col_status[e] == AT_UPPER else 0.0)
            entering_value += direction * theta
            leaving = self.basis[r]
            leaving_to_lower = coef[r] > 0
            self._push_eta(r, w)
            self.basis[r] = e
            self.col_status[e] = BASIC
            if not np.isfinite(self.lb[leaving]) and not np.isfinite(self.ub[leaving]):
                self.col_status[leaving] = FREE_NB
            else:
                self.col_status[leaving] = AT_LOWER if leaving_to_lower else AT_UPPER
            self.x_basic[r] = entering_value
            self._track_degeneracy(theta)

    def solve_primal(self) -> LPResult:
        """Two-phase primal solve from a slack basis."""
        for j in range(self.n):
            if np.isfinite(self.lb[j]):
                self.col_status[j] = AT_LOWER
            elif np.isfinite(self.ub[j]):
                self.col_status[j] = AT_UPPER
            else:
                self.col_status[j] = FREE_NB
        slack_cols = np.arange(self.ns, self.ns + self.m)
        self.basis = slack_cols.copy()
        self.col_status[slack_cols] = BASIC
        self.binv0 = np.eye(self.m)
        self.etas = []
        self._recompute_x_basic()

        viol_low = self.x_basic < self.lb[self.basis] - _FEAS_TOL
        viol_up = self.x_basic > self.ub[self.basis] + _FEAS_TOL
        art_rows = np.flatnonzero(viol_low | viol_up)
        if art_rows.size:
            # Artificials absorb slack bound violations so phase 1 starts
            # feasible; their columns are pinned to zero afterwards.
            n_art = art_rows.size
            self.art_row = art_rows.copy()
            self.art_sign = np.where(viol_low[art_rows], -1.0, 1.0)
            for t, r in enumerate(art_rows):
                slack = self.basis[r]
                self.col_status[slack] = AT_LOWER if viol_low[r] else AT_UPPER
            self.c = np.concatenate([self.c, np.zeros(n_art)])
            self.lb = np.concatenate([self.lb, np.zeros(n_art)])
            self.ub = np.concatenate([self.ub, np.full(n_art, np.inf)])
            art_cols = np.arange(self.n, self.n + n_art)
            self.n += n_art
            status_ext = np.empty(self.n, dtype=np.int8)
            status_ext[:self.col_status.size] = self.col_status
            self.col_status = status_ext
            for t, r in enumerate(art_rows):
                self.basis[r] = art_cols[t]
                self.col_status[art_cols[t]] = BASIC
            self._refactor()

            phase1 = np.zeros(self.n)
            phase1[art_cols] = 1.0
            status = self._primal_iterate(phase1)
            if status != "optimal":
                return self._result(status)
            if float(phase1 @ self._values()) > 1e-6:
                return self._result("infeasible")
            self._pivot_out_artificials(art_cols)
            self.lb[art_cols] = 0.0
            self.ub[art_cols] = 0.0

        status = self._primal_iterate(self.c)
        return self._result(status)

    def _pivot_out_artificials(self, art_cols: np.ndarray) -> None:
        art_set = set(int(a) for a in art_cols)
        for r in range(self.m):
            col = int(self.basis[r])
            if col not in art_set:
                continue
            rho = self._row_all(self._binv_row(r))
            rho[list(art_set)] = 0.0
            rho[self.basis] = 0.0
            candidates = np.flatnonzero(np.abs(rho) > 1e-7)
            if candidates.size == 0:
                continue  # redundant row; artificial stays basic at 0
            e = int(candidates[0])
            w = self._binv_col(e)
            self._push_eta(r, w)
            self.basis[r] = e
            self.col_status[e] = BASIC
            self.col_status[col] = AT_LOWER
            self._recompute_x_basic()

    # -- dual -----------------------------------------------------------------

    def solve_dual_from(self, basis: np.ndarray, col_status: np.ndarray) -> LPResult:
        """Re-optimize with the dual simplex from a dual-feasible basis
        (typically a parent node's optimal basis after bound changes or
        appended rows). Falls back to a cold primal solve when the snapshot
        does not fit this problem's column space."""
        basis = np.asarray(basis, dtype=int)
        col_status = np.asarray(col_status, dtype=np.int8)
        if (basis.size != self.m or basis.max(initial=-1) >= self.n
                or col_status.size < self.n):
            return self.solve_primal()
        self.basis = basis.copy()
        self.col_status = col_status[:self.n].copy()
        fixed = self.lb == self.ub
        try:
            self._refactor()
        except SimplexError:
            return self.solve_primal()
        stall = 0
        while True:
            if self.iterations >= self.max_iter:
                return self._result("limit")
            self.iterations += 1
            if len(self.etas) >= _REFACTOR_EVERY:
                self._refactor()
            lb_b = self.lb[self.basis]
            ub_b = self.ub[self.basis]
            viol_low = lb_b - self.x_basic
            viol_up = self.x_basic - ub_b
            worst = np.maximum(viol_low, viol_up)
            r = int(np.argmax(worst))
            if worst[r] <= _FEAS_TOL:
                status = self._primal_iterate(self.c)  # clean up any dual drift
                return self._result(status)
            leaving_low = viol_low[r] >= viol_up[r]

            y = self._dot_binv(self.c[self.basis])
            d = self._price_all(y)
            rho = self._row_all(self._binv_row(r))
            if leaving_low:
                ok = ((self.col_status == AT_LOWER) & (rho < -_PIV_TOL)) | \
                     ((self.col_status == AT_UPPER) & (rho > _PIV_TOL)) | \
                     ((self.col_status == FREE_NB) & (np.abs(rho) > _PIV_TOL))
            else:
                ok = ((self.col_status == AT_LOWER) & (rho > _PIV_TOL)) | \
                     ((self.col_status == AT_UPPER) & (rho < -_PIV_TOL)) | \
                     ((self.col_status == FREE_NB) & (np.abs(rho) > _PIV_TOL))
            ok &= (self.col_status != BASIC) & ~fixed
            candidates = np.flatnonzero(ok)
            if candidates.size == 0:
                return self._result("infeasible")
            ratios = np.abs(d[candidates]) / np.abs(rho[candidates])
            if self._bland or stall >= _DEGENERATE_RUN:
                e = int(candidates[0])
            else:
                best = float(ratios.min())
                near = candidates[ratios <= best + 1e-12]
                e = int(near[np.argmax(np.abs(rho[near]))])

            w = self._binv_col(e)
            leaving = self.basis[r]
            self._push_eta(r, w)
            self.basis[r] = e
            self.col_status[e] = BASIC
            self.col_status[leaving] = AT_LOWER if leaving_low else AT_UPPER
            self._recompute_x_basic()
            if worst[r] <= 10 * _FEAS_TOL:
                stall += 1
            else:
                stall = 0

    def _result(self, status: str) -> LPResult:
        vals = self._values()
        return LPResult(
            status=status,
            objective=float(self.c @ vals),
            x=vals[:self.ns],
            basis=self.basis.copy(),
            col_status=self.col_status.copy(),
            iterations=self.iterations,
        )


def solve_lp(c, A, sense, b, lb, ub, *, warm: tuple[np.ndarray, np.ndarray] | None = None,
             max_iter: int | None = None) -> LPResult:
    """Solve min c@v, A v (sense) b, lb <= v <= ub.

    Returns structural values only. A warm start is a (basis, col_status)
    pair in the structural+slack column space from a previous solve of a
    compatible problem; it triggers the dual simplex.
    """
    solver = BoundedSimplex(c, A, sense, b, lb, ub, max_iter=max_iter)
    if warm is not None:
        basis, col_status = warm
        result = solver.solve_dual_from(basis, col_status)
    else:
        result = solver.solve_primal()
    return result
