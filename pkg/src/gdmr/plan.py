"""Execution plans and barrier configurations.

A plan is the pair (push fractions x[i, j], reducer key-space fractions
y[k]). The one-reducer-per-key rule forces every mapper's shuffle fractions
to equal y, so only y is stored; the expanded mapper-to-reducer matrix is
derived on demand.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .platform import PlatformGraph, Violation, ValidationResult

ROW_SUM_TOL = 1e-9


class PlanError(ValueError):
    """Raised for plan files or plans that cannot be used as requested."""


class Barrier(str, enum.Enum):
    GLOBAL = "global"
    LOCAL = "local"
    PIPELINED = "pipelined"

    @classmethod
    def from_code(cls, code: str) -> "Barrier":
        table = {"G": cls.GLOBAL, "L": cls.LOCAL, "P": cls.PIPELINED}
        if code.upper() not in table:
            raise ValueError(f"unknown barrier code {code!r}; expected G, L, or P")
        return table[code.upper()]

    @property
    def code(self) -> str:
        return self.value[0].upper()


@dataclass(frozen=True)
class BarrierConfig:
    """Discipline at each of the three phase boundaries."""

    push_map: Barrier = Barrier.GLOBAL
    map_shuffle: Barrier = Barrier.GLOBAL
    shuffle_reduce: Barrier = Barrier.GLOBAL

    @classmethod
    def all_global(cls) -> "BarrierConfig":
        return cls(Barrier.GLOBAL, Barrier.GLOBAL, Barrier.GLOBAL)

    @classmethod
    def all_pipelined(cls) -> "BarrierConfig":
        return cls(Barrier.PIPELINED, Barrier.PIPELINED, Barrier.PIPELINED)

    @classmethod
    def from_code(cls, code: str) -> "BarrierConfig":
        """Parse a triple like 'G-P-L' (push/map, map/shuffle, shuffle/reduce)."""
        parts = code.replace(" ", "").split("-")
        if len(parts) != 3:
            raise ValueError(f"barrier code {code!r} must be three letters like G-P-L")
        return cls(*(Barrier.from_code(c) for c in parts))

    @property
    def code(self) -> str:
        return "-".join(b.code for b in (self.push_map, self.map_shuffle, self.shuffle_reduce))


def _readonly(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ExecutionPlan:
    """push_fraction is S x M; reducer_fraction is length R."""

    push_fraction: np.ndarray
    reducer_fraction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "push_fraction", _readonly(np.atleast_2d(self.push_fraction)))
        object.__setattr__(self, "reducer_fraction", _readonly(np.atleast_1d(self.reducer_fraction)))

    def shuffle_fraction(self) -> np.ndarray:
        """Expanded M x R shuffle matrix: every mapper row equals y."""
        n_mappers = self.push_fraction.shape[1]
        return np.tile(self.reducer_fraction, (n_mappers, 1))


def validate_plan(plan: ExecutionPlan, p: PlatformGraph) -> ValidationResult:
    """Check fraction bounds and row sums against the platform's dimensions."""
    issues: list[Violation] = []
    x, y = plan.push_fraction, plan.reducer_fraction
    if x.shape != (p.n_sources, p.n_mappers):
        issues.append(
            Violation("bad-shape", ("push_fraction",),
                      f"push_fraction shape {x.shape} != ({p.n_sources}, {p.n_mappers})")
        )
    if y.shape != (p.n_reducers,):
        issues.append(
            Violation("bad-shape", ("reducer_fraction",),
                      f"reducer_fraction length {y.shape[0]} != {p.n_reducers}")
        )
    if issues:
        return ValidationResult(tuple(issues))

    for i, s in enumerate(p.sources):
        for j, m in enumerate(p.mappers):
            v = x[i, j]
            if not np.isfinite(v) or v < 0 or v > 1:
                issues.append(Violation("bad-fraction", (s, m), f"x[{s},{m}] = {v} outside [0, 1]"))
        row = float(x[i].sum())
        if abs(row - 1.0) > ROW_SUM_TOL:
            issues.append(Violation("bad-row-sum", (s,), f"push fractions of {s} sum to {row!r}, not 1"))
    for k, r in enumerate(p.reducers):
        v = y[k]
        if not np.isfinite(v) or v < 0 or v > 1:
            issues.append(Violation("bad-fraction", (r,), f"y[{r}] = {v} outside [0, 1]"))
    total = float(y.sum())
    if abs(total - 1.0) > ROW_SUM_TOL:
        issues.append(Violation("bad-row-sum", ("reducers",), f"reducer fractions sum to {total!r}, not 1"))
    return ValidationResult(tuple(issues))


def renormalize(plan: ExecutionPlan, tol: float = ROW_SUM_TOL) -> ExecutionPlan:
    """Snap rows whose sums drift within tol back to exactly 1 and clamp
    negatives of the same magnitude; larger errors are left for validation."""

    def fix(v: np.ndarray, axis=None) -> np.ndarray:
        v = np.array(v, dtype=float)
        v[(v < 0) & (v > -tol)] = 0.0
        s = v.sum(axis=axis, keepdims=axis is not None)
        mask = np.abs(s - 1.0) <= tol
        safe = np.where((s > 0) & mask, s, 1.0)
        return v / safe

    return ExecutionPlan(fix(plan.push_fraction, axis=1), fix(plan.reducer_fraction))


def uniform_plan(p: PlatformGraph) -> ExecutionPlan:
    """Every source splits evenly over mappers; keys split evenly over reducers."""
    x = np.full((p.n_sources, p.n_mappers), 1.0 / p.n_mappers)
    y = np.full(p.n_reducers, 1.0 / p.n_reducers)
    return ExecutionPlan(x, y)


def affinity_plan(p: PlatformGraph) -> ExecutionPlan:
    """Each source pushes only to mappers in its own cluster (evenly among
    them); the shuffle stays uniform. Errors if a source's cluster has no
    mapper."""
    x = np.zeros((p.n_sources, p.n_mappers))
    for i, s in enumerate(p.sources):
        label = p.cluster_of.get(s)
        local = p.mappers_in_cluster(label)
        if not local:
            raise PlanError(f"source {s!r} is in cluster {label!r} which has no mapper")
        x[i, local] = 1.0 / len(local)
    y = np.full(p.n_reducers, 1.0 / p.n_reducers)
    return ExecutionPlan(x, y)


def bucket_assignment(plan: ExecutionPlan, bucket_count: int = 1024) -> np.ndarray:
    """Assign each of bucket_count hash buckets to a reducer index so that
    reducer k receives round(y_k * bucket_count) buckets (largest-remainder
    rounding keeps the total exact). Buckets are contiguous blocks."""
    if bucket_count < 1:
        raise ValueError("bucket_count must be >= 1")
    y = plan.reducer_fraction
    raw = y * bucket_count
    counts = np.floor(raw).astype(int)
    remainder = bucket_count - counts.sum()
    if remainder > 0:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:remainder]] += 1
    out = np.empty(bucket_count, dtype=int)
    pos = 0
    for k, c in enumerate(counts):
        out[pos:pos + c] = k
        pos += c
    return out


def save_plan(plan: ExecutionPlan, path: str | Path, bucket_count: int | None = None) -> None:
    """Write a plan file: push matrix (row-major, source order), reducer
    fractions, the expanded shuffle matrix, and optionally the bucketized
    rendering."""
    doc = {
        "push_fraction": [[float(v) for v in row] for row in plan.push_fraction],
        "reducer_fraction": [float(v) for v in plan.reducer_fraction],
        "shuffle_fraction": [[float(v) for v in row] for row in plan.shuffle_fraction()],
    }
    if bucket_count is not None:
        assignment = bucket_assignment(plan, bucket_count)
        blocks = []
        start = 0
        for k in range(len(plan.reducer_fraction)):
            count = int(np.sum(assignment == k))
            blocks.append({"reducer": k, "first_bucket": start, "bucket_count": count})
            start += count
        doc["buckets"] = {"bucket_count": bucket_count, "assignment": blocks}
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False))


def load_plan(path: str | Path) -> ExecutionPlan:
    """Read a plan file; rows within the row-sum tolerance are renormalized,
    anything worse is left as-is for validate_plan to flag."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise PlanError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise PlanError(f"{path}: YAML parse error: {exc}") from exc
    if not isinstance(doc, dict) or "push_fraction" not in doc or "reducer_fraction" not in doc:
        raise PlanError(f"{path}: plan file needs push_fraction and reducer_fraction keys")
    try:
        x = np.array(doc["push_fraction"], dtype=float)
        y = np.array(doc["reducer_fraction"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise PlanError(f"{path}: non-numeric plan entries: {exc}") from exc
    if x.ndim != 2 or y.ndim != 1:
        raise PlanError(f"{path}: push_fraction must be a matrix and reducer_fraction a vector")
    return renormalize(ExecutionPlan(x, y))
