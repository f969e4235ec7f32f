"""Platform, workload, and scenario construction.

A platform is a tripartite graph: data sources push to mappers, mappers
shuffle to reducers. Every source-mapper and mapper-reducer link exists and
carries a positive bandwidth; compute nodes have positive processing rates.
All quantities are canonical bytes and bytes/second.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .units import parse_rate, parse_size

ENVIRONMENT_KINDS = ("local-dc", "intra-continental", "global-4", "global-8")

# Measured slowest/fastest inter-cluster bandwidth per (source continent,
# destination continent), in KBps. Same-continent cells double as the
# intra-cluster range.
CONTINENT_BANDWIDTH_KBPS = {
    ("US", "US"): (216.0, 9405.0),
    ("US", "EU"): (110.0, 2267.0),
    ("US", "Asia"): (61.0, 3305.0),
    ("EU", "US"): (794.0, 2734.0),
    ("EU", "EU"): (4475.0, 11053.0),
    ("EU", "Asia"): (1502.0, 1593.0),
    ("Asia", "US"): (401.0, 3610.0),
    ("Asia", "EU"): (290.0, 1071.0),
    ("Asia", "Asia"): (23762.0, 23875.0),
}

# Node compute rates observed in the measurement study, bytes/second.
COMPUTE_RATE_RANGE = (9e6, 90e6)

# Input data held constant per source in the generated environments.
ENVIRONMENT_DATA_PER_SOURCE = 256e6

_ENVIRONMENT_CONTINENTS = {
    "local-dc": ["US"],
    "intra-continental": ["US", "US"],
    "global-4": ["US", "US", "EU", "Asia"],
    "global-8": ["US", "US", "EU", "Asia", "US", "US", "EU", "Asia"],
}


class ScenarioError(ValueError):
    """Raised when a scenario file cannot be parsed or fails validation."""


class DimensionMismatchError(ScenarioError):
    """Raised when matrix/vector dimensions disagree with the node lists."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PlatformGraph:
    """Tripartite platform graph.

    push_bandwidth[i, j] is the bytes/second link rate from source i to
    mapper j; shuffle_bandwidth[j, k] from mapper j to reducer k.
    map_capacity[j] and reduce_capacity[k] are bytes/second compute rates.
    cluster_of maps every node id to a cluster label.
    """

    sources: tuple[str, ...]
    mappers: tuple[str, ...]
    reducers: tuple[str, ...]
    push_bandwidth: np.ndarray
    shuffle_bandwidth: np.ndarray
    map_capacity: np.ndarray
    reduce_capacity: np.ndarray
    cluster_of: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "mappers", tuple(self.mappers))
        object.__setattr__(self, "reducers", tuple(self.reducers))
        object.__setattr__(self, "push_bandwidth", _readonly(self.push_bandwidth))
        object.__setattr__(self, "shuffle_bandwidth", _readonly(self.shuffle_bandwidth))
        object.__setattr__(self, "map_capacity", _readonly(self.map_capacity))
        object.__setattr__(self, "reduce_capacity", _readonly(self.reduce_capacity))
        object.__setattr__(self, "cluster_of", dict(self.cluster_of))

    @property
    def n_sources(self) -> int:
        return len(self.sources)

    @property
    def n_mappers(self) -> int:
        return len(self.mappers)

    @property
    def n_reducers(self) -> int:
        return len(self.reducers)

    def mappers_in_cluster(self, label: str) -> list[int]:
        return [j for j, m in enumerate(self.mappers) if self.cluster_of.get(m) == label]


@dataclass(frozen=True)
class Workload:
    """Per-source input volumes (bytes) and the map-output expansion ratio."""

    data_at_source: np.ndarray
    alpha: float = 1.0

    def __post_init__(self):
        data = np.asarray(self.data_at_source, dtype=float)
        if data.ndim != 1:
            raise ValueError("data_at_source must be a vector")
        if np.any(data < 0) or not np.all(np.isfinite(data)):
            raise ValueError("data_at_source entries must be finite and >= 0")
        if data.sum() <= 0:
            raise ValueError("total data must be positive")
        alpha = float(self.alpha)
        if not (alpha > 0 and np.isfinite(alpha)):
            raise ValueError(f"alpha must be finite and > 0, got {alpha}")
        object.__setattr__(self, "data_at_source", _readonly(data))
        object.__setattr__(self, "alpha", alpha)

    @property
    def total_data(self) -> float:
        return float(self.data_at_source.sum())


@dataclass(frozen=True)
class Scenario:
    """A named platform plus workload, dimension-checked."""

    name: str
    platform: PlatformGraph
    workload: Workload

    def __post_init__(self):
        if len(self.workload.data_at_source) != self.platform.n_sources:
            raise DimensionMismatchError(
                f"scenario {self.name!r}: {len(self.workload.data_at_source)} data volumes "
                f"for {self.platform.n_sources} sources"
            )

    def with_alpha(self, alpha: float) -> "Scenario":
        return dataclasses.replace(
            self, workload=Workload(self.workload.data_at_source, alpha)
        )


@dataclass(frozen=True)
class Violation:
    """One invariant violation, with the offending node or edge."""

    code: str
    where: tuple[str, ...]
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def raise_if_invalid(self, context: str = "") -> None:
        if not self.ok:
            lines = "; ".join(str(v) for v in self.violations)
            raise ScenarioError(f"{context + ': ' if context else ''}{lines}")


def validate_platform(p: PlatformGraph) -> ValidationResult:
    """Check every platform invariant; violations are returned, not raised."""
    issues: list[Violation] = []
    if p.n_sources < 1:
        issues.append(Violation("empty-role", ("sources",), "at least one source required"))
    if p.n_mappers < 1:
        issues.append(Violation("empty-role", ("mappers",), "at least one mapper required"))
    if p.n_reducers < 1:
        issues.append(Violation("empty-role", ("reducers",), "at least one reducer required"))

    all_ids = list(p.sources) + list(p.mappers) + list(p.reducers)
    seen: set[str] = set()
    for node in all_ids:
        if node in seen:
            issues.append(Violation("duplicate-id", (node,), f"node id {node!r} is not unique"))
        seen.add(node)
        if node not in p.cluster_of:
            issues.append(Violation("missing-cluster", (node,), f"node {node!r} has no cluster label"))

    if p.push_bandwidth.shape != (p.n_sources, p.n_mappers):
        issues.append(
            Violation(
                "bad-shape",
                ("push_bandwidth",),
                f"push_bandwidth shape {p.push_bandwidth.shape} != ({p.n_sources}, {p.n_mappers})",
            )
        )
    if p.shuffle_bandwidth.shape != (p.n_mappers, p.n_reducers):
        issues.append(
            Violation(
                "bad-shape",
                ("shuffle_bandwidth",),
                f"shuffle_bandwidth shape {p.shuffle_bandwidth.shape} != ({p.n_mappers}, {p.n_reducers})",
            )
        )
    if p.map_capacity.shape != (p.n_mappers,):
        issues.append(Violation("bad-shape", ("map_capacity",), "map_capacity length mismatch"))
    if p.reduce_capacity.shape != (p.n_reducers,):
        issues.append(Violation("bad-shape", ("reduce_capacity",), "reduce_capacity length mismatch"))
    if any(v.code == "bad-shape" for v in issues):
        return ValidationResult(tuple(issues))

    def check_positive(value: float, code: str, where: tuple[str, ...], what: str):
        if not np.isfinite(value) or value <= 0:
            issues.append(Violation(code, where, f"{what} must be finite and > 0, got {value}"))

    for i, s in enumerate(p.sources):
        for j, m in enumerate(p.mappers):
            check_positive(p.push_bandwidth[i, j], "bad-bandwidth", (s, m), f"push bandwidth ({s},{m})")
    for j, m in enumerate(p.mappers):
        for k, r in enumerate(p.reducers):
            check_positive(p.shuffle_bandwidth[j, k], "bad-bandwidth", (m, r), f"shuffle bandwidth ({m},{r})")
    for j, m in enumerate(p.mappers):
        check_positive(p.map_capacity[j], "bad-capacity", (m,), f"capacity of {m}")
    for k, r in enumerate(p.reducers):
        check_positive(p.reduce_capacity[k], "bad-capacity", (r,), f"capacity of {r}")

    return ValidationResult(tuple(issues))


def make_two_cluster_example(alpha: float = 1.0) -> Scenario:
    """Two clusters, one source/mapper/reducer each. Intra-cluster links run
    at 100 MBps, inter-cluster at 10 MBps, all compute at 100 MBps, and the
    sources hold 150 GB and 50 GB."""
    intra, inter = 100e6, 10e6
    platform = PlatformGraph(
        sources=("D1", "D2"),
        mappers=("M1", "M2"),
        reducers=("R1", "R2"),
        push_bandwidth=np.array([[intra, inter], [inter, intra]]),
        shuffle_bandwidth=np.array([[intra, inter], [inter, intra]]),
        map_capacity=np.array([100e6, 100e6]),
        reduce_capacity=np.array([100e6, 100e6]),
        cluster_of={
            "D1": "c1", "M1": "c1", "R1": "c1",
            "D2": "c2", "M2": "c2", "R2": "c2",
        },
    )
    workload = Workload(np.array([150e9, 50e9]), alpha)
    return Scenario("tutorial-two-cluster", platform, workload)


def make_environment(kind: str, seed: int, alpha: float = 1.0) -> Scenario:
    """Generate one of the named 8-node-per-role network environments.

    Nodes are spread round-robin over 1, 2, 4, or 8 clusters. Each directed
    link draws its bandwidth uniformly from the measured range for its
    (source continent, destination continent) pair; intra-cluster links use
    the same-continent range. Compute rates draw from 9-90 MBps. The same
    seed always yields the identical scenario.
    """
    if kind not in ENVIRONMENT_KINDS:
        raise ValueError(f"unknown environment kind {kind!r}; expected one of {ENVIRONMENT_KINDS}")
    continents = _ENVIRONMENT_CONTINENTS[kind]
    n_clusters = len(continents)
    n = 8
    counters: dict[str, int] = {}
    labels = []
    for cont in continents:
        idx = counters.get(cont, 0)
        counters[cont] = idx + 1
        labels.append(f"{cont.lower()}{idx}")

    # Mix the kind into the stream so different layouts draw different
    # links even under the same seed.
    rng = np.random.default_rng([int(seed), ENVIRONMENT_KINDS.index(kind)])
    sources = tuple(f"S{i}" for i in range(n))
    mappers = tuple(f"M{j}" for j in range(n))
    reducers = tuple(f"R{k}" for k in range(n))
    cluster_idx = [i % n_clusters for i in range(n)]
    cluster_of = {}
    for role in (sources, mappers, reducers):
        for i, node in enumerate(role):
            cluster_of[node] = labels[cluster_idx[i]]

    def draw_links(src_nodes, dst_nodes) -> np.ndarray:
        out = np.empty((len(src_nodes), len(dst_nodes)))
        for a, src in enumerate(src_nodes):
            for b, dst in enumerate(dst_nodes):
                c_src = continents[cluster_idx[a]]
                c_dst = continents[cluster_idx[b]]
                lo, hi = CONTINENT_BANDWIDTH_KBPS[(c_src, c_dst)]
                out[a, b] = rng.uniform(lo, hi) * 1e3
        return out

    push_bw = draw_links(sources, mappers)
    shuffle_bw = draw_links(mappers, reducers)
    lo, hi = COMPUTE_RATE_RANGE
    map_cap = rng.uniform(lo, hi, size=n)
    reduce_cap = rng.uniform(lo, hi, size=n)

    platform = PlatformGraph(
        sources, mappers, reducers, push_bw, shuffle_bw, map_cap, reduce_cap, cluster_of
    )
    workload = Workload(np.full(n, ENVIRONMENT_DATA_PER_SOURCE), alpha)
    return Scenario(f"{kind}-seed{seed}", platform, workload)


def _node_entries(raw, role: str) -> list[dict]:
    if not isinstance(raw, list) or not raw:
        raise ScenarioError(f"{role}: expected a non-empty list of node entries")
    out = []
    for idx, entry in enumerate(raw):
        if not isinstance(entry, dict) or "id" not in entry:
            raise ScenarioError(f"{role}[{idx}]: each node needs at least an 'id' field")
        out.append(entry)
    return out


def _bandwidth_matrix(raw, rows, cols, cluster_of, key: str) -> np.ndarray:
    if isinstance(raw, dict):
        missing = {"intra", "inter"} - set(raw)
        if missing:
            raise ScenarioError(f"{key}: shorthand needs 'intra' and 'inter' keys, missing {sorted(missing)}")
        intra = parse_rate(raw["intra"], f"{key}.intra")
        inter = parse_rate(raw["inter"], f"{key}.inter")
        out = np.empty((len(rows), len(cols)))
        for a, r in enumerate(rows):
            for b, c in enumerate(cols):
                out[a, b] = intra if cluster_of[r] == cluster_of[c] else inter
        return out
    if isinstance(raw, list):
        if len(raw) != len(rows):
            raise DimensionMismatchError(f"{key}: {len(raw)} rows for {len(rows)} nodes")
        out = np.empty((len(rows), len(cols)))
        for a, row in enumerate(raw):
            if not isinstance(row, list) or len(row) != len(cols):
                raise DimensionMismatchError(f"{key}[{a}]: expected {len(cols)} entries")
            for b, cell in enumerate(row):
                out[a, b] = parse_rate(cell, f"{key}[{a}][{b}]")
        return out
    raise ScenarioError(f"{key}: expected a full matrix or an intra/inter shorthand")


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario file (YAML), convert to canonical units, validate."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" at line {mark.line + 1}" if mark else ""
        raise ScenarioError(f"{path}: YAML parse error{loc}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: top level must be a mapping")

    required = {"name", "sources", "mappers", "reducers", "push_bandwidth", "shuffle_bandwidth", "alpha"}
    missing = required - set(doc)
    if missing:
        raise ScenarioError(f"{path}: missing keys {sorted(missing)}")

    srcs = _node_entries(doc["sources"], "sources")
    maps = _node_entries(doc["mappers"], "mappers")
    reds = _node_entries(doc["reducers"], "reducers")

    cluster_of = {}
    for role, entries in (("sources", srcs), ("mappers", maps), ("reducers", reds)):
        for entry in entries:
            cluster_of[entry["id"]] = str(entry.get("cluster", "default"))

    source_ids = tuple(e["id"] for e in srcs)
    mapper_ids = tuple(e["id"] for e in maps)
    reducer_ids = tuple(e["id"] for e in reds)

    data = np.array([parse_size(e.get("data", 0), f"sources[{i}].data") for i, e in enumerate(srcs)])
    map_cap = np.array([parse_rate(e.get("capacity"), f"mappers[{j}].capacity") for j, e in enumerate(maps)])
    red_cap = np.array([parse_rate(e.get("capacity"), f"reducers[{k}].capacity") for k, e in enumerate(reds)])

    push_bw = _bandwidth_matrix(doc["push_bandwidth"], source_ids, mapper_ids, cluster_of, "push_bandwidth")
    shuffle_bw = _bandwidth_matrix(doc["shuffle_bandwidth"], mapper_ids, reducer_ids, cluster_of, "shuffle_bandwidth")

    platform = PlatformGraph(
        source_ids, mapper_ids, reducer_ids, push_bw, shuffle_bw, map_cap, red_cap, cluster_of
    )
    workload = Workload(data, float(doc["alpha"]))
    scenario = Scenario(str(doc["name"]), platform, workload)
    validate_platform(platform).raise_if_invalid(str(path))
    return scenario


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    """Write a scenario file with canonical numeric values (exact round-trip)."""
    p = scenario.platform
    doc = {
        "name": scenario.name,
        "clusters": sorted(set(p.cluster_of.values())),
        "alpha": float(scenario.workload.alpha),
        "sources": [
            {"id": s, "cluster": p.cluster_of.get(s, "default"),
             "data": float(scenario.workload.data_at_source[i])}
            for i, s in enumerate(p.sources)
        ],
        "mappers": [
            {"id": m, "cluster": p.cluster_of.get(m, "default"), "capacity": float(p.map_capacity[j])}
            for j, m in enumerate(p.mappers)
        ],
        "reducers": [
            {"id": r, "cluster": p.cluster_of.get(r, "default"), "capacity": float(p.reduce_capacity[k])}
            for k, r in enumerate(p.reducers)
        ],
        "push_bandwidth": [[float(v) for v in row] for row in p.push_bandwidth],
        "shuffle_bandwidth": [[float(v) for v in row] for row in p.shuffle_bandwidth],
    }
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False))
