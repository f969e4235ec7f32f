"""Shared construction helpers for tests."""

import numpy as np

from gdmr.plan import ExecutionPlan
from gdmr.platform import PlatformGraph, Workload


def random_platform(rng: np.random.Generator, n_s: int, n_m: int, n_r: int) -> PlatformGraph:
    """Moderately heterogeneous platform: rates within about one decade."""
    sources = tuple(f"S{i}" for i in range(n_s))
    mappers = tuple(f"M{j}" for j in range(n_m))
    reducers = tuple(f"R{k}" for k in range(n_r))
    cluster_of = {n: f"c{i % 2}" for i, n in enumerate(sources + mappers + reducers)}
    loguni = lambda lo, hi, size: np.exp(rng.uniform(np.log(lo), np.log(hi), size=size))
    return PlatformGraph(
        sources, mappers, reducers,
        push_bandwidth=loguni(1e7, 1e8, (n_s, n_m)),
        shuffle_bandwidth=loguni(1e7, 1e8, (n_m, n_r)),
        map_capacity=loguni(2e7, 1.2e8, n_m),
        reduce_capacity=loguni(2e7, 1.2e8, n_r),
        cluster_of=cluster_of,
    )


def random_workload(rng: np.random.Generator, n_s: int, alpha: float | None = None) -> Workload:
    if alpha is None:
        alpha = float(np.exp(rng.uniform(np.log(0.3), np.log(3.0))))
    return Workload(rng.uniform(1e9, 1e10, size=n_s), alpha)


def random_valid_plan(rng: np.random.Generator, n_s: int, n_m: int, n_r: int):
    x = rng.dirichlet(np.ones(n_m), size=n_s)
    y = rng.dirichlet(np.ones(n_r))
    return ExecutionPlan(x, y)
