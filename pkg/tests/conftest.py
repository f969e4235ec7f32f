import numpy as np
import pytest

from gdmr.platform import PlatformGraph, Scenario, Workload, make_two_cluster_example


@pytest.fixture
def two_cluster() -> Scenario:
    return make_two_cluster_example()


@pytest.fixture
def unit_platform() -> PlatformGraph:
    """1x1x1 platform with all rates 1 byte/s."""
    return PlatformGraph(
        sources=("S0",), mappers=("M0",), reducers=("R0",),
        push_bandwidth=np.array([[1.0]]),
        shuffle_bandwidth=np.array([[1.0]]),
        map_capacity=np.array([1.0]),
        reduce_capacity=np.array([1.0]),
        cluster_of={"S0": "c0", "M0": "c0", "R0": "c0"},
    )


@pytest.fixture
def unit_workload() -> Workload:
    return Workload(np.array([1.0]), 1.0)
