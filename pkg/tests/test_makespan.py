import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gdmr.makespan import EvaluationError, evaluate, phase_breakdown, timeline_csv
from gdmr.plan import Barrier, BarrierConfig, ExecutionPlan, affinity_plan, uniform_plan
from gdmr.platform import PlatformGraph, Workload

from helpers import random_platform, random_valid_plan, random_workload

G = BarrierConfig.all_global()


class TestWorkedExample:
    """Hand-checked quantities of the tutorial two-cluster platform."""

    def test_affinity_push_ends_at_1500(self, two_cluster):
        t = evaluate(two_cluster.platform, two_cluster.workload,
                     affinity_plan(two_cluster.platform), G)
        assert t.push_end.max() == pytest.approx(1500.0, rel=1e-12)

    def test_uniform_push_ends_at_7500(self, two_cluster):
        t = evaluate(two_cluster.platform, two_cluster.workload,
                     uniform_plan(two_cluster.platform), G)
        assert t.push_end.max() == pytest.approx(7500.0, rel=1e-12)

    def test_map_phase_difference_is_500(self, two_cluster):
        p, w = two_cluster.platform, two_cluster.workload
        t_aff = evaluate(p, w, affinity_plan(p), G)
        t_uni = evaluate(p, w, uniform_plan(p), G)
        aff_map = t_aff.map_end.max() - t_aff.map_start.max()
        uni_map = t_uni.map_end.max() - t_uni.map_start.max()
        assert aff_map - uni_map == pytest.approx(500.0, rel=1e-12)


class TestUnitChain:
    def test_global_chain(self, unit_platform, unit_workload):
        t = evaluate(unit_platform, unit_workload, uniform_plan(unit_platform), G)
        assert t.push_end.tolist() == [1.0]
        assert t.map_end.tolist() == [2.0]
        assert t.shuffle_end.tolist() == [3.0]
        assert t.reduce_end.tolist() == [4.0]
        assert t.makespan == 4.0
        assert phase_breakdown(t) == {"push": 1.0, "map": 1.0, "shuffle": 1.0, "reduce": 1.0}

    def test_pipelined_chain_collapses(self, unit_platform, unit_workload):
        t = evaluate(unit_platform, unit_workload, uniform_plan(unit_platform),
                     BarrierConfig.all_pipelined())
        assert t.push_end.tolist() == [1.0]
        assert t.map_end.tolist() == [1.0]
        assert t.shuffle_end.tolist() == [1.0]
        assert t.reduce_end.tolist() == [1.0]
        assert t.makespan == 1.0

    def test_local_equals_global_on_single_node(self, unit_platform, unit_workload):
        t = evaluate(unit_platform, unit_workload, uniform_plan(unit_platform),
                     BarrierConfig(Barrier.LOCAL, Barrier.LOCAL, Barrier.LOCAL))
        assert t.makespan == 4.0


class TestErrors:
    def test_invalid_plan_rejected(self, two_cluster):
        bad = ExecutionPlan(np.array([[0.9, 0.0], [0.5, 0.5]]), np.array([0.5, 0.5]))
        with pytest.raises(EvaluationError, match="invalid plan"):
            evaluate(two_cluster.platform, two_cluster.workload, bad, G)

    def test_dimension_mismatch_rejected(self, two_cluster):
        with pytest.raises(EvaluationError):
            evaluate(two_cluster.platform, Workload(np.array([1.0]), 1.0),
                     uniform_plan(two_cluster.platform), G)


def _refinements(base: BarrierConfig, boundary: str):
    order = [Barrier.GLOBAL, Barrier.LOCAL, Barrier.PIPELINED]
    for level in order:
        yield BarrierConfig(**{**base.__dict__, boundary: level})


class TestBarrierMonotonicity:
    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 100_000))
    def test_refining_one_boundary_never_increases_makespan(self, seed):
        rng = np.random.default_rng(seed)
        n_s, n_m, n_r = (int(rng.integers(1, 4)) for _ in range(3))
        p = random_platform(rng, n_s, n_m, n_r)
        w = random_workload(rng, n_s)
        plan = random_valid_plan(rng, n_s, n_m, n_r)
        base = BarrierConfig(*rng.choice([Barrier.GLOBAL, Barrier.LOCAL, Barrier.PIPELINED], 3))
        for boundary in ("push_map", "map_shuffle", "shuffle_reduce"):
            values = [evaluate(p, w, plan, cfg).makespan
                      for cfg in _refinements(base, boundary)]
            assert values[0] >= values[1] >= values[2]


class TestScaleCovariance:
    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 100_000), c=st.floats(0.1, 50.0))
    def test_data_scaling_scales_times(self, seed, c):
        rng = np.random.default_rng(seed)
        p = random_platform(rng, 2, 2, 2)
        w = random_workload(rng, 2)
        plan = random_valid_plan(rng, 2, 2, 2)
        t1 = evaluate(p, w, plan, G)
        t2 = evaluate(p, Workload(w.data_at_source * c, w.alpha), plan, G)
        assert t2.makespan == pytest.approx(c * t1.makespan, rel=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 100_000), c=st.floats(0.1, 50.0))
    def test_rate_scaling_divides_times(self, seed, c):
        rng = np.random.default_rng(seed)
        p = random_platform(rng, 2, 2, 2)
        w = random_workload(rng, 2)
        plan = random_valid_plan(rng, 2, 2, 2)
        p2 = PlatformGraph(p.sources, p.mappers, p.reducers,
                           p.push_bandwidth * c, p.shuffle_bandwidth * c,
                           p.map_capacity * c, p.reduce_capacity * c, p.cluster_of)
        t1 = evaluate(p, w, plan, G)
        t2 = evaluate(p2, w, plan, G)
        assert t2.makespan == pytest.approx(t1.makespan / c, rel=1e-12)


class TestHomogeneousOptimality:
    def test_uniform_beats_random_samples(self):
        p = PlatformGraph(
            tuple(f"S{i}" for i in range(3)), tuple(f"M{j}" for j in range(3)),
            tuple(f"R{k}" for k in range(3)),
            np.full((3, 3), 5e7), np.full((3, 3), 5e7), np.full(3, 5e7), np.full(3, 5e7),
            {f"{r}{i}": "c" for r in "SMR" for i in range(3)})
        w = Workload(np.full(3, 2e9), 1.0)
        base = evaluate(p, w, uniform_plan(p), G).makespan
        rng = np.random.default_rng(42)
        for _ in range(200):
            plan = random_valid_plan(rng, 3, 3, 3)
            assert evaluate(p, w, plan, G).makespan >= base - 1e-9 * base


class TestPurityAndBreakdown:
    def test_bit_identical_repeats(self):
        rng = np.random.default_rng(5)
        p = random_platform(rng, 3, 2, 3)
        w = random_workload(rng, 3)
        plan = random_valid_plan(rng, 3, 2, 3)
        a = evaluate(p, w, plan, G)
        b = evaluate(p, w, plan, G)
        assert a.makespan == b.makespan
        assert np.array_equal(a.reduce_end, b.reduce_end)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 100_000),
           code=st.sampled_from(["G-G-G", "G-P-L", "P-P-L", "P-P-P", "L-L-L", "P-G-L"]))
    def test_breakdown_sums_to_makespan(self, seed, code):
        rng = np.random.default_rng(seed)
        n_s, n_m, n_r = (int(rng.integers(1, 4)) for _ in range(3))
        p = random_platform(rng, n_s, n_m, n_r)
        w = random_workload(rng, n_s)
        plan = random_valid_plan(rng, n_s, n_m, n_r)
        t = evaluate(p, w, plan, BarrierConfig.from_code(code))
        parts = phase_breakdown(t)
        assert all(v >= -1e-9 for v in parts.values())
        assert sum(parts.values()) == pytest.approx(t.makespan, rel=1e-9)

    def test_two_cluster_affinity_push_component(self, two_cluster):
        t = evaluate(two_cluster.platform, two_cluster.workload,
                     affinity_plan(two_cluster.platform), G)
        assert phase_breakdown(t)["push"] == pytest.approx(1500.0, rel=1e-12)

    def test_timeline_csv_shape(self, two_cluster):
        t = evaluate(two_cluster.platform, two_cluster.workload,
                     uniform_plan(two_cluster.platform), G)
        text = timeline_csv(t, two_cluster.platform)
        lines = text.strip().splitlines()
        assert lines[0] == "node,phase,start_s,end_s"
        # one push and map row per mapper, shuffle and reduce per reducer, summary
        assert len(lines) == 1 + 2 * 2 + 2 * 2 + 1
        assert lines[-1].startswith("job,makespan")
