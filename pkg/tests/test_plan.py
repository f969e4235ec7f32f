import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gdmr.plan import (
    Barrier,
    BarrierConfig,
    ExecutionPlan,
    PlanError,
    affinity_plan,
    bucket_assignment,
    load_plan,
    renormalize,
    save_plan,
    uniform_plan,
    validate_plan,
)
from gdmr.platform import PlatformGraph

from helpers import random_platform


class TestBarrierConfig:
    def test_codes_round_trip(self):
        for code in ["G-G-G", "G-P-L", "P-P-L", "L-L-L"]:
            assert BarrierConfig.from_code(code).code == code

    def test_bad_code(self):
        with pytest.raises(ValueError):
            BarrierConfig.from_code("G-X-L")
        with pytest.raises(ValueError):
            BarrierConfig.from_code("G-P")

    def test_all_shortcuts(self):
        assert BarrierConfig.all_global().code == "G-G-G"
        assert BarrierConfig.all_pipelined().code == "P-P-P"


class TestValidatePlan:
    def test_uniform_ok(self, two_cluster):
        plan = ExecutionPlan(np.full((2, 2), 0.5), np.array([0.5, 0.5]))
        assert validate_plan(plan, two_cluster.platform).ok

    def test_bad_row_sum_names_source(self, two_cluster):
        plan = ExecutionPlan(np.array([[0.5, 0.4], [0.5, 0.5]]), np.array([0.5, 0.5]))
        result = validate_plan(plan, two_cluster.platform)
        assert not result.ok
        assert any(v.code == "bad-row-sum" and v.where == ("D1",) for v in result.violations)

    def test_negative_entry_names_edge(self, two_cluster):
        plan = ExecutionPlan(np.array([[1.1, -0.1], [0.5, 0.5]]), np.array([0.5, 0.5]))
        result = validate_plan(plan, two_cluster.platform)
        assert any(v.code == "bad-fraction" and v.where == ("D1", "M2") for v in result.violations)

    def test_dimension_mismatch(self, two_cluster):
        plan = ExecutionPlan(np.ones((1, 1)), np.array([1.0]))
        result = validate_plan(plan, two_cluster.platform)
        assert any(v.code == "bad-shape" for v in result.violations)

    def test_reducer_sum_checked(self, two_cluster):
        plan = ExecutionPlan(np.full((2, 2), 0.5), np.array([0.6, 0.6]))
        result = validate_plan(plan, two_cluster.platform)
        assert any(v.where == ("reducers",) for v in result.violations)


class TestBaselinePlans:
    def test_uniform_two_by_two(self, two_cluster):
        plan = uniform_plan(two_cluster.platform)
        assert np.all(plan.push_fraction == 0.5)
        assert np.all(plan.reducer_fraction == 0.5)
        assert validate_plan(plan, two_cluster.platform).ok

    def test_uniform_degenerate(self, unit_platform):
        plan = uniform_plan(unit_platform)
        assert plan.push_fraction.tolist() == [[1.0]]
        assert plan.reducer_fraction.tolist() == [1.0]

    def test_uniform_eight_mappers(self):
        rng = np.random.default_rng(0)
        p = random_platform(rng, 3, 8, 2)
        plan = uniform_plan(p)
        assert np.allclose(plan.push_fraction, 0.125)
        assert plan.push_fraction.shape == (3, 8)

    def test_affinity_is_identity_on_two_cluster(self, two_cluster):
        plan = affinity_plan(two_cluster.platform)
        assert np.array_equal(plan.push_fraction, np.eye(2))
        assert np.all(plan.reducer_fraction == 0.5)

    def test_affinity_single_cluster_equals_uniform(self):
        p = PlatformGraph(("S0", "S1"), ("M0", "M1"), ("R0",),
                          np.ones((2, 2)), np.ones((2, 1)), np.ones(2), np.ones(1),
                          {n: "only" for n in ("S0", "S1", "M0", "M1", "R0")})
        assert np.array_equal(affinity_plan(p).push_fraction, uniform_plan(p).push_fraction)

    def test_affinity_errors_without_local_mapper(self):
        p = PlatformGraph(("S0",), ("M0",), ("R0",), np.ones((1, 1)), np.ones((1, 1)),
                          np.ones(1), np.ones(1), {"S0": "a", "M0": "b", "R0": "b"})
        with pytest.raises(PlanError, match="no mapper"):
            affinity_plan(p)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_generated_plans_always_valid(self, seed):
        rng = np.random.default_rng(seed)
        p = random_platform(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)),
                            int(rng.integers(1, 5)))
        assert validate_plan(uniform_plan(p), p).ok
        mapper_clusters = {p.cluster_of[m] for m in p.mappers}
        uncovered = [s for s in p.sources if p.cluster_of[s] not in mapper_clusters]
        if uncovered:
            with pytest.raises(PlanError):
                affinity_plan(p)
        else:
            assert validate_plan(affinity_plan(p), p).ok


class TestRenormalize:
    def test_snaps_tiny_drift(self):
        x = np.array([[0.5 + 2e-10, 0.5 - 4e-10]])
        plan = renormalize(ExecutionPlan(x, np.array([1.0 - 1e-10])))
        assert plan.push_fraction.sum() == 1.0
        assert plan.reducer_fraction.sum() == 1.0

    def test_leaves_large_errors(self):
        plan = renormalize(ExecutionPlan(np.array([[0.7, 0.2]]), np.array([1.0])))
        assert plan.push_fraction.sum() == pytest.approx(0.9)


class TestRelabelingSymmetry:
    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_validity_invariant_under_reducer_permutation(self, seed):
        rng = np.random.default_rng(seed)
        n_r = int(rng.integers(2, 5))
        p = random_platform(rng, 2, 2, n_r)
        y = rng.dirichlet(np.ones(n_r))
        plan = ExecutionPlan(np.full((2, 2), 0.5), y)
        perm = rng.permutation(n_r)
        p2 = PlatformGraph(p.sources, p.mappers, tuple(p.reducers[k] for k in perm),
                           p.push_bandwidth, p.shuffle_bandwidth[:, perm],
                           p.map_capacity, p.reduce_capacity[perm], p.cluster_of)
        plan2 = ExecutionPlan(plan.push_fraction, y[perm])
        assert validate_plan(plan, p).ok == validate_plan(plan2, p2).ok


class TestBuckets:
    def test_counts_follow_rounding(self):
        plan = ExecutionPlan(np.ones((1, 1)), np.array([2 / 3, 1 / 3]))
        assignment = bucket_assignment(plan, 1024)
        assert assignment.shape == (1024,)
        counts = np.bincount(assignment, minlength=2)
        assert counts[0] == round(2 / 3 * 1024)
        assert counts.sum() == 1024

    def test_all_buckets_assigned_under_ties(self):
        plan = ExecutionPlan(np.ones((1, 1)), np.array([0.5, 0.5]))
        counts = np.bincount(bucket_assignment(plan, 1023), minlength=2)
        assert counts.sum() == 1023
        assert abs(counts[0] - counts[1]) <= 1

    def test_contiguous_blocks(self):
        plan = ExecutionPlan(np.ones((1, 1)), np.array([0.25, 0.75]))
        assignment = bucket_assignment(plan, 16)
        assert np.all(np.diff(assignment) >= 0)


class TestPlanFiles:
    def test_round_trip(self, tmp_path, two_cluster):
        plan = affinity_plan(two_cluster.platform)
        path = tmp_path / "plan.yaml"
        save_plan(plan, path, bucket_count=64)
        back = load_plan(path)
        assert np.array_equal(back.push_fraction, plan.push_fraction)
        assert np.array_equal(back.reducer_fraction, plan.reducer_fraction)
        text = path.read_text()
        assert "shuffle_fraction" in text
        assert "buckets" in text

    def test_bad_row_sums_survive_for_validation(self, tmp_path, two_cluster):
        path = tmp_path / "bad.yaml"
        path.write_text("push_fraction: [[0.7, 0.2], [0.5, 0.5]]\nreducer_fraction: [0.5, 0.5]\n")
        plan = load_plan(path)
        result = validate_plan(plan, two_cluster.platform)
        assert not result.ok

    def test_missing_keys(self, tmp_path):
        path = tmp_path / "nokeys.yaml"
        path.write_text("push_fraction: [[1.0]]\n")
        with pytest.raises(PlanError):
            load_plan(path)

    def test_non_numeric(self, tmp_path):
        path = tmp_path / "nan.yaml"
        path.write_text("push_fraction: [[a, b]]\nreducer_fraction: [1.0]\n")
        with pytest.raises(PlanError):
            load_plan(path)
