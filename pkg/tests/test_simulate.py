import math

import numpy as np
import pytest

from gdmr.makespan import evaluate
from gdmr.plan import BarrierConfig, ExecutionPlan, affinity_plan, uniform_plan
from gdmr.simulate import SimConfig, SimulationError, correlate, simulate, trace_csv
from helpers import random_platform, random_valid_plan, random_workload

G = BarrierConfig.all_global()
TIMELINE_FIELDS = ("push_end", "map_start", "map_end", "shuffle_start",
                   "shuffle_end", "reduce_start", "reduce_end")


class TestFluidIdentity:
    @pytest.mark.parametrize("code", ["G-G-G", "G-P-L", "P-P-L", "P-G-L", "G-G-L",
                                      "P-P-P", "L-L-L", "L-P-G"])
    def test_matches_analytic_timeline(self, two_cluster, code):
        b = BarrierConfig.from_code(code)
        for plan in (uniform_plan(two_cluster.platform), affinity_plan(two_cluster.platform)):
            analytic = evaluate(two_cluster.platform, two_cluster.workload, plan, b)
            trace = simulate(two_cluster.platform, two_cluster.workload, plan,
                             SimConfig(chunk_size=0, barriers=b))
            measured = trace.measured_timeline
            assert measured.makespan == pytest.approx(analytic.makespan, rel=1e-9)
            for field in TIMELINE_FIELDS:
                assert np.allclose(getattr(measured, field), getattr(analytic, field),
                                   rtol=1e-9)

    def test_random_instances(self):
        for seed in range(8):
            rng = np.random.default_rng(seed)
            n_s, n_m, n_r = (int(rng.integers(1, 4)) for _ in range(3))
            p = random_platform(rng, n_s, n_m, n_r)
            w = random_workload(rng, n_s)
            plan = random_valid_plan(rng, n_s, n_m, n_r)
            code = ["G-G-G", "G-P-L", "P-P-L", "L-L-P"][seed % 4]
            b = BarrierConfig.from_code(code)
            analytic = evaluate(p, w, plan, b)
            measured = simulate(p, w, plan, SimConfig(0, b)).measured_timeline
            assert measured.makespan == pytest.approx(analytic.makespan, rel=1e-9)

    def test_uniform_push_phase_in_trace(self, two_cluster):
        trace = simulate(two_cluster.platform, two_cluster.workload,
                         uniform_plan(two_cluster.platform), SimConfig(0, G))
        assert trace.measured_timeline.push_end.max() == pytest.approx(7500.0)
        push_ends = [ev.time for ev in trace.events
                     if ev.kind == "transfer_end" and "->M" in ev.entity]
        assert max(push_ends) == pytest.approx(7500.0)


class TestChunked:
    def test_unit_pipeline_fill_bound(self, unit_platform, unit_workload):
        b = BarrierConfig.all_pipelined()
        analytic = evaluate(unit_platform, unit_workload, uniform_plan(unit_platform), b).makespan
        chunk = 0.1  # total volume / 10
        measured = simulate(unit_platform, unit_workload, uniform_plan(unit_platform),
                            SimConfig(chunk, b)).measured_timeline.makespan
        chunk_time = chunk / 1.0
        assert analytic <= measured <= analytic + 3 * chunk_time + 1e-12

    def test_convergence_to_fluid(self, two_cluster):
        b = BarrierConfig.from_code("P-P-L")
        plan = affinity_plan(two_cluster.platform)
        analytic = evaluate(two_cluster.platform, two_cluster.workload, plan, b).makespan
        prev = np.inf
        for chunk in (16e9, 4e9, 1e9, 256e6, 64e6):
            measured = simulate(two_cluster.platform, two_cluster.workload, plan,
                                SimConfig(chunk, b)).measured_timeline.makespan
            assert measured >= analytic - 1e-9 * analytic
            assert measured <= prev + chunk / 1e7  # monotone within one-chunk jitter
            prev = measured
        assert prev <= analytic * 1.02

    def test_global_barriers_unaffected_by_chunking(self, two_cluster):
        plan = uniform_plan(two_cluster.platform)
        fluid = simulate(two_cluster.platform, two_cluster.workload, plan,
                         SimConfig(0, G)).measured_timeline.makespan
        chunked = simulate(two_cluster.platform, two_cluster.workload, plan,
                           SimConfig(64e6, G)).measured_timeline.makespan
        assert chunked == pytest.approx(fluid, rel=1e-12)

    def test_oversized_chunk_warns(self, two_cluster):
        with pytest.warns(UserWarning, match="chunk_size"):
            simulate(two_cluster.platform, two_cluster.workload,
                     uniform_plan(two_cluster.platform), SimConfig(1e12, G))

    def test_negative_chunk_rejected(self):
        with pytest.raises(SimulationError):
            SimConfig(chunk_size=-1.0)


class TestConservation:
    @pytest.mark.parametrize("code", ["G-G-G", "G-P-L", "P-P-P"])
    @pytest.mark.parametrize("chunk", [0.0, 64e6])
    def test_byte_totals_match_plan(self, two_cluster, code, chunk):
        p, w = two_cluster.platform, two_cluster.workload
        plan = affinity_plan(p)
        b = BarrierConfig.from_code(code)
        trace = simulate(p, w, plan, SimConfig(chunk, b))
        d = w.data_at_source
        x = plan.push_fraction
        y = plan.reducer_fraction
        for j, mp in enumerate(p.mappers):
            arrived = math.fsum(ev.nbytes for ev in trace.events
                                if ev.kind == "transfer_end" and ev.entity.endswith(f"->{mp}"))
            expected = math.fsum(float(d[i] * x[i, j]) for i in range(p.n_sources))
            assert arrived == expected
        for k, rd in enumerate(p.reducers):
            processed = math.fsum(ev.nbytes for ev in trace.events
                                  if ev.kind == "compute_end" and ev.entity == rd)
            assert processed == pytest.approx(w.alpha * d.sum() * y[k], rel=1e-12)
            shuffled = math.fsum(ev.nbytes for ev in trace.events
                                 if ev.kind == "transfer_end" and ev.entity.endswith(f"->{rd}"))
            assert shuffled == pytest.approx(w.alpha * d.sum() * y[k], rel=1e-12)


class TestEventOrdering:
    def test_sorted_and_deterministic(self, two_cluster):
        plan = uniform_plan(two_cluster.platform)
        a = simulate(two_cluster.platform, two_cluster.workload, plan, SimConfig(2e10, G))
        b = simulate(two_cluster.platform, two_cluster.workload, plan, SimConfig(2e10, G))
        assert a.events == b.events
        times = [ev.time for ev in a.events]
        assert times == sorted(times)

    def test_transfer_end_before_barrier_release_at_same_time(self, two_cluster):
        plan = uniform_plan(two_cluster.platform)
        trace = simulate(two_cluster.platform, two_cluster.workload, plan, SimConfig(0, G))
        t_release = [i for i, ev in enumerate(trace.events)
                     if ev.kind == "barrier_release" and ev.entity == "push/map"][0]
        same_time_ends = [i for i, ev in enumerate(trace.events)
                          if ev.kind == "transfer_end"
                          and ev.time == trace.events[t_release].time]
        assert all(i < t_release for i in same_time_ends)

    def test_csv_export(self, two_cluster):
        plan = uniform_plan(two_cluster.platform)
        trace = simulate(two_cluster.platform, two_cluster.workload, plan, SimConfig(0, G))
        text = trace_csv(trace)
        lines = text.strip().splitlines()
        assert lines[0] == "time_s,entity,event,bytes"
        assert len(lines) == len(trace.events) + 1
        assert "np.float64" not in text


class TestBarrierMonotonicityMeasured:
    def test_measured_makespans_nonincreasing(self):
        for seed in range(6):
            rng = np.random.default_rng(seed + 100)
            p = random_platform(rng, 2, 2, 2)
            w = random_workload(rng, 2)
            plan = random_valid_plan(rng, 2, 2, 2)
            values = []
            for code in ("G-G-G", "L-L-L", "P-P-P"):
                cfg = SimConfig(0, BarrierConfig.from_code(code))
                values.append(simulate(p, w, plan, cfg).measured_timeline.makespan)
            assert values[0] >= values[1] >= values[2]


class TestCorrelate:
    def test_perfect_line(self):
        slope, intercept, r2 = correlate([(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)])
        assert slope == pytest.approx(1.0)
        assert intercept == pytest.approx(0.0)
        assert r2 == pytest.approx(1.0)

    def test_doubling_line(self):
        slope, intercept, r2 = correlate([(1.0, 2.0), (2.0, 4.0), (3.0, 6.0)])
        assert slope == pytest.approx(2.0)
        assert intercept == pytest.approx(0.0, abs=1e-12)
        assert r2 == pytest.approx(1.0)

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            correlate([(1.0, 2.0), (1.0, 3.0)])
        with pytest.raises(ValueError):
            correlate([(1.0, 2.0)])

    def test_noisy_fit(self):
        rng = np.random.default_rng(0)
        pred = rng.uniform(10, 100, 40)
        meas = 1.1 * pred + rng.normal(0, 1.0, 40)
        slope, intercept, r2 = correlate(list(zip(pred, meas)))
        assert slope == pytest.approx(1.1, abs=0.05)
        assert r2 > 0.99

    def test_invalid_plan_rejected(self, two_cluster):
        bad = ExecutionPlan(np.array([[0.9, 0.0], [0.5, 0.5]]), np.array([0.5, 0.5]))
        with pytest.raises(SimulationError):
            simulate(two_cluster.platform, two_cluster.workload, bad, SimConfig(0, G))
