import json

import numpy as np
import pytest
from click.testing import CliRunner

from gdmr.cli import main
from gdmr.makespan import evaluate
from gdmr.plan import BarrierConfig, affinity_plan, save_plan, uniform_plan
from gdmr.platform import make_two_cluster_example, save_scenario
from gdmr.reporting import (
    CSV_HEADER,
    barrier_sweep,
    compare_strategies,
    rows_to_csv,
    rows_to_jsonl,
)


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def files(tmp_path):
    sc = make_two_cluster_example()
    scenario = tmp_path / "tc.yaml"
    save_scenario(sc, scenario)
    plan = tmp_path / "aff.yaml"
    save_plan(affinity_plan(sc.platform), plan)
    return {"scenario": str(scenario), "plan": str(plan), "dir": tmp_path}


class TestScenarioCommand:
    def test_writes_environment(self, runner, tmp_path):
        out = tmp_path / "g8.yaml"
        result = runner.invoke(main, ["scenario", "global-8", "--seed", "1", "-o", str(out)])
        assert result.exit_code == 0
        assert out.exists()

    def test_two_cluster(self, runner, tmp_path):
        out = tmp_path / "tc.yaml"
        result = runner.invoke(main, ["scenario", "two-cluster", "-o", str(out)])
        assert result.exit_code == 0


class TestEvaluateCommand:
    def test_prints_makespan(self, runner, files):
        result = runner.invoke(main, ["evaluate", "--scenario", files["scenario"],
                                      "--plan", files["plan"]])
        assert result.exit_code == 0
        assert "makespan: 11500.0 s" in result.output

    def test_missing_scenario_is_io_error(self, runner, files):
        result = runner.invoke(main, ["evaluate", "--scenario", "nope.yaml",
                                      "--plan", files["plan"]])
        assert result.exit_code == 3

    def test_malformed_plan_reports_row_sum(self, runner, files, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("push_fraction: [[0.7, 0.2], [0.5, 0.5]]\nreducer_fraction: [0.5, 0.5]\n")
        result = runner.invoke(main, ["evaluate", "--scenario", files["scenario"],
                                      "--plan", str(bad)])
        assert result.exit_code == 1
        assert "sum" in result.output

    def test_wrong_dimensions_named(self, runner, files, tmp_path):
        bad = tmp_path / "dims.yaml"
        bad.write_text("push_fraction: [[1.0]]\nreducer_fraction: [1.0]\n")
        result = runner.invoke(main, ["evaluate", "--scenario", files["scenario"],
                                      "--plan", str(bad)])
        assert result.exit_code == 1
        assert "shape" in result.output

    def test_alpha_override(self, runner, files):
        result = runner.invoke(main, ["evaluate", "--scenario", files["scenario"],
                                      "--plan", files["plan"], "--alpha", "10"])
        assert result.exit_code == 0
        assert "alpha: 10" in result.output

    def test_csv_format(self, runner, files):
        result = runner.invoke(main, ["evaluate", "--scenario", files["scenario"],
                                      "--plan", files["plan"], "--format", "csv"])
        assert result.output.splitlines()[0] == "node,phase,start_s,end_s"


class TestPlanCommand:
    def test_uniform_strategy(self, runner, files):
        out = files["dir"] / "uni.yaml"
        result = runner.invoke(main, ["plan", "--scenario", files["scenario"],
                                      "--strategy", "uniform", "-o", str(out)])
        assert result.exit_code == 0
        from gdmr.plan import load_plan

        plan = load_plan(out)
        assert np.all(plan.push_fraction == 0.5)

    def test_e2e_with_report(self, runner, files):
        out = files["dir"] / "e2e.yaml"
        rep = files["dir"] / "rep.json"
        result = runner.invoke(main, ["plan", "--scenario", files["scenario"],
                                      "--strategy", "e2e", "--alpha", "10",
                                      "-o", str(out), "--report", str(rep)])
        assert result.exit_code == 0
        payload = json.loads(rep.read_text())
        assert payload["strategy"] == "e2e"
        assert payload["gap"] <= 1e-4
        assert payload["predicted_makespan_s"] > 0

    def test_myopic_report_has_stages(self, runner, files):
        out = files["dir"] / "myo.yaml"
        rep = files["dir"] / "myo.json"
        result = runner.invoke(main, ["plan", "--scenario", files["scenario"],
                                      "--strategy", "myopic", "-o", str(out),
                                      "--report", str(rep)])
        assert result.exit_code == 0
        payload = json.loads(rep.read_text())
        assert [s["objective"] for s in payload["stages"]] == [
            "push_time", "shuffle_time_given_push"]

    def test_solver_limit_exit_code(self, runner, files):
        out = files["dir"] / "lim.yaml"
        result = runner.invoke(main, ["plan", "--scenario", files["scenario"],
                                      "--strategy", "e2e", "--alpha", "10",
                                      "--time-limit", "0.0", "-o", str(out)])
        assert result.exit_code == 2
        assert out.exists()  # partial result still written


class TestCompareCommand:
    def test_csv_schema_and_uniform_row(self, runner, files):
        result = runner.invoke(main, ["compare", "--scenario", files["scenario"],
                                      "--strategy", "uniform", "--strategy", "affinity",
                                      "--alpha", "1", "--format", "csv"])
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        assert lines[0] == CSV_HEADER
        uniform_row = lines[1].split(",")
        assert uniform_row[1] == "uniform"
        assert float(uniform_row[5]) == 1.0

    def test_deterministic_output(self, runner, files):
        args = ["compare", "--scenario", files["scenario"], "--strategy", "uniform",
                "--strategy", "e2e", "--alpha", "0.5", "--alpha", "2", "--format", "csv"]
        a = runner.invoke(main, args)
        b = runner.invoke(main, args)
        assert a.output == b.output
        assert a.exit_code == 0


class TestSimulateCommand:
    def test_fluid_run_with_trace(self, runner, files):
        trace = files["dir"] / "trace.csv"
        result = runner.invoke(main, ["simulate", "--scenario", files["scenario"],
                                      "--plan", files["plan"], "--chunk", "0",
                                      "--trace", str(trace)])
        assert result.exit_code == 0
        assert "relative error: 0.000e+00" in result.output
        assert trace.read_text().startswith("time_s,entity,event,bytes")

    def test_chunked_run(self, runner, files):
        result = runner.invoke(main, ["simulate", "--scenario", files["scenario"],
                                      "--plan", files["plan"], "--chunk", "1GB",
                                      "--barriers", "P-P-L"])
        assert result.exit_code == 0

    def test_bad_chunk_suffix(self, runner, files):
        result = runner.invoke(main, ["simulate", "--scenario", files["scenario"],
                                      "--plan", files["plan"], "--chunk", "64MiB"])
        assert result.exit_code == 1


class TestBarrierSweepCommand:
    def test_two_cluster_sweep(self, runner, files):
        result = runner.invoke(main, ["barrier-sweep", "--scenario", files["scenario"],
                                      "--alpha", "1", "--format", "csv"])
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        assert len(lines) == 6  # header + 5 configurations
        normalized = [float(line.split(",")[5]) for line in lines[1:]]
        assert normalized[0] == 1.0
        assert all(v <= 1.0 + 1e-9 for v in normalized)


class TestReportingHelpers:
    def test_rows_roundtrip_formats(self, files):
        sc = make_two_cluster_example()
        rows, limited = compare_strategies(sc, ["uniform", "affinity"], [1.0],
                                           BarrierConfig.all_global())
        assert not limited
        assert len(rows) == 2
        csv = rows_to_csv(rows)
        assert csv.splitlines()[0] == CSV_HEADER
        jsonl = rows_to_jsonl(rows)
        first = json.loads(jsonl.splitlines()[0])
        assert first["strategy"] == "uniform"
        assert first["normalized"] == 1.0

    def test_breakdown_columns_sum_to_makespan(self):
        sc = make_two_cluster_example()
        rows, _ = compare_strategies(sc, ["affinity"], [1.0], BarrierConfig.all_global())
        r = rows[0]
        assert sum(r.breakdown.values()) == pytest.approx(r.makespan_s)

    def test_barrier_sweep_all_relaxations_at_most_one(self):
        sc = make_two_cluster_example()
        rows, _ = barrier_sweep(sc, [1.0], time_limit=30)
        assert [r.strategy for r in rows][0] == "all-global"
        assert rows[0].normalized == 1.0
        assert all(r.normalized <= 1.0 + 1e-9 for r in rows)
        # with every boundary relaxed the result cannot beat no single
        # relaxation being worse than the best of them
        single = [r.normalized for r in rows[1:4]]
        assert rows[4].normalized <= min(single) + 1e-9
