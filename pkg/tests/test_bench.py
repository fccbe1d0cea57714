"""Tests for experiment specs, seeding, CSV emission, aggregation, grid search, CLI."""
import math

import numpy as np
import pytest

from qnggc.bench import (
    AGGREGATE_COLUMNS,
    TRAJECTORY_COLUMNS,
    ConfigError,
    ExperimentSpec,
    OptimizerSpec,
    TrajectoryRow,
    compute_aggregates,
    grid_search,
    initial_points,
    load_spec,
    random_init,
    read_trajectory_csv,
    run_experiment,
    spec_from_dict,
    validate_spec,
    write_aggregate_csv,
    write_trajectory_csv,
    _fmt,
)
from qnggc.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main

EX1_THETA0 = (math.pi / 12, math.pi / 12)


def ex1_spec(**overrides):
    base = dict(
        example="ex1",
        optimizers=(
            OptimizerSpec("gd", "gd", 0.05),
            OptimizerSpec("qng", "qng", 0.05),
            OptimizerSpec("qnggc_b_eta2", "qnggc", 0.05, b=0.05 * 0.05),
            OptimizerSpec("qnggc_b005", "qnggc", 0.05, b=0.05),
            OptimizerSpec("qnggc_b02", "qnggc", 0.05, b=0.2),
        ),
        iterations=30,
        lam=0.0,
        theta0=EX1_THETA0,
    )
    base.update(overrides)
    return ExperimentSpec(**base)


class TestRandomInit:
    def test_deterministic(self):
        a = random_init(5, seed=3, n_params=4)
        b = random_init(5, seed=3, n_params=4)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_shape_and_range(self):
        points = random_init(50, seed=1, n_params=16)
        assert len(points) == 50
        for p in points:
            assert p.shape == (16,)
            assert np.all(p >= -np.pi) and np.all(p < np.pi)

    def test_different_seeds_differ(self):
        a = random_init(3, seed=0, n_params=4)
        b = random_init(3, seed=1, n_params=4)
        assert any(not np.array_equal(x, y) for x, y in zip(a, b))

    def test_prefix_stable_under_count(self):
        long = random_init(5, seed=9, n_params=2)
        short = random_init(3, seed=9, n_params=2)
        assert all(np.array_equal(x, y) for x, y in zip(short, long))


class TestSpecValidation:
    def test_accepts_benchmark_spec(self):
        spec = validate_spec(ex1_spec())
        assert spec.optimizers[0].metric_mode == "analytic"
        assert spec.optimizers[0].christoffel_source == "analytic"

    def test_theta0_length_checked(self):
        with pytest.raises(ConfigError, match="theta0"):
            validate_spec(ex1_spec(theta0=(0.1,)))

    def test_init_exactly_one_source(self):
        with pytest.raises(ConfigError, match="exactly one"):
            validate_spec(ex1_spec(theta0=None))
        with pytest.raises(ConfigError, match="exactly one"):
            validate_spec(ex1_spec(random_count=5, random_seed=1))

    def test_ex3_needs_qubits(self):
        spec = ExperimentSpec(
            example="ex3-tfim",
            optimizers=(OptimizerSpec("gd", "gd", 0.05),),
            theta0=None,
            random_count=2,
            random_seed=0,
        )
        with pytest.raises(ConfigError, match="n_qubits"):
            validate_spec(spec)

    def test_hydrogen_rejects_closed_form_christoffels(self):
        spec = ExperimentSpec(
            example="ex2-h2",
            optimizers=(OptimizerSpec("qnggc", "qnggc", 0.05, b=0.1, christoffel_source="analytic"),),
            theta0=(0.1, 0.2, 0.3),
        )
        with pytest.raises(ConfigError, match="christoffel_source"):
            validate_spec(spec)

    def test_analytic_families_reject_circuit_metrics(self):
        spec = ex1_spec(optimizers=(OptimizerSpec("qng", "qng", 0.05, metric_mode="diagonal"),))
        with pytest.raises(ConfigError, match="metric_mode"):
            validate_spec(spec)

    def test_field_level_messages(self):
        spec = ExperimentSpec(
            example="ex1",
            optimizers=(OptimizerSpec("bad", "newton", -1.0),),
            theta0=(0.1, 0.2),
            iterations=-3,
        )
        with pytest.raises(ConfigError) as excinfo:
            validate_spec(spec)
        message = str(excinfo.value)
        assert "iterations:" in message and "optimizers.bad.method" in message


class TestTomlConfig:
    def test_round_trip(self, tmp_path):
        config = tmp_path / "run.toml"
        config.write_text(
            """
example = "ex2-h2"
alpha = 0.4
beta = 0.2
iterations = 12
lambda = 1e-6

[optimizers.qng]
method = "qng"
eta = 0.05

[optimizers.qnggc]
method = "qnggc"
eta = 0.05
b = 0.0025

[init]
theta0 = [-0.2, -0.2, 0.0]
"""
        )
        spec = load_spec(config)
        assert spec.example == "ex2-h2"
        assert spec.lam == 1e-6
        assert spec.iterations == 12
        assert [o.name for o in spec.optimizers] == ["qng", "qnggc"]
        assert spec.optimizers[1].christoffel_source == "finite-difference"

    def test_random_init_table(self, tmp_path):
        config = tmp_path / "run.toml"
        config.write_text(
            """
example = "ex3-tfim"
n_qubits = 2
h = 10.0

[optimizers.gd]
method = "gd"
eta = 0.05

[init]
random = {count = 4, seed = 11}
"""
        )
        spec = load_spec(config)
        assert spec.random_count == 4 and spec.random_seed == 11
        assert len(initial_points(spec)) == 4

    def test_unknown_keys_reported(self):
        with pytest.raises(ConfigError, match="unknown key"):
            spec_from_dict(
                {
                    "example": "ex1",
                    "learning_rate": 0.1,
                    "optimizers": {"gd": {"method": "gd", "eta": 0.1}},
                    "init": {"theta0": [0.1, 0.2]},
                }
            )

    def test_missing_optimizer_fields_reported(self):
        with pytest.raises(ConfigError, match="method and eta"):
            spec_from_dict(
                {
                    "example": "ex1",
                    "optimizers": {"gd": {"eta": 0.1}},
                    "init": {"theta0": [0.1, 0.2]},
                }
            )


class TestRunExperiment:
    def test_benchmark_run_produces_five_trajectories(self):
        result = run_experiment(ex1_spec())
        assert len(result.runs) == 5
        assert [r.optimizer for r in result.runs] == [
            "gd",
            "qng",
            "qnggc_b_eta2",
            "qnggc_b005",
            "qnggc_b02",
        ]
        assert result.target_energy == -1.0
        for run in result.runs:
            assert len(run.trajectory.records) == 31

    def test_csv_round_trip_exact(self, tmp_path):
        spec = ex1_spec(iterations=5)
        result = run_experiment(spec, out_dir=tmp_path)
        rows = read_trajectory_csv(tmp_path / "trajectories.csv")
        originals = []
        for run in result.runs:
            for rec in run.trajectory.records:
                originals.append((rec.iteration, run.seed, run.optimizer, rec.energy,
                                  rec.delta_e, rec.log10_delta_e, rec.correction_norm, rec.fidelity))
        assert len(rows) == len(originals)
        for row, orig in zip(rows, originals):
            assert (row.iter, row.seed, row.optimizer) == orig[:3]
            assert row.energy == orig[3]
            assert row.delta_e == orig[4]
            assert row.log10_delta_e == orig[5]
            assert row.correction_norm == orig[6]
            assert row.fidelity == orig[7]

    def test_aggregate_csv_matches_recomputation(self, tmp_path):
        spec = ExperimentSpec(
            example="ex3-tfim",
            n_qubits=2,
            h=10.0,
            optimizers=(OptimizerSpec("gd", "gd", 0.02), OptimizerSpec("qng", "qng", 0.01)),
            iterations=5,
            lam=1e-6,
            random_count=4,
            random_seed=5,
        )
        run_experiment(spec, out_dir=tmp_path)
        rows = read_trajectory_csv(tmp_path / "trajectories.csv")
        recomputed = compute_aggregates(rows, ["gd", "qng"])
        emitted = (tmp_path / "aggregate.csv").read_text().strip().splitlines()
        assert emitted[0] == ",".join(AGGREGATE_COLUMNS)
        body = emitted[1:]
        expected = []
        for agg in recomputed:
            for i in range(len(agg.iterations)):
                expected.append(
                    ",".join(
                        [
                            str(int(agg.iterations[i])),
                            agg.optimizer,
                            _fmt(agg.mean_energy[i]),
                            _fmt(agg.mean_delta_e[i]),
                            _fmt(agg.median_delta_e[i]),
                            _fmt(agg.mean_log10_delta_e[i]),
                            _fmt(agg.mean_correction_norm[i]),
                        ]
                    )
                )
        assert body == expected

    def test_header_and_fidelity_column(self, tmp_path):
        run_experiment(ex1_spec(iterations=2), out_dir=tmp_path)
        lines = (tmp_path / "trajectories.csv").read_text().strip().splitlines()
        assert lines[0] == ",".join(TRAJECTORY_COLUMNS)
        assert lines[1].endswith(",")  # no fidelity target for this system

    def test_parallel_matches_sequential(self, tmp_path):
        spec = ex1_spec(iterations=5)
        seq = run_experiment(spec, out_dir=tmp_path / "a", parallel=1)
        par = run_experiment(spec, out_dir=tmp_path / "b", parallel=2)
        assert (tmp_path / "a" / "trajectories.csv").read_text() == (
            tmp_path / "b" / "trajectories.csv"
        ).read_text()
        for a, b in zip(seq.runs, par.runs):
            assert a.trajectory.final.energy == b.trajectory.final.energy


class TestAggregation:
    def test_hand_computed_statistics(self):
        rows = [
            TrajectoryRow(0, 0, "gd", 1.0, 1.5, 0.125, 0.0, None),
            TrajectoryRow(0, 1, "gd", 3.0, 3.5, 0.375, 0.0, None),
            TrajectoryRow(1, 0, "gd", 0.5, 1.0, 0.0, 0.25, None),
            TrajectoryRow(1, 1, "gd", 1.5, 2.0, 0.25, 0.75, None),
        ]
        agg = compute_aggregates(rows, ["gd"])[0]
        assert np.array_equal(agg.mean_energy, [2.0, 1.0])
        assert np.array_equal(agg.mean_delta_e, [2.5, 1.5])
        assert np.array_equal(agg.median_delta_e, [2.5, 1.5])
        assert np.array_equal(agg.mean_log10_delta_e, [0.25, 0.125])
        assert np.array_equal(agg.mean_correction_norm, [0.0, 0.5])

    def test_formatting_round_trips_doubles(self):
        values = [1 / 3, math.pi, -1e300, 1e-300, 0.1 + 0.2, float("-inf")]
        for v in values:
            assert float(_fmt(v)) == v


class TestGridSearch:
    def test_single_cell_returned(self):
        spec = ex1_spec(optimizers=(OptimizerSpec("qnggc", "qnggc", 0.05, b=0.2),))
        sel = grid_search(spec, eta_grid=[0.05], b_grid=[0.2])["qnggc"]
        assert sel.eta == 0.05 and sel.b == 0.2
        assert len(sel.table) == 1

    def test_gd_ignores_b_grid(self):
        spec = ex1_spec(optimizers=(OptimizerSpec("gd", "gd", 0.05),))
        a = grid_search(spec, eta_grid=[0.03, 0.05], b_grid=[0.1, 0.2])["gd"]
        b = grid_search(spec, eta_grid=[0.03, 0.05], b_grid=[123.0])["gd"]
        assert a.eta == b.eta and a.b == b.b == 0.0
        assert a.median_final_delta_e == b.median_final_delta_e

    def test_single_qubit_grid_ordering(self):
        spec = ex1_spec(
            optimizers=(
                OptimizerSpec("qng", "qng", 0.05),
                OptimizerSpec("qnggc", "qnggc", 0.05, b=0.2),
            ),
            iterations=30,
        )
        sel = grid_search(spec, eta_grid=[0.01, 0.05, 0.1], b_grid=[0.0025, 0.05, 0.2])
        assert sel["qnggc"].median_final_delta_e <= sel["qng"].median_final_delta_e

    def test_empty_grid_rejected(self):
        with pytest.raises(ConfigError, match="nonempty"):
            grid_search(ex1_spec(), eta_grid=[], b_grid=[0.1])


class TestComplexityCounts:
    def test_per_iteration_overlap_budgets(self):
        l = 16
        spec = ExperimentSpec(
            example="ex3-tfim",
            n_qubits=4,
            h=10.0,
            optimizers=(OptimizerSpec("qnggc", "qnggc", 0.01, b=0.001),),
            iterations=1,
            lam=1e-6,
            theta0=tuple(np.linspace(-1.0, 1.0, l)),
        )
        rec = run_experiment(spec).runs[0].trajectory.records[1]
        assert rec.eval_counts["metric"] == l
        assert rec.eval_counts["christoffel"] == 4 * l * l + l
        assert rec.eval_counts["christoffel"] <= 6 * (3 * l * l)

    def test_full_metric_budget(self):
        l = 16
        spec = ExperimentSpec(
            example="ex3-tfim",
            n_qubits=4,
            h=10.0,
            optimizers=(OptimizerSpec("qng", "qng", 0.01, metric_mode="full"),),
            iterations=1,
            lam=1e-6,
            theta0=tuple(np.linspace(-1.0, 1.0, l)),
        )
        rec = run_experiment(spec).runs[0].trajectory.records[1]
        assert rec.eval_counts["metric"] == 2 * l * (l + 1)
        assert rec.eval_counts["metric"] <= 4 * l * l


class TestCli:
    def test_oracle_values(self, capsys):
        assert main(["oracle", "--model", "ex1"]) == EXIT_OK
        assert main(["oracle", "--model", "h2"]) == EXIT_OK
        assert main(["oracle", "--model", "tfim", "--n", "2", "--h", "0.0"]) == EXIT_OK
        out = capsys.readouterr().out.strip().splitlines()
        assert float(out[0]) == -1.0
        assert float(out[1]) == pytest.approx(-math.sqrt(0.68), abs=1e-12)
        assert float(out[2]) == pytest.approx(-1.0, abs=1e-12)

    def test_run_command(self, tmp_path, capsys):
        config = tmp_path / "run.toml"
        config.write_text(
            """
example = "ex1"
iterations = 5

[optimizers.gd]
method = "gd"
eta = 0.05

[init]
theta0 = [0.2617993877991494, 0.2617993877991494]
"""
        )
        code = main(["run", "--config", str(config), "--out", str(tmp_path / "out")])
        assert code == EXIT_OK
        assert (tmp_path / "out" / "trajectories.csv").exists()
        assert (tmp_path / "out" / "aggregate.csv").exists()
        assert "target energy" in capsys.readouterr().out

    def test_grid_command(self, tmp_path, capsys):
        config = tmp_path / "grid.toml"
        config.write_text(
            """
example = "ex1"
iterations = 10

[optimizers.qnggc]
method = "qnggc"
eta = 0.05
b = 0.2

[init]
theta0 = [0.2617993877991494, 0.2617993877991494]
"""
        )
        code = main(["grid", "--config", str(config), "--eta", "0.05,0.1", "--b", "0.1,0.2"])
        assert code == EXIT_OK
        assert "median final delta_e" in capsys.readouterr().out

    def test_config_errors_exit_2(self, tmp_path, capsys):
        missing = tmp_path / "nope.toml"
        assert main(["run", "--config", str(missing)]) == EXIT_CONFIG
        bad = tmp_path / "bad.toml"
        bad.write_text(
            """
example = "ex9"

[optimizers.gd]
method = "gd"
eta = 0.05

[init]
theta0 = [0.1, 0.1]
"""
        )
        assert main(["run", "--config", str(bad)]) == EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_numerical_failure_exits_3(self, tmp_path, capsys):
        # theta0 = 0 leaves the state in |00>, so the second rotation layer has
        # zero metric rows; with lambda = 0 the natural-gradient solve fails.
        config = tmp_path / "singular.toml"
        config.write_text(
            """
example = "ex3-tfim"
n_qubits = 2
h = 10.0
iterations = 5

[optimizers.qng]
method = "qng"
eta = 0.05

[init]
theta0 = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
"""
        )
        code = main(["run", "--config", str(config)])
        assert code == EXIT_NUMERICAL
        assert "numerical failure" in capsys.readouterr().err
