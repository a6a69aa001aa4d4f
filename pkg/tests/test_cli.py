"""Command-line front end: config parsing, file formats, exit codes, round trips."""

import json

import numpy as np
import yaml

from surveyblend import (
    EstimatorKind,
    ModelSpec,
    Regime,
    fit_nuisance,
    point_estimate,
    pool,
    provider_for,
    var_estimate,
    var_prob_estimate,
)
from surveyblend.cli import main, read_samples, load_config, write_sample_csvs
from conftest import make_observed

K = EstimatorKind


def estimate_config(tmp_path, observed, out="out", **analysis):
    write_sample_csvs(observed, tmp_path)
    cfg = {
        "mode": "estimate",
        "output_dir": str(tmp_path / out),
        "level": 0.95,
        "inputs": {
            "sample_a": str(tmp_path / "sample_a.csv"),
            "sample_b": str(tmp_path / "sample_b.csv"),
            "n_population": observed.n_population,
        },
        "design": {"kind": observed.design.kind.value,
                   **({"n": observed.design.n} if observed.design.n else {})},
        "analysis": {"fit_method": "pseudo_ml", "outcome_family": "linear_gaussian", **analysis},
        "estimators": {
            "points": ["HT", "Hajek", "IPW1", "IPW2", "DR1", "DR2"],
            "variances": [{"kind": "DR1", "regime": "both_correct"},
                          {"kind": "DR2", "regime": "selection_correct"}],
            "covariances": [{"kind": "DR2", "regime": "both_correct", "prob": "Hajek"}],
            "pooled": [{"kind": "DR2", "regime": "both_correct", "prob": "Hajek"}],
        },
    }
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(cfg))
    return path


def simulate_config(tmp_path, out="sim", replicates=12, seed=7, parallel=False):
    cfg = {
        "mode": "simulate",
        "output_dir": str(tmp_path / out),
        "parallel": parallel,
        "scenario": {
            "n_population": 1200,
            "covariates": [{"kind": "normal"}],
            "beta_true": [1.0, 1.0],
            "alpha_true": [-1.5, 0.4],
            "sample_a_size": 120,
            "replicates": replicates,
            "seed": seed,
            "plan": {
                "prob_points": ["Hajek"],
                "var_pairs": [["DR1", "both_correct"]],
                "pooled": [["DR1", "both_correct", "Hajek"]],
            },
        },
    }
    path = tmp_path / f"config_{out}.yaml"
    path.write_text(yaml.safe_dump(cfg))
    return path


class TestEstimateMode:
    def test_happy_path(self, tmp_path, capsys):
        observed = make_observed(seed=80)
        config = estimate_config(tmp_path, observed)
        assert main(["estimate", "--config", str(config)]) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert len(report["points"]) == 6
        assert len(report["pooled"]) == 1
        assert (tmp_path / "out" / "report.txt").read_text().startswith("surveyblend")
        assert not (tmp_path / "out" / ".lock").exists()

    def test_bad_probability_names_row(self, tmp_path, capsys):
        observed = make_observed(seed=81)
        config = estimate_config(tmp_path, observed)
        # corrupt one pi_a value in place (row 4 of the file, line 5 with header)
        path = tmp_path / "sample_a.csv"
        lines = path.read_text().splitlines()
        parts = lines[4].split(",")
        parts[-2] = "1.5"
        lines[4] = ",".join(parts)
        path.write_text("\n".join(lines) + "\n")
        assert main(["estimate", "--config", str(config)]) == 2
        err = capsys.readouterr().err
        assert "line 5" in err and "1.5" in err

    def test_unparsable_float_is_io_error(self, tmp_path, capsys):
        observed = make_observed(seed=82)
        config = estimate_config(tmp_path, observed)
        path = tmp_path / "sample_b.csv"
        lines = path.read_text().splitlines()
        lines[3] = lines[3].replace(lines[3].split(",")[1], "not_a_number", 1)
        path.write_text("\n".join(lines) + "\n")
        assert main(["estimate", "--config", str(config)]) == 4
        assert "line 4" in capsys.readouterr().err

    def test_solver_failure_exit_code(self, tmp_path, capsys):
        observed = make_observed(seed=83)
        separated = np.where(observed.x_b[:, 1] > 0, 1.0, 0.0)
        from surveyblend import ObservedData

        observed = ObservedData(n_population=observed.n_population, design=observed.design,
                                x_a=observed.x_a, pi_a=observed.pi_a, y_a=observed.y_a,
                                x_b=observed.x_b, y_b=separated)
        config = estimate_config(tmp_path, observed, outcome_family="logistic_binary")
        assert main(["estimate", "--config", str(config)]) == 3

    def test_lock_file_blocks_concurrent_runs(self, tmp_path, capsys):
        observed = make_observed(seed=84)
        config = estimate_config(tmp_path, observed)
        (tmp_path / "out").mkdir()
        (tmp_path / "out" / ".lock").write_text("123")
        assert main(["estimate", "--config", str(config)]) == 4
        assert "lock" in capsys.readouterr().err

    def test_missing_config_key_is_validation_error(self, tmp_path, capsys):
        path = tmp_path / "broken.yaml"
        path.write_text(yaml.safe_dump({"mode": "estimate", "inputs": {}}))
        assert main(["estimate", "--config", str(path)]) == 2

    def test_round_trip_matches_in_process_exactly(self, tmp_path):
        observed = make_observed(seed=85)
        config_path = estimate_config(tmp_path, observed)
        assert main(["estimate", "--config", str(config_path)]) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())

        # independent in-process computation on the same observed data
        config = load_config(config_path, "estimate")
        reread = read_samples(config)
        np.testing.assert_array_equal(reread.x_a, observed.x_a)
        np.testing.assert_array_equal(reread.pi_a, observed.pi_a)
        np.testing.assert_array_equal(reread.y_b, observed.y_b)

        spec = ModelSpec()
        fit = fit_nuisance(observed, spec)
        provider = provider_for(observed)
        by_kind = {row["estimator"]: row["estimate"] for row in report["points"]}
        for kind in (K.HT, K.HAJEK, K.IPW1, K.IPW2, K.DR1, K.DR2):
            assert by_kind[kind.value] == point_estimate(kind, observed, fit)
        var_rows = {(row["estimator"], row["regime"]): row for row in report["variances"]}
        assert var_rows[("DR1", "both_correct")]["variance"] == var_estimate(
            K.DR1, Regime.BOTH_CORRECT, observed, fit, provider)
        assert var_rows[("HT", None)]["variance"] == var_prob_estimate(K.HT, observed, provider)
        pooled = report["pooled"][0]
        expected = pool(observed, fit, K.DR2, Regime.BOTH_CORRECT, K.HAJEK, 0.95)
        assert pooled["pooled_estimate"] == expected.pooled_estimate
        assert pooled["pooled_variance"] == expected.pooled_variance
        assert pooled["w"] == expected.w


class TestSimulateMode:
    def test_smoke_run_emits_rows_and_manifest(self, tmp_path):
        config = simulate_config(tmp_path, replicates=2)
        assert main(["simulate", "--config", str(config)]) == 0
        rows = (tmp_path / "sim" / "summary.csv").read_text().splitlines()
        assert len(rows) >= 2  # header + at least one row
        manifest = json.loads((tmp_path / "sim" / "manifest.json").read_text())
        assert manifest["n_replicates"] == 2
        assert manifest["seed"] == 7
        assert "wall_time_seconds" in manifest

    def test_same_config_and_seed_identical_summaries(self, tmp_path):
        c1 = simulate_config(tmp_path, out="sim1")
        c2 = simulate_config(tmp_path, out="sim2")
        assert main(["simulate", "--config", str(c1)]) == 0
        assert main(["simulate", "--config", str(c2)]) == 0
        b1 = (tmp_path / "sim1" / "summary.csv").read_bytes()
        b2 = (tmp_path / "sim2" / "summary.csv").read_bytes()
        assert b1 == b2

    def test_parallel_summary_is_bit_identical_to_serial(self, tmp_path):
        serial = simulate_config(tmp_path, out="ser", replicates=16)
        parallel = simulate_config(tmp_path, out="par", replicates=16, parallel=True)
        assert main(["simulate", "--config", str(serial)]) == 0
        assert main(["simulate", "--config", str(parallel), "--workers", "2"]) == 0
        assert ((tmp_path / "ser" / "summary.csv").read_bytes()
                == (tmp_path / "par" / "summary.csv").read_bytes())

    def test_output_dir_override(self, tmp_path):
        config = simulate_config(tmp_path, replicates=2)
        assert main(["simulate", "--config", str(config),
                     "--output-dir", str(tmp_path / "elsewhere")]) == 0
        assert (tmp_path / "elsewhere" / "summary.csv").exists()

    def test_mode_mismatch_is_validation_error(self, tmp_path, capsys):
        config = simulate_config(tmp_path)
        assert main(["estimate", "--config", str(config)]) == 2
