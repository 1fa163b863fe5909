import json

import numpy as np
import pytest

from fglasso.cli import main
from fglasso.dgp import PrecisionDesign, SimSpec, simulate
from fglasso.glasso import GlassoConfig
from fglasso.linalg import write_matrix_csv
from fglasso.sur import fit_fglasso, fit_ols


def write_config(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


def minimal_simulate_config(tmp_path, **overrides):
    payload = {
        "spec_version": 1,
        "designs": ["band"],
        "cells": [[10, 50]],
        "n_reps": 2,
        "estimators": ["OLS"],
        "seed": 3,
    }
    payload.update(overrides)
    return write_config(tmp_path / "config.json", payload)


def export_dataset(tmp_path, data):
    data_dir = tmp_path / "data"
    data_dir.mkdir()
    write_matrix_csv(data_dir / "y.csv", data.y)
    for i, block in enumerate(data.x_blocks, start=1):
        write_matrix_csv(data_dir / f"x_{i}.csv", block)
    return str(data_dir)


class TestSimulate:
    def test_minimal_config(self, tmp_path, capsys):
        config = minimal_simulate_config(tmp_path)
        out = tmp_path / "out"
        assert main(["simulate", config, "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert len(report["cells"]) == 1
        assert (out / "raw_log.csv").exists()
        assert (out / "report.csv").exists()
        assert (out / "table.txt").exists()

    def test_fgls_undefined_cell_still_succeeds(self, tmp_path):
        config = minimal_simulate_config(
            tmp_path, cells=[[12, 8]], estimators=["OLS", "FGLS", "FGLasso"],
            cv={"n_lambdas": 4},
        )
        out = tmp_path / "out"
        assert main(["simulate", config, "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["cells"][0]["fgls_undefined"] is True

    def test_malformed_config_lists_all_violations(self, tmp_path, capsys):
        config = write_config(
            tmp_path / "bad.json",
            {
                "spec_version": 2,
                "designs": ["blob"],
                "cells": "nope",
                "estimators": ["WLS"],
                "surprise": 1,
            },
        )
        assert main(["simulate", config, "--out", str(tmp_path)]) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "ConfigInvalid"
        text = " ".join(err["violations"])
        for needle in ("spec_version", "blob", "cells", "n_reps", "WLS", "surprise"):
            assert needle in text, text

    def test_idempotent_reruns(self, tmp_path):
        config = minimal_simulate_config(tmp_path)
        out = tmp_path / "out"
        main(["simulate", config, "--out", str(out)])
        first = (out / "report.json").read_bytes()
        main(["simulate", config, "--out", str(out)])
        assert (out / "report.json").read_bytes() == first

    def test_seed_override_changes_results(self, tmp_path):
        config = minimal_simulate_config(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["simulate", config, "--out", str(out_a)])
        main(["simulate", config, "--seed", "99", "--out", str(out_b)])
        assert (out_a / "report.json").read_text() != (out_b / "report.json").read_text()


class TestFit:
    def test_round_trip_matches_in_memory_fit(self, tmp_path):
        data, _, _ = simulate(SimSpec(PrecisionDesign("band", 5), n_periods=40, seed=8))
        data_dir = export_dataset(tmp_path, data)
        out = tmp_path / "fit"
        assert main([
            "fit", data_dir, "--estimator", "fglasso", "--lam", "0.2", "--out", str(out),
        ]) == 0
        rows = (out / "beta.csv").read_text().splitlines()[1:]
        beta_cli = np.array([float(r.split(",")[2]) for r in rows])
        beta_mem = fit_fglasso(data, GlassoConfig(lam=0.2)).beta_hat
        np.testing.assert_array_equal(beta_cli, beta_mem)

    def test_ols_matches_external_least_squares(self, tmp_path):
        data, _, _ = simulate(SimSpec(PrecisionDesign("ar1", 4), n_periods=30, seed=9))
        data_dir = export_dataset(tmp_path, data)
        out = tmp_path / "fit"
        assert main(["fit", data_dir, "--estimator", "ols", "--out", str(out)]) == 0
        rows = (out / "beta.csv").read_text().splitlines()[1:]
        beta_cli = np.array([float(r.split(",")[2]) for r in rows])
        # independent check: numpy lstsq per equation
        expected = np.concatenate(
            [np.linalg.lstsq(data.x[i], data.y[i], rcond=None)[0] for i in range(4)]
        )
        np.testing.assert_allclose(beta_cli, expected, atol=1e-8)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["estimator"] == "ols"

    def test_fgls_with_short_panel_fails_with_hint(self, tmp_path, capsys):
        data, _, _ = simulate(SimSpec(PrecisionDesign("band", 12), n_periods=8, seed=10))
        data_dir = export_dataset(tmp_path, data)
        code = main(["fit", data_dir, "--estimator", "fgls", "--out", str(tmp_path / "o")])
        assert code == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "SingularSigmaHat"
        assert "fglasso" in err["message"]

    def test_missing_file_named(self, tmp_path, capsys):
        data, _, _ = simulate(SimSpec(PrecisionDesign("band", 3), n_periods=10, seed=11))
        data_dir = export_dataset(tmp_path, data)
        (tmp_path / "data" / "x_2.csv").unlink()
        assert main(["fit", data_dir, "--out", str(tmp_path / "o")]) == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "MissingFile"
        assert "x_2.csv" in err["message"]

    def test_shape_mismatch_named(self, tmp_path, capsys):
        data, _, _ = simulate(SimSpec(PrecisionDesign("band", 3), n_periods=10, seed=12))
        data_dir = export_dataset(tmp_path, data)
        write_matrix_csv(tmp_path / "data" / "x_3.csv", np.ones((4, 1)))
        assert main(["fit", data_dir, "--out", str(tmp_path / "o")]) == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "ShapeMismatch"
        assert "x_3.csv" in err["message"]

    def test_gls_requires_omega(self, tmp_path, capsys):
        data, _, _ = simulate(SimSpec(PrecisionDesign("band", 3), n_periods=10, seed=13))
        data_dir = export_dataset(tmp_path, data)
        assert main(["fit", data_dir, "--estimator", "gls", "--out", str(tmp_path / "o")]) == 2

    def test_cv_trace_in_summary(self, tmp_path):
        data, _, _ = simulate(SimSpec(PrecisionDesign("band", 4), n_periods=30, seed=14))
        data_dir = export_dataset(tmp_path, data)
        out = tmp_path / "fit"
        assert main([
            "fit", data_dir, "--n-lambdas", "4", "--n-folds", "3", "--out", str(out),
        ]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["lambda"] > 0
        assert len(summary["cv_trace"]) == 4


class TestDiagnose:
    def test_incoherence_prints_scalars(self, tmp_path, capsys):
        config = write_config(
            tmp_path / "d.json",
            {
                "spec_version": 1,
                "experiments": [{"kind": "incoherence", "design": "band", "n": 5}],
            },
        )
        out = tmp_path / "out"
        assert main(["diagnose", config, "--out", str(out)]) == 0
        stdout = capsys.readouterr().out
        for needle in ("alpha_slack=", "kappa_gamma=", "kappa_sigma="):
            assert needle in stdout
        lines = (out / "diagnostics.csv").read_text().splitlines()
        assert lines[0] == "design,N,T,metric,mean,sd,n_reps"
        assert len(lines) == 4

    def test_rate_and_coverage_emitted(self, tmp_path):
        config = write_config(
            tmp_path / "d.json",
            {
                "spec_version": 1,
                "experiments": [
                    {"kind": "rate", "design": "band", "n": 5,
                     "t_grid": [20, 40, 80], "n_reps": 2},
                    {"kind": "coverage", "design": "band", "n": 4, "t": 25,
                     "n_reps": 100, "nominal_level": 0.9},
                ],
                "seed": 5,
                "cv": {"n_lambdas": 4},
            },
        )
        out = tmp_path / "out"
        assert main(["diagnose", config, "--out", str(out)]) == 0
        rows = json.loads((out / "diagnostics.json").read_text())
        metrics = {r["metric"] for r in rows}
        assert {"omega_max_err", "beta_gap_sup", "coverage_true_omega", "coverage_plugin"} <= metrics

    def test_bad_experiment_kind(self, tmp_path, capsys):
        config = write_config(
            tmp_path / "d.json",
            {"spec_version": 1, "experiments": [{"kind": "spectral"}]},
        )
        assert main(["diagnose", config, "--out", str(tmp_path)]) == 2
