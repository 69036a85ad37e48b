"""Table round trips, typed data errors, CLI subcommands and exit codes."""

import json
from pathlib import Path

import numpy as np
import pytest

from latentclass import io
from latentclass.cli import main
from latentclass.config import EntrySpec, ModelConfig, SamplerSchedule, Hyperparams
from latentclass.exceptions import DataError
from latentclass.gibbs import run_chain
from latentclass.model import simulate_dataset

from helpers import small_instance


class TestTables:
    def test_dataset_round_trip(self, tmp_path):
        cfg, hyper, params, data, z, W = small_instance(seed=0, p=4, p_x=2, p_t=1, n_obs=12)
        io.write_dataset(tmp_path, data)
        loaded = io.load_dataset(
            tmp_path / "Y.csv", tmp_path / "X.csv", tmp_path / "T.csv",
            entry_specs=cfg.entry_specs,
        )
        assert np.array_equal(loaded.Y, data.Y)
        assert np.array_equal(loaded.X, data.X)
        assert np.array_equal(loaded.T, data.T)

    def test_intercept_only_dataset(self, tmp_path):
        io.write_table(tmp_path / "Y.csv", ["y1", "y2"], [[0, 1], [1, 0]])
        data = io.load_dataset(tmp_path / "Y.csv")
        assert data.X.shape == (2, 0)
        assert data.T.shape == (2, 0)
        cfg = ModelConfig(p=2, q=1, d=1)
        data.validate(cfg)

    def test_binary_support_error_names_cell(self, tmp_path):
        io.write_table(tmp_path / "Y.csv", ["y1"], [[0], [2]])
        with pytest.raises(DataError, match=r"Y\[1, 0\]"):
            io.load_dataset(tmp_path / "Y.csv", entry_specs=(EntrySpec.binary(),))

    def test_missing_cell_rejected(self, tmp_path):
        (tmp_path / "Y.csv").write_text("y1,y2\n1,\n")
        with pytest.raises(DataError, match="missing value"):
            io.load_dataset(tmp_path / "Y.csv")

    def test_ragged_row_rejected(self, tmp_path):
        (tmp_path / "Y.csv").write_text("y1,y2\n1,0\n1\n")
        with pytest.raises(DataError, match="ragged"):
            io.load_dataset(tmp_path / "Y.csv")

    def test_float_round_trip_precision(self, tmp_path):
        vals = [[0.1 + 0.2], [1.0 / 3.0], [1e-17], [123456.789012345678]]
        io.write_table(tmp_path / "t.csv", ["v"], vals)
        header, rows = io.read_table(tmp_path / "t.csv")
        for (expected,), (got,) in zip(vals, rows):
            assert float(got) == expected

    def test_entry_spec_text_round_trip(self):
        specs = (EntrySpec.binary(), EntrySpec.categorical(4), EntrySpec.count())
        text = io.entry_specs_to_text(specs)
        assert io.parse_entry_specs(text, 3) == specs


class TestArchiveRoundTrip:
    def test_archive_round_trip(self, tmp_path):
        cfg, hyper, params, data, z, W = small_instance(seed=5, p=3, q=2, d=2, n_obs=10)
        out = run_chain(data, cfg, hyper, SamplerSchedule(n_iters=20, burn_in=5, seed=1))
        io.write_archive(tmp_path, out)
        loaded = io.load_archive(tmp_path, cfg)
        assert np.allclose(loaded.A, out.A)
        assert np.allclose(loaded.Gamma, out.Gamma)
        assert np.allclose(loaded.Theta, out.Theta)
        assert np.array_equal(loaded.G, out.G)
        assert np.array_equal(loaded.z, out.z)
        assert np.array_equal(loaded.W, out.W)
        assert np.allclose(loaded.loglik, out.loglik)
        for a, b in zip(loaded.B, out.B):
            assert np.allclose(a, b)


def run_cli(args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    code = run_cli([
        "simulate", "--n", 60, "--p", 6, "--q", 2, "--d", 2, "--p-x", 2, "--p-t", 2,
        "--seed", 7, "--truth-mode", "--out", out,
    ])
    assert code == 0
    return out


@pytest.fixture(scope="module")
def fit_dir(sim_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("fit")
    code = run_cli([
        "fit", "--y", sim_dir / "Y.csv", "--x", sim_dir / "X.csv", "--t", sim_dir / "T.csv",
        "--q", 2, "--d", 2, "--n-iters", 120, "--seed", 3, "--out", out,
    ])
    assert code == 0
    return out


class TestCli:
    def test_simulate_outputs(self, sim_dir):
        for name in ("Y.csv", "X.csv", "T.csv", "truth_z.csv", "truth_w.csv",
                     "truth_G.csv", "manifest.json"):
            assert (sim_dir / name).exists()
        manifest = json.loads((sim_dir / "manifest.json").read_text())
        assert manifest["seed"] == 7
        assert manifest["config"]["p"] == 6

    def test_simulate_deterministic(self, sim_dir, tmp_path):
        code = run_cli([
            "simulate", "--n", 60, "--p", 6, "--q", 2, "--d", 2, "--p-x", 2, "--p-t", 2,
            "--seed", 7, "--truth-mode", "--out", tmp_path,
        ])
        assert code == 0
        for name in ("Y.csv", "X.csv", "T.csv", "truth_B.csv"):
            assert (tmp_path / name).read_bytes() == (sim_dir / name).read_bytes()

    def test_fit_outputs(self, fit_dir):
        for name in ("samples_A.csv", "samples_B.csv", "samples_G.csv", "loglik.csv",
                     "summary_B.csv", "mode_G.csv", "mode_z.csv", "waic.csv", "manifest.json"):
            assert (fit_dir / name).exists()
        rows = io.read_waic_table(fit_dir / "waic.csv")
        assert rows[0][:2] == (2, 2)

    def test_fit_archive_snapshot_count(self, fit_dir):
        header, rows = io.read_table(fit_dir / "samples_z.csv")
        assert len(rows) == 60  # 120 iters, half burn-in

    def test_predict_and_metrics(self, fit_dir, sim_dir, tmp_path):
        code = run_cli([
            "predict", "--archive", fit_dir, "--y", sim_dir / "Y.csv", "--out", tmp_path,
        ])
        assert code == 0
        header, rows = io.read_table(tmp_path / "metrics.csv")
        metrics = {r[0]: float(r[1]) for r in rows}
        assert set(metrics) == {"rmse", "auc", "cooccurrence"}
        assert 0 <= metrics["rmse"] <= 1

    def test_predict_out_of_sample(self, fit_dir, sim_dir, tmp_path):
        code = run_cli([
            "predict", "--archive", fit_dir, "--x-new", sim_dir / "X.csv", "--out", tmp_path,
        ])
        assert code == 0
        phat = io._numeric_matrix(tmp_path / "phat.csv")
        assert phat.shape == (60, 6)
        assert np.all((phat > 0) & (phat < 1))

    def test_select_grid(self, sim_dir, tmp_path):
        code = run_cli([
            "select", "--y", sim_dir / "Y.csv", "--x", sim_dir / "X.csv", "--t", sim_dir / "T.csv",
            "--q-grid", "1,2", "--d-grid", "1,2", "--n-iters", 60, "--seed", 9, "--out", tmp_path,
        ])
        assert code == 0
        rows = io.read_waic_table(tmp_path / "waic_grid.csv")
        assert [(q, d) for q, d, _ in rows] == [(1, 1), (1, 2), (2, 1), (2, 2)]

    def test_diagnose_mixture(self, tmp_path):
        code = run_cli([
            "diagnose-mixture", "--n", 4, "--p-grid", "16,64", "--n-seeds", 5,
            "--seed", 2, "--out", tmp_path,
        ])
        assert code == 0
        header, rows = io.read_table(tmp_path / "mixture_demo.csv")
        assert header == ["p", "rep", "log_ratio"]
        assert len(rows) == 10

    def test_check_g_plain_matrix(self, tmp_path, capsys):
        io.write_table(tmp_path / "G.csv", ["g1", "g2"],
                       np.vstack([np.eye(2, dtype=int)] * 3))
        code = run_cli(["check-g", "--input", tmp_path / "G.csv"])
        assert code == 0
        out = capsys.readouterr().out
        assert "strict condition (three identity blocks): PASS" in out
        assert "generic condition (two diagonal blocks + coverage): PASS" in out

    def test_check_g_mode_table(self, fit_dir, capsys):
        code = run_cli(["check-g", "--input", fit_dir / "mode_G.csv"])
        assert code == 0
        assert "loading matrix: 6 dimensions x 2 attributes" in capsys.readouterr().out

    def test_exit_code_config_error(self, sim_dir, tmp_path):
        code = run_cli([
            "fit", "--y", sim_dir / "Y.csv", "--q", 0, "--d", 2, "--seed", 1, "--out", tmp_path,
        ])
        assert code == 2

    def test_exit_code_data_error(self, tmp_path):
        (tmp_path / "Y.csv").write_text("y1\n1\n3\n")
        code = run_cli([
            "fit", "--y", tmp_path / "Y.csv", "--entry-specs", "binary",
            "--q", 1, "--d", 1, "--seed", 1, "--out", tmp_path / "out",
        ])
        assert code == 3

    def test_fit_deterministic_tables(self, sim_dir, tmp_path):
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            code = run_cli([
                "fit", "--y", sim_dir / "Y.csv", "--x", sim_dir / "X.csv", "--t", sim_dir / "T.csv",
                "--q", 2, "--d", 2, "--n-iters", 40, "--seed", 5, "--out", out,
            ])
            assert code == 0
            outs.append(out)
        for name in ("samples_A.csv", "samples_B.csv", "loglik.csv", "summary_A.csv"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()

    def test_config_file_defaults(self, sim_dir, tmp_path):
        cfg_file = tmp_path / "run.json"
        cfg_file.write_text(json.dumps({"q": 2, "d": 2, "n-iters": 40, "seed": 12}))
        out = tmp_path / "out"
        code = run_cli([
            "--config", cfg_file, "fit", "--y", sim_dir / "Y.csv", "--x", sim_dir / "X.csv",
            "--t", sim_dir / "T.csv", "--out", out,
        ])
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 12
        assert manifest["config"]["schedule"]["n_iters"] == 40
