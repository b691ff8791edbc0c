import json
import subprocess
import sys

import numpy as np
import pytest

from scoreinv.cli import main
from scoreinv.config import ConfigError, validate


def write_config(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


SMOKE_ELLIPTIC = {
    "experiment": "elliptic",
    "score": {"kinds": ["es"]},
    "elliptic": {"mesh": 8, "sample_counts": [4], "priors": ["standard"],
                 "lbfgs": {"max_iters": 15}},
}

SMOKE_POWERGRID = {
    "experiment": "powergrid",
    "score": {"kinds": ["es", "vs"], "band": 10},
    "powergrid": {"ns": 4, "n_obs": 3, "estimate_n_obs": 2, "truths": [10.0],
                  "m_grid": [8, 12], "steps": 50, "window": [0.1, 0.5]},
}


class TestConfigValidation:
    def test_defaults_fill_in(self):
        cfg = validate({"experiment": "elliptic"})
        assert cfg["elliptic"]["mesh"] == 64
        assert cfg["score"]["alpha"] == 0.1
        assert cfg["powergrid"]["truths"] == [10.0, 20.0]

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError) as exc:
            validate({"experiment": "elliptic", "typo_key": 1,
                      "elliptic": {"mesh": 8, "another_typo": 2}})
        text = str(exc.value)
        assert "typo_key" in text and "another_typo" in text

    def test_all_errors_listed(self):
        with pytest.raises(ConfigError) as exc:
            validate({"experiment": "nope",
                      "score": {"kinds": ["mse"], "alpha": -1},
                      "powergrid": {"m_grid": [35, 1]}})
        assert len(exc.value.errors) >= 4

    def test_crps_rejected_for_experiments(self):
        with pytest.raises(ConfigError, match="crps"):
            validate({"experiment": "powergrid", "score": {"kinds": ["crps"]}})

    def test_banded_rejected_for_elliptic(self):
        with pytest.raises(ConfigError, match="banded"):
            validate({"experiment": "elliptic", "score": {"weights": "banded"}})


class TestScoreEval:
    def test_identical_ensemble_prints_zero(self, tmp_path, capsys):
        ens = tmp_path / "ens.csv"
        obs = tmp_path / "obs.csv"
        ens.write_text("1.5\n-0.25\n")
        obs.write_text("1.5\n-0.25\n")
        code = main(["score", "--ens", str(ens), "--obs", str(obs), "--kind", "es"])
        assert code == 0
        assert float(capsys.readouterr().out.strip()) == 0.0

    def test_hand_example_m2(self, tmp_path, capsys):
        # two observables, two scenarios: the 0.5 pencil-and-paper case
        ens = tmp_path / "ens.csv"
        obs = tmp_path / "obs.csv"
        ens.write_text("0,2\n0,0\n")
        obs.write_text("1\n0\n")
        code = main(["score", "--ens", str(ens), "--obs", str(obs), "--kind", "es"])
        assert code == 0
        assert float(capsys.readouterr().out.strip()) == pytest.approx(0.5)

    def test_record_json(self, tmp_path, capsys):
        ens = tmp_path / "ens.csv"
        obs = tmp_path / "obs.csv"
        rec = tmp_path / "record.json"
        ens.write_text("0,2\n0,0\n")
        obs.write_text("1\n0\n")
        code = main(["score", "--ens", str(ens), "--obs", str(obs),
                     "--kind", "vs", "--record", str(rec)])
        assert code == 0
        doc = json.loads(rec.read_text())
        assert doc["kind"] == "vs" and doc["M"] == 2 and doc["Ns"] == 2
        assert doc["score"] == float(capsys.readouterr().out.strip())

    def test_unknown_kind_usage_error(self, tmp_path):
        ens = tmp_path / "e.csv"
        ens.write_text("1\n")
        code = main(["score", "--ens", str(ens), "--obs", str(ens),
                     "--kind", "nope"])
        assert code == 2

    def test_parse_error_with_line_number(self, tmp_path, capsys):
        ens = tmp_path / "e.csv"
        obs = tmp_path / "o.csv"
        ens.write_text("1.0\nbogus\n")
        obs.write_text("1.0\n2.0\n")
        code = main(["score", "--ens", str(ens), "--obs", str(obs), "--kind", "es"])
        assert code == 2
        assert "line 2" in capsys.readouterr().err

    def test_dimension_mismatch(self, tmp_path, capsys):
        ens = tmp_path / "e.csv"
        obs = tmp_path / "o.csv"
        ens.write_text("1.0\n2.0\n")
        obs.write_text("1.0\n")
        code = main(["score", "--ens", str(ens), "--obs", str(obs), "--kind", "es"])
        assert code == 2
        assert "mismatch" in capsys.readouterr().err


class TestEllipticRunner:
    def test_smoke_writes_declared_artifacts(self, tmp_path):
        cfg = write_config(tmp_path / "cfg.json", SMOKE_ELLIPTIC)
        out = tmp_path / "out"
        assert main(["elliptic", "--config", cfg, "--out", str(out)]) == 0
        for name in ("metadata.json", "m_true.csv", "d_obs.csv", "scenarios.csv",
                     "scenarios.csv.json", "m_prior_standard.csv",
                     "m_map_es_standard_ns4.csv", "iterations_es_standard_ns4.csv",
                     "metrics_standard.csv"):
            assert (out / name).exists(), name

    def test_refuses_nonempty_out_dir(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "cfg.json", SMOKE_ELLIPTIC)
        out = tmp_path / "out"
        out.mkdir()
        (out / "stale.txt").write_text("x")
        assert main(["elliptic", "--config", cfg, "--out", str(out)]) == 2
        assert "exists" in capsys.readouterr().err
        assert main(["elliptic", "--config", cfg, "--out", str(out),
                     "--force"]) == 0

    def test_rerun_from_metadata_bit_identical(self, tmp_path):
        cfg = write_config(tmp_path / "cfg.json", SMOKE_ELLIPTIC)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["elliptic", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["elliptic", "--config", str(out1 / "metadata.json"),
                     "--out", str(out2)]) == 0
        for f1 in sorted(out1.glob("*.csv")):
            assert f1.read_bytes() == (out2 / f1.name).read_bytes(), f1.name

    def test_config_experiment_mismatch(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "cfg.json", SMOKE_ELLIPTIC)
        assert main(["powergrid", "--config", cfg, "--out",
                     str(tmp_path / "o")]) == 2


class TestPowergridRunner:
    def test_smoke_and_determinism(self, tmp_path):
        import scoreinv.powergrid as pg
        cfg = write_config(tmp_path / "cfg.json", SMOKE_POWERGRID)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["powergrid", "--config", cfg, "--out", str(out1)]) == 0
        for name in ("curve_es_truth10.csv", "curve_vs_truth10.csv",
                     "estimate_es_truth10_low.csv", "estimate_vs_truth10_high.csv",
                     "estimates.csv", "metadata.json"):
            assert (out1 / name).exists(), name
        pg.clear_caches()  # rerun must not depend on memoized state
        assert main(["powergrid", "--config", str(out1 / "metadata.json"),
                     "--out", str(out2)]) == 0
        for f1 in sorted(out1.glob("*.csv")):
            assert f1.read_bytes() == (out2 / f1.name).read_bytes(), f1.name

    def test_curve_rows(self, tmp_path):
        cfg = write_config(tmp_path / "cfg.json", {
            **SMOKE_POWERGRID,
            "powergrid": {**SMOKE_POWERGRID["powergrid"], "estimate": False},
        })
        out = tmp_path / "out"
        assert main(["powergrid", "--config", cfg, "--out", str(out)]) == 0
        lines = (out / "curve_es_truth10.csv").read_text().strip().splitlines()
        assert lines[0] == "m,n,score"
        assert len(lines) == 1 + 5 * 3  # 5 grid values x 3 batches

    def test_seed_override_changes_outputs(self, tmp_path):
        cfg = write_config(tmp_path / "cfg.json", {
            **SMOKE_POWERGRID,
            "powergrid": {**SMOKE_POWERGRID["powergrid"], "estimate": False},
        })
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["powergrid", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["powergrid", "--config", cfg, "--out", str(out2),
                     "--seed-override", "9999"]) == 0
        a = (out1 / "curve_es_truth10.csv").read_bytes()
        b = (out2 / "curve_es_truth10.csv").read_bytes()
        assert a != b


def test_gradcheck_passes(capsys):
    assert main(["gradcheck"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert out.count("PASS") >= 11


def test_module_entry_point(tmp_path):
    ens = tmp_path / "e.csv"
    obs = tmp_path / "o.csv"
    ens.write_text("2.0\n")
    obs.write_text("2.0\n")
    proc = subprocess.run(
        [sys.executable, "-m", "scoreinv.cli", "score", "--ens", str(ens),
         "--obs", str(obs), "--kind", "crps"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert float(proc.stdout.strip()) == 0.0
