import csv
import json
from pathlib import Path

import pytest

from bblrm import InvalidArgumentError
from bblrm.cli import main, parse_scenario_names

GOLDEN_DIR = Path(__file__).parent / "goldens"

# Small chain settings so simulate/sweep runs stay quick.
FAST_CONFIG = {"mcmc": {"burn_in": 300, "kept": 500, "thin": 1}}


@pytest.fixture()
def fast_config_path(tmp_path):
    p = tmp_path / "fast.json"
    p.write_text(json.dumps(FAST_CONFIG))
    return str(p)


class TestScenarioNames:
    def test_single(self):
        assert parse_scenario_names("S1") == ["S1"]

    def test_comma_list_with_spaces(self):
        assert parse_scenario_names("S1, S3 ,S7") == ["S1", "S3", "S7"]

    def test_range(self):
        assert parse_scenario_names("S2..S5") == ["S2", "S3", "S4", "S5"]

    def test_degenerate_range(self):
        assert parse_scenario_names("S4..S4") == ["S4"]

    def test_mixed(self):
        assert parse_scenario_names("S1,S4..S6") == ["S1", "S4", "S5", "S6"]

    def test_backwards_range(self):
        with pytest.raises(InvalidArgumentError, match="backwards"):
            parse_scenario_names("S5..S2")

    def test_range_needs_builtin_names(self):
        with pytest.raises(InvalidArgumentError):
            parse_scenario_names("S1..S9")

    def test_empty_part(self):
        with pytest.raises(InvalidArgumentError):
            parse_scenario_names("S1,,S2")

    def test_non_builtin_passes_through(self):
        # Plain names may be scenario file paths; resolution happens later.
        assert parse_scenario_names("custom.json") == ["custom.json"]


class TestSimulate:
    def test_writes_csv_audit_manifest(self, tmp_path, fast_config_path, capsys):
        out = tmp_path / "oc.csv"
        audit = tmp_path / "trials.jsonl"
        code = main(
            [
                "simulate", "--scenario", "S1", "--n-trials", "3",
                "--seed", "7", "--config", fast_config_path,
                "--out", str(out), "--audit", str(audit),
            ]
        )
        assert code == 0
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 2
        assert rows[0][:5] == ["scenario", "alpha", "omega", "n_trials", "master_seed"]
        assert rows[1][0] == "S1" and rows[1][3] == "3" and rows[1][4] == "7"

        lines = [json.loads(l) for l in audit.read_text().splitlines()]
        assert [l["trial_index"] for l in lines] == [0, 1, 2]
        assert all({"alpha", "omega", "cohorts", "declared_mtd_index"} <= set(l) for l in lines)

        manifest = json.loads((tmp_path / "oc.csv.manifest.json").read_text())
        assert manifest["command"] == "simulate"
        assert manifest["master_seed"] == 7 and manifest["n_trials"] == 3
        assert manifest["scenarios"][0]["name"] == "S1"
        assert manifest["config"]["mcmc"]["burn_in"] == 300

        printed = capsys.readouterr().out
        assert "S1 alpha=" in printed and f"wrote {out}" in printed

    def test_manifest_rerun_is_byte_identical(self, tmp_path, fast_config_path):
        out1 = tmp_path / "a.csv"
        assert (
            main(
                [
                    "simulate", "--scenario", "S2", "--n-trials", "2",
                    "--seed", "11", "--config", fast_config_path, "--out", str(out1),
                ]
            )
            == 0
        )
        out2 = tmp_path / "b.csv"
        assert (
            main(
                [
                    "simulate", "--from-manifest",
                    str(tmp_path / "a.csv.manifest.json"), "--out", str(out2),
                ]
            )
            == 0
        )
        assert out1.read_bytes() == out2.read_bytes()
        # rerunning from a manifest must not write a fresh manifest
        assert not (tmp_path / "b.csv.manifest.json").exists()

    def test_overrides_reach_the_run(self, tmp_path, fast_config_path):
        out = tmp_path / "oc.csv"
        main(
            [
                "simulate", "--scenario", "S1", "--n-trials", "1", "--seed", "1",
                "--config", fast_config_path, "--alpha", "0.4", "--omega", "0.2",
                "--out", str(out),
            ]
        )
        with open(out, newline="") as fh:
            row = list(csv.reader(fh))[1]
        assert row[1] == "0.4" and row[2] == "0.2"

    def test_random_seed_is_announced(self, tmp_path, fast_config_path, capsys):
        out = tmp_path / "oc.csv"
        code = main(
            [
                "simulate", "--scenario", "S1", "--n-trials", "1",
                "--config", fast_config_path, "--out", str(out),
            ]
        )
        assert code == 0
        err = capsys.readouterr().err
        assert "seed: chose" in err
        announced = int(err.split("chose")[1].split("(")[0].strip())
        manifest = json.loads((tmp_path / "oc.csv.manifest.json").read_text())
        assert manifest["master_seed"] == announced

    def test_custom_scenario_file(self, tmp_path, fast_config_path):
        sc = {
            "name": "custom",
            "dlt_probs": [0.01, 0.02, 0.05, 0.10, 0.25, 0.40, 0.50, 0.60, 0.70],
            "ndltae_probs": [0.1] * 9,
        }
        sc_path = tmp_path / "custom.json"
        sc_path.write_text(json.dumps(sc))
        out = tmp_path / "oc.csv"
        code = main(
            [
                "simulate", "--scenario", str(sc_path), "--n-trials", "1",
                "--seed", "3", "--config", fast_config_path, "--out", str(out),
            ]
        )
        assert code == 0
        with open(out, newline="") as fh:
            assert list(csv.reader(fh))[1][0] == "custom"


class TestSweep:
    def test_cell_grid_rows(self, tmp_path, fast_config_path):
        out = tmp_path / "sweep.csv"
        code = main(
            [
                "sweep", "--scenarios", "S1,S2", "--alphas", "0.3,0.35",
                "--omegas", "0,0.55", "--n-trials", "1", "--seed", "5",
                "--config", fast_config_path, "--out", str(out),
            ]
        )
        assert code == 0
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        assert len(rows) == 8
        # scenario outermost, omega innermost
        assert [r[0] for r in rows] == ["S1"] * 4 + ["S2"] * 4
        assert [r[2] for r in rows[:4]] == ["0.0", "0.55", "0.0", "0.55"]
        assert [r[1] for r in rows[:4]] == ["0.3", "0.3", "0.35", "0.35"]

    def test_manifest_rerun(self, tmp_path, fast_config_path):
        out1 = tmp_path / "s1.csv"
        main(
            [
                "sweep", "--scenarios", "S3", "--omegas", "0,0.55",
                "--n-trials", "1", "--seed", "9", "--config", fast_config_path,
                "--out", str(out1),
            ]
        )
        out2 = tmp_path / "s2.csv"
        code = main(
            ["sweep", "--from-manifest", str(tmp_path / "s1.csv.manifest.json"),
             "--out", str(out2)]
        )
        assert code == 0
        assert out1.read_bytes() == out2.read_bytes()


class TestRecommend:
    def test_matches_frozen_assessment(self, tmp_path, capsys):
        """The CLI path reproduces an assessment frozen at a known seed."""
        golden = json.loads((GOLDEN_DIR / "assessment_two_cohorts.json").read_text())
        history = {
            "cohorts": [
                {"dose": 2, "n_patients": 3, "dlt_count": 0, "ndltae_count": 1},
                {"dose": 4, "n_patients": 3, "dlt_count": 1, "ndltae_count": 2},
            ]
        }
        hist_path = tmp_path / "history.json"
        hist_path.write_text(json.dumps(history))
        code = main(
            ["recommend", "--history", str(hist_path), "--seed", "20260819"]
        )
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out == golden

    def test_no_burden_flag_changes_probabilities(self, tmp_path, capsys):
        history = [
            {"dose": 2, "n_patients": 3, "dlt_count": 0, "ndltae_count": 3},
            {"dose": 4, "n_patients": 3, "dlt_count": 1, "ndltae_count": 3},
        ]
        hist_path = tmp_path / "history.json"
        hist_path.write_text(json.dumps(history))
        main(["recommend", "--history", str(hist_path), "--seed", "4"])
        with_burden = json.loads(capsys.readouterr().out)
        main(["recommend", "--history", str(hist_path), "--seed", "4", "--no-burden"])
        without = json.loads(capsys.readouterr().out)
        # same chain either way; the burden widens the toxicity bands
        assert without["acceptance_rate"] == with_burden["acceptance_rate"]
        top = len(with_burden["bands"]) - 1
        assert with_burden["bands"][top]["median"] > without["bands"][top]["median"]


class TestExitCodes:
    def test_unknown_scenario(self, tmp_path, capsys):
        code = main(
            ["simulate", "--scenario", "S99", "--n-trials", "1", "--seed", "1",
             "--out", str(tmp_path / "x.csv")]
        )
        assert code == 2
        assert "unknown scenario" in capsys.readouterr().err

    def test_missing_scenario_flag(self, tmp_path, capsys):
        code = main(
            ["simulate", "--n-trials", "1", "--seed", "1",
             "--out", str(tmp_path / "x.csv")]
        )
        assert code == 2
        assert "--scenario is required" in capsys.readouterr().err

    def test_bad_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"mcmc": {"burn_in": "soon"}}')
        code = main(
            ["simulate", "--scenario", "S1", "--n-trials", "1", "--seed", "1",
             "--config", str(cfg), "--out", str(tmp_path / "x.csv")]
        )
        assert code == 2
        assert "burn_in" in capsys.readouterr().err

    def test_config_not_json(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("not json")
        code = main(
            ["recommend", "--history", str(cfg), "--config", str(cfg)]
        )
        assert code == 2
        assert "not valid JSON" in capsys.readouterr().err

    def test_missing_history_file(self, tmp_path, capsys):
        code = main(["recommend", "--history", str(tmp_path / "absent.json")])
        assert code == 2
        assert "cannot read file" in capsys.readouterr().err

    def test_invalid_history_payload(self, tmp_path, capsys):
        hist = tmp_path / "h.json"
        hist.write_text(json.dumps([{"dose": 5, "n_patients": 3, "dlt_count": 0,
                                     "ndltae_count": 0}]))
        code = main(["recommend", "--history", str(hist)])
        assert code == 2
        assert "not on the grid" in capsys.readouterr().err

    def test_backwards_sweep_range(self, tmp_path, capsys):
        code = main(
            ["sweep", "--scenarios", "S4..S2", "--n-trials", "1", "--seed", "1",
             "--out", str(tmp_path / "x.csv")]
        )
        assert code == 2

    def test_bad_alpha_list(self, tmp_path, capsys):
        code = main(
            ["sweep", "--scenarios", "S1", "--alphas", "0.3,x", "--n-trials", "1",
             "--seed", "1", "--out", str(tmp_path / "x.csv")]
        )
        assert code == 2
        assert "--alphas" in capsys.readouterr().err

    def test_bad_manifest(self, tmp_path, capsys):
        m = tmp_path / "m.json"
        m.write_text(json.dumps({"command": "simulate"}))
        code = main(
            ["simulate", "--from-manifest", str(m), "--out", str(tmp_path / "x.csv")]
        )
        assert code == 2
        assert "missing key" in capsys.readouterr().err

    def test_usage_error_from_argparse(self, capsys):
        assert main(["frobnicate"]) == 2

    def test_version_flag(self, capsys):
        assert main(["--version"]) == 0
        assert "bblrm" in capsys.readouterr().out
