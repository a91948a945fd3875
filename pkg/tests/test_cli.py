import json
import subprocess
import sys

import pytest

from covertsim import cli, model

from conftest import awgn_scenario, fading_scenario


def write_config(tmp_path, scenario, name="config.json"):
    path = tmp_path / name
    model.save_scenario(scenario, path)
    return str(path)


def run_cli(args):
    return cli.main(args)


class TestErrors:
    def test_missing_config(self, tmp_path, capsys):
        code = run_cli(["covertness", str(tmp_path / "nope.json"), "--trials", "10"])
        assert code == 2
        assert "config error" in capsys.readouterr().err

    def test_malformed_config(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{broken")
        assert run_cli(["roc", str(path), "--trials", "10"]) == 2

    def test_invalid_field_value(self, tmp_path):
        data = awgn_scenario().to_dict()
        data["p"] = 2.0
        path = tmp_path / "bad_p.json"
        path.write_text(json.dumps(data))
        assert run_cli(["roc", str(path), "--trials", "10"]) == 2

    def test_bad_n_list(self, tmp_path):
        cfgp = write_config(tmp_path, awgn_scenario(n=64))
        assert run_cli(["covertness", cfgp, "--n-list", "64,x", "--trials", "10"]) == 2

    def test_boundary_needs_multi_block(self, tmp_path):
        cfgp = write_config(tmp_path, awgn_scenario(n=64))
        assert run_cli(["boundary", cfgp, "--draws", "10", "--out", str(tmp_path)]) == 2

    def test_bad_workers(self, tmp_path):
        cfgp = write_config(tmp_path, awgn_scenario(n=64))
        assert run_cli(["covertness", cfgp, "--workers", "0", "--trials", "10"]) == 2


class TestCovertness:
    def test_writes_curve_and_manifest(self, tmp_path):
        cfgp = write_config(tmp_path, awgn_scenario(n=64))
        out = tmp_path / "run"
        code = run_cli([
            "covertness", cfgp, "--eps", "0.1", "--n-list", "64,128",
            "--trials", "200", "--seed", "3", "--out", str(out),
        ])
        assert code == 0
        lines = (out / "curve.csv").read_text().splitlines()
        assert lines[0] == "n,threshold,min_sum,ci_lo,ci_hi"
        assert len(lines) == 3
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "covertness"
        assert manifest["seed"] == 3
        assert manifest["scenario"]["n"] == 64
        assert "curve.csv" in manifest["outputs"]

    def test_seed_repeatability_across_workers(self, tmp_path):
        cfgp = write_config(tmp_path, awgn_scenario(n=64))
        outs = []
        for tag, workers in (("a", "1"), ("b", "2")):
            out = tmp_path / tag
            assert run_cli([
                "covertness", cfgp, "--n-list", "64", "--trials", "120",
                "--seed", "5", "--workers", workers, "--out", str(out),
            ]) == 0
            outs.append((out / "curve.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_seed_changes_output(self, tmp_path):
        cfgp = write_config(tmp_path, awgn_scenario(n=64))
        bodies = []
        for seed in ("5", "6"):
            out = tmp_path / f"s{seed}"
            run_cli(["covertness", cfgp, "--n-list", "64", "--trials", "120",
                     "--seed", seed, "--out", str(out)])
            bodies.append((out / "curve.csv").read_bytes())
        assert bodies[0] != bodies[1]

    def test_default_scenario_stays_covert(self, tmp_path):
        # the bundled AWGN setting run through the CLI keeps the best
        # detector's error sum near the blind floor
        cfgp = write_config(tmp_path, awgn_scenario(n=1000, P_f=0.025))
        out = tmp_path / "floor"
        code = run_cli(["covertness", cfgp, "--eps", "0.1", "--n-list", "1000",
                        "--trials", "2000", "--seed", "21", "--out", str(out)])
        assert code == 0
        row = (out / "curve.csv").read_text().splitlines()[1].split(",")
        assert float(row[2]) >= 0.87

    def test_env_seed_fallback(self, tmp_path, monkeypatch):
        cfgp = write_config(tmp_path, awgn_scenario(n=64))
        out_env = tmp_path / "env"
        monkeypatch.setenv("COVERTSIM_SEED", "9")
        run_cli(["covertness", cfgp, "--n-list", "64", "--trials", "100",
                 "--out", str(out_env)])
        monkeypatch.delenv("COVERTSIM_SEED")
        out_flag = tmp_path / "flag"
        run_cli(["covertness", cfgp, "--n-list", "64", "--trials", "100",
                 "--seed", "9", "--out", str(out_flag)])
        assert (out_env / "curve.csv").read_bytes() == (out_flag / "curve.csv").read_bytes()


class TestRoc:
    def test_multi_block_statistic_sweep(self, tmp_path):
        cfgp = write_config(tmp_path, fading_scenario(n=64, M=4, P_f=0.0125))
        out = tmp_path / "roc4"
        code = run_cli(["roc", cfgp, "--trials", "100", "--grid-points", "11",
                        "--seed", "3", "--out", str(out)])
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["statistic"] == "loglr"

    def test_indivisible_slot_length_rejected(self, tmp_path):
        cfgp = write_config(tmp_path, fading_scenario(n=64, M=4, P_f=0.0125))
        assert run_cli(["covertness", cfgp, "--n-list", "65",
                        "--trials", "20", "--out", str(tmp_path / "x")]) == 2

    def test_writes_monotone_roc(self, tmp_path):
        cfgp = write_config(tmp_path, awgn_scenario(n=64))
        out = tmp_path / "roc"
        code = run_cli(["roc", cfgp, "--trials", "150", "--grid-points", "21",
                        "--seed", "2", "--out", str(out)])
        assert code == 0
        lines = (out / "roc.csv").read_text().splitlines()
        assert lines[0].startswith("threshold,p_fa,p_md")
        rows = [list(map(float, ln.split(","))) for ln in lines[1:]]
        fa = [r[1] for r in rows]
        md = [r[2] for r in rows]
        assert all(a >= b for a, b in zip(fa, fa[1:]))
        assert all(a <= b for a, b in zip(md, md[1:]))


class TestCheck:
    def test_single_block_fading_report(self, tmp_path):
        cfgp = write_config(tmp_path, fading_scenario(n=200, M=1, P_f=0.0125))
        out = tmp_path / "check"
        code = run_cli(["check", cfgp, "--grid-points", "60", "--out", str(out)])
        assert code == 0
        report = json.loads((out / "check.json").read_text())
        assert all(entry["passed"] for entry in report["checks"].values())
        assert "lrt_monotone_axis0" in report["checks"]

    def test_multi_block_reports_every_axis(self, tmp_path):
        cfgp = write_config(tmp_path, fading_scenario(n=64, M=2, P_f=0.0125))
        out = tmp_path / "check2"
        assert run_cli(["check", cfgp, "--grid-points", "40", "--out", str(out)]) == 0
        report = json.loads((out / "check.json").read_text())
        assert "lrt_monotone_axis1" in report["checks"]

    def test_needs_positive_power(self, tmp_path):
        cfgp = write_config(tmp_path, fading_scenario(n=64, M=1, P_f=0.0))
        assert run_cli(["check", cfgp, "--out", str(tmp_path / "x")]) == 2


class TestBoundary:
    def test_writes_mass_and_draws(self, tmp_path):
        cfgp = write_config(tmp_path, fading_scenario(n=64, M=2, P_f=0.0125))
        out = tmp_path / "bnd"
        code = run_cli(["boundary", cfgp, "--draws", "300", "--seed", "4",
                        "--out", str(out)])
        assert code == 0
        lines = (out / "boundary.csv").read_text().splitlines()
        assert lines[0] == "draw,x1,x2,in_region"
        assert len(lines) == 301
        report = json.loads((out / "boundary.json").read_text())
        assert report["delta"] == pytest.approx(0.025)
        hw = (report["ci"][1] - report["ci"][0]) / 2.0
        assert report["mass"] < 0.1 + hw
        assert report["spot_mismatches"] == 0

    def test_worker_flag_does_not_change_output(self, tmp_path):
        cfgp = write_config(tmp_path, fading_scenario(n=64, M=2, P_f=0.0125))
        bodies = []
        for tag, workers in (("w1", "1"), ("w2", "2")):
            out = tmp_path / tag
            assert run_cli(["boundary", cfgp, "--draws", "200", "--seed", "4",
                            "--workers", workers, "--out", str(out)]) == 0
            bodies.append((out / "boundary.csv").read_bytes())
        assert bodies[0] == bodies[1]


class TestCapacity:
    def test_silent_power_rows_zero(self, tmp_path):
        cfgp = write_config(tmp_path, fading_scenario(
            n=400, M=1, P_f=0.0125, ab="fading", jb="fading"))
        out = tmp_path / "cap"
        code = run_cli(["capacity", cfgp, "--pf-list", "0.0,0.0125",
                        "--samples", "2000", "--seed", "8", "--out", str(out)])
        assert code == 0
        lines = (out / "capacity.csv").read_text().splitlines()
        assert lines[0] == "P_f,P_j,outage_prob,R,bits"
        rows = [ln.split(",") for ln in lines[1:]]
        assert float(rows[0][3]) == 0.0 and rows[0][4] == "0"
        assert float(rows[1][3]) > 0.0

    def test_repeatable(self, tmp_path):
        cfgp = write_config(tmp_path, fading_scenario(
            n=400, M=1, P_f=0.0125, ab="fading", jb="fading"))
        bodies = []
        for tag in ("r1", "r2"):
            out = tmp_path / tag
            run_cli(["capacity", cfgp, "--samples", "2000", "--seed", "8",
                     "--out", str(out)])
            bodies.append((out / "capacity.csv").read_bytes())
        assert bodies[0] == bodies[1]


class TestConsoleEntry:
    def test_module_invocation(self, tmp_path):
        cfgp = write_config(tmp_path, awgn_scenario(n=64))
        out = tmp_path / "sub"
        proc = subprocess.run(
            [sys.executable, "-m", "covertsim.cli", "covertness", cfgp,
             "--n-list", "64", "--trials", "60", "--seed", "1", "--out", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert (out / "curve.csv").exists()

    def test_usage_error_exit_code(self):
        proc = subprocess.run(
            [sys.executable, "-m", "covertsim.cli", "unknown-command"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 2
