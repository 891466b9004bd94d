import json
from pathlib import Path

import yaml

from heatrods.cli import main

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def write_config(path, mapping):
    with open(path, "w") as handle:
        yaml.safe_dump(mapping, handle)


def base_mapping():
    return {
        "rods": {
            "left": {"rho": "1", "sigma": "1", "q": "0"},
            "right": {"rho": "1", "sigma": "1", "q": "0"},
        },
        "mass": 1.0,
        "bc": "dirichlet",
        "horizon": 1.0,
        "n_modes": 8,
    }


class TestSpectrumCommand:
    def test_constant_config_certifies(self, tmp_path):
        out = tmp_path / "run"
        code = main([
            "spectrum", "--config", str(CONFIG_DIR / "constant_dirichlet.yaml"),
            "--out", str(out), "--n-max", "10",
        ])
        assert code == 0
        lines = (out / "spectrum.csv").read_text().strip().splitlines()
        assert len(lines) == 11  # header + 10 rows
        report = json.loads((out / "spectrum_report.json").read_text())
        assert report["interpolation_all_ok"] is True
        assert report["min_gap"] > 0
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert manifest["status"] == "ok"
        assert manifest["exit_code"] == 0

    def test_negative_mass_validation_error(self, tmp_path):
        mapping = base_mapping()
        mapping["mass"] = -1.0
        cfg = tmp_path / "bad.yaml"
        write_config(cfg, mapping)
        out = tmp_path / "run"
        code = main(["spectrum", "--config", str(cfg), "--out", str(out)])
        assert code == 2
        record = json.loads((out / "error.json").read_text())
        assert record["exit_code"] == 2
        assert "mass" in record["message"]

    def test_unknown_key_rejected(self, tmp_path):
        mapping = base_mapping()
        mapping["rods"]["left"]["conductivity"] = "1"
        cfg = tmp_path / "bad.yaml"
        write_config(cfg, mapping)
        out = tmp_path / "run"
        code = main(["spectrum", "--config", str(cfg), "--out", str(out)])
        assert code == 2

    def test_variable_config_asymptotes(self, tmp_path):
        out = tmp_path / "run"
        code = main([
            "spectrum", "--config", str(CONFIG_DIR / "variable.yaml"),
            "--out", str(out), "--n-max", "12",
        ])
        assert code == 0
        report = json.loads((out / "spectrum_report.json").read_text())
        assert 0.5 < report["asymptote_ratio_last"] < 1.5

    def test_determinism_byte_identical(self, tmp_path):
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        for out in (out1, out2):
            code = main([
                "spectrum", "--config", str(CONFIG_DIR / "constant_dirichlet.yaml"),
                "--out", str(out), "--n-max", "6", "--seed", "7",
            ])
            assert code == 0
        assert (out1 / "spectrum.csv").read_bytes() == (out2 / "spectrum.csv").read_bytes()

    def test_variant_override(self, tmp_path):
        out = tmp_path / "run"
        code = main([
            "spectrum", "--config", str(CONFIG_DIR / "constant_dirichlet.yaml"),
            "--out", str(out), "--n-max", "6", "--variant", "neumann",
        ])
        assert code == 0
        report = json.loads((out / "spectrum_report.json").read_text())
        assert report["variant"] == "neumann"

    def test_dump_eigenfunctions(self, tmp_path):
        out = tmp_path / "run"
        code = main([
            "spectrum", "--config", str(CONFIG_DIR / "constant_dirichlet.yaml"),
            "--out", str(out), "--n-max", "3", "--dump-eigenfunctions",
        ])
        assert code == 0
        for n in (1, 2, 3):
            lines = (out / f"eigenfunction_{n}.csv").read_text().splitlines()
            assert lines[0] == "x,value,piece"


class TestGapReport:
    def test_gap_report_ok(self, tmp_path):
        out = tmp_path / "run"
        code = main([
            "gap-report", "--config", str(CONFIG_DIR / "constant_dirichlet.yaml"),
            "--out", str(out), "--n-max", "8",
        ])
        assert code == 0
        report = json.loads((out / "gap_report.json").read_text())
        assert report["measured_delta"] > 0


class TestControlCommand:
    def test_mode_one_residuals(self, tmp_path):
        out = tmp_path / "run"
        code = main([
            "control", "--config", str(CONFIG_DIR / "constant_dirichlet.yaml"),
            "--out", str(out), "--init", "mode:1",
        ])
        assert code == 0
        moments = json.loads((out / "moments.json").read_text())
        assert max(abs(r) for r in moments["residuals"]) <= 1e-8
        lines = (out / "control.csv").read_text().splitlines()
        assert lines[0] == "t,w,h"

    def test_zero_init_zero_control(self, tmp_path):
        out = tmp_path / "run"
        code = main([
            "control", "--config", str(CONFIG_DIR / "constant_dirichlet.yaml"),
            "--out", str(out), "--init", "zero", "--n-modes", "4",
        ])
        assert code == 0
        rows = (out / "control.csv").read_text().strip().splitlines()[1:]
        assert all(row.split(",")[2] == "0.0" for row in rows)

    def test_forty_modes_double_precision_conditioning(self, tmp_path):
        out = tmp_path / "run"
        code = main([
            "control", "--config", str(CONFIG_DIR / "constant_dirichlet.yaml"),
            "--out", str(out), "--init", "mode:1", "--n-modes", "40",
            "--precision", "double",
        ])
        assert code == 3
        record = json.loads((out / "error.json").read_text())
        assert record["kind"] == "conditioning"

    def test_short_horizon_conditioning(self, tmp_path):
        mapping = base_mapping()
        mapping["horizon"] = 0.01
        mapping["n_modes"] = 12
        cfg = tmp_path / "short.yaml"
        write_config(cfg, mapping)
        out = tmp_path / "run"
        code = main([
            "control", "--config", str(cfg), "--out", str(out),
            "--init", "mode:1", "--precision", "double",
        ])
        assert code == 3

    def test_expr_init(self, tmp_path):
        out = tmp_path / "run"
        code = main([
            "control", "--config", str(CONFIG_DIR / "constant_dirichlet.yaml"),
            "--out", str(out), "--init", "expr:sin(pi*(x+1))|sin(pi*(1-x))|0",
            "--n-modes", "6",
        ])
        assert code == 0


class TestSimulateCommand:
    def test_zero_control_trajectories(self, tmp_path):
        out = tmp_path / "run"
        code = main([
            "simulate", "--config", str(CONFIG_DIR / "constant_dirichlet.yaml"),
            "--out", str(out), "--init", "mode:1", "--control", "zero",
            "--n-modes", "4", "--nx", "64", "--nt", "512",
        ])
        assert code == 0
        for name in ("trajectory.csv", "trajectory_fd.csv", "terminal.csv",
                     "terminal_fd.csv"):
            assert (out / name).exists()
        header = (out / "trajectory.csv").read_text().splitlines()[0]
        assert header.startswith("t,energy_H,z,a1")


class TestVerifyCommand:
    def test_verify_dirichlet_passes(self, tmp_path):
        out = tmp_path / "run"
        code = main([
            "verify", "--config", str(CONFIG_DIR / "constant_dirichlet.yaml"),
            "--out", str(out), "--init", "mode:1", "--n-modes", "4",
            "--nx", "96", "--nt", "1024",
        ])
        assert code == 0
        report = json.loads((out / "verification.json").read_text())
        assert report["passed"] is True
        assert report["modal_terminal_energy"] <= 1e-10 * report["initial_energy"]

    def test_verify_neumann_passes(self, tmp_path):
        out = tmp_path / "run"
        code = main([
            "verify", "--config", str(CONFIG_DIR / "constant_neumann.yaml"),
            "--out", str(out), "--init", "mode:1", "--n-modes", "4",
            "--nx", "96", "--nt", "1024",
        ])
        assert code == 0
        report = json.loads((out / "verification.json").read_text())
        assert report["passed"] is True
        assert report["variant"] == "neumann"


class TestExitCodeContract:
    def test_certification_failure_exits_4(self, tmp_path, monkeypatch):
        import heatrods.cli as cli_mod

        real = cli_mod.spectral_report

        def doctored(*args, **kwargs):
            report = real(*args, **kwargs)
            bad = report.interpolation_ok.copy()
            bad[0] = False
            object.__setattr__(report, "interpolation_ok", bad)
            return report

        monkeypatch.setattr(cli_mod, "spectral_report", doctored)
        out = tmp_path / "run"
        code = main([
            "spectrum", "--config", str(CONFIG_DIR / "constant_dirichlet.yaml"),
            "--out", str(out), "--n-max", "4",
        ])
        assert code == 4
        record = json.loads((out / "error.json").read_text())
        assert record["kind"] == "certification"
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert manifest["status"] == "certification-failed"

    def test_control_then_simulate_from_file(self, tmp_path):
        out1 = tmp_path / "ctl"
        code = main([
            "control", "--config", str(CONFIG_DIR / "constant_dirichlet.yaml"),
            "--out", str(out1), "--init", "mode:1", "--n-modes", "4",
        ])
        assert code == 0
        out2 = tmp_path / "sim"
        code = main([
            "simulate", "--config", str(CONFIG_DIR / "constant_dirichlet.yaml"),
            "--out", str(out2), "--init", "mode:1",
            "--control", f"file:{out1 / 'control.csv'}",
            "--n-modes", "4", "--nx", "64", "--nt", "512",
        ])
        assert code == 0
        assert (out2 / "trajectory.csv").exists()
