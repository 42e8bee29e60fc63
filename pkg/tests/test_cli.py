import json

import numpy as np
import pytest

from tde_plankton import checks, cli
from tde_plankton.checks import CheckHooks
from tde_plankton.config import build_config, dump_flat, parse_flat_text
from tde_plankton.exceptions import ConfigError
from tde_plankton.model import ModelParams


def run_cli(args):
    return cli.main(args)


class TestConfig:
    def test_defaults_build(self):
        cfg = build_config()
        assert cfg.params.mu == 5.9
        assert cfg.sim.dt_panels == 200

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            build_config(overrides={"model.mystery": "1"})

    def test_flat_text_roundtrip(self):
        text = "model.mu = 6.1\n# comment\nmodel.m = 2.0  # inline\n"
        values = parse_flat_text(text)
        assert values == {"model.mu": "6.1", "model.m": "2.0"}
        again = parse_flat_text(dump_flat(values))
        assert again["model.mu"] == "6.1"

    def test_flag_overrides_win(self):
        cfg = build_config(
            preset_values={"model.m": "1.0"},
            file_values={"model.m": "2.0"},
            overrides={"model.m": "3.0"},
        )
        assert cfg.params.m == 3.0

    def test_constant_response_drops_half_saturation(self):
        cfg = build_config(overrides={"model.response": "constant"})
        assert cfg.params.l is None

    def test_invalid_rates_rejected(self):
        with pytest.raises(ConfigError):
            build_config(overrides={"model.lambda": "7.0"})


class TestExitCodes:
    def test_invalid_param_exits_2(self, tmp_path, capsys):
        code = run_cli([
            "simulate", "--out", str(tmp_path), "--set", "model.lambda=7.0",
        ])
        assert code == 2
        assert "mu must exceed" in capsys.readouterr().err

    def test_unknown_key_exits_2(self, tmp_path):
        assert run_cli(["check", "--out", str(tmp_path), "--set", "nope=1"]) == 2

    def test_unknown_preset_exits_2(self, tmp_path):
        assert run_cli(["check", "--out", str(tmp_path), "--preset", "fig99"]) == 2

    def test_malformed_set_exits_2(self, tmp_path):
        assert run_cli(["check", "--out", str(tmp_path), "--set", "model.mu"]) == 2

    def test_infeasible_history_exits_2(self, tmp_path):
        code = run_cli([
            "simulate", "--out", str(tmp_path),
            "--set", "model.m=6", "--set", "model.delta0=0.17",
            "--set", "model.n_total=1.0",
            "--set", "run.history=constant",
            "--set", "run.p0=0.9", "--set", "run.z0=0.5",
        ])
        assert code == 2

    def test_check_suite_passes_defaults(self, tmp_path):
        assert run_cli(["check", "--out", str(tmp_path)]) == 0
        report = (tmp_path / "report.jsonl").read_text().splitlines()
        assert all(json.loads(line)["status"] in ("pass", "skipped") for line in report)


class TestEquilibriaCommand:
    def test_empty_grid_writes_header_only(self, tmp_path):
        code = run_cli([
            "equilibria", "--out", str(tmp_path),
            "--set", "equilibria.nt_points=0",
        ])
        assert code == 0
        lines = (tmp_path / "sweep_m0_d00.csv").read_text().splitlines()
        assert lines == ["n_total,kind,n_star,p_star,z_star,residual"]

    def test_deterministic_and_reproducible(self, tmp_path):
        a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        args = ["equilibria", "--preset", "fig1-left",
                "--set", "equilibria.nt_points=50"]
        assert run_cli(args + ["--out", str(a)]) == 0
        assert run_cli(args + ["--out", str(b)]) == 0
        for name in ("sweep_m5_d00.csv", "sweep_m19.7_d00.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()
        # a run re-ingesting its own resolved config reproduces itself
        assert run_cli([
            "equilibria", "--config", str(a / "resolved.cfg"), "--out", str(c)
        ]) == 0
        assert (a / "sweep_m5_d00.csv").read_bytes() == (c / "sweep_m5_d00.csv").read_bytes()

    def test_regime_breakpoints_in_output(self, tmp_path):
        assert run_cli([
            "equilibria", "--out", str(tmp_path),
            "--set", "model.delta0=0.17", "--set", "model.m=5",
            "--set", "equilibria.nt_points=120",
        ]) == 0
        rows = (tmp_path / "sweep_m5_d00.17.csv").read_text().splitlines()[1:]
        kinds = [r.split(",")[1] for r in rows]
        assert kinds[0] == "e0" and kinds[-1] == "E2" and "E1" in kinds
        order = {"e0": 0, "degenerate": 1, "E1": 1, "E2": 2}
        ranks = [order[k] for k in kinds]
        assert ranks == sorted(ranks)


class TestSimulateCommand:
    def test_extinction_preset_is_clean(self, tmp_path):
        assert run_cli(["simulate", "--preset", "extinction", "--out", str(tmp_path)]) == 0
        md = json.loads((tmp_path / "metadata.json").read_text())
        assert md["termination"] == "extinction"
        data = np.genfromtxt(tmp_path / "trajectory.csv", delimiter=",", names=True)
        nt = float(md["params"]["n_total"])
        assert abs(data["n"][-1] - nt) <= 1e-6 * nt
        assert data["p"][-1] <= 1e-6 * nt

    def test_trajectory_columns_and_rho(self, tmp_path):
        code = run_cli([
            "simulate", "--out", str(tmp_path),
            "--set", "model.delta0=0.17", "--set", "model.m=6",
            "--set", "model.n_total=3.0903",
            "--set", "run.horizon_hat=30", "--set", "run.rho_times=20.0",
            "--set", "run.rho_s_panels=64",
        ])
        assert code == 0
        header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
        assert header == "t_hat,t,n,p,z,tau_m,cons_residual"
        rho = np.genfromtxt(tmp_path / "rho_t20.csv", delimiter=",", names=True)
        assert rho["s"].size == 65
        md = json.loads((tmp_path / "metadata.json").read_text())
        assert md["rho_files"] == ["rho_t20.csv"]

    def test_metadata_reports_frequency(self, tmp_path):
        assert run_cli(["simulate", "--preset", "fig6-unstable", "--out", str(tmp_path),
                        "--set", "run.horizon_hat=700"]) == 0
        md = json.loads((tmp_path / "metadata.json").read_text())
        assert md["fitted_frequency"] == pytest.approx(0.84, rel=0.1)


class TestTraceCommand:
    def test_no_sign_change_reports_and_exits_zero(self, tmp_path):
        code = run_cli([
            "trace-boundary", "--out", str(tmp_path),
            "--set", "model.delta0=0.17", "--set", "model.m=6",
            "--set", "continuation.m_seeds=6.0",
            "--set", "continuation.nt_min=0.5", "--set", "continuation.nt_max=1.5",
        ])
        assert code == 0
        md = json.loads((tmp_path / "metadata.json").read_text())
        assert md["curves"] == []
        assert md["seed_failures"][0]["error"] == "NoSignChangeError"
        lines = (tmp_path / "curves.csv").read_text().splitlines()
        assert len(lines) == 1  # header only

    def test_curves_csv_schema_and_residuals(self, tmp_path):
        code = run_cli([
            "trace-boundary", "--out", str(tmp_path),
            "--set", "model.delta0=0.17", "--set", "model.m=6",
            "--set", "continuation.m_seeds=6.0",
            "--set", "continuation.nt_min=2.0", "--set", "continuation.nt_max=5.0",
            "--set", "continuation.max_steps=25",
        ])
        assert code == 0
        header = (tmp_path / "curves.csv").read_text().splitlines()[0]
        assert header == (
            "curve_id,point_index,m,n_total,omega,n_star,p_star,z_star,residual"
        )
        data = np.genfromtxt(tmp_path / "curves.csv", delimiter=",", names=True)
        assert np.all(data["residual"] <= 1e-9)
        freq = np.genfromtxt(tmp_path / "frequency_profile.csv", delimiter=",", names=True)
        assert freq["omega"].size == data["omega"].size
        md = json.loads((tmp_path / "metadata.json").read_text())
        assert md["curves"][0]["points"] == data["omega"].size

    def test_maturity_clipped_with_warning(self, tmp_path, capsys):
        code = run_cli([
            "trace-boundary", "--out", str(tmp_path),
            "--set", "model.delta0=0.17", "--set", "model.m=6",
            "--set", "continuation.m_seeds=6.0,25.0",
            "--set", "continuation.m_max=30",
            "--set", "continuation.nt_min=2.0", "--set", "continuation.nt_max=5.0",
            "--set", "continuation.max_steps=5",
        ])
        assert code == 0
        err = capsys.readouterr().err
        assert "clipped" in err and "dropped" in err


class TestCheckHooks:
    def test_corrupted_delayed_coupling_is_caught(self):
        params = ModelParams(delta0=0.17, l=0.159, m=5.0, n_total=1.0)
        clean = checks.run_check_suite(params)
        assert all(r.status != "fail" for r in clean)
        broken = checks.run_check_suite(params, CheckHooks(corrupt_a2_sign=True))
        by_name = {r.name: r for r in broken}
        assert by_name["e1_factorization"].status == "fail"

    def test_periodicity_scope(self):
        with_mortality = {
            r.name: r for r in checks.run_check_suite(
                ModelParams(delta0=0.17, l=0.159, m=5.0, n_total=1.0)
            )
        }
        assert with_mortality["periodicity_in_m"].status == "skipped"
        without = {
            r.name: r for r in checks.run_check_suite(
                ModelParams(delta0=0.0, l=0.159, m=5.0, n_total=1.0)
            )
        }
        assert without["periodicity_in_m"].status == "pass"
