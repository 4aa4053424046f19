import math
import os

import numpy as np
import pytest

from thinfilm.cli import (
    build_run_config,
    cmd_certify,
    cmd_convergence,
    cmd_oracle,
    cmd_run,
    even_extend,
    load_config,
    main,
    parse_config,
    render_config,
)
from thinfilm.errors import ConfigError, HalfWidthUnsupported
from thinfilm.integrator import integrate
from thinfilm.spectral import from_samples, grid_points

BASE = """
params.G = 1.0
params.S = 0.0
params.A = 0.0
params.D = 1.0
params.h_mean = 1.0
params.gamma_mean = 0.5
initial.family = remark
initial.mu = 0.001
initial.wavenumber = 8
stepper.M = 16
stepper.dt = 1e-3
t_end = 0.5
outputs.record_every = 10
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestParsing:
    def test_basic(self):
        cfg = build_run_config(parse_config(BASE))
        assert cfg.params.G == 1.0
        assert cfg.initial.kind == "remark"
        assert cfg.stepper.M == 16

    def test_comments_and_blanks(self):
        entries = parse_config("# c\n\nparams.G = 2\n")
        assert entries["params.G"] == ("2", 3)

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("params.G 2")

    def test_unknown_key_line_number(self):
        with pytest.raises(ConfigError, match="line 2"):
            build_run_config(parse_config("params.G = 1\nwat = 3\n"))

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config("t_end = 1\nt_end = 2\n")

    def test_two_initial_sources_rejected(self):
        text = BASE + "initial.f_modes = 1:0.1:0\n"
        with pytest.raises(ConfigError, match="exactly one"):
            build_run_config(parse_config(text))

    def test_bad_number(self):
        with pytest.raises(ConfigError, match="must be a number"):
            build_run_config(parse_config(BASE.replace(
                "params.G = 1.0", "params.G = one")))

    def test_mode_initial_data(self):
        text = BASE.replace("initial.family = remark", "") \
                   .replace("initial.mu = 0.001", "") \
                   .replace("initial.wavenumber = 8",
                            "initial.f_modes = 2:0.0:-0.05\n"
                            "initial.theta_modes = 1:0.1:0.0")
        cfg = build_run_config(parse_config(text))
        s0 = cfg.initial_state()
        assert s0.f.coeff(2) == pytest.approx(-0.05j)
        assert s0.theta.coeff(1) == pytest.approx(0.1)

    def test_sample_initial_data(self):
        x = grid_points(16)
        samples = ", ".join(repr(float(v)) for v in 0.1 * np.cos(3 * x))
        text = BASE.replace("initial.family = remark", "") \
                   .replace("initial.mu = 0.001", "") \
                   .replace("initial.wavenumber = 8",
                            f"initial.f_samples = {samples}")
        cfg = build_run_config(parse_config(text))
        s0 = cfg.initial_state()
        assert s0.f.coeff(3) == pytest.approx(0.05, abs=1e-12)

    def test_round_trip_bitwise(self, tmp_path):
        cfg = build_run_config(parse_config(BASE))
        cfg2 = build_run_config(parse_config(render_config(cfg)))
        s0, s0b = cfg.initial_state(), cfg2.initial_state()
        a = integrate(s0, cfg.params, cfg.stepper, cfg.t_end, 10)
        b = integrate(s0b, cfg2.params, cfg2.stepper, cfg2.t_end, 10)
        assert np.array_equal(a.final_state.f.coeffs, b.final_state.f.coeffs)
        assert np.array_equal(a.diagnostics.E00, b.diagnostics.E00)


class TestCertifyCommand:
    def test_pass_and_report(self, tmp_path, capsys):
        rc = cmd_certify(load_config(write(tmp_path, BASE)))
        out = capsys.readouterr().out
        assert rc == 0
        report = dict(line.split(": ", 1) for line in out.strip().splitlines())
        assert float(report["delta"]) == pytest.approx(1 / 12 - 89 / 3000,
                                                       abs=1e-12)
        assert report["delta_exact"] == "161/3000"
        assert report["frak_c1_exact"] == "1/12"
        assert report["lambda1_0_exact"] == "89/6"

    def test_failing_certificate_exit_2(self, tmp_path, capsys):
        rc = cmd_certify(load_config(write(
            tmp_path, BASE.replace("initial.mu = 0.001", "initial.mu = 0.01"))))
        out = capsys.readouterr().out
        assert rc == 2
        assert "failing: gamma1_positive" in out

    def test_malformed_config_exit_1(self, tmp_path):
        assert main(["certify", write(tmp_path, "nope = 1\n")]) == 1

    def test_report_written_atomically(self, tmp_path):
        cfg_text = BASE + f"outputs.report_path = {tmp_path}/r.txt\n"
        assert main(["certify", write(tmp_path, cfg_text)]) == 0
        text = (tmp_path / "r.txt").read_text()
        assert "certified: true" in text
        assert not [f for f in os.listdir(tmp_path) if f.startswith(".tmp_")]


class TestRunCommand:
    def test_run_outputs(self, tmp_path):
        cfg_text = BASE + (f"outputs.diagnostics_path = {tmp_path}/d.csv\n"
                           f"outputs.report_path = {tmp_path}/r.txt\n"
                           f"outputs.snapshots_path = {tmp_path}/snaps\n"
                           "outputs.snapshot_stride = 20\n")
        assert main(["run", write(tmp_path, cfg_text)]) == 0
        lines = (tmp_path / "d.csv").read_text().strip().splitlines()
        assert lines[0] == ("time,E00,E22,E42,mass_f,mass_theta,"
                            "min_h,linf_f,linf_theta")
        rows = np.array([[float(v) for v in ln.split(",")]
                         for ln in lines[1:]])
        e00 = rows[:, 1]
        assert np.all(np.diff(e00) < 0)
        report = (tmp_path / "r.txt").read_text()
        assert "termination: completed" in report
        assert "decay.bound_satisfied: true" in report
        snaps = sorted(os.listdir(tmp_path / "snaps"))
        assert snaps and snaps[0].startswith("snapshot_")
        head = (tmp_path / "snaps" / snaps[0]).read_text().splitlines()
        assert head[0] == "x,h,Gamma"

    def test_csv_lossless_roundtrip(self, tmp_path):
        cfg_text = BASE + f"outputs.diagnostics_path = {tmp_path}/d.csv\n"
        cfg = load_config(write(tmp_path, cfg_text))
        assert cmd_run(cfg) == 0
        traj = integrate(cfg.initial_state(), cfg.params, cfg.stepper,
                         cfg.t_end, cfg.outputs.record_every)
        lines = (tmp_path / "d.csv").read_text().strip().splitlines()[1:]
        parsed = np.array([[float(v) for v in ln.split(",")] for ln in lines])
        assert np.array_equal(parsed[:, 1], traj.diagnostics.E00)
        assert np.array_equal(parsed[:, 6], traj.diagnostics.min_h)

    def test_t_end_zero_single_row(self, tmp_path):
        cfg_text = BASE.replace("t_end = 0.5", "t_end = 0.0") \
            + f"outputs.diagnostics_path = {tmp_path}/d.csv\n"
        assert main(["run", write(tmp_path, cfg_text)]) == 0
        lines = (tmp_path / "d.csv").read_text().strip().splitlines()
        assert len(lines) == 2

    def test_theory_exit_exit_code_3(self, tmp_path, capsys):
        text = BASE.replace("initial.mu = 0.001", "initial.mu = 0.8") \
                   .replace("initial.wavenumber = 8", "initial.wavenumber = 1") \
            + "stepper.nonlinear_form = series\n"
        rc = main(["run", write(tmp_path, text)])
        out = capsys.readouterr().out
        assert rc == 3
        assert "termination: theory_exit" in out


class TestConvergenceCommand:
    def test_orders(self, tmp_path, capsys):
        text = """
params.G = 1.0
params.S = 0.0
params.A = 0.1
params.D = 1.0
params.h_mean = 1.0
params.gamma_mean = 0.5
initial.f_modes = 1:0.0:-0.054, 2:0.024:0.0
initial.theta_modes = 1:0.036:0.0, 3:0.0:0.012
stepper.M = 4
stepper.dt = 4e-3
t_end = 0.5
outputs.record_every = 125
"""
        rc = cmd_convergence(load_config(write(tmp_path, text)), levels=4)
        out = capsys.readouterr().out
        assert rc == 0
        lines = out.strip().splitlines()
        assert lines[0] == "level,M,dt,diff_A0,order"
        diffs = [float(ln.split(",")[3]) for ln in lines[1:]]
        assert diffs[0] > diffs[1] > diffs[2]
        orders = [float(ln.split(",")[4]) for ln in lines[2:]]
        assert all(o > 1.0 for o in orders)

    def test_too_few_levels(self, tmp_path):
        with pytest.raises(ConfigError):
            cmd_convergence(load_config(write(tmp_path, BASE)), levels=1)


class TestOracleCommand:
    def test_default_suite_passes(self, capsys):
        assert cmd_oracle(seed=0) == 0
        assert "all ok" in capsys.readouterr().out

    def test_zero_tolerance_fails(self, capsys):
        assert cmd_oracle(seed=0, tolerance_scale=0.0) == 2
        out = capsys.readouterr().out
        assert "FAIL" in out

    def test_vacuous_without_van_der_waals(self, capsys):
        # A = 0 keeps the series-vs-closed section trivial but green
        assert main(["oracle", "--seed", "3"]) == 0


class TestEvenExtend:
    def test_cosine_already_even(self):
        m = 8
        xs = np.arange(m + 1) * math.pi / m
        g = even_extend(np.cos(xs), 2 * m)
        assert np.allclose(g.values, np.cos(grid_points(2 * m)), atol=1e-15)
        f = from_samples(g, 1)
        assert f.coeff(1) == pytest.approx(0.5, abs=1e-15)

    def test_identity_gives_abs_profile(self):
        m = 8
        xs = np.arange(m + 1) * math.pi / m
        g = even_extend(xs, 2 * m)
        assert np.allclose(g.values, np.abs(grid_points(2 * m)), atol=1e-15)

    def test_general_half_width_unsupported(self):
        with pytest.raises(HalfWidthUnsupported):
            even_extend(np.zeros(9), 16, half_width=2.0)

    def test_sample_count_checked(self):
        with pytest.raises(ValueError):
            even_extend(np.zeros(6), 16)
