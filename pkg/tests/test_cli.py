"""Command-line harness: configs, outputs, determinism, exit codes."""

import math

import numpy as np

from diskflow import cli
from diskflow.analysis import expected_exponent
from diskflow.presets import preset_names


def test_list_presets(capsys):
    assert cli.main(["list-presets"]) == 0
    out = capsys.readouterr().out
    for name in preset_names():
        assert name in out


def test_print_expected(capsys):
    assert cli.main(["print-expected", "semigroup", "inf", "1.0001"]) == 0
    out = capsys.readouterr().out.strip()
    assert abs(float(out.split()[0]) - float(expected_exponent("semigroup", math.inf, 1.0001))) < 1e-12
    assert cli.main(["print-expected", "ns_diff", "2", "1.3333333333333333"]) == 0
    out = capsys.readouterr().out
    assert "log-corrected" in out
    # out-of-range lookups are reported as errors
    assert cli.main(["print-expected", "semigroup", "1.5", "2"]) == 1


def test_malformed_config(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[experiment]\nkind = evolve-warp\n")
    assert cli.main(["run", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "evolve-warp" in err and err.count("\n") == 1
    missing = tmp_path / "missing.cfg"
    assert cli.main(["run", str(missing)]) == 1


def test_unknown_preset(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        "[experiment]\nkind = mode-heat\n[initial_data]\npreset = no-such-thing\n"
        f"[output]\ndir = {tmp_path/'out'}\n"
    )
    assert cli.main(["run", str(cfg)]) == 1


MODE_HEAT_CFG = """
[experiment]
kind = mode-heat

[initial_data]
preset = unit-kick-k0

[grid]
n_points = 512
r_max = 90

[time]
dt = 0.05
t_end = 20

[norms]
p = 1, 2, inf

[output]
dir = {out}
"""


def test_mode_heat_run_and_determinism(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    cfg1 = tmp_path / "r1.cfg"
    cfg2 = tmp_path / "r2.cfg"
    cfg1.write_text(MODE_HEAT_CFG.format(out=out1))
    cfg2.write_text(MODE_HEAT_CFG.format(out=out2))
    assert cli.main(["run", str(cfg1)]) == 0
    assert cli.main(["run", str(cfg2)]) == 0
    ts1 = (out1 / "time_series.txt").read_text()
    ts2 = (out2 / "time_series.txt").read_text()
    # byte-identical output modulo the configured output path
    assert ts1.replace(str(out1), "X") == ts2.replace(str(out2), "X")
    lines = ts1.splitlines()
    header = [ln for ln in lines if not ln.startswith("#")][0]
    assert header == "t, ell, norm_p1, norm_p2, norm_pinf, mass"
    assert any(ln.startswith("# [grid]") or ln == "# [grid]" for ln in lines)
    summary = (out1 / "summary.txt").read_text()
    assert "mass drift" in summary
    assert "check mass-conservation: pass" in summary
    assert "check self-similar-boundary" in summary


def test_fit_decay_experiment(tmp_path):
    out = tmp_path / "out"
    cfg = tmp_path / "run.cfg"
    cfg.write_text(MODE_HEAT_CFG.format(out=out))
    assert cli.main(["run", str(cfg)]) == 0
    # synthetic series file for the fit harness
    series = tmp_path / "series.txt"
    t = np.geomspace(1.0, 100.0, 30)
    with open(series, "w") as fh:
        fh.write("t, norm_L2\n")
        for ti in t:
            fh.write(f"{ti:.17e}, {ti**-0.5:.17e}\n")
    fit_cfg = tmp_path / "fit.cfg"
    fit_cfg.write_text(
        "[experiment]\nkind = fit-decay\nname = synthetic\n"
        f"[fit]\nfile = {series}\ncolumn = norm_L2\nt_min = 1\nt_max = 100\n"
        "expected = -0.5\ntolerance = 0.01\n"
        f"[output]\ndir = {out}\n"
    )
    assert cli.main(["run", str(fit_cfg)]) == 0
    report = (out / "report.txt").read_text()
    body = [ln for ln in report.splitlines() if not ln.startswith("#")]
    assert body[0] == "experiment, p, q, expected, fitted, residual, pass"
    assert "True" in body[1]
    # a failing expectation exits with status 2
    fit_cfg.write_text(
        "[experiment]\nkind = fit-decay\n"
        f"[fit]\nfile = {series}\ncolumn = norm_L2\nt_min = 1\nt_max = 100\n"
        "expected = -1.5\ntolerance = 0.01\n"
        f"[output]\ndir = {out}\n"
    )
    assert cli.main(["run", str(fit_cfg)]) == 2


def test_truncation_policy_warning(tmp_path, capsys):
    out = tmp_path / "o"
    cfg = tmp_path / "warn.cfg"
    cfg.write_text(
        "[experiment]\nkind = mode-heat\n[initial_data]\npreset = unit-kick-k0\n"
        "[grid]\nn_points = 256\nr_max = 12\n[time]\ndt = 0.1\nt_end = 10\n"
        "[checks]\nenabled = false\n"
        f"[output]\ndir = {out}\n"
    )
    assert cli.main(["run", str(cfg)]) == 0
    assert "truncation policy" in capsys.readouterr().err


SMALL_STOKES_CFG = """
[experiment]
kind = {kind}

[initial_data]
preset = {preset}

[grid]
n_points = 512
r_max = 40

[time]
dt = 0.05
t_end = {t_end}

[output]
dir = {out}
"""


def test_stokes_experiment(tmp_path):
    cfg = tmp_path / "s.cfg"
    out = tmp_path / "out"
    cfg.write_text(
        SMALL_STOKES_CFG.format(kind="evolve-stokes", preset="translating-disk",
                                t_end=20, out=out)
    )
    # the translation check is specified and measured at t = 100; at t = 20
    # the run completes but the ratio is still relaxing, so disable checks
    cfg.write_text(cfg.read_text() + "\n[checks]\nenabled = false\n")
    assert cli.main(["run", str(cfg)]) == 0
    series = (out / "stokes_series.txt").read_text().splitlines()
    header = [ln for ln in series if not ln.startswith("#")][0]
    assert header.startswith("t, ell_x, ell_y, omega, norm_L")
    assert "mass_phi" in header and "added_mass_resid" in header
    assert "momentum" in (out / "summary.txt").read_text()


def test_compare_asymptotic_experiment(tmp_path):
    cfg = tmp_path / "c.cfg"
    out = tmp_path / "out"
    body = SMALL_STOKES_CFG.format(kind="compare-asymptotic", preset="translating-disk",
                                   t_end=100, out=out)
    cfg.write_text(body)
    assert cli.main(["run", str(cfg)]) == 0
    summary = (out / "summary.txt").read_text()
    assert "translation_ratio" in summary
    assert "check disk-translation: pass" in summary
    assert "check profile-convergence: pass" in summary


def test_kato_experiment(tmp_path):
    cfg = tmp_path / "k.cfg"
    out = tmp_path / "out"
    cfg.write_text(
        "[experiment]\nkind = kato\n[initial_data]\npreset = kato-small\n"
        "[grid]\nn_points = 512\n[time]\ndt = 0.03125\nt_end = 0.5\n"
        f"[output]\ndir = {out}\n"
    )
    assert cli.main(["run", str(cfg)]) == 0
    diag = (out / "kato_diagnostics.txt").read_text().splitlines()
    header = [ln for ln in diag if not ln.startswith("#")][0]
    assert header == "n, G_n, ratio"
    summary = (out / "summary.txt").read_text()
    assert "check kato-contraction: pass" in summary
    assert "check kato-imex-cross: pass" in summary


def test_ns_experiment(tmp_path):
    cfg = tmp_path / "n.cfg"
    out = tmp_path / "out"
    cfg.write_text(
        "[experiment]\nkind = evolve-ns\n[initial_data]\npreset = kato-small\n"
        "[grid]\nn_points = 512\n[time]\ndt = 0.03125\nt_end = 1\n"
        f"[norms]\np = 2\n[output]\ndir = {out}\n"
    )
    assert cli.main(["run", str(cfg)]) == 0
    series = (out / "ns_series.txt").read_text().splitlines()
    header = [ln for ln in series if not ln.startswith("#")][0]
    assert header == "t, ell_x, ell_y, omega, norm_L2, diff_norm_L2, diff_norm_L4"
