"""Command-line harness: configured experiments with tabular output.

Subcommands:
    run <config>                 execute the experiment described by a flat
                                 INI-style config file
    list-presets                 show the shipped presets
    print-expected <kind> <p> <q>   closed-form decay exponent lookup

Every output file starts with a comment header embedding the fully resolved
configuration, and all numbers are written in full double precision, so
identical configs produce byte-identical outputs.  The exit status is 0 on
success, 2 when a requested acceptance-style check fails, and 1 on errors.
Set DISKFLOW_THREADS to parallelize the per-mode solves.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys

import numpy as np

from . import dynbc
from .analysis import expected_exponent, fit_decay
from .errors import ConfigError, DiskflowError
from .fields import decomp_axpy, load_field_file, weighted_field_norm
from .navier_stokes import evolve_ns, kato_solve
from .presets import build_setup, get_preset, preset_names
from .stokes import (
    StokesRecorder,
    asymptotic_momenta,
    evolve_stokes,
    init_stokes,
)

_EXPERIMENTS = (
    "mode-heat",
    "evolve-stokes",
    "evolve-ns",
    "kato",
    "fit-decay",
    "compare-asymptotic",
)


def _parse_p(tok):
    tok = tok.strip()
    return math.inf if tok in ("inf", "Inf", "INF") else float(tok)


def load_config(path):
    """Read the flat key = value config with bracketed sections."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    cfg = {section: dict(cp.items(section)) for section in cp.sections()}
    if "experiment" not in cfg or "kind" not in cfg["experiment"]:
        raise ConfigError("config needs an [experiment] section with a 'kind' key")
    kind = cfg["experiment"]["kind"]
    if kind not in _EXPERIMENTS:
        raise ConfigError(
            f"experiment.kind = {kind!r} not in {', '.join(_EXPERIMENTS)}"
        )
    return cfg


def _resolved_comment(cfg):
    lines = []
    for section in sorted(cfg):
        lines.append(f"[{section}]")
        for key in sorted(cfg[section]):
            lines.append(f"{key} = {cfg[section][key]}")
    return "\n".join(lines)


def _float_overrides(cfg, section, keys):
    out = {}
    for key in keys:
        if section in cfg and key in cfg[section]:
            out[key] = float(cfg[section][key])
    return out


def _setup_from_config(cfg):
    exp = cfg["experiment"]
    overrides = {
        "physical": _float_overrides(cfg, "physical", ("nu", "m", "inertia")),
        "grid": _float_overrides(cfg, "grid", ("n_points", "r_max", "stretch")),
        "time": _float_overrides(cfg, "time", ("dt", "t_end", "output_ratio")),
        "spectral": _float_overrides(
            cfg, "spectral", ("k_max", "n_theta", "kato_max_iters", "kato_tol")
        ),
        "data": _float_overrides(cfg, "initial_data", ("amplitude", "gamma", "ell0", "k")),
    }
    preset_name = cfg.get("initial_data", {}).get("preset") or exp.get("preset")
    if preset_name is None:
        raise ConfigError("config must name an initial_data preset")
    preset = get_preset(preset_name)
    setup = build_setup(preset, overrides)
    if "file" in cfg.get("initial_data", {}):
        decomp = load_field_file(cfg["initial_data"]["file"], setup["grid"])
        setup["decomp0"] = decomp
        setup["state"] = init_stokes(decomp, setup["params"])
    nu = setup["params"].nu
    t_end = float(setup["time"]["t_end"])
    if setup["grid"].r_max < 6.0 * math.sqrt(nu * t_end):
        print(
            f"warning: r_max = {setup['grid'].r_max} below the truncation policy "
            f"6*sqrt(nu*t_end) = {6.0 * math.sqrt(nu * t_end):.1f}",
            file=sys.stderr,
        )
    return setup


def _norm_list(cfg):
    raw = cfg.get("norms", {}).get("p", "2, 4, inf")
    return tuple(_parse_p(tok) for tok in raw.split(","))


def _out_dir(cfg):
    d = cfg.get("output", {}).get("dir", ".")
    os.makedirs(d, exist_ok=True)
    return d


def _write_summary(path, cfg, lines, checks):
    with open(path, "w") as fh:
        for line in _resolved_comment(cfg).splitlines():
            fh.write(f"# {line}\n")
        for line in lines:
            fh.write(line + "\n")
        for name, ok, detail in checks:
            fh.write(f"check {name}: {'pass' if ok else 'FAIL'} ({detail})\n")


def _observe_times(time_cfg):
    t_end = float(time_cfg["t_end"])
    ratio = float(time_cfg.get("output_ratio", 2.0 ** 0.25))
    t0 = min(1.0, t_end)
    times = dynbc.geometric_times(t0, t_end, ratio)
    return np.unique(np.concatenate([[0.0], times, [t_end]]))


def run_mode_heat(cfg, setup, out_dir, do_checks):
    params = setup["scalar_params"]
    state = setup["scalar_state"]
    p_list = _norm_list(cfg)
    rec = dynbc.TimeSeriesRecorder(params, p_list, with_mass=params.k == 0)
    times = _observe_times(setup["time"])
    final = dynbc.evolve(
        state, params, float(setup["time"]["t_end"]), float(setup["time"]["dt"]),
        observer=rec, observe_times=times,
    )
    rec.write(os.path.join(out_dir, "time_series.txt"), _resolved_comment(cfg))
    lines = [f"final t = {final.t:.17e}", f"final ell = {final.ell:.17e}"]
    checks = []
    if params.k == 0:
        m0, mT = rec.mass[0], rec.mass[-1]
        drift = abs(mT - m0) / max(abs(m0), 1e-300)
        lines.append(f"mass initial = {m0:.17e}")
        lines.append(f"mass final = {mT:.17e}")
        lines.append(f"mass drift = {drift:.3e}")
        ratio = 4.0 * math.pi * params.nu * final.t * final.ell / m0
        lines.append(f"self_similar_ratio 4*pi*nu*t*ell/M = {ratio:.10f}")
        if do_checks:
            checks.append(("mass-conservation", drift <= 1e-10, f"drift {drift:.3e}"))
            checks.append(
                ("self-similar-boundary", abs(ratio - 1.0) <= 0.1, f"|ratio-1| = {abs(ratio - 1):.3e}")
            )
    _write_summary(os.path.join(out_dir, "summary.txt"), cfg, lines, checks)
    return all(ok for _, ok, _ in checks)


def run_stokes(cfg, setup, out_dir, do_checks, compare_asymptotic=False):
    params = setup["params"]
    state = setup["state"]
    mom = asymptotic_momenta(state)
    p_list = _norm_list(cfg)
    M_vec = mom.M_vec if float(np.hypot(*mom.M_vec)) > 0 else None
    rec = StokesRecorder(params, p_list, M_vec=M_vec, profile_ps=(2.0, 4.0))
    times = _observe_times(setup["time"])
    final = evolve_stokes(
        state, float(setup["time"]["t_end"]), float(setup["time"]["dt"]),
        observer=rec, observe_times=times,
    )
    rec.write(os.path.join(out_dir, "stokes_series.txt"), _resolved_comment(cfg))
    lines = [f"final t = {final.t:.17e}",
             f"momentum = {mom.M_vec[0]:.17e} {mom.M_vec[1]:.17e}",
             f"mass_phi = {mom.M_phi:.17e}", f"mass_psi = {mom.M_psi:.17e}"]
    checks = []
    if M_vec is not None:
        ratio = 8.0 * math.pi * params.nu * final.t * final.rigid.ell[0] / mom.M_vec[0]
        lines.append(f"translation_ratio 8*pi*nu*t*ell_x/Mx = {ratio:.10f}")
        if do_checks:
            checks.append(
                ("disk-translation", abs(ratio - 1.0) <= 0.15, f"|ratio-1| = {abs(ratio - 1):.3e}")
            )
        if compare_asymptotic:
            e_arr = np.sqrt(np.asarray(rec.t)) * np.asarray(
                [pe[0] for pe in rec.profile_err]
            )
            t_arr = np.asarray(rec.t)
            i10 = int(np.argmin(np.abs(t_arr - 10.0)))
            i_end = len(t_arr) - 1
            lines.append(f"profile_e10 = {e_arr[i10]:.17e}")
            lines.append(f"profile_eT = {e_arr[i_end]:.17e}")
            if do_checks:
                checks.append(
                    (
                        "profile-convergence",
                        e_arr[i_end] <= 0.5 * e_arr[i10],
                        f"e(T)/e(10) = {e_arr[i_end] / e_arr[i10]:.3f}",
                    )
                )
    amr = np.nanmax(np.abs(np.asarray(rec.added_mass_resid)))
    lines.append(f"max_added_mass_residual = {amr:.3e}")
    _write_summary(os.path.join(out_dir, "summary.txt"), cfg, lines, checks)
    return all(ok for _, ok, _ in checks)


def run_ns(cfg, setup, out_dir, do_checks):
    from dataclasses import replace

    params = setup["params"]
    state = setup["state"]
    shadow = init_stokes(setup["decomp0"], params)
    ns_cfg = replace(setup["ns_config"], mode="imex")
    p_list = _norm_list(cfg)
    times = _observe_times(setup["time"])
    rows = []

    def obs(st, sh):
        d = decomp_axpy(1.0, st.decomp, -1.0, sh.decomp)
        rows.append(
            [st.t, st.rigid.ell[0], st.rigid.ell[1], st.rigid.omega]
            + [weighted_field_norm(st.grid, st.decomp, p, params) for p in p_list]
            + [
                weighted_field_norm(st.grid, d, 2.0, params),
                weighted_field_norm(st.grid, d, 4.0, params),
            ]
        )

    evolve_ns(
        state, ns_cfg, float(setup["time"]["t_end"]), float(setup["time"]["dt"]),
        observer=obs, observe_times=times, linear_shadow=shadow,
    )
    header = (
        ["t", "ell_x", "ell_y", "omega"]
        + [f"norm_L{dynbc._fmt_p(p)}" for p in p_list]
        + ["diff_norm_L2", "diff_norm_L4"]
    )
    path = os.path.join(out_dir, "ns_series.txt")
    with open(path, "w") as fh:
        for line in _resolved_comment(cfg).splitlines():
            fh.write(f"# {line}\n")
        fh.write(", ".join(header) + "\n")
        for row in rows:
            fh.write(", ".join(f"{v:.17e}" for v in row) + "\n")
    lines = [f"rows = {len(rows)}"]
    checks = []
    _write_summary(os.path.join(out_dir, "summary.txt"), cfg, lines, checks)
    return True


def run_kato(cfg, setup, out_dir, do_checks):
    params = setup["params"]
    ns_cfg = setup["ns_config"]
    t_end = float(setup["time"]["t_end"])
    dt = float(setup["time"]["dt"])
    states, diag = kato_solve(setup["state"], ns_cfg, t_end, dt)
    with open(os.path.join(out_dir, "kato_diagnostics.txt"), "w") as fh:
        for line in _resolved_comment(cfg).splitlines():
            fh.write(f"# {line}\n")
        fh.write("n, G_n, ratio\n")
        for n, gn in enumerate(diag.G_n):
            ratio = diag.contraction_ratios[n - 1] if 1 <= n <= len(diag.contraction_ratios) else math.nan
            fh.write(f"{n}, {gn:.17e}, {ratio:.17e}\n")
    # cross-validate against the IMEX stepper
    from dataclasses import replace

    imex_cfg = replace(ns_cfg, mode="imex")
    final, _ = evolve_ns(init_stokes(setup["decomp0"], params), imex_cfg, t_end, dt)
    d = decomp_axpy(1.0, final.decomp, -1.0, states[-1].decomp)
    disc = weighted_field_norm(final.grid, d, 2.0, params)
    lines = [
        f"iterations = {len(diag.G_n) - 1}",
        f"converged = {diag.converged}",
        f"mu0_estimate = {diag.mu0_estimate:.17e}",
        f"imex_discrepancy_L2 = {disc:.17e}",
    ]
    checks = []
    if do_checks:
        ok_contract = bool(diag.contraction_ratios) and all(
            rr < 1.0 for rr in diag.contraction_ratios
        )
        checks.append(
            ("kato-contraction", ok_contract, f"ratios {['%.2e' % rr for rr in diag.contraction_ratios]}")
        )
        checks.append(("kato-imex-cross", disc <= 1e-3, f"discrepancy {disc:.3e}"))
    _write_summary(os.path.join(out_dir, "summary.txt"), cfg, lines, checks)
    return all(ok for _, ok, _ in checks)


def run_fit_decay(cfg, out_dir, do_checks):
    fit_cfg = cfg.get("fit", {})
    src = fit_cfg.get("file")
    if src is None:
        raise ConfigError("[fit] section needs file = <time series path>")
    column = fit_cfg.get("column", "norm_L2")
    window = (
        float(fit_cfg.get("t_min", 10.0)),
        float(fit_cfg.get("t_max", 100.0)),
    )
    log_corr = fit_cfg.get("log_correction", "false").lower() in ("1", "true", "yes")
    with open(src) as fh:
        header = None
        rows = []
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            if header is None:
                header = [tok.strip() for tok in line.split(",")]
                continue
            rows.append([float(tok) for tok in line.split(",")])
    data = np.asarray(rows)
    cols = {name: data[:, i] for i, name in enumerate(header)}
    if column not in cols:
        raise ConfigError(f"column {column!r} not among {header}")
    fit = fit_decay(cols["t"], np.abs(cols[column]), window, log_corr)
    expected = fit_cfg.get("expected")
    lines = [
        f"column = {column}",
        f"window = {window[0]} {window[1]}",
        f"exponent = {fit.exponent:.10f}",
        f"residual = {fit.residual:.3e}",
        f"log_correction = {fit.log_correction}",
    ]
    checks = []
    report_rows = []
    if expected is not None:
        tol = float(fit_cfg.get("tolerance", 0.2))
        exp_val = float(expected)
        ok = abs(fit.exponent - exp_val) <= tol
        if do_checks:
            checks.append(
                ("fitted-exponent", ok, f"fit {fit.exponent:.4f} vs {exp_val:.4f} +- {tol}")
            )
        report_rows.append(
            (
                cfg["experiment"].get("name", "fit-decay"),
                fit_cfg.get("p", ""),
                fit_cfg.get("q", ""),
                exp_val,
                fit.exponent,
                fit.residual,
                ok,
            )
        )
    with open(os.path.join(out_dir, "report.txt"), "w") as fh:
        for line in _resolved_comment(cfg).splitlines():
            fh.write(f"# {line}\n")
        fh.write("experiment, p, q, expected, fitted, residual, pass\n")
        for row in report_rows:
            fh.write(
                f"{row[0]}, {row[1]}, {row[2]}, {row[3]:.10f}, {row[4]:.10f}, "
                f"{row[5]:.3e}, {row[6]}\n"
            )
    _write_summary(os.path.join(out_dir, "summary.txt"), cfg, lines, checks)
    return all(ok for _, ok, _ in checks)


def run(config_path):
    """Execute a configured experiment; returns the process exit status."""
    cfg = load_config(config_path)
    kind = cfg["experiment"]["kind"]
    out_dir = _out_dir(cfg)
    do_checks = cfg.get("checks", {}).get("enabled", "true").lower() in (
        "1",
        "true",
        "yes",
    )
    if kind == "fit-decay":
        ok = run_fit_decay(cfg, out_dir, do_checks)
        return 0 if ok else 2
    setup = _setup_from_config(cfg)
    if kind == "mode-heat":
        ok = run_mode_heat(cfg, setup, out_dir, do_checks)
    elif kind == "evolve-stokes":
        ok = run_stokes(cfg, setup, out_dir, do_checks)
    elif kind == "compare-asymptotic":
        ok = run_stokes(cfg, setup, out_dir, do_checks, compare_asymptotic=True)
    elif kind == "evolve-ns":
        ok = run_ns(cfg, setup, out_dir, do_checks)
    elif kind == "kato":
        ok = run_kato(cfg, setup, out_dir, do_checks)
    else:  # pragma: no cover
        raise ConfigError(f"unhandled experiment kind {kind!r}")
    return 0 if ok else 2


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="diskflow",
        description="Spectral disk-in-fluid experiments (see README for config format)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a configured experiment")
    p_run.add_argument("config", help="path to the experiment config file")
    sub.add_parser("list-presets", help="list the shipped presets")
    p_exp = sub.add_parser("print-expected", help="closed-form decay exponent lookup")
    p_exp.add_argument("kind")
    p_exp.add_argument("p")
    p_exp.add_argument("q")
    p_exp.add_argument("--regime", default="long", choices=("short", "long"))
    args = parser.parse_args(argv)
    try:
        if args.command == "list-presets":
            for name in preset_names():
                print(f"{name}: {get_preset(name).description}")
            return 0
        if args.command == "print-expected":
            rate = expected_exponent(
                args.kind, _parse_p(args.p), _parse_p(args.q), args.regime
            )
            suffix = " (log-corrected)" if rate.log_correction else ""
            print(f"{rate.exponent:.17e}{suffix}")
            return 0
        return run(args.config)
    except DiskflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
