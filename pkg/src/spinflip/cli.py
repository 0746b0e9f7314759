"""Command-line front end.

Four subcommands:

* ``analytic`` -- closed-form population distributions over a tau_i grid.
* ``simulate`` -- integrate one ramp and write the population time trace.
* ``sweep``    -- run both engines over the grid and report discrepancies.
* ``validate`` -- run the built-in invariant suite and print a table.

All CSV output is comma-separated with LF line endings, a header row,
numbers at 17 significant digits, and the resolved configuration echoed in
leading ``# key=value`` comment lines so any output file can be replayed
with ``--config``.

Exit codes: 0 ok, 1 validation failure, 2 config error, 3 every sweep point
degenerate (no reversal anywhere), 4 integrator failure.
"""

from __future__ import annotations

import argparse
import math
import sys as _sys

import numpy as np

from . import analytic as _analytic
from .config import CSV_CONFIG_MARKER, ConfigError, RunConfig, config_echo, load_config
from .core import NoReversal, SpinSystem, reversal_time, rotation_frequency
from .experiments import (
    DISCREPANCY_THRESHOLD,
    Engines,
    compare_engines,
    numeric_two_level_flip,
    sweep_tau_i,
    wigner_d_oracle,
)
from .propagator import Basis, PropagationSettings, StepSizeUnderflow, time_trace

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3
EXIT_INTEGRATOR = 4


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _m_label(two_m: int) -> str:
    sign = "m" if two_m < 0 else ""
    mag = abs(two_m)
    return f"{sign}{mag // 2}" if mag % 2 == 0 else f"{sign}{mag}_2"


def _write_csv(path: str | None, header: list[str], rows: list[list[str]], cfg: RunConfig) -> None:
    lines = [CSV_CONFIG_MARKER]
    lines.extend(f"# {key}={value}" for key, value in config_echo(cfg))
    lines.append(",".join(header))
    lines.extend(",".join(row) for row in rows)
    text = "\n".join(lines) + "\n"
    if path is None:
        _sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _load(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        load_config(args.config, cfg)
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(key.strip() or item, "expected key=value")
        cfg.apply(key.strip(), value.strip())
    if getattr(args, "engines", None):
        cfg.engines = Engines(args.engines)
    if getattr(args, "m0", None):
        cfg.apply("m0", args.m0)
    if args.out:
        cfg.out = args.out
    if getattr(args, "plot", None):
        cfg.plot = args.plot
    cfg.validate()
    return cfg


def cmd_analytic(cfg: RunConfig) -> int:
    spin = cfg.spin_system()
    rows: list[list[str]] = []
    n_degenerate = 0
    for tau_i in cfg.tau_i_values:
        model = cfg.field_model(tau_i=tau_i)
        try:
            t_star = reversal_time(model)
            flip_p = _analytic.asymptotic_flip_probability(spin, model, cfg.k_coeff)
            theta = _analytic.theta_from_p(flip_p).theta
            f_rot = rotation_frequency(model, t_star)
            window = _analytic.transition_window(spin, model)
        except NoReversal:
            n_degenerate += 1
            flip_p, theta, f_rot, window = 0.0, 0.0, math.nan, math.nan
        dist = _analytic.analytic_distribution(spin, model, cfg.m0, cfg.k_coeff)
        for idx, m in enumerate(spin.m_values):
            rows.append(
                [
                    _fmt(tau_i),
                    f"{m:g}",
                    _fmt(dist[idx]),
                    _fmt(theta),
                    _fmt(flip_p),
                    _fmt(f_rot),
                    _fmt(window),
                ]
            )
    if n_degenerate == len(cfg.tau_i_values):
        print("error: no tau_i value produces a field reversal", file=_sys.stderr)
        return EXIT_DEGENERATE
    header = ["tau_i_s", "m", "probability", "theta_rad", "flip_p", "f_rot_hz", "window_s"]
    _write_csv(cfg.out, header, rows, cfg)
    return EXIT_OK


def _plot_trace(trace, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4))
    dim = trace.populations.shape[1]
    two_j = dim - 1
    for col in range(dim):
        two_m = two_j - 2 * col
        label = f"m = {two_m // 2}" if two_m % 2 == 0 else f"m = {two_m}/2"
        ax.plot(trace.times * 1e6, trace.populations[:, col], label=label)
    ax.set_xlabel("t (us)")
    ax.set_ylabel("population")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def cmd_simulate(cfg: RunConfig) -> int:
    spin = cfg.spin_system()
    model = cfg.ramp_model()
    try:
        settings = cfg.settings(spin, model, basis=cfg.trace_basis)
    except NoReversal:
        print("error: the configured field never reverses; set t_start/t_end explicitly", file=_sys.stderr)
        return EXIT_DEGENERATE
    try:
        trace = time_trace(spin, model, cfg.m0, settings, cfg.n_samples)
    except StepSizeUnderflow as exc:
        print(f"error: integrator failure: {exc}", file=_sys.stderr)
        return EXIT_INTEGRATOR
    header = ["t_s", "B_y_T", "B_z_T"] + [
        f"p_{_m_label(spin.two_j - 2 * k)}" for k in range(spin.dimension)
    ]
    rows = []
    for i in range(trace.times.size):
        row = [_fmt(trace.times[i]), _fmt(trace.field_snapshots[i, 1]), _fmt(trace.field_snapshots[i, 2])]
        row.extend(_fmt(p) for p in trace.populations[i])
        rows.append(row)
    _write_csv(cfg.out, header, rows, cfg)
    if cfg.plot:
        _plot_trace(trace, cfg.plot)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    sweep_cfg = cfg.sweep_config()
    if cfg.engines is Engines.BOTH:
        report = compare_engines(sweep_cfg)
        result = report.sweep
    else:
        report = None
        result = sweep_tau_i(sweep_cfg)

    spin = sweep_cfg.sys
    rows = []
    for rec in result.records:
        for idx, m in enumerate(spin.m_values):
            p_a = _fmt(rec.analytic[idx]) if rec.analytic is not None else ""
            p_n = _fmt(rec.numeric[idx]) if rec.numeric is not None else ""
            diff = (
                _fmt(abs(rec.analytic[idx] - rec.numeric[idx]))
                if rec.analytic is not None and rec.numeric is not None
                else ""
            )
            rows.append([_fmt(rec.tau_i), f"{m:g}", p_a, p_n, diff])
    _write_csv(cfg.out, ["tau_i_s", "m", "p_analytic", "p_numeric", "abs_diff"], rows, cfg)

    if report is not None:
        print("# engine comparison (max |analytic - numeric| per tau_i)", file=_sys.stderr)
        for entry in report.entries:
            mark = " FLAGGED" if entry.flagged else ""
            detail = entry.error or f"{entry.max_abs_diff:.3e}"
            print(f"#   tau_i = {entry.tau_i:.6g} s: {detail}{mark}", file=_sys.stderr)
    if all(rec.no_reversal for rec in result.records):
        print("error: no tau_i value produces a field reversal", file=_sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


def _validation_checks(cfg: RunConfig):
    """Yield (name, passed, detail) for the built-in invariant suite."""
    rng = np.random.default_rng(20260810)

    # closed form vs rotation-matrix oracle, plus stochasticity/symmetry
    worst_oracle = 0.0
    worst_sum = 0.0
    worst_sym = 0.0
    for two_j in (1, 2, 3, 4, 6, 8):
        spin = SpinSystem(two_j=two_j)
        for theta in rng.uniform(0, math.pi, size=20):
            p = _analytic.multilevel_matrix(spin, _analytic.ThetaParam.from_angle(theta)).entries
            oracle = wigner_d_oracle(two_j, theta).entries
            worst_oracle = max(worst_oracle, float(np.abs(p - oracle).max()))
            worst_sum = max(
                worst_sum,
                float(np.abs(p.sum(axis=0) - 1).max()),
                float(np.abs(p.sum(axis=1) - 1).max()),
            )
            worst_sym = max(
                worst_sym,
                float(np.abs(p - p.T).max()),
                float(np.abs(p - p[::-1, ::-1]).max()),
            )
    yield "closed form vs rotation oracle", worst_oracle <= 1e-12, f"max err {worst_oracle:.2e}"
    yield "row/column sums equal 1", worst_sum <= 1e-12, f"max err {worst_sum:.2e}"
    yield "m <-> m' and sign symmetries", worst_sym <= 1e-12, f"max err {worst_sym:.2e}"

    # two-level reduction
    theta = _analytic.theta_from_p(0.5)
    spin_half = SpinSystem(two_j=1, g_factor=cfg.g_factor)
    reduction = abs(
        _analytic.multilevel_matrix(spin_half, theta).entries[0, 1] - theta.p_half
    )
    yield "two-level entry equals sin^2(theta/2)", reduction <= 1e-15, f"err {reduction:.2e}"

    # linear-sweep asymptote vs direct integration at the configured k
    spin = SpinSystem(two_j=1, g_factor=cfg.g_factor)
    k_default = _analytic.default_k_coefficient(spin)
    k = cfg.k_coeff if cfg.k_coeff is not None else k_default
    a_y = cfg.b_y_ioffe + cfg.b_y_quad
    worst_rel = 0.0
    worst_drift = 0.0
    from .core import FieldModel
    from .propagator import integrate_dynamics, initial_state

    for p_target in (0.1, 0.5, 0.9):
        c_z = k_default * a_y**2 / (-math.log(p_target))
        model = FieldModel.from_ramp(a_y, c_z)
        settings = PropagationSettings.around_reversal(
            spin, model, ratio=cfg.window_ratio, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol
        )
        run = integrate_dynamics(spin, model, initial_state(spin, model, 0.5, settings), settings)
        worst_drift = max(worst_drift, run.norm_drift)
        p_num = numeric_two_level_flip(spin, model, settings)
        p_formula = math.exp(-k * a_y**2 / c_z)
        worst_rel = max(worst_rel, abs(p_num - p_formula) / p_num)
    yield (
        "flip probability matches linear-sweep formula (1%)",
        worst_rel <= 1e-2,
        f"max rel err {worst_rel:.2e}",
    )
    yield "norm drift below 1e-9", worst_drift <= 1e-9, f"worst drift {worst_drift:.2e}"

    # transition window: zero at the adiabatic boundary, positive above
    spin_cfg = cfg.spin_system()
    g_mu = abs(spin_cfg.g_factor) * spin_cfg.mu_b
    c_boundary = g_mu * a_y**2 / spin_cfg.hbar
    at_boundary = _analytic.transition_window(spin_cfg, FieldModel.from_ramp(a_y, c_boundary))
    above = _analytic.transition_window(spin_cfg, FieldModel.from_ramp(a_y, 3 * c_boundary))
    ok = at_boundary == 0.0 and above > 0.0
    yield "transition window boundary", ok, f"at boundary {at_boundary:g}, above {above:.3e}"


def cmd_validate(cfg: RunConfig) -> int:
    failures = 0
    for name, passed, detail in _validation_checks(cfg):
        status = "ok  " if passed else "FAIL"
        print(f"[{status}] {name:<48s} {detail}")
        failures += 0 if passed else 1
    if failures:
        print(f"{failures} check(s) failed")
        return EXIT_VALIDATION
    print("all checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinflip",
        description="Nonadiabatic spin-flip distributions for a spin J in a reversing field",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("analytic", "closed-form population distributions over the tau_i grid"),
        ("simulate", "integrate one ramp and write a population time trace"),
        ("sweep", "run the tau_i sweep (optionally both engines) and compare"),
        ("validate", "run the built-in invariant suite"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="config file (or a CSV written by this tool)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--out", help="output CSV path (default: stdout)")
        if name in ("analytic", "sweep"):
            p.add_argument("--m0", help="initial level, e.g. 2 or 1/2")
        if name == "sweep":
            p.add_argument("--engines", choices=[e.value for e in Engines])
        if name == "simulate":
            p.add_argument("--plot", help="write a vector-graphics population plot (svg/pdf)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    handler = {
        "analytic": cmd_analytic,
        "simulate": cmd_simulate,
        "sweep": cmd_sweep,
        "validate": cmd_validate,
    }[args.command]
    try:
        return handler(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except StepSizeUnderflow as exc:
        print(f"error: integrator failure: {exc}", file=_sys.stderr)
        return EXIT_INTEGRATOR


if __name__ == "__main__":
    raise SystemExit(main())
