"""
Command line entry point
========================

::

    spinstab reduce    --config reduce.cfg --out results/
    spinstab stabilize --config feedback.cfg --n 500 --t-final 200
    spinstab sweep     --config sweep.cfg
    spinstab validate  [--dt 0.1] [--scheme both]

``reduce`` and ``stabilize`` write ``<prefix><command>_timeseries.csv`` with
columns ``t, mean_V, se_V, mean_dB, se_dB, reference`` and
``<prefix><command>_summary.csv`` with ``key, value`` rows.  ``sweep``
writes ``<prefix>sweep_table.csv`` with one row per valid grid point.
With ``--scheme both`` each scheme gets its own pair of files, infixed
with the scheme name.

Exit codes: 0 success, 1 failed validation, 2 configuration error,
3 integrator failure.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import math
import os
import sys
from dataclasses import replace
from typing import List, Optional

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .control import ParameterError, control_bound_gamma_cap, rate_bound_C_lambda, rate_bound_K_lambda, validate_params
from .dynamics import lyapunov_qsr, lyapunov_target
from .ensemble import (
    convergence_probability,
    first_entry_time_stats,
    mean_observable,
    nearest_eigenstate_fractions,
    summarize,
    simulate_many,
)
from .exceptions import DomainError, IntegratorDivergence
from .integrate import Scheme, initial_state
from .state import TargetState

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

TIMESERIES_COLUMNS = ("t", "mean_V", "se_V", "mean_dB", "se_dB", "reference")
SUMMARY_KEYS = ("exponent", "ci_lo", "ci_hi", "k_lambda", "p_target", "p_antipodal",
                "frac_converged", "mean_exit_time", "min_path_V")
SWEEP_COLUMNS = ("alpha", "beta", "gamma", "lambda", "k_lambda", "exponent", "ci_lo", "ci_hi",
                 "mean_exit_time", "mean_entry_time", "frac_converged")


def fmt(value) -> str:
    """Serialise a number in round-trip precision; ``None``/``nan`` become empty."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return ""
    return repr(value)


def write_timeseries(path, times, mean_v, se_v, mean_db, se_db, reference):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIMESERIES_COLUMNS)
        for row in zip(times, mean_v, se_v, mean_db, se_db, reference):
            w.writerow([fmt(v) for v in row])


def write_summary(path, summary: dict):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("key", "value"))
        for key, value in summary.items():
            w.writerow((key, fmt(value)))


def _outputs(cfg: ExperimentConfig, command: str, scheme: Optional[str]):
    os.makedirs(cfg.out_dir or ".", exist_ok=True)
    stem = f"{cfg.prefix}{command}" + (f"_{scheme}" if scheme else "")
    return (os.path.join(cfg.out_dir, f"{stem}_timeseries.csv"),
            os.path.join(cfg.out_dir, f"{stem}_summary.csv"))


def _schemes(cfg: ExperimentConfig, choice: Optional[str]):
    if choice == "both":
        return [(replace(cfg, step=replace(cfg.step, scheme=s)), s.value) for s in Scheme]
    return [(cfg, None)]


def _exponent_fields(stats):
    e = stats.exponent
    if e is None:
        return {"exponent": None, "ci_lo": None, "ci_hi": None}
    return {"exponent": e.value, "ci_lo": e.ci_lo, "ci_hi": e.ci_hi}


def run_reduce(cfg: ExperimentConfig, scheme_label=None):
    controller = cfg.build_controller()
    if controller.is_feedback:
        raise ConfigError("controller.kind", "reduce requires the zero controller")
    target = cfg.analysis_target or TargetState.E1
    rho0 = initial_state(cfg.initial_state)
    records = simulate_many(rho0, controller, cfg.system, cfg.step, cfg.n, cfg.master_seed, cfg.workers)
    stats = summarize(records, controller, cfg.epsilon, cfg.delta, cfg.tail_window)
    v = mean_observable(records, "V_qsr")
    d = mean_observable(records, "d_bures")
    reference = lyapunov_qsr(rho0) * np.exp(-cfg.system.reduction_rate * v.times)
    nearest = nearest_eigenstate_fractions(records)
    settled = convergence_probability(records, cfg.epsilon)
    summary = _exponent_fields(stats)
    summary.update({
        "k_lambda": None,
        "p_target": nearest[target],
        "p_antipodal": nearest[target.antipodal],
        "frac_converged": 1.0 - settled.unclassified,
        "mean_exit_time": None,
        "min_path_V": stats.min_v,
        "expected_p_target": 1.0 - float(np.trace(rho0.entries @ target.complement).real),
        "settled_p_target": settled[target],
        "settled_p_antipodal": settled[target.antipodal],
        "reduction_rate": cfg.system.reduction_rate,
        "n": cfg.n,
    })
    return (v.times, v.mean, v.se, d.mean, d.se, reference), summary, records


def run_stabilize(cfg: ExperimentConfig, controller=None):
    controller = controller or cfg.build_controller()
    if not controller.is_feedback:
        raise ConfigError("controller.kind", "stabilize requires the feedback controller")
    fp, sp = controller.params, cfg.system
    rho0 = initial_state(cfg.initial_state)
    records = simulate_many(rho0, controller, sp, cfg.step, cfg.n, cfg.master_seed, cfg.workers)
    stats = summarize(records, controller, cfg.epsilon, cfg.delta, cfg.tail_window)
    v = mean_observable(records, "V_feedback")
    d = mean_observable(records, "d_bures")
    k_lam = rate_bound_K_lambda(fp, sp)
    reference = lyapunov_target(rho0, fp.target) * np.exp(-k_lam * v.times)
    nearest = nearest_eigenstate_fractions(records)
    final_d = np.array([r.d_bures[-1] for r in records])
    exit_stats = stats.exit_times
    entry = first_entry_time_stats(records, cfg.converge_radius, fp.target)
    summary = _exponent_fields(stats)
    summary.update({
        "k_lambda": k_lam,
        "p_target": nearest[fp.target],
        "p_antipodal": nearest[fp.target.antipodal],
        "frac_converged": float(np.mean(final_d < cfg.converge_radius)),
        "mean_exit_time": exit_stats.mean if exit_stats else None,
        "min_path_V": stats.min_v,
        "c_lambda": rate_bound_C_lambda(fp, sp),
        "gamma_cap": control_bound_gamma_cap(fp),
        "exit_time_bound": 4.0 / fp.alpha,
        "exit_censored_fraction": exit_stats.censored_fraction if exit_stats else None,
        "mean_entry_time": entry.mean,
        "max_clip": stats.max_clip,
        "n": cfg.n,
    })
    return (v.times, v.mean, v.se, d.mean, d.se, reference), summary, records


def _ensure_first(summary):
    ordered = {k: summary.get(k) for k in SUMMARY_KEYS}
    ordered.update({k: v for k, v in summary.items() if k not in ordered})
    return ordered


def cmd_reduce(cfg: ExperimentConfig, scheme_choice=None) -> int:
    for c, label in _schemes(cfg, scheme_choice):
        series, summary, _ = run_reduce(c, label)
        ts, sm = _outputs(c, "reduce", label)
        write_timeseries(ts, *series)
        write_summary(sm, _ensure_first(summary))
        print(f"wrote {ts} and {sm}")
    return EXIT_OK


def cmd_stabilize(cfg: ExperimentConfig, scheme_choice=None) -> int:
    for c, label in _schemes(cfg, scheme_choice):
        series, summary, _ = run_stabilize(c)
        ts, sm = _outputs(c, "stabilize", label)
        write_timeseries(ts, *series)
        write_summary(sm, _ensure_first(summary))
        print(f"wrote {ts} and {sm}")
    return EXIT_OK


def sweep_grid(cfg: ExperimentConfig):
    base = cfg.controller
    axes = {
        "alpha": cfg.sweep.get("alpha", [base.alpha]),
        "beta": cfg.sweep.get("beta", [base.beta]),
        "gamma": cfg.sweep.get("gamma", [base.gamma]),
        "lambda": cfg.sweep.get("lambda", [base.lam]),
    }
    for a, b, g, lam in itertools.product(axes["alpha"], axes["beta"], axes["gamma"], axes["lambda"]):
        yield replace(base, kind="feedback", alpha=a, beta=b, gamma=g, lam=lam)


def run_sweep(cfg: ExperimentConfig, log=None):
    log = log or sys.stderr
    rows, skipped = [], []
    for spec in sweep_grid(cfg):
        fp = spec.feedback_params()
        try:
            validate_params(fp, cfg.system)
        except ParameterError as exc:
            skipped.append((fp, str(exc)))
            print(f"skipped alpha={fp.alpha!r} beta={fp.beta!r} gamma={fp.gamma!r} "
                  f"lambda={fp.lam!r}: {exc}", file=log)
            continue
        point = replace(cfg, controller=spec)
        _, summary, records = run_stabilize(point)
        entry = first_entry_time_stats(records, cfg.converge_radius, fp.target)
        rows.append({
            "alpha": fp.alpha, "beta": fp.beta, "gamma": fp.gamma, "lambda": fp.lam,
            "k_lambda": summary["k_lambda"], "exponent": summary["exponent"],
            "ci_lo": summary["ci_lo"], "ci_hi": summary["ci_hi"],
            "mean_exit_time": summary["mean_exit_time"], "mean_entry_time": entry.mean,
            "frac_converged": summary["frac_converged"],
        })
    return rows, skipped


def cmd_sweep(cfg: ExperimentConfig) -> int:
    rows, _ = run_sweep(cfg)
    if not rows:
        raise ConfigError("sweep", "no valid grid point")
    os.makedirs(cfg.out_dir or ".", exist_ok=True)
    path = os.path.join(cfg.out_dir, f"{cfg.prefix}sweep_table.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow([fmt(row[c]) for c in SWEEP_COLUMNS])
    print(f"wrote {path} ({len(rows)} rows)")
    return EXIT_OK


def cmd_validate(dt=None, scheme="em", seed=0, workers=None) -> int:
    from .validation import format_table, run_suite

    checks = run_suite(dt=dt, scheme=scheme, seed=seed, workers=workers)
    print(format_table(checks))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value experiment file")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--n", type=int, help="number of trajectories")
    common.add_argument("--dt", type=float, help="time step")
    common.add_argument("--t-final", type=float, dest="t_final", help="final time")
    common.add_argument("--scheme", choices=("em", "kraus", "both"), help="integration scheme")
    common.add_argument("--workers", type=int, help="worker threads (default: all cores)")
    common.add_argument("--out", metavar="DIR", help="output directory")

    parser = argparse.ArgumentParser(prog="spinstab", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("reduce", parents=[common], help="open-loop state reduction ensemble")
    sub.add_parser("stabilize", parents=[common], help="feedback stabilisation ensemble")
    sub.add_parser("sweep", parents=[common], help="grid over controller gains")
    sub.add_parser("validate", parents=[common], help="run the invariant suite")
    return parser


def _overrides(args) -> dict:
    out = {}
    if args.seed is not None:
        out["ensemble.seed"] = str(args.seed)
    if args.n is not None:
        out["ensemble.n"] = str(args.n)
    if args.dt is not None:
        out["step.dt"] = repr(args.dt)
    if args.t_final is not None:
        out["step.t_final"] = repr(args.t_final)
    if args.scheme in ("em", "kraus"):
        out["step.scheme"] = args.scheme
    if args.workers is not None:
        out["ensemble.workers"] = str(args.workers)
    if args.out is not None:
        out["outputs.dir"] = args.out
    return out


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(dt=args.dt, scheme=args.scheme or "em",
                                seed=args.seed or 0, workers=args.workers)
        cfg = load_config(args.config, _overrides(args))
        if args.command == "reduce":
            return cmd_reduce(cfg, args.scheme)
        if args.command == "stabilize":
            return cmd_stabilize(cfg, args.scheme)
        return cmd_sweep(cfg)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegratorDivergence as exc:
        print(f"integrator failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
