"""Acceptance gate: the nine end-to-end criteria at their stated tolerances.

Each test prints one ``criterion N: PASS|FAIL`` line (collected again in the
terminal summary).  Seeds are fixed up front; ``python tests/test_acceptance.py``
runs the suite standalone.
"""
import math
import time

import numpy as np
import pytest

from spinstab.control import Controller, rate_bound_K_lambda
from spinstab.ensemble import (
    convergence_probability,
    estimate_lyapunov_exponent,
    first_entry_time_stats,
    first_exit_time_stats,
    martingale_drift_check,
    mean_observable,
    nearest_eigenstate_fractions,
    physicality_violations,
    simulate_many,
)
from spinstab.integrate import StepConfig
from spinstab.state import TargetState
from spinstab.validation import (
    REFERENCE_SYSTEM,
    REFERENCE_FEEDBACK,
    check_generators,
    default_martingale_dt,
    martingale_records,
)

from conftest import ACCEPTANCE_LINES

SEED = 2026
K_LAMBDA = 0.20495
ENSEMBLES = {}


def report(number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return passed


def timed(key, fn):
    t0 = time.perf_counter()
    records = fn()
    ENSEMBLES[key] = records
    return records, time.perf_counter() - t0


@pytest.fixture(scope="module")
def qsr_run():
    cfg = StepConfig(dt=1e-3, t_final=10.0, record_stride=100)
    return timed("qsr", lambda: simulate_many((0, 0, 0), Controller.zero(), REFERENCE_SYSTEM, cfg, 1000, SEED + 1))


@pytest.fixture(scope="module")
def qsr_half_run():
    cfg = StepConfig(dt=1e-3, t_final=40.0, record_stride=1000)
    return timed("qsr_half", lambda: simulate_many((0, 0, 0.5), Controller.zero(), REFERENCE_SYSTEM, cfg, 2000, SEED + 2))


@pytest.fixture(scope="module")
def feedback_runs():
    ctl = Controller.feedback(REFERENCE_FEEDBACK, REFERENCE_SYSTEM)
    cfg = StepConfig(dt=1e-3, t_final=200.0, record_stride=200)
    out, total = {}, 0.0
    for k, start in enumerate([(-1.0, 0.0, 0.0), (0.0, 0.0, 1.0)]):
        recs, secs = timed(f"fb{k}", lambda: simulate_many(start, ctl, REFERENCE_SYSTEM, cfg, 500, SEED + 41 + k))
        out[start] = recs
        total += secs
    return out, total


@pytest.fixture(scope="module")
def exit_run():
    ctl = Controller.feedback(REFERENCE_FEEDBACK, REFERENCE_SYSTEM)
    cfg = StepConfig(dt=1e-3, t_final=5.0, record_stride=1)
    return timed("exit", lambda: simulate_many((0, 0, 1), ctl, REFERENCE_SYSTEM, cfg, 500, SEED + 5))[0]


@pytest.fixture(scope="module")
def martingale_runs():
    dt = default_martingale_dt()
    ok = timed("mart", lambda: martingale_records(dt, "em", seed=SEED + 6))[0]
    coarse = martingale_records(0.1, "em", seed=SEED + 7)
    return ok, coarse


def test_criterion_1_mean_decay(qsr_run):
    records, secs = qsr_run
    s = mean_observable(records, "V_qsr")
    excess = np.abs(s.mean - np.exp(-0.15 * s.times)) - (3 * s.se + 0.01)
    passed = bool(np.all(excess <= 0.0)) and secs < 30.0
    report(1, passed, f"max excess over 3 SE + 0.01 = {excess.max():+.4f} on {len(s.times)} points, "
                      f"{secs:.1f} s")
    assert passed


def test_criterion_2_reduction_probability(qsr_run, qsr_half_run):
    near = nearest_eigenstate_fractions(qsr_run[0])
    p_mixed = near[TargetState.E1]
    half = convergence_probability(qsr_half_run[0], 0.01)
    p_half = half[TargetState.E1]
    passed = abs(p_mixed - 0.5) <= 0.05 and abs(p_half - 0.75) <= 0.05 and not half.flagged
    report(2, passed, f"P(E1 | z0=0) = {p_mixed:.3f} (nearest, T=10); "
                      f"P(E1 | z0=0.5) = {p_half:.3f} (eps=0.01, T=40, unclassified {half.unclassified:.3f})")
    assert passed


def test_criterion_3_qsr_exponent(qsr_run):
    est = estimate_lyapunov_exponent(qsr_run[0], skip_singular=True)
    passed = est.value <= -0.15 + 0.03 and est.n_used >= 100
    report(3, passed, f"slope {est.value:.4f} [{est.ci_lo:.4f}, {est.ci_hi:.4f}] over "
                      f"{est.n_used} paths, window {est.window}")
    assert passed


def test_criterion_4_feedback_stabilization(feedback_runs):
    runs, secs = feedback_runs
    k_lam = rate_bound_K_lambda(REFERENCE_FEEDBACK, REFERENCE_SYSTEM)
    parts, passed = [], abs(k_lam - K_LAMBDA) < 1e-12 and secs < 120.0
    for start, recs in runs.items():
        entry = first_entry_time_stats(recs, 0.05, TargetState.E2)
        final_ok = all(r.d_bures[-1] < 0.05 for r in recs)
        est = estimate_lyapunov_exponent(recs)
        ok = entry.n_censored == 0 and final_ok and est.value <= -K_LAMBDA + 0.06
        passed = passed and ok
        parts.append(f"start {start}: reached {entry.n_exited}/{len(recs)}, slope {est.value:.4f}")
    report(4, passed, "; ".join(parts) + f"; K_lambda = {k_lam:.5f}, {secs:.1f} s")
    assert passed


def test_criterion_5_exit_time(exit_run):
    st = first_exit_time_stats(exit_run, 0.1, TargetState.E2, alpha=REFERENCE_FEEDBACK.alpha)
    passed = st.mean <= 4.0 / 7.61 and st.censored_fraction <= 0.01
    report(5, passed, f"mean exit {st.mean:.4f} (CI hi {st.ci_hi:.4f}) vs bound {st.bound:.4f}, "
                      f"exited {st.n_exited}/{st.n_exited + st.n_censored}")
    assert passed


def test_criterion_6_martingale(qsr_run, qsr_half_run, martingale_runs):
    ok, coarse = martingale_runs
    stats = {"open loop": martingale_drift_check(qsr_run[0]),
             "z0=0.5": martingale_drift_check(qsr_half_run[0]),
             "strong em": martingale_drift_check(ok)}
    neg = martingale_drift_check(coarse)
    passed = all(v <= 3.0 for v in stats.values()) and neg > 3.0
    detail = ", ".join(f"{k} {v:.2f}" for k, v in stats.items())
    report(6, passed, f"max |E z_t - z_0|/SE: {detail}; negative control dt=0.1: {neg:.2f}")
    assert passed


def test_criterion_7_generator_consistency():
    check = check_generators(dt=1e-4, seed=5)
    report(7, check.passed, check.detail)
    assert check.passed


def test_criterion_8_physicality(qsr_run, qsr_half_run, feedback_runs, exit_run, martingale_runs):
    bad, min_v = 0, math.inf
    for key, recs in ENSEMBLES.items():
        bad += physicality_violations(recs)
        for r in recs:
            if r.v_lyap[0] > 0:
                min_v = min(min_v, float(r.v_lyap.min()))
    n_rec = sum(len(r) for r in ENSEMBLES.values())
    passed = bad == 0 and min_v > 0.0
    report(8, passed, f"{bad} violations over {n_rec} paths in {len(ENSEMBLES)} ensembles, "
                      f"min recorded V = {min_v:.3e}")
    assert passed


def test_criterion_9_scheme_agreement(qsr_run):
    cfg = StepConfig(dt=1e-3, t_final=10.0, record_stride=100, scheme="em")
    em = timed("qsr_em", lambda: simulate_many((0, 0, 0), Controller.zero(), REFERENCE_SYSTEM, cfg, 1000, SEED + 9))[0]
    a, b = mean_observable(qsr_run[0], "z"), mean_observable(em, "z")
    diff = a.mean[-1] - b.mean[-1]
    combined = math.hypot(a.se[-1], b.se[-1])
    passed = abs(diff) <= 3 * combined and physicality_violations(em) == 0
    report(9, passed, f"E[z_T] kraus {a.mean[-1]:+.4f}, em {b.mean[-1]:+.4f}, "
                      f"difference {diff:+.4f} vs 3 SE {3 * combined:.4f}")
    assert passed


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
