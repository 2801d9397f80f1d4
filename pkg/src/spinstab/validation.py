"""
Invariant suite
===============

Cheap, self-contained checks of the geometric, dynamical and statistical
invariants of the package.  :func:`run_suite` backs the ``validate``
command; the individual helpers are reused by the test-suite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .control import (
    Controller,
    FeedbackParams,
    control_bound_gamma_cap,
    feedback_u,
    rate_bound_C_lambda,
)
from .dynamics import (
    SystemParams,
    bloch_diffusion,
    bloch_drift,
    diffusion_G,
    drift_F,
    generator_V_feedback,
    generator_V_qsr,
    lyapunov_qsr,
    lyapunov_target,
    target_gap,
)
from .ensemble import martingale_drift_check, mean_observable, physicality_violations, simulate_many
from .integrate import StepConfig, one_step_samples
from .state import (
    TargetState,
    bloch_to_density,
    bures_distance,
    bures_distance_to_set,
    density_to_bloch,
    random_states,
)

C1 = math.sqrt(1.0 + math.sqrt(2.0) / 2.0)
C2 = 2.0

REFERENCE_SYSTEM = SystemParams(omega_eg=0.0, eta=0.3, big_m=1.0)
REFERENCE_FEEDBACK = FeedbackParams(alpha=7.61, beta=5.0, gamma=10.0, lam=0.9, target=TargetState.E2)

# strong-measurement ensemble on which a coarse Euler-Maruyama step is visibly biased
MARTINGALE_SYSTEM = SystemParams(omega_eg=0.0, eta=1.0, big_m=4.0)
MARTINGALE_START = (0.8, 0.0, 0.6)
MARTINGALE_HORIZON = 2.0
MARTINGALE_GRID = 0.1
MARTINGALE_N = 10_000


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


def _states(n, rng):
    return random_states(n, rng, pure_fraction=0.1)


def check_round_trip(n=10_000, seed=0):
    vs = _states(n, np.random.default_rng(seed))
    err = max(np.max(np.abs(density_to_bloch(bloch_to_density(v)).as_array() - v)) for v in vs)
    return Check("state round trip", err <= 1e-12, f"max error {err:.2e}")


def check_bures_metric(n=10_000, seed=1):
    rng = np.random.default_rng(seed)
    a, b, c = (_states(n, rng) for _ in range(3))
    worst_sym, worst_tri = 0.0, -math.inf
    for va, vb, vc in zip(a, b, c):
        ra, rb, rc = bloch_to_density(va), bloch_to_density(vb), bloch_to_density(vc)
        dab, dba = bures_distance(ra, rb), bures_distance(rb, ra)
        worst_sym = max(worst_sym, abs(dab - dba))
        worst_tri = max(worst_tri, dab - bures_distance(ra, rc) - bures_distance(rc, rb))
    ok = worst_sym == 0.0 and worst_tri <= 1e-10
    return Check("Bures metric axioms", ok, f"asymmetry {worst_sym:.1e}, triangle excess {worst_tri:.1e}")


def check_sandwich(n=10_000, seed=2):
    vs = _states(n, np.random.default_rng(seed))
    lo, hi = math.inf, 0.0
    for v in vs:
        rho = bloch_to_density(v)
        d = bures_distance_to_set(rho)
        if d == 0.0:
            continue
        ratio = lyapunov_qsr(rho) / d
        lo, hi = min(lo, ratio), max(hi, ratio)
    ok = lo >= C1 - 1e-10 and hi <= C2 + 1e-10
    return Check("C1 d_B <= V_qsr <= C2 d_B", ok, f"ratio range [{lo:.6f}, {hi:.6f}]")


def check_coordinates(n=10_000, seed=3):
    rng = np.random.default_rng(seed)
    vs = _states(n, rng)
    worst, worst_tr = 0.0, 0.0
    for v in vs:
        p = SystemParams(rng.uniform(0, 3), rng.uniform(0, 1), rng.uniform(0.1, 3))
        u = rng.uniform(-5, 5)
        rho = bloch_to_density(v)
        f, g = drift_F(rho, u, p), diffusion_G(rho, p)
        fb = np.array([2 * f[1, 0].real, 2 * f[1, 0].imag, (f[0, 0] - f[1, 1]).real])
        gb = np.array([2 * g[1, 0].real, 2 * g[1, 0].imag, (g[0, 0] - g[1, 1]).real])
        worst = max(worst, np.max(np.abs(fb - bloch_drift(v, u, p))),
                    np.max(np.abs(gb - bloch_diffusion(v, p))))
        worst_tr = max(worst_tr, abs(np.trace(f)), abs(np.trace(g)))
    ok = worst <= 1e-12 and worst_tr <= 1e-14
    return Check("matrix vs Bloch fields", ok, f"max mismatch {worst:.1e}, max trace {worst_tr:.1e}")


def check_control_bounds(sp=REFERENCE_SYSTEM, fp=REFERENCE_FEEDBACK, n=100_000, seed=4):
    rng = np.random.default_rng(seed)
    vs = _states(n, rng)
    cap = control_bound_gamma_cap(fp)
    c_lam = rate_bound_C_lambda(fp, sp)
    bound_ok, cert_ok, n_region = True, True, 0
    for v in vs:
        rho = bloch_to_density(v)
        vt = lyapunov_target(rho, fp.target)
        u = feedback_u(rho, fp)
        bound_ok &= abs(u) <= cap * vt
        if vt > 0 and 1.0 - target_gap(rho, fp.target) > fp.lam:
            n_region += 1
            cert_ok &= generator_V_feedback(rho, u, sp, fp.target) <= -c_lam * vt
    return [
        Check("|u| <= Gamma V", bool(bound_ok), f"Gamma = {cap}"),
        Check("L V <= -C_lambda V on D_lambda", bool(cert_ok),
              f"C_lambda = {c_lam:.5f}, {n_region} states in region"),
    ]


def weak_generator_estimate(rho, u, p, dt, n_samples, rng, lyapunov="qsr", target=TargetState.E2):
    """One-step Monte-Carlo estimate of the generator on a Lyapunov function.

    Returns ``(estimate, standard_error)`` of ``(E[V(rho_dt)] - V(rho)) / dt``
    under the Kraus step with control held at ``u``.
    """
    dws = math.sqrt(dt) * rng.standard_normal(n_samples)
    out = one_step_samples(rho, u, p, dt, dws)
    if lyapunov == "qsr":
        v0 = lyapunov_qsr(rho)
        v1 = 2.0 * np.sqrt(np.maximum(out[:, 0] * out[:, 1], 0.0))
    else:
        v0 = lyapunov_target(rho, target)
        v1 = np.sqrt(np.maximum(out[:, 1] if target is TargetState.E1 else out[:, 0], 0.0))
    inc = (v1 - v0) / dt
    return float(inc.mean()), float(inc.std(ddof=1) / math.sqrt(n_samples))


def generator_consistency(n_states=20, n_samples=200_000, dt=1e-4, seed=5,
                          sp=REFERENCE_SYSTEM, fp=REFERENCE_FEEDBACK):
    """Compare closed-form generators with one-step estimates at random interior states.

    Returns a list of ``(kind, estimate, se, closed_form)`` tuples.
    """
    rng = np.random.default_rng(seed)
    rows = []
    while len(rows) < 2 * n_states:
        v = random_states(1, rng)[0] * 0.95
        rho = bloch_to_density(v)
        if lyapunov_target(rho, fp.target) < 0.2 or lyapunov_qsr(rho) < 0.2:
            continue
        est, se = weak_generator_estimate(rho, 0.0, sp, dt, n_samples, rng, "qsr")
        rows.append(("qsr", est, se, generator_V_qsr(rho, sp)))
        u = feedback_u(rho, fp)
        est, se = weak_generator_estimate(rho, u, sp, dt, n_samples, rng, "feedback", fp.target)
        rows.append(("feedback", est, se, generator_V_feedback(rho, u, sp, fp.target)))
    return rows


def check_generators(dt=1e-4, seed=5):
    rows = generator_consistency(dt=dt, seed=seed)
    worst = max(abs(est - exact) / (3 * se + 5 * dt) for _, est, se, exact in rows)
    return Check("generator closed forms vs one-step estimate", worst <= 1.0,
                 f"worst |diff|/(3 SE + 5 dt) = {worst:.3f} over {len(rows)} comparisons")


def martingale_records(dt, scheme="em", n=MARTINGALE_N, seed=0, workers=None):
    stride = max(1, int(round(MARTINGALE_GRID / dt)))
    cfg = StepConfig(dt=dt, t_final=MARTINGALE_HORIZON, scheme=scheme, record_stride=stride,
                     enforce_resolution=False)
    return simulate_many(MARTINGALE_START, Controller.zero(), MARTINGALE_SYSTEM, cfg, n, seed, workers)


def default_martingale_dt():
    return 1e-3 / MARTINGALE_SYSTEM.big_m


def run_suite(dt: Optional[float] = None, scheme: str = "em", seed: int = 0,
              workers: Optional[int] = None) -> List[Check]:
    """Run every invariant check and return one :class:`Check` per row.

    ``dt`` sets the step of the martingale and scheme-agreement ensembles;
    ``scheme`` is ``"em"``, ``"kraus"`` or ``"both"``, the latter adding
    scheme-agreement rows.
    """
    checks = [check_round_trip(), check_bures_metric(), check_sandwich(), check_coordinates()]
    checks += check_control_bounds()
    checks.append(check_generators())
    schemes = ["em", "kraus"] if scheme == "both" else [scheme]
    m_dt = dt if dt is not None else default_martingale_dt()
    for s in schemes:
        recs = martingale_records(m_dt, s, seed=seed, workers=workers)
        stat = martingale_drift_check(recs)
        bad = physicality_violations(recs)
        checks.append(Check(f"martingale E[z_t] = z_0 ({s}, dt={m_dt:g})", stat <= 3.0,
                            f"max deviation {stat:.2f} SE"))
        checks.append(Check(f"physical states ({s}, dt={m_dt:g})", bad == 0, f"{bad} violations"))
    neg = martingale_drift_check(martingale_records(0.1, "em", seed=seed + 1, workers=workers))
    checks.append(Check("martingale negative control detects bias (em, dt=0.1)", neg > 3.0,
                        f"max deviation {neg:.2f} SE"))
    if scheme == "both":
        a_dt = dt if dt is not None else 1e-3
        cfg = dict(dt=a_dt, t_final=10.0, record_stride=max(1, int(round(0.1 / a_dt))),
                   enforce_resolution=False)
        z = {}
        for k, s in enumerate(("em", "kraus")):
            recs = simulate_many((0.0, 0.0, 0.0), Controller.zero(), REFERENCE_SYSTEM,
                                 StepConfig(scheme=s, **cfg), 1000, seed + 10 + k, workers)
            z[s] = mean_observable(recs, "z")
        diff = z["em"].mean[-1] - z["kraus"].mean[-1]
        combined = math.hypot(z["em"].se[-1], z["kraus"].se[-1])
        checks.append(Check("scheme agreement E[z_T] (em vs kraus)", abs(diff) <= 3 * combined,
                            f"difference {diff:+.4f}, combined SE {combined:.4f}"))
    return checks


def format_table(checks: List[Check]) -> str:
    width = max(len(c.name) for c in checks)
    lines = [f"{'check':<{width}}  result  detail", "-" * (width + 30)]
    for c in checks:
        lines.append(f"{c.name:<{width}}  {'PASS' if c.passed else 'FAIL':<6}  {c.detail}")
    return "\n".join(lines)
