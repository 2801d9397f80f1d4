"""
Feedback stabilisation of an eigenstate
=======================================

The feedback law

    u = alpha V^beta - gamma Tr(i [sigma_y, rho] rho_bar),   V = sqrt(1 - Tr(rho rho_bar))

steers every path to the chosen eigenstate ``rho_bar``.  The first term
pushes the state off the antipodal pole, the second rotates it towards the
target.  Admissible gains give a certified almost-sure rate ``K_lambda``.
"""
import math

from spinstab.control import (
    Controller,
    FeedbackParams,
    alpha_max,
    control_bound_gamma_cap,
    rate_bound_C_lambda,
    rate_bound_K_lambda,
    validate_params,
)
from spinstab.control import ParameterError
from spinstab.dynamics import SystemParams
from spinstab.ensemble import (
    estimate_lyapunov_exponent,
    first_entry_time_stats,
    first_exit_time_stats,
    simulate_many,
)
from spinstab.integrate import StepConfig
from spinstab.state import TargetState

sp = SystemParams(omega_eg=0.0, eta=0.3, big_m=1.0)
fp = FeedbackParams(alpha=7.61, beta=5.0, gamma=10.0, lam=0.9, target=TargetState.E2)

# %% Admissibility and the derived constants
validate_params(fp, sp)
print(f"alpha_max = {alpha_max(fp, sp):.4f}; Gamma = {control_bound_gamma_cap(fp)}; "
      f"C_lambda = {rate_bound_C_lambda(fp, sp):.5f}; K_lambda = {rate_bound_K_lambda(fp, sp):.5f}")
try:
    validate_params(FeedbackParams(30.0, 5.0, 10.0, 0.9), sp)
except ParameterError as exc:
    print("alpha = 30 rejected:", exc.codes)

ctl = Controller.feedback(fp, sp)

# %% Convergence from the equator
cfg = StepConfig(dt=1e-3, t_final=200.0, record_stride=200)
recs = simulate_many((-1, 0, 0), ctl, sp, cfg, n=200, master_seed=7)
entry = first_entry_time_stats(recs, radius=0.05)
est = estimate_lyapunov_exponent(recs)
print(f"\nfrom (-1,0,0): {entry.n_exited}/{len(recs)} paths reach d_B < 0.05, "
      f"mean entry time {entry.mean:.2f}")
print(f"tail slope {est.value:.4f} (CI {est.ci_lo:.4f} .. {est.ci_hi:.4f}) <= -K_lambda = "
      f"{-rate_bound_K_lambda(fp, sp):.5f}")
print(f"smallest recorded V: {min(r.v_lyap.min() for r in recs):.3e} (never exactly zero)")

# %% Leaving the antipodal eigenstate
# Started at the wrong pole, the alpha term kicks the state away.  The
# expected exit time from {V > 1 - delta} is at most 4 / alpha.
fine = StepConfig(dt=1e-3, t_final=5.0, record_stride=1)
recs = simulate_many((0, 0, 1), ctl, sp, fine, n=200, master_seed=8)
st = first_exit_time_stats(recs, delta=0.1, alpha=fp.alpha)
print(f"\nfrom (0,0,1): mean exit time {st.mean:.4f} vs bound {st.bound:.4f}, "
      f"{st.n_censored} censored; certificate radius sqrt(2 - 2 sqrt(lambda)) = "
      f"{math.sqrt(2 - 2 * math.sqrt(fp.lam)):.4f}")
