"""Property-based checks of the geometric and dynamical invariants."""
import math

import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st

from spinstab.control import FeedbackParams, control_bound_gamma_cap, feedback_u
from spinstab.dynamics import SystemParams, bloch_diffusion, bloch_drift, diffusion_G, drift_F, lyapunov_qsr, lyapunov_target
from spinstab.integrate import em_step_bloch, kraus_step
from spinstab.state import (
    TargetState,
    bloch_to_density,
    bures_distance,
    bures_distance_to_set,
    density_to_bloch,
)
from spinstab.validation import C1, C2

unit = st.floats(-1.0, 1.0, allow_nan=False)


@st.composite
def bloch_vectors(draw):
    v = np.array([draw(unit), draw(unit), draw(unit)])
    n = np.linalg.norm(v)
    if n > 1.0:
        v = v / n
    return tuple(float(c) for c in v)


system_params = st.builds(
    SystemParams,
    omega_eg=st.floats(0.0, 5.0),
    eta=st.floats(0.0, 1.0),
    big_m=st.floats(0.05, 5.0),
)

feedback_params = st.builds(
    FeedbackParams,
    alpha=st.floats(0.01, 30.0),
    beta=st.floats(1.0, 8.0),
    gamma=st.floats(0.0, 20.0),
    lam=st.floats(0.05, 0.95),
    target=st.sampled_from(list(TargetState)),
)


@given(bloch_vectors())
def test_round_trip(v):
    back = density_to_bloch(bloch_to_density(v)).as_array()
    assert np.max(np.abs(back - np.array(v))) <= 1e-12


@given(bloch_vectors(), bloch_vectors(), bloch_vectors())
def test_bures_metric(a, b, c):
    ra, rb, rc = (bloch_to_density(v) for v in (a, b, c))
    dab = bures_distance(ra, rb)
    assert dab == bures_distance(rb, ra)
    assert 0.0 <= dab <= math.sqrt(2.0)
    assert dab <= bures_distance(ra, rc) + bures_distance(rc, rb) + 1e-10


@given(bloch_vectors())
def test_sandwich(v):
    rho = bloch_to_density(v)
    d = bures_distance_to_set(rho)
    assume(d > 1e-6)
    ratio = lyapunov_qsr(rho) / d
    assert C1 - 1e-9 <= ratio <= C2 + 1e-9


@given(bloch_vectors(), st.floats(-10, 10), system_params)
def test_fields_agree(v, u, p):
    rho = bloch_to_density(v)
    f, g = drift_F(rho, u, p), diffusion_G(rho, p)
    fb = (2 * f[1, 0].real, 2 * f[1, 0].imag, (f[0, 0] - f[1, 1]).real)
    gb = (2 * g[1, 0].real, 2 * g[1, 0].imag, (g[0, 0] - g[1, 1]).real)
    np.testing.assert_allclose(fb, bloch_drift(v, u, p), atol=1e-12)
    np.testing.assert_allclose(gb, bloch_diffusion(v, p), atol=1e-12)
    assert abs(np.trace(f)) <= 1e-14 and abs(np.trace(g)) <= 1e-14


@given(bloch_vectors(), feedback_params)
def test_control_bound(v, fp):
    rho = bloch_to_density(v)
    assert abs(feedback_u(rho, fp)) <= control_bound_gamma_cap(fp) * lyapunov_target(rho, fp.target)


@given(bloch_vectors(), st.floats(-20, 20), st.floats(-0.2, 0.2), system_params,
       st.sampled_from([1e-4, 1e-3]))
def test_kraus_step_is_physical(v, u, dw, p, dt):
    rho, _ = kraus_step(bloch_to_density(v), u, dw, p, dt / p.big_m)
    m = rho.entries
    assert abs(np.trace(m) - 1.0) <= 1e-12
    assert m[0, 0].real >= 0 and m[1, 1].real >= 0 and rho.determinant >= -1e-12


@given(bloch_vectors(), st.floats(-20, 20), st.floats(-0.5, 0.5), system_params)
def test_euler_step_stays_in_ball(v, u, dw, p):
    out = em_step_bloch(v, u, dw, p, 1e-3)
    assert out.norm <= 1.0 + 1e-12


@given(st.sampled_from(list(TargetState)), st.floats(-0.5, 0.5), system_params)
def test_eigenstates_are_fixed_points(target, dw, p):
    rho, _ = kraus_step(target.projector, 0.0, dw, p, 1e-3)
    np.testing.assert_array_equal(rho.entries, target.projector)
