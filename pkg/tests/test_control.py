import math

import numpy as np
import pytest

from spinstab.control import (
    Controller,
    FeedbackParams,
    ParameterError,
    alpha_max,
    certificate_radius,
    control_bound_gamma_cap,
    feedback_u,
    in_certificate_region,
    rate_bound_C_lambda,
    rate_bound_K_lambda,
    validate_params,
)
from spinstab.dynamics import SystemParams, generator_V_feedback, lyapunov_target
from spinstab.exceptions import DomainError
from spinstab.state import TargetState, bloch_to_density, bures_distance, random_states

from oracles import E1, E2, feedback_law, rho_of

SP = SystemParams(0.0, 0.3, 1.0)
GAINS = FeedbackParams(7.61, 5.0, 10.0, 0.9, TargetState.E2)


class TestValidate:
    def test_reference_gains_are_valid(self):
        assert validate_params(GAINS, SP) is GAINS
        assert alpha_max(GAINS, SP) == pytest.approx(24.3)

    def test_alpha_too_large(self):
        with pytest.raises(ParameterError) as err:
            validate_params(FeedbackParams(30.0, 5.0, 10.0, 0.9), SP)
        assert err.value.codes == ["alpha-out-of-range"]

    def test_beta_below_one(self):
        with pytest.raises(ParameterError) as err:
            validate_params(FeedbackParams(0.1, 0.5, 0.0, 0.5), SP)
        assert "beta-below-one" in err.value.codes

    def test_reports_each_violation(self):
        with pytest.raises(ParameterError) as err:
            validate_params(FeedbackParams(1.0, 0.5, -1.0, 1.5), SP)
        assert err.value.codes == ["beta-below-one", "gamma-negative", "lambda-out-of-range"]

    def test_alpha_must_be_positive(self):
        with pytest.raises(ParameterError) as err:
            validate_params(FeedbackParams(0.0, 5.0, 10.0, 0.9), SP)
        assert err.value.codes == ["alpha-out-of-range"]

    def test_non_finite(self):
        with pytest.raises(ParameterError) as err:
            validate_params(FeedbackParams(math.nan, 5.0, 10.0, 0.9), SP)
        assert err.value.codes == ["non-finite"]


class TestFeedbackLaw:
    def test_zero_at_target(self):
        assert feedback_u(E2, GAINS) == 0.0

    def test_antipode(self):
        assert feedback_u(E1, GAINS) == pytest.approx(7.61, rel=1e-15)

    def test_plus_x(self):
        # (1/2)^2.5 = 0.1767767, so the first term is 1.3452707
        u = feedback_u(rho_of(1, 0, 0), GAINS)
        assert u == pytest.approx(11.345271, abs=1e-6)
        assert u == pytest.approx(feedback_law(rho_of(1, 0, 0), 7.61, 5, 10, E2), rel=1e-14)

    def test_matches_matrix_oracle(self):
        rng = np.random.default_rng(1)
        fp1 = FeedbackParams(1.3, 2.5, 4.0, 0.8, TargetState.E1)
        for v in random_states(300, rng, pure_fraction=0.2):
            rho = rho_of(*v)
            assert feedback_u(rho, GAINS) == pytest.approx(feedback_law(rho, 7.61, 5, 10, E2), abs=1e-12)
            assert feedback_u(rho, fp1) == pytest.approx(feedback_law(rho, 1.3, 2.5, 4.0, E1), abs=1e-12)

    def test_zero_set_on_eigenstates(self):
        for target in TargetState:
            fp = FeedbackParams(7.61, 5.0, 10.0, 0.9, target)
            assert feedback_u(target.projector, fp) == 0.0
            assert feedback_u(target.antipodal.projector, fp) != 0.0

    def test_lipschitz_away_from_target(self):
        zs = np.linspace(-0.98, 0.98, 2001)
        us = np.array([feedback_u(rho_of(0.1, 0.0, z), GAINS) for z in zs])
        slopes = np.abs(np.diff(us) / np.diff(zs))
        assert np.max(slopes) < 100.0


class TestBounds:
    def test_gamma_cap_examples(self):
        assert control_bound_gamma_cap(GAINS) == pytest.approx(27.61)
        assert control_bound_gamma_cap(FeedbackParams(1.0, 1.0, 0.0, 0.5)) == 1.0
        assert control_bound_gamma_cap(FeedbackParams(0.5, 3.0, 2.0, 0.9)) == 4.5

    def test_k_lambda_reference_gains(self):
        assert rate_bound_K_lambda(GAINS, SP) == pytest.approx(0.20495, abs=1e-12)

    def test_k_lambda_small_alpha_limit(self):
        fp = FeedbackParams(1e-12, 5.0, 10.0, 0.9)
        assert rate_bound_K_lambda(fp, SP) == pytest.approx(0.243, abs=1e-11)

    def test_c_lambda_identity(self):
        c = rate_bound_C_lambda(GAINS, SP)
        assert c == pytest.approx(0.08345, abs=1e-12)
        assert rate_bound_K_lambda(GAINS, SP) - c == pytest.approx(0.1215, abs=1e-12)

    def test_k_lambda_rejects_non_positive(self):
        # not admissible, so the rate is allowed to fail
        with pytest.raises(ParameterError):
            rate_bound_K_lambda(FeedbackParams(100.0, 1.0, 0.0, 0.5), SP)

    def test_gamma_cap_holds_everywhere(self):
        rng = np.random.default_rng(2)
        cap = control_bound_gamma_cap(GAINS)
        for v in random_states(20000, rng, pure_fraction=0.1):
            rho = bloch_to_density(v)
            assert abs(feedback_u(rho, GAINS)) <= cap * lyapunov_target(rho, TargetState.E2)

    def test_drift_certificate(self):
        rng = np.random.default_rng(3)
        c = rate_bound_C_lambda(GAINS, SP)
        count = 0
        for v in random_states(20000, rng, pure_fraction=0.1):
            rho = bloch_to_density(v)
            if not in_certificate_region(rho, GAINS) or lyapunov_target(rho, TargetState.E2) == 0:
                continue
            count += 1
            lv = generator_V_feedback(rho, feedback_u(rho, GAINS), SP, TargetState.E2)
            assert lv <= -c * lyapunov_target(rho, TargetState.E2)
        assert count > 500

    def test_certificate_radius(self):
        lam = 0.9
        edge = bloch_to_density((0.0, 0.0, 1 - 2 * lam))
        assert bures_distance(edge, E2) == pytest.approx(certificate_radius(lam), rel=1e-12)


class TestController:
    def test_zero(self):
        c = Controller.zero()
        assert not c.is_feedback and c.target is None and c(E1) == 0.0

    def test_feedback_validates(self):
        with pytest.raises(ParameterError):
            Controller.feedback(FeedbackParams(30.0, 5.0, 10.0, 0.9), SP)

    def test_feedback_evaluates_law(self):
        c = Controller.feedback(GAINS, SP)
        assert c.target is TargetState.E2
        assert c(E1) == pytest.approx(7.61)

    def test_inconsistent_construction(self):
        with pytest.raises(DomainError):
            Controller("feedback", None)
        with pytest.raises(DomainError):
            Controller("bang-bang", None)
