"""
Stabilising feedback for the measured qubit
===========================================

The controller steers the state to a chosen ``sigma_z`` eigenstate
``target`` with

    u(rho) = alpha V(rho)^beta - gamma Tr(i [sigma_y, rho] target),
    V(rho) = sqrt(1 - Tr(rho target)).

The first term pushes the state off the antipodal eigenstate, where the
open-loop dynamics would otherwise leave it at rest; the second term is a
damping term that is always favourable away from that point.  The
admissible gains are

    beta >= 1,  gamma >= 0,  0 < alpha < eta M lam^2 / (1 - lam)^((beta - 1)/2)

for a chosen level ``lam`` in ``(0, 1)``, which also fixes the certified
decay constants ``C_lam`` (drift bound on ``{Tr(rho target) > lam}``) and
``K_lam`` (almost-sure exponent).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .dynamics import SystemParams, sigma_y_coupling, target_gap
from .exceptions import DomainError
from .state import StateLike, TargetState


class ParameterError(DomainError):
    """One or more feedback constraints are violated.

    ``violations`` lists ``(code, message)`` pairs, one per constraint.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(msg for _, msg in self.violations))

    @property
    def codes(self):
        return [code for code, _ in self.violations]


@dataclass(frozen=True)
class FeedbackParams:
    alpha: float
    beta: float
    gamma: float
    lam: float
    target: TargetState = TargetState.E2

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "lam"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "target", TargetState.parse(self.target))


def alpha_max(fp: FeedbackParams, sp: SystemParams) -> float:
    """Upper end of the admissible interval for ``alpha``."""
    return sp.eta * sp.big_m * fp.lam ** 2 / (1.0 - fp.lam) ** (0.5 * (fp.beta - 1.0))


def validate_params(fp: FeedbackParams, sp: SystemParams) -> FeedbackParams:
    """Check every gain constraint and return ``fp`` unchanged.

    Raises
    ------
    ParameterError
        Listing each violated constraint separately.
    """
    problems = []
    values = (fp.alpha, fp.beta, fp.gamma, fp.lam)
    if not all(math.isfinite(v) for v in values):
        raise ParameterError([("non-finite", "feedback parameters must be finite")])
    if fp.beta < 1.0:
        problems.append(("beta-below-one", f"beta={fp.beta!r} must be >= 1"))
    if fp.gamma < 0.0:
        problems.append(("gamma-negative", f"gamma={fp.gamma!r} must be >= 0"))
    if not 0.0 < fp.lam < 1.0:
        problems.append(("lambda-out-of-range", f"lambda={fp.lam!r} must lie in (0, 1)"))
    else:
        amax = alpha_max(fp, sp)
        if not 0.0 < fp.alpha < amax:
            problems.append((
                "alpha-out-of-range",
                f"alpha={fp.alpha!r} must lie in (0, {amax!r})",
            ))
    if problems:
        raise ParameterError(problems)
    return fp


def feedback_u(rho: StateLike, fp: FeedbackParams) -> float:
    gap = max(target_gap(rho, fp.target), 0.0)
    # beta is real >= 1, so gap**(beta/2) is well defined and vanishes at gap = 0
    return fp.alpha * gap ** (0.5 * fp.beta) - fp.gamma * sigma_y_coupling(rho, fp.target)


def control_bound_gamma_cap(fp: FeedbackParams) -> float:
    """Constant ``Gamma`` with ``|u(rho)| <= Gamma V(rho)`` on the whole state space.

    Follows from ``V <= 1``, ``beta >= 1`` and ``|x| <= 2 V``.
    """
    return fp.alpha + 2.0 * fp.gamma


def rate_bound_C_lambda(fp: FeedbackParams, sp: SystemParams) -> float:
    """Drift constant: ``L V <= -C_lam V`` wherever ``Tr(rho target) > lam``."""
    return 0.5 * (sp.eta * sp.big_m * fp.lam ** 2
                  - fp.alpha * (1.0 - fp.lam) ** (0.5 * (fp.beta - 1.0)))


def rate_bound_K_lambda(fp: FeedbackParams, sp: SystemParams) -> float:
    """Certified almost-sure decay rate ``K_lam = C_lam + eta M lam^2 / 2``."""
    k = (sp.eta * sp.big_m * fp.lam ** 2
         - 0.5 * fp.alpha * (1.0 - fp.lam) ** (0.5 * (fp.beta - 1.0)))
    if not k > 0.0:
        raise ParameterError([("rate-non-positive", f"K_lambda={k!r} is not positive")])
    return k


def certificate_radius(lam: float) -> float:
    """Bures radius of ``{Tr(rho target) > lam}`` around the target."""
    return math.sqrt(2.0 - 2.0 * math.sqrt(lam))


def in_certificate_region(rho: StateLike, fp: FeedbackParams) -> bool:
    return 1.0 - target_gap(rho, fp.target) > fp.lam


@dataclass(frozen=True)
class Controller:
    """Either the zero control or the validated feedback law.

    Build instances with :meth:`zero` or :meth:`feedback`.
    """

    kind: str = "zero"
    params: Optional[FeedbackParams] = field(default=None)

    def __post_init__(self):
        if self.kind not in ("zero", "feedback"):
            raise DomainError(f"unknown controller kind {self.kind!r}")
        if (self.kind == "feedback") != (self.params is not None):
            raise DomainError("feedback controllers carry parameters, zero controllers do not")

    @classmethod
    def zero(cls) -> "Controller":
        return cls("zero", None)

    @classmethod
    def feedback(cls, fp: FeedbackParams, sp: SystemParams) -> "Controller":
        return cls("feedback", validate_params(fp, sp))

    @property
    def is_feedback(self) -> bool:
        return self.kind == "feedback"

    @property
    def target(self) -> Optional[TargetState]:
        return self.params.target if self.params is not None else None

    def __call__(self, rho: StateLike) -> float:
        if self.params is None:
            return 0.0
        return feedback_u(rho, self.params)
