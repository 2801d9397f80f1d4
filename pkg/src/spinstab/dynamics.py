"""
Stochastic master equation of a measured qubit
==============================================

The conditional state obeys the Ito equation

    d rho = F(rho) dt + G(rho) dW,

    F(rho) = -i w/2 [sz, rho] + M/4 (sz rho sz - rho) - i u/2 [sy, rho]
    G(rho) = sqrt(eta M)/2 (sz rho + rho sz - 2 Tr(sz rho) rho)

with ``w`` the qubit splitting, ``eta`` the detector efficiency, ``M`` the
measurement strength and ``u`` a control field along ``sigma_y``.  The
same fields are given here in Bloch coordinates, together with the closed
form generator applied to the two Lyapunov functions used in the package:

* ``lyapunov_qsr(rho) = sqrt(1 - Tr(sz rho)^2)``, the standard deviation of
  ``sigma_z``, which drives open-loop reduction;
* ``lyapunov_target(rho, target) = sqrt(1 - Tr(rho target))``, used for
  feedback stabilisation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .state import (
    SIGMA_Y,
    SIGMA_Z,
    BlochVector,
    StateLike,
    TargetState,
    as_matrix,
)


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of the measured qubit.

    Parameters
    ----------
    omega_eg : float
        Level splitting (angular frequency), ``>= 0``.
    eta : float
        Detector efficiency in ``[0, 1]``.
    big_m : float
        Measurement strength, ``> 0``.
    """

    omega_eg: float = 0.0
    eta: float = 0.3
    big_m: float = 1.0

    def __post_init__(self):
        for name in ("omega_eg", "eta", "big_m"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"system.{name} must be finite")
            object.__setattr__(self, name, value)
        if self.omega_eg < 0:
            raise DomainError("system.omega_eg must be >= 0")
        if not 0.0 <= self.eta <= 1.0:
            raise DomainError("system.eta must lie in [0, 1]")
        if self.big_m <= 0:
            raise DomainError("system.big_m must be > 0")

    @property
    def sqrt_eta_m(self) -> float:
        return math.sqrt(self.eta * self.big_m)

    @property
    def reduction_rate(self) -> float:
        """``eta M / 2``, the open-loop decay rate of ``E[lyapunov_qsr]``."""
        return 0.5 * self.eta * self.big_m


def _comm(a, b):
    return a @ b - b @ a


def drift_F(rho: StateLike, u: float, p: SystemParams) -> np.ndarray:
    r = as_matrix(rho)
    return (
        -0.5j * p.omega_eg * _comm(SIGMA_Z, r)
        + 0.25 * p.big_m * (SIGMA_Z @ r @ SIGMA_Z - r)
        - 0.5j * u * _comm(SIGMA_Y, r)
    )


def diffusion_G(rho: StateLike, p: SystemParams) -> np.ndarray:
    r = as_matrix(rho)
    z = np.trace(SIGMA_Z @ r).real
    return 0.5 * p.sqrt_eta_m * (SIGMA_Z @ r + r @ SIGMA_Z - 2.0 * z * r)


def bloch_drift(v, u: float, p: SystemParams) -> np.ndarray:
    """Drift of ``(x, y, z)`` under control ``u``."""
    x, y, z = v
    return np.array([
        -p.omega_eg * y - 0.5 * p.big_m * x + u * z,
        p.omega_eg * x - 0.5 * p.big_m * y,
        -u * x,
    ])


def bloch_diffusion(v, p: SystemParams) -> np.ndarray:
    """Noise coefficient ``sqrt(eta M) (-x z, -y z, 1 - z^2)``."""
    x, y, z = v
    return p.sqrt_eta_m * np.array([-x * z, -y * z, 1.0 - z * z])


def lyapunov_qsr(rho: StateLike) -> float:
    r = as_matrix(rho)
    # 1 - z^2 = (1 + z)(1 - z) = 4 rho_00 rho_11 for unit trace
    return 2.0 * math.sqrt(max(r[0, 0].real * r[1, 1].real, 0.0))


def target_gap(rho: StateLike, target: TargetState) -> float:
    """``1 - Tr(rho target)``, evaluated as ``Tr(rho (1 - target))``."""
    r = as_matrix(rho)
    return float(np.trace(r @ target.complement).real)


def lyapunov_target(rho: StateLike, target: TargetState) -> float:
    return math.sqrt(max(target_gap(rho, target), 0.0))


def sigma_y_coupling(rho: StateLike, target: TargetState) -> float:
    """``Tr(i [sigma_y, rho] target)``, which equals ``z_bar * x``."""
    r = as_matrix(rho)
    value = target.z_bar * 2.0 * r[1, 0].real
    assert abs(np.trace(1j * _comm(SIGMA_Y, r) @ target.projector).real - value) < 1e-12
    return value


def generator_V_qsr(rho: StateLike, p: SystemParams) -> float:
    """Open-loop generator applied to :func:`lyapunov_qsr`.

    Equals ``-(eta M / 2) V``.  On the eigenstates ``V`` is not
    differentiable and the continuous limit ``0`` is returned.
    """
    return -p.reduction_rate * lyapunov_qsr(rho)


def generator_V_feedback(rho: StateLike, u: float, p: SystemParams, target: TargetState) -> float:
    """Generator applied to :func:`lyapunov_target` under a constant control ``u``.

    ``(u/4) Tr(i[sy, rho] target) / V - (eta M / 2) Tr(rho target)^2 V``.

    Raises
    ------
    DomainError
        At the target itself, where ``V = 0``.
    """
    gap = target_gap(rho, target)
    if gap <= 0.0:
        raise DomainError("generator of the feedback Lyapunov function is singular at the target")
    v = math.sqrt(gap)
    overlap = 1.0 - gap
    return 0.25 * u * sigma_y_coupling(rho, target) / v - p.reduction_rate * overlap ** 2 * v


def as_bloch(v) -> BlochVector:
    return v if isinstance(v, BlochVector) else BlochVector(*v)
