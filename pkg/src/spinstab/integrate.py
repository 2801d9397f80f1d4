"""
Time stepping for single trajectories
=====================================

Two schemes are available:

``Scheme.EM``
    Euler-Maruyama on the Bloch-coordinate SDE, with a radial projection
    back onto the unit ball whenever a step overshoots it.

``Scheme.KRAUS``
    The normalised measurement-record map

        rho -> (M_dY rho M_dY^+ + c sz rho sz dt) / Tr(...),
        M_dY = 1 - [i/2 (w sz + u sy) + M/8] dt + sqrt(eta M)/2 sz dY,
        dY = dW + sqrt(eta M) Tr(sz rho) dt,

    which is positivity preserving up to round-off.  The dephasing
    coefficient is ``c = (1 - eta) M / 4``; ``StepConfig(literal_correction=True)``
    switches to ``c = (1 - eta M) / 4`` instead.  Both agree whenever ``M = 1``.

Both schemes are Ito, explicit in the control (``u`` is evaluated on the
pre-step state) and driven by per-trajectory Philox streams so that a
path is a pure function of ``(master_seed, index)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels as K
from .control import Controller
from .dynamics import SystemParams, as_bloch
from .exceptions import DomainError, IntegratorDivergence
from .state import BlochVector, DensityMatrix, StateLike, TargetState, as_matrix, bloch_to_density

RESOLUTION = 0.01


class Scheme(enum.Enum):
    EM = "em"
    KRAUS = "kraus"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DomainError(f"unknown scheme {value!r}; expected 'em' or 'kraus'") from None


@dataclass(frozen=True)
class StepConfig:
    """Step size, horizon and recording stride of a simulation.

    ``enforce_resolution=False`` lifts the ``dt <= 0.01 / M`` guard; it exists
    for deliberately coarse negative-control runs.
    """

    dt: float = 1e-3
    t_final: float = 10.0
    scheme: Scheme = Scheme.KRAUS
    record_stride: int = 10
    literal_correction: bool = False
    enforce_resolution: bool = True

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "t_final", float(self.t_final))
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise DomainError("step.dt must be > 0")
        if not (math.isfinite(self.t_final) and self.t_final >= self.dt):
            raise DomainError("step.t_final must be >= step.dt")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise DomainError("step.record_stride must be an integer >= 1")
        object.__setattr__(self, "record_stride", int(self.record_stride))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def check(self, sp: SystemParams) -> "StepConfig":
        if self.enforce_resolution and self.dt > RESOLUTION / sp.big_m * (1 + 1e-12):
            raise DomainError(
                f"step.dt={self.dt!r} exceeds the resolution guard {RESOLUTION / sp.big_m!r} (0.01/M)")
        return self

    def correction(self, sp: SystemParams) -> float:
        if self.literal_correction:
            return 0.25 * (1.0 - sp.eta * sp.big_m)
        return 0.25 * (1.0 - sp.eta) * sp.big_m


class NoiseSource:
    """Deterministic Gaussian stream for trajectory ``index`` of ``master_seed``.

    Each stream is a Philox generator keyed by
    ``SeedSequence(master_seed, spawn_key=(index,))``, so streams for
    different indices are independent and can be built in any order.
    """

    def __init__(self, master_seed: int, index: int):
        if master_seed < 0 or master_seed >= 2 ** 64:
            raise DomainError("master_seed must be an unsigned 64-bit integer")
        if index < 0:
            raise DomainError("trajectory index must be >= 0")
        self.master_seed = int(master_seed)
        self.index = int(index)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.index,))
        self._rng = np.random.Generator(np.random.Philox(seq))

    def increments(self, n: int, dt: float) -> np.ndarray:
        """Draw the next ``n`` Wiener increments ``sqrt(dt) N(0, 1)``."""
        return math.sqrt(dt) * self._rng.standard_normal(n)

    def __repr__(self):
        return f"NoiseSource(master_seed={self.master_seed}, index={self.index})"


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Observables of one path sampled every ``record_stride`` steps.

    ``v_lyap`` and ``d_bures`` refer to the feedback Lyapunov function and the
    distance to the target for feedback runs, and to ``sqrt(1 - z^2)`` and
    the distance to the eigenstate pair otherwise.
    """

    times: np.ndarray
    bloch: np.ndarray
    u: np.ndarray
    v_lyap: np.ndarray
    d_bures: np.ndarray
    rho: np.ndarray
    seed_index: int = 0
    controller_kind: str = "zero"
    target: Optional[TargetState] = None
    max_clip: float = 0.0
    scheme: Scheme = Scheme.KRAUS

    def __post_init__(self):
        n = len(self.times)
        for name in ("bloch", "u", "v_lyap", "d_bures", "rho"):
            if len(getattr(self, name)) != n:
                raise DomainError(f"record field {name} has inconsistent length")
        if n == 0 or self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0):
            raise DomainError("record times must start at 0 and increase strictly")
        for name in ("times", "bloch", "u", "v_lyap", "d_bures", "rho"):
            getattr(self, name).setflags(write=False)

    @property
    def z(self) -> np.ndarray:
        return self.bloch[:, 2]

    def gap(self, target: TargetState) -> np.ndarray:
        """``1 - Tr(rho_t target)`` along the path, without cancellation."""
        i = 1 if target is TargetState.E1 else 0
        return np.maximum(self.rho[:, i, i].real, 0.0)

    def final_state(self) -> DensityMatrix:
        return DensityMatrix(self.rho[-1])


def _feedback_args(controller: Controller):
    if controller.is_feedback:
        fp = controller.params
        return K.CTRL_FEEDBACK, fp.alpha, fp.beta, fp.gamma, float(fp.target.z_bar)
    return K.CTRL_ZERO, 0.0, 1.0, 0.0, 1.0


def em_step_bloch(v, u: float, dW: float, p: SystemParams, dt: float) -> BlochVector:
    """One Euler-Maruyama step of the Bloch SDE, projected onto the ball."""
    x, y, z = as_bloch(v)
    nx, ny, nz, _, status = K.em_update(x, y, z, float(u), float(dW), p.omega_eg,
                                        p.sqrt_eta_m, p.big_m, float(dt))
    if status != K.OK:
        raise IntegratorDivergence("non-finite Euler-Maruyama step")
    return BlochVector(nx, ny, nz)


def kraus_step(rho: StateLike, u: float, dW: float, p: SystemParams, dt: float,
               literal_correction: bool = False):
    """One normalised Kraus step.

    Returns
    -------
    (DensityMatrix, float)
        The updated state and the measurement-record increment ``dY``.
    """
    m = as_matrix(rho)
    corr = StepConfig(dt=dt, t_final=dt, literal_correction=literal_correction).correction(p)
    p00, p11, c, dy, _, status = K.kraus_update(
        float(m[0, 0].real), float(m[1, 1].real), complex(m[1, 0]), float(u), float(dW),
        p.omega_eg, p.sqrt_eta_m, p.big_m, corr, float(dt))
    if status == K.BAD_TRACE:
        raise IntegratorDivergence("Kraus normalisation trace is not positive; dt too large")
    if status != K.OK:
        raise IntegratorDivergence("non-finite Kraus step")
    out = np.array([[p00, np.conj(c)], [c, p11]], dtype=np.complex128)
    return DensityMatrix(out), dy


def initial_state(rho0) -> DensityMatrix:
    """Accept a :class:`DensityMatrix`, a 2x2 matrix or a Bloch triple."""
    if isinstance(rho0, DensityMatrix):
        return rho0
    if isinstance(rho0, BlochVector) or np.shape(rho0) == (3,):
        return bloch_to_density(rho0)
    return DensityMatrix(rho0)


def simulate_trajectory(rho0, controller: Controller, p: SystemParams, cfg: StepConfig,
                        noise: NoiseSource) -> TrajectoryRecord:
    """Integrate one path from ``rho0`` under ``controller``.

    ``rho0`` may be a :class:`DensityMatrix`, a matrix or a Bloch triple.
    The record is a deterministic function of ``noise``'s key.

    Raises
    ------
    IntegratorDivergence
        Carrying the failing step index.
    """
    cfg.check(p)
    m = initial_state(rho0).entries
    p00, p11, c = float(m[0, 0].real), float(m[1, 1].real), complex(m[1, 0])
    n_steps = cfg.n_steps
    dws = noise.increments(n_steps, cfg.dt)
    n_rec = K.n_records(n_steps, cfg.record_stride)
    t, rho, uu, vv, db = K.allocate(n_rec)
    kind, alpha, beta, gamma, zbar = _feedback_args(controller)
    scheme = 0 if cfg.scheme is Scheme.KRAUS else 1
    status, step, max_clip = K.run_trajectory(
        scheme, p00, p11, c, dws, cfg.record_stride, p.omega_eg, p.sqrt_eta_m, p.big_m,
        cfg.correction(p), cfg.dt, kind, alpha, beta, gamma, zbar, t, rho, uu, vv, db)
    if status != K.OK:
        reason = "non-positive normalisation trace" if status == K.BAD_TRACE else "non-finite state"
        raise IntegratorDivergence(reason, step=int(step), index=noise.index)
    bloch = np.column_stack([2.0 * rho[:, 1, 0].real, 2.0 * rho[:, 1, 0].imag,
                             (rho[:, 0, 0] - rho[:, 1, 1]).real])
    return TrajectoryRecord(
        times=t, bloch=bloch, u=uu, v_lyap=vv, d_bures=db, rho=rho,
        seed_index=noise.index, controller_kind=controller.kind, target=controller.target,
        max_clip=float(max_clip), scheme=cfg.scheme)


def one_step_samples(rho, u: float, p: SystemParams, dt: float, dws: np.ndarray,
                     literal_correction: bool = False) -> np.ndarray:
    """Kraus step from one state for each increment in ``dws``.

    Returns an ``(n, 3)`` array of ``(rho_00, rho_11, x)`` after the step.
    """
    m = as_matrix(rho)
    corr = StepConfig(dt=dt, t_final=dt, literal_correction=literal_correction).correction(p)
    out = np.empty((len(dws), 3))
    K.kraus_batch(float(m[0, 0].real), float(m[1, 1].real), complex(m[1, 0]), float(u),
                  np.ascontiguousarray(dws, dtype=float), p.omega_eg, p.sqrt_eta_m, p.big_m,
                  corr, float(dt), out)
    return out
