"""
Monte-Carlo ensembles and estimators
====================================

:func:`run_ensemble` integrates ``n`` independent paths, trajectory ``i``
being driven by ``NoiseSource(master_seed, i)``.  Paths run on a thread
pool (the integration kernels release the GIL) and are collected in index
order, so every statistic is a pure function of the inputs and the seed.

The estimators confront simulated paths with the exponential-convergence
laws for the measured qubit: mean decay of the Lyapunov functions, the
Born-rule reduction probabilities, tail Lyapunov exponents, first-exit
times from the antipodal eigenstate, and the martingale property of
``z = Tr(sigma_z rho)`` in open loop.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .control import Controller
from .dynamics import SystemParams
from .exceptions import DomainError, IntegratorDivergence, SingularSampleError
from .integrate import (
    NoiseSource,
    StepConfig,
    TrajectoryRecord,
    initial_state,
    simulate_trajectory,
)
from .state import TargetState, distance_to_target_from_gap

Z_95 = 1.959963984540054
OBSERVABLES = ("V_qsr", "V_feedback", "d_bures", "z")


@dataclass(frozen=True)
class ObservableSeries:
    times: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    n: int


@dataclass(frozen=True)
class ExponentEstimate:
    """Tail-window regression slope of ``log d_B`` with a 95% interval."""

    value: float
    ci_lo: float
    ci_hi: float
    n_used: int
    n_skipped: int = 0
    window: tuple = (0.0, 0.0)
    slopes: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)


@dataclass(frozen=True)
class ExitTimeStats:
    mean: float
    ci_lo: float
    ci_hi: float
    n_exited: int
    n_censored: int
    bound: float
    samples: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    @property
    def censored_fraction(self) -> float:
        total = self.n_exited + self.n_censored
        return self.n_censored / total if total else 0.0


@dataclass(frozen=True)
class ConvergenceFractions:
    """Fractions of paths ending within ``epsilon`` of each eigenstate."""

    fractions: Dict[TargetState, float]
    unclassified: float
    epsilon: float

    @property
    def flagged(self) -> bool:
        """True when more than 1% of paths are still undecided."""
        return self.unclassified > 0.01

    def __getitem__(self, target):
        return self.fractions[TargetState.parse(target)]


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    times: np.ndarray
    n: int
    mean_v: np.ndarray
    var_v: np.ndarray
    mean_db: np.ndarray
    var_db: np.ndarray
    terminal: np.ndarray
    min_v: float
    max_clip: float
    exponent: Optional[ExponentEstimate] = None
    exit_times: Optional[ExitTimeStats] = None

    def equals(self, other: "EnsembleStats") -> bool:
        """Bit-for-bit comparison of every stored number."""
        def same(a, b):
            if a is None or b is None:
                return a is b
            return np.array_equal(np.asarray(a), np.asarray(b), equal_nan=True)
        scalars = ("n", "min_v", "max_clip")
        arrays = ("times", "mean_v", "var_v", "mean_db", "var_db", "terminal")
        if not all(same(getattr(self, k), getattr(other, k)) for k in scalars + arrays):
            return False
        for name in ("exponent", "exit_times"):
            a, b = getattr(self, name), getattr(other, name)
            if (a is None) != (b is None):
                return False
            if a is not None and not all(
                    same(getattr(a, f), getattr(b, f)) for f in a.__dataclass_fields__):
                return False
        return True


def _common_grid(records: Sequence[TrajectoryRecord]) -> np.ndarray:
    if not records:
        raise DomainError("no records supplied")
    times = records[0].times
    for r in records[1:]:
        if len(r.times) != len(times) or not np.array_equal(r.times, times):
            raise DomainError("records do not share a common time grid")
    return times


def _mean_se(values: np.ndarray):
    n = values.shape[0]
    mean = values.mean(axis=0)
    if n < 2:
        return mean, np.full_like(mean, np.nan)
    return mean, values.std(axis=0, ddof=1) / math.sqrt(n)


def observable_matrix(records, which: str, target: Optional[TargetState] = None) -> np.ndarray:
    """Stack one observable of all records into an ``(n, n_times)`` array."""
    if which not in OBSERVABLES:
        raise DomainError(f"unknown observable {which!r}; expected one of {OBSERVABLES}")
    if which == "z":
        return np.array([r.z for r in records])
    if which == "d_bures":
        return np.array([r.d_bures for r in records])
    if which == "V_qsr":
        return np.array([2.0 * np.sqrt(np.maximum(r.rho[:, 0, 0].real * r.rho[:, 1, 1].real, 0.0))
                         for r in records])
    target = target or records[0].target
    if target is None:
        raise DomainError("V_feedback requires a target state")
    target = TargetState.parse(target)
    return np.array([np.sqrt(r.gap(target)) for r in records])


def mean_observable(records, which: str, target: Optional[TargetState] = None) -> ObservableSeries:
    """Pointwise ensemble mean and standard error of an observable.

    ``which`` is one of ``"V_qsr"``, ``"V_feedback"``, ``"d_bures"`` and
    ``"z"``.  With a single record the standard error is ``nan``.
    """
    records = list(records)
    times = _common_grid(records)
    values = observable_matrix(records, which, target)
    mean, se = _mean_se(values)
    return ObservableSeries(times=times, mean=mean, se=se, n=len(records))


def _slope(t, y):
    tc = t - t.mean()
    sxx = float(tc @ tc)
    b = float(tc @ (y - y.mean())) / sxx
    resid = y - y.mean() - b * tc
    dof = len(t) - 2
    se = math.sqrt(float(resid @ resid) / dof / sxx) if dof > 0 else 0.0
    return b, se


def estimate_lyapunov_exponent(records, tail_window=None, skip_singular: bool = False) -> ExponentEstimate:
    """Least-squares slope of ``log d_B`` against time over a tail window.

    Per-record slopes are averaged and a normal-theory 95% interval is
    attached (across records, or from the regression residuals for a
    single record).  This is a regression estimator of the limsup
    exponent, not the limsup itself.

    Parameters
    ----------
    records : TrajectoryRecord or sequence of them
    tail_window : (float, float), optional
        Defaults to ``[T/2, T]``.
    skip_singular : bool
        Drop records that hit ``d_B = 0`` inside the window instead of raising.

    Raises
    ------
    SingularSampleError
        If a distance in the window is zero and ``skip_singular`` is false,
        or if no record survives.
    """
    if isinstance(records, TrajectoryRecord):
        records = [records]
    records = list(records)
    times = _common_grid(records)
    lo, hi = tail_window if tail_window is not None else (0.5 * times[-1], times[-1])
    mask = (times >= lo) & (times <= hi)
    if mask.sum() < 2:
        raise DomainError("tail window holds fewer than two samples")
    t = times[mask]
    slopes, ses, skipped = [], [], 0
    for r in records:
        d = r.d_bures[mask]
        if np.any(d <= 0.0):
            if skip_singular:
                skipped += 1
                continue
            raise SingularSampleError(f"record {r.seed_index} has d_B = 0 inside the tail window")
        b, se = _slope(t, np.log(d))
        slopes.append(b)
        ses.append(se)
    if not slopes:
        raise SingularSampleError("no record has strictly positive distances in the window")
    slopes = np.array(slopes)
    value = float(slopes.mean())
    if len(slopes) > 1:
        half = Z_95 * float(slopes.std(ddof=1)) / math.sqrt(len(slopes))
    else:
        half = Z_95 * ses[0]
    return ExponentEstimate(value=value, ci_lo=value - half, ci_hi=value + half,
                            n_used=len(slopes), n_skipped=skipped, window=(float(lo), float(hi)),
                            slopes=slopes)


def convergence_probability(records, epsilon: float = 0.01) -> ConvergenceFractions:
    """Fraction of paths whose final state has ``Tr(rho_T target) > 1 - epsilon``."""
    if not 0.0 < epsilon < 0.5:
        raise DomainError("epsilon must lie in (0, 0.5)")
    records = list(records)
    if not records:
        raise DomainError("no records supplied")
    n = len(records)
    fractions = {}
    for target in TargetState:
        hits = sum(1 for r in records if r.gap(target)[-1] < epsilon)
        fractions[target] = hits / n
    unclassified = 1.0 - sum(fractions.values())
    return ConvergenceFractions(fractions=fractions, unclassified=max(unclassified, 0.0),
                                epsilon=epsilon)


def nearest_eigenstate_fractions(records) -> Dict[TargetState, float]:
    """Fraction of paths whose final state is closer to each eigenstate.

    Ties (``z_T = 0`` exactly) count half to each side.
    """
    records = list(records)
    if not records:
        raise DomainError("no records supplied")
    z = np.array([r.z[-1] for r in records])
    half = 0.5 * float(np.sum(z == 0.0))
    n = len(records)
    return {TargetState.E1: (float(np.sum(z > 0.0)) + half) / n,
            TargetState.E2: (float(np.sum(z < 0.0)) + half) / n}


def terminal_labels(records, epsilon: float = 0.01) -> np.ndarray:
    """``+1`` for paths ending near E1, ``-1`` near E2 and ``0`` otherwise."""
    out = np.zeros(len(records), dtype=np.int8)
    for i, r in enumerate(records):
        if r.gap(TargetState.E1)[-1] < epsilon:
            out[i] = 1
        elif r.gap(TargetState.E2)[-1] < epsilon:
            out[i] = -1
    return out


def _time_stats(samples, n_censored, bound):
    exited = samples[np.isfinite(samples)]
    if len(exited):
        mean = float(exited.mean())
        half = Z_95 * float(exited.std(ddof=1)) / math.sqrt(len(exited)) if len(exited) > 1 else 0.0
    else:
        mean, half = math.nan, math.nan
    return ExitTimeStats(mean=mean, ci_lo=mean - half, ci_hi=mean + half,
                         n_exited=len(exited), n_censored=n_censored, bound=bound, samples=samples)


def first_exit_time_stats(records, delta: float = 0.1, target: Optional[TargetState] = None,
                          alpha: Optional[float] = None) -> ExitTimeStats:
    """First time each path leaves ``{V_target > 1 - delta}``.

    That set is a neighbourhood of the eigenstate antipodal to ``target``.
    Exit times are resolved on the record grid.  Paths that never leave are
    censored: excluded from the mean and counted separately.  ``bound`` is
    ``4 / alpha`` when ``alpha`` is given.

    Raises
    ------
    DomainError
        If a record does not start inside the neighbourhood.
    """
    records = list(records)
    times = _common_grid(records)
    target = TargetState.parse(target or records[0].target or TargetState.E2)
    level = 1.0 - delta
    samples = np.full(len(records), np.nan)
    for i, r in enumerate(records):
        v = np.sqrt(r.gap(target))
        if not v[0] > level:
            raise DomainError(f"record {r.seed_index} does not start inside the exit region")
        outside = np.nonzero(v <= level)[0]
        if len(outside):
            samples[i] = times[outside[0]]
    n_censored = int(np.isnan(samples).sum())
    bound = 4.0 / alpha if alpha else math.nan
    return _time_stats(samples, n_censored, bound)


def first_entry_time_stats(records, radius: float = 0.05,
                           target: Optional[TargetState] = None) -> ExitTimeStats:
    """First time each path reaches ``d_B(rho, target) < radius``."""
    records = list(records)
    times = _common_grid(records)
    target = TargetState.parse(target or records[0].target or TargetState.E2)
    samples = np.full(len(records), np.nan)
    for i, r in enumerate(records):
        inside = np.nonzero(distance_to_target_from_gap(r.gap(target)) < radius)[0]
        if len(inside):
            samples[i] = times[inside[0]]
    return _time_stats(samples, int(np.isnan(samples).sum()), math.nan)


def martingale_drift_check(records) -> float:
    """Largest deviation of ``E[z_t]`` from ``z_0``, in standard errors.

    Only meaningful in open loop, where ``z`` is a martingale.  Grid points
    where all paths agree contribute nothing when they sit at ``z_0``.

    Raises
    ------
    DomainError
        For feedback ensembles.
    """
    records = list(records)
    if any(r.controller_kind != "zero" for r in records):
        raise DomainError("the martingale property only holds for the zero controller")
    _common_grid(records)
    z = np.array([r.z for r in records])
    dev = z - z[:, :1]
    mean = dev.mean(axis=0)
    if len(records) < 2:
        return 0.0 if np.all(mean == 0.0) else math.inf
    se = dev.std(axis=0, ddof=1) / math.sqrt(len(records))
    stat = 0.0
    for m, s in zip(mean, se):
        if s > 0.0:
            stat = max(stat, abs(m) / s)
        elif m != 0.0:
            return math.inf
    return float(stat)


def physicality_violations(records, tol: float = 1e-12) -> int:
    """Count recorded states that fail the density-matrix or ball invariants."""
    bad = 0
    for r in records:
        rho = r.rho
        herm = np.max(np.abs(rho - np.conj(np.swapaxes(rho, 1, 2))), axis=(1, 2)) > tol
        trace = np.abs(rho[:, 0, 0].real + rho[:, 1, 1].real - 1.0) > tol
        p00, p11 = rho[:, 0, 0].real, rho[:, 1, 1].real
        det = p00 * p11 - np.abs(rho[:, 1, 0]) ** 2
        psd = (p00 < -tol) | (p11 < -tol) | (det < -tol)
        ball = np.sum(r.bloch ** 2, axis=1) > 1.0 + 1e-10
        bad += int(np.sum(herm | trace | psd | ball))
    return bad


def default_workers() -> int:
    return os.cpu_count() or 1


def simulate_many(rho0, controller: Controller, p: SystemParams, cfg: StepConfig, n: int,
                  master_seed: int, workers: Optional[int] = None) -> List[TrajectoryRecord]:
    """Integrate paths ``0 .. n-1`` and return them in index order."""
    if n < 1:
        raise DomainError("ensemble size n must be >= 1")
    cfg.check(p)
    rho0 = initial_state(rho0)

    def one(i):
        try:
            return simulate_trajectory(rho0, controller, p, cfg, NoiseSource(master_seed, i))
        except IntegratorDivergence as exc:
            raise IntegratorDivergence("trajectory failed", step=exc.step, index=i) from exc

    workers = workers or default_workers()
    if workers == 1 or n == 1:
        return [one(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(n)))


def summarize(records, controller: Controller, epsilon: float = 0.01, delta: float = 0.1,
              tail_window=None) -> EnsembleStats:
    records = list(records)
    times = _common_grid(records)
    target = controller.target
    v = np.array([r.v_lyap for r in records])
    d = np.array([r.d_bures for r in records])
    var = (lambda a: a.var(axis=0, ddof=1)) if len(records) > 1 else (lambda a: np.zeros(a.shape[1]))
    try:
        exponent = estimate_lyapunov_exponent(records, tail_window, skip_singular=True)
    except (SingularSampleError, DomainError):
        exponent = None
    exit_times = None
    if target is not None:
        start_v = math.sqrt(max(records[0].gap(target)[0], 0.0))
        if start_v > 1.0 - delta:
            exit_times = first_exit_time_stats(records, delta, target, controller.params.alpha)
    return EnsembleStats(
        times=times, n=len(records), mean_v=v.mean(axis=0), var_v=var(v),
        mean_db=d.mean(axis=0), var_db=var(d), terminal=terminal_labels(records, epsilon),
        min_v=float(v.min()), max_clip=max(r.max_clip for r in records),
        exponent=exponent, exit_times=exit_times)


def run_ensemble(rho0, controller: Controller, p: SystemParams, cfg: StepConfig, n: int,
                 master_seed: int, workers: Optional[int] = None, epsilon: float = 0.01,
                 delta: float = 0.1, tail_window=None):
    """Simulate ``n`` paths and aggregate them.

    Returns
    -------
    (EnsembleStats, list of TrajectoryRecord)

    Raises
    ------
    IntegratorDivergence
        Carrying the index and step of the first failing path.
    """
    records = simulate_many(rho0, controller, p, cfg, n, master_seed, workers)
    return summarize(records, controller, epsilon, delta, tail_window), records
