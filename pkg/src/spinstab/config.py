"""
Experiment configuration files
==============================

Configs are flat ``key = value`` text with dotted section names::

    # open-loop reduction run
    system.omega_eg = 0
    system.eta = 0.3
    system.m = 1
    controller.kind = zero
    initial_state = 0, 0, 0
    step.dt = 1e-3
    step.t_final = 10
    ensemble.n = 1000
    ensemble.seed = 2026

``initial_state`` is a Bloch triple or one of the names in
:data:`NAMED_STATES`.  Sweep grids are comma-separated lists under
``sweep.alpha``, ``sweep.beta``, ``sweep.gamma`` and ``sweep.lambda``.
Unknown keys are rejected so typos do not silently fall back to defaults.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

from .control import Controller, FeedbackParams, ParameterError
from .dynamics import SystemParams
from .exceptions import DomainError
from .integrate import Scheme, StepConfig
from .state import BlochVector, TargetState

NAMED_STATES = {
    "e1": (0.0, 0.0, 1.0),
    "e2": (0.0, 0.0, -1.0),
    "mixed": (0.0, 0.0, 0.0),
    "+x": (1.0, 0.0, 0.0),
    "-x": (-1.0, 0.0, 0.0),
    "+y": (0.0, 1.0, 0.0),
    "-y": (0.0, -1.0, 0.0),
}

KEYS = {
    "system.omega_eg", "system.eta", "system.m",
    "controller.kind", "controller.alpha", "controller.beta", "controller.gamma",
    "controller.lambda", "controller.target",
    "initial_state",
    "step.dt", "step.t_final", "step.scheme", "step.record_stride", "step.literal_correction",
    "ensemble.n", "ensemble.seed", "ensemble.workers",
    "analysis.epsilon", "analysis.delta", "analysis.converge_radius",
    "analysis.tail_lo", "analysis.tail_hi", "analysis.target",
    "outputs.dir", "outputs.prefix",
    "sweep.alpha", "sweep.beta", "sweep.gamma", "sweep.lambda",
}


class ConfigError(DomainError):
    """A configuration value is missing or invalid; ``path`` names the key."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class ControllerSpec:
    kind: str = "zero"
    alpha: float = 7.61
    beta: float = 5.0
    gamma: float = 10.0
    lam: float = 0.9
    target: TargetState = TargetState.E2

    def feedback_params(self) -> FeedbackParams:
        return FeedbackParams(self.alpha, self.beta, self.gamma, self.lam, self.target)

    def build(self, sp: SystemParams) -> Controller:
        if self.kind == "zero":
            return Controller.zero()
        return Controller.feedback(self.feedback_params(), sp)


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemParams = field(default_factory=SystemParams)
    controller: ControllerSpec = field(default_factory=ControllerSpec)
    initial_state: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    step: StepConfig = field(default_factory=StepConfig)
    n: int = 1000
    master_seed: int = 2026
    workers: Optional[int] = None
    epsilon: float = 0.01
    delta: float = 0.1
    converge_radius: float = 0.05
    tail_window: Optional[Tuple[float, float]] = None
    analysis_target: Optional[TargetState] = None
    out_dir: str = "."
    prefix: str = ""
    sweep: Dict[str, List[float]] = field(default_factory=dict)

    def build_controller(self) -> Controller:
        try:
            return self.controller.build(self.system)
        except ParameterError as exc:
            raise ConfigError("controller", str(exc)) from exc


def _float(raw, path):
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(path, f"expected a number, got {raw!r}") from None
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    return value


def _int(raw, path):
    try:
        value = int(str(raw).strip())
    except ValueError:
        raise ConfigError(path, f"expected an integer, got {raw!r}") from None
    return value


def _bool(raw, path):
    s = str(raw).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(path, f"expected a boolean, got {raw!r}")


def _float_list(raw, path):
    items = [s for s in str(raw).replace(";", ",").split(",") if s.strip()]
    if not items:
        raise ConfigError(path, "empty list")
    return [_float(s, path) for s in items]


def parse_state(raw, path="initial_state") -> Tuple[float, float, float]:
    key = str(raw).strip().lower()
    if key in NAMED_STATES:
        return NAMED_STATES[key]
    parts = [s for s in key.replace("(", "").replace(")", "").split(",") if s.strip()]
    if len(parts) != 3:
        raise ConfigError(path, f"expected a Bloch triple or one of {sorted(NAMED_STATES)}")
    v = tuple(_float(s, path) for s in parts)
    try:
        BlochVector(*v)
    except DomainError as exc:
        raise ConfigError(path, str(exc)) from None
    return v


def read_pairs(text: str) -> Dict[str, str]:
    """Parse ``key = value`` lines; ``#`` and ``;`` start comments."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[root]\n" + text)
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc).replace("\n", " ")) from None
    return dict(parser["root"])


def from_pairs(pairs: Dict[str, str], base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Build a validated :class:`ExperimentConfig` from raw key/value pairs."""
    cfg = base or ExperimentConfig()
    for key in pairs:
        if key not in KEYS:
            raise ConfigError(key, "unknown key")
    get = pairs.get

    sys_kw = {}
    for key, attr in (("system.omega_eg", "omega_eg"), ("system.eta", "eta"), ("system.m", "big_m")):
        if key in pairs:
            sys_kw[attr] = _float(pairs[key], key)
    try:
        system = replace(cfg.system, **sys_kw)
    except DomainError as exc:
        raise ConfigError("system", str(exc)) from None

    ctrl = cfg.controller
    ctrl_kw = {}
    if "controller.kind" in pairs:
        kind = pairs["controller.kind"].strip().lower()
        if kind not in ("zero", "feedback"):
            raise ConfigError("controller.kind", "expected 'zero' or 'feedback'")
        ctrl_kw["kind"] = kind
    for key, attr in (("controller.alpha", "alpha"), ("controller.beta", "beta"),
                      ("controller.gamma", "gamma"), ("controller.lambda", "lam")):
        if key in pairs:
            ctrl_kw[attr] = _float(pairs[key], key)
    if "controller.target" in pairs:
        try:
            ctrl_kw["target"] = TargetState.parse(pairs["controller.target"])
        except DomainError as exc:
            raise ConfigError("controller.target", str(exc)) from None
    ctrl = replace(ctrl, **ctrl_kw)

    initial = parse_state(pairs["initial_state"]) if "initial_state" in pairs else cfg.initial_state

    step_kw = {}
    if "step.dt" in pairs:
        step_kw["dt"] = _float(pairs["step.dt"], "step.dt")
    elif "system.m" in pairs and base is None:
        step_kw["dt"] = 1e-3 / system.big_m
    if "step.t_final" in pairs:
        step_kw["t_final"] = _float(pairs["step.t_final"], "step.t_final")
    if "step.scheme" in pairs:
        try:
            step_kw["scheme"] = Scheme.parse(pairs["step.scheme"])
        except DomainError as exc:
            raise ConfigError("step.scheme", str(exc)) from None
    if "step.record_stride" in pairs:
        step_kw["record_stride"] = _int(pairs["step.record_stride"], "step.record_stride")
    if "step.literal_correction" in pairs:
        step_kw["literal_correction"] = _bool(pairs["step.literal_correction"], "step.literal_correction")
    try:
        step = replace(cfg.step, **step_kw).check(system)
    except DomainError as exc:
        raise ConfigError("step", str(exc)) from None

    n = _int(get("ensemble.n"), "ensemble.n") if "ensemble.n" in pairs else cfg.n
    if n < 1:
        raise ConfigError("ensemble.n", "must be >= 1")
    seed = _int(get("ensemble.seed"), "ensemble.seed") if "ensemble.seed" in pairs else cfg.master_seed
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("ensemble.seed", "must be an unsigned 64-bit integer")
    workers = _int(get("ensemble.workers"), "ensemble.workers") if "ensemble.workers" in pairs else cfg.workers
    if workers is not None and workers < 1:
        raise ConfigError("ensemble.workers", "must be >= 1")

    epsilon = _float(get("analysis.epsilon"), "analysis.epsilon") if "analysis.epsilon" in pairs else cfg.epsilon
    if not 0 < epsilon < 0.5:
        raise ConfigError("analysis.epsilon", "must lie in (0, 0.5)")
    delta = _float(get("analysis.delta"), "analysis.delta") if "analysis.delta" in pairs else cfg.delta
    if not 0 < delta < 1:
        raise ConfigError("analysis.delta", "must lie in (0, 1)")
    radius = (_float(get("analysis.converge_radius"), "analysis.converge_radius")
              if "analysis.converge_radius" in pairs else cfg.converge_radius)
    tail = cfg.tail_window
    if "analysis.tail_lo" in pairs or "analysis.tail_hi" in pairs:
        lo = _float(get("analysis.tail_lo", "0"), "analysis.tail_lo")
        hi = _float(get("analysis.tail_hi", str(step.t_final)), "analysis.tail_hi")
        if not lo < hi:
            raise ConfigError("analysis.tail_lo", "tail window must satisfy lo < hi")
        tail = (lo, hi)
    target = cfg.analysis_target
    if "analysis.target" in pairs:
        try:
            target = TargetState.parse(pairs["analysis.target"])
        except DomainError as exc:
            raise ConfigError("analysis.target", str(exc)) from None

    sweep = dict(cfg.sweep)
    for name in ("alpha", "beta", "gamma", "lambda"):
        key = f"sweep.{name}"
        if key in pairs:
            sweep[name] = _float_list(pairs[key], key)

    return ExperimentConfig(
        system=system, controller=ctrl, initial_state=initial, step=step, n=n, master_seed=seed,
        workers=workers, epsilon=epsilon, delta=delta, converge_radius=radius, tail_window=tail,
        analysis_target=target, out_dir=get("outputs.dir", cfg.out_dir).strip(),
        prefix=get("outputs.prefix", cfg.prefix).strip(), sweep=sweep)


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, str]] = None) -> ExperimentConfig:
    """Read ``path`` (if any) and apply ``overrides``; flags beat the file."""
    pairs = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                pairs = read_pairs(fh.read())
        except OSError as exc:
            raise ConfigError("--config", str(exc)) from None
    pairs.update(overrides or {})
    return from_pairs(pairs)
