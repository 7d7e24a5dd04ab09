"""Duty-cycle MPP trackers built on the fuzzy engine.

``conventional`` climbs the P-V curve using the measured slope dP/dV.
``anfis`` and ``ica-nn`` regulate the stack voltage onto a reference V_max
supplied by a trained estimator.  Both feed the same 7x7 fuzzy controller;
only the error signal and the output orientation differ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .converter import ConverterParams
from .errors import ConfigError
from .fuzzy import FuzzySystem

METHODS = ("anfis", "ica-nn", "conventional")
REFERENCE_METHODS = ("anfis", "ica-nn")


@dataclass(frozen=True)
class TrackerState:
    prev_power: float
    prev_voltage: float
    prev_error: float
    duty: float


@dataclass(frozen=True)
class ControllerConfig:
    """Tick period and fuzzy input/output scaling for one tracker.

    ``gain_e`` and ``gain_ce`` map the raw error and its change onto the
    [-1, 1] input universes; ``gain_dd`` scales the [-dd_max, dd_max]
    output universe.
    """

    sample_period: float = 1e-3
    gain_e: float = 0.04
    gain_ce: float = 0.5
    gain_dd: float = 1.0
    slope_guard_eps: float = 1e-4
    dd_max: float = 0.01
    probe_dd: float = 0.005

    def __post_init__(self):
        for name in ("sample_period", "gain_e", "gain_ce", "gain_dd",
                     "slope_guard_eps", "dd_max"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"controller {name} must be positive")

    @classmethod
    def for_method(cls, method, **overrides):
        if method not in METHODS:
            raise ConfigError(f"unknown method {method!r}; choose from {METHODS}")
        base = dict(DEFAULT_GAINS[method])
        base.update(overrides)
        return cls(**base)


# Reference trackers see a voltage error in V; the conventional tracker sees
# a P-V slope in W/V, hence very different input scalings.
DEFAULT_GAINS = {
    "anfis": dict(gain_e=0.04, gain_ce=0.5),
    "ica-nn": dict(gain_e=0.04, gain_ce=0.5),
    "conventional": dict(gain_e=0.05, gain_ce=0.001),
}


def _sat(x):
    return -1.0 if x < -1.0 else (1.0 if x > 1.0 else x)


def conventional_step(fuzzy: FuzzySystem, cfg: ControllerConfig, state: TrackerState,
                      p_k, v_k, d_mid=0.5):
    """Slope-driven hill-climbing step; returns ``(dD, new_state)``.

    A positive slope means the operating point is left of the MPP (voltage
    too low, current too high), so the duty cycle must fall.  With no slope
    information yet, the duty is probed toward ``d_mid`` so that a start at
    either clamp still moves.
    """
    dv = v_k - state.prev_voltage
    if abs(dv) < cfg.slope_guard_eps:
        if state.prev_error == 0.0:
            # No slope information at all: perturb to start climbing.
            probe = cfg.probe_dd if state.duty <= d_mid else -cfg.probe_dd
            return cfg.gain_dd * probe, TrackerState(p_k, v_k, 0.0, state.duty)
        e = state.prev_error
    else:
        e = (p_k - state.prev_power) / dv
    ce = e - state.prev_error
    dd = -cfg.gain_dd * fuzzy(_sat(cfg.gain_e * e), _sat(cfg.gain_ce * ce))
    return dd, TrackerState(p_k, v_k, e, state.duty)


def reference_step(fuzzy: FuzzySystem, cfg: ControllerConfig, state: TrackerState,
                   v_fc, v_max, p_k=None):
    """Voltage-reference step; returns ``(dD, new_state)``.

    Stack voltage above the reference means the current is too low, so a
    positive error raises the duty cycle.
    """
    e = v_fc - v_max
    ce = e - state.prev_error
    dd = cfg.gain_dd * fuzzy(_sat(cfg.gain_e * e), _sat(cfg.gain_ce * ce))
    prev_p = state.prev_power if p_k is None else p_k
    return dd, TrackerState(prev_p, v_fc, e, state.duty)


@dataclass(frozen=True)
class PlantSample:
    temp_T: float
    lambda_m: float
    v_fc: float
    p_fc: float


def tracker_tick(method, sample: PlantSample, estimator, state: TrackerState,
                 fuzzy: FuzzySystem, cfg: ControllerConfig, conv: ConverterParams):
    """Run one controller tick and return ``(new_duty, dD, new_state)``.

    ``estimator`` maps ``(T, lambda)`` to V_max in volts and is ignored by
    the conventional tracker.
    """
    if method == "conventional":
        dd, state = conventional_step(fuzzy, cfg, state, sample.p_fc, sample.v_fc,
                                      conv.d_mid)
    elif method in REFERENCE_METHODS:
        if estimator is None:
            raise ConfigError(f"method {method!r} needs a trained estimator")
        v_max = float(estimator(sample.temp_T, sample.lambda_m))
        dd, state = reference_step(fuzzy, cfg, state, sample.v_fc, v_max, sample.p_fc)
    else:
        raise ConfigError(f"unknown method {method!r}; choose from {METHODS}")
    if not math.isfinite(dd):
        dd = 0.0
    duty = min(max(state.duty + dd, conv.d_min), conv.d_max)
    return duty, dd, replace(state, duty=duty)


def initial_state(sample: PlantSample, duty):
    return TrackerState(sample.p_fc, sample.v_fc, 0.0, duty)
