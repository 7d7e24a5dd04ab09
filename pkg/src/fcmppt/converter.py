"""Averaged continuous-conduction boost converter feeding a resistive load."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from scipy.optimize import brentq

from .errors import DomainError, EnvelopeError, IntegrationError
from .fuelcell import I_EPS, StackParams, polarization


@dataclass(frozen=True)
class ConverterParams:
    inductance_L: float = 1e-3
    capacitance_C: float = 4.7e-3
    load_R: float = 10.0
    d_min: float = 0.05
    d_max: float = 0.95
    plant_dt: float = 20e-6

    def __post_init__(self):
        for name in ("inductance_L", "capacitance_C", "load_R", "plant_dt"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 < self.d_min < self.d_max < 1:
            raise DomainError(
                f"duty bounds must satisfy 0 < d_min < d_max < 1, got "
                f"[{self.d_min}, {self.d_max}]")
        if self.plant_dt > 0.1 * math.sqrt(self.inductance_L * self.capacitance_C):
            raise DomainError("plant_dt must be at most 1/10 of sqrt(L*C)")

    @property
    def d_mid(self):
        return 0.5 * (self.d_min + self.d_max)


@dataclass(frozen=True)
class ConverterState:
    inductor_current: float
    output_voltage: float
    duty: float


def converter_step(params: ConverterParams, state: ConverterState, v_fc, dt=None):
    """Advance the averaged boost equations by one classical RK4 step.

    ``v_fc`` is held constant over the step.  Inductor current and output
    voltage are clamped at zero from below (diode, no reverse conduction).
    """
    dt = params.plant_dt if dt is None else dt
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    inv_l = 1.0 / params.inductance_L
    inv_c = 1.0 / params.capacitance_C
    inv_r = 1.0 / params.load_R
    k = 1.0 - state.duty
    i0, v0 = state.inductor_current, state.output_voltage

    def f(i, v):
        return (v_fc - k * v) * inv_l, (k * i - v * inv_r) * inv_c

    a1, b1 = f(i0, v0)
    a2, b2 = f(i0 + 0.5 * dt * a1, v0 + 0.5 * dt * b1)
    a3, b3 = f(i0 + 0.5 * dt * a2, v0 + 0.5 * dt * b2)
    a4, b4 = f(i0 + dt * a3, v0 + dt * b3)
    i1 = i0 + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    v1 = v0 + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
    if not (math.isfinite(i1) and math.isfinite(v1)):
        raise IntegrationError(f"boost integration diverged at dt={dt}")
    return ConverterState(i1 if i1 > 0.0 else 0.0, v1 if v1 > 0.0 else 0.0, state.duty)


def apply_duty(params: ConverterParams, state: ConverterState, new_d):
    """Set the duty cycle, clamped to [d_min, d_max]."""
    d = min(max(new_d, params.d_min), params.d_max)
    return replace(state, duty=d)


def coupled_plant_step(fc: StackParams, temp_T, lambda_m, conv: ConverterParams,
                       state: ConverterState, dt=None, v_stack=None):
    """One quasi-static stack evaluation followed by one converter step.

    Returns ``(new_state, v_fc, p_fc)`` where the voltage and power are
    sampled at the incoming inductor current.  ``v_stack`` may be a
    precomputed :func:`fcmppt.fuelcell.polarization` closure.
    """
    current = state.inductor_current
    if current >= fc.i_limit:
        raise EnvelopeError(
            f"inductor current {current:.6g} A reached i_limit {fc.i_limit} A")
    if v_stack is None:
        v_stack = polarization(fc, temp_T, lambda_m)
    v_fc = v_stack(current)
    return converter_step(conv, state, v_fc, dt), v_fc, v_fc * current


def steady_state(fc: StackParams, temp_T, lambda_m, conv: ConverterParams, duty):
    """Equilibrium state for a fixed duty: stack curve meets R(1-D)^2 load line."""
    v_stack = polarization(fc, temp_T, lambda_m)
    r_refl = conv.load_R * (1.0 - duty) ** 2
    hi = min(fc.i_limit, (lambda_m - 0.634) / 3.0 * fc.area_A) * (1.0 - 1e-9)
    current = brentq(lambda i: v_stack(i) - r_refl * i, I_EPS, hi, xtol=1e-13, rtol=1e-15)
    v_fc = v_stack(current)
    return ConverterState(current, v_fc / (1.0 - duty), duty)
