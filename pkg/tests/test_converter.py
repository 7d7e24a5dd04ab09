import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fcmppt.converter import (ConverterParams, ConverterState, apply_duty,
                              converter_step, coupled_plant_step, steady_state)
from fcmppt.errors import DomainError, EnvelopeError, IntegrationError
from fcmppt.fuelcell import I_EPS, polarization
from fcmppt.oracle import find_mpp


def integrate(conv, state, v_fc, seconds, dt=None):
    dt = conv.plant_dt if dt is None else dt
    for _ in range(int(round(seconds / dt))):
        state = converter_step(conv, state, v_fc, dt)
    return state


def run_coupled(stack, conv, temp, lam, state, seconds, dt=None):
    dt = conv.plant_dt if dt is None else dt
    v_stack = polarization(stack, temp, lam)
    for _ in range(int(round(seconds / dt))):
        state, _, _ = coupled_plant_step(stack, temp, lam, conv, state, dt, v_stack)
    return state


def bisect_fixed_point(stack, conv, temp, lam, duty):
    """Independent load-line intersection by plain bisection."""
    v_stack = polarization(stack, temp, lam)
    r = conv.load_R * (1 - duty) ** 2
    lo, hi = I_EPS, stack.i_limit * (1 - 1e-9)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if v_stack(mid) - r * mid > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_equilibrium_is_stationary(conv):
    v_fc, d = 48.0, 0.6
    eq = ConverterState(v_fc / (conv.load_R * (1 - d) ** 2), v_fc / (1 - d), d)
    nxt = converter_step(conv, eq, v_fc)
    assert nxt.inductor_current == pytest.approx(eq.inductor_current, rel=1e-9)
    assert nxt.output_voltage == pytest.approx(eq.output_voltage, rel=1e-9)


def test_small_duty_gain_near_unity():
    conv = ConverterParams(d_min=1e-3)
    state = integrate(conv, ConverterState(0.0, 0.0, 1e-3), 50.0, 3.0)
    assert state.output_voltage == pytest.approx(50.0 / (1 - 1e-3), rel=1e-6)


def test_step_refinement(conv):
    start = ConverterState(0.0, 0.0, 0.4)
    coarse = integrate(conv, start, 45.0, 1.0)
    fine = integrate(conv, start, 45.0, 1.0, conv.plant_dt / 10)
    assert coarse.inductor_current == pytest.approx(fine.inductor_current, rel=1e-4)
    assert coarse.output_voltage == pytest.approx(fine.output_voltage, rel=1e-4)


@pytest.mark.parametrize("new_d, expected", [(0.5, 0.5), (1.2, 0.95), (-0.3, 0.05)])
def test_apply_duty_clamps(conv, new_d, expected):
    s = apply_duty(conv, ConverterState(3.0, 7.0, 0.5), new_d)
    assert s == ConverterState(3.0, 7.0, expected)


@settings(max_examples=200, deadline=None)
@given(d=st.floats(-10, 10), i=st.floats(0, 200), v=st.floats(0, 500),
       v_fc=st.floats(0, 100))
def test_step_keeps_state_physical(conv, d, i, v, v_fc):
    s = apply_duty(conv, ConverterState(i, v, 0.5), d)
    assert conv.d_min <= s.duty <= conv.d_max
    nxt = converter_step(conv, s, v_fc)
    assert nxt.inductor_current >= 0 and nxt.output_voltage >= 0


def test_zero_current_start_sees_open_circuit(stack, conv):
    _, v_fc, p_fc = coupled_plant_step(stack, 330.0, 12.0, conv, ConverterState(0.0, 0.0, 0.5))
    v_stack = polarization(stack, 330.0, 12.0)
    assert v_fc == v_stack(0.0)
    assert v_fc == pytest.approx(v_stack(I_EPS), rel=1e-5)
    assert p_fc == 0.0


def test_coupled_converges_to_load_line(stack, conv):
    d = 0.7
    state = run_coupled(stack, conv, 328.15, 12.0, ConverterState(0.0, 0.0, d), 1.0)
    i_star = bisect_fixed_point(stack, conv, 328.15, 12.0, d)
    assert state.inductor_current == pytest.approx(i_star, rel=1e-6)
    v_fc = polarization(stack, 328.15, 12.0)(state.inductor_current)
    assert state.output_voltage * (1 - d) == pytest.approx(v_fc, rel=1e-6)
    assert state.inductor_current * (1 - d) == pytest.approx(
        state.output_voltage / conv.load_R, rel=1e-6)


def test_steady_state_matches_bisection(stack, conv):
    for d in (0.1, 0.5, 0.8, 0.9):
        ss = steady_state(stack, 340.0, 10.0, conv, d)
        assert ss.inductor_current == pytest.approx(
            bisect_fixed_point(stack, conv, 340.0, 10.0, d), rel=1e-10)


def test_state_change_shrinks_after_transient(stack, conv):
    state = ConverterState(0.0, 0.0, 0.6)
    deltas = []
    for _ in range(10):
        nxt = run_coupled(stack, conv, 330.0, 11.0, state, 0.05)
        deltas.append(math.hypot(nxt.inductor_current - state.inductor_current,
                                 nxt.output_voltage - state.output_voltage))
        state = nxt
    assert np.all(np.diff(deltas[3:]) <= 1e-12)
    assert deltas[-1] < 1e-6 * deltas[0]


def test_current_increases_with_duty(stack, conv):
    currents = [steady_state(stack, 330.0, 12.0, conv, d).inductor_current
                for d in np.linspace(conv.d_min, conv.d_max, 40)]
    assert np.all(np.diff(currents) > 0)


def test_duty_sweep_reaches_oracle_power(stack, conv):
    v_stack = polarization(stack, 330.0, 12.0)
    best = max(v_stack(s.inductor_current) * s.inductor_current
               for s in (steady_state(stack, 330.0, 12.0, conv, d)
                         for d in np.linspace(conv.d_min, conv.d_max, 901)))
    assert best == pytest.approx(find_mpp(stack, 330.0, 12.0).p_max, rel=5e-3)
    assert best <= find_mpp(stack, 330.0, 12.0).p_max * (1 + 1e-9)


def test_step_halving_converged(stack, conv):
    start = ConverterState(0.0, 0.0, 0.75)
    a = run_coupled(stack, conv, 335.0, 12.0, start, 1.0)
    b = run_coupled(stack, conv, 335.0, 12.0, start, 1.0, conv.plant_dt / 2)
    assert a.inductor_current == pytest.approx(b.inductor_current, rel=1e-6)
    assert a.output_voltage == pytest.approx(b.output_voltage, rel=1e-6)


def test_envelope_and_divergence_errors(stack, conv):
    with pytest.raises(EnvelopeError):
        coupled_plant_step(stack, 330.0, 12.0, conv, ConverterState(stack.i_limit, 0.0, 0.5))
    with pytest.raises(IntegrationError, match="dt="):
        converter_step(conv, ConverterState(1.0, 1.0, 0.5), math.inf)
    with pytest.raises(DomainError):
        converter_step(conv, ConverterState(1.0, 1.0, 0.5), 10.0, dt=0.0)


@pytest.mark.parametrize("kw", [dict(inductance_L=0.0), dict(d_min=0.0), dict(d_max=1.0),
                                dict(d_min=0.6, d_max=0.5), dict(plant_dt=1e-3)])
def test_params_validation(kw):
    with pytest.raises(DomainError):
        ConverterParams(**kw)
