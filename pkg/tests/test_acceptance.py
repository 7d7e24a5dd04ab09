"""End-to-end acceptance criteria.

Each test evaluates one criterion, prints a ``criterion N: PASS|FAIL`` line
with the measured numbers and then asserts.  The summary lines are also
repeated at the end of the pytest run (see conftest.py).  Run
``pytest tests/test_acceptance.py -v -s`` to watch them as they finish.
"""

import dataclasses
import math
import time

import numpy as np
import pytest

from fcmppt.anfis import anfis_forward, anfis_gradients, anfis_loss, anfis_train
from fcmppt.converter import ConverterParams, ConverterState, coupled_plant_step
from fcmppt.fuelcell import (OperatingConditions, StackParams, cell_voltage,
                             concentration_loss, nernst_voltage, ohmic_loss,
                             oxygen_concentration, sweep)
from fcmppt.fuzzy import Aggregate, FuzzySystem, LinguisticVariable, defuzzify_centroid
from fcmppt.ica import IcaConfig, ica_train, mlp_forward
from fcmppt.metrics import correlation
from fcmppt.modelio import dumps
from fcmppt.oracle import find_mpp, generate_dataset, sweep_upper, training_grid
from fcmppt.oracle import testing_grid as held_out_grid
from fcmppt.simulation import (FIXED_CONDITIONS, evaluate_trace, fixed_scenario,
                               run_scenario, temperature_step_scenario, water_step_scenario)

RESULTS = {}
PROPOSED = ("anfis", "ica-nn")
METHODS = PROPOSED + ("conventional",)


def report(n, checks):
    """Record and print one criterion; ``checks`` is a list of (label, ok)."""
    ok = all(c for _, c in checks)
    failed = [label for label, c in checks if not c]
    detail = "; ".join(label for label, _ in checks)
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} | {detail}"
    if failed:
        line += " | failed: " + "; ".join(failed)
    RESULTS[n] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def stack():
    return StackParams()


@pytest.fixture(scope="module")
def data(stack):
    train = generate_dataset(stack, *training_grid())
    test = generate_dataset(stack, *held_out_grid())
    x, y = train.normalized()
    xt, yt = test.normalized(train.norm)
    return train, x, y, xt, yt


@pytest.fixture(scope="module")
def trained(data):
    train, x, y, _, _ = data
    return {"anfis": anfis_train(x, y, 70, norm=train.norm)[0],
            "ica-nn": ica_train(IcaConfig(), x, y, norm=train.norm).network}


def test_criterion_1_model_sanity(stack):
    t0 = time.perf_counter()
    monotone = unimodal = True
    for t in np.linspace(293.0, 363.0, 15):
        for lam in np.linspace(9.0, 14.0, 6):
            c = sweep(stack, t, lam, 1000)
            monotone &= bool(np.all(np.diff(c.voltage) < 0))
            s = np.sign(np.diff(c.power))
            unimodal &= np.count_nonzero(np.diff(s[s != 0])) == 1
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(500):
        t, i = rng.uniform(293, 363), rng.uniform(1, 150)
        l1, l2 = rng.uniform(9, 14, 2)
        a, b = OperatingConditions(t, l1, i), OperatingConditions(t, l2, i)
        lhs = cell_voltage(stack, a) - cell_voltage(stack, b)
        worst = max(worst, abs(lhs - (ohmic_loss(stack, b) - ohmic_loss(stack, a))))
    e0 = nernst_voltage(298.15)
    c_o2 = oxygen_concentration(298.15)
    v_con = concentration_loss(stack, stack.i_limit * (1 - 1 / math.e), 298.15)
    elapsed = time.perf_counter() - t0
    report(1, [
        ("V(I) strictly decreasing", monotone),
        ("P(I) unimodal", unimodal),
        (f"lambda identity max err {worst:.1e} <= 1e-12", worst <= 1e-12),
        (f"E_Nernst {e0:.6f} = 1.229", abs(e0 - 1.229) < 1e-9),
        (f"C_O2 {c_o2:.5e} = 1.0461e-6", abs(c_o2 - 1.0461e-6) < 1e-9),
        (f"V_con {v_con:.6f} = 0.012845", abs(v_con - 0.012845) < 1e-6),
        (f"runtime {elapsed:.1f}s < 10s", elapsed < 10),
    ])


def test_criterion_2_oracle(stack):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst, beaten = 0.0, True
    for _ in range(100):
        t, lam = rng.uniform(293, 363), rng.uniform(9, 14)
        mpp = find_mpp(stack, t, lam)
        p_ref = sweep(stack, t, lam, 10_000, i_max=sweep_upper(stack, lam)).power.max()
        worst = max(worst, abs(mpp.p_max - p_ref) / p_ref)
        beaten &= mpp.p_max >= p_ref * (1 - 1e-9)
    p_t = [find_mpp(stack, t, 12.0).p_max for t in np.linspace(313.0, 343.0, 7)]
    p_l = [find_mpp(stack, 328.0, lam).p_max for lam in np.linspace(9.0, 14.0, 6)]
    elapsed = time.perf_counter() - t0
    report(2, [
        (f"max |golden - sweep| {worst:.1e} <= 1e-6", worst <= 1e-6),
        ("golden >= dense sweep", beaten),
        ("P_max increasing in T", bool(np.all(np.diff(p_t) > 0))),
        ("P_max increasing in lambda", bool(np.all(np.diff(p_l) > 0))),
        (f"runtime {elapsed:.1f}s < 30s", elapsed < 30),
    ])


def test_criterion_3_anfis(data):
    train, x, y, xt, yt = data
    t0 = time.perf_counter()
    model, trace = anfis_train(x, y, 70, norm=train.norm)
    elapsed = time.perf_counter() - t0
    corr = correlation(anfis_forward(model, xt[:, 0], xt[:, 1]), yt)
    # central-difference check of the premise gradient at the trained point
    _, dc, ds = anfis_gradients(model, x, y)
    worst, h = 0.0, 1e-6
    for name, grad in (("centers", dc), ("sigmas", ds)):
        for idx in np.ndindex(2, 3):
            up, dn = getattr(model, name).copy(), getattr(model, name).copy()
            up[idx] += h
            dn[idx] -= h
            num = (anfis_loss(_with(model, name, up), x, y)
                   - anfis_loss(_with(model, name, dn), x, y)) / (2 * h)
            worst = max(worst, abs(grad[idx] - num) / max(abs(num), 1e-8))
    report(3, [
        (f"train RMSE {trace[-1]:.2e} <= 0.01", trace[-1] <= 0.01),
        (f"test corr {corr:.5f} >= 0.98", corr >= 0.98),
        (f"gradient rel err {worst:.1e} <= 1e-5", worst <= 1e-5),
        (f"runtime {elapsed:.1f}s < 60s", elapsed < 60),
    ])


def _with(model, name, value):
    return dataclasses.replace(model, **{name: value})


def test_criterion_4_ica(data):
    train, x, y, xt, yt = data
    t0 = time.perf_counter()
    res = ica_train(IcaConfig(n_countries=75, n_imperialists=8, n_decades=65, rng_seed=42),
                    x, y, norm=train.norm)
    elapsed = time.perf_counter() - t0
    corr = correlation(mlp_forward(res.network, xt[:, 0], xt[:, 1]), yt)
    trace = res.best_cost_trace
    report(4, [
        (f"train MSE {trace[-1]:.2e} <= 0.01", trace[-1] <= 0.01),
        (f"test corr {corr:.5f} >= 0.98", corr >= 0.98),
        ("best cost non-increasing", bool(np.all(np.diff(trace) <= 0))),
        ("population 75 every decade", all(n == 75 for n in res.population_counts)),
        (f"runtime {elapsed:.1f}s < 120s", elapsed < 120),
    ])


def test_criterion_5_fixed_conditions(stack, trained):
    t0 = time.perf_counter()
    checks = []
    for temp, lam in FIXED_CONDITIONS:
        acc = {}
        for m in METHODS:
            tr = run_scenario(fixed_scenario(temp, lam, m), stack, estimators=trained)
            acc[m] = evaluate_trace(tr)[0].accuracy
        tag = f"{temp - 273.15:.0f}C/{lam:g}"
        text = "/".join(f"{acc[m]:.2f}" for m in METHODS)
        checks.append((f"{tag} acc {text}", all(acc[m] >= 97 for m in PROPOSED)
                       and acc["conventional"] >= 93
                       and all(acc[m] >= acc["conventional"] for m in PROPOSED)))
    elapsed = time.perf_counter() - t0
    checks.append((f"runtime {elapsed:.1f}s < 60s", elapsed < 60))
    report(5, checks)


def _step_checks(stack, trained, make):
    segs, traces = {}, {}
    for m in METHODS:
        traces[m] = run_scenario(make(m), stack, estimators=trained)
        segs[m] = evaluate_trace(traces[m])
    recovery = max(s.recovery for m in METHODS for s in segs[m][1:])
    over = max(float(np.max(tr.p_fc / tr.p_oracle)) for tr in traces.values())
    faster = all(segs[m][k].settling < segs["conventional"][k].settling
                 for m in PROPOSED for k in range(3))
    ts = " ".join(f"{m}=" + "/".join(f"{s.settling:.3f}" for s in segs[m]) for m in METHODS)
    return segs, [
        (f"worst recovery {recovery:.3f}s <= 1s", recovery <= 1.0),
        (f"settling {ts}", faster),
        (f"max P/P_oracle {over:.5f} <= 1.001", over <= 1.001),
    ]


def test_criterion_6_temperature_step(stack, trained):
    _, checks = _step_checks(stack, trained, temperature_step_scenario)
    report(6, checks)


def test_criterion_7_water_step(stack, trained):
    segs, checks = _step_checks(stack, trained, water_step_scenario)
    gains = [100 * (segs[m][k].mean_power / segs["conventional"][k].mean_power - 1)
             for m in PROPOSED for k in range(3)]
    checks.append((f"min energy gain {min(gains):.2f}% >= 0.5%", min(gains) >= 0.5))
    report(7, checks)


def test_criterion_8_determinism(stack, data):
    train, x, y, _, _ = data
    grids = (np.array([300.0, 330.0]), np.array([10.0, 13.0]))
    same_data = generate_dataset(stack, *grids).to_csv() == generate_dataset(
        stack, *grids).to_csv()
    anfis = [dumps(anfis_train(x, y, 5, norm=train.norm)[0]) for _ in range(2)]
    ica = [dumps(ica_train(IcaConfig(n_decades=10), x, y, norm=train.norm).network)
           for _ in range(2)]
    est = {"anfis": anfis_train(x, y, 5, norm=train.norm)[0]}
    sc = temperature_step_scenario("anfis", duration=4.2)
    sims = [run_scenario(sc, stack, estimators=est).to_csv() for _ in range(2)]
    conv = ConverterParams()
    finals = []
    for dt in (conv.plant_dt, conv.plant_dt / 2):
        state = ConverterState(0.0, 0.0, 0.75)
        for _ in range(int(round(1.0 / dt))):
            state, _, _ = coupled_plant_step(stack, 335.0, 12.0, conv, state, dt)
        finals.append(state)
    d_i = abs(finals[0].inductor_current / finals[1].inductor_current - 1)
    d_v = abs(finals[0].output_voltage / finals[1].output_voltage - 1)
    report(8, [
        ("dataset CSV identical", same_data),
        ("ANFIS model identical", anfis[0] == anfis[1]),
        ("ICA model identical", ica[0] == ica[1]),
        ("simulation trace identical", sims[0] == sims[1]),
        (f"step halving rel change {max(d_i, d_v):.1e} < 1e-6", max(d_i, d_v) < 1e-6),
    ])


def test_criterion_9_fuzzy_properties():
    fz = FuzzySystem.default()
    rng = np.random.default_rng(9)
    pts = rng.uniform(-1.5, 1.5, (100_000, 2))
    outs = np.array([fz(e, ce) for e, ce in pts])
    finite = bool(np.all(np.isfinite(outs)))
    bounded = bool(np.all(np.abs(outs) <= fz.out_var.hi + 1e-15))
    anti = max(abs(outs[k] + fz(-e, -ce)) for k, (e, ce) in enumerate(pts[:10_000]))
    origin = fz(0.0, 0.0)
    var = LinguisticVariable.symmetric("o", 1.0)
    mid = np.zeros(7)
    mid[3] = 0.6
    pair = np.zeros(7)
    pair[[1, 5]] = 0.4
    cases = [defuzzify_centroid(Aggregate(mid, var)),
             defuzzify_centroid(Aggregate(pair, var)),
             defuzzify_centroid(Aggregate(np.ones(7), var))]
    report(9, [
        ("100000 inputs give finite output (no empty aggregate)", finite),
        ("outputs within output universe", bounded),
        (f"antisymmetry max err {anti:.1e} <= 1e-9", anti <= 1e-9),
        (f"f(0,0) = {origin:.1e}", abs(origin) <= 1e-12),
        ("symmetric aggregates centroid 0", max(abs(c) for c in cases) <= 1e-12),
    ])
