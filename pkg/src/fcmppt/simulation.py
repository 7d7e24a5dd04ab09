"""Closed-loop scenario runner and per-segment tracking metrics.

The plant integrates at ``ConverterParams.plant_dt`` between controller
ticks; every tick the trace records one row of true plant values while the
tracker sees sensor readings with optional seeded Gaussian noise.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .controllers import (METHODS, REFERENCE_METHODS, ControllerConfig, PlantSample,
                          initial_state, tracker_tick)
from .converter import ConverterParams, apply_duty, coupled_plant_step, steady_state
from .errors import ConfigError, DomainError, EnvelopeError
from .fuelcell import StackParams, polarization
from .fuzzy import FuzzySystem
from .oracle import find_mpp

TRACE_HEADER = ("t_s", "T_K", "lambda", "duty", "I_A", "V_fc_V", "P_fc_W", "P_oracle_W")


@dataclass(frozen=True)
class Scenario:
    """Piecewise-constant (T, lambda) schedules plus tracker selection.

    ``profile_T`` and ``profile_lambda`` are sequences of ``(t, value)``
    pairs starting at t=0.  ``sensor_noise`` is the relative standard
    deviation of the voltage and current readings seen by the tracker.
    """

    duration: float
    profile_T: tuple
    profile_lambda: tuple
    method: str = "anfis"
    seed: int = 42
    sensor_noise: float = 0.005
    initial_duty: float = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "profile_T", _as_schedule(self.profile_T, "profile_T"))
        object.__setattr__(self, "profile_lambda",
                           _as_schedule(self.profile_lambda, "profile_lambda"))
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not self.duration > 0:
            raise ConfigError("scenario duration must be positive")
        if self.sensor_noise < 0:
            raise ConfigError("sensor_noise must be >= 0")

    def with_method(self, method):
        return Scenario(self.duration, self.profile_T, self.profile_lambda, method,
                        self.seed, self.sensor_noise, self.initial_duty, self.name)

    @property
    def step_times(self):
        times = {t for t, _ in self.profile_T[1:]} | {t for t, _ in self.profile_lambda[1:]}
        return sorted(t for t in times if t < self.duration)

    def conditions_at(self, t):
        return _lookup(self.profile_T, t), _lookup(self.profile_lambda, t)


def _as_schedule(points, name):
    sched = tuple((float(t), float(v)) for t, v in points)
    if not sched or sched[0][0] != 0.0:
        raise ConfigError(f"{name} must start at t=0")
    if any(b[0] <= a[0] for a, b in zip(sched, sched[1:])):
        raise ConfigError(f"{name} times must be strictly increasing")
    return sched


def _lookup(schedule, t):
    value = schedule[0][1]
    for ts, v in schedule:
        if ts <= t + 1e-12:
            value = v
    return value


def temperature_step_scenario(method="anfis", seed=42, duration=8.0, **kw):
    """lambda = 12; 50 C -> 70 C at 4 s -> 60 C at 6 s."""
    return Scenario(duration, ((0.0, 323.15), (4.0, 343.15), (6.0, 333.15)),
                    ((0.0, 12.0),), method, seed, name="temperature-step", **kw)


def water_step_scenario(method="anfis", seed=42, duration=8.0, **kw):
    """T = 55 C; lambda 9 -> 13 at 4 s -> 11 at 6 s."""
    return Scenario(duration, ((0.0, 328.15),),
                    ((0.0, 9.0), (4.0, 13.0), (6.0, 11.0)), method, seed,
                    name="water-step", **kw)


FIXED_CONDITIONS = ((313.15, 12.0), (328.15, 13.0), (343.15, 9.0))


def fixed_scenario(temp_T, lambda_m, method="anfis", seed=42, duration=2.0, **kw):
    return Scenario(duration, ((0.0, temp_T),), ((0.0, lambda_m),), method, seed,
                    name=f"fixed-{temp_T:g}K-{lambda_m:g}", **kw)


@dataclass
class ScenarioTrace:
    t: np.ndarray
    temp_T: np.ndarray
    lambda_m: np.ndarray
    duty: np.ndarray
    current: np.ndarray
    v_fc: np.ndarray
    p_fc: np.ndarray
    p_oracle: np.ndarray
    method: str = ""
    step_times: list = field(default_factory=list)

    @classmethod
    def from_rows(cls, rows, method="", step_times=()):
        cols = np.array(rows, dtype=float).reshape(-1, len(TRACE_HEADER)).T
        return cls(*cols, method=method, step_times=list(step_times))

    def rows(self):
        return np.column_stack([self.t, self.temp_T, self.lambda_m, self.duty,
                                self.current, self.v_fc, self.p_fc, self.p_oracle])

    def __len__(self):
        return len(self.t)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for row in self.rows():
            w.writerow([f"{v:.9g}" for v in row])
        return buf.getvalue()


class OracleEstimator:
    """V_max from the brute-force oracle; a perfect reference for testing."""

    def __init__(self, stack: StackParams):
        self.stack = stack
        self._cache = {}

    def __call__(self, temp_T, lambda_m):
        key = (float(temp_T), float(lambda_m))
        if key not in self._cache:
            self._cache[key] = find_mpp(self.stack, *key).v_max
        return self._cache[key]


def run_scenario(scenario: Scenario, stack=None, converter=None, controller=None,
                 estimators=None, fuzzy=None) -> ScenarioTrace:
    """Simulate one tracker on one scenario.

    ``estimators`` maps method name to a ``(T, lambda) -> V_max`` callable
    and must hold an entry for reference methods.  Schedule timestamps
    must fall on controller ticks.  Raises EnvelopeError, carrying the
    partial trace, if the plant leaves its operating envelope.
    """
    stack = stack or StackParams()
    converter = converter or ConverterParams()
    controller = controller or ControllerConfig.for_method(scenario.method)
    fuzzy = fuzzy or FuzzySystem.default(controller.dd_max)
    estimators = estimators or {}
    method = scenario.method
    estimator = estimators.get(method)
    if method in REFERENCE_METHODS and estimator is None:
        raise ConfigError(f"method {method!r} needs a trained estimator before t=0")

    ts = controller.sample_period
    n_sub = int(round(ts / converter.plant_dt))
    if n_sub < 1 or not math.isclose(n_sub * converter.plant_dt, ts, rel_tol=1e-9):
        raise ConfigError("sample_period must be a whole multiple of plant_dt")
    n_ticks = int(round(scenario.duration / ts))
    for t_step, _ in scenario.profile_T + scenario.profile_lambda:
        if not math.isclose(t_step / ts, round(t_step / ts), abs_tol=1e-6):
            raise ConfigError(f"schedule time {t_step} is not on a controller tick")
    for _, temp in scenario.profile_T:
        if not stack.temp_range[0] <= temp <= stack.temp_range[1]:
            raise DomainError(f"scheduled T={temp} K outside {stack.temp_range}")
    for _, lam in scenario.profile_lambda:
        if not 0.634 < lam <= stack.lambda_max:
            raise DomainError(f"scheduled lambda={lam} outside (0.634, {stack.lambda_max}]")

    rng = np.random.default_rng(scenario.seed)
    noise = scenario.sensor_noise
    oracle_cache = {}

    def conditions(temp, lam):
        key = (temp, lam)
        if key not in oracle_cache:
            oracle_cache[key] = (polarization(stack, temp, lam),
                                 find_mpp(stack, temp, lam).p_max)
        return oracle_cache[key]

    temp, lam = scenario.conditions_at(0.0)
    v_stack, p_oracle = conditions(temp, lam)
    duty0 = converter.d_mid if scenario.initial_duty is None else scenario.initial_duty
    plant = steady_state(stack, temp, lam, converter, duty0)
    v0 = v_stack(plant.inductor_current)
    tracker = initial_state(PlantSample(temp, lam, v0, v0 * plant.inductor_current),
                            plant.duty)

    rows = []
    try:
        for k in range(n_ticks):
            t = k * ts
            new_temp, new_lam = scenario.conditions_at(t)
            if (new_temp, new_lam) != (temp, lam):
                temp, lam = new_temp, new_lam
                v_stack, p_oracle = conditions(temp, lam)
            current = plant.inductor_current
            v = v_stack(current)
            rows.append((t, temp, lam, plant.duty, current, v, v * current, p_oracle))
            if noise:
                z1, z2 = rng.standard_normal(2)
                v_meas, i_meas = v * (1.0 + noise * z1), current * (1.0 + noise * z2)
            else:
                v_meas, i_meas = v, current
            duty, _, tracker = tracker_tick(
                method, PlantSample(temp, lam, v_meas, v_meas * i_meas), estimator,
                tracker, fuzzy, controller, converter)
            plant = apply_duty(converter, plant, duty)
            for _ in range(n_sub):
                plant, _, _ = coupled_plant_step(stack, temp, lam, converter, plant,
                                                 v_stack=v_stack)
    except DomainError as exc:
        partial = ScenarioTrace.from_rows(rows, method, scenario.step_times)
        raise EnvelopeError(f"simulation aborted at t={t:.4f} s: {exc}", partial) from exc
    return ScenarioTrace.from_rows(rows, method, scenario.step_times)


@dataclass(frozen=True)
class SegmentMetrics:
    start: float
    end: float
    temp_T: float
    lambda_m: float
    p_oracle: float
    settling: float
    settled: bool
    accuracy: float
    final_power: float
    mean_power: float
    recovery: float


def evaluate_trace(trace: ScenarioTrace, step_times=None, band_pct=2.0,
                   recovery_band_pct=5.0):
    """Settling time, accuracy and power for each steady segment of a trace.

    Segments run from one step (or t=0) to the next step (or trace end).
    ``recovery`` is the delay until power first comes within
    ``recovery_band_pct`` of the segment's oracle power (inf if never).
    """
    steps = trace.step_times if step_times is None else list(step_times)
    edges = [trace.t[0], *steps, trace.t[-1] + 1.0]
    out = []
    for a, b in zip(edges, edges[1:]):
        m = (trace.t >= a - 1e-9) & (trace.t < b - 1e-9)
        t, p = trace.t[m], trace.p_fc[m]
        p_orc = float(trace.p_oracle[m][-1])
        s = metrics.settling_time(t, p, a, band_pct)
        inside = np.flatnonzero(np.abs(p - p_orc) <= p_orc * recovery_band_pct / 100.0)
        recovery = float(t[inside[0]] - a) if inside.size else math.inf
        out.append(SegmentMetrics(
            float(a), float(min(b, trace.t[-1])), float(trace.temp_T[m][-1]),
            float(trace.lambda_m[m][-1]), p_orc, s.seconds, s.settled,
            metrics.accuracy_pct(s.final, p_orc), s.final, float(np.mean(p)), recovery))
    return out


COMPARE_HEADER = ("method", "segment", "T_K", "lambda", "T_s_s", "settled",
                  "accuracy_pct", "max_power_W", "mean_power_W")
METHOD_LABELS = {"anfis": "ANFIS", "ica-nn": "ICA-NN", "conventional": "Conventional"}


def compare_table(results):
    """Rows of the merged method comparison plus the oracle ("Actual") row.

    ``results`` maps method name to the list returned by evaluate_trace.
    """
    rows = []
    any_segments = next(iter(results.values()))
    for method, segs in results.items():
        for k, s in enumerate(segs, 1):
            rows.append((METHOD_LABELS.get(method, method), k, s.temp_T, s.lambda_m,
                         s.settling, s.settled, s.accuracy, s.final_power, s.mean_power))
    for k, s in enumerate(any_segments, 1):
        rows.append(("Actual", k, s.temp_T, s.lambda_m, None, None, 100.0, s.p_oracle,
                     s.p_oracle))
    return rows


def compare_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COMPARE_HEADER)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def plot_data_csv(traces):
    """One CSV with the time base, conditions and every method's power.

    Mirrors the power-versus-time panels: one column per tracker plus the
    theoretical maximum.
    """
    first = next(iter(traces.values()))
    cols = [("t_s", first.t), ("T_K", first.temp_T), ("lambda", first.lambda_m)]
    cols += [(f"P_{m}_W", tr.p_fc) for m, tr in traces.items()]
    cols.append(("P_oracle_W", first.p_oracle))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([c for c, _ in cols])
    for row in zip(*(v for _, v in cols)):
        w.writerow([f"{x:.9g}" for x in row])
    return buf.getvalue()
