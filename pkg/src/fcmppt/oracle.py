"""Brute-force maximum-power-point oracle and training-data plumbing."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, OracleError
from .fuelcell import I_EPS, StackParams, polarization, sweep

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

DATASET_HEADER = ("T_K", "lambda", "V_max_V")
DEFAULT_T_RANGE = (293.0, 363.0)
DEFAULT_LAMBDA_RANGE = (9.0, 14.0)


@dataclass(frozen=True)
class MppResult:
    v_max: float
    i_max: float
    p_max: float
    temp_T: float
    lambda_m: float


def golden_section_max(f, a, b, tol=1e-6):
    """Maximize a unimodal scalar function on [a, b]; returns the abscissa."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def sweep_upper(params: StackParams, lambda_m):
    """Largest sweepable current: just below i_L and the membrane validity cap."""
    membrane_cap = (lambda_m - 0.634) / 3.0 * params.area_A
    return min(params.i_limit * (1.0 - 1e-6), membrane_cap * (1.0 - 1e-6))


def find_mpp(params: StackParams, temp_T, lambda_m, n_sweep=2000, tol=1e-6) -> MppResult:
    """Locate the stack maximum power point at fixed (T, lambda).

    A coarse current sweep brackets the maximum and golden-section search
    refines it.  Raises OracleError if the swept P-I curve has more than one
    local maximum.
    """
    lo_T, hi_T = params.temp_range
    if not lo_T <= temp_T <= hi_T:
        raise DomainError(f"temp_T={temp_T} outside valid range [{lo_T}, {hi_T}] K")
    if not 0.634 < lambda_m <= params.lambda_max:
        raise DomainError(f"lambda_m={lambda_m} outside (0.634, {params.lambda_max}]")
    curve = sweep(params, temp_T, lambda_m, n_sweep, i_max=sweep_upper(params, lambda_m))
    p = curve.power
    signs = np.sign(np.diff(p))
    signs = signs[signs != 0]
    changes = int(np.count_nonzero(np.diff(signs)))
    if changes != 1:
        raise OracleError(
            f"P-I curve at T={temp_T} K, lambda={lambda_m} has {changes} slope "
            "sign changes; expected exactly one interior maximum")
    k = int(np.argmax(p))
    lo = curve.current[max(k - 1, 0)]
    hi = curve.current[min(k + 1, len(p) - 1)]
    v_of_i = polarization(params, temp_T, lambda_m)
    i_best = golden_section_max(lambda i: v_of_i(i) * i, lo, hi, tol)
    v_best = v_of_i(i_best)
    return MppResult(v_best, i_best, v_best * i_best, float(temp_T), float(lambda_m))


@dataclass(frozen=True)
class NormSpec:
    """Per-signal min/max pair for the affine map onto [0, 1]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"NormSpec needs lo < hi, got ({self.lo}, {self.hi})")

    @classmethod
    def of(cls, values):
        values = np.asarray(values, dtype=float)
        return cls(float(values.min()), float(values.max()))


def normalize(x, spec: NormSpec):
    return (np.asarray(x, dtype=float) - spec.lo) / (spec.hi - spec.lo)


def denormalize(x, spec: NormSpec):
    return np.asarray(x, dtype=float) * (spec.hi - spec.lo) + spec.lo


@dataclass
class Dataset:
    """Rows of (T, lambda, V_max) with per-column normalization specs."""

    temp_T: np.ndarray
    lambda_m: np.ndarray
    v_max: np.ndarray
    norm: tuple = None

    def __post_init__(self):
        self.temp_T = np.asarray(self.temp_T, dtype=float)
        self.lambda_m = np.asarray(self.lambda_m, dtype=float)
        self.v_max = np.asarray(self.v_max, dtype=float)
        if not len(self.temp_T) == len(self.lambda_m) == len(self.v_max):
            raise ConfigError("dataset columns differ in length")
        pairs = set(zip(self.temp_T.tolist(), self.lambda_m.tolist()))
        if len(pairs) != len(self.temp_T):
            raise ConfigError("dataset contains duplicate (T, lambda) pairs")
        if self.norm is None:
            self.norm = (NormSpec.of(self.temp_T), NormSpec.of(self.lambda_m),
                         NormSpec.of(self.v_max))

    def __len__(self):
        return len(self.temp_T)

    def normalized(self, norm=None):
        """Return (X, y) in normalized units; X has shape (n, 2)."""
        t_spec, l_spec, v_spec = norm or self.norm
        x = np.column_stack([normalize(self.temp_T, t_spec),
                             normalize(self.lambda_m, l_spec)])
        return x, normalize(self.v_max, v_spec)

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(DATASET_HEADER)
        for row in zip(self.temp_T, self.lambda_m, self.v_max):
            w.writerow([f"{v:.9g}" for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or [h.strip() for h in rows[0]] not in (list(DATASET_HEADER),
                                                          ["T_K", "lambda", "V_max"]):
            raise ConfigError(f"{path}: expected header {','.join(DATASET_HEADER)}")
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
        if data.size == 0:
            raise ConfigError(f"{path}: no data rows")
        return cls(data[:, 0], data[:, 1], data[:, 2])


def training_grid(t_range=DEFAULT_T_RANGE, l_range=DEFAULT_LAMBDA_RANGE, n_t=25, n_l=10):
    return np.linspace(*t_range, n_t), np.linspace(*l_range, n_l)


def testing_grid(t_range=DEFAULT_T_RANGE, l_range=DEFAULT_LAMBDA_RANGE, n_t=25, n_l=10,
                 n_test_t=10, n_test_l=5):
    """Midpoints of the training grid cells, thinned to n_test_t x n_test_l."""
    t_train, l_train = training_grid(t_range, l_range, n_t, n_l)
    t_mid = 0.5 * (t_train[1:] + t_train[:-1])
    l_mid = 0.5 * (l_train[1:] + l_train[:-1])
    ti = np.unique(np.round(np.linspace(0, len(t_mid) - 1, n_test_t)).astype(int))
    li = np.unique(np.round(np.linspace(0, len(l_mid) - 1, n_test_l)).astype(int))
    return t_mid[ti], l_mid[li]


def generate_dataset(params: StackParams, t_grid, l_grid) -> Dataset:
    """One oracle row per (T, lambda) grid point, T-major ordering."""
    rows = [(t, l, find_mpp(params, t, l).v_max) for t in t_grid for l in l_grid]
    t, l, v = (np.array(c) for c in zip(*rows))
    return Dataset(t, l, v)
