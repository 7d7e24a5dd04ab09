"""Two-input, one-output Mamdani fuzzy inference with centroid defuzzification.

Both inputs and the output use seven triangular sets labelled NB..PB.
Inference uses min for AND, max for aggregation and the centroid of the
clipped-set union sampled on a uniform grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import ConfigError, InferenceError

LABELS = ("NB", "NM", "NS", "ZE", "PS", "PM", "PB")
N_SETS = len(LABELS)
# Centroid sample count; the discretization error is O(1/n) and 301 keeps a
# resolution doubling below 1e-3 of the output universe width.
DEFAULT_RESOLUTION = 301


@dataclass(frozen=True)
class TriangularMf:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if not self.a <= self.b <= self.c or self.a == self.c:
            raise ConfigError(f"triangle needs a <= b <= c with a < c, got {self}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        # a == b or b == c is a shoulder: that side stays at full membership
        left = 1.0 if self.a == self.b else (x - self.a) / (self.b - self.a)
        right = 1.0 if self.b == self.c else (self.c - x) / (self.c - self.b)
        return np.clip(np.minimum(left, right), 0.0, 1.0)


@dataclass(frozen=True)
class LinguisticVariable:
    name: str
    lo: float
    hi: float
    sets: tuple

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ConfigError(f"{self.name}: universe needs lo < hi")
        if len(self.sets) != N_SETS:
            raise ConfigError(f"{self.name}: expected {N_SETS} sets, got {len(self.sets)}")
        apexes = [s.b for s in self.sets]
        if apexes != sorted(apexes):
            raise ConfigError(f"{self.name}: sets must be ordered by apex")
        for left, right in zip(self.sets, self.sets[1:]):
            if right.a >= left.c:
                raise ConfigError(f"{self.name}: adjacent sets leave a gap")

    @classmethod
    def uniform(cls, name, lo, hi):
        """Seven evenly spaced triangles with 50% overlap and edge shoulders."""
        h = (hi - lo) / (N_SETS - 1)
        apex = [lo + k * h for k in range(N_SETS)]
        apex[-1] = hi
        sets = []
        for k, b in enumerate(apex):
            a = b if k == 0 else apex[k - 1]
            c = b if k == N_SETS - 1 else apex[k + 1]
            sets.append(TriangularMf(a, b, c))
        return cls(name, lo, hi, tuple(sets))

    @classmethod
    def symmetric(cls, name, half_width):
        return cls.uniform(name, -half_width, half_width)


def fuzzify(var: LinguisticVariable, x):
    """Membership degrees of ``x`` (clamped to the universe) in all seven sets."""
    x = min(max(float(x), var.lo), var.hi)
    return np.array([float(s(x)) for s in var.sets])


@dataclass(frozen=True)
class RuleTable:
    """7x7 grid of output-label indices; rows are E labels, columns CE labels."""

    grid: np.ndarray

    def __eq__(self, other):
        return isinstance(other, RuleTable) and np.array_equal(self.grid, other.grid)

    __hash__ = None

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=int)
        if g.shape != (N_SETS, N_SETS):
            raise ConfigError(f"rule table must be {N_SETS}x{N_SETS}, got {g.shape}")
        if g.min() < 0 or g.max() >= N_SETS:
            raise ConfigError("rule table holds an unknown output label")
        if not np.array_equal(g[::-1, ::-1], N_SETS - 1 - g):
            raise ConfigError("rule table is not antisymmetric under (E, CE) -> (-E, -CE)")
        g.setflags(write=False)
        object.__setattr__(self, "grid", g)

    def label(self, e_label, ce_label):
        return LABELS[self.grid[LABELS.index(e_label), LABELS.index(ce_label)]]

    def to_text(self):
        return "\n".join(" ".join(LABELS[k] for k in row) for row in self.grid) + "\n"

    @classmethod
    def from_text(cls, text):
        rows = [ln.split() for ln in text.splitlines()
                if ln.strip() and not ln.lstrip().startswith("#")]
        try:
            grid = [[LABELS.index(tok.upper()) for tok in row] for row in rows]
        except ValueError as exc:
            raise ConfigError(f"unknown label in rule table: {exc}") from None
        if len(grid) != N_SETS or any(len(r) != N_SETS for r in grid):
            raise ConfigError("rule table file must hold 7 rows of 7 labels")
        return cls(np.array(grid))

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read())


def mppt_rule_table():
    """The bundled hill-climbing table (``rules/mppt7x7``)."""
    text = resources.files("fcmppt").joinpath("data/rules/mppt7x7").read_text()
    return RuleTable.from_text(text)


@dataclass(frozen=True)
class Aggregate:
    """Union of consequent sets, each clipped at its firing strength."""

    strengths: np.ndarray
    output: LinguisticVariable

    def membership(self, x):
        x = np.asarray(x, dtype=float)
        clipped = [np.minimum(h, s(x)) for h, s in zip(self.strengths, self.output.sets)]
        return np.max(clipped, axis=0)


def infer(rules: RuleTable, e_degrees, ce_degrees, output: LinguisticVariable):
    """Min-max composition; returns the per-label clipping heights."""
    fire = np.minimum.outer(np.asarray(e_degrees), np.asarray(ce_degrees))
    strengths = np.zeros(N_SETS)
    np.maximum.at(strengths, rules.grid.ravel(), fire.ravel())
    return Aggregate(strengths, output)


def defuzzify_centroid(aggregate: Aggregate, resolution=DEFAULT_RESOLUTION, xs=None, mf_grid=None):
    if xs is None:
        xs = np.linspace(aggregate.output.lo, aggregate.output.hi, resolution)
    if mf_grid is None:
        mu = aggregate.membership(xs)
    else:
        mu = np.max(np.minimum(aggregate.strengths[:, None], mf_grid), axis=0)
    total = mu.sum()
    if not total > 0:
        raise InferenceError("aggregate output membership is identically zero")
    return float(np.dot(xs, mu) / total)


@dataclass(frozen=True)
class FuzzySystem:
    e_var: LinguisticVariable
    ce_var: LinguisticVariable
    out_var: LinguisticVariable
    rules: RuleTable
    resolution: int = DEFAULT_RESOLUTION
    _xs: np.ndarray = field(init=False, repr=False, compare=False)
    _mf_grid: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        xs = np.linspace(self.out_var.lo, self.out_var.hi, self.resolution)
        object.__setattr__(self, "_xs", xs)
        object.__setattr__(self, "_mf_grid", np.array([s(xs) for s in self.out_var.sets]))

    @classmethod
    def default(cls, dd_max=0.01, rules=None, resolution=DEFAULT_RESOLUTION):
        """Inputs normalized to [-1, 1], output in [-dd_max, dd_max]."""
        return cls(LinguisticVariable.symmetric("E", 1.0),
                   LinguisticVariable.symmetric("CE", 1.0),
                   LinguisticVariable.symmetric("dD", dd_max),
                   rules if rules is not None else mppt_rule_table(),
                   resolution)

    def __call__(self, e, ce):
        return evaluate(self, e, ce)


def evaluate(system: FuzzySystem, e, ce):
    """Crisp controller output for crisp inputs ``(e, ce)``."""
    agg = infer(system.rules, fuzzify(system.e_var, e), fuzzify(system.ce_var, ce),
                system.out_var)
    return defuzzify_centroid(agg, xs=system._xs, mf_grid=system._mf_grid)
