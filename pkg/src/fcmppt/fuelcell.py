"""Static PEM fuel-cell stack polarization model.

Cell voltage is the Nernst potential minus activation, ohmic and
concentration overpotentials.  All functions accept scalars or numpy arrays
for the current argument so that whole polarization curves can be evaluated
in one call.  Pressures are in atm, temperature in K, current in A and
areas in cm^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

#: Current below which the Tafel term is evaluated at this value instead.
I_EPS = 1e-3

AMPHLETT_XI = (-0.948, 0.00354, 7.6e-5, -1.93e-4)


@dataclass(frozen=True)
class StackParams:
    """Physical constants and fitted coefficients of a fuel-cell stack.

    The defaults describe a 100-cell stack whose maximum power sits between
    roughly 3.5 and 7 kW over 293-363 K and membrane water contents 9-14.
    """

    n_cells: int = 100
    area_A: float = 120.0
    thickness_tm: float = 0.0178
    i_limit: float = 220.0
    xi: tuple = AMPHLETT_XI
    p_h2: float = 1.0
    p_o2: float = 1.0
    n_electrons: int = 2
    faraday_F: float = 96487.0
    gas_R: float = 8.314
    temp_range: tuple = (293.0, 363.0)
    lambda_max: float = 23.0

    def __post_init__(self):
        object.__setattr__(self, "xi", tuple(float(x) for x in self.xi))
        object.__setattr__(self, "temp_range", tuple(float(x) for x in self.temp_range))
        if len(self.xi) != 4:
            raise DomainError(f"xi needs 4 coefficients, got {len(self.xi)}")
        if self.n_cells < 1:
            raise DomainError(f"n_cells must be >= 1, got {self.n_cells}")
        for name in ("area_A", "thickness_tm", "i_limit", "p_h2", "p_o2",
                     "faraday_F", "gas_R"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        lo, hi = self.temp_range
        if not 0 < lo < hi:
            raise DomainError(f"temp_range must satisfy 0 < T_min < T_max, got {self.temp_range}")
        if self.xi[0] >= 0:
            raise DomainError(f"xi1 must be negative, got {self.xi[0]}")
        self._check_activation_positive()

    def _check_activation_positive(self):
        # Tafel form is only meaningful above ~1% of the limiting current.
        temps = np.linspace(*self.temp_range, 15)
        currents = np.linspace(0.01 * self.i_limit, 0.999 * self.i_limit, 40)
        tt, ii = np.meshgrid(temps, currents)
        v_act = activation_loss(tt, oxygen_concentration(tt, self.p_o2), ii, self.xi)
        if np.any(v_act <= 0):
            k = np.argmin(v_act)
            raise DomainError(
                "xi gives a non-positive activation loss at "
                f"T={tt.flat[k]:.2f} K, I={ii.flat[k]:.3f} A")

    def valid(self, temp_T, lambda_m, current_I):
        """Raise DomainError unless (T, lambda, I) lies inside the envelope."""
        lo, hi = self.temp_range
        if not lo <= temp_T <= hi:
            raise DomainError(f"temp_T={temp_T} outside valid range [{lo}, {hi}] K")
        current = np.asarray(current_I, dtype=float)
        if np.any(current < 0) or np.any(current >= self.i_limit):
            raise DomainError(
                f"current_I must satisfy 0 <= I < i_limit={self.i_limit} A")
        floor = 3.0 * float(np.max(current)) / self.area_A + 0.634
        if not floor < lambda_m <= self.lambda_max:
            raise DomainError(
                f"lambda_m={lambda_m} outside ({floor:.4f}, {self.lambda_max}]")


@dataclass(frozen=True)
class OperatingConditions:
    temp_T: float
    lambda_m: float
    current_I: object = 0.0

    def __post_init__(self):
        if not self.temp_T > 0:
            raise DomainError(f"temp_T must be positive, got {self.temp_T}")


def nernst_voltage(temp_T, p_h2=1.0, p_o2=1.0):
    """Reversible cell potential in V (pressures in atm)."""
    if np.any(np.asarray(temp_T) <= 0) or p_h2 <= 0 or p_o2 <= 0:
        raise DomainError("nernst_voltage needs positive temperature and pressures")
    return (1.229 - 8.5e-4 * (temp_T - 298.15)
            + 4.308e-5 * temp_T * (np.log(p_h2) + 0.5 * np.log(p_o2)))


def oxygen_concentration(temp_T, p_o2=1.0):
    """Dissolved oxygen concentration at the cathode interface, mol/cm^3."""
    if np.any(np.asarray(temp_T) <= 0) or np.any(np.asarray(p_o2) <= 0):
        raise DomainError("oxygen_concentration needs positive temperature and pressure")
    return p_o2 / (5.08e6 * np.exp(-498.0 / temp_T))


def activation_loss(temp_T, c_o2, current_I, xi=AMPHLETT_XI):
    """Activation overpotential in V; currents below I_EPS are clamped."""
    current = np.asarray(current_I, dtype=float)
    if np.any(current < 0):
        raise DomainError("activation_loss needs a non-negative current")
    if np.any(np.asarray(c_o2) <= 0):
        raise DomainError("activation_loss needs a positive oxygen concentration")
    current = np.maximum(current, I_EPS)
    x1, x2, x3, x4 = xi
    out = -(x1 + x2 * temp_T + x3 * temp_T * np.log(c_o2) + x4 * temp_T * np.log(current))
    return out if out.ndim else float(out)


def membrane_resistivity(temp_T, lambda_m, current_density):
    """Membrane resistivity r_m in ohm*cm from the Mann correlation."""
    j = np.asarray(current_density, dtype=float)
    denom = (lambda_m - 0.634 - 3.0 * j) * np.exp(4.18 * (temp_T - 303.0) / temp_T)
    if np.any(denom <= 0):
        raise DomainError(
            f"membrane resistivity undefined: lambda_m={lambda_m} must exceed "
            f"0.634 + 3*J = {0.634 + 3.0 * float(np.max(j)):.4f}")
    num = 181.6 * (1.0 + 0.03 * j + 0.062 * (temp_T / 303.0) ** 2 * j ** 2.5)
    out = num / denom
    return out if out.ndim else float(out)


def ohmic_loss(params: StackParams, cond: OperatingConditions):
    """Membrane ohmic drop R_m * I per cell, in V."""
    current = np.asarray(cond.current_I, dtype=float)
    r_m = membrane_resistivity(cond.temp_T, cond.lambda_m, current / params.area_A)
    out = r_m * params.thickness_tm / params.area_A * current
    return out if np.ndim(out) else float(out)


def concentration_loss(params: StackParams, current_I, temp_T):
    """Mass-transport loss magnitude -(RT/nF) ln(1 - I/i_L), in V (>= 0)."""
    current = np.asarray(current_I, dtype=float)
    if np.any(current >= params.i_limit) or np.any(current < 0):
        raise DomainError(
            f"concentration_loss needs 0 <= I < i_limit={params.i_limit} A")
    scale = params.gas_R * temp_T / (params.n_electrons * params.faraday_F)
    out = -scale * np.log1p(-current / params.i_limit)
    return out if out.ndim else float(out)


def cell_voltage(params: StackParams, cond: OperatingConditions):
    """Single-cell terminal voltage in V."""
    e = nernst_voltage(cond.temp_T, params.p_h2, params.p_o2)
    c_o2 = oxygen_concentration(cond.temp_T, params.p_o2)
    v_act = activation_loss(cond.temp_T, c_o2, cond.current_I, params.xi)
    v_con = concentration_loss(params, cond.current_I, cond.temp_T)
    return e - v_act - ohmic_loss(params, cond) - v_con


def stack_voltage(params: StackParams, cond: OperatingConditions):
    return params.n_cells * cell_voltage(params, cond)


def stack_power(params: StackParams, cond: OperatingConditions):
    return stack_voltage(params, cond) * np.asarray(cond.current_I, dtype=float)


def polarization(params: StackParams, temp_T: float, lambda_m: float):
    """Return a fast scalar ``I -> stack voltage`` closure for fixed (T, lambda).

    The closure uses ``math`` instead of numpy and hoists every
    condition-dependent constant, which keeps the simulation inner loop cheap.
    It raises DomainError for I >= i_limit or a non-positive resistivity
    denominator, like the array functions.
    """
    x1, x2, x3, x4 = params.xi
    t = float(temp_T)
    e = float(nernst_voltage(t, params.p_h2, params.p_o2))
    ln_c = math.log(float(oxygen_concentration(t, params.p_o2)))
    act0 = -(x1 + x2 * t + x3 * t * ln_c)
    act_slope = -x4 * t
    arrh = math.exp(4.18 * (t - 303.0) / t)
    tsq = 0.062 * (t / 303.0) ** 2
    area = params.area_A
    tm_over_a = params.thickness_tm / area
    con_scale = params.gas_R * t / (params.n_electrons * params.faraday_F)
    i_lim = params.i_limit
    n = params.n_cells
    lam_off = lambda_m - 0.634
    log, log1p = math.log, math.log1p

    def v_stack(current):
        if current >= i_lim:
            raise DomainError(f"stack current {current} A >= i_limit {i_lim} A")
        j = current / area
        denom = (lam_off - 3.0 * j) * arrh
        if denom <= 0:
            raise DomainError(f"lambda_m={lambda_m} too low for J={j:.4f} A/cm^2")
        r_m = 181.6 * (1.0 + 0.03 * j + tsq * j ** 2.5) / denom
        v_act = act0 + act_slope * log(current if current > I_EPS else I_EPS)
        v_con = -con_scale * log1p(-current / i_lim)
        return n * (e - v_act - r_m * tm_over_a * current - v_con)

    return v_stack


@dataclass(frozen=True)
class Curve:
    """A sampled polarization curve at fixed (T, lambda)."""

    temp_T: float
    lambda_m: float
    current: np.ndarray = field(repr=False)
    voltage: np.ndarray = field(repr=False)

    @property
    def power(self):
        return self.voltage * self.current


def sweep(params: StackParams, temp_T, lambda_m, n_points=1000, i_max=None):
    """Sample the stack polarization curve on (I_EPS, i_max]."""
    if i_max is None:
        i_max = params.i_limit * (1.0 - 1e-6)
    currents = np.linspace(I_EPS, i_max, n_points)
    volts = stack_voltage(params, OperatingConditions(temp_T, lambda_m, currents))
    return Curve(temp_T, lambda_m, currents, volts)
