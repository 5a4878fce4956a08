"""Smooth MOSFET drain-current model with closed-form transconductance derivatives.

The current is a single-piece interpolated charge-sheet curve

    I(v_gs, v_ds) = I_spec * ln^2(1 + exp(x/2)) * tanh(v_ds / v_dsat)
    x = (v_gs - v_th(v_sb)) / (n * U_T)
    I_spec = 2 * n^2 * U_T^2 * k' * (W/L)

which is C-infinity in both terminal voltages, decays exponentially in
subthreshold with slope factor n, and approaches (k'/2)(W/L)(v_gs - v_th)^2
in deep strong inversion.  The smooth saturation knee v_dsat is a fixed
multiple of n*U_T so that gate-voltage derivatives factor out of the
drain-voltage dependence and stay in closed form.

All voltages follow a magnitude convention: v_gs and v_ds are positive when
the device is turning on, for both polarities, and v_sb is the reverse
source-bulk bias (>= 0).  Polarity therefore never enters the current
equations; it only matters for netlist orientation.

Temperature is an argument of the evaluation functions, not part of the
model card.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import constants as _const
from scipy.special import expit

from .exceptions import NotInTriodeError

DEFAULT_TEMP_K = 300.0

# Smooth-saturation knee in units of n*U_T.  Kept constant so gm/gm'/gm''
# separate cleanly from the v_ds factor.
VDSAT_MULTIPLE = 4.0


class Polarity(Enum):
    NMOS = "nmos"
    PMOS = "pmos"


class BulkTie(Enum):
    """Where a control transistor's bulk is tied."""

    SOURCE = "source"
    VSS = "vss"


def thermal_voltage(temp_k: float = DEFAULT_TEMP_K) -> float:
    """kT/q in volts."""
    if temp_k <= 0:
        raise ValueError(f"temperature must be positive, got {temp_k} K")
    return _const.k * temp_k / _const.e


@dataclass(frozen=True)
class MosfetParams:
    """One transistor's model card.

    Defaults are the repository's reference NMOS/PMOS card used throughout
    the test suite (100 um / 1 um geometry, 200 uA/V^2, v_t0 = 0.4 V).
    """

    polarity: Polarity = Polarity.NMOS
    v_t0: float = 0.4  # zero-bias threshold [V]
    k_prime: float = 200e-6  # process transconductance [A/V^2]
    w: float = 100e-6  # gate width [m]
    l: float = 1e-6  # gate length [m]
    gamma_body: float = 0.4  # body-effect coefficient [sqrt(V)]
    phi2b: float = 0.7  # surface potential term 2*phi_B [V]
    n_slope: float = 1.3  # subthreshold slope factor
    c_gs: float = 100e-15  # gate-source capacitance [F]
    c_gd: float = 20e-15  # gate-drain capacitance [F]
    gamma_noise: float = 2.0 / 3.0  # channel excess noise coefficient

    def __post_init__(self):
        problems = []
        if self.w <= 0:
            problems.append(f"w must be > 0, got {self.w}")
        if self.l <= 0:
            problems.append(f"l must be > 0, got {self.l}")
        if self.k_prime <= 0:
            problems.append(f"k_prime must be > 0, got {self.k_prime}")
        if self.phi2b <= 0:
            problems.append(f"phi2b must be > 0, got {self.phi2b}")
        if self.gamma_body < 0:
            problems.append(f"gamma_body must be >= 0, got {self.gamma_body}")
        if self.n_slope < 1:
            problems.append(f"n_slope must be >= 1, got {self.n_slope}")
        if self.c_gs < 0 or self.c_gd < 0:
            problems.append("capacitances must be >= 0")
        if self.gamma_noise <= 0:
            problems.append(f"gamma_noise must be > 0, got {self.gamma_noise}")
        if problems:
            raise ValueError("invalid MosfetParams: " + "; ".join(problems))

    @property
    def wl(self) -> float:
        """Width-to-length ratio."""
        return self.w / self.l

    def scaled(self, wl: float) -> "MosfetParams":
        """Copy of this card with a different W/L (length kept)."""
        if wl <= 0:
            raise ValueError(f"w/l must be > 0, got {wl}")
        return MosfetParams(
            polarity=self.polarity,
            v_t0=self.v_t0,
            k_prime=self.k_prime,
            w=wl * self.l,
            l=self.l,
            gamma_body=self.gamma_body,
            phi2b=self.phi2b,
            n_slope=self.n_slope,
            c_gs=self.c_gs,
            c_gd=self.c_gd,
            gamma_noise=self.gamma_noise,
        )


@dataclass(frozen=True)
class TerminalVoltages:
    """Bias point of one device, magnitude convention (see module docstring)."""

    v_gs: float
    v_ds: float
    v_sb: float = 0.0

    def __post_init__(self):
        if self.v_sb < 0:
            raise ValueError(
                f"v_sb must be >= 0 (reverse bias only), got {self.v_sb}"
            )


@dataclass(frozen=True)
class PowerSeries:
    """Drain current and its first three gate-voltage derivatives at one bias.

    a1/a2/a3 are the cubic Taylor coefficients of the incremental current,
    i.e. a1 = gm, a2 = gm1/2, a3 = gm2/6 by construction.
    """

    i_dc: float  # quiescent current [A]
    gm: float  # dI/dVgs [S]
    gm1: float  # d2I/dVgs2 [A/V^2]
    gm2: float  # d3I/dVgs3 [A/V^3]
    a1: float
    a2: float
    a3: float

    @classmethod
    def from_derivatives(cls, i_dc, gm, gm1, gm2) -> "PowerSeries":
        return cls(
            i_dc=i_dc, gm=gm, gm1=gm1, gm2=gm2, a1=gm, a2=gm1 / 2.0, a3=gm2 / 6.0
        )

    @classmethod
    def zero(cls) -> "PowerSeries":
        return cls.from_derivatives(0.0, 0.0, 0.0, 0.0)

    def __add__(self, other: "PowerSeries") -> "PowerSeries":
        # Parallel devices: currents and every derivative add.
        return PowerSeries.from_derivatives(
            self.i_dc + other.i_dc,
            self.gm + other.gm,
            self.gm1 + other.gm1,
            self.gm2 + other.gm2,
        )


def threshold_voltage(p: MosfetParams, v_sb: float) -> float:
    """Body-effect threshold v_t0 + gamma*(sqrt(v_sb + 2phiB) - sqrt(2phiB))."""
    if np.any(np.asarray(v_sb) < 0):
        raise ValueError(f"v_sb must be >= 0, got {v_sb}")
    return _threshold_arr(p, v_sb)


def _threshold_arr(p: MosfetParams, v_sb):
    # No domain check; internal vector paths guarantee v_sb >= 0.
    return p.v_t0 + p.gamma_body * (np.sqrt(v_sb + p.phi2b) - math.sqrt(p.phi2b))


def _curve(p: MosfetParams, v_gs, v_ds, v_sb, temp_k):
    """Current and derivatives, vectorized. Returns (i, gm, gm1, gm2)."""
    ut = thermal_voltage(temp_k)
    nut = p.n_slope * ut
    vth = _threshold_arr(p, v_sb)
    half = 0.5 * (v_gs - vth) / nut
    lg = np.logaddexp(0.0, half)  # softplus(x/2), stable for any x
    sg = expit(half)
    sat = np.tanh(v_ds / (VDSAT_MULTIPLE * nut))
    ispec = 2.0 * p.n_slope**2 * ut * ut * p.k_prime * (p.w / p.l)

    i = ispec * lg * lg * sat
    # d/dx of ln^2(1+e^(x/2)) and friends, with x the normalized overdrive.
    f1 = lg * sg
    f2 = 0.5 * sg * sg + 0.5 * lg * sg * (1.0 - sg)
    f3 = 0.25 * sg * (1.0 - sg) * (3.0 * sg + lg * (1.0 - 2.0 * sg))
    gm = ispec * sat * f1 / nut
    gm1 = ispec * sat * f2 / nut**2
    gm2 = ispec * sat * f3 / nut**3
    return i, gm, gm1, gm2


def drain_current(
    p: MosfetParams, v: TerminalVoltages, temp_k: float = DEFAULT_TEMP_K
) -> float:
    """Drain current [A] at the given bias."""
    i, _, _, _ = _curve(p, v.v_gs, v.v_ds, v.v_sb, temp_k)
    return float(i)


def transconductance_series(
    p: MosfetParams, v: TerminalVoltages, temp_k: float = DEFAULT_TEMP_K
) -> PowerSeries:
    """Analytic gm, gm', gm'' (and Taylor coefficients) at the given bias."""
    i, gm, gm1, gm2 = _curve(p, v.v_gs, v.v_ds, v.v_sb, temp_k)
    return PowerSeries.from_derivatives(float(i), float(gm), float(gm1), float(gm2))


def triode_resistance(p: MosfetParams, v: TerminalVoltages) -> float:
    """Channel resistance L / (k' * W * (v_gs - v_th - v_ds)) in the triode region.

    Raises NotInTriodeError when the overdrive term is not positive; the bias
    solver uses that signal to reject a CT sizing.
    """
    overdrive = v.v_gs - threshold_voltage(p, v.v_sb) - v.v_ds
    if overdrive <= 0:
        raise NotInTriodeError(
            "device", f"v_gs - v_th - v_ds = {overdrive:.6g} V <= 0"
        )
    return p.l / (p.k_prime * p.w * overdrive)
