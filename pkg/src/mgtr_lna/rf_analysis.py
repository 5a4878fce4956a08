"""Closed-form RF metrics: Volterra-series IIP3, voltage gain, noise figure.

The third-order intercept combines the device cubic coefficient with a
second-order interaction term

    eps = a3 - g_ob
    g_ob = (2 a2^2 / 3) * [ 2/(a1 + g(dw)) + 1/(a1 + g(2w)) ]
    g(w) = gm * (1 + 2j w c_gs z1 + 2j w c_gd z2) / (1 + w_T c_gd z2)

with w_T = gm/(c_gs + c_gd), evaluated at the difference frequency dw and
at the second harmonic 2w (the same gate/drain impedances are reused at dw,
a convention every report flags).  The reported intercept power is

    P_IIP3 = a1 / (6 Re[z_s(w)] |H| |A1|^3 |eps|)     [W]

with the input transfer magnitudes |H| and |A1| equal to 1 by default; the
a1 numerator makes the memoryless, matched-unity-transfer limit equal the
textbook A^2 = (4/3)|a1/a3| expressed as available source power
P = A^2/(8 r_s).  The raw, unnormalized form (no a1 numerator) is exposed
separately for inspection.

Noise figures evaluate the parallel-device formula exactly as printed (the
full form) and the mt-only approximation 1 + gamma/(r_s * gm_eff); the full
form only ever adds positive terms, so it is an upper bound of the
approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .device_model import PowerSeries
from .exceptions import SingularTermError

DBM_REFERENCE_W = 1e-3


def watts_to_dbm(p_w: float) -> float:
    if p_w == math.inf:
        return math.inf
    if p_w <= 0:
        return -math.inf
    return 10.0 * math.log10(p_w / DBM_REFERENCE_W)


def dbm_to_watts(p_dbm: float) -> float:
    return DBM_REFERENCE_W * 10.0 ** (p_dbm / 10.0)


@dataclass(frozen=True)
class ImpedanceEnv:
    """Frequency-dependent impedance environment of the amplifier.

    z2 is the drain-node impedance seen by the input device: 1/gm_lt when a
    cascode is present (gm_lt set), else the inductive load j*w*l2.  h_mag
    and a1_mag are the input transfer magnitudes, frequency-flat and unity
    by default.
    """

    r_s: float = 50.0
    l1: float = 0.0  # gate series matching inductance [H]
    l2: float = 0.0  # load inductance [H]
    gm_lt: float | None = None  # cascode transconductance [S], None = no cascode
    h_mag: float = 1.0
    a1_mag: float = 1.0

    def __post_init__(self):
        if self.r_s <= 0:
            raise ValueError(f"r_s must be > 0, got {self.r_s}")
        if self.l1 < 0 or self.l2 < 0:
            raise ValueError("inductances must be >= 0")
        if self.h_mag <= 0 or self.a1_mag <= 0:
            raise ValueError("transfer magnitudes must be > 0")
        if self.gm_lt is not None and self.gm_lt <= 0:
            raise ValueError(f"gm_lt must be > 0, got {self.gm_lt}")

    def z1(self, omega: float) -> complex:
        """Gate-side series impedance r_s + j*w*l1."""
        return complex(self.r_s, omega * self.l1)

    def z2(self, omega: float) -> complex:
        """Drain-node impedance of the input device."""
        if self.gm_lt is not None:
            return complex(cascode_z2(self.gm_lt), 0.0)
        return complex(0.0, omega * self.l2)

    def z_out(self, omega: float) -> complex:
        """Output-node load impedance (the inductive load)."""
        return complex(0.0, omega * self.l2)


def cascode_z2(gm_lt: float) -> float:
    """Drain-node impedance under a cascode: 1/gm of the cascode device."""
    if gm_lt <= 0:
        raise ValueError(f"gm_lt must be > 0, got {gm_lt}")
    return 1.0 / gm_lt


def g_omega(
    series: PowerSeries,
    caps: tuple[float, float],
    z1: complex,
    z2: complex,
    omega: float,
) -> complex:
    """Frequency-dependent conductance g(w) of the distortion denominators."""
    if omega < 0:
        raise ValueError(f"omega must be >= 0, got {omega}")
    c_gs, c_gd = caps
    gm = series.gm
    num = 1.0 + 2j * omega * c_gs * z1 + 2j * omega * c_gd * z2
    c_tot = c_gs + c_gd
    if c_tot == 0.0 or gm == 0.0:
        # Transit frequency undefined; memoryless limit drops the term.
        den = 1.0
    else:
        omega_t = gm / c_tot
        den = 1.0 + omega_t * c_gd * z2
    return gm * num / den


def g_ob(
    series: PowerSeries,
    caps: tuple[float, float],
    env: ImpedanceEnv,
    delta_omega: float,
    two_omega: float,
) -> complex:
    """Second-order interaction term of the intercept formula."""
    g_d = g_omega(series, caps, env.z1(delta_omega), env.z2(delta_omega), delta_omega)
    g_2 = g_omega(series, caps, env.z1(two_omega), env.z2(two_omega), two_omega)
    den_d = series.a1 + g_d
    den_2 = series.a1 + g_2
    if den_d == 0:
        raise SingularTermError("the difference-frequency term a1 + g(dw)")
    if den_2 == 0:
        raise SingularTermError("the second-harmonic term a1 + g(2w)")
    return (2.0 * series.a2**2 / 3.0) * (2.0 / den_d + 1.0 / den_2)


def eps_term(
    series: PowerSeries,
    caps: tuple[float, float],
    env: ImpedanceEnv,
    delta_omega: float,
    two_omega: float,
) -> complex:
    """eps = a3 - g_ob; its magnitude sets the intercept."""
    return series.a3 - g_ob(series, caps, env, delta_omega, two_omega)


def _iip3_watts(series, caps, env, f_a, f_b, normalized: bool) -> float:
    if f_a <= 0 or f_b <= 0:
        raise ValueError("tone frequencies must be > 0")
    if f_a == f_b:
        raise ValueError("two-tone analysis needs distinct tones")
    omega = 2.0 * math.pi * f_a
    delta_omega = 2.0 * math.pi * abs(f_b - f_a)
    two_omega = 2.0 * omega
    eps = eps_term(series, caps, env, delta_omega, two_omega)
    if eps == 0:
        return math.inf
    denom = (
        6.0
        * env.z1(omega).real
        * env.h_mag
        * env.a1_mag**3
        * abs(eps)
    )
    num = series.a1 if normalized else 1.0
    return num / denom


def volterra_iip3(
    series: PowerSeries,
    caps: tuple[float, float],
    env: ImpedanceEnv,
    f_a: float,
    f_b: float,
) -> float:
    """Third-order input intercept in dBm (normalized form; +inf if eps = 0)."""
    return watts_to_dbm(_iip3_watts(series, caps, env, f_a, f_b, normalized=True))


def volterra_iip3_raw(
    series: PowerSeries,
    caps: tuple[float, float],
    env: ImpedanceEnv,
    f_a: float,
    f_b: float,
) -> float:
    """Unnormalized intercept expression, in dB relative to 1 mW^-1 units.

    Dimensionally this is not a power; it is exposed verbatim for
    inspection next to the normalized value.
    """
    return watts_to_dbm(_iip3_watts(series, caps, env, f_a, f_b, normalized=False))


def voltage_gain(gm: float, z_out: complex) -> float:
    """20 log10(gm * |z_out|); -inf when the load is a short."""
    if gm <= 0:
        raise ValueError(f"gm must be > 0, got {gm}")
    mag = gm * abs(z_out)
    if mag == 0:
        return -math.inf
    return 20.0 * math.log10(mag)


@dataclass(frozen=True)
class NoiseModel:
    temperature_k: float = 300.0
    gamma_noise: float = 2.0 / 3.0
    r_s: float = 50.0

    def __post_init__(self):
        if self.temperature_k <= 0:
            raise ValueError("temperature must be > 0")
        if self.gamma_noise <= 0 or self.r_s <= 0:
            raise ValueError("gamma_noise and r_s must be > 0")


def noise_figure_full(
    mt_eff: float, st_eff: float | None, gm_lt: float, model: NoiseModel
) -> float:
    """Parallel-branch noise figure, in dB, evaluated exactly as printed.

    Both branch terms carry a 1/g_eff plus a cascode term gm_lt/g_eff^2;
    the 4kT factors cancel against the source noise.  st_eff=None drops the
    auxiliary-branch term (single-gate designs have no ST).
    """
    checks = [("mt_eff", mt_eff), ("gm_lt", gm_lt)]
    if st_eff is not None:
        checks.append(("st_eff", st_eff))
    for name, g in checks:
        if g <= 0:
            raise ValueError(f"{name} must be > 0, got {g}")
    total = 1.0 / mt_eff + gm_lt / mt_eff**2
    if st_eff is not None:
        total += 1.0 / st_eff + gm_lt / st_eff**2
    f = 1.0 + model.gamma_noise * total / model.r_s
    return 10.0 * math.log10(f)


def noise_figure_approx(mt_eff: float, model: NoiseModel) -> float:
    """Main-branch-only approximation 1 + gamma/(r_s * mt_eff), in dB."""
    if mt_eff <= 0:
        raise ValueError(f"mt_eff must be > 0, got {mt_eff}")
    f = 1.0 + model.gamma_noise / (model.r_s * mt_eff)
    return 10.0 * math.log10(f)
