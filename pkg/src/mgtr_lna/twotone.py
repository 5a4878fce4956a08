"""Independent two-tone time-domain simulator and IIP3 intercept extraction.

Drives a memoryless nonlinearity with two sinusoids on a coherent sampling
grid, reads the fundamental and third-order intermodulation lines off exact
DFT bins (no windowing, no leakage), and extrapolates the intercept from
fixed-slope line fits.  This path shares no code with the closed-form
Volterra analysis it cross-checks.

Coherence: with beat frequency fb = |f2 - f1| and a record of ``cycles``
beat periods, the frequency resolution is fr = fb / cycles.  Both tones are
snapped onto integer multiples of fr (f2 - f1 stays exactly fb), and the
sample rate is an integer number of bins, so every intermodulation product
m*f1 + n*f2 lands exactly on a bin.

Conventions: the drive amplitude per tone comes from the available-power
relation Pin = A^2/(8 r_ref); output current lines are scaled by a flat
output impedance magnitude and converted back to dBm with the same
available-power convention, so a device with a1*|z_out| = 1 has 0 dB gain.

In full-device mode the signal rides directly on each input device's
solved gate-source bias (the source nodes are treated as RF-bypassed; the
control transistors only set the DC point).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .device_model import _curve
from .exceptions import ConfigError, SweepRangeError
from .rf_analysis import dbm_to_watts, watts_to_dbm

# Intermod products up to this order count as "structured" spectral content
# when estimating the numeric leakage floor.
_FLOOR_EXCLUDE_ORDER = 9
# Snapped tones may move at most this relative distance.
_SNAP_REL_TOL = 0.02


@dataclass(frozen=True)
class PolynomialNonlinearity:
    """Cubic memoryless transconductor i = a1 v + a2 v^2 + a3 v^3."""

    a1: float
    a2: float = 0.0
    a3: float = 0.0

    def prepare(self):
        a1, a2, a3 = self.a1, self.a2, self.a3

        def evaluate(v):
            return v * (a1 + v * (a2 + v * a3))

        return evaluate


@dataclass(frozen=True)
class FullDeviceNonlinearity:
    """Composite large-signal current of a solved design.

    The instantaneous signal adds to each branch's solved DC gate-source
    voltage; drain voltages stay at their DC values (quasi-static,
    memoryless large-signal).
    """

    design: object

    def prepare(self):
        from .bias_network import solve_self_bias

        design = self.design
        mt_op, st_op = solve_self_bias(design)
        branches = [(design.mt, mt_op.voltages.v_gs)]
        if st_op is not None:
            branches.append((design.st, st_op.voltages.v_gs))
        vds = design.input_vds_v
        temp_k = design.temp_k

        def evaluate(v):
            total = np.zeros_like(v)
            for card, v_gs_dc in branches:
                i, _, _, _ = _curve(card, v_gs_dc + v, vds, 0.0, temp_k)
                total += i
            return total

        return evaluate


@dataclass(frozen=True)
class TwoToneSpec:
    f1: float
    f2: float
    pin_dbm_sweep: tuple
    nonlinearity: object
    r_ref: float = 50.0
    cycles: int = 8  # beat periods captured
    samples_per_period: int = 64  # oversampling of the highest IMD line
    z_out_mag: float = 1.0  # flat |Z_out| used to form output voltage

    def __post_init__(self):
        problems = []
        if self.f1 <= 0 or self.f2 <= 0:
            problems.append("tone frequencies must be > 0")
        if self.f1 == self.f2:
            problems.append("tones must be distinct")
        if self.cycles < 1:
            problems.append("cycles must be >= 1")
        if self.samples_per_period < 8:
            problems.append("samples_per_period must be >= 8")
        if self.r_ref <= 0:
            problems.append("r_ref must be > 0")
        if self.z_out_mag <= 0:
            problems.append("z_out_mag must be > 0")
        if not self.pin_dbm_sweep:
            problems.append("pin_dbm_sweep must not be empty")
        if problems:
            raise ConfigError(problems)


@dataclass(frozen=True)
class SpectrumResult:
    pin_dbm: float
    p_fund_dbm: float  # output level at the (snapped) lower tone
    p_imd3_lo_dbm: float  # level at 2 f1 - f2
    p_imd3_hi_dbm: float  # level at 2 f2 - f1
    imd3_dbc: float
    numeric_floor_dbm: float  # max non-structured bin (spectral leakage)
    parseval_residual: float
    f1_hz: float  # snapped tone frequencies
    f2_hz: float
    snap_distance_hz: float


def _coherent_grid(spec: TwoToneSpec):
    f_lo, f_hi = sorted((spec.f1, spec.f2))
    f_beat = f_hi - f_lo
    f_res = f_beat / spec.cycles
    k_lo = max(int(round(f_lo / f_res)), spec.cycles + 1)
    f_lo_s = k_lo * f_res
    f_hi_s = f_lo_s + f_beat
    snap = abs(f_lo_s - f_lo)
    if snap > _SNAP_REL_TOL * f_lo:
        raise ConfigError(
            [
                f"coherent snapping would move the tone by {snap:.6g} Hz "
                f"(more than {_SNAP_REL_TOL:.0%} of {f_lo:.6g} Hz); "
                "increase cycles or adjust the tones"
            ]
        )
    k_hi = k_lo + spec.cycles
    # Record holds `cycles` beat periods; the highest IMD line (2f2 - f1)
    # falls on bin k_lo + 2*cycles, oversampled samples_per_period times.
    n_samples = spec.samples_per_period * (k_lo + 2 * spec.cycles)
    fs = n_samples * f_res
    return f_lo_s, f_hi_s, f_res, k_lo, k_hi, n_samples, fs


def _structured_bins(k_lo, k_hi, n_samples):
    half = n_samples // 2
    keep = set()
    for m in range(-_FLOOR_EXCLUDE_ORDER, _FLOOR_EXCLUDE_ORDER + 1):
        for n in range(-_FLOOR_EXCLUDE_ORDER, _FLOOR_EXCLUDE_ORDER + 1):
            if abs(m) + abs(n) > _FLOOR_EXCLUDE_ORDER:
                continue
            b = abs(m * k_lo + n * k_hi) % n_samples
            if b > half:
                b = n_samples - b
            keep.add(b)
    return keep


def simulate_two_tone(spec: TwoToneSpec):
    """Run the sweep. Returns a list of (pin_dbm, SpectrumResult)."""
    f1s, f2s, f_res, k_lo, k_hi, n, fs = _coherent_grid(spec)
    snap = abs(f1s - min(spec.f1, spec.f2))
    t = np.arange(n) / fs
    base = np.cos(2.0 * math.pi * f1s * t) + np.cos(2.0 * math.pi * f2s * t)
    evaluate = spec.nonlinearity.prepare()

    k_imd_lo = k_lo - spec.cycles  # 2 f1 - f2
    k_imd_hi = k_lo + 2 * spec.cycles  # 2 f2 - f1
    excluded = _structured_bins(k_lo, k_hi, n)
    half = n // 2

    out = []
    for pin in spec.pin_dbm_sweep:
        amp = math.sqrt(8.0 * spec.r_ref * dbm_to_watts(pin))
        wave = evaluate(amp * base)
        spectrum = np.fft.rfft(wave)
        # Parseval check on the raw record (DC included).
        power_t = float(np.sum(wave * wave))
        mags2 = np.abs(spectrum) ** 2
        power_f = (2.0 * float(np.sum(mags2)) - float(mags2[0])) / n
        if n % 2 == 0:
            power_f -= float(mags2[half]) / n
        parseval = abs(power_t - power_f) / max(power_t, 1e-300)

        amp_of = lambda k: 2.0 * abs(spectrum[k]) / n  # noqa: E731
        to_dbm = lambda a: watts_to_dbm(  # noqa: E731
            (a * spec.z_out_mag) ** 2 / (8.0 * spec.r_ref)
        )
        p_fund = to_dbm(amp_of(k_lo))
        p_lo = to_dbm(amp_of(k_imd_lo))
        p_hi = to_dbm(amp_of(k_imd_hi))
        floor_amp = 0.0
        mags = np.abs(spectrum)
        mask = np.ones(half + 1, dtype=bool)
        for b in excluded:
            if b <= half:
                mask[b] = False
        if np.any(mask):
            floor_amp = 2.0 * float(np.max(mags[mask])) / n
        out.append(
            (
                float(pin),
                SpectrumResult(
                    pin_dbm=float(pin),
                    p_fund_dbm=p_fund,
                    p_imd3_lo_dbm=p_lo,
                    p_imd3_hi_dbm=p_hi,
                    imd3_dbc=p_lo - p_fund,
                    numeric_floor_dbm=to_dbm(floor_amp),
                    parseval_residual=parseval,
                    f1_hz=f1s,
                    f2_hz=f2s,
                    snap_distance_hz=snap,
                ),
            )
        )
    return out


# Qualification thresholds for the intercept construction.
_FLOOR_MARGIN_DB = 20.0
_COMPRESSION_DB = 0.1
_MIN_POINTS = 4


def _qualifying(sweep):
    if len(sweep) < _MIN_POINTS:
        raise SweepRangeError(
            f"sweep has {len(sweep)} points, need at least {_MIN_POINTS}"
        )
    pins = np.array([p for p, _ in sweep])
    fund = np.array([r.p_fund_dbm for _, r in sweep])
    imd = np.array([r.p_imd3_lo_dbm for _, r in sweep])
    floor = np.array([r.numeric_floor_dbm for _, r in sweep])

    order = np.argsort(pins)
    pins, fund, imd, floor = pins[order], fund[order], imd[order], floor[order]

    # Slope-1 reference from the quietest points, then reject compression.
    nref = min(3, len(pins))
    gain_ref = float(np.median(fund[:nref] - pins[:nref]))
    linear = np.abs(fund - pins - gain_ref) < _COMPRESSION_DB
    measurable = imd > floor + _FLOOR_MARGIN_DB
    ok = linear & measurable
    if int(np.sum(ok)) < _MIN_POINTS:
        n_lin = int(np.sum(linear))
        n_meas = int(np.sum(measurable))
        raise SweepRangeError(
            "sweep range unusable: "
            f"{n_lin}/{len(pins)} points below compression, "
            f"{n_meas}/{len(pins)} points with IMD3 above the numeric floor, "
            f"{int(np.sum(ok))} points qualify (need {_MIN_POINTS})"
        )
    return pins[ok], fund[ok], imd[ok]


def extract_iip3(sweep) -> float:
    """Intercept of the slope-1 fundamental and slope-3 IMD3 lines, in dBm.

    Least squares with the slopes pinned to exactly 1 and 3 reduces to mean
    intercepts; the lines cross at Pin = (b1 - b3)/2.
    """
    pins, fund, imd = _qualifying(sweep)
    b1 = float(np.mean(fund - pins))
    b3 = float(np.mean(imd - 3.0 * pins))
    return 0.5 * (b1 - b3)


def gain_from_sweep(sweep) -> float:
    """Mean small-signal gain over the qualifying slope-1 region, in dB."""
    pins, fund, _ = _qualifying(sweep)
    return float(np.mean(fund - pins))
