"""Self-biasing network solver.

Topology: the PMOS input devices MT and ST share a single gate bias V_B.
Each device's source reaches V_DD through its own NMOS control transistor
(CT) operating as a triode resistor, so the input device sees

    v_gs = (v_dd - i_d * r_ct) - v_b        (magnitude convention)

with r_ct itself re-evaluated at the operating point from the triode
formula, i.e. the CT's v_ds equals the self-consistent source-node drop
i_d * r_ct.  A CT whose bulk is tied to VSS sees the full source-node
potential as reverse body bias, which raises its threshold and therefore
its resistance at identical terminal voltages.

The CT gate drive is specified directly as a gate-to-source voltage in the
branch description (the gate rail is treated as available); only the drop
and, for VSS ties, the body bias move with the operating point.

The branch solve is a damped fixed point on the branch current (damping
0.5, relative tolerance 1e-9) with a bisection fallback when the iteration
oscillates; the residual i -> I_device(v_gs(i)) - i is strictly decreasing
in i, so bisection over [0, I_device(v_dd - v_b)] is guaranteed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .device_model import (
    DEFAULT_TEMP_K,
    BulkTie,
    MosfetParams,
    PowerSeries,
    TerminalVoltages,
    _curve,
    _threshold_arr,
    threshold_voltage,
    transconductance_series,
)
from .exceptions import ConvergenceError, NotInTriodeError

MAX_FIXED_POINT_ITER = 200
FIXED_POINT_TOL = 1e-9
FIXED_POINT_DAMPING = 0.5
# Fixed iteration counts for the deterministic vector bisections.
_DROP_BISECT_ITER = 64
_CURRENT_BISECT_ITER = 64


@dataclass(frozen=True)
class CtBranch:
    """One control transistor: model card, bulk tie, and gate drive."""

    card: MosfetParams
    bulk_tie: BulkTie = BulkTie.SOURCE
    v_gs_drive: float = 1.5  # CT gate-to-source voltage [V]

    def __post_init__(self):
        if self.v_gs_drive <= 0:
            raise ValueError(f"CT gate drive must be > 0, got {self.v_gs_drive}")


@dataclass(frozen=True)
class BiasNetwork:
    """Supply, shared gate bias, and the two CT branches."""

    v_dd: float
    v_b: float
    ct_mt: CtBranch
    ct_st: CtBranch

    def __post_init__(self):
        if not (0.0 < self.v_b < self.v_dd):
            raise ValueError(
                f"need 0 < v_b < v_dd, got v_b={self.v_b}, v_dd={self.v_dd}"
            )


@dataclass(frozen=True)
class BranchOperatingPoint:
    """Solved bias of one input-device branch."""

    device: str  # "mt" or "st"
    voltages: TerminalVoltages
    i_d: float  # branch current [A]
    r_ct: float  # realized CT triode resistance [ohm]
    series: PowerSeries  # device power series at this bias


class _CtSolver:
    """Drop-vs-current map of one CT, vectorized over current.

    For a SOURCE-tied bulk the overdrive is constant and the drop has a
    closed form; for a VSS tie the threshold depends on the drop through the
    body bias and the drop is found by bisection.  Both paths are exact-bin
    deterministic.
    """

    def __init__(self, branch: CtBranch, wl: float, v_dd: float):
        if wl < 0:
            raise ValueError(f"CT w/l must be >= 0, got {wl}")
        self.branch = branch
        self.v_dd = v_dd
        self.kappa = branch.card.k_prime * wl  # k' * W/L [A/V^2]
        card = branch.card
        self.vss_tie = branch.bulk_tie is BulkTie.VSS

        drive = branch.v_gs_drive
        if self.vss_tie:
            # Overdrive depends on the drop d through v_sb = v_dd - d.
            # Find the triode edge (overdrive = 0) and the drop at which the
            # CT current peaks; both are knob-independent.
            def od(d):
                vsb = np.maximum(self.v_dd - d, 0.0)
                return drive - _threshold_arr(card, vsb) - d

            self._od = od
            if od(0.0) <= 0:
                self.d_peak = 0.0
                self.i_max_unit = 0.0  # per unit kappa
                return
            hi = drive  # od(drive) <= -gamma-term < 0
            d_edge = _bisect_scalar(od, 0.0, hi)
            # i_unit(d) = od(d)*d peaks where od + d*od' = 0; od' in (-1, -1+g).
            dpk = _golden_max(lambda d: od(d) * d, 0.0, d_edge)
            self.d_peak = dpk
            self.i_max_unit = od(dpk) * dpk
        else:
            od0 = drive - card.v_t0
            self._od0 = od0
            if od0 <= 0:
                self.d_peak = 0.0
                self.i_max_unit = 0.0
                return
            self.d_peak = 0.5 * od0
            self.i_max_unit = 0.25 * od0 * od0

    @property
    def i_max(self) -> float:
        """Largest current the CT can carry inside triode."""
        return self.kappa * self.i_max_unit

    def drop(self, i):
        """Source-node drop d solving i = kappa * overdrive(d) * d, vectorized.

        Callers must keep i <= i_max; values beyond that have no triode
        solution.
        """
        i = np.asarray(i, dtype=float)
        if self.kappa == 0.0 or self.i_max_unit == 0.0:
            return np.zeros_like(i)
        target = i / self.kappa
        if not self.vss_tie:
            od0 = self._od0
            disc = np.maximum(od0 * od0 - 4.0 * target, 0.0)
            return 0.5 * (od0 - np.sqrt(disc))
        lo = np.zeros_like(i)
        hi = np.full_like(i, self.d_peak)
        for _ in range(_DROP_BISECT_ITER):
            mid = 0.5 * (lo + hi)
            too_small = self._od(mid) * mid < target
            lo = np.where(too_small, mid, lo)
            hi = np.where(too_small, hi, mid)
        return 0.5 * (lo + hi)

    def resistance(self, d):
        """Eq.-form triode resistance 1/(kappa * overdrive) at drop d."""
        if self.kappa == 0.0:
            return math.inf
        if self.vss_tie:
            od = self._od(d)
        else:
            od = self._od0 - d
        return 1.0 / (self.kappa * od)

    def terminal_voltages(self, d) -> TerminalVoltages:
        vsb = max(self.v_dd - d, 0.0) if self.vss_tie else 0.0
        return TerminalVoltages(self.branch.v_gs_drive, d, vsb)


def _bisect_scalar(fn, lo, hi, iters=80):
    flo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if (fn(mid) > 0) == (flo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _golden_max(fn, lo, hi, iters=120):
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def _device_current_arr(card: MosfetParams, v_gs, v_ds, temp_k):
    i, _, _, _ = _curve(card, v_gs, v_ds, 0.0, temp_k)
    return i


def solve_branch_bisect(
    card: MosfetParams,
    ct: _CtSolver,
    v_dd: float,
    v_b: float,
    input_vds: float,
    temp_k: float = DEFAULT_TEMP_K,
    rel_tol: float = 1e-12,
    branch_name: str = "branch",
) -> tuple[float, float]:
    """Bisection solve of the branch fixed point. Returns (i_d, drop).

    The residual F(i) = I_device(v_gs(i)) - i is strictly decreasing, so the
    root is bracketed by [0, I_device(v_dd - v_b)].  Used both as the
    fallback of the damped iteration and as the reference oracle in tests.
    """
    i_open = float(_device_current_arr(card, v_dd - v_b, input_vds, temp_k))
    if i_open == 0.0:
        return 0.0, 0.0
    hi = i_open
    if ct.i_max < hi:
        # Check whether the demand at the triode edge exceeds CT capability.
        d_pk = ct.d_peak
        demand = float(
            _device_current_arr(card, v_dd - d_pk - v_b, input_vds, temp_k)
        )
        if demand > ct.i_max:
            raise NotInTriodeError(
                branch_name,
                f"device demands {demand:.3e} A but CT carries at most "
                f"{ct.i_max:.3e} A in triode",
            )
        hi = ct.i_max
    lo = 0.0
    while (hi - lo) > rel_tol * max(hi, 1e-30):
        mid = 0.5 * (lo + hi)
        d = float(ct.drop(mid))
        f = float(_device_current_arr(card, v_dd - d - v_b, input_vds, temp_k)) - mid
        if f > 0:
            lo = mid
        else:
            hi = mid
        if hi == lo:
            break
    i = 0.5 * (lo + hi)
    return i, float(ct.drop(i))


def _solve_branch_damped(
    card: MosfetParams,
    ct: _CtSolver,
    v_dd: float,
    v_b: float,
    input_vds: float,
    temp_k: float,
    branch_name: str,
) -> tuple[float, float]:
    """Damped fixed point with oscillation-triggered bisection fallback."""
    i_open = float(_device_current_arr(card, v_dd - v_b, input_vds, temp_k))
    if i_open == 0.0:
        return 0.0, 0.0
    i_cap = ct.i_max
    if i_cap < i_open:
        demand = float(
            _device_current_arr(card, v_dd - ct.d_peak - v_b, input_vds, temp_k)
        )
        if demand > i_cap:
            raise NotInTriodeError(
                branch_name,
                f"device demands {demand:.3e} A but CT carries at most "
                f"{i_cap:.3e} A in triode",
            )
    i = min(i_open, i_cap)
    prev_delta = None
    flips = 0
    for it in range(MAX_FIXED_POINT_ITER):
        d = float(ct.drop(i))
        target = float(
            _device_current_arr(card, v_dd - d - v_b, input_vds, temp_k)
        )
        delta = target - i
        i_next = i + FIXED_POINT_DAMPING * delta
        i_next = min(max(i_next, 0.0), min(i_open, i_cap))
        if abs(i_next - i) < FIXED_POINT_TOL * max(abs(i_next), 1e-30):
            return i_next, float(ct.drop(i_next))
        if prev_delta is not None and delta * prev_delta < 0:
            flips += 1
            if flips >= 4:
                # Oscillating map (strong branch feedback): bisection wins.
                return solve_branch_bisect(
                    card, ct, v_dd, v_b, input_vds, temp_k, 1e-13, branch_name
                )
        else:
            flips = 0
        prev_delta = delta
        i = i_next
    raise ConvergenceError(
        branch_name, f"no fixed point after {MAX_FIXED_POINT_ITER} iterations"
    )


def solve_branch_grid(
    card: MosfetParams,
    branch: CtBranch,
    wl_ct,
    v_dd: float,
    v_b,
    input_vds: float,
    temp_k: float = DEFAULT_TEMP_K,
):
    """Vectorized branch solve over broadcastable (wl_ct, v_b) arrays.

    Returns (i_d, drop) arrays; entries whose CT cannot stay in triode are
    NaN.  Pure bisection with a fixed iteration count, deterministic.
    """
    wl_ct = np.asarray(wl_ct, dtype=float)
    v_b = np.asarray(v_b, dtype=float)
    wl_b, vb_b = np.broadcast_arrays(wl_ct, v_b)
    shape = wl_b.shape
    i_out = np.full(shape, np.nan)
    d_out = np.full(shape, np.nan)

    # The drop map depends on wl only through kappa, which scales out of the
    # peak location; group by unique wl for the closed-form/bisect machinery.
    for wl in np.unique(wl_b):
        sel = wl_b == wl
        ct = _CtSolver(branch, float(wl), v_dd)
        vb = vb_b[sel]
        i_open = _device_current_arr(card, v_dd - vb, input_vds, temp_k)
        if ct.i_max_unit == 0.0 or ct.kappa == 0.0:
            feasible = i_open == 0.0
            i_sel = np.where(feasible, 0.0, np.nan)
            i_out[sel] = i_sel
            d_out[sel] = np.where(feasible, 0.0, np.nan)
            continue
        cap = ct.i_max
        demand_at_peak = _device_current_arr(
            card, v_dd - ct.d_peak - vb, input_vds, temp_k
        )
        feasible = (i_open <= cap) | (demand_at_peak <= cap)
        hi = np.minimum(i_open, cap)
        lo = np.zeros_like(hi)
        for _ in range(_CURRENT_BISECT_ITER):
            mid = 0.5 * (lo + hi)
            d = ct.drop(mid)
            f = _device_current_arr(card, v_dd - d - vb, input_vds, temp_k) - mid
            pos = f > 0
            lo = np.where(pos, mid, lo)
            hi = np.where(pos, hi, mid)
        i_sel = 0.5 * (lo + hi)
        d_sel = ct.drop(i_sel)
        i_out[sel] = np.where(feasible, i_sel, np.nan)
        d_out[sel] = np.where(feasible, d_sel, np.nan)
    return i_out, d_out


def _branch_operating_point(
    device: str,
    card: MosfetParams,
    branch: CtBranch,
    v_dd: float,
    v_b: float,
    input_vds: float,
    temp_k: float,
) -> BranchOperatingPoint:
    ct = _CtSolver(branch, branch.card.wl, v_dd)
    i_d, drop = _solve_branch_damped(card, ct, v_dd, v_b, input_vds, temp_k, device)
    voltages = TerminalVoltages(v_dd - drop - v_b, input_vds, 0.0)
    series = transconductance_series(card, voltages, temp_k)
    # Converged-solution residual must be < 1e-9 relative in current.
    resid = abs(series.i_dc - i_d)
    if resid > FIXED_POINT_TOL * max(abs(i_d), 1e-30) and resid > 1e-18:
        raise ConvergenceError(
            device, f"residual {resid:.3e} A at i_d = {i_d:.3e} A"
        )
    r_ct = ct.resistance(drop)
    return BranchOperatingPoint(device, voltages, i_d, r_ct, series)


def solve_self_bias(design, temp_k: float | None = None):
    """Solve both branches of a design.

    Returns (mt_op, st_op); st_op is None in single-gate mode.
    """
    from .design import Mode  # local import, avoids a cycle

    if temp_k is None:
        temp_k = design.temp_k
    bias = design.bias
    mt_op = _branch_operating_point(
        "mt", design.mt, bias.ct_mt, bias.v_dd, bias.v_b, design.input_vds_v, temp_k
    )
    if design.mode is Mode.SINGLE_GATE:
        return mt_op, None
    st_op = _branch_operating_point(
        "st", design.st, bias.ct_st, bias.v_dd, bias.v_b, design.input_vds_v, temp_k
    )
    return mt_op, st_op


def effective_gm(gm_dev: float, gm_ct: float) -> float:
    """Degenerated transconductance gm / (1 + gm/gm_ct).

    gm_ct is the conductance presented by the CT; at an operating point that
    is 1/r_ct, the CT acting as a resistor.
    """
    if gm_ct <= 0:
        raise ValueError(f"gm_ct must be > 0, got {gm_ct}")
    if gm_dev < 0:
        raise ValueError(f"gm_dev must be >= 0, got {gm_dev}")
    return gm_dev / (1.0 + gm_dev / gm_ct)


def ct_size_for_target(
    target_r: float,
    ct_bias: TerminalVoltages,
    card: MosfetParams,
    bulk_tie: BulkTie = BulkTie.SOURCE,
) -> float:
    """Invert the triode formula: W/L that realizes target_r at ct_bias.

    For a VSS tie the threshold is evaluated at the supplied v_sb; a SOURCE
    tie ignores v_sb (the bulk rides with the source).
    """
    if target_r <= 0:
        raise ValueError(f"target_r must be > 0, got {target_r}")
    v_sb = ct_bias.v_sb if bulk_tie is BulkTie.VSS else 0.0
    overdrive = ct_bias.v_gs - threshold_voltage(card, v_sb) - ct_bias.v_ds
    if overdrive <= 0:
        raise NotInTriodeError(
            "ct", f"v_gs - v_th - v_ds = {overdrive:.6g} V <= 0"
        )
    return 1.0 / (card.k_prime * target_r * overdrive)


def compute_power(design, ops) -> float:
    """Supply power v_dd * (i_mt + i_st); the cascode reuses branch current."""
    mt_op, st_op = ops
    total = mt_op.i_d + (st_op.i_d if st_op is not None else 0.0)
    return design.bias.v_dd * total
