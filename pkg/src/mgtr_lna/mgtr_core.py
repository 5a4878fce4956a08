"""Composite power series and the gm'' cancellation search.

MT and ST are parallel devices driven by the same gate node, so their
currents (and every gate-voltage derivative) add.  The search tunes the
free control-transistor ratios so that the window-max of |gm2_MT + gm2_ST|
over a band of shared gate biases is minimized.  The objective is the
window max (Chebyshev), not a single-point null: single-point nulls are
fragile under bias drift.

Search strategy: a coarse log-spaced grid over the free CT ratios, refined
by a small deterministic Nelder-Mead simplex in log space, both confined to
a bounded box around the design's nominal ratios.  An exhaustive-grid
evaluator over the same box stays in-tree as the brute-force oracle for the
optimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bias_network import _CtSolver, _solve_branch_damped, solve_branch_grid
from .device_model import PowerSeries, TerminalVoltages, _curve, transconductance_series
from .exceptions import MgtrError, NoFeasibleCancellationError

# Log-factor search boxes around the nominal CT ratios.  The ST knob moves
# the auxiliary device along its gm'' lobe; the MT knob only trims the main
# branch, so its box is narrow.
ST_FACTOR_BOUNDS = (0.5, 2.0)
MT_FACTOR_BOUNDS = (0.7, 1.43)
WINDOW_POINTS = 21
DEFAULT_WINDOW_HALF_WIDTH = 0.05  # volts of shared gate bias
COARSE_POINTS = 25


@dataclass(frozen=True)
class CancellationResult:
    """Outcome of the sweet-spot search.

    ct_st_wl == 0.0 means the auxiliary branch is disabled (nothing to
    cancel); in that case residual equals baseline by construction.
    """

    ct_st_wl: float
    ct_mt_wl: float
    residual: float  # max |gm2_MT + gm2_ST| over the window [A/V^3]
    baseline: float  # max |gm2_MT| alone over the window [A/V^3]
    window: tuple  # (v_b_lo, v_b_hi) [V]
    discarded: int = 0  # candidates rejected for unsolvable bias points


@dataclass(frozen=True)
class ProfileRow:
    v_b: float
    gm2_mt: float
    gm2_st: float
    gm2_sum: float
    error: str | None = None


def composite_series(mt: PowerSeries, st: PowerSeries) -> PowerSeries:
    """Parallel superposition: currents and all derivatives add."""
    return mt + st


def _branch_gm2_table(design, which, wl_candidates, vb_grid, temp_k):
    """gm2 of one input device over (candidates x window), NaN if unsolvable."""
    card = design.mt if which == "mt" else design.st
    branch = design.bias.ct_mt if which == "mt" else design.bias.ct_st
    wl = np.asarray(wl_candidates, dtype=float)[:, None]
    vb = np.asarray(vb_grid, dtype=float)[None, :]
    i_d, drop = solve_branch_grid(
        card, branch, wl, design.bias.v_dd, vb, design.input_vds_v, temp_k
    )
    v_gs = design.bias.v_dd - drop - vb
    _, _, _, gm2 = _curve(card, v_gs, design.input_vds_v, 0.0, temp_k)
    return np.where(np.isnan(i_d), np.nan, gm2)


def _window_grid(window):
    lo, hi = window
    if not hi >= lo:
        raise ValueError(f"empty window {window}")
    return np.linspace(lo, hi, WINDOW_POINTS)


def _chebyshev(gm2_mt_rows, gm2_st_rows):
    """max_v |mt + st| for every (mt_row, st_row) pair. NaN-propagating."""
    total = gm2_mt_rows[:, None, :] + gm2_st_rows[None, :, :]
    return np.max(np.abs(total), axis=-1)


def exhaustive_grid_search(
    design,
    window,
    n_st: int = 200,
    n_mt: int = 200,
    temp_k: float | None = None,
):
    """Brute-force oracle: dense log grid over both CT ratios.

    Returns (residual, ct_st_wl, ct_mt_wl).  Ties prefer the smaller ST
    ratio, then the smaller MT ratio.
    """
    if temp_k is None:
        temp_k = design.temp_k
    vb_grid = _window_grid(window)
    st_nom = design.bias.ct_st.card.wl
    mt_nom = design.bias.ct_mt.card.wl
    st_wls = st_nom * np.logspace(
        math.log10(ST_FACTOR_BOUNDS[0]), math.log10(ST_FACTOR_BOUNDS[1]), n_st
    )
    mt_wls = mt_nom * np.logspace(
        math.log10(MT_FACTOR_BOUNDS[0]), math.log10(MT_FACTOR_BOUNDS[1]), n_mt
    )
    mt_tab = _branch_gm2_table(design, "mt", mt_wls, vb_grid, temp_k)
    st_tab = _branch_gm2_table(design, "st", st_wls, vb_grid, temp_k)
    obj = _chebyshev(mt_tab, st_tab)  # (n_mt, n_st)
    if np.all(np.isnan(obj)):
        raise NoFeasibleCancellationError("no solvable candidate on the oracle grid")
    flat = np.where(np.isnan(obj), np.inf, obj)
    # Tie-break order: smaller ST ratio first, then smaller MT ratio.
    best = np.inf
    best_ij = (0, 0)
    for j in range(flat.shape[1]):
        for i in range(flat.shape[0]):
            if flat[i, j] < best:
                best = flat[i, j]
                best_ij = (i, j)
    i, j = best_ij
    return float(best), float(st_wls[j]), float(mt_wls[i])


def _nelder_mead(fn, x0, step, maxiter=200, xtol=1e-6, frtol=1e-10):
    """Tiny deterministic simplex minimizer (reflect / expand / contract)."""
    n = len(x0)
    sim = [np.array(x0, dtype=float)]
    for k in range(n):
        v = np.array(x0, dtype=float)
        v[k] += step
        sim.append(v)
    fvals = [fn(v) for v in sim]
    for _ in range(maxiter):
        order = sorted(range(n + 1), key=lambda k: (fvals[k], tuple(sim[k])))
        sim = [sim[k] for k in order]
        fvals = [fvals[k] for k in order]
        spread = max(np.max(np.abs(sim[k] - sim[0])) for k in range(1, n + 1))
        if spread < xtol and abs(fvals[-1] - fvals[0]) <= frtol * max(
            abs(fvals[0]), 1e-300
        ):
            break
        centroid = np.mean(sim[:-1], axis=0)
        xr = centroid + (centroid - sim[-1])
        fr = fn(xr)
        if fr < fvals[0]:
            xe = centroid + 2.0 * (centroid - sim[-1])
            fe = fn(xe)
            if fe < fr:
                sim[-1], fvals[-1] = xe, fe
            else:
                sim[-1], fvals[-1] = xr, fr
        elif fr < fvals[-2]:
            sim[-1], fvals[-1] = xr, fr
        else:
            xc = centroid + 0.5 * (sim[-1] - centroid)
            fc = fn(xc)
            if fc < fvals[-1]:
                sim[-1], fvals[-1] = xc, fc
            else:
                for k in range(1, n + 1):
                    sim[k] = sim[0] + 0.5 * (sim[k] - sim[0])
                    fvals[k] = fn(sim[k])
    best = min(range(n + 1), key=lambda k: (fvals[k], tuple(sim[k])))
    return sim[best], fvals[best]


def _scalar_residual(design, window, temp_k):
    """Window residual and baseline via the scalar solver path."""
    from .design import Mode

    vb_grid = _window_grid(window)
    bias = design.bias
    worst_sum = 0.0
    worst_mt = 0.0
    ct_mt = _CtSolver(bias.ct_mt, bias.ct_mt.card.wl, bias.v_dd)
    ct_st = _CtSolver(bias.ct_st, bias.ct_st.card.wl, bias.v_dd)
    for vb in vb_grid:
        _, d_mt = _solve_branch_damped(
            design.mt, ct_mt, bias.v_dd, float(vb), design.input_vds_v, temp_k, "mt"
        )
        s_mt = transconductance_series(
            design.mt,
            TerminalVoltages(bias.v_dd - d_mt - float(vb), design.input_vds_v),
            temp_k,
        )
        gm2_st = 0.0
        if design.mode is Mode.MGTR:
            _, d_st = _solve_branch_damped(
                design.st, ct_st, bias.v_dd, float(vb), design.input_vds_v, temp_k, "st"
            )
            gm2_st = transconductance_series(
                design.st,
                TerminalVoltages(bias.v_dd - d_st - float(vb), design.input_vds_v),
                temp_k,
            ).gm2
        worst_sum = max(worst_sum, abs(s_mt.gm2 + gm2_st))
        worst_mt = max(worst_mt, abs(s_mt.gm2))
    return worst_sum, worst_mt


def find_sweet_spot(
    design,
    window=None,
    knobs=("ct_st",),
    temp_k: float | None = None,
) -> CancellationResult:
    """Search the free CT ratios for the gm'' cancellation sweet spot.

    ``knobs`` names the free ratios, any subset of {"ct_mt", "ct_st"}.  A
    single-gate design (or a clamped ST knob on a design whose ST branch is
    disabled) degenerates to residual == baseline.
    """
    from .design import Mode

    if temp_k is None:
        temp_k = design.temp_k
    if window is None:
        vb = design.bias.v_b
        window = (vb - DEFAULT_WINDOW_HALF_WIDTH, vb + DEFAULT_WINDOW_HALF_WIDTH)
    knobs = tuple(knobs)
    for k in knobs:
        if k not in ("ct_mt", "ct_st"):
            raise ValueError(f"unknown knob {k!r}")
    if not knobs:
        raise ValueError("at least one knob must be free")

    vb_grid = _window_grid(window)
    st_nom = design.bias.ct_st.card.wl
    mt_nom = design.bias.ct_mt.card.wl

    if design.mode is Mode.SINGLE_GATE:
        residual, baseline = _scalar_residual(design, window, temp_k)
        return CancellationResult(0.0, mt_nom, residual, baseline, tuple(window))

    st_free = "ct_st" in knobs
    mt_free = "ct_mt" in knobs
    st_factors = (
        np.logspace(
            math.log10(ST_FACTOR_BOUNDS[0]), math.log10(ST_FACTOR_BOUNDS[1]),
            COARSE_POINTS,
        )
        if st_free
        else np.array([1.0])
    )
    mt_factors = (
        np.logspace(
            math.log10(MT_FACTOR_BOUNDS[0]), math.log10(MT_FACTOR_BOUNDS[1]),
            COARSE_POINTS,
        )
        if mt_free
        else np.array([1.0])
    )
    st_wls = st_nom * st_factors
    mt_wls = mt_nom * mt_factors

    mt_tab = _branch_gm2_table(design, "mt", mt_wls, vb_grid, temp_k)
    st_tab = _branch_gm2_table(design, "st", st_wls, vb_grid, temp_k)
    obj = _chebyshev(mt_tab, st_tab)
    discarded = int(np.sum(np.isnan(obj)))
    if np.all(np.isnan(obj)):
        raise NoFeasibleCancellationError(
            "every coarse candidate failed to produce a solvable bias point"
        )
    flat = np.where(np.isnan(obj), np.inf, obj)
    best = np.inf
    best_ij = (0, 0)
    for j in range(flat.shape[1]):
        for i in range(flat.shape[0]):
            if flat[i, j] < best:
                best = flat[i, j]
                best_ij = (i, j)
    i0, j0 = best_ij

    # Simplex refinement over log FACTORS relative to the nominal ratios.
    # Working in factor space keeps the search path identical when every
    # branch width is rescaled, so results stay exactly scale-covariant.
    free_names = [n for n in ("ct_mt", "ct_st") if (n == "ct_mt" and mt_free) or (
        n == "ct_st" and st_free
    )]
    bounds = {
        "ct_mt": (math.log(MT_FACTOR_BOUNDS[0]), math.log(MT_FACTOR_BOUNDS[1])),
        "ct_st": (math.log(ST_FACTOR_BOUNDS[0]), math.log(ST_FACTOR_BOUNDS[1])),
    }
    state = {"discarded": discarded}

    def objective(log_factors):
        wl = {"ct_mt": mt_nom, "ct_st": st_nom}
        for name, v in zip(free_names, log_factors):
            lo, hi = bounds[name]
            if not (lo <= v <= hi):
                return math.inf
            nom = mt_nom if name == "ct_mt" else st_nom
            wl[name] = math.exp(v) * nom
        row_mt = _branch_gm2_table(design, "mt", [wl["ct_mt"]], vb_grid, temp_k)
        row_st = _branch_gm2_table(design, "st", [wl["ct_st"]], vb_grid, temp_k)
        val = _chebyshev(row_mt, row_st)[0, 0]
        if np.isnan(val):
            state["discarded"] += 1
            return math.inf
        return float(val)

    x0 = []
    for name in free_names:
        factors = mt_factors if name == "ct_mt" else st_factors
        idx = i0 if name == "ct_mt" else j0
        x0.append(math.log(float(factors[idx])))
    step = 0.06  # about half a coarse cell, in log units
    xbest, fbest = _nelder_mead(objective, x0, step)

    chosen = {"ct_mt": mt_nom, "ct_st": st_nom}
    if fbest <= best:
        for name, v in zip(free_names, xbest):
            nom = mt_nom if name == "ct_mt" else st_nom
            chosen[name] = math.exp(v) * nom
    else:
        if mt_free:
            chosen["ct_mt"] = float(mt_wls[i0])
        if st_free:
            chosen["ct_st"] = float(st_wls[j0])

    tuned = design.with_ct_ratios(ct_mt_wl=chosen["ct_mt"], ct_st_wl=chosen["ct_st"])
    residual, baseline = _scalar_residual(tuned, window, temp_k)

    # Disabling ST is always an admissible candidate; never return worse.
    if residual > baseline:
        return CancellationResult(
            0.0, chosen["ct_mt"], baseline, baseline, tuple(window),
            state["discarded"],
        )
    return CancellationResult(
        chosen["ct_st"], chosen["ct_mt"], residual, baseline, tuple(window),
        state["discarded"],
    )


def gm2_profile(design, v_grid):
    """Branch and composite gm'' along a shared-gate-bias grid.

    Errors at individual points are recorded on the row instead of aborting
    the profile.
    """
    from .design import Mode

    bias = design.bias
    ct_mt = _CtSolver(bias.ct_mt, bias.ct_mt.card.wl, bias.v_dd)
    ct_st = _CtSolver(bias.ct_st, bias.ct_st.card.wl, bias.v_dd)
    rows = []
    for vb in v_grid:
        vb = float(vb)
        try:
            _, d_mt = _solve_branch_damped(
                design.mt, ct_mt, bias.v_dd, vb, design.input_vds_v,
                design.temp_k, "mt",
            )
            gm2_mt = transconductance_series(
                design.mt,
                TerminalVoltages(bias.v_dd - d_mt - vb, design.input_vds_v),
                design.temp_k,
            ).gm2
            gm2_st = 0.0
            if design.mode is Mode.MGTR:
                _, d_st = _solve_branch_damped(
                    design.st, ct_st, bias.v_dd, vb, design.input_vds_v,
                    design.temp_k, "st",
                )
                gm2_st = transconductance_series(
                    design.st,
                    TerminalVoltages(bias.v_dd - d_st - vb, design.input_vds_v),
                    design.temp_k,
                ).gm2
        except MgtrError as exc:
            rows.append(ProfileRow(vb, math.nan, math.nan, math.nan, str(exc)))
            continue
        rows.append(ProfileRow(vb, gm2_mt, gm2_st, gm2_mt + gm2_st))
    return rows
