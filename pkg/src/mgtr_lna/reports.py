"""Design analysis, comparison, and sweep reporting.

Every report carries the normalized config echo, the list of applied
defaults, and the convention notes, so each number is reproducible by
re-running the echoed config through the same pipeline.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

from . import __version__
from .bias_network import compute_power, effective_gm, solve_self_bias
from .design import LnaDesign, Mode, emit_design
from .device_model import PowerSeries, TerminalVoltages, drain_current, transconductance_series
from .exceptions import MgtrError
from .mgtr_core import CancellationResult, composite_series, find_sweet_spot
from .rf_analysis import (
    ImpedanceEnv,
    NoiseModel,
    noise_figure_approx,
    noise_figure_full,
    voltage_gain,
    volterra_iip3,
    volterra_iip3_raw,
)
from .twotone import (
    FullDeviceNonlinearity,
    TwoToneSpec,
    extract_iip3,
    gain_from_sweep,
    simulate_two_tone,
)

CONVENTION_NOTES = (
    "gate/drain impedances z1 and z2 are reused verbatim at the difference frequency",
    "input transfer magnitudes |H| and |A1| are fixed at 1 (frequency-flat)",
    "cascode gate bias is pinned so LT stays saturated at v_ds = lt_vds_v",
)

REPORT_ROW_COLUMNS = (
    "f_hz",
    "gain_db",
    "nf_db_full",
    "nf_db_approx",
    "iip3_dbm_analytic",
    "iip3_dbm_analytic_raw",
    "iip3_dbm_oracle",
    "error",
)


def lt_operating_point(design: LnaDesign, i_total: float):
    """Cascode bias: v_gs of LT carrying the full branch current.

    The LT source node floats, so its v_gs self-adjusts until the device
    carries i_total at the pinned drain bias.  Monotone in v_gs, solved by
    bisection.
    """
    lo, hi = 0.0, design.bias.v_dd + 1.0
    for _ in range(96):
        mid = 0.5 * (lo + hi)
        i = drain_current(
            design.lt, TerminalVoltages(mid, design.lt_vds_v), design.temp_k
        )
        if i < i_total:
            lo = mid
        else:
            hi = mid
    v_gs = 0.5 * (lo + hi)
    return transconductance_series(
        design.lt, TerminalVoltages(v_gs, design.lt_vds_v), design.temp_k
    ), v_gs


def impedance_env(design: LnaDesign, gm_lt: float | None) -> ImpedanceEnv:
    return ImpedanceEnv(
        r_s=design.r_s, l1=design.l1_h, l2=design.l2_h, gm_lt=gm_lt
    )


@dataclass
class DesignAnalysis:
    """Solved operating state shared by the per-frequency metric rows."""

    design: LnaDesign
    mt_op: object
    st_op: object
    lt_series: PowerSeries
    lt_vgs: float
    composite: PowerSeries
    caps: tuple
    env: ImpedanceEnv
    power_w: float
    mt_eff: float
    st_eff: float | None


def analyze_design(design: LnaDesign) -> DesignAnalysis:
    mt_op, st_op = solve_self_bias(design)
    comp = (
        composite_series(mt_op.series, st_op.series)
        if st_op is not None
        else mt_op.series
    )
    i_total = mt_op.i_d + (st_op.i_d if st_op is not None else 0.0)
    lt_series, lt_vgs = lt_operating_point(design, i_total)
    caps = (
        design.mt.c_gs + (design.st.c_gs if st_op is not None else 0.0),
        design.mt.c_gd + (design.st.c_gd if st_op is not None else 0.0),
    )
    env = impedance_env(design, lt_series.gm)
    mt_eff = effective_gm(mt_op.series.gm, 1.0 / mt_op.r_ct)
    st_eff = (
        effective_gm(st_op.series.gm, 1.0 / st_op.r_ct)
        if st_op is not None
        else None
    )
    return DesignAnalysis(
        design=design,
        mt_op=mt_op,
        st_op=st_op,
        lt_series=lt_series,
        lt_vgs=lt_vgs,
        composite=comp,
        caps=caps,
        env=env,
        power_w=compute_power(design, (mt_op, st_op)),
        mt_eff=mt_eff,
        st_eff=st_eff,
    )


def metric_row(
    analysis: DesignAnalysis,
    f_hz: float,
    with_twotone: bool = False,
) -> dict:
    """All closed-form metrics (and optionally the two-tone cross-check)."""
    design = analysis.design
    omega = 2.0 * math.pi * f_hz
    model = NoiseModel(design.temp_k, design.mt.gamma_noise, design.r_s)
    f_a = f_hz - design.tone_spacing_hz / 2.0
    f_b = f_hz + design.tone_spacing_hz / 2.0
    row = {"f_hz": f_hz, "error": None}
    try:
        row["gain_db"] = voltage_gain(
            analysis.composite.gm, analysis.env.z_out(omega)
        )
        if analysis.st_eff is not None:
            row["nf_db_full"] = noise_figure_full(
                analysis.mt_eff, analysis.st_eff, analysis.lt_series.gm, model
            )
        else:
            row["nf_db_full"] = noise_figure_full(
                analysis.mt_eff, None, analysis.lt_series.gm, model
            )
        row["nf_db_approx"] = noise_figure_approx(analysis.mt_eff, model)
        row["iip3_dbm_analytic"] = volterra_iip3(
            analysis.composite, analysis.caps, analysis.env, f_a, f_b
        )
        row["iip3_dbm_analytic_raw"] = volterra_iip3_raw(
            analysis.composite, analysis.caps, analysis.env, f_a, f_b
        )
    except MgtrError as exc:
        row["error"] = str(exc)
        return row
    if with_twotone:
        try:
            sweep_rows = simulate_two_tone(
                TwoToneSpec(
                    f1=f_a,
                    f2=f_b,
                    pin_dbm_sweep=tuple(design.pin_dbm),
                    nonlinearity=FullDeviceNonlinearity(design),
                    r_ref=design.r_s,
                    z_out_mag=abs(analysis.env.z_out(omega)),
                )
            )
            row["iip3_dbm_oracle"] = extract_iip3(sweep_rows)
            row["gain_db_oracle"] = gain_from_sweep(sweep_rows)
        except MgtrError as exc:
            row["error"] = str(exc)
    return row


def _branch_dict(op):
    if op is None:
        return None
    return {
        "v_gs_v": op.voltages.v_gs,
        "v_ds_v": op.voltages.v_ds,
        "i_d_a": op.i_d,
        "r_ct_ohm": op.r_ct,
        "gm_s": op.series.gm,
        "gm1_a_v2": op.series.gm1,
        "gm2_a_v3": op.series.gm2,
    }


@dataclass
class DesignReport:
    label: str
    mode: str
    rows: list
    operating: dict
    power_w: float
    cancellation: dict | None
    config_echo: dict
    defaults_applied: tuple
    notes: tuple = CONVENTION_NOTES
    tool_version: str = __version__

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(
            buf, fieldnames=list(REPORT_ROW_COLUMNS) + ["gain_db_oracle"],
            extrasaction="ignore", lineterminator="\n",
        )
        writer.writeheader()
        for row in self.rows:
            writer.writerow(row)
        return buf.getvalue()


def design_report(
    design: LnaDesign,
    freqs=None,
    with_twotone: bool = False,
    cancellation: CancellationResult | None = None,
) -> DesignReport:
    if freqs is None:
        freqs = [design.f_center_hz]
    analysis = analyze_design(design)
    rows = [metric_row(analysis, float(f), with_twotone) for f in freqs]
    return DesignReport(
        label=design.label,
        mode=design.mode.value,
        rows=rows,
        operating={
            "mt": _branch_dict(analysis.mt_op),
            "st": _branch_dict(analysis.st_op),
            "lt": {
                "v_gs_v": analysis.lt_vgs,
                "v_ds_v": design.lt_vds_v,
                "gm_s": analysis.lt_series.gm,
            },
        },
        power_w=analysis.power_w,
        cancellation=None if cancellation is None else asdict(cancellation),
        config_echo=design.doc if design.doc is not None else emit_design(design),
        defaults_applied=tuple(design.defaults_applied),
    )


@dataclass
class CompareReport:
    mgtr: DesignReport
    single: DesignReport
    delta_rows: list
    warnings: list
    tool_version: str = __version__

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = [
            "f_hz",
            "iip3_delta_db_analytic",
            "iip3_delta_db_oracle",
            "gain_delta_db",
            "nf_delta_db_approx",
            "error",
        ]
        writer = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore",
                                lineterminator="\n")
        writer.writeheader()
        for row in self.delta_rows:
            writer.writerow(row)
        return buf.getvalue()


def _delta(a, b):
    if a is None or b is None:
        return None
    return a - b


def run_compare(
    mgtr: LnaDesign,
    single: LnaDesign,
    freqs=None,
    with_twotone: bool = True,
    knobs=("ct_st",),
) -> CompareReport:
    """Side-by-side MGTR vs single-gate analysis with a delta table.

    The MGTR design is re-tuned to its cancellation sweet spot first; the
    single-gate design is analyzed as given.  A gain mismatch beyond 0.5 dB
    at the center frequency is recorded as a warning, not an error.  Branch
    failures annotate the affected row and the run continues.
    """
    if freqs is None:
        freqs = [mgtr.f_center_hz]
    warnings = []
    cancellation = None
    tuned = mgtr
    if mgtr.mode is Mode.MGTR:
        try:
            cancellation = find_sweet_spot(mgtr, knobs=knobs)
            tuned = mgtr.with_ct_ratios(
                ct_mt_wl=cancellation.ct_mt_wl,
                ct_st_wl=cancellation.ct_st_wl or None,
            )
        except MgtrError as exc:
            warnings.append(f"sweet-spot search failed: {exc}")
    rep_m = design_report(tuned, freqs, with_twotone, cancellation)
    rep_s = design_report(single, freqs, with_twotone)

    delta_rows = []
    for row_m, row_s in zip(rep_m.rows, rep_s.rows):
        err = row_m.get("error") or row_s.get("error")
        delta_rows.append(
            {
                "f_hz": row_m["f_hz"],
                "iip3_delta_db_analytic": _delta(
                    row_m.get("iip3_dbm_analytic"), row_s.get("iip3_dbm_analytic")
                ),
                "iip3_delta_db_oracle": _delta(
                    row_m.get("iip3_dbm_oracle"), row_s.get("iip3_dbm_oracle")
                ),
                "gain_delta_db": _delta(row_m.get("gain_db"), row_s.get("gain_db")),
                "nf_delta_db_approx": _delta(
                    row_m.get("nf_db_approx"), row_s.get("nf_db_approx")
                ),
                "error": err,
            }
        )

    center = mgtr.f_center_hz
    center_rows = [
        (rm, rs)
        for rm, rs in zip(rep_m.rows, rep_s.rows)
        if abs(rm["f_hz"] - center) < 0.5 * abs(center) + 1
    ]
    pick = min(
        zip(rep_m.rows, rep_s.rows),
        key=lambda pair: abs(pair[0]["f_hz"] - center),
        default=None,
    )
    if pick is not None:
        gm_db = pick[0].get("gain_db")
        gs_db = pick[1].get("gain_db")
        if gm_db is not None and gs_db is not None and abs(gm_db - gs_db) > 0.5:
            warnings.append(
                f"gain mismatch at {pick[0]['f_hz']:.4g} Hz: "
                f"{gm_db:.2f} dB vs {gs_db:.2f} dB (limit 0.5 dB)"
            )
    return CompareReport(rep_m, rep_s, delta_rows, warnings)


# --- knob-path sweeps ------------------------------------------------------


def _numeric_paths(doc, prefix=""):
    paths = []
    for key, val in doc.items():
        path = f"{prefix}{key}"
        if isinstance(val, dict):
            paths.extend(_numeric_paths(val, path + "."))
        elif isinstance(val, (int, float)) and not isinstance(val, bool):
            paths.append(path)
    return paths


def resolve_knob_paths(design: LnaDesign):
    doc = design.doc if design.doc is not None else emit_design(design)
    return sorted(_numeric_paths(doc))


def sweep(design: LnaDesign, knob_path: str, values, with_twotone: bool = False):
    """One metric row per knob value; rows are independent and deterministic.

    The knob path is a dotted reference into the config document, e.g.
    "bias.vb_v" or "devices.ct_st.w_um".
    """
    from .design import load_design
    from .exceptions import ConfigError

    base_doc = design.doc if design.doc is not None else emit_design(design)
    parts = knob_path.split(".")
    probe = base_doc
    for part in parts[:-1]:
        if not isinstance(probe, dict) or part not in probe:
            probe = None
            break
        probe = probe[part]
    leaf_ok = (
        isinstance(probe, dict)
        and parts[-1] in probe
        and isinstance(probe[parts[-1]], (int, float))
        and not isinstance(probe[parts[-1]], bool)
    )
    if not leaf_ok:
        raise ConfigError(
            [
                f"knob path '{knob_path}' does not resolve to a numeric field; "
                "valid paths: " + ", ".join(resolve_knob_paths(design))
            ]
        )

    rows = []
    for value in values:
        doc = json.loads(json.dumps(base_doc))
        target = doc
        for part in parts[:-1]:
            target = target[part]
        target[parts[-1]] = float(value)
        row = {"knob": knob_path, "value": float(value)}
        try:
            d = load_design(doc)
            analysis = analyze_design(d)
            row.update(metric_row(analysis, d.f_center_hz, with_twotone))
            row["power_w"] = analysis.power_w
        except MgtrError as exc:
            row["error"] = str(exc)
        rows.append(row)
    return rows


SWEEP_COLUMNS = (
    "knob",
    "value",
    "f_hz",
    "gain_db",
    "nf_db_full",
    "nf_db_approx",
    "iip3_dbm_analytic",
    "iip3_dbm_analytic_raw",
    "iip3_dbm_oracle",
    "power_w",
    "error",
)


def sweep_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(
        buf, fieldnames=list(SWEEP_COLUMNS), extrasaction="ignore",
        lineterminator="\n",
    )
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()
