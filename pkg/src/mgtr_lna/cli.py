"""Command-line interface.

Subcommands: op, derivs, sweetspot, iip3, nf, gain, twotone, compare, sweep.
Global flags: --config PATH (required), --out PATH, --format {csv|json},
--mode {mgtr|single}.

Exit codes: 0 success, 2 configuration/validation error, 3 numerical
non-convergence (bias solve, triode capability, sweep extraction).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .design import Mode, load_design_file
from .exceptions import (
    ConfigError,
    ConvergenceError,
    MgtrError,
    NoFeasibleCancellationError,
    NotInTriodeError,
    SingularTermError,
    SweepRangeError,
)
from .mgtr_core import find_sweet_spot, gm2_profile
from .reports import (
    REPORT_ROW_COLUMNS,
    analyze_design,
    design_report,
    metric_row,
    run_compare,
    sweep,
    sweep_to_csv,
)
from .twotone import (
    FullDeviceNonlinearity,
    TwoToneSpec,
    extract_iip3,
    gain_from_sweep,
    simulate_two_tone,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _write(args, text: str):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _rows_to_csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(
        buf, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n"
    )
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _load(args):
    design = load_design_file(args.config)
    if args.mode:
        design = design.with_mode(Mode(args.mode))
    return design


def _emit_row_report(args, design, with_twotone=False):
    report = design_report(design, with_twotone=with_twotone)
    if args.format == "json":
        _write(args, report.to_json())
    else:
        _write(args, report.to_csv())


def cmd_op(args):
    design = _load(args)
    report = design_report(design)
    if args.format == "json":
        payload = {
            "operating": report.operating,
            "power_w": report.power_w,
            "defaults_applied": list(report.defaults_applied),
            "notes": list(report.notes),
            "config_echo": report.config_echo,
            "tool_version": report.tool_version,
        }
        _write(args, json.dumps(payload, indent=2, sort_keys=True))
        return
    rows = []
    for name, op in report.operating.items():
        if op is None:
            continue
        row = {"branch": name}
        row.update(op)
        rows.append(row)
    cols = ["branch", "v_gs_v", "v_ds_v", "i_d_a", "r_ct_ohm", "gm_s",
            "gm1_a_v2", "gm2_a_v3"]
    _write(args, _rows_to_csv(rows, cols))


def cmd_derivs(args):
    design = _load(args)
    half = args.span / 2.0
    grid = np.linspace(design.bias.v_b - half, design.bias.v_b + half, args.points)
    rows = gm2_profile(design, grid)
    dicts = [
        {
            "v_b": r.v_b,
            "gm2_mt": r.gm2_mt,
            "gm2_st": r.gm2_st,
            "gm2_sum": r.gm2_sum,
            "error": r.error,
        }
        for r in rows
    ]
    if args.format == "json":
        _write(args, json.dumps(dicts, indent=2))
    else:
        _write(args, _rows_to_csv(dicts, ["v_b", "gm2_mt", "gm2_st", "gm2_sum", "error"]))


def cmd_sweetspot(args):
    design = _load(args)
    knobs = tuple(k.strip() for k in args.knobs.split(",") if k.strip())
    result = find_sweet_spot(design, knobs=knobs)
    payload = asdict(result)
    if args.format == "json":
        _write(args, json.dumps(payload, indent=2, sort_keys=True))
    else:
        _write(args, _rows_to_csv([payload], list(payload)))


def _single_metric(args, keys):
    design = _load(args)
    analysis = analyze_design(design)
    row = metric_row(analysis, design.f_center_hz)
    row["power_w"] = analysis.power_w
    picked = {k: row.get(k) for k in ("f_hz", *keys, "error")}
    if args.format == "json":
        _write(args, json.dumps(picked, indent=2, sort_keys=True))
    else:
        _write(args, _rows_to_csv([picked], list(picked)))


def cmd_iip3(args):
    _single_metric(args, ("iip3_dbm_analytic", "iip3_dbm_analytic_raw"))


def cmd_nf(args):
    _single_metric(args, ("nf_db_full", "nf_db_approx"))


def cmd_gain(args):
    _single_metric(args, ("gain_db",))


def cmd_twotone(args):
    design = _load(args)
    analysis = analyze_design(design)
    omega = 2.0 * math.pi * design.f_center_hz
    spec = TwoToneSpec(
        f1=design.f_center_hz - design.tone_spacing_hz / 2.0,
        f2=design.f_center_hz + design.tone_spacing_hz / 2.0,
        pin_dbm_sweep=tuple(design.pin_dbm),
        nonlinearity=FullDeviceNonlinearity(design),
        r_ref=design.r_s,
        z_out_mag=abs(analysis.env.z_out(omega)),
    )
    rows = simulate_two_tone(spec)
    table = [
        {
            "pin_dbm": pin,
            "pout_fund_dbm": r.p_fund_dbm,
            "pout_imd3_dbm": r.p_imd3_lo_dbm,
            "imd3_dbc": r.imd3_dbc,
        }
        for pin, r in rows
    ]
    if args.format == "csv":
        _write(args, _rows_to_csv(
            table, ["pin_dbm", "pout_fund_dbm", "pout_imd3_dbm", "imd3_dbc"]
        ))
        return
    pins = np.array([p for p, _ in rows])
    fund = np.array([r.p_fund_dbm for _, r in rows])
    imd = np.array([r.p_imd3_lo_dbm for _, r in rows])
    summary = {
        "iip3_dbm": extract_iip3(rows),
        "gain_db": gain_from_sweep(rows),
        "slope_fund_db_per_db": float(np.polyfit(pins, fund, 1)[0]),
        "slope_imd3_db_per_db": float(np.polyfit(pins, imd, 1)[0]),
        "f1_hz": rows[0][1].f1_hz,
        "f2_hz": rows[0][1].f2_hz,
        "snap_distance_hz": rows[0][1].snap_distance_hz,
        "parseval_residual_max": max(r.parseval_residual for _, r in rows),
        "rows": table,
        "config_echo": design.doc,
        "tool_version": __version__,
    }
    _write(args, json.dumps(summary, indent=2, sort_keys=True))


def cmd_compare(args):
    design = _load(args)
    mgtr = design.with_mode(Mode.MGTR)
    single = design.with_mode(Mode.SINGLE_GATE)
    report = run_compare(mgtr, single, with_twotone=not args.no_twotone)
    if args.format == "json":
        _write(args, report.to_json())
    else:
        _write(args, report.to_csv())


def cmd_sweep(args):
    design = _load(args)
    if args.values:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    else:
        if args.start is None or args.stop is None:
            raise ConfigError(["sweep needs --values or --start/--stop/--num"])
        values = list(np.linspace(args.start, args.stop, args.num))
    rows = sweep(design, args.knob, values, with_twotone=args.twotone)
    if args.format == "json":
        _write(args, json.dumps(rows, indent=2))
    else:
        _write(args, sweep_to_csv(rows))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mgtr-lna",
        description="Analysis toolkit for self-biased MGTR low-noise amplifiers",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON design document")
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--mode", choices=("mgtr", "single"),
                       help="override the design mode")

    p = sub.add_parser("op", help="solved operating points and power")
    common(p)
    p.set_defaults(fn=cmd_op)

    p = sub.add_parser("derivs", help="gm'' profile vs shared gate bias")
    common(p)
    p.add_argument("--span", type=float, default=0.3,
                   help="total bias span in volts (default 0.3)")
    p.add_argument("--points", type=int, default=121)
    p.set_defaults(fn=cmd_derivs)

    p = sub.add_parser("sweetspot", help="gm'' cancellation search")
    common(p)
    p.add_argument("--knobs", default="ct_st",
                   help="comma list of free CT ratios (ct_st, ct_mt)")
    p.set_defaults(fn=cmd_sweetspot)

    for name, fn, help_text in (
        ("iip3", cmd_iip3, "closed-form intercept at the center frequency"),
        ("nf", cmd_nf, "noise figure (full and approximate)"),
        ("gain", cmd_gain, "voltage gain at the center frequency"),
    ):
        p = sub.add_parser(name, help=help_text)
        common(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("twotone", help="two-tone sweep and intercept")
    common(p)
    p.set_defaults(fn=cmd_twotone)

    p = sub.add_parser("compare", help="MGTR vs single-gate twin")
    common(p)
    p.add_argument("--no-twotone", action="store_true",
                   help="skip the time-domain cross-check")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("sweep", help="sweep one numeric config field")
    common(p)
    p.add_argument("--knob", required=True,
                   help="dotted config path, e.g. bias.vb_v")
    p.add_argument("--values", help="comma-separated values")
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--num", type=int, default=11)
    p.add_argument("--twotone", action="store_true",
                   help="include the two-tone oracle per row")
    p.set_defaults(fn=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.fn(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, NotInTriodeError, SingularTermError,
            SweepRangeError, NoFeasibleCancellationError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MgtrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
