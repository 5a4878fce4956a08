"""Design description and strict configuration I/O.

A design document is a single JSON object with unit-suffixed field names:

    devices:  mt, st, ct_mt, ct_st, lt   (model cards; w_um/l_um required)
    passives: l1_nh, l2_nh
    bias:     vdd_v, vb_v [, input_vds_v, lt_vds_v]
    env:      rs_ohm, temp_k
    analysis: f_center_ghz, tone_spacing_mhz, pin_dbm (list)
    mode:     "mgtr" | "single"          (optional, default "mgtr")
    label:    free text                  (optional)

The schema is strict: unknown keys are rejected (with a suggestion when a
close match exists), and validation reports every problem at once.  Every
default that gets applied is recorded in ``defaults_applied`` so no
physical parameter is defaulted silently.
"""

from __future__ import annotations

import difflib
import json
from dataclasses import dataclass, field, replace
from enum import Enum

from .bias_network import BiasNetwork, CtBranch
from .device_model import BulkTie, MosfetParams, Polarity
from .exceptions import ConfigError


class Mode(Enum):
    MGTR = "mgtr"
    SINGLE_GATE = "single"


@dataclass
class LnaDesign:
    """Full amplifier description."""

    mt: MosfetParams
    st: MosfetParams
    lt: MosfetParams
    bias: BiasNetwork
    l1_h: float
    l2_h: float
    mode: Mode = Mode.MGTR
    r_s: float = 50.0
    temp_k: float = 300.0
    input_vds_v: float = 0.5  # |v_ds| of MT/ST, pinned so they sit in saturation
    lt_vds_v: float = 0.5  # |v_ds| of the cascode, pinned the same way
    label: str = ""
    f_center_hz: float = 2.1e9
    tone_spacing_hz: float = 5e6
    pin_dbm: tuple = tuple(float(p) for p in range(-40, -9))
    doc: dict | None = None  # normalized config echo
    defaults_applied: tuple = ()

    def __post_init__(self):
        if self.r_s <= 0:
            raise ValueError(f"r_s must be > 0, got {self.r_s}")
        if self.l1_h < 0 or self.l2_h < 0:
            raise ValueError("inductances must be >= 0")
        if self.temp_k <= 0:
            raise ValueError(f"temp_k must be > 0, got {self.temp_k}")

    def with_mode(self, mode: Mode) -> "LnaDesign":
        d = replace(self, mode=mode)
        if d.doc is not None:
            doc = json.loads(json.dumps(d.doc))
            doc["mode"] = mode.value
            d.doc = doc
        return d

    def with_ct_ratios(
        self, ct_mt_wl: float | None = None, ct_st_wl: float | None = None
    ) -> "LnaDesign":
        """Copy with re-sized control transistors (w/l set, length kept)."""
        bias = self.bias
        ct_mt = bias.ct_mt
        ct_st = bias.ct_st
        if ct_mt_wl is not None:
            ct_mt = replace(ct_mt, card=ct_mt.card.scaled(ct_mt_wl))
        if ct_st_wl is not None and ct_st_wl > 0:
            ct_st = replace(ct_st, card=ct_st.card.scaled(ct_st_wl))
        d = replace(self, bias=replace(bias, ct_mt=ct_mt, ct_st=ct_st))
        if ct_st_wl is not None and ct_st_wl == 0.0:
            d = d.with_mode(Mode.SINGLE_GATE)
        if d.doc is not None:
            doc = json.loads(json.dumps(d.doc))
            if ct_mt_wl is not None:
                doc["devices"]["ct_mt"]["w_um"] = ct_mt.card.w * 1e6
            if ct_st_wl is not None and ct_st_wl > 0:
                doc["devices"]["ct_st"]["w_um"] = ct_st.card.w * 1e6
            doc["mode"] = d.mode.value
            d.doc = doc
        return d


# --- schema tables -------------------------------------------------------

_CARD_KEYS = {
    "polarity": None,  # handled specially
    "vt0_v": ("v_t0", 1.0, 0.4),
    "kprime_ua_v2": ("k_prime", 1e-6, 200.0),
    "w_um": ("w", 1e-6, None),  # required
    "l_um": ("l", 1e-6, None),  # required
    "gamma_sqrtv": ("gamma_body", 1.0, 0.4),
    "phi2b_v": ("phi2b", 1.0, 0.7),
    "n_slope": ("n_slope", 1.0, 1.3),
    "cgs_ff": ("c_gs", 1e-15, 100.0),
    "cgd_ff": ("c_gd", 1e-15, 20.0),
    "gamma_noise": ("gamma_noise", 1.0, 2.0 / 3.0),
}
_CT_EXTRA_KEYS = {"bulk_tie", "vgs_v"}
_DEVICE_SLOTS = ("mt", "st", "ct_mt", "ct_st", "lt")
_DEFAULT_POLARITY = {
    "mt": "pmos",
    "st": "pmos",
    "lt": "pmos",
    "ct_mt": "nmos",
    "ct_st": "nmos",
}
_TOP_KEYS = {"devices", "passives", "bias", "env", "analysis", "mode", "label"}
_PASSIVE_KEYS = {"l1_nh": 2.0, "l2_nh": 38.0}
_BIAS_KEYS = {"vdd_v": None, "vb_v": None, "input_vds_v": 0.5, "lt_vds_v": 0.5}
_ENV_KEYS = {"rs_ohm": 50.0, "temp_k": 300.0}
_ANALYSIS_KEYS = {
    "f_center_ghz": 2.1,
    "tone_spacing_mhz": 5.0,
    "pin_dbm": [float(p) for p in range(-40, -9)],
}


def _suggest(key, known):
    close = difflib.get_close_matches(key, known, n=1)
    return f" (did you mean '{close[0]}'?)" if close else ""


def _check_unknown(section: dict, known, path, problems):
    for key in section:
        if key not in known:
            problems.append(f"unknown key '{path}.{key}'" + _suggest(key, known))


def _number(section, key, path, problems, default=None, defaults_applied=None):
    if key not in section:
        if default is None:
            problems.append(f"missing required field '{path}.{key}'")
            return None
        if defaults_applied is not None:
            defaults_applied.append(f"{path}.{key} = {default}")
        return float(default)
    val = section[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        problems.append(f"'{path}.{key}' must be a number, got {val!r}")
        return None
    return float(val)


def _load_card(doc, slot, problems, defaults_applied):
    path = f"devices.{slot}"
    known = set(_CARD_KEYS)
    if slot.startswith("ct_"):
        known |= _CT_EXTRA_KEYS
    section = doc.get(slot)
    if section is None:
        problems.append(f"missing required section '{path}'")
        return None, None, None
    if not isinstance(section, dict):
        problems.append(f"'{path}' must be an object")
        return None, None, None
    _check_unknown(section, known, path, problems)

    kwargs = {}
    for key, spec in _CARD_KEYS.items():
        if key == "polarity":
            pol = section.get("polarity")
            if pol is None:
                pol = _DEFAULT_POLARITY[slot]
                defaults_applied.append(f"{path}.polarity = {pol}")
            if pol not in ("nmos", "pmos"):
                problems.append(
                    f"'{path}.polarity' must be 'nmos' or 'pmos', got {pol!r}"
                )
                continue
            kwargs["polarity"] = Polarity(pol)
            continue
        name, scale, default = spec
        val = _number(section, key, path, problems, default, defaults_applied)
        if val is not None:
            kwargs[name] = val * scale

    bulk_tie = None
    vgs_v = None
    if slot.startswith("ct_"):
        tie = section.get("bulk_tie")
        if tie is None:
            tie = "source"
            defaults_applied.append(f"{path}.bulk_tie = source")
        if tie not in ("source", "vss"):
            problems.append(f"'{path}.bulk_tie' must be 'source' or 'vss', got {tie!r}")
        else:
            bulk_tie = BulkTie(tie)
        vgs_v = _number(section, "vgs_v", path, problems, 1.5, defaults_applied)

    if any(kwargs.get(k) is None for k in ("w", "l")):
        return None, bulk_tie, vgs_v
    try:
        card = MosfetParams(**kwargs)
    except ValueError as exc:
        problems.append(f"'{path}': {exc}")
        return None, bulk_tie, vgs_v
    return card, bulk_tie, vgs_v


def load_design(doc: dict) -> LnaDesign:
    """Validate a config document and build the design it describes.

    Raises ConfigError carrying the complete list of schema violations.
    """
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    problems: list[str] = []
    defaults_applied: list[str] = []
    _check_unknown(doc, _TOP_KEYS, "config", problems)

    devices = doc.get("devices")
    if devices is None:
        problems.append("missing required section 'devices'")
        devices = {}
    elif not isinstance(devices, dict):
        problems.append("'devices' must be an object")
        devices = {}
    _check_unknown(devices, set(_DEVICE_SLOTS), "devices", problems)

    cards = {}
    ties = {}
    drives = {}
    for slot in _DEVICE_SLOTS:
        card, tie, vgs = _load_card(devices, slot, problems, defaults_applied)
        cards[slot] = card
        ties[slot] = tie
        drives[slot] = vgs

    def section(name, keys):
        sec = doc.get(name)
        if sec is None:
            sec = {}
        elif not isinstance(sec, dict):
            problems.append(f"'{name}' must be an object")
            sec = {}
        _check_unknown(sec, set(keys), name, problems)
        return sec

    passives = section("passives", _PASSIVE_KEYS)
    l1_nh = _number(passives, "l1_nh", "passives", problems,
                    _PASSIVE_KEYS["l1_nh"], defaults_applied)
    l2_nh = _number(passives, "l2_nh", "passives", problems,
                    _PASSIVE_KEYS["l2_nh"], defaults_applied)

    bias_sec = section("bias", _BIAS_KEYS)
    vdd = _number(bias_sec, "vdd_v", "bias", problems)
    vb = _number(bias_sec, "vb_v", "bias", problems)
    input_vds = _number(bias_sec, "input_vds_v", "bias", problems,
                        _BIAS_KEYS["input_vds_v"], defaults_applied)
    lt_vds = _number(bias_sec, "lt_vds_v", "bias", problems,
                     _BIAS_KEYS["lt_vds_v"], defaults_applied)

    env = section("env", _ENV_KEYS)
    rs = _number(env, "rs_ohm", "env", problems, _ENV_KEYS["rs_ohm"], defaults_applied)
    temp = _number(env, "temp_k", "env", problems, _ENV_KEYS["temp_k"], defaults_applied)

    analysis = section("analysis", _ANALYSIS_KEYS)
    f_center = _number(analysis, "f_center_ghz", "analysis", problems,
                       _ANALYSIS_KEYS["f_center_ghz"], defaults_applied)
    spacing = _number(analysis, "tone_spacing_mhz", "analysis", problems,
                      _ANALYSIS_KEYS["tone_spacing_mhz"], defaults_applied)
    pin = analysis.get("pin_dbm")
    if pin is None:
        pin = list(_ANALYSIS_KEYS["pin_dbm"])
        defaults_applied.append("analysis.pin_dbm = [-40 .. -10] dBm, 1 dB steps")
    elif not isinstance(pin, list) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in pin
    ):
        problems.append("'analysis.pin_dbm' must be a list of numbers")
        pin = []

    mode_raw = doc.get("mode", "mgtr")
    if mode_raw not in ("mgtr", "single"):
        problems.append(f"'mode' must be 'mgtr' or 'single', got {mode_raw!r}")
        mode_raw = "mgtr"
    label = doc.get("label", "")
    if not isinstance(label, str):
        problems.append("'label' must be a string")
        label = ""

    if problems:
        raise ConfigError(problems)

    try:
        bias = BiasNetwork(
            v_dd=vdd,
            v_b=vb,
            ct_mt=CtBranch(cards["ct_mt"], ties["ct_mt"], drives["ct_mt"]),
            ct_st=CtBranch(cards["ct_st"], ties["ct_st"], drives["ct_st"]),
        )
        design = LnaDesign(
            mt=cards["mt"],
            st=cards["st"],
            lt=cards["lt"],
            bias=bias,
            l1_h=l1_nh * 1e-9,
            l2_h=l2_nh * 1e-9,
            mode=Mode(mode_raw),
            r_s=rs,
            temp_k=temp,
            input_vds_v=input_vds,
            lt_vds_v=lt_vds,
            label=label,
            f_center_hz=f_center * 1e9,
            tone_spacing_hz=spacing * 1e6,
            pin_dbm=tuple(float(x) for x in pin),
            defaults_applied=tuple(defaults_applied),
        )
    except ValueError as exc:
        raise ConfigError([str(exc)]) from exc
    design.doc = emit_design(design)
    return design


def _emit_card(card: MosfetParams, tie: BulkTie | None = None, vgs: float | None = None):
    out = {
        "polarity": card.polarity.value,
        "vt0_v": card.v_t0,
        "kprime_ua_v2": card.k_prime / 1e-6,
        "w_um": card.w / 1e-6,
        "l_um": card.l / 1e-6,
        "gamma_sqrtv": card.gamma_body,
        "phi2b_v": card.phi2b,
        "n_slope": card.n_slope,
        "cgs_ff": card.c_gs / 1e-15,
        "cgd_ff": card.c_gd / 1e-15,
        "gamma_noise": card.gamma_noise,
    }
    if tie is not None:
        out["bulk_tie"] = tie.value
        out["vgs_v"] = vgs
    return out


def emit_design(design: LnaDesign) -> dict:
    """Normalized document: all defaults materialized; load(emit(d)) == d."""
    bias = design.bias
    return {
        "devices": {
            "mt": _emit_card(design.mt),
            "st": _emit_card(design.st),
            "ct_mt": _emit_card(bias.ct_mt.card, bias.ct_mt.bulk_tie,
                                bias.ct_mt.v_gs_drive),
            "ct_st": _emit_card(bias.ct_st.card, bias.ct_st.bulk_tie,
                                bias.ct_st.v_gs_drive),
            "lt": _emit_card(design.lt),
        },
        "passives": {"l1_nh": design.l1_h / 1e-9, "l2_nh": design.l2_h / 1e-9},
        "bias": {
            "vdd_v": bias.v_dd,
            "vb_v": bias.v_b,
            "input_vds_v": design.input_vds_v,
            "lt_vds_v": design.lt_vds_v,
        },
        "env": {"rs_ohm": design.r_s, "temp_k": design.temp_k},
        "analysis": {
            "f_center_ghz": design.f_center_hz / 1e9,
            "tone_spacing_mhz": design.tone_spacing_hz / 1e6,
            "pin_dbm": list(design.pin_dbm),
        },
        "mode": design.mode.value,
        "label": design.label,
    }


def load_design_file(path) -> LnaDesign:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config is not valid JSON: {exc}"]) from exc
    return load_design(doc)
