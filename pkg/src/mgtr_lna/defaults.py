"""Shipped default design pair.

Numbers produced by scripts/tune_defaults.py: the main device sits at the
stationary point of its gm'' negative lobe, the auxiliary device on the
matching point of its positive lobe, and the load inductor gives 9.0 dB of
voltage gain at 2.1 GHz.  Regenerate with the script if the device model or
the targets change.
"""

from __future__ import annotations

import json

from .design import LnaDesign, Mode, load_design

_REFERENCE_CARD = {
    "vt0_v": 0.4,
    "kprime_ua_v2": 200.0,
    "l_um": 1.0,
    "gamma_sqrtv": 0.4,
    "phi2b_v": 0.7,
    "n_slope": 1.3,
    "cgs_ff": 100.0,
    "cgd_ff": 20.0,
    "gamma_noise": 2.0 / 3.0,
}

DEFAULT_CONFIG = {
    "devices": {
        "mt": {"polarity": "pmos", "w_um": 100.0, **_REFERENCE_CARD},
        "st": {"polarity": "pmos", "w_um": 4.240731449407215, **_REFERENCE_CARD},
        "ct_mt": {
            "polarity": "nmos",
            "w_um": 24.379361733143465,
            "bulk_tie": "source",
            "vgs_v": 1.5,
            **_REFERENCE_CARD,
        },
        "ct_st": {
            "polarity": "nmos",
            "w_um": 0.008247836360485008,
            "bulk_tie": "vss",
            "vgs_v": 2.5,
            **_REFERENCE_CARD,
        },
        "lt": {"polarity": "pmos", "w_um": 100.0, **_REFERENCE_CARD},
    },
    "passives": {"l1_nh": 2.0, "l2_nh": 38.76947299957449},
    "bias": {"vdd_v": 2.0, "vb_v": 1.15, "input_vds_v": 0.5, "lt_vds_v": 0.5},
    "env": {"rs_ohm": 50.0, "temp_k": 300.0},
    "analysis": {
        "f_center_ghz": 2.1,
        "tone_spacing_mhz": 5.0,
        "pin_dbm": [float(p) for p in range(-40, -9)],
    },
    "mode": "mgtr",
    "label": "mgtr default",
}


def default_config() -> dict:
    """Deep copy of the shipped default document."""
    return json.loads(json.dumps(DEFAULT_CONFIG))


def default_design() -> LnaDesign:
    return load_design(default_config())


def default_single_design() -> LnaDesign:
    """The comparison twin: identical geometry with the ST branch disabled."""
    doc = default_config()
    doc["mode"] = "single"
    doc["label"] = "single-gate twin"
    return load_design(doc)
