"""Self-bias solver, CT sizing, effective transconductance, power."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgtr_lna.bias_network import (
    _CtSolver,
    _solve_branch_damped,
    compute_power,
    ct_size_for_target,
    effective_gm,
    solve_branch_bisect,
    solve_self_bias,
)
from mgtr_lna.defaults import default_design, default_single_design
from mgtr_lna.design import Mode
from mgtr_lna.device_model import (
    BulkTie,
    MosfetParams,
    Polarity,
    TerminalVoltages,
    threshold_voltage,
    triode_resistance,
)
from mgtr_lna.exceptions import NotInTriodeError

CT_UNIT = MosfetParams(polarity=Polarity.NMOS, w=1e-6, l=1e-6)


def branch_pieces(design, which):
    card = design.mt if which == "mt" else design.st
    br = design.bias.ct_mt if which == "mt" else design.bias.ct_st
    ct = _CtSolver(br, br.card.wl, design.bias.v_dd)
    return card, br, ct


class TestSolveSelfBias:
    def test_matches_bisection_oracle(self):
        design = default_design()
        for which in ("mt", "st"):
            card, _, ct = branch_pieces(design, which)
            i_fp, _ = _solve_branch_damped(
                card, ct, design.bias.v_dd, design.bias.v_b,
                design.input_vds_v, design.temp_k, which,
            )
            i_bis, _ = solve_branch_bisect(
                card, ct, design.bias.v_dd, design.bias.v_b,
                design.input_vds_v, design.temp_k, 1e-12, which,
            )
            assert i_fp == pytest.approx(i_bis, rel=1e-8)

    def test_oracle_agreement_on_random_designs(self):
        rng = np.random.default_rng(11)
        base = default_design()
        checked = 0
        while checked < 25:
            vb = float(rng.uniform(1.05, 1.25))
            wl_mt = base.bias.ct_mt.card.wl * float(rng.uniform(0.6, 1.6))
            d = base.with_ct_ratios(ct_mt_wl=wl_mt)
            card, _, ct = branch_pieces(d, "mt")
            try:
                i_fp, _ = _solve_branch_damped(
                    card, ct, d.bias.v_dd, vb, d.input_vds_v, d.temp_k, "mt"
                )
            except NotInTriodeError:
                continue
            i_bis, _ = solve_branch_bisect(
                card, ct, d.bias.v_dd, vb, d.input_vds_v, d.temp_k, 1e-12, "mt"
            )
            assert i_fp == pytest.approx(i_bis, rel=1e-8)
            checked += 1

    def test_zero_drop_limit(self):
        # enormous CT: v_gs -> v_dd - v_b
        design = default_design().with_ct_ratios(ct_mt_wl=1e9)
        mt_op, _ = solve_self_bias(design)
        expected = design.bias.v_dd - design.bias.v_b
        assert mt_op.voltages.v_gs == pytest.approx(expected, abs=1e-6)

    def test_bigger_ct_raises_vgs_and_current(self):
        design = default_design()
        solutions = []
        for factor in (0.7, 1.0, 1.4):
            d = design.with_ct_ratios(
                ct_mt_wl=design.bias.ct_mt.card.wl * factor
            )
            op, _ = solve_self_bias(d)
            solutions.append((op.voltages.v_gs, op.i_d))
        assert solutions[0][0] < solutions[1][0] < solutions[2][0]
        assert solutions[0][1] < solutions[1][1] < solutions[2][1]

    def test_converged_residual_below_1e9_relative(self):
        from mgtr_lna.device_model import drain_current

        rng = np.random.default_rng(3)
        base = default_design()
        for _ in range(20):
            d = base.with_ct_ratios(
                ct_mt_wl=base.bias.ct_mt.card.wl * float(rng.uniform(0.7, 1.4)),
                ct_st_wl=base.bias.ct_st.card.wl * float(rng.uniform(0.7, 1.4)),
            )
            for op in solve_self_bias(d):
                resid = abs(drain_current(op_card(d, op), op.voltages) - op.i_d)
                assert resid <= 1e-9 * max(op.i_d, 1e-30) + 1e-18

    def test_single_gate_mode_skips_st(self):
        mt_op, st_op = solve_self_bias(default_single_design())
        assert st_op is None
        assert mt_op.i_d > 0

    def test_series_consistent_with_voltages(self):
        from mgtr_lna.device_model import transconductance_series

        design = default_design()
        mt_op, st_op = solve_self_bias(design)
        redo = transconductance_series(design.mt, mt_op.voltages, design.temp_k)
        assert redo == mt_op.series

    def test_undersized_ct_raises_named_branch(self):
        design = default_design().with_ct_ratios(ct_mt_wl=1e-7)
        with pytest.raises(NotInTriodeError) as err:
            solve_self_bias(design)
        assert err.value.branch == "mt"


def op_card(design, op):
    return design.mt if op.device == "mt" else design.st


class TestVssTieMechanism:
    def test_threshold_and_resistance_ordering(self):
        v = TerminalVoltages(1.5, 0.2, 0.6)
        vth_src = threshold_voltage(CT_UNIT, 0.0)
        vth_vss = threshold_voltage(CT_UNIT, v.v_sb)
        assert vth_vss > vth_src
        r_vss = triode_resistance(CT_UNIT, v)
        r_src = triode_resistance(CT_UNIT, TerminalVoltages(1.5, 0.2, 0.0))
        assert r_vss > r_src


class TestEffectiveGm:
    def test_undegenerated_limit(self):
        assert effective_gm(5e-3, 1e12) == pytest.approx(5e-3, rel=1e-9)

    def test_symmetric_halving(self):
        assert effective_gm(10e-3, 10e-3) == pytest.approx(5e-3, rel=1e-12)

    def test_strong_degeneration(self):
        assert effective_gm(20e-3, 5e-3) == pytest.approx(4e-3, rel=1e-12)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            effective_gm(1e-3, 0.0)
        with pytest.raises(ValueError):
            effective_gm(-1e-3, 1e-3)

    @given(
        st.floats(1e-6, 1.0), st.floats(1e-6, 1.0), st.floats(1e-6, 1.0)
    )
    @settings(max_examples=60)
    def test_monotone_and_bounded(self, gm, gm_ct, bump):
        base = effective_gm(gm, gm_ct)
        assert base <= min(gm, gm_ct) + 1e-18
        assert effective_gm(gm + bump, gm_ct) >= base
        assert effective_gm(gm, gm_ct + bump) >= base


class TestCtSizeForTarget:
    def test_ten_kilohm_inversion(self):
        wl = ct_size_for_target(
            10e3, TerminalVoltages(0.9, 0.0, 0.0),
            MosfetParams(w=1e-6, l=1e-6, gamma_body=0.0),
        )
        assert wl == pytest.approx(1.0, rel=1e-12)

    def test_round_trip(self):
        bias = TerminalVoltages(1.5, 0.15, 0.0)
        for target in (200.0, 5e3, 2e6):
            wl = ct_size_for_target(target, bias, CT_UNIT, BulkTie.SOURCE)
            realized = triode_resistance(CT_UNIT.scaled(wl), bias)
            assert realized == pytest.approx(target, rel=1e-9)

    def test_vss_tie_needs_larger_ratio(self):
        # A VSS-tied bulk raises v_th, shrinking the overdrive, so hitting
        # the same resistance requires more W/L.  (The tie buys resistance
        # per unit W/L, not a smaller device at fixed resistance.)
        bias = TerminalVoltages(1.5, 0.15, 0.3)
        wl_src = ct_size_for_target(10e3, bias, CT_UNIT, BulkTie.SOURCE)
        wl_vss = ct_size_for_target(10e3, bias, CT_UNIT, BulkTie.VSS)
        assert wl_vss > wl_src
        # round-trips must hold under the tie-appropriate threshold
        r_vss = triode_resistance(CT_UNIT.scaled(wl_vss), bias)
        assert r_vss == pytest.approx(10e3, rel=1e-9)

    def test_asymptote(self):
        bias = TerminalVoltages(1.5, 0.1, 0.0)
        wls = [ct_size_for_target(r, bias, CT_UNIT) for r in (1e6, 1e9, 1e12)]
        assert wls[0] > wls[1] > wls[2]
        assert wls[2] < 1e-8

    def test_not_in_triode(self):
        with pytest.raises(NotInTriodeError):
            ct_size_for_target(1e3, TerminalVoltages(0.5, 0.2, 0.0), CT_UNIT)


class TestComputePower:
    def test_headline_arithmetic(self):
        # 3.95 mA total from a 2 V supply is 7.9 mW
        design = default_design()
        mt_op, st_op = solve_self_bias(design)
        scale_mt = 3.95e-3 / (mt_op.i_d + st_op.i_d)

        class FakeOp:
            def __init__(self, i):
                self.i_d = i

        ops = (FakeOp(mt_op.i_d * scale_mt), FakeOp(st_op.i_d * scale_mt))
        assert compute_power(design, ops) == pytest.approx(7.9e-3, rel=1e-12)

    def test_single_mode_is_mt_alone(self):
        design = default_single_design()
        ops = solve_self_bias(design)
        assert compute_power(design, ops) == pytest.approx(
            design.bias.v_dd * ops[0].i_d, rel=1e-15
        )

    def test_power_linear_in_vdd_at_fixed_current(self):
        design = default_design()
        ops = solve_self_bias(design)
        p_full = compute_power(design, ops)
        import dataclasses

        half = dataclasses.replace(
            design,
            bias=dataclasses.replace(
                design.bias,
                v_dd=design.bias.v_dd / 2,
                v_b=design.bias.v_b / 2,
            ),
        )
        assert compute_power(half, ops) == pytest.approx(p_full / 2, rel=1e-15)
