"""Device model: threshold, current curve, analytic derivatives, triode law."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgtr_lna.device_model import (
    MosfetParams,
    Polarity,
    PowerSeries,
    TerminalVoltages,
    drain_current,
    thermal_voltage,
    threshold_voltage,
    transconductance_series,
    triode_resistance,
)
from mgtr_lna.exceptions import NotInTriodeError

from oracles import fd_derivatives

NMOS = MosfetParams()  # reference card, w/l = 100


def nut(card=NMOS, temp_k=300.0):
    return card.n_slope * thermal_voltage(temp_k)


class TestThresholdVoltage:
    def test_zero_body_coefficient(self):
        p = MosfetParams(gamma_body=0.0)
        assert threshold_voltage(p, 0.3) == 0.4

    def test_zero_reverse_bias(self):
        assert threshold_voltage(NMOS, 0.0) == pytest.approx(0.4, abs=1e-15)

    def test_body_effect_value(self):
        # 0.4 + 0.4*(sqrt(1.0) - sqrt(0.7))
        assert threshold_voltage(NMOS, 0.3) == pytest.approx(0.46533599, abs=5e-7)

    def test_negative_bias_rejected(self):
        with pytest.raises(ValueError):
            threshold_voltage(NMOS, -0.01)

    @given(st.floats(0.0, 3.0), st.floats(0.0, 3.0))
    def test_monotone_in_reverse_bias(self, a, b):
        lo, hi = sorted((a, b))
        assert threshold_voltage(NMOS, hi) >= threshold_voltage(NMOS, lo)

    @given(st.floats(0.0, 3.0))
    def test_never_below_vt0(self, v_sb):
        assert threshold_voltage(NMOS, v_sb) >= NMOS.v_t0


class TestDrainCurrent:
    def test_subthreshold_decay(self):
        u = nut()
        on = drain_current(NMOS, TerminalVoltages(0.4, 0.5))
        off = drain_current(NMOS, TerminalVoltages(0.4 - 10 * u, 0.5))
        assert off < 1e-3 * on

    def test_square_law_asymptote(self):
        u = nut()
        for mult in (10.0, 14.0, 20.0):
            vov = mult * u
            i = drain_current(NMOS, TerminalVoltages(0.4 + vov, 1.5))
            square = 0.5 * NMOS.k_prime * NMOS.wl * vov**2
            assert i == pytest.approx(square, rel=0.02)

    def test_strictly_increasing_in_vgs(self):
        grid = np.linspace(0.0, 1.4, 141)
        currents = [drain_current(NMOS, TerminalVoltages(v, 0.5)) for v in grid]
        assert all(b > a for a, b in zip(currents, currents[1:]))

    def test_smooth_saturation_in_vds(self):
        vals = [drain_current(NMOS, TerminalVoltages(0.7, v)) for v in
                np.linspace(0.0, 1.5, 31)]
        assert vals[0] == 0.0
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        # saturated region is flat to a fraction of a percent
        assert vals[-1] == pytest.approx(vals[-5], rel=2e-4)

    def test_gm_matches_finite_difference(self):
        for v_gs in (0.25, 0.4, 0.55, 0.8):
            _, d1, _, _ = fd_derivatives(NMOS, v_gs, 0.5)
            gm = transconductance_series(NMOS, TerminalVoltages(v_gs, 0.5)).gm
            assert gm == pytest.approx(d1, rel=1e-6)


class TestTransconductanceSeries:
    def test_linear_series_has_zero_gm2(self):
        flat = PowerSeries.from_derivatives(1e-3, 20e-3, 0.0, 0.0)
        assert flat.gm2 == 0.0
        assert flat.a2 == 0.0 and flat.a3 == 0.0

    def test_lobe_pattern_across_threshold(self):
        # one positive lobe starting below threshold, then a negative lobe
        grid = np.linspace(0.4 - 0.3, 0.4 + 0.6, 361)
        gm2 = np.array(
            [transconductance_series(NMOS, TerminalVoltages(v, 0.5)).gm2
             for v in grid]
        )
        signs = np.sign(gm2)
        flips = np.nonzero(np.diff(signs))[0]
        assert len(flips) == 1
        assert gm2[0] > 0 and gm2[-1] < 0

    def test_all_derivatives_match_finite_difference(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            v_gs = float(rng.uniform(0.1, 1.1))
            v_ds = float(rng.uniform(0.2, 1.2))
            s = transconductance_series(NMOS, TerminalVoltages(v_gs, v_ds))
            _, d1, d2, d3 = fd_derivatives(NMOS, v_gs, v_ds)
            for got, ref in ((s.gm, d1), (s.gm1, d2), (s.gm2, d3)):
                assert abs(got - ref) <= max(1e-6 * abs(ref), 1e-12)

    def test_fig_shape_single_crossing_minimum_above_vth(self):
        grid = np.linspace(0.4 - 0.2, 0.4 + 0.4, 601)
        gm2 = np.array(
            [transconductance_series(NMOS, TerminalVoltages(v, 0.5)).gm2
             for v in grid]
        )
        flips = np.nonzero(np.diff(np.sign(gm2)))[0]
        assert len(flips) == 1
        assert grid[int(np.argmin(gm2))] > 0.4

    def test_taylor_coefficients_bitwise(self):
        s = transconductance_series(NMOS, TerminalVoltages(0.63, 0.5))
        assert s.a1 == s.gm
        assert s.a2 == s.gm1 / 2.0
        assert s.a3 == s.gm2 / 6.0


class TestPolaritySymmetry:
    @given(st.floats(0.0, 1.2), st.floats(0.0, 1.5), st.floats(0.0, 1.0))
    @settings(max_examples=50)
    def test_identical_magnitude_currents(self, v_gs, v_ds, v_sb):
        n = MosfetParams(polarity=Polarity.NMOS)
        p = MosfetParams(polarity=Polarity.PMOS)
        v = TerminalVoltages(v_gs, v_ds, v_sb)
        assert drain_current(n, v) == drain_current(p, v)


class TestTriodeResistance:
    def test_width_doubling_halves(self):
        v = TerminalVoltages(1.5, 0.1)
        r1 = triode_resistance(MosfetParams(w=10e-6), v)
        r2 = triode_resistance(MosfetParams(w=20e-6), v)
        assert r2 == pytest.approx(r1 / 2, rel=1e-12)

    def test_direct_value(self):
        p = MosfetParams(w=1e-6, l=1e-6, gamma_body=0.0)
        # overdrive 0.5 V at k' = 200 uA/V^2, w/l = 1
        r = triode_resistance(p, TerminalVoltages(1.0, 0.1))
        assert r == pytest.approx(10e3, rel=1e-12)

    def test_vss_tie_raises_resistance(self):
        v_tied = TerminalVoltages(1.5, 0.1, 0.0)  # bulk rides with source
        v_vss = TerminalVoltages(1.5, 0.1, 0.4)  # bulk at the rail
        assert triode_resistance(NMOS, v_vss) > triode_resistance(NMOS, v_tied)

    def test_monotone_in_overdrive_and_ratio(self):
        rs = [triode_resistance(NMOS, TerminalVoltages(v, 0.1))
              for v in (0.9, 1.1, 1.3, 1.5)]
        assert all(b < a for a, b in zip(rs, rs[1:]))
        rw = [triode_resistance(MosfetParams(w=w), TerminalVoltages(1.5, 0.1))
              for w in (20e-6, 50e-6, 100e-6)]
        assert all(b < a for a, b in zip(rw, rw[1:]))

    def test_out_of_triode_rejected(self):
        with pytest.raises(NotInTriodeError):
            triode_resistance(NMOS, TerminalVoltages(0.5, 0.2))


class TestValidation:
    def test_bad_params_rejected(self):
        with pytest.raises(ValueError):
            MosfetParams(w=-1e-6)
        with pytest.raises(ValueError):
            MosfetParams(k_prime=0.0)
        with pytest.raises(ValueError):
            MosfetParams(n_slope=0.9)

    def test_forward_body_bias_rejected(self):
        with pytest.raises(ValueError):
            TerminalVoltages(0.5, 0.5, -0.1)

    def test_scaled_keeps_length(self):
        p = NMOS.scaled(25.0)
        assert p.wl == pytest.approx(25.0)
        assert p.l == NMOS.l
