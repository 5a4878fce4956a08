"""Composite series, sweet-spot search, gm'' profiles."""

import dataclasses
import math

import numpy as np
import pytest

from mgtr_lna.defaults import default_design, default_single_design
from mgtr_lna.design import Mode
from mgtr_lna.device_model import PowerSeries
from mgtr_lna.mgtr_core import (
    composite_series,
    exhaustive_grid_search,
    find_sweet_spot,
    gm2_profile,
)


def scale_branch_widths(design, c):
    """Scale both input devices and their CTs by c (whole-branch scaling)."""
    return dataclasses.replace(
        design,
        mt=design.mt.scaled(design.mt.wl * c),
        st=design.st.scaled(design.st.wl * c),
        bias=dataclasses.replace(
            design.bias,
            ct_mt=dataclasses.replace(
                design.bias.ct_mt,
                card=design.bias.ct_mt.card.scaled(design.bias.ct_mt.card.wl * c),
            ),
            ct_st=dataclasses.replace(
                design.bias.ct_st,
                card=design.bias.ct_st.card.scaled(design.bias.ct_st.card.wl * c),
            ),
        ),
        doc=None,
    )


class TestCompositeSeries:
    def test_zero_identity(self):
        mt = PowerSeries.from_derivatives(1e-3, 5e-3, 2e-2, -5e-3)
        assert composite_series(mt, PowerSeries.zero()) == mt

    def test_doubling(self):
        s = PowerSeries.from_derivatives(1e-3, 5e-3, 2e-2, -5e-3)
        d = composite_series(s, s)
        assert d.gm == 2 * s.gm and d.gm2 == 2 * s.gm2 and d.i_dc == 2 * s.i_dc

    def test_bitwise_sum_and_invariants(self):
        a = PowerSeries.from_derivatives(7.7e-4, 5.49e-3, 2.06e-2, -4.9e-3)
        b = PowerSeries.from_derivatives(1.4e-6, 3.5e-5, 3.8e-4, 4.9e-3)
        c = composite_series(a, b)
        assert c.gm == a.gm + b.gm
        assert c.gm2 == a.gm2 + b.gm2
        assert c.a1 == c.gm and c.a2 == c.gm1 / 2 and c.a3 == c.gm2 / 6


class TestFindSweetSpot:
    def test_default_design_deep_cancellation(self):
        res = find_sweet_spot(default_design())
        assert res.residual <= res.baseline / 10
        assert res.residual >= 0

    def test_single_gate_degenerates_to_baseline(self):
        res = find_sweet_spot(default_single_design())
        assert res.ct_st_wl == 0.0
        assert res.residual == res.baseline

    def test_residual_never_exceeds_baseline(self):
        res = find_sweet_spot(default_design(), knobs=("ct_st", "ct_mt"))
        assert res.residual <= res.baseline

    def test_shrinking_window_never_raises_residual(self):
        design = default_design()
        vb = design.bias.v_b
        res_wide = find_sweet_spot(design, window=(vb - 0.05, vb + 0.05))
        res_narrow = find_sweet_spot(design, window=(vb - 0.02, vb + 0.02))
        assert res_narrow.residual <= res_wide.residual * (1 + 1e-12)

    def test_deterministic(self):
        a = find_sweet_spot(default_design())
        b = find_sweet_spot(default_design())
        assert a == b

    def test_matches_grid_oracle_within_5_percent(self):
        design = default_design()
        res = find_sweet_spot(design, knobs=("ct_st", "ct_mt"))
        grid_res, _, _ = exhaustive_grid_search(
            design, res.window, n_st=60, n_mt=60
        )
        assert res.residual <= grid_res * 1.05

    def test_composite_cancellation_at_operating_point(self):
        design = default_design()
        res = find_sweet_spot(design)
        tuned = design.with_ct_ratios(ct_mt_wl=res.ct_mt_wl, ct_st_wl=res.ct_st_wl)
        rows = gm2_profile(tuned, [design.bias.v_b])
        assert abs(rows[0].gm2_sum) < 0.1 * abs(rows[0].gm2_mt)

    def test_rejects_empty_knobs(self):
        with pytest.raises(ValueError):
            find_sweet_spot(default_design(), knobs=())
        with pytest.raises(ValueError):
            find_sweet_spot(default_design(), knobs=("nope",))

    def test_scale_covariance(self):
        # Scaling every branch width by a power of two multiplies baseline
        # and residual exactly; the whole solve chain commutes with the
        # current scale.
        design = default_design()
        base = find_sweet_spot(design, knobs=("ct_st", "ct_mt"))
        for c in (2.0, 4.0):
            scaled = scale_branch_widths(design, c)
            res = find_sweet_spot(scaled, knobs=("ct_st", "ct_mt"))
            assert res.residual == c * base.residual
            assert res.baseline == c * base.baseline


class TestGm2Profile:
    def test_single_gate_column_is_zero(self):
        rows = gm2_profile(default_single_design(), np.linspace(1.1, 1.2, 7))
        assert all(r.gm2_st == 0.0 for r in rows)

    def test_sum_is_bitwise(self):
        rows = gm2_profile(default_design(), np.linspace(1.1, 1.2, 7))
        for r in rows:
            assert r.gm2_sum == r.gm2_mt + r.gm2_st
            assert r.error is None

    def test_sum_crosses_zero_inside_window_after_tuning(self):
        design = default_design()
        res = find_sweet_spot(design)
        tuned = design.with_ct_ratios(ct_mt_wl=res.ct_mt_wl, ct_st_wl=res.ct_st_wl)
        rows = gm2_profile(tuned, np.linspace(*res.window, 41))
        signs = np.sign([r.gm2_sum for r in rows])
        assert np.any(np.diff(signs) != 0)

    def test_solver_failures_mark_rows(self):
        design = default_design().with_ct_ratios(ct_mt_wl=1e-7)
        rows = gm2_profile(design, [design.bias.v_b])
        assert rows[0].error is not None
        assert math.isnan(rows[0].gm2_sum)
