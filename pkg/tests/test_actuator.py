"""Valve curves, cylinder volume maps, and the measured presets."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pneusid.actuator import (AIRPEL_LEAK_AREA, CylinderModel, GompertzCurve,
                              ValveModel, VolumeMap, cylinder_volume,
                              deadzone_center, deadzone_interval,
                              gompertz_area, paper_presets, preset_cylinder,
                              preset_valve, valve_areas)
from pneusid.errors import PreconditionError

V1_INLET = GompertzCurve(offset=2.9274e-8, a=5.501e-7, b=3.539, c=1.564,
                         d=0.12)


class TestGompertz:
    def test_full_open(self):
        # hand evaluation of the inlet curve at +5
        assert gompertz_area(V1_INLET, 5.0) == pytest.approx(
            5.787262981008469e-7, rel=1e-12)

    def test_floor_at_negative_extreme(self):
        # the double exponential collapses: inner exponent ~ 2064
        assert gompertz_area(V1_INLET, -5.0) == pytest.approx(2.9274e-8,
                                                              rel=1e-9)

    def test_degenerate_flat_curve(self):
        flat = GompertzCurve(offset=3e-8, a=0.0, b=1.0, c=1.0, d=0.0)
        for cmd in (-5.0, 0.0, 5.0):
            assert gompertz_area(flat, cmd) == 3e-8

    def test_bounds_and_monotonicity_dense(self):
        grid = np.linspace(-8, 8, 4001)
        area = gompertz_area(V1_INLET, grid)
        assert np.all(area >= V1_INLET.offset)
        assert np.all(area <= V1_INLET.offset + V1_INLET.a)
        assert np.all(np.diff(area) >= 0)

    @given(st.floats(-50, 50))
    @settings(max_examples=300, deadline=None)
    def test_bounded_property(self, cmd):
        area = gompertz_area(V1_INLET, cmd)
        assert V1_INLET.offset <= area <= V1_INLET.offset + V1_INLET.a

    def test_negative_c_monotone_decreasing(self):
        curve = GompertzCurve(offset=2.6076e-8, a=6.079e-7, b=3.149,
                              c=-1.365, d=-0.1)
        grid = np.linspace(-8, 8, 4001)
        assert np.all(np.diff(gompertz_area(curve, grid)) <= 0)

    def test_rejects_invalid_params(self):
        with pytest.raises(PreconditionError):
            GompertzCurve(offset=-1e-9, a=1e-7, b=1.0, c=1.0, d=0.0)
        with pytest.raises(PreconditionError):
            GompertzCurve(offset=0.0, a=1e-7, b=0.0, c=1.0, d=0.0)
        with pytest.raises(PreconditionError):
            gompertz_area(V1_INLET, float("nan"))


class TestValveAreas:
    def test_deadzone_region_small_positive(self):
        valve = preset_valve("valve1")
        a_c, a_a = valve_areas(valve, 0.0)
        assert 0 < a_c < 1e-7
        assert 0 < a_a < 1e-7

    def test_extremes(self):
        valve = preset_valve("valve1")
        a_c, a_a = valve_areas(valve, 5.0)
        assert a_c == pytest.approx(5.787262981008469e-7, rel=1e-12)
        assert a_a == pytest.approx(valve.exhaust.offset, rel=1e-9)

    def test_mirror_symmetric_valve(self):
        inlet = GompertzCurve(offset=1e-8, a=4e-7, b=3.0, c=1.2, d=0.0)
        exhaust = GompertzCurve(offset=1e-8, a=4e-7, b=3.0, c=-1.2, d=0.0)
        valve = ValveModel(name="sym", inlet=inlet, exhaust=exhaust)
        for cmd in np.linspace(-5, 5, 21):
            a_c, _ = valve_areas(valve, cmd)
            _, a_a = valve_areas(valve, -cmd)
            assert a_c == pytest.approx(a_a, rel=1e-14)

    def test_clamps_outside_range_with_warning(self):
        valve = preset_valve("valve1")
        with pytest.warns(UserWarning):
            a_c, _ = valve_areas(valve, 7.0)
        ref, _ = valve_areas(valve, 5.0)
        assert a_c == ref


class TestCylinderVolume:
    def test_intercept_is_dead_volume(self):
        cyl = preset_cylinder("AIR37")
        v, v_dot = cylinder_volume(cyl, 0.0)
        assert v == pytest.approx(cyl.dead_volume, rel=1e-14)
        assert v_dot == 0.0

    def test_full_stroke_matches_total(self):
        cyl = preset_cylinder("AIR37")
        v, _ = cylinder_volume(cyl, cyl.stroke)
        assert v == pytest.approx(2.3856e-6, rel=1e-12)

    def test_linearity(self):
        cyl = preset_cylinder("SMC")
        for s in np.linspace(0, cyl.stroke, 9):
            v, _ = cylinder_volume(cyl, s)
            v0, _ = cylinder_volume(cyl, 0.0)
            assert v - v0 == pytest.approx(cyl.bore_area * s, rel=1e-12,
                                           abs=1e-20)

    def test_rate_follows_map_slope(self):
        vmap = VolumeMap(v0=2e-7, slope=5e-5)
        v, v_dot = cylinder_volume(vmap, 0.01, s_dot=0.2)
        assert v == pytest.approx(2e-7 + 5e-7, rel=1e-14)
        assert v_dot == pytest.approx(1e-5, rel=1e-14)

    def test_floor_clamp_warns(self):
        vmap = VolumeMap(v0=1e-7, slope=-1e-5)
        with pytest.warns(UserWarning):
            v, v_dot = cylinder_volume(vmap, 1.0, s_dot=1.0)
        assert v == pytest.approx(1e-9)
        assert v_dot == 0.0


class TestPresets:
    def test_counts(self):
        cylinders, valves = paper_presets()
        assert len(cylinders) == 4
        assert len(valves) == 2

    def test_table_totals_exact(self):
        totals = {c.name: c.total_volume for c in paper_presets()[0]}
        assert totals == {"AIR37": 2.3856e-6, "AIR200": 1.2723e-5,
                          "SMC": 2.0106e-5, "PRN": 3.50e-6}

    def test_leak_areas(self):
        cyls = {c.name: c for c in paper_presets()[0]}
        expected = math.pi * 1.9665e-4 ** 2 / 4.0
        assert cyls["AIR37"].leak_area == pytest.approx(expected, rel=1e-15)
        assert cyls["AIR200"].leak_area == pytest.approx(3.037e-8, rel=1e-3)
        assert cyls["SMC"].leak_area == 0.0
        assert cyls["PRN"].leak_area == 0.0
        assert AIRPEL_LEAK_AREA == pytest.approx(expected, rel=0)

    def test_valve_parameters_exact(self):
        v1, v2 = paper_presets()[1]
        assert (v1.inlet.offset, v1.inlet.a, v1.inlet.b, v1.inlet.c,
                v1.inlet.d) == (2.9274e-8, 5.501e-7, 3.539, 1.564, 0.12)
        assert (v1.exhaust.offset, v1.exhaust.a, v1.exhaust.b, v1.exhaust.c,
                v1.exhaust.d) == (2.6076e-8, 6.079e-7, 3.149, -1.365, -0.1)
        assert (v2.inlet.offset, v2.inlet.a, v2.inlet.b, v2.inlet.c,
                v2.inlet.d) == (2.627e-8, 8.731e-7, 4.029, 0.929, -0.1505)
        assert (v2.exhaust.offset, v2.exhaust.a, v2.exhaust.b, v2.exhaust.c,
                v2.exhaust.d) == (2.964e-8, 8.659e-7, 3.942, -0.9816, 0.1584)

    def test_sign_pattern(self):
        for valve in paper_presets()[1]:
            assert valve.inlet.c > 0
            assert valve.exhaust.c < 0
            a_c, a_a = valve_areas(valve, 0.0)
            assert a_c > 0 and a_a > 0  # leakage floor at zero command

    def test_command_range(self):
        for valve in paper_presets()[1]:
            assert valve.cmd_min == -5.0
            assert valve.cmd_max == 5.0

    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            preset_cylinder("AIR9000")


class TestDeadzone:
    def test_center_near_zero_command(self):
        center = deadzone_center(preset_valve("valve1"))
        assert -0.5 < center < 0.5

    def test_shipped_valves_have_no_both_at_floor_interval(self):
        # the measured curves overlap around zero command (cross leakage),
        # so no command parks both ports at their floors
        assert deadzone_interval(preset_valve("valve1")) is None

    def test_separated_idealized_valve_has_interval(self):
        inlet = GompertzCurve(offset=1e-9, a=4e-7, b=3.0, c=3.0, d=-2.0)
        exhaust = GompertzCurve(offset=1e-9, a=4e-7, b=3.0, c=-3.0, d=2.0)
        valve = ValveModel(name="separated", inlet=inlet, exhaust=exhaust)
        interval = deadzone_interval(valve)
        assert interval is not None
        lo, hi = interval
        assert lo < 0 < hi
