import math

import pytest

from mutum_sim.calibration import (CalibrationInfeasibleError, InclineAnchors,
                                   ThermalAnchors, ThermalCheck, calibrate,
                                   calibrate_incline, calibrate_thermal,
                                   default_incline_anchors,
                                   params_from_calibration)
from mutum_sim.locomotion import climb_feasible, incline_ladder
from mutum_sim.microrobot import stock_design
from mutum_sim.scene import LocomotionParams
from mutum_sim.thermics import FusConfig, ThermalState, heat_step


class TestInclineCalibration:
    def test_dry_anchor_pass_fail(self):
        mu, adhesion = calibrate_incline(InclineAnchors("dry", 20.0, 25.0))
        params = LocomotionParams(slip_table={0.0: 1.0}, friction_mu=mu,
                                  adhesion_pa=adhesion)
        design = stock_design("tp")
        assert climb_feasible(math.radians(20.0), params, design)
        assert not climb_feasible(math.radians(25.0), params, design)

    def test_wet_anchor_pass_fail(self):
        mu, adhesion = calibrate_incline(InclineAnchors("wet", 50.0, 55.0))
        params = LocomotionParams(slip_table={0.0: 0.9}, friction_mu=mu,
                                  adhesion_pa=adhesion)
        design = stock_design("tp")
        assert climb_feasible(math.radians(50.0), params, design)
        assert not climb_feasible(math.radians(55.0), params, design)

    def test_contradictory_anchors_fail_loudly(self):
        with pytest.raises(CalibrationInfeasibleError) as err:
            calibrate_incline(InclineAnchors("dry", 50.0, 20.0))
        assert "pass at 50" in str(err.value)
        assert "fail at 20" in str(err.value)

    def test_deterministic(self):
        a = calibrate_incline(default_incline_anchors()[0])
        b = calibrate_incline(default_incline_anchors()[0])
        assert a == b


class TestThermalCalibration:
    def test_default_anchors_satisfied(self):
        C, G, absorbed = calibrate_thermal(ThermalAnchors(
            ambient_c=36.0,
            checks=(ThermalCheck(t_s=90.0, min_c=40.9),
                    ThermalCheck(t_s=210.0, target_c=42.0, tol_c=0.5))))
        fus = FusConfig(duration=240.0, absorbed_fraction=absorbed)
        state = ThermalState(T=36.0, ambient=36.0, capacitance=C, conductance=G)
        temps, t = {}, 0.0
        for _ in range(2100):
            state = heat_step(state, fus, t, 0.1)
            t += 0.1
            temps[round(t, 1)] = state.T
        assert temps[90.0] >= 40.9
        assert abs(temps[210.0] - 42.0) <= 0.5

    def test_impossible_ceiling_reported(self):
        anchors = ThermalAnchors(ambient_c=36.0, checks=(
            ThermalCheck(t_s=30.0, min_c=80.0),))
        with pytest.raises(CalibrationInfeasibleError) as err:
            calibrate_thermal(anchors)
        assert "T(30 s) >= 80" in str(err.value)


class TestFullCalibration:
    def test_ladders_match_published_slopes_for_all_designs(self):
        result = calibrate()
        for env, expected in (("dry", 20.0), ("wet", 50.0)):
            params = params_from_calibration(result, env,
                                             slip_table={0.0: 1.0})
            for kind in ("tp", "sp", "ep"):
                assert incline_ladder(stock_design(kind), params) == expected

    def test_anchor_overrides(self):
        result = calibrate({"incline": {"dry": {"pass_deg": 30, "fail_deg": 35}}})
        params = params_from_calibration(result, "dry", slip_table={0.0: 1.0})
        assert incline_ladder(stock_design("tp"), params) == 30.0
