"""Integration kernels: invariants, stiffness, convergence, backend parity."""

import numpy as np
import pytest

from pneusid.actuator import GompertzCurve, ValveModel, VolumeMap, preset_valve
from pneusid.errors import DataError, IntegrationError, PreconditionError
from pneusid.gas import derive_constants
from pneusid.model_io import PneumaticModel
from pneusid.simulate import (ChamberState, DualChamberConfig,
                              ExogenousTrajectory, IntegratorOptions,
                              RolloutDiagnostics, backend_name,
                              dual_chamber_rollout, rollout, step)

G = derive_constants()
P_ATM = 101325.0
P_SRC = 161325.0


def sealed_valve():
    zero_in = GompertzCurve(offset=0.0, a=0.0, b=1.0, c=1.0, d=0.0)
    zero_ex = GompertzCurve(offset=0.0, a=0.0, b=1.0, c=-1.0, d=0.0)
    return ValveModel(name="sealed", inlet=zero_in, exhaust=zero_ex)


def inlet_only_valve():
    # sealed exhaust so constant positive command drives p all the way to P_c
    inlet = GompertzCurve(offset=0.0, a=5e-7, b=3.5, c=1.5, d=0.0)
    zero_ex = GompertzCurve(offset=0.0, a=0.0, b=1.0, c=-1.0, d=0.0)
    return ValveModel(name="inlet-only", inlet=inlet, exhaust=zero_ex)


def const_traj(n, dt, cmd=0.0, piston=0.0, src=P_SRC):
    t = np.arange(n) * dt
    return ExogenousTrajectory(t=t, cmd=np.full(n, float(cmd)),
                               piston=np.full(n, float(piston)),
                               piston_rate=np.zeros(n),
                               source_pressure=np.full(n, float(src)))


def sealed_sinusoid(n=401, dt=5e-3, v_lo=1e-6, v_hi=3e-6, freq=0.5):
    t = np.arange(n) * dt
    vm, va = 0.5 * (v_lo + v_hi), 0.5 * (v_hi - v_lo)
    v = vm + va * np.sin(2 * np.pi * freq * t)
    traj = ExogenousTrajectory(t=t, cmd=np.zeros(n), piston=v,
                               piston_rate=np.gradient(v, dt),
                               source_pressure=np.full(n, P_SRC))
    model = PneumaticModel(gas=G, valve=sealed_valve(),
                           volume_map=VolumeMap(v0=1e-12, slope=1.0),
                           leak_area=0.0)
    return traj, model, v


class TestStep:
    def test_sealed_static_chamber_unchanged(self):
        model = PneumaticModel(gas=G, valve=sealed_valve(),
                               volume_map=VolumeMap(v0=1e-6, slope=0.0))
        s0 = ChamberState(p=1.5e5)
        s1 = step(s0, {"cmd": 0.0, "v": 1e-6, "v_dot": 0.0, "P_c": P_SRC},
                  0.5, model)
        assert s1.p == s0.p
        assert s1.t == pytest.approx(0.5)

    def test_adiabatic_compression_against_analytic(self):
        # seal the chamber, halve the volume smoothly; p*v^n is conserved
        model = PneumaticModel(gas=G, valve=sealed_valve(),
                               volume_map=VolumeMap(v0=1e-6, slope=0.0))
        v0, p0, dt = 2e-6, 1.2e5, 0.25
        v_dot = -v0 / (2 * dt) / 2  # halve over two steps of dt
        state = ChamberState(p=p0)
        v = v0
        for _ in range(2):
            state = step(state, {"cmd": 0.0, "v": v, "v_dot": v_dot,
                                 "P_c": P_SRC}, dt, model)
            v += v_dot * dt
        analytic = p0 * (v0 / v) ** G.n
        assert state.p == pytest.approx(analytic, rel=1e-4)

    def test_bad_inputs(self):
        model = PneumaticModel(gas=G, valve=sealed_valve(),
                               volume_map=VolumeMap(v0=1e-6, slope=0.0))
        s0 = ChamberState(p=1e5)
        with pytest.raises(PreconditionError):
            step(s0, {"cmd": 0.0, "v": -1e-6, "v_dot": 0.0, "P_c": P_SRC},
                 0.1, model)
        with pytest.raises(PreconditionError):
            step(s0, {"cmd": 0.0, "v": 1e-6, "v_dot": 0.0, "P_c": P_SRC},
                 0.0, model)


class TestRollout:
    def test_sealed_adiabatic_invariant(self):
        traj, model, v = sealed_sinusoid()
        p = rollout(2e5, traj, model)
        inv = p * (1e-12 + v) ** G.n
        rel = np.abs(inv - inv[0]) / inv[0]
        assert np.max(rel) <= 1e-4

    def test_sealed_adiabatic_invariant_halved_cap(self):
        traj, model, v = sealed_sinusoid()
        p = rollout(2e5, traj, model, opts=IntegratorOptions().halved())
        inv = p * (1e-12 + v) ** G.n
        assert np.max(np.abs(inv - inv[0]) / inv[0]) <= 1e-5

    def test_equilibrium_attraction_no_overshoot(self):
        model = PneumaticModel(gas=G, valve=inlet_only_valve(),
                               volume_map=VolumeMap(v0=1.3e-6, slope=0.0))
        traj = const_traj(401, 5e-3, cmd=5.0)
        p = rollout(P_ATM, traj, model)
        assert abs(p[-1] - P_SRC) / P_SRC <= 1e-3
        assert np.max(p) <= P_SRC * (1 + 1e-9)
        assert np.all(np.diff(p) >= -1e-6)

    def test_constant_equilibrium_inputs_stay_flat(self):
        model = PneumaticModel(gas=G, valve=inlet_only_valve(),
                               volume_map=VolumeMap(v0=1.3e-6, slope=0.0))
        traj = const_traj(101, 5e-3, cmd=5.0)
        p = rollout(P_SRC, traj, model)
        assert np.max(np.abs(p - P_SRC)) / P_SRC < 1e-12

    def test_stiff_small_volume_stability(self):
        rng = np.random.default_rng(7)
        n = 401
        t = np.arange(n) * 5e-3
        traj = ExogenousTrajectory(t=t, cmd=rng.uniform(-5, 5, n),
                                   piston=np.zeros(n),
                                   piston_rate=np.zeros(n),
                                   source_pressure=np.full(n, P_SRC))
        model = PneumaticModel(gas=G, valve=preset_valve("valve1"),
                               volume_map=VolumeMap(v0=1e-7, slope=0.0),
                               leak_area=0.0)
        p = rollout(1.3e5, traj, model)
        assert np.all(np.isfinite(p))
        assert np.all(p > 0)
        assert np.max(p) <= P_SRC * 1.05

    def test_step_size_convergence(self):
        traj, model, _ = sealed_sinusoid()
        base = rollout(2e5, traj, model)
        fine = rollout(2e5, traj, model, opts=IntegratorOptions().halved())
        assert abs(fine[-1] - base[-1]) / base[-1] <= 1e-5

    def test_determinism_bit_identical(self):
        traj, model, _ = sealed_sinusoid(n=101)
        a = rollout(2e5, traj, model)
        b = rollout(2e5, traj, model)
        assert np.array_equal(a, b)

    def test_substepping_engages_in_stiff_regime(self):
        model = PneumaticModel(gas=G, valve=preset_valve("valve1"),
                               volume_map=VolumeMap(v0=1e-7, slope=0.0))
        traj = const_traj(11, 5e-3, cmd=5.0, src=P_SRC)
        diag = RolloutDiagnostics()
        rollout(P_ATM, traj, model, diagnostics=diag)
        assert diag.total_substeps > 10 * 10  # far more substeps than intervals

    def test_volume_floor_clamp_counted(self):
        model = PneumaticModel(gas=G, valve=sealed_valve(),
                               volume_map=VolumeMap(v0=1e-6, slope=-1e-4))
        n = 21
        t = np.arange(n) * 1e-2
        piston = np.linspace(0.0, 0.02, n)  # drives mapped volume negative
        traj = ExogenousTrajectory(t=t, cmd=np.zeros(n), piston=piston,
                                   piston_rate=np.full(n, 0.1),
                                   source_pressure=np.full(n, P_SRC))
        diag = RolloutDiagnostics()
        p = rollout(1.5e5, traj, model, diagnostics=diag)
        assert diag.floor_clamps > 0
        assert np.all(p > 0)

    def test_initial_pressure_validation(self):
        traj, model, _ = sealed_sinusoid(n=101)
        with pytest.raises(PreconditionError):
            rollout(-1.0, traj, model)

    def test_trajectory_validation(self):
        n = 10
        t = np.arange(n) * 1e-3
        with pytest.raises(DataError):
            ExogenousTrajectory(t=t, cmd=np.zeros(n - 1), piston=np.zeros(n),
                                piston_rate=np.zeros(n),
                                source_pressure=np.full(n, P_SRC))
        jittered = t.copy()
        jittered[5] += 1e-6
        with pytest.raises(DataError):
            ExogenousTrajectory(t=jittered, cmd=np.zeros(n),
                                piston=np.zeros(n), piston_rate=np.zeros(n),
                                source_pressure=np.full(n, P_SRC))


class TestBackends:
    def test_backend_reported(self):
        assert backend_name() in ("compiled", "python")

    def test_parity_on_mixed_scenario(self):
        rng = np.random.default_rng(3)
        n = 201
        t = np.arange(n) * 5e-3
        piston = 0.01 + 0.008 * np.sin(2 * np.pi * 0.7 * t)
        traj = ExogenousTrajectory(
            t=t, cmd=rng.uniform(-5, 5, n), piston=piston,
            piston_rate=np.gradient(piston, 5e-3),
            source_pressure=P_SRC + 1500 * np.sin(2 * np.pi * 0.3 * t))
        model = PneumaticModel(gas=G, valve=preset_valve("valve1"),
                               volume_map=VolumeMap(v0=1.2e-7, slope=6e-5),
                               leak_area=3.037e-8)
        p_py = rollout(1.2e5, traj, model, backend="python")
        if backend_name() == "compiled":
            p_c = rollout(1.2e5, traj, model, backend="compiled")
            np.testing.assert_allclose(p_c, p_py, rtol=1e-10)

    def test_python_backend_always_available(self):
        traj, model, _ = sealed_sinusoid(n=51)
        p = rollout(2e5, traj, model, backend="python")
        assert np.all(np.isfinite(p))


class TestDualChamber:
    def setup_method(self):
        self.dual = DualChamberConfig(bore_area=6e-5, stroke=0.0375,
                                      dead_volume_a=1.2e-7,
                                      dead_volume_b=1.2e-7)
        self.model = PneumaticModel(gas=G, valve=preset_valve("valve1"),
                                    volume_map=None,
                                    cylinder=None,
                                    leak_area=0.0)

    def _centered_traj(self, cmd_value, n=201):
        t = np.arange(n) * 5e-3
        s = np.full(n, 0.0375 / 2)
        return ExogenousTrajectory(t=t, cmd=np.full(n, float(cmd_value)),
                                   piston=s, piston_rate=np.zeros(n),
                                   source_pressure=np.full(n, P_SRC))

    def test_symmetric_zero_command(self):
        traj = self._centered_traj(0.0)
        model = PneumaticModel(gas=G, valve=_symmetric_valve(),
                               leak_area=0.0, volume_map=VolumeMap(1e-6, 0.0))
        p_a, p_b = dual_chamber_rollout(1.3e5, 1.3e5, traj, model, self.dual)
        np.testing.assert_allclose(p_a, p_b, rtol=1e-12)

    def test_step_command_opposite_signs(self):
        traj = self._centered_traj(3.0)
        p_a, p_b = dual_chamber_rollout(1.3e5, 1.3e5, traj, self.model,
                                        self.dual)
        assert p_a[-1] > 1.3e5   # chamber A charges
        assert p_b[-1] < 1.3e5   # chamber B discharges

    def test_decomposes_into_single_rollouts(self):
        traj = self._centered_traj(2.0)
        p_a, p_b = dual_chamber_rollout(1.3e5, 1.4e5, traj, self.model,
                                        self.dual)
        map_a = VolumeMap(v0=self.dual.dead_volume_a, slope=self.dual.bore_area)
        v_total = self.dual.dead_volume_b + self.dual.bore_area * self.dual.stroke
        map_b = VolumeMap(v0=v_total, slope=-self.dual.bore_area)
        single_a = rollout(1.3e5, traj, PneumaticModel(
            gas=G, valve=self.model.valve, volume_map=map_a))
        traj_m = ExogenousTrajectory(t=traj.t, cmd=-traj.cmd,
                                     piston=traj.piston,
                                     piston_rate=traj.piston_rate,
                                     source_pressure=traj.source_pressure)
        single_b = rollout(1.4e5, traj_m, PneumaticModel(
            gas=G, valve=self.model.valve, volume_map=map_b))
        np.testing.assert_array_equal(p_a, single_a)
        np.testing.assert_array_equal(p_b, single_b)


def _symmetric_valve():
    inlet = GompertzCurve(offset=1e-8, a=4e-7, b=3.0, c=1.2, d=0.0)
    exhaust = GompertzCurve(offset=1e-8, a=4e-7, b=3.0, c=-1.2, d=0.0)
    return ValveModel(name="sym", inlet=inlet, exhaust=exhaust)
