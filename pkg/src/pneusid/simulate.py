"""Chamber pressure simulation: single steps, full rollouts, dual chambers.

The single state is chamber pressure; command, piston position/rate and
source pressure are exogenous series, linearly interpolated between samples.
Integration is classical RK4 with per-interval substepping (see the kernel
modules). The compiled kernel is selected at import when available; set
``PNEUSID_BACKEND=python`` or ``=compiled`` to force one, or pass
``backend=`` explicitly (used by the parity tests and the benchmark).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _rollout_py
from .actuator import ValveModel, VolumeMap
from .errors import DataError, IntegrationError, PreconditionError
from .gas import GasConstants, P_ATMOSPHERE
from .model_io import PneumaticModel

try:
    from . import _rollout as _rollout_c
except ImportError:
    _rollout_c = None


def _select_backend():
    choice = os.environ.get("PNEUSID_BACKEND", "auto")
    if choice == "python":
        return _rollout_py
    if choice == "compiled":
        if _rollout_c is None:
            raise ImportError("PNEUSID_BACKEND=compiled but the extension is "
                              "not built; run `python setup.py build_ext "
                              "--inplace` or reinstall")
        return _rollout_c
    return _rollout_c if _rollout_c is not None else _rollout_py


_KERNEL = _select_backend()


def backend_name() -> str:
    """Name of the kernel in use: 'compiled' or 'python'."""
    return _KERNEL.BACKEND


def kernel_module(backend: Optional[str] = None):
    if backend is None:
        return _KERNEL
    if backend == "python":
        return _rollout_py
    if backend == "compiled":
        if _rollout_c is None:
            raise IntegrationError("compiled kernel not available")
        return _rollout_c
    raise ValueError(f"unknown backend {backend!r}")


@dataclass(frozen=True)
class ChamberState:
    """Chamber pressure (absolute Pa) at a time point."""
    p: float
    t: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.p) and self.p > 0):
            raise PreconditionError("chamber pressure must be positive and finite")


@dataclass(frozen=True)
class IntegratorOptions:
    """Substep policy: |dp| per substep <= dp_frac * p, substep size clamped
    to [substep_floor, substep_cap] (and never beyond the interval end)."""

    dp_frac: float = 0.005
    substep_floor: float = 1e-6
    substep_cap: float = 1e-3

    def halved(self) -> "IntegratorOptions":
        """Same policy with the cap halved; used for convergence checks."""
        return IntegratorOptions(dp_frac=self.dp_frac,
                                 substep_floor=self.substep_floor,
                                 substep_cap=self.substep_cap / 2.0)


@dataclass
class ExogenousTrajectory:
    """Uniformly sampled exogenous inputs driving a chamber simulation.

    The integrator interpolates cmd, piston and source pressure linearly
    between samples and uses the exact rate of the interpolated piston path
    for the volume work term; ``piston_rate`` is the sensor-facing rate
    estimate carried alongside (kept for export and diagnostics).
    """

    t: np.ndarray               # s
    cmd: np.ndarray             # command-units
    piston: np.ndarray          # m or sensor-units (must match the volume map)
    piston_rate: np.ndarray     # units/s
    source_pressure: np.ndarray  # absolute Pa

    def __post_init__(self):
        arrays = [np.ascontiguousarray(a, dtype=float) for a in
                  (self.t, self.cmd, self.piston, self.piston_rate,
                   self.source_pressure)]
        self.t, self.cmd, self.piston, self.piston_rate, self.source_pressure = arrays
        n = len(self.t)
        if n < 2:
            raise DataError("trajectory needs at least two samples")
        if any(len(a) != n for a in arrays[1:]):
            raise DataError("trajectory series must share one length")
        steps = np.diff(self.t)
        if np.any(steps <= 0):
            raise DataError("trajectory times must be strictly increasing")
        dt = steps[0]
        if np.max(np.abs(steps - dt)) > 1e-9:
            raise DataError("trajectory must be uniformly sampled "
                            "(dt jitter above 1e-9 s)")
        for a in arrays:
            if not np.all(np.isfinite(a)):
                raise DataError("trajectory contains non-finite values")

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def __len__(self) -> int:
        return len(self.t)

    def window(self, start: int, stop: int) -> "ExogenousTrajectory":
        return ExogenousTrajectory(t=self.t[start:stop],
                                   cmd=self.cmd[start:stop],
                                   piston=self.piston[start:stop],
                                   piston_rate=self.piston_rate[start:stop],
                                   source_pressure=self.source_pressure[start:stop])


DEFAULT_OPTIONS = IntegratorOptions()


def _pack_params(valve: ValveModel, leak_area: float, vmap: VolumeMap,
                 g: GasConstants, p_r: float, opts: IntegratorOptions,
                 v_floor: Optional[float] = None) -> np.ndarray:
    if v_floor is None:
        # Eq.-of-state division by v must survive noisy sensor readings
        v_floor = max(0.01 * vmap.v0, 1e-12)
    return np.array([
        valve.inlet.offset, valve.inlet.a, valve.inlet.b, valve.inlet.c,
        valve.inlet.d,
        valve.exhaust.offset, valve.exhaust.a, valve.exhaust.b,
        valve.exhaust.c, valve.exhaust.d,
        valve.cmd_min, valve.cmd_max,
        leak_area,
        vmap.v0, vmap.slope, v_floor,
        g.n, g.Rs * g.T, g.alpha, g.beta, g.theta, g.kappa,
        p_r,
        opts.dp_frac, opts.substep_floor, opts.substep_cap,
    ], dtype=float)


@dataclass
class RolloutDiagnostics:
    floor_clamps: int = 0
    total_substeps: int = 0


def rollout(initial_p: float, traj: ExogenousTrajectory, model: PneumaticModel,
            p_r: float = P_ATMOSPHERE, opts: IntegratorOptions = DEFAULT_OPTIONS,
            backend: Optional[str] = None,
            diagnostics: Optional[RolloutDiagnostics] = None) -> np.ndarray:
    """Predict chamber pressure at every trajectory sample.

    Starts from the measured ``initial_p`` and integrates the pressure ODE
    under the trajectory's interpolated inputs. Deterministic: identical
    inputs give bit-identical outputs on a given backend.
    """
    if not (np.isfinite(initial_p) and initial_p > 0):
        raise PreconditionError("initial pressure must be positive and finite")
    vmap = model.resolve_volume_map()
    params = _pack_params(model.valve, model.leak_area, vmap, model.gas,
                          p_r, opts)
    out = np.empty(len(traj), dtype=float)
    kern = kernel_module(backend)
    status, idx, sub_time, clamps, substeps = kern.rollout_arrays(
        float(initial_p), traj.dt, traj.cmd, traj.piston,
        traj.source_pressure, params, out)
    if diagnostics is not None:
        diagnostics.floor_clamps = int(clamps)
        diagnostics.total_substeps = int(substeps)
    if status != 0:
        raise IntegrationError(
            f"integration produced a non-finite or non-positive pressure in "
            f"interval {idx} at +{sub_time:.3e} s", sample_index=int(idx),
            sub_time=float(sub_time))
    return out


def step(state: ChamberState, inputs: dict, dt: float, model: PneumaticModel,
         opts: IntegratorOptions = DEFAULT_OPTIONS,
         backend: Optional[str] = None) -> ChamberState:
    """Advance one control interval with inputs held constant.

    ``inputs`` carries cmd, v (m^3), v_dot (m^3/s), P_c and optionally P_r
    (absolute Pa). Volume is driven directly, bypassing any volume map.
    """
    if dt <= 0 or not np.isfinite(dt):
        raise PreconditionError("dt must be positive and finite")
    v = float(inputs["v"])
    if v <= 0:
        raise PreconditionError("volume must be positive")
    v_dot = float(inputs.get("v_dot", 0.0))
    p_r = float(inputs.get("P_r", P_ATMOSPHERE))
    # identity volume map: piston coordinate ramps v + v_dot*tau
    vmap = VolumeMap(v0=v, slope=1.0)
    params = _pack_params(model.valve, model.leak_area, vmap, model.gas,
                          p_r, opts, v_floor=max(0.01 * v, 1e-12))
    cmd = float(inputs["cmd"])
    p_c = float(inputs["P_c"])
    traj_cmd = np.array([cmd, cmd])
    traj_piston = np.array([0.0, v_dot * dt])
    traj_src = np.array([p_c, p_c])
    out = np.empty(2, dtype=float)
    kern = kernel_module(backend)
    status, idx, sub_time, _, _ = kern.rollout_arrays(
        state.p, float(dt), traj_cmd, traj_piston, traj_src, params, out)
    if status != 0:
        raise IntegrationError(
            f"integration failed at +{sub_time:.3e} s into the step",
            sample_index=int(idx), sub_time=float(sub_time))
    return ChamberState(p=float(out[1]), t=state.t + dt)


@dataclass(frozen=True)
class DualChamberConfig:
    """Port assignment and geometry for a double-acting cylinder.

    Positive command charges chamber A and exhausts chamber B by default;
    chamber B sees the complementary volume dead_b + bore*(stroke - s).
    """

    bore_area: float
    stroke: float
    dead_volume_a: float
    dead_volume_b: float
    invert_cmd_b: bool = True


def dual_chamber_rollout(initial_a: float, initial_b: float,
                         traj: ExogenousTrajectory, model: PneumaticModel,
                         dual: DualChamberConfig,
                         p_r: float = P_ATMOSPHERE,
                         opts: IntegratorOptions = DEFAULT_OPTIONS,
                         backend: Optional[str] = None):
    """Two complementary chambers driven by one command signal.

    The piston trajectory is exogenous, so the chambers decouple into two
    independent rollouts with mirrored commands and complementary volumes.
    Returns (pressures_a, pressures_b).
    """
    map_a = VolumeMap(v0=dual.dead_volume_a, slope=dual.bore_area)
    map_b = VolumeMap(v0=dual.dead_volume_b + dual.bore_area * dual.stroke,
                      slope=-dual.bore_area)
    model_a = PneumaticModel(gas=model.gas, valve=model.valve,
                             cylinder=None, volume_map=map_a,
                             leak_area=model.leak_area)
    model_b = PneumaticModel(gas=model.gas, valve=model.valve,
                             cylinder=None, volume_map=map_b,
                             leak_area=model.leak_area)
    traj_b = traj
    if dual.invert_cmd_b:
        traj_b = ExogenousTrajectory(t=traj.t, cmd=-traj.cmd,
                                     piston=traj.piston,
                                     piston_rate=traj.piston_rate,
                                     source_pressure=traj.source_pressure)
    p_a = rollout(initial_a, traj, model_a, p_r=p_r, opts=opts, backend=backend)
    p_b = rollout(initial_b, traj_b, model_b, p_r=p_r, opts=opts, backend=backend)
    return p_a, p_b
