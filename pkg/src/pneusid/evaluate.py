"""Short-horizon prediction evaluation and valve flow-curve export.

The evaluation protocol slides non-overlapping windows (2 s by default)
over a log; each window's rollout restarts from the measured pressure, and
the per-window RMSE is aggregated as a percentage of the working pressure
range (max minus min measured pressure over the whole log, overridable).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .actuator import ValveModel, gompertz_area
from .errors import DataError
from .gas import GasConstants, P_ATMOSPHERE, signed_flow
from .logs import SensorLog
from .model_io import PneumaticModel
from .simulate import (DEFAULT_OPTIONS, ExogenousTrajectory,
                       IntegratorOptions, rollout)

#: Density used to convert mass flow to volumetric flow (kg/m^3, standard air).
STANDARD_AIR_DENSITY = 1.204


@dataclass
class EvalReport:
    """Windowed prediction-error summary for one log."""

    window_rmse_pa: list
    rmse_pa: float          # mean of the per-window RMSE values
    range_pa: float         # working pressure range used as denominator
    windows: int
    window_s: float

    @property
    def percent_of_range(self) -> float:
        return 100.0 * self.rmse_pa / self.range_pa

    def to_dict(self) -> dict:
        return {"rmse_pa": self.rmse_pa,
                "percent_of_range": self.percent_of_range,
                "windows": self.windows,
                "window_s": self.window_s,
                "range_pa": self.range_pa}


def trajectory_from_log(log: SensorLog) -> ExogenousTrajectory:
    """Exogenous inputs of a log; piston rate from central differences."""
    return ExogenousTrajectory(t=log.t, cmd=log.cmd, piston=log.piston,
                               piston_rate=np.gradient(log.piston, log.dt),
                               source_pressure=log.src_p)


def evaluate_predictions(log: SensorLog, model: PneumaticModel,
                         window_s: float = 2.0,
                         range_pa: Optional[float] = None,
                         p_r: float = P_ATMOSPHERE,
                         opts: IntegratorOptions = DEFAULT_OPTIONS,
                         backend: Optional[str] = None) -> EvalReport:
    """Rollout each window from its measured initial pressure and score it.

    RMSE per window excludes the pinned initial sample (its error is zero by
    construction). Time-translation invariant: only dt and the sample values
    matter.
    """
    if window_s <= 0:
        raise DataError("window_s must be positive")
    w = int(round(window_s / log.dt))
    if w < 1 or len(log) < w + 1:
        raise DataError(f"log shorter than one {window_s} s window")
    traj = trajectory_from_log(log)
    n_windows = (len(log) - 1) // w
    rmses = []
    for k in range(n_windows):
        lo, hi = k * w, k * w + w + 1
        pred = rollout(float(log.p[lo]), traj.window(lo, hi), model,
                       p_r=p_r, opts=opts, backend=backend)
        err = pred[1:] - log.p[lo + 1:hi]
        rmses.append(float(np.sqrt(np.mean(err ** 2))))
    if range_pa is None:
        range_pa = float(np.max(log.p) - np.min(log.p))
    if range_pa <= 0:
        raise DataError("working pressure range is zero; supply range_pa")
    return EvalReport(window_rmse_pa=rmses, rmse_pa=float(np.mean(rmses)),
                      range_pa=range_pa, windows=n_windows, window_s=window_s)


def mass_flow_to_lpm(m_dot, density: float = STANDARD_AIR_DENSITY):
    """kg/s to standard liters per minute."""
    return np.asarray(m_dot) / density * 1000.0 * 60.0


def area_from_flow_lpm(flow_lpm: float, P_c: float, p_d: float,
                       g: GasConstants,
                       density: float = STANDARD_AIR_DENSITY) -> float:
    """Invert a bench flow-meter reading to an orifice area."""
    flux = signed_flow(P_c, p_d, g)
    if flux <= 0:
        raise DataError("bench pressures give no forward flow")
    return float(flow_lpm) * density / (1000.0 * 60.0) / flux


def export_flow_curve(valve: ValveModel, g: GasConstants,
                      P_c: float = 161325.0, P_r: float = P_ATMOSPHERE,
                      cmd_grid=None) -> dict:
    """Steady through-flow of a bare valve versus command, in l/min.

    Inlet and exhaust paths are both evaluated across the bench pressure
    pair; their difference gives the signed net curve (the familiar S shape
    with a flat deadzone plateau and nonzero leakage floor), and their sum at
    zero command is the total leak flow a bench meter would integrate.
    """
    if cmd_grid is None:
        cmd_grid = np.linspace(valve.cmd_min, valve.cmd_max, 201)
    cmd_grid = np.asarray(cmd_grid, dtype=float)
    if np.any(cmd_grid < valve.cmd_min) or np.any(cmd_grid > valve.cmd_max):
        raise DataError("cmd grid outside the valve command range")
    flux = signed_flow(P_c, P_r, g)
    a_c = gompertz_area(valve.inlet, cmd_grid)
    a_a = gompertz_area(valve.exhaust, cmd_grid)
    inlet_lpm = mass_flow_to_lpm(a_c * flux)
    exhaust_lpm = mass_flow_to_lpm(a_a * flux)
    zero_idx = int(np.argmin(np.abs(cmd_grid)))
    return {
        "cmd": cmd_grid,
        "inlet_lpm": inlet_lpm,
        "exhaust_lpm": exhaust_lpm,
        "net_lpm": inlet_lpm - exhaust_lpm,
        "zero_cmd_leak_lpm": float(inlet_lpm[zero_idx] + exhaust_lpm[zero_idx]),
    }
