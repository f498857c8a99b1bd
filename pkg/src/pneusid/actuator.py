"""Valve and cylinder parameterizations.

A proportional valve maps a command signal in [-5, 5] to inlet and exhaust
port areas through two Gompertz curves; their nonzero floors represent the
always-present cross leakage seen on real valves. Cylinders map piston
position to chamber volume linearly, with an optional equivalent-orifice leak
area for anti-stiction designs.

``paper_presets`` ships the four measured cylinder configurations and the two
characterized valves used throughout the tests.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import PreconditionError

#: Fraction of total volume reserved as dead volume in the cylinder presets.
PRESET_DEAD_FRACTION = 0.05

#: Equivalent leak orifice diameter (m) for the anti-stiction cylinder family.
AIRPEL_LEAK_DIAMETER = 1.9665e-4
AIRPEL_LEAK_AREA = math.pi * AIRPEL_LEAK_DIAMETER ** 2 / 4.0


@dataclass(frozen=True)
class GompertzCurve:
    """Area curve a(cmd) = offset + a * exp(-b * exp(-c * (cmd + d))).

    ``offset`` is the floor (valve leakage), ``offset + a`` the ceiling;
    the curve is monotone in cmd with the sign of ``c``.
    """

    offset: float   # m^2
    a: float        # m^2
    b: float        # dimensionless
    c: float        # 1/command-unit
    d: float        # command-units

    def __post_init__(self):
        for name in ("offset", "a", "b", "c", "d"):
            if not math.isfinite(getattr(self, name)):
                raise PreconditionError(f"GompertzCurve.{name} must be finite")
        if self.offset < 0:
            raise PreconditionError("GompertzCurve.offset must be >= 0")
        if self.a < 0:
            raise PreconditionError("GompertzCurve.a must be >= 0")
        if self.b <= 0:
            raise PreconditionError("GompertzCurve.b must be > 0")

    def area(self, cmd):
        return gompertz_area(self, cmd)


def gompertz_area(curve: GompertzCurve, cmd):
    """Evaluate the curve; result is always within [offset, offset + a]."""
    cmd = np.asarray(cmd, dtype=float)
    if not np.all(np.isfinite(cmd)):
        raise PreconditionError("cmd must be finite")
    inner = np.exp(-curve.c * (cmd + curve.d))
    out = curve.offset + curve.a * np.exp(-curve.b * inner)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ValveModel:
    """A proportional valve: inlet opens with positive command, exhaust with
    negative (inlet curve c > 0, exhaust curve c < 0)."""

    name: str
    inlet: GompertzCurve
    exhaust: GompertzCurve
    cmd_min: float = -5.0
    cmd_max: float = 5.0


def valve_areas(valve: ValveModel, cmd):
    """(inlet area, exhaust area) at a command, clamped to the valve range."""
    cmd = np.asarray(cmd, dtype=float)
    if np.any(cmd < valve.cmd_min) or np.any(cmd > valve.cmd_max):
        warnings.warn(f"command outside [{valve.cmd_min}, {valve.cmd_max}] "
                      "clamped", stacklevel=2)
        cmd = np.clip(cmd, valve.cmd_min, valve.cmd_max)
    return gompertz_area(valve.inlet, cmd), gompertz_area(valve.exhaust, cmd)


@dataclass(frozen=True)
class VolumeMap:
    """Linear map from a piston sensor reading to chamber volume.

    ``v0`` is the intercept (houses the dead volume); units of ``slope``
    follow whatever the sensor reading is expressed in (m or raw units).
    """

    v0: float     # m^3
    slope: float  # m^3 per sensor-unit

    def __post_init__(self):
        if not (math.isfinite(self.v0) and math.isfinite(self.slope)):
            raise PreconditionError("VolumeMap fields must be finite")
        if self.v0 <= 0:
            raise PreconditionError("VolumeMap.v0 must be > 0")


@dataclass(frozen=True)
class CylinderModel:
    """Cylinder geometry in SI units (piston position in meters)."""

    name: str
    bore_area: float    # m^2
    stroke: float       # m
    dead_volume: float  # m^3
    leak_area: float    # m^2
    total_volume: float  # m^3, volume at full stroke

    def __post_init__(self):
        if self.leak_area < 0:
            raise PreconditionError("leak_area must be >= 0")
        if self.dead_volume <= 0 or self.bore_area <= 0 or self.stroke <= 0:
            raise PreconditionError("cylinder geometry must be positive")

    def volume_map(self) -> VolumeMap:
        return VolumeMap(v0=self.dead_volume, slope=self.bore_area)


def cylinder_volume(cyl_or_map, s, s_dot=0.0, floor=None):
    """Chamber volume and its rate from a piston reading.

    Accepts either a :class:`CylinderModel` (s in meters) or a
    :class:`VolumeMap` (s in sensor units). Volumes at or below the floor
    (default 1% of the intercept) are clamped with a warning.
    """
    if isinstance(cyl_or_map, CylinderModel):
        vmap = cyl_or_map.volume_map()
    elif isinstance(cyl_or_map, VolumeMap):
        vmap = cyl_or_map
    else:
        raise PreconditionError(f"expected CylinderModel or VolumeMap, got "
                                f"{type(cyl_or_map).__name__}")
    if floor is None:
        floor = 0.01 * vmap.v0
    s = np.asarray(s, dtype=float)
    v = vmap.v0 + vmap.slope * s
    v_dot = vmap.slope * np.asarray(s_dot, dtype=float)
    if np.any(v <= floor):
        warnings.warn("volume clamped at floor; check sensor range/map",
                      stacklevel=2)
        clamped = v <= floor
        v = np.where(clamped, floor, v)
        v_dot = np.where(clamped, 0.0, v_dot)
    if np.ndim(v) == 0:
        return float(v), float(np.asarray(v_dot))
    return v, np.broadcast_to(v_dot, v.shape).astype(float)


def _preset_cylinder(name, total_volume, stroke, leak_area):
    # Total volume is authoritative; reserve a fixed fraction as dead volume
    # so that volume(stroke) == total exactly.
    dead = PRESET_DEAD_FRACTION * total_volume
    bore_area = (total_volume - dead) / stroke
    return CylinderModel(name=name, bore_area=bore_area, stroke=stroke,
                         dead_volume=dead, leak_area=leak_area,
                         total_volume=total_volume)


def paper_presets():
    """The four measured cylinders and two characterized valves.

    Cylinder totals and all valve curve parameters are stored exactly as
    measured; bore areas are effective values derived from (total - dead
    volume) / stroke, with dead volume fixed at 5% of total (not separately
    published). The rotary PRN unit uses an equivalent linear stroke.
    """
    cylinders = [
        _preset_cylinder("AIR37", 2.3856e-6, 0.0375, AIRPEL_LEAK_AREA),
        _preset_cylinder("AIR200", 1.2723e-5, 0.2, AIRPEL_LEAK_AREA),
        _preset_cylinder("SMC", 2.0106e-5, 0.025, 0.0),
        _preset_cylinder("PRN", 3.50e-6, 0.045, 0.0),
    ]
    valves = [
        ValveModel(
            name="valve1",
            inlet=GompertzCurve(offset=2.9274e-8, a=5.501e-7, b=3.539,
                                c=1.564, d=0.12),
            exhaust=GompertzCurve(offset=2.6076e-8, a=6.079e-7, b=3.149,
                                  c=-1.365, d=-0.1),
        ),
        ValveModel(
            name="valve2",
            inlet=GompertzCurve(offset=2.627e-8, a=8.731e-7, b=4.029,
                                c=0.929, d=-0.1505),
            exhaust=GompertzCurve(offset=2.964e-8, a=8.659e-7, b=3.942,
                                  c=-0.9816, d=0.1584),
        ),
    ]
    return cylinders, valves


def preset_cylinder(name: str) -> CylinderModel:
    for cyl in paper_presets()[0]:
        if cyl.name == name:
            return cyl
    raise KeyError(f"unknown cylinder preset {name!r}")


def preset_valve(name: str) -> ValveModel:
    for valve in paper_presets()[1]:
        if valve.name == name:
            return valve
    raise KeyError(f"unknown valve preset {name!r}")


def scaled_valve(valve: ValveModel, gain: float) -> ValveModel:
    """Valve with both span parameters scaled; handy for mismatch studies."""
    return replace(valve,
                   inlet=replace(valve.inlet, a=valve.inlet.a * gain),
                   exhaust=replace(valve.exhaust, a=valve.exhaust.a * gain))


def deadzone_center(valve: ValveModel, n_grid: int = 2001) -> float:
    """Command minimizing total open area: the quietest point of the valve."""
    grid = np.linspace(valve.cmd_min, valve.cmd_max, n_grid)
    total = gompertz_area(valve.inlet, grid) + gompertz_area(valve.exhaust, grid)
    return float(grid[np.argmin(total)])


def deadzone_interval(valve: ValveModel, rel: float = 0.05,
                      n_grid: int = 2001):
    """Empirical deadzone: commands where both areas sit within ``rel`` of
    their floors (relative to each curve's span).

    Returns (lo, hi) or None when the two curves overlap so much that no
    command leaves both ports at floor (true for the shipped presets, whose
    partially-open curves cross near zero command).
    """
    grid = np.linspace(valve.cmd_min, valve.cmd_max, n_grid)
    quiet = np.ones_like(grid, dtype=bool)
    for curve in (valve.inlet, valve.exhaust):
        area = gompertz_area(curve, grid)
        quiet &= (area - curve.offset) <= rel * max(curve.a, _span_floor(curve))
    if not np.any(quiet):
        return None
    idx = np.flatnonzero(quiet)
    return float(grid[idx[0]]), float(grid[idx[-1]])


def _span_floor(curve):
    # degenerate a == 0 curves are flat everywhere; treat span as tiny
    return 1e-30
