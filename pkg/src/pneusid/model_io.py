"""Model bundle and its JSON file format.

A model file is a JSON document with top-level keys ``gas``, ``valve``,
``cylinder``, ``volume_map``, ``leak_area``; all values SI. ``cylinder`` and
``volume_map`` may each be null, but at least one must be present so the
simulator can resolve chamber volume from the piston signal. When both are
given, ``volume_map`` wins (it is typically the identified map in raw sensor
units; the cylinder block then just documents geometry).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .actuator import CylinderModel, GompertzCurve, ValveModel, VolumeMap
from .errors import DataError
from .gas import GasConstants, derive_constants


@dataclass(frozen=True)
class PneumaticModel:
    """Everything needed to simulate one chamber: gas constants, valve area
    curves, a volume source, and the cylinder leak area."""

    gas: GasConstants
    valve: ValveModel
    cylinder: Optional[CylinderModel] = None
    volume_map: Optional[VolumeMap] = None
    leak_area: float = 0.0

    def resolve_volume_map(self) -> VolumeMap:
        if self.volume_map is not None:
            return self.volume_map
        if self.cylinder is not None:
            return self.cylinder.volume_map()
        raise DataError("model has neither volume_map nor cylinder; cannot "
                        "resolve chamber volume")


def _gas_to_dict(g: GasConstants) -> dict:
    return {"M": g.M, "T": g.T, "R": g.R, "C": g.C, "Z": g.Z,
            "kappa": g.kappa, "n": g.n}


def _curve_to_dict(c: GompertzCurve) -> dict:
    return {"offset": c.offset, "a": c.a, "b": c.b, "c": c.c, "d": c.d}


def model_to_dict(model: PneumaticModel) -> dict:
    valve = model.valve
    doc = {
        "gas": _gas_to_dict(model.gas),
        "valve": {
            "name": valve.name,
            "cmd_min": valve.cmd_min,
            "cmd_max": valve.cmd_max,
            "inlet": _curve_to_dict(valve.inlet),
            "exhaust": _curve_to_dict(valve.exhaust),
        },
        "cylinder": None,
        "volume_map": None,
        "leak_area": model.leak_area,
    }
    if model.cylinder is not None:
        cyl = model.cylinder
        doc["cylinder"] = {
            "name": cyl.name, "bore_area": cyl.bore_area,
            "stroke": cyl.stroke, "dead_volume": cyl.dead_volume,
            "leak_area": cyl.leak_area, "total_volume": cyl.total_volume,
        }
    if model.volume_map is not None:
        doc["volume_map"] = {"v0": model.volume_map.v0,
                             "slope": model.volume_map.slope}
    return doc


def _require(doc, key, where):
    if key not in doc:
        raise DataError(f"model file missing key {key!r} in {where}")
    return doc[key]


def _curve_from_dict(doc, where) -> GompertzCurve:
    return GompertzCurve(offset=_require(doc, "offset", where),
                         a=_require(doc, "a", where),
                         b=_require(doc, "b", where),
                         c=_require(doc, "c", where),
                         d=_require(doc, "d", where))


def model_from_dict(doc: dict) -> PneumaticModel:
    gas_doc = _require(doc, "gas", "top level")
    gas = derive_constants(M=_require(gas_doc, "M", "gas"),
                           T=_require(gas_doc, "T", "gas"),
                           R=_require(gas_doc, "R", "gas"),
                           C=_require(gas_doc, "C", "gas"),
                           Z=_require(gas_doc, "Z", "gas"),
                           kappa=_require(gas_doc, "kappa", "gas"),
                           n=gas_doc.get("n"))
    valve_doc = _require(doc, "valve", "top level")
    valve = ValveModel(name=valve_doc.get("name", "valve"),
                       inlet=_curve_from_dict(_require(valve_doc, "inlet", "valve"), "valve.inlet"),
                       exhaust=_curve_from_dict(_require(valve_doc, "exhaust", "valve"), "valve.exhaust"),
                       cmd_min=valve_doc.get("cmd_min", -5.0),
                       cmd_max=valve_doc.get("cmd_max", 5.0))
    cylinder = None
    if doc.get("cylinder") is not None:
        c = doc["cylinder"]
        cylinder = CylinderModel(name=c.get("name", "cylinder"),
                                 bore_area=_require(c, "bore_area", "cylinder"),
                                 stroke=_require(c, "stroke", "cylinder"),
                                 dead_volume=_require(c, "dead_volume", "cylinder"),
                                 leak_area=_require(c, "leak_area", "cylinder"),
                                 total_volume=_require(c, "total_volume", "cylinder"))
    volume_map = None
    if doc.get("volume_map") is not None:
        m = doc["volume_map"]
        volume_map = VolumeMap(v0=_require(m, "v0", "volume_map"),
                               slope=_require(m, "slope", "volume_map"))
    leak_area = float(_require(doc, "leak_area", "top level"))
    if leak_area < 0:
        raise DataError("leak_area must be >= 0")
    return PneumaticModel(gas=gas, valve=valve, cylinder=cylinder,
                          volume_map=volume_map, leak_area=leak_area)


def save_model(model: PneumaticModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> PneumaticModel:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise DataError(f"{path}: expected a JSON object at top level")
    return model_from_dict(doc)
