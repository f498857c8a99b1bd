"""Pneumatic actuator pressure dynamics, simulation, and identification.

Subpackage map:

- :mod:`pneusid.gas` — thin-port orifice flow and the chamber pressure rate
- :mod:`pneusid.actuator` — valve area curves, cylinders, measured presets
- :mod:`pneusid.model_io` — model bundle and its JSON file format
- :mod:`pneusid.simulate` — RK4 rollouts (compiled kernel + Python fallback)
- :mod:`pneusid.sysid` — pressure-rate estimation and model identification
- :mod:`pneusid.logs` — sensor log CSV format
- :mod:`pneusid.synth` — synthetic campaign generation
- :mod:`pneusid.evaluate` — windowed prediction metrics, flow-curve export
- :mod:`pneusid.cli` — command-line interface
"""

from .actuator import (CylinderModel, GompertzCurve, ValveModel, VolumeMap,
                       cylinder_volume, deadzone_center, deadzone_interval,
                       gompertz_area, paper_presets, preset_cylinder,
                       preset_valve, valve_areas)
from .errors import (CoverageError, DataError, FitError, IntegrationError,
                     InvalidConstantsError, PneusidError, PreconditionError)
from .gas import (FlowRegime, GasConstants, P_ATMOSPHERE, chamber_mass_flow,
                  derive_constants, flow_regime, flux_z, pressure_rate,
                  signed_flow)
from .model_io import PneumaticModel, load_model, model_from_dict, \
    model_to_dict, save_model
from .simulate import (ChamberState, DualChamberConfig, ExogenousTrajectory,
                       IntegratorOptions, backend_name, dual_chamber_rollout,
                       rollout, step)

__version__ = "0.1.0"

__all__ = [
    "CylinderModel", "GompertzCurve", "ValveModel", "VolumeMap",
    "cylinder_volume", "deadzone_center", "deadzone_interval",
    "gompertz_area", "paper_presets", "preset_cylinder", "preset_valve",
    "valve_areas",
    "CoverageError", "DataError", "FitError", "IntegrationError",
    "InvalidConstantsError", "PneusidError", "PreconditionError",
    "FlowRegime", "GasConstants", "P_ATMOSPHERE", "chamber_mass_flow",
    "derive_constants", "flow_regime", "flux_z", "pressure_rate",
    "signed_flow",
    "PneumaticModel", "load_model", "model_from_dict", "model_to_dict",
    "save_model",
    "ChamberState", "DualChamberConfig", "ExogenousTrajectory",
    "IntegratorOptions", "backend_name", "dual_chamber_rollout", "rollout",
    "step",
    "__version__",
]
