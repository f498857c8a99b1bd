"""Dev experiment: identification round trip accuracy vs campaign settings.

Not part of the package; used to pick and freeze the campaign defaults and
the acceptance tolerances.
"""

import sys
import time

import numpy as np

from pneusid.actuator import gompertz_area, preset_cylinder, preset_valve
from pneusid.gas import derive_constants
from pneusid.model_io import PneumaticModel
from pneusid.synth import ExcitationConfig, NoiseConfig, generate_synthetic, \
    split_campaigns
from pneusid.sysid import (IdentifyConfig, identify,
                           valve_reference_from_valve)

def run(p_sigma, fs, cutoff, guard_s, hold_s, seed, levels=None,
        anchors=(0.5, 1.0, 2.0), fractions=None):
    gas = derive_constants()
    cyl = preset_cylinder("AIR37")
    valve = preset_valve("valve1")
    truth = PneumaticModel(gas=gas, valve=valve, cylinder=cyl,
                           leak_area=cyl.leak_area)
    exc = ExcitationConfig(sample_hz=fs, step_hold_s=hold_s)
    if levels is not None:
        exc.cmd_levels = levels
    if fractions is not None:
        exc.piston_fractions = fractions
    noise = NoiseConfig(p_sigma=p_sigma, src_sigma=p_sigma)
    t0 = time.perf_counter()
    logs = generate_synthetic(truth, exc, noise, seed=seed)
    t_synth = time.perf_counter() - t0
    ident_logs, _ = split_campaigns(logs)

    ref = valve_reference_from_valve(valve, anchor_cmds=anchors)
    cfg = IdentifyConfig(cutoff_hz=cutoff, guard_s=guard_s, reference=ref)
    t0 = time.perf_counter()
    model = identify(ident_logs, cfg, gas=gas)
    t_id = time.perf_counter() - t0

    grid = np.linspace(-5, 5, 201)
    dz = model.diagnostics.deadzone_center_cmd
    mask = np.abs(grid - dz) > 0.3
    errs = {}
    for port in ("inlet", "exhaust"):
        truth_a = gompertz_area(getattr(valve, port), grid)
        fit_a = gompertz_area(getattr(model.valve, port), grid)
        scale = np.max(truth_a)
        errs[port] = float(np.sqrt(np.mean(((fit_a - truth_a)[mask] / scale) ** 2)))
    slope_err = model.volume_map.slope / cyl.bore_area - 1.0
    v0_err = model.volume_map.v0 / cyl.dead_volume - 1.0
    leak_err = model.leak_area / cyl.leak_area - 1.0
    d = model.diagnostics
    print(f"p_sigma={p_sigma:7.1f} fs={fs:7.0f} cutoff={cutoff:6.0f} guard={guard_s:.3f} hold={hold_s:.2f} seed={seed}")
    print(f"  inlet RMS {errs['inlet']*100:6.3f}%  exhaust RMS {errs['exhaust']*100:6.3f}%  "
          f"slope {slope_err*100:+6.3f}%  v0 {v0_err*100:+6.2f}%  leak {leak_err*100:+6.2f}%")
    print(f"  segments {d.n_used}/{d.n_segments} used, lowinfo {d.n_low_information}, "
          f"recon rms(log) {d.reconciliation_rms_log:.4f}, vol R2 {d.volume_r2:.5f}, dz {dz:+.2f}, "
          f"anchor {d.anchor_source}; synth {t_synth:.1f}s id {t_id:.1f}s")
    return errs, slope_err, leak_err


if __name__ == "__main__":
    args = sys.argv[1:]
    if args and args[0] == "noiseless":
        run(0.0, 32000.0, 2000.0, 0.0025, 0.15, seed=11)
    elif args and args[0] == "grid":
        for cutoff, guard in ((800.0, 0.006), (1200.0, 0.004), (2000.0, 0.0025)):
            for sigma in (0.0, 300.0):
                run(sigma, 32000.0, cutoff, guard, 0.15, seed=11)
    else:
        for seed in (11, 12, 13):
            run(300.0, 32000.0, float(args[0]) if args else 2000.0,
                0.0025, 0.15, seed=seed)
