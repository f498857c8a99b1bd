"""Synthetic campaign generation from a ground-truth model.

Two campaign styles, mirroring the hardware workflow: identification logs
hold the piston locked at a handful of positions and apply shuffled step
commands (every configured level appears the same number of times, so the
command histogram is exactly uniform); validation logs apply fast random
step commands while the piston sweeps through smooth, aggressive strokes.
Gaussian sensor noise is added after simulation; the source-pressure wander
is real (the simulation sees it), the noise is measurement-only.

Everything is seeded: the same seed reproduces byte-identical logs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DataError
from .gas import P_ATMOSPHERE
from .logs import SensorLog
from .model_io import PneumaticModel
from .simulate import ExogenousTrajectory, IntegratorOptions, rollout

DEFAULT_CMD_LEVELS = (-5.0, -4.0, -3.0, -2.0, -1.0, -0.5, -0.2, 0.0,
                      0.2, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0)


@dataclass
class ExcitationConfig:
    """Shape of the synthetic campaigns."""

    n_volumes: int = 5
    piston_fractions: Optional[Sequence[float]] = None  # of stroke; derived if None
    cmd_levels: Sequence[float] = DEFAULT_CMD_LEVELS
    level_repeats: int = 1
    step_hold_s: float = 0.3
    sample_hz: float = 4000.0
    window_s: float = 2.0
    n_validation: int = 1
    val_duration_s: float = 24.0
    val_cmd_rate_hz: float = 8.0
    val_cmd_span: tuple = (-5.0, 5.0)
    val_piston_band: tuple = (0.15, 0.85)   # fractions of stroke
    val_piston_freqs_hz: tuple = (0.35, 0.6, 1.1)
    source_nominal: float = 161325.0        # 60 kPa gauge source, absolute
    source_wander_pa: float = 1500.0
    source_wander_hz: float = 0.3


@dataclass
class NoiseConfig:
    p_sigma: float = 0.0     # Pa, chamber pressure sensor
    src_sigma: float = 0.0   # Pa, source pressure sensor


def _source_series(t, exc: ExcitationConfig, rng) -> np.ndarray:
    phase = rng.uniform(0.0, 2.0 * np.pi)
    return (exc.source_nominal
            + exc.source_wander_pa * np.sin(2.0 * np.pi * exc.source_wander_hz
                                            * t + phase))


def _hold_series(values, hold_s, sample_hz, n_samples) -> np.ndarray:
    per = int(round(hold_s * sample_hz))
    out = np.repeat(np.asarray(values, dtype=float), per)
    if len(out) < n_samples:
        out = np.concatenate([out, np.full(n_samples - len(out), out[-1])])
    return out[:n_samples]


def generate_synthetic(truth: PneumaticModel, excitation: ExcitationConfig,
                       noise: NoiseConfig, seed: int,
                       opts: IntegratorOptions = IntegratorOptions(),
                       p_r: float = P_ATMOSPHERE) -> list:
    """Simulate identification and validation campaigns from a truth model.

    Returns SensorLogs labeled via ``meta['campaign']`` ('identification'
    or 'validation'). Requires an explicit seed; identical seeds produce
    identical logs.
    """
    if seed is None:
        raise DataError("generate_synthetic requires a seed")
    rng = np.random.default_rng(seed)
    cyl = truth.cylinder
    if cyl is None:
        raise DataError("truth model needs a cylinder (piston in meters)")
    vmap = truth.resolve_volume_map()

    exc = excitation
    dt = 1.0 / exc.sample_hz
    logs = []

    fractions = exc.piston_fractions
    if fractions is None:
        fractions = np.linspace(0.18, 0.95, exc.n_volumes)
    if len(fractions) != exc.n_volumes:
        raise DataError("piston_fractions length must equal n_volumes")

    levels = [float(c) for c in exc.cmd_levels] * exc.level_repeats
    n_steps = len(levels)
    id_duration = n_steps * exc.step_hold_s
    n_id = int(round(id_duration * exc.sample_hz)) + 1

    for j, frac in enumerate(fractions):
        s_j = float(frac) * cyl.stroke
        seq = rng.permutation(np.asarray(levels, dtype=float))
        t = np.arange(n_id) * dt
        cmd = _hold_series(seq, exc.step_hold_s, exc.sample_hz, n_id)
        piston = np.full(n_id, s_j)
        src = _source_series(t, exc, rng)
        traj = ExogenousTrajectory(t=t, cmd=cmd, piston=piston,
                                   piston_rate=np.zeros(n_id),
                                   source_pressure=src)
        try:
            p = rollout(p_r, traj, truth, p_r=p_r, opts=opts)
        except Exception as exc_err:
            raise DataError(f"identification scenario volume={j} failed: "
                            f"{exc_err}") from exc_err
        p_meas = p + rng.normal(0.0, noise.p_sigma, n_id) if noise.p_sigma else p
        src_meas = src + rng.normal(0.0, noise.src_sigma, n_id) if noise.src_sigma else src
        logs.append(SensorLog(
            t=t, cmd=cmd, p=p_meas, piston=piston, src_p=src_meas,
            meta={"campaign": "identification",
                  "cylinder": cyl.name, "valve": truth.valve.name,
                  "piston_units": "m", "volume_index": str(j),
                  "seed": str(seed)}))

    n_val = int(round(exc.val_duration_s * exc.sample_hz)) + 1
    for k in range(exc.n_validation):
        t = np.arange(n_val) * dt
        n_cmd_steps = int(np.ceil(exc.val_duration_s * exc.val_cmd_rate_hz)) + 1
        steps = rng.uniform(exc.val_cmd_span[0], exc.val_cmd_span[1],
                            n_cmd_steps)
        cmd = _hold_series(steps, 1.0 / exc.val_cmd_rate_hz, exc.sample_hz,
                           n_val)
        lo, hi = exc.val_piston_band
        mid = 0.5 * (lo + hi) * cyl.stroke
        amp = 0.5 * (hi - lo) * cyl.stroke
        piston = np.full(n_val, mid)
        weights = rng.uniform(0.5, 1.0, len(exc.val_piston_freqs_hz))
        weights /= weights.sum()
        for f_hz, wgt in zip(exc.val_piston_freqs_hz, weights):
            phase = rng.uniform(0.0, 2.0 * np.pi)
            piston = piston + amp * wgt * np.sin(2.0 * np.pi * f_hz * t + phase)
        piston = np.clip(piston, lo * cyl.stroke, hi * cyl.stroke)
        src = _source_series(t, exc, rng)
        traj = ExogenousTrajectory(t=t, cmd=cmd, piston=piston,
                                   piston_rate=np.gradient(piston, dt),
                                   source_pressure=src)
        try:
            p = rollout(p_r, traj, truth, p_r=p_r, opts=opts)
        except Exception as exc_err:
            raise DataError(f"validation scenario {k} failed: {exc_err}") \
                from exc_err
        p_meas = p + rng.normal(0.0, noise.p_sigma, n_val) if noise.p_sigma else p
        src_meas = src + rng.normal(0.0, noise.src_sigma, n_val) if noise.src_sigma else src
        logs.append(SensorLog(
            t=t, cmd=cmd, p=p_meas, piston=piston, src_p=src_meas,
            meta={"campaign": "validation",
                  "cylinder": cyl.name, "valve": truth.valve.name,
                  "piston_units": "m", "scenario": str(k),
                  "seed": str(seed)}))
    return logs


def split_campaigns(logs) -> tuple:
    """(identification logs, validation logs) by the campaign label."""
    ident = [lg for lg in logs if lg.meta.get("campaign") == "identification"]
    val = [lg for lg in logs if lg.meta.get("campaign") == "validation"]
    return ident, val
