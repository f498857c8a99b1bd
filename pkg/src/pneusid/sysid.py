"""Gray-box identification: pressure-rate estimation, per-segment area/volume
fits, valve curve fitting, volume map regression, and the full pipeline.

The measured pressure-rate residual per fixed-volume segment is

    pdot_m - (n*Rs*T/v) * (a_c*f(P_c, p) - (a_a + a_l)*f(p, P_r))

which pins down the ratios a_c/v and (a_a + a_l)/v; the overall scale is a
gauge freedom (scaling every area and the volume together leaves the model
unchanged), and exhaust and leak areas enter only through their sum. The
pipeline therefore reconciles all segments jointly in log space — areas
shared across volume groups, volumes shared across command levels — and
fixes the remaining scalar gauge with bench-characterized valve areas (a
:class:`ValveReference`). The leak area is the median excess of the summed
drain area over the referenced exhaust floor at exhaust-closed commands.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np
from scipy import signal

from .actuator import GompertzCurve, ValveModel, VolumeMap, gompertz_area
from .errors import CoverageError, DataError, FitError
from .gas import GasConstants, derive_constants, signed_flow
from .lm import fit_nonnegative
from .logs import SensorLog

# ---------------------------------------------------------------------------
# pressure-rate estimation


def zero_phase_lowpass(x: np.ndarray, fs: float, cutoff_hz: float,
                       order: int = 4) -> np.ndarray:
    """Forward-backward Butterworth low-pass (zero phase lag)."""
    if cutoff_hz <= 0:
        raise DataError("cutoff must be positive")
    if cutoff_hz >= fs / 2:
        raise DataError(f"cutoff {cutoff_hz} Hz not below Nyquist {fs / 2} Hz")
    b, a = signal.butter(order, cutoff_hz / (fs / 2))
    padlen = 3 * max(len(a), len(b))
    if len(x) <= padlen:
        raise DataError(f"series of {len(x)} samples shorter than filter "
                        f"warm-up ({padlen + 1})")
    return signal.filtfilt(b, a, x)


def estimate_pressure_rate(log: SensorLog, cutoff_hz: float = 200.0,
                           order: int = 4) -> np.ndarray:
    """Measured pressure rate: zero-phase low-pass then central differences
    (one-sided at the endpoints). Same length as the log."""
    p_f = zero_phase_lowpass(log.p, log.sample_hz, cutoff_hz, order=order)
    return np.gradient(p_f, log.dt)


def fir_lowpass(x: np.ndarray, fs: float, cutoff_hz: float,
                taps_per_cutoff: float = 3.0):
    """Zero-phase FIR low-pass with finite support.

    Returns (filtered series, kernel half-width in samples). The segment
    pipeline guards exactly one half-width around each command change, which
    the FIR's finite support turns into a hard guarantee: no sample inside a
    segment is influenced by data from a neighboring command level.
    """
    if cutoff_hz <= 0:
        raise DataError("cutoff must be positive")
    if cutoff_hz >= fs / 2:
        raise DataError(f"cutoff {cutoff_hz} Hz not below Nyquist {fs / 2} Hz")
    numtaps = int(taps_per_cutoff * fs / cutoff_hz)
    numtaps += 1 - numtaps % 2  # odd length keeps the filter zero-phase
    numtaps = max(numtaps, 5)
    half = numtaps // 2
    if len(x) <= numtaps:
        raise DataError(f"series of {len(x)} samples shorter than the "
                        f"{numtaps}-tap filter")
    kernel = signal.firwin(numtaps, cutoff_hz, fs=fs)
    padded = np.pad(np.asarray(x, dtype=float), half, mode="reflect")
    return np.convolve(padded, kernel, mode="valid"), half


# ---------------------------------------------------------------------------
# segments


@dataclass
class Segment:
    """Fixed-volume slice of a log over one held command level.

    ``f1``/``f2`` are the orifice-flux regressors f(P_c, p) and f(p, P_r)
    evaluated on the raw samples and then passed through the same zero-phase
    filter as the pressure rate. Areas and volume are constant within a
    segment, so filtering both sides of the rate equation keeps it exact:
    fast transients are delocalized by the filter, not lost, and the rate
    estimate carries no differentiation bias against the model.
    """

    cmd: float
    sensor_reading: float
    t: np.ndarray
    p: np.ndarray
    pdot: np.ndarray
    P_c: np.ndarray
    f1: Optional[np.ndarray] = None
    f2: Optional[np.ndarray] = None
    log_index: int = -1

    def __post_init__(self):
        n = len(self.t)
        if n < 50:
            raise DataError(f"segment needs >= 50 samples, got {n}")
        if not (len(self.p) == len(self.pdot) == len(self.P_c) == n):
            raise DataError("segment series must share one length")
        for name in ("f1", "f2"):
            col = getattr(self, name)
            if col is not None and len(col) != n:
                raise DataError("segment series must share one length")


@dataclass(frozen=True)
class ValveReference:
    """Bench characterization of a valve: the absolute scale source.

    ``anchors`` are (cmd, inlet area m^2) pairs obtained from flow-meter
    readings at open commands; the floors are the residual port areas at the
    opposite command extreme (valve leakage). These are what a supply-line
    flow measurement pins down before the valve ever meets a cylinder.
    """

    anchors: tuple = ()
    inlet_floor_area: Optional[float] = None
    exhaust_floor_area: Optional[float] = None

    def to_dict(self) -> dict:
        return {"anchors": [[c, a] for c, a in self.anchors],
                "inlet_floor_area": self.inlet_floor_area,
                "exhaust_floor_area": self.exhaust_floor_area}

    @classmethod
    def from_dict(cls, doc: dict) -> "ValveReference":
        return cls(anchors=tuple((float(c), float(a))
                                 for c, a in doc.get("anchors", [])),
                   inlet_floor_area=doc.get("inlet_floor_area"),
                   exhaust_floor_area=doc.get("exhaust_floor_area"))


def valve_reference_from_valve(valve: ValveModel,
                               anchor_cmds: Sequence[float] = (2.0, 3.0, 4.0, 5.0)
                               ) -> ValveReference:
    """Distill a valve's bench characterization into a reference.

    Equivalent to measuring supply flow at the given open commands and at the
    closed extremes, then dividing by the orifice flux at the bench pressure
    pair — the flux factor cancels, leaving the curve areas directly.
    """
    anchors = tuple((float(c), float(gompertz_area(valve.inlet, c)))
                    for c in anchor_cmds)
    return ValveReference(anchors=anchors,
                          inlet_floor_area=valve.inlet.offset,
                          exhaust_floor_area=valve.exhaust.offset)


def save_reference(ref: ValveReference, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(ref.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_reference(path) -> ValveReference:
    with open(path, encoding="utf-8") as fh:
        return ValveReference.from_dict(json.load(fh))


@dataclass
class IdentifyConfig:
    """Knobs for the identification pipeline; JSON-loadable."""

    cutoff_hz: float = 200.0          # pdot filter cutoff
    filter_order: int = 4
    guard_s: float = 0.02             # trimmed around command changes
    min_segment_samples: int = 50
    piston_lock_tol: float = 1e-6     # max piston wander within a log
    gtol: float = 1e-10               # optimizer gradient tolerance
    xtol: float = 1e-12               # optimizer step tolerance
    max_iter: int = 200
    deadzone_downweight: float = 10.0
    deadzone_halfwidth: float = 0.3
    volume_floor: float = 1e-12       # m^3, lower bound inside residuals
    v_nominal: float = 1e-6           # gauge volume for per-segment fits
    init_area: float = 1e-7           # optimizer initial area guess
    reg_weight: float = 1e-3          # gauge/deadzone regularization weight
    exhaust_closed_cmd: float = 1.0   # cmd above which exhaust sits at floor
    min_volumes: int = 4
    min_levels: int = 8
    low_info_min_pdot_rms: float = 10.0   # Pa/s
    low_info_min_r2: float = 0.02
    p_r: float = 101325.0
    reference: Optional[ValveReference] = None

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["reference"] = (self.reference.to_dict()
                            if self.reference is not None else None)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "IdentifyConfig":
        doc = dict(doc)
        ref = doc.pop("reference", None)
        cfg = cls(**doc)
        if ref is not None:
            cfg.reference = ValveReference.from_dict(ref)
        return cfg


def load_identify_config(path) -> IdentifyConfig:
    with open(path, encoding="utf-8") as fh:
        return IdentifyConfig.from_dict(json.load(fh))


def segment_logs(logs: Sequence[SensorLog], config: IdentifyConfig,
                 gas: Optional[GasConstants] = None) -> list:
    """Split fixed-volume logs into per-command-level segments.

    Each log must hold the piston locked; command changes delimit segments.
    The flux regressors are evaluated on the raw samples and filtered with
    the same zero-phase filter as the pressure rate (see :class:`Segment`),
    so ``guard_s`` only needs to cover the filter's cross-talk into the
    neighboring command level, not the transient itself.
    """
    g = gas if gas is not None else derive_constants()
    segments = []
    for li, log in enumerate(logs):
        if np.ptp(log.piston) > config.piston_lock_tol:
            raise DataError(f"log {li}: piston wanders by {np.ptp(log.piston):.3e} "
                            f"(> {config.piston_lock_tol}); identification "
                            "logs must hold the piston locked")
        pdot = estimate_pressure_rate(log, config.cutoff_hz, config.filter_order)
        f1_raw = np.asarray(signed_flow(log.src_p, log.p, g))
        f2_raw = np.asarray(signed_flow(log.p, np.full(len(log), config.p_r), g))
        f1_f = zero_phase_lowpass(f1_raw, log.sample_hz, config.cutoff_hz,
                                  config.filter_order)
        f2_f = zero_phase_lowpass(f2_raw, log.sample_hz, config.cutoff_hz,
                                  config.filter_order)
        sensor = float(np.median(log.piston))
        guard = int(round(config.guard_s * log.sample_hz))
        changes = np.flatnonzero(np.diff(log.cmd) != 0) + 1
        bounds = np.concatenate(([0], changes, [len(log)]))
        for a, b in zip(bounds[:-1], bounds[1:]):
            lo, hi = a + guard, b - guard
            if hi - lo < config.min_segment_samples:
                continue
            segments.append(Segment(cmd=float(log.cmd[a]),
                                    sensor_reading=sensor,
                                    t=log.t[lo:hi], p=log.p[lo:hi],
                                    pdot=pdot[lo:hi], P_c=log.src_p[lo:hi],
                                    f1=f1_f[lo:hi], f2=f2_f[lo:hi],
                                    log_index=li))
    return segments


# ---------------------------------------------------------------------------
# per-segment fit


@dataclass
class SegmentFit:
    """Result of one segment fit.

    The data determine the ratios ``phi_c = a_c/v`` and ``phi_x = (a_a+a_l)/v``;
    the reported absolute values are gauge-fixed to the caller's nominal
    volume, and the exhaust/leak split uses the exhaust floor prior when one
    is available (zero leak otherwise). Cross-segment reconciliation in
    :func:`identify` replaces the gauge with a bench-anchored one.
    """

    a_c: float
    a_a: float
    a_l: float
    v: float
    residual_rms: float
    residual_rms0: float
    r_squared: float
    low_information: bool
    converged: bool
    n_samples: int
    cmd: float
    sensor_reading: float
    sigma_log_phi_c: float = np.inf
    sigma_log_phi_x: float = np.inf
    message: str = ""

    @property
    def phi_c(self) -> float:
        return self.a_c / self.v

    @property
    def phi_x(self) -> float:
        return (self.a_a + self.a_l) / self.v


def fit_segment(seg: Segment, g: GasConstants, p_r: float,
                config: Optional[IdentifyConfig] = None,
                deadzone_center_cmd: float = 0.0) -> SegmentFit:
    """Least-squares fit of (a_c, a_a, a_l, v) to one segment's rate residual.

    Levenberg-Marquardt with squared (nonnegative) parameters and numeric
    Jacobians. A small regularization row pins the volume to the nominal
    gauge (the data only constrain area/volume ratios); segments inside the
    deadzone band additionally pull the areas toward the referenced valve
    floors, since the two flow regressors lose rank there.
    """
    cfg = config or IdentifyConfig()
    nrst = g.n * g.Rs * g.T
    if seg.f1 is not None and seg.f2 is not None:
        f1, f2 = seg.f1, seg.f2
    else:
        f1 = np.asarray(signed_flow(seg.P_c, seg.p, g))
        f2 = np.asarray(signed_flow(seg.p, np.full_like(seg.p, p_r), g))
    pdot = seg.pdot
    pdot_rms = float(np.sqrt(np.mean(pdot ** 2)))
    scale_r = max(pdot_rms, 1.0)
    v_nom = cfg.v_nominal
    w_reg = cfg.reg_weight * scale_r

    ref = cfg.reference
    in_deadzone = abs(seg.cmd - deadzone_center_cmd) <= cfg.deadzone_halfwidth
    floor_rows = (in_deadzone and ref is not None
                  and ref.inlet_floor_area and ref.exhaust_floor_area)

    def residual(x):
        a_c, a_x, v = x
        v_eff = max(v, cfg.volume_floor)
        rows = pdot - (nrst / v_eff) * (a_c * f1 - a_x * f2)
        reg = [w_reg * (v / v_nom - 1.0)]
        if floor_rows:
            reg.append(w_reg * (a_c / ref.inlet_floor_area - 1.0))
            reg.append(w_reg * (a_x / ref.exhaust_floor_area - 1.0))
        return np.concatenate([rows, reg])

    x0 = np.array([cfg.init_area, cfg.init_area, v_nom])
    rms0 = float(np.sqrt(np.mean(residual(x0)[:len(pdot)] ** 2)))
    res = fit_nonnegative(residual, x0, gtol=cfg.gtol, xtol=cfg.xtol,
                          max_iter=cfg.max_iter)
    a_c, a_x, v = res.x
    data_res = res.residual[:len(pdot)]
    rms = float(np.sqrt(np.mean(data_res ** 2)))
    r2 = 1.0 - (rms / pdot_rms) ** 2 if pdot_rms > 0 else 0.0

    low_info = (pdot_rms < cfg.low_info_min_pdot_rms) or (r2 < cfg.low_info_min_r2)

    # per-ratio uncertainty from the linear-regressor covariance: the model
    # is linear in (phi_c, phi_x), so sigma^2 * (A^T A)^-1 is exact and the
    # reconciliation can weight each log-ratio row by its information
    sigma_lc = sigma_lx = np.inf
    v_eff = max(v, cfg.volume_floor)
    phi_c_hat, phi_x_hat = a_c / v_eff, a_x / v_eff
    design = np.column_stack([nrst * f1, -nrst * f2])
    ata = design.T @ design
    if np.linalg.cond(ata) < 1e14:
        cov = float(np.var(data_res)) * np.linalg.inv(ata)
        if phi_c_hat > 0:
            sigma_lc = math.sqrt(max(cov[0, 0], 0.0)) / phi_c_hat
        if phi_x_hat > 0:
            sigma_lx = math.sqrt(max(cov[1, 1], 0.0)) / phi_x_hat

    # exhaust/leak split: only a floor reference can separate the sum
    a_l = 0.0
    if (ref is not None and ref.exhaust_floor_area
            and seg.cmd >= cfg.exhaust_closed_cmd):
        a_l = max(0.0, a_x - ref.exhaust_floor_area)
    a_a = a_x - a_l

    fit = SegmentFit(a_c=a_c, a_a=a_a, a_l=a_l, v=v, residual_rms=rms,
                     residual_rms0=rms0, r_squared=r2,
                     low_information=low_info, converged=res.converged,
                     n_samples=len(pdot), cmd=seg.cmd,
                     sensor_reading=seg.sensor_reading,
                     sigma_log_phi_c=sigma_lc, sigma_log_phi_x=sigma_lx,
                     message=res.message)
    if not res.converged:
        raise FitError(f"segment fit did not converge in {cfg.max_iter} "
                       f"iterations ({res.message})", best=fit)
    return fit


# ---------------------------------------------------------------------------
# curve and map fits


@dataclass
class AreaSample:
    """Identified port areas at one command level."""
    cmd: float
    a_c: float
    a_a: float
    residual: float = 0.0   # Pa/s RMS of the contributing segment fits

    def __post_init__(self):
        if self.a_c < 0 or self.a_a < 0:
            raise DataError("areas must be nonnegative")
        if not math.isfinite(self.residual):
            raise DataError("residual must be finite")


def _gompertz_init(cmds, areas):
    lo, hi = float(np.min(areas)), float(np.max(areas))
    span = hi - lo
    b0 = 3.0
    t10, t90 = lo + 0.1 * span, lo + 0.9 * span
    cmd10 = float(np.interp(t10, areas, cmds))
    cmd90 = float(np.interp(t90, areas, cmds))
    # exp(-c*(cmd+d)) = -ln(g)/b at span fraction g
    y10 = -math.log(-math.log(0.1) / b0)
    y90 = -math.log(-math.log(0.9) / b0)
    if cmd90 > cmd10:
        c0 = (y90 - y10) / (cmd90 - cmd10)
        d0 = -y10 / c0 - cmd10
    else:
        c0, d0 = 1.0, 0.0
    return lo, span, b0, c0, d0


def fit_area_curve(samples: Sequence[AreaSample], port: str,
                   weights: Optional[np.ndarray] = None,
                   config: Optional[IdentifyConfig] = None):
    """Fit a Gompertz curve to identified areas for one port.

    Returns (curve, rms). Exhaust curves are fitted on the mirrored command
    axis, which lands the sign pattern (c < 0) without a separate
    parameterization. Individual parameters trade off near the range edges;
    judge the fit by predicted areas, not by parameter values.
    """
    if port not in ("inlet", "exhaust"):
        raise DataError(f"port must be 'inlet' or 'exhaust', got {port!r}")
    if len(samples) < 6:
        raise DataError(f"need >= 6 area samples, got {len(samples)}")
    cfg = config or IdentifyConfig()
    cmds = np.array([s.cmd for s in samples], dtype=float)
    areas = np.array([s.a_c if port == "inlet" else s.a_a for s in samples],
                     dtype=float)
    if weights is None:
        weights = np.ones_like(cmds)
    else:
        weights = np.asarray(weights, dtype=float)
    order = np.argsort(cmds)
    cmds, areas, weights = cmds[order], areas[order], weights[order]
    mirror = port == "exhaust"
    x = -cmds[::-1] if mirror else cmds
    y = areas[::-1] if mirror else areas
    w = weights[::-1] if mirror else weights

    a_max = float(np.max(y))
    span = float(np.max(y) - np.min(y))
    if a_max <= 0 or span <= 1e-6 * a_max:
        warnings.warn(f"{port} area samples are flat; returning offset-only "
                      "curve", stacklevel=2)
        curve = GompertzCurve(offset=float(np.mean(y)), a=0.0, b=3.0,
                              c=-1.0 if mirror else 1.0, d=0.0)
        rms = float(np.sqrt(np.mean((np.mean(y) - y) ** 2)))
        return curve, rms

    off0, a0, b0, c0, d0 = _gompertz_init(x, y)

    def residual(params):
        off, amp, b, c, d = params
        pred = off + amp * np.exp(-b * np.exp(-c * (x + d)))
        return (pred - y) * w / a_max

    x0 = np.array([off0, a0, b0, max(c0, 1e-3), d0])
    free = np.array([False, False, False, False, True])  # d unconstrained
    res = fit_nonnegative(residual, x0, free_mask=free, gtol=cfg.gtol,
                          xtol=cfg.xtol, max_iter=cfg.max_iter)
    off, amp, b, c, d = res.x
    if b <= 0:
        b = 1e-12
    if mirror:
        c, d = -c, -d
    curve = GompertzCurve(offset=float(off), a=float(amp), b=float(b),
                          c=float(c), d=float(d))
    pred = gompertz_area(curve, cmds)
    rms = float(np.sqrt(np.mean((pred - areas) ** 2)))
    return curve, rms


def fit_volume_map(points: Sequence) -> tuple:
    """Ordinary least-squares line through (sensor reading, volume) points.

    Returns (VolumeMap, r_squared); warns when the relation is visibly
    nonlinear (bad segments upstream usually show up here first).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise DataError("need >= 2 (sensor, volume) points")
    s, v = pts[:, 0], pts[:, 1]
    if len(np.unique(s)) < 2:
        raise DataError("need >= 2 distinct sensor readings")
    design = np.column_stack([np.ones_like(s), s])
    coef, *_ = np.linalg.lstsq(design, v, rcond=None)
    v0, slope = float(coef[0]), float(coef[1])
    resid = v - (v0 + slope * s)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((v - v.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    if r2 < 0.99:
        warnings.warn(f"volume map R^2 = {r2:.4f} < 0.99; volume-area "
                      "identification may be contaminated", stacklevel=2)
    return VolumeMap(v0=v0, slope=slope), r2


# ---------------------------------------------------------------------------
# full pipeline


@dataclass
class IdentifyDiagnostics:
    n_segments: int = 0
    n_used: int = 0
    n_low_information: int = 0
    segment_rms: list = field(default_factory=list)
    reconciliation_rms_log: float = 0.0
    anchor_source: str = ""
    deadzone_center_cmd: float = 0.0
    leak_samples: list = field(default_factory=list)
    inlet_curve_rms: float = 0.0
    exhaust_curve_rms: float = 0.0
    volume_r2: float = 0.0
    area_samples: list = field(default_factory=list)
    volume_points: list = field(default_factory=list)
    notes: list = field(default_factory=list)


@dataclass
class IdentifiedModel:
    """Output of :func:`identify`: valve curves, volume map, leak area."""
    valve: ValveModel
    volume_map: VolumeMap
    leak_area: float
    diagnostics: IdentifyDiagnostics


def identify(logs: Sequence[SensorLog], config: Optional[IdentifyConfig] = None,
             gas: Optional[GasConstants] = None) -> IdentifiedModel:
    """Run the full identification pipeline on fixed-volume campaign logs.

    Stages: segment the logs, fit every segment, reconcile the per-segment
    ratios into shared per-level areas and per-log volumes (log-linear least
    squares with the bench reference fixing the absolute scale), pool the
    leak estimate, and fit the valve curves and volume map. Deterministic:
    segments are processed in sorted order and pooling uses medians.
    """
    cfg = config or IdentifyConfig()
    g = gas if gas is not None else derive_constants()
    segments = segment_logs(logs, cfg, g)
    if not segments:
        raise CoverageError("no usable segments found in the logs")
    segments.sort(key=lambda s: (s.sensor_reading, s.cmd, s.t[0]))

    volumes = sorted({s.sensor_reading for s in segments})
    levels = sorted({s.cmd for s in segments})
    missing = []
    have = {(s.sensor_reading, s.cmd) for s in segments}
    for vj in volumes:
        for lv in levels:
            if (vj, lv) not in have:
                missing.append((vj, lv))
    if len(volumes) < cfg.min_volumes or len(levels) < cfg.min_levels:
        raise CoverageError(
            f"campaign covers {len(volumes)} volumes x {len(levels)} command "
            f"levels; need >= {cfg.min_volumes} x {cfg.min_levels} "
            f"({len(missing)} empty cells)", missing=missing)

    diag = IdentifyDiagnostics(n_segments=len(segments))

    # deadzone band for the floor regularization: centered at zero command
    # during segment fits, re-estimated from the identified areas below
    dz_center = 0.0
    fits = []
    for seg in segments:
        try:
            fit = fit_segment(seg, g, cfg.p_r, cfg,
                              deadzone_center_cmd=dz_center)
        except FitError as exc:
            fit = exc.best
            diag.notes.append(f"segment cmd={seg.cmd:+.3f} "
                              f"s={seg.sensor_reading:.4g}: {exc}")
        fits.append(fit)
        diag.segment_rms.append(fit.residual_rms)

    used = [f for f in fits if not f.low_information and f.phi_c > 0
            and f.phi_x > 0]
    diag.n_low_information = sum(f.low_information for f in fits)
    diag.n_used = len(used)
    if len(used) < cfg.min_volumes * 2:
        raise CoverageError(f"only {len(used)} informative segments; "
                            "campaign too weak to reconcile")

    level_index = {lv: i for i, lv in enumerate(levels)}
    volume_index = {vj: j for j, vj in enumerate(volumes)}
    L, J = len(levels), len(volumes)
    rows, rhs, wts = [], [], []
    for f in used:
        li, vi = level_index[f.cmd], volume_index[f.sensor_reading]
        for col, phi, sigma in ((li, f.phi_c, f.sigma_log_phi_c),
                                (L + li, f.phi_x, f.sigma_log_phi_x)):
            row = np.zeros(2 * L + J)
            row[col] = 1.0
            row[2 * L + vi] = -1.0
            rows.append(row)
            rhs.append(math.log(phi))
            # information weight: inverse log-ratio uncertainty, bounded so
            # noiseless campaigns do not produce infinities
            wts.append(1.0 / min(max(sigma, 1e-8), 1e8))
    design = np.asarray(rows)
    rhs = np.asarray(rhs)
    wts = np.asarray(wts)
    wts = wts / np.max(wts)
    sol, *_ = np.linalg.lstsq(design * wts[:, None], rhs * wts, rcond=None)
    resid = design @ sol - rhs
    fit_rms = float(np.sqrt(np.mean(resid ** 2)))
    diag.reconciliation_rms_log = fit_rms

    # fix the scale gauge (areas and volumes shift together in log space)
    ref = cfg.reference
    shift = None
    if ref is not None and ref.anchors:
        deltas = []
        for cmd_a, area_a in ref.anchors:
            if cmd_a in level_index and area_a > 0:
                deltas.append(math.log(area_a) - sol[level_index[cmd_a]])
        if deltas:
            shift = float(np.mean(deltas))
            diag.anchor_source = "bench-reference"
        else:
            diag.notes.append("reference anchors do not match any campaign "
                              "command level; falling back to nominal volume")
    if shift is None:
        shift = math.log(cfg.v_nominal) - float(np.mean(sol[2 * L:]))
        diag.anchor_source = "nominal-volume"

    a_c_lv = np.exp(sol[:L] + shift)
    a_x_lv = np.exp(sol[L:2 * L] + shift)
    v_j = np.exp(sol[2 * L:] + shift)

    # leak: excess drain over the referenced exhaust floor where the exhaust
    # port is known closed; exhaust and leak are inseparable without it
    leak_area = 0.0
    if ref is not None and ref.exhaust_floor_area:
        samples = [a_x_lv[level_index[lv]] - ref.exhaust_floor_area
                   for lv in levels if lv >= cfg.exhaust_closed_cmd]
        if samples:
            leak_area = max(0.0, float(np.median(samples)))
            diag.leak_samples = [float(s) for s in samples]
        else:
            diag.notes.append("no exhaust-closed command levels; leak set to 0")
    else:
        diag.notes.append("no exhaust floor reference; leak folded into the "
                          "exhaust curve (set to 0)")

    rms_by_level = {}
    for f in used:
        rms_by_level.setdefault(f.cmd, []).append(f.residual_rms)
    area_samples = [AreaSample(cmd=lv, a_c=float(a_c_lv[i]),
                               a_a=float(max(a_x_lv[i] - leak_area, 0.0)),
                               residual=float(np.mean(rms_by_level.get(lv, [0.0]))))
                    for i, lv in enumerate(levels)]
    diag.area_samples = [(s.cmd, s.a_c, s.a_a) for s in area_samples]

    totals = a_c_lv + a_x_lv
    dz_center = float(levels[int(np.argmin(totals))])
    diag.deadzone_center_cmd = dz_center
    w = np.where(np.abs(np.array(levels) - dz_center) <= cfg.deadzone_halfwidth,
                 1.0 / cfg.deadzone_downweight, 1.0)

    inlet_curve, inlet_rms = fit_area_curve(area_samples, "inlet", weights=w,
                                            config=cfg)
    exhaust_curve, exhaust_rms = fit_area_curve(area_samples, "exhaust",
                                                weights=w, config=cfg)
    diag.inlet_curve_rms = inlet_rms
    diag.exhaust_curve_rms = exhaust_rms

    vmap, r2 = fit_volume_map(list(zip(volumes, v_j)))
    diag.volume_r2 = r2
    diag.volume_points = [(float(s), float(v)) for s, v in zip(volumes, v_j)]

    valve = ValveModel(name="identified", inlet=inlet_curve,
                       exhaust=exhaust_curve)
    return IdentifiedModel(valve=valve, volume_map=vmap, leak_area=leak_area,
                           diagnostics=diag)
