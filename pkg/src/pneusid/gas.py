"""Compressible flow through a thin orifice and the chamber pressure rate.

All pressures are absolute Pascals. Mass flux through a thin port depends
only on the upstream/downstream pressure pair and saturates (chokes) when
their ratio exceeds the critical ratio ``theta``; below that the flow is
subsonic. The chamber pressure rate combines net mass flow and volume-change
work under an isentropic process assumption (polytropic index ``n`` equal to
the specific heat ratio of air, 1.4).

Functions accept scalars or numpy arrays and are pure: safe to call from any
number of threads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConstantsError, PreconditionError

#: Atmospheric reference pressure (absolute Pa).
P_ATMOSPHERE = 101325.0

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class GasConstants:
    """Physical constants of the working gas plus derived flow coefficients.

    ``alpha`` (subsonic), ``beta`` (choked) and ``theta`` (critical pressure
    ratio) are derived from the raw fields; use :func:`derive_constants`
    rather than constructing directly.
    """

    M: float        # molar mass, kg/mol
    T: float        # temperature, K
    R: float        # universal gas constant, Pa*m^3/(mol*K)
    C: float        # discharge coefficient
    Z: float        # compressibility factor
    kappa: float    # specific heat ratio
    n: float        # polytropic index (isentropic: n == kappa)
    Rs: float       # specific gas constant, J/(kg*K)
    alpha: float    # subsonic flow coefficient, kg/(s*m^2*Pa)
    beta: float     # choked flow coefficient, kg/(s*m^2*Pa)
    theta: float    # critical pressure ratio


def _check_positive_finite(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value)):
        raise InvalidConstantsError(f"{name} must be a finite number, got {value!r}")
    if value <= 0 or value < _TINY:
        raise InvalidConstantsError(f"{name} must be strictly positive, got {value!r}")


def derive_constants(M=0.029, T=293.0, R=8.31, C=0.72, Z=0.99, kappa=1.4,
                     n=None) -> GasConstants:
    """Derive the full constant set from raw gas properties.

    Defaults are standard air at room temperature with the discharge and
    compressibility coefficients used throughout this package. ``n`` defaults
    to ``kappa`` (isentropic); pass 1 < n < kappa for polytropic variants.
    """
    for name, value in (("M", M), ("T", T), ("R", R), ("C", C), ("Z", Z),
                        ("kappa", kappa)):
        _check_positive_finite(name, value)
    if kappa <= 1.0:
        raise InvalidConstantsError(f"kappa must exceed 1, got {kappa}")
    if n is None:
        n = kappa
    _check_positive_finite("n", n)

    theta = ((kappa + 1.0) / 2.0) ** (kappa / (kappa - 1.0))
    alpha = C * math.sqrt(2.0 * M / (Z * R * T) * kappa / (kappa - 1.0))
    beta = C * math.sqrt(kappa * M / (Z * R * T)
                         * (2.0 / (kappa + 1.0)) ** ((kappa + 1.0) / (kappa - 1.0)))
    return GasConstants(M=M, T=T, R=R, C=C, Z=Z, kappa=kappa, n=n,
                        Rs=R / M, alpha=alpha, beta=beta, theta=theta)


class FlowRegime(enum.Enum):
    SUBSONIC = "subsonic"
    CHOKED = "choked"


def flow_regime(p_u, p_d, g: GasConstants) -> FlowRegime:
    """Regime of the oriented pair: choked iff max(p)/min(p) > theta."""
    hi, lo = (p_u, p_d) if p_u >= p_d else (p_d, p_u)
    _require_pressures(hi, lo)
    return FlowRegime.CHOKED if hi > g.theta * lo else FlowRegime.SUBSONIC


def _require_pressures(*values):
    for v in values:
        arr = np.asarray(v, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise PreconditionError("pressures must be finite")
        if np.any(arr < _TINY):
            raise PreconditionError("pressures must be strictly positive")


def flux_z(p_u, p_d, g: GasConstants):
    """Mass flux per unit area (kg/(s*m^2)) through a thin port, p_u >= p_d.

    Subsonic branch for p_u/p_d <= theta, choked branch above; the two agree
    exactly at the critical ratio. Callers with unordered pressures should use
    :func:`signed_flow`, which orients the pair.
    """
    p_u = np.asarray(p_u, dtype=float)
    p_d = np.asarray(p_d, dtype=float)
    _require_pressures(p_u, p_d)
    if np.any(p_u < p_d):
        raise PreconditionError("flux_z requires p_u >= p_d; use signed_flow "
                                "for unordered pressure pairs")
    ratio = p_d / p_u
    # radicand is analytically >= 0 for ratio <= 1; clamp float dust at ratio ~ 1
    rad = np.maximum(ratio ** (2.0 / g.kappa)
                     - ratio ** ((g.kappa + 1.0) / g.kappa), 0.0)
    subsonic = g.alpha * p_u * np.sqrt(rad)
    out = np.where(p_u > g.theta * p_d, g.beta * p_u, subsonic)
    return float(out) if out.ndim == 0 else out


def signed_flow(p_u, p_d, g: GasConstants):
    """Signed mass flux per unit area: positive from p_u toward p_d.

    Antisymmetric by construction: the magnitude is always evaluated on the
    (high, low) ordering, so signed_flow(a, b) == -signed_flow(b, a) bit for
    bit and the subsonic radicand never goes negative.
    """
    p_u = np.asarray(p_u, dtype=float)
    p_d = np.asarray(p_d, dtype=float)
    hi = np.maximum(p_u, p_d)
    lo = np.minimum(p_u, p_d)
    mag = flux_z(hi, lo, g)
    out = np.where(p_u >= p_d, mag, -np.asarray(mag))
    return float(out) if out.ndim == 0 else out


def chamber_mass_flow(a_c, a_a, a_l, P_c, p, P_r, g: GasConstants):
    """Net mass flow (kg/s) into a chamber at pressure ``p``.

    ``a_c`` connects the chamber to the source at ``P_c``, ``a_a`` (exhaust)
    and ``a_l`` (leak) both drain toward ``P_r``. With ``a_l = 0`` this is the
    plain two-port balance.
    """
    for name, a in (("a_c", a_c), ("a_a", a_a), ("a_l", a_l)):
        arr = np.asarray(a, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise PreconditionError(f"{name} must be finite")
        if np.any(arr < 0):
            raise PreconditionError(f"{name} must be nonnegative")
    out = (np.asarray(a_c, dtype=float) * signed_flow(P_c, p, g)
           - np.asarray(a_a, dtype=float) * signed_flow(p, P_r, g)
           - np.asarray(a_l, dtype=float) * signed_flow(p, P_r, g))
    return float(out) if np.ndim(out) == 0 else out


def pressure_rate(p, v, v_dot, m_dot, g: GasConstants):
    """Chamber pressure rate (Pa/s): (n/v) * (Rs*T*m_dot - p*v_dot)."""
    v_arr = np.asarray(v, dtype=float)
    if np.any(~np.isfinite(v_arr)) or np.any(v_arr <= 0):
        raise PreconditionError("volume must be strictly positive and finite "
                                "(clamp upstream)")
    out = (g.n / v_arr) * (g.Rs * g.T * np.asarray(m_dot, dtype=float)
                           - np.asarray(p, dtype=float) * np.asarray(v_dot, dtype=float))
    return float(out) if np.ndim(out) == 0 else out
