"""Pure-Python rollout kernel.

Mirrors ``_rollout.pyx`` operation for operation; the compiled extension is
preferred at import time when available. Both integrate the single-chamber
pressure ODE with classical RK4 and per-interval substepping: the substep is
sized so the predicted pressure change stays below a fraction of the current
pressure, bounded below by a hard floor (the stiff small-volume regime) and
above by a cap (the convergence knob).

Inputs are held with linear interpolation between samples; the volume rate
used in the work term is the exact derivative of that interpolated piston
path (the interval secant), so a sealed chamber conserves p*v^n up to pure
integrator error.

Parameter array layout (26 doubles) — keep in sync with the .pyx kernel and
``simulate._pack_params``:

    0-4   inlet Gompertz offset, a, b, c, d
    5-9   exhaust Gompertz offset, a, b, c, d
    10-11 cmd_min, cmd_max
    12    leak area (m^2)
    13-15 volume map v0, slope, volume floor
    16-21 n, Rs*T, alpha, beta, theta, kappa
    22    atmospheric pressure P_r
    23-25 dp_frac, substep floor (s), substep cap (s)
"""

from math import exp, isfinite, sqrt

BACKEND = "python"


def rollout_arrays(p0, dt, cmd, piston, src_p, params, out):
    """Integrate the chamber ODE across a uniformly sampled trajectory.

    Writes predicted pressures into ``out`` (same length as the inputs) and
    returns ``(status, fail_index, fail_tau, floor_clamps, total_substeps)``
    with status 0 on success, 1 on a non-finite/non-positive pressure at
    interval ``fail_index``, offset ``fail_tau`` seconds.
    """
    (in_off, in_a, in_b, in_c, in_d,
     ex_off, ex_a, ex_b, ex_c, ex_d,
     cmd_min, cmd_max, a_leak,
     v0, v_slope, v_floor,
     n_poly, rst, alpha, beta, theta, kappa,
     p_r, dp_frac, h_floor, h_cap) = params

    ex2 = 2.0 / kappa
    exk = (kappa + 1.0) / kappa
    n = len(cmd)
    floor_clamps = 0
    total_substeps = 0

    def zflux(hi, lo):
        # hi >= lo > 0
        if hi > theta * lo:
            return beta * hi
        ratio = lo / hi
        rad = ratio ** ex2 - ratio ** exk
        if rad < 0.0:
            rad = 0.0
        return alpha * hi * sqrt(rad)

    out[0] = p0
    p = p0
    for i in range(n - 1):
        c0 = cmd[i]
        dc = cmd[i + 1] - c0
        s0 = piston[i]
        ds = piston[i + 1] - s0
        vd_i = v_slope * ds / dt   # exact rate of the interpolated volume path
        q0 = src_p[i]
        dq = src_p[i + 1] - q0

        def rhs(tau, pp):
            nonlocal floor_clamps
            if not (pp > 0.0 and isfinite(pp)):
                return float("nan")
            w = tau / dt
            c = c0 + w * dc
            if c < cmd_min:
                c = cmd_min
            elif c > cmd_max:
                c = cmd_max
            a_c = in_off + in_a * exp(-in_b * exp(-in_c * (c + in_d)))
            a_a = ex_off + ex_a * exp(-ex_b * exp(-ex_c * (c + ex_d)))
            v = v0 + v_slope * (s0 + w * ds)
            if v < v_floor:
                v = v_floor
                vd = 0.0
                floor_clamps += 1
            else:
                vd = vd_i
            p_c = q0 + w * dq
            if not (p_c > 0.0 and isfinite(p_c)):
                return float("nan")
            f1 = zflux(p_c, pp) if p_c >= pp else -zflux(pp, p_c)
            f2 = zflux(pp, p_r) if pp >= p_r else -zflux(p_r, pp)
            mdot = a_c * f1 - (a_a + a_leak) * f2
            return (n_poly / v) * (rst * mdot - pp * vd)

        tau = 0.0
        while True:
            remaining = dt - tau
            if remaining <= 1e-12 * dt:
                break
            k1 = rhs(tau, p)
            if not isfinite(k1):
                return 1, i, tau, floor_clamps, total_substeps
            h_acc = dp_frac * p / (abs(k1) + 1e-300)
            h = h_acc
            if h < h_floor:
                h = h_floor
            if h > h_cap:
                h = h_cap
            if h > remaining:
                h = remaining
            k2 = rhs(tau + 0.5 * h, p + 0.5 * h * k1)
            k3 = rhs(tau + 0.5 * h, p + 0.5 * h * k2)
            k4 = rhs(tau + h, p + h * k3)
            if not (isfinite(k2) and isfinite(k3) and isfinite(k4)):
                return 1, i, tau, floor_clamps, total_substeps
            p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            tau += h
            total_substeps += 1
            if not (p > 0.0 and isfinite(p)):
                return 1, i, tau, floor_clamps, total_substeps
        out[i + 1] = p
    return 0, -1, 0.0, floor_clamps, total_substeps
