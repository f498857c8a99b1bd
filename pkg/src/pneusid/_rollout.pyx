# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled rollout kernel; semantics identical to ``_rollout_py``.

See ``_rollout_py`` for the parameter array layout, input interpolation and
the substep policy.
"""

from libc.math cimport exp, sqrt, pow, isfinite, fabs, NAN

BACKEND = "compiled"


cdef struct RhsCtx:
    double in_off, in_a, in_b, in_c, in_d
    double ex_off, ex_a, ex_b, ex_c, ex_d
    double cmd_min, cmd_max, a_leak
    double v0, v_slope, v_floor
    double n_poly, rst, alpha, beta, theta, kappa
    double p_r, ex2, exk
    double dt
    double c0, dc, s0, ds, vd_i, q0, dq
    long floor_clamps


cdef inline double zflux(RhsCtx *ctx, double hi, double lo) nogil:
    cdef double ratio, rad
    if hi > ctx.theta * lo:
        return ctx.beta * hi
    ratio = lo / hi
    rad = pow(ratio, ctx.ex2) - pow(ratio, ctx.exk)
    if rad < 0.0:
        rad = 0.0
    return ctx.alpha * hi * sqrt(rad)


cdef inline double rhs(RhsCtx *ctx, double tau, double pp) nogil:
    cdef double w, c, a_c, a_a, v, vd, p_c, f1, f2, mdot
    if not (pp > 0.0 and isfinite(pp)):
        return NAN
    w = tau / ctx.dt
    c = ctx.c0 + w * ctx.dc
    if c < ctx.cmd_min:
        c = ctx.cmd_min
    elif c > ctx.cmd_max:
        c = ctx.cmd_max
    a_c = ctx.in_off + ctx.in_a * exp(-ctx.in_b * exp(-ctx.in_c * (c + ctx.in_d)))
    a_a = ctx.ex_off + ctx.ex_a * exp(-ctx.ex_b * exp(-ctx.ex_c * (c + ctx.ex_d)))
    v = ctx.v0 + ctx.v_slope * (ctx.s0 + w * ctx.ds)
    if v < ctx.v_floor:
        v = ctx.v_floor
        vd = 0.0
        ctx.floor_clamps += 1
    else:
        vd = ctx.vd_i
    p_c = ctx.q0 + w * ctx.dq
    if not (p_c > 0.0 and isfinite(p_c)):
        return NAN
    if p_c >= pp:
        f1 = zflux(ctx, p_c, pp)
    else:
        f1 = -zflux(ctx, pp, p_c)
    if pp >= ctx.p_r:
        f2 = zflux(ctx, pp, ctx.p_r)
    else:
        f2 = -zflux(ctx, ctx.p_r, pp)
    mdot = a_c * f1 - (a_a + ctx.a_leak) * f2
    return (ctx.n_poly / v) * (ctx.rst * mdot - pp * vd)


def rollout_arrays(double p0, double dt,
                   double[::1] cmd, double[::1] piston, double[::1] src_p,
                   double[::1] params, double[::1] out):
    """Same contract as ``_rollout_py.rollout_arrays``."""
    cdef RhsCtx ctx
    cdef double dp_frac = params[23]
    cdef double h_floor = params[24]
    cdef double h_cap = params[25]
    cdef Py_ssize_t n = cmd.shape[0]
    cdef Py_ssize_t i
    cdef double p, tau, remaining, h, k1, k2, k3, k4
    cdef long total_substeps = 0

    ctx.in_off = params[0]; ctx.in_a = params[1]; ctx.in_b = params[2]
    ctx.in_c = params[3]; ctx.in_d = params[4]
    ctx.ex_off = params[5]; ctx.ex_a = params[6]; ctx.ex_b = params[7]
    ctx.ex_c = params[8]; ctx.ex_d = params[9]
    ctx.cmd_min = params[10]; ctx.cmd_max = params[11]
    ctx.a_leak = params[12]
    ctx.v0 = params[13]; ctx.v_slope = params[14]; ctx.v_floor = params[15]
    ctx.n_poly = params[16]; ctx.rst = params[17]
    ctx.alpha = params[18]; ctx.beta = params[19]
    ctx.theta = params[20]; ctx.kappa = params[21]
    ctx.p_r = params[22]
    ctx.ex2 = 2.0 / ctx.kappa
    ctx.exk = (ctx.kappa + 1.0) / ctx.kappa
    ctx.dt = dt
    ctx.floor_clamps = 0

    out[0] = p0
    p = p0
    with nogil:
        for i in range(n - 1):
            ctx.c0 = cmd[i]; ctx.dc = cmd[i + 1] - ctx.c0
            ctx.s0 = piston[i]; ctx.ds = piston[i + 1] - ctx.s0
            ctx.vd_i = ctx.v_slope * ctx.ds / dt
            ctx.q0 = src_p[i]; ctx.dq = src_p[i + 1] - ctx.q0
            tau = 0.0
            while True:
                remaining = dt - tau
                if remaining <= 1e-12 * dt:
                    break
                k1 = rhs(&ctx, tau, p)
                if not isfinite(k1):
                    with gil:
                        return 1, i, tau, ctx.floor_clamps, total_substeps
                h = dp_frac * p / (fabs(k1) + 1e-300)
                if h < h_floor:
                    h = h_floor
                if h > h_cap:
                    h = h_cap
                if h > remaining:
                    h = remaining
                k2 = rhs(&ctx, tau + 0.5 * h, p + 0.5 * h * k1)
                k3 = rhs(&ctx, tau + 0.5 * h, p + 0.5 * h * k2)
                k4 = rhs(&ctx, tau + h, p + h * k3)
                if not (isfinite(k2) and isfinite(k3) and isfinite(k4)):
                    with gil:
                        return 1, i, tau, ctx.floor_clamps, total_substeps
                p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                tau += h
                total_substeps += 1
                if not (p > 0.0 and isfinite(p)):
                    with gil:
                        return 1, i, tau, ctx.floor_clamps, total_substeps
            out[i + 1] = p
    return 0, -1, 0.0, ctx.floor_clamps, total_substeps
