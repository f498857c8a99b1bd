"""Levenberg-Marquardt least squares with numeric Jacobians.

Small dense problems only (a handful of parameters, thousands of residuals),
which is all the identification pipeline needs. Nonnegativity is handled by
fitting in a square-root parameter space (see :func:`fit_nonnegative`), so the
solver itself is unconstrained. Damping follows the Nielsen schedule; steps
solve (J^T J + lam*I) dx = -J^T r, keeping exactly-degenerate directions
(rank-deficient problems) frozen rather than letting them drift.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import FitError


def numeric_jacobian(fun: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
                     rel_step: float = 1e-7, scheme: str = "forward",
                     f0: Optional[np.ndarray] = None) -> np.ndarray:
    """Finite-difference Jacobian of a residual vector function.

    Step per parameter is ``rel_step * max(|x_i|, 1e-12)``; ``scheme`` is
    'forward' (one extra evaluation per parameter) or 'central' (two, used by
    the self-consistency tests).
    """
    x = np.asarray(x, dtype=float)
    if f0 is None:
        f0 = np.asarray(fun(x), dtype=float)
    n = x.size
    jac = np.empty((f0.size, n), dtype=float)
    for i in range(n):
        h = rel_step * max(abs(x[i]), 1e-12)
        xp = x.copy()
        xp[i] += h
        if scheme == "forward":
            jac[:, i] = (np.asarray(fun(xp), dtype=float) - f0) / h
        elif scheme == "central":
            xm = x.copy()
            xm[i] -= h
            jac[:, i] = (np.asarray(fun(xp), dtype=float)
                         - np.asarray(fun(xm), dtype=float)) / (2.0 * h)
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
    return jac


@dataclass
class LMResult:
    x: np.ndarray
    residual: np.ndarray
    cost: float               # 0.5 * sum(r^2)
    grad_norm: float          # inf-norm of J^T r at the solution
    n_iter: int
    converged: bool
    message: str

    @property
    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.residual ** 2)))


def levenberg_marquardt(fun: Callable[[np.ndarray], np.ndarray],
                        x0: np.ndarray, *,
                        gtol: float = 1e-10, xtol: float = 1e-12,
                        max_iter: int = 200, rel_step: float = 1e-7,
                        lam0: float = 1e-3) -> LMResult:
    """Minimize 0.5*||fun(x)||^2. Deterministic for identical inputs."""
    x = np.asarray(x0, dtype=float).copy()
    if x.ndim != 1:
        raise FitError("x0 must be one-dimensional")
    r = np.asarray(fun(x), dtype=float)
    if not np.all(np.isfinite(r)):
        raise FitError("residual not finite at the initial guess")
    cost = 0.5 * float(r @ r)
    lam = lam0
    nu = 2.0
    message = "max iterations reached"
    converged = False
    n_iter = 0
    grad_norm = np.inf

    for n_iter in range(1, max_iter + 1):
        jac = numeric_jacobian(fun, x, rel_step=rel_step, f0=r)
        jtj = jac.T @ jac
        g = jac.T @ r
        grad_norm = float(np.max(np.abs(g))) if g.size else 0.0
        if grad_norm < gtol:
            message = "gradient tolerance reached"
            converged = True
            break
        scale = np.trace(jtj) / max(len(x), 1)
        if scale <= 0 or not np.isfinite(scale):
            scale = 1.0
        accepted = False
        while not accepted:
            try:
                step = np.linalg.solve(jtj + lam * scale * np.eye(len(x)), -g)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(jtj + lam * scale * np.eye(len(x)),
                                       -g, rcond=None)[0]
            x_try = x + step
            r_try = np.asarray(fun(x_try), dtype=float)
            finite = np.all(np.isfinite(r_try))
            cost_try = 0.5 * float(r_try @ r_try) if finite else np.inf
            predicted = -float(g @ step) - 0.5 * float(step @ jtj @ step)
            rho = (cost - cost_try) / predicted if predicted > 0 else -1.0
            if finite and cost_try < cost and rho > 0:
                x, r, cost = x_try, r_try, cost_try
                lam = lam * max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
                nu = 2.0
                accepted = True
                if np.linalg.norm(step) < xtol * (np.linalg.norm(x) + xtol):
                    message = "step tolerance reached"
                    converged = True
            else:
                lam *= nu
                nu *= 2.0
                if lam > 1e15:
                    message = "damping exploded (flat or ill-posed residual)"
                    converged = True  # nothing further to gain
                    accepted = True
        if converged:
            break

    return LMResult(x=x, residual=r, cost=cost, grad_norm=grad_norm,
                    n_iter=n_iter, converged=converged, message=message)


def fit_nonnegative(fun: Callable[[np.ndarray], np.ndarray],
                    x0: np.ndarray, free_mask=None, **kwargs) -> LMResult:
    """LM in sqrt-space so selected parameters stay >= 0.

    ``fun`` receives natural parameters; internally the solver works on
    q with x = q^2 for constrained entries (``free_mask`` marks entries left
    unconstrained). Returns the result in natural parameters.
    """
    x0 = np.asarray(x0, dtype=float)
    if free_mask is None:
        free_mask = np.zeros(x0.size, dtype=bool)
    else:
        free_mask = np.asarray(free_mask, dtype=bool)
    if np.any(x0[~free_mask] < 0):
        raise FitError("nonnegative parameters need nonnegative initial values")

    def to_natural(q):
        x = q.copy()
        x[~free_mask] = q[~free_mask] ** 2
        return x

    q0 = x0.copy()
    q0[~free_mask] = np.sqrt(x0[~free_mask])

    res = levenberg_marquardt(lambda q: fun(to_natural(q)), q0, **kwargs)
    x = to_natural(res.x)
    return LMResult(x=x, residual=res.residual, cost=res.cost,
                    grad_norm=res.grad_norm, n_iter=res.n_iter,
                    converged=res.converged, message=res.message)
