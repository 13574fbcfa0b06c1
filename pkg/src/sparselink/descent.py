"""Monotone first-order descent with Armijo backtracking.

Shared by the augmented-Lagrangian inner solver, the sparse-synthesis
gain update, and the structured polish. Objectives may return +inf for
infeasible (non-stabilizing) trial points; such trials are rejected by the
line search and no arithmetic is ever performed on the sentinel. Step sizes
are seeded by a Barzilai-Borwein estimate and safeguarded by backtracking,
so accepted values decrease strictly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotStabilizing

CONVERGED = "converged"
MAX_ITER = "max_iter"
STALLED = "stalled"
LOST_STABILITY = "lost_stability"

_STEP_MIN = 1e-18
_STEP_MAX = 1e6


@dataclass
class DescentResult:
    x: np.ndarray
    value: float
    gradient: np.ndarray
    iterations: int
    status: str


def descend(
    make_eval,
    x0: np.ndarray,
    *,
    grad_tol: float,
    max_iter: int,
    mask: np.ndarray | None = None,
    c1: float = 1e-4,
    shrink: float = 0.5,
    max_backtracks: int = 60,
) -> DescentResult:
    """Minimize a smooth objective from a feasible start.

    make_eval(x) must return an object with a float attribute `value`
    (+inf allowed for infeasible points) and a `gradient()` method that is
    only called at finite-value points. With a mask, descent is restricted
    to the masked entries and convergence is measured on the masked
    gradient: ||grad * mask||_F <= grad_tol * (1 + ||x||_F).
    """
    x = np.array(x0, dtype=float)
    ev = make_eval(x)
    f = ev.value
    if not math.isfinite(f):
        raise NotStabilizing("descent requires a feasible starting point")
    g = ev.gradient()
    step = 1.0 / (1.0 + float(np.linalg.norm(g)))

    for it in range(max_iter):
        d = -g if mask is None else -(g * mask)
        slope = -float(np.sum(d * d))
        gnorm = math.sqrt(-slope)
        if gnorm <= grad_tol * (1.0 + float(np.linalg.norm(x))):
            return DescentResult(x, f, g, it, CONVERGED)

        tau = min(max(step, _STEP_MIN), _STEP_MAX)
        accepted = None
        saw_finite_reject = False
        for _ in range(max_backtracks):
            x_trial = x + tau * d
            ev_trial = make_eval(x_trial)
            f_trial = ev_trial.value
            if math.isfinite(f_trial) and f_trial <= f + c1 * tau * slope:
                accepted = (x_trial, ev_trial, f_trial, tau)
                break
            if math.isfinite(f_trial):
                saw_finite_reject = True
            tau *= shrink
            if tau < _STEP_MIN:
                break
        if accepted is None:
            status = STALLED if saw_finite_reject else LOST_STABILITY
            return DescentResult(x, f, g, it, status)

        x_new, ev_new, f_new, tau = accepted
        g_new = ev_new.gradient()
        # Barzilai-Borwein estimate for the next trial step, on the masked
        # subspace when a mask is active.
        s = x_new - x
        y = (g_new - g) if mask is None else (g_new - g) * mask
        sy = float(np.sum(s * y))
        ss = float(np.sum(s * s))
        step = ss / sy if sy > 0.0 else tau * 2.0
        x, f, g = x_new, f_new, g_new

    return DescentResult(x, f, g, max_iter, MAX_ITER)
