"""H2 cost machinery for state feedback u = -K x on xdot = Ax + Bu + Wd.

The closed loop is A_cl = A - B K. The cost of a stabilizing gain is

    J(K) = trace(W^T P W),   A_cl^T P + P A_cl + Q + K^T R K = 0,

and its gradient is grad J(K) = 2 (R K - B^T P) L with L the closed-loop
controllability Gramian, A_cl L + L A_cl^T + W W^T = 0. Both Gramians share
one real Schur factorization of A_cl (Bartels-Stewart via LAPACK trsyl).
Non-stabilizing gains map to J = +inf; optimizers must treat that value as
a line-search rejection and never do arithmetic with it.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import get_lapack_funcs, schur

from .errors import (
    DimensionMismatch,
    NotHurwitz,
    NotStabilizing,
    RiccatiFailure,
    SingularSolve,
)
from .plant import GainMatrix, LtiPlant, SimulationTrace, STABILITY_TOL


def _schur_eigenvalues(t: np.ndarray) -> np.ndarray:
    """Eigenvalues read off the 1x1/2x2 diagonal blocks of a real Schur form."""
    n = t.shape[0]
    out = np.empty(n, dtype=complex)
    i = 0
    while i < n:
        if i + 1 < n and t[i + 1, i] != 0.0:
            out[i : i + 2] = np.linalg.eigvals(t[i : i + 2, i : i + 2])
            i += 2
        else:
            out[i] = t[i, i]
            i += 1
    return out


class _ClosedLoop:
    """One Schur factorization of A - B K serving stability test, both
    Gramians, cost, and gradient. Internal work happens on raw arrays."""

    def __init__(self, plant: LtiPlant, k: np.ndarray, stability_tol: float = STABILITY_TOL):
        self.plant = plant
        self.k = k
        self.a_cl = plant.A - plant.B @ k
        self._t, self._z = schur(self.a_cl, output="real")
        self.eigenvalues = _schur_eigenvalues(self._t)
        self.stable = bool(np.max(self.eigenvalues.real) < -stability_tol)
        self._trsyl = get_lapack_funcs(("trsyl",), (self._t,))[0]
        self._p = None
        self._l = None

    def _solve(self, rhs: np.ndarray, transposed: bool) -> np.ndarray:
        """Solve A_cl^T X + X A_cl + rhs = 0 (transposed=True) or
        A_cl X + X A_cl^T + rhs = 0 (False) reusing the factorization."""
        c = self._z.T @ (-rhs) @ self._z
        trana, tranb = ("T", "N") if transposed else ("N", "T")
        x, scale, info = self._trsyl(self._t, self._t, c, trana=trana, tranb=tranb, isgn=1)
        if info < 0 or scale == 0.0 or not np.all(np.isfinite(x)):
            raise SingularSolve(f"trsyl failed (info={info}, scale={scale})")
        if info == 1:
            raise SingularSolve("Lyapunov operator numerically singular")
        sol = self._z @ (x / scale) @ self._z.T
        return 0.5 * (sol + sol.T)

    def obs_gramian(self) -> np.ndarray:
        if self._p is None:
            q_hat = self.plant.Q + self.k.T @ self.plant.R @ self.k
            self._p = self._solve(q_hat, transposed=True)
        return self._p

    def ctrl_gramian(self) -> np.ndarray:
        if self._l is None:
            w = self.plant.W
            self._l = self._solve(w @ w.T, transposed=False)
        return self._l

    def cost(self) -> float:
        if not self.stable:
            return math.inf
        p = self.obs_gramian()
        w = self.plant.W
        return float(np.trace(w.T @ p @ w))

    def gradient(self) -> np.ndarray:
        if not self.stable:
            raise NotStabilizing("gradient undefined for a non-stabilizing gain")
        p = self.obs_gramian()
        l = self.ctrl_gramian()
        return 2.0 * (self.plant.R @ self.k - self.plant.B.T @ p) @ l

    def cost_and_gradient(self) -> tuple[float, np.ndarray]:
        return self.cost(), self.gradient()


def _gain_array(plant: LtiPlant, gain) -> np.ndarray:
    k = gain.K if isinstance(gain, GainMatrix) else np.asarray(gain, dtype=float)
    if k.shape != (plant.m, plant.n):
        raise DimensionMismatch(
            f"gain shape {k.shape} does not match plant ({plant.m},{plant.n})"
        )
    return k


def solve_lyapunov(a_cl: np.ndarray, q_hat: np.ndarray, stability_tol: float = STABILITY_TOL) -> np.ndarray:
    """Solve A_cl^T P + P A_cl + Q_hat = 0 for Hurwitz A_cl.

    Raises NotHurwitz when max Re eig(A_cl) >= -stability_tol and
    SingularSolve when the factored solve degenerates numerically.
    """
    a_cl = np.asarray(a_cl, dtype=float)
    q_hat = np.asarray(q_hat, dtype=float)
    if a_cl.ndim != 2 or a_cl.shape[0] != a_cl.shape[1]:
        raise DimensionMismatch("A_cl must be square")
    if q_hat.shape != a_cl.shape:
        raise DimensionMismatch("Q_hat shape must match A_cl")
    t, z = schur(a_cl, output="real")
    eigs = _schur_eigenvalues(t)
    if np.max(eigs.real) >= -stability_tol:
        raise NotHurwitz(f"max Re eig = {np.max(eigs.real):.3e} >= -{stability_tol}")
    trsyl = get_lapack_funcs(("trsyl",), (t,))[0]
    c = z.T @ (-q_hat) @ z
    x, scale, info = trsyl(t, t, c, trana="T", tranb="N", isgn=1)
    if info < 0 or scale == 0.0 or not np.all(np.isfinite(x)):
        raise SingularSolve(f"trsyl failed (info={info}, scale={scale})")
    if info == 1:
        raise SingularSolve("Lyapunov operator numerically singular")
    p = z @ (x / scale) @ z.T
    return 0.5 * (p + p.T)


def is_stabilizing(plant: LtiPlant, gain, stability_tol: float = STABILITY_TOL) -> bool:
    """True iff max Re eig(A - B K) < -stability_tol (strict margin)."""
    k = _gain_array(plant, gain)
    eigs = np.linalg.eigvals(plant.A - plant.B @ k)
    return bool(np.max(eigs.real) < -stability_tol)


def closed_loop_cost(plant: LtiPlant, gain) -> float:
    """H2 cost trace(W^T P W); +inf when the gain is not stabilizing."""
    return _ClosedLoop(plant, _gain_array(plant, gain)).cost()


def cost_gradient(plant: LtiPlant, gain) -> np.ndarray:
    """Gradient 2 (R K - B^T P) L of the H2 cost at a stabilizing gain."""
    return _ClosedLoop(plant, _gain_array(plant, gain)).gradient()


def _stabilizing_seed(plant: LtiPlant) -> np.ndarray:
    """Initial stabilizing gain for the Riccati iteration.

    Shifted-Lyapunov construction: with b > max Re eig(A) pick Z solving
    (A + bI) Z + Z (A + bI)^T = 2 B B^T, then K0 = B^T Z^{-1} gives
    A_cl Z + Z A_cl^T = -2 b Z < 0. Regularized retries cover plants that
    are stabilizable but not controllable.
    """
    a, b_mat = plant.A, plant.B
    n = plant.n
    if np.max(np.linalg.eigvals(a).real) < -STABILITY_TOL:
        return np.zeros((plant.m, n))
    shift = np.linalg.norm(a, "fro") + 1.0
    shifted = -(a + shift * np.eye(n)).T  # Hurwitz by construction
    bbt = 2.0 * (b_mat @ b_mat.T)
    for reg in (0.0, 1e-10, 1e-6, 1e-2):
        try:
            z = solve_lyapunov(shifted, bbt + reg * np.eye(n))
            k0 = np.linalg.solve(z, b_mat).T
        except (SingularSolve, np.linalg.LinAlgError):
            continue
        if is_stabilizing(plant, k0):
            return k0
    raise RiccatiFailure("could not construct an initial stabilizing gain")


def lqr_centralized(plant: LtiPlant, tol: float = 1e-10, max_iter: int = 100) -> GainMatrix:
    """Centralized LQR gain K_c = R^{-1} B^T P* via the Newton iteration
    that re-solves one Lyapunov equation per step (quadratically convergent
    from any stabilizing start)."""
    k = _stabilizing_seed(plant)
    p_prev = None
    for _ in range(max_iter):
        p = solve_lyapunov(plant.A - plant.B @ k, plant.Q + k.T @ plant.R @ k)
        k = np.linalg.solve(plant.R, plant.B.T @ p)
        if p_prev is not None and np.linalg.norm(p - p_prev, "fro") <= tol:
            return GainMatrix(k, plant.partition)
        p_prev = p
    raise RiccatiFailure(f"Riccati iteration did not converge in {max_iter} steps")


def simulate_closed_loop(
    plant: LtiPlant,
    gain,
    x0,
    disturbance=None,
    horizon: float = 1.0,
    dt: float = 1e-3,
) -> SimulationTrace:
    """Fixed-step RK4 integration of xdot = (A - B K) x + W d(t).

    The recorded input is u = -K x, the signal the plant actually receives,
    so xdot = A x + B u + W d holds identically on the trace. disturbance is
    a callable t -> R^q, or None for d = 0.
    """
    if dt <= 0.0 or horizon <= 0.0:
        raise DimensionMismatch("horizon and dt must be positive")
    k = _gain_array(plant, gain)
    x0 = np.asarray(x0, dtype=float).reshape(plant.n)
    a_cl = plant.A - plant.B @ k
    w = plant.W
    if disturbance is None:
        d_fun = lambda t: np.zeros(plant.q_dim)
    else:
        d_fun = lambda t: np.asarray(disturbance(t), dtype=float).reshape(plant.q_dim)

    def rhs(t, x):
        return a_cl @ x + w @ d_fun(t)

    n_steps = int(round(horizon / dt))
    times = np.arange(n_steps + 1) * dt
    states = np.empty((n_steps + 1, plant.n))
    states[0] = x0
    x = x0.copy()
    for step in range(n_steps):
        t = times[step]
        k1 = rhs(t, x)
        k2 = rhs(t + 0.5 * dt, x + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, x + 0.5 * dt * k2)
        k4 = rhs(t + dt, x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[step + 1] = x

    inputs = -(states @ k.T)
    dists = np.vstack([d_fun(t) for t in times])
    c, d_map = plant.output_maps()
    outputs = states @ c.T + inputs @ d_map.T
    return SimulationTrace(times, states, inputs, outputs, dists, x0)
