"""Structured H2 synthesis by the method of multipliers.

For a sparsity pattern with structural identity I and complement Ic, the
augmented Lagrangian

    L_g(K, Lam) = J(K) + trace(Lam^T (K o Ic)) + (g/2) ||K o Ic||_F^2

is minimized over unstructured K for fixed multipliers, then Lam is updated
by Lam + g (K o Ic) and the penalty grows geometrically until the structural
violation ||K o Ic||_F drops below eps_stop. A final hard projection onto
the pattern plus a projected-gradient polish removes the residual violation
exactly while restoring stationarity on the free entries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import descent
from .descent import descend
from .errors import (
    LineSearchFailure,
    MaxIterations,
    NotStabilizing,
    PatternNotStabilizable,
)
from .h2 import _ClosedLoop, is_stabilizing, lqr_centralized
from .plant import GainMatrix, LtiPlant, SparsityPattern


@dataclass(frozen=True)
class AugLagConfig:
    """Knobs of the multiplier loop and its first-order inner solver."""

    gamma0: float = 1.0
    alpha: float = 5.0
    eps_stop: float = 1e-6
    max_outer: int = 50
    inner_tol: float = 1e-6
    inner_max_iter: int = 3000
    polish_tol: float = 1e-6
    polish_max_iter: int = 20000
    armijo_c1: float = 1e-4
    armijo_shrink: float = 0.5
    max_backtracks: int = 80

    def __post_init__(self):
        if self.alpha <= 1.0:
            raise ValueError("penalty growth factor alpha must exceed 1")
        if self.gamma0 <= 0.0 or self.eps_stop <= 0.0:
            raise ValueError("gamma0 and eps_stop must be positive")


@dataclass(frozen=True, eq=False)
class AugLagState:
    """Snapshot of one outer iteration (gain always stabilizing)."""

    gain: GainMatrix
    multiplier: np.ndarray
    gamma: float
    iteration: int


@dataclass(frozen=True, eq=False)
class SynthesisInfo:
    gain: GainMatrix
    cost: float
    iterations: int
    converged: bool
    history: tuple[AugLagState, ...]


class _AugLagEval:
    """Value/gradient of L_g at a fixed multiplier and penalty."""

    def __init__(self, plant, k, lam, gamma, comp_identity):
        self._cl = _ClosedLoop(plant, k)
        self._lam = lam
        self._gamma = gamma
        self._viol = k * comp_identity
        self._comp = comp_identity
        j = self._cl.cost()
        if math.isfinite(j):
            self.value = (
                j
                + float(np.sum(lam * self._viol))
                + 0.5 * gamma * float(np.sum(self._viol * self._viol))
            )
        else:
            self.value = math.inf

    def gradient(self):
        return self._cl.gradient() + self._lam * self._comp + self._gamma * self._viol


class _CostEval:
    """Plain J(K) evaluation for the projected polish."""

    def __init__(self, plant, k):
        self._cl = _ClosedLoop(plant, k)
        self.value = self._cl.cost()

    def gradient(self):
        return self._cl.gradient()


def augmented_lagrangian(plant: LtiPlant, gain, multiplier, gamma: float, pattern: SparsityPattern) -> float:
    """L_g value at a stabilizing gain; raises NotStabilizing otherwise."""
    k = gain.K if isinstance(gain, GainMatrix) else np.asarray(gain, dtype=float)
    ev = _AugLagEval(plant, k, np.asarray(multiplier, dtype=float), gamma,
                     pattern.complement_identity())
    if not math.isfinite(ev.value):
        raise NotStabilizing("augmented Lagrangian undefined for a non-stabilizing gain")
    return ev.value


def minimize_inner(
    plant: LtiPlant,
    multiplier,
    gamma: float,
    pattern: SparsityPattern,
    init: GainMatrix,
    config: AugLagConfig | None = None,
) -> GainMatrix:
    """Minimize L_g over unstructured K from a stabilizing start.

    Returns K with ||grad L_g||_F <= inner_tol * (1 + ||K||_F); every accepted
    iterate is stabilizing because non-stabilizing trials evaluate to +inf and
    are rejected by the backtracking.
    """
    cfg = config or AugLagConfig()
    lam = np.asarray(multiplier, dtype=float)
    comp = pattern.complement_identity()
    k0 = init.K if isinstance(init, GainMatrix) else np.asarray(init, dtype=float)
    res = descend(
        lambda k: _AugLagEval(plant, k, lam, gamma, comp),
        k0,
        grad_tol=cfg.inner_tol,
        max_iter=cfg.inner_max_iter,
        c1=cfg.armijo_c1,
        shrink=cfg.armijo_shrink,
        max_backtracks=cfg.max_backtracks,
    )
    if res.status == descent.MAX_ITER:
        raise MaxIterations(f"inner solve hit {cfg.inner_max_iter} iterations")
    if res.status in (descent.STALLED, descent.LOST_STABILITY):
        raise LineSearchFailure("inner line search could not make progress")
    return GainMatrix(res.x, plant.partition)


def synthesize_structured(
    plant: LtiPlant,
    pattern: SparsityPattern,
    config: AugLagConfig | None = None,
    init: GainMatrix | None = None,
) -> GainMatrix:
    """Structured H2-optimal gain on the pattern (exact zeros off-pattern)."""
    return synthesize_structured_info(plant, pattern, config, init).gain


def synthesize_structured_info(
    plant: LtiPlant,
    pattern: SparsityPattern,
    config: AugLagConfig | None = None,
    init: GainMatrix | None = None,
) -> SynthesisInfo:
    """As synthesize_structured, returning convergence diagnostics too."""
    cfg = config or AugLagConfig()
    comp = pattern.complement_identity()
    ident = pattern.structural_identity()

    if init is None:
        k = lqr_centralized(plant).K
    else:
        k = np.array(init.K, dtype=float)
        if not is_stabilizing(plant, k):
            raise NotStabilizing("initial gain must be stabilizing")

    lam = np.zeros_like(k)
    gamma = cfg.gamma0
    history: list[AugLagState] = []
    best_projection = None
    tightened = False

    outer = 0
    for outer in range(cfg.max_outer):
        violation = float(np.linalg.norm(k * comp))
        projected = k * ident
        if is_stabilizing(plant, projected):
            best_projection = projected
            if violation < cfg.eps_stop:
                tightened = True
                break
        history.append(
            AugLagState(GainMatrix(k, plant.partition), lam.copy(), gamma, outer)
        )
        # Loose-to-tight inner tolerance keeps early outer iterations cheap.
        inner_tol = max(cfg.inner_tol, 1e-2 / gamma)
        res = descend(
            lambda kk: _AugLagEval(plant, kk, lam, gamma, comp),
            k,
            grad_tol=inner_tol,
            max_iter=cfg.inner_max_iter,
            c1=cfg.armijo_c1,
            shrink=cfg.armijo_shrink,
            max_backtracks=cfg.max_backtracks,
        )
        k = res.x
        lam = lam + gamma * (k * comp)
        gamma = cfg.alpha * gamma

    if best_projection is None:
        raise PatternNotStabilizable(
            f"no stabilizing projected iterate within {cfg.max_outer} outer iterations"
        )

    final = _polish(plant, best_projection, ident, cfg)
    cost = _CostEval(plant, final).value
    grad_ok = _structured_stationary(plant, final, ident)
    return SynthesisInfo(
        gain=GainMatrix(final, plant.partition),
        cost=cost,
        iterations=outer,
        converged=bool(tightened and grad_ok),
        history=tuple(history),
    )


def _polish(plant, k_projected, ident, cfg):
    """Projected-gradient descent of J on the free entries."""
    res = descend(
        lambda kk: _CostEval(plant, kk),
        k_projected,
        mask=ident,
        grad_tol=cfg.polish_tol,
        max_iter=cfg.polish_max_iter,
        c1=cfg.armijo_c1,
        shrink=cfg.armijo_shrink,
        max_backtracks=cfg.max_backtracks,
    )
    k = res.x * ident  # exact zeros off-pattern regardless of float dust
    if res.status != descent.CONVERGED and not _structured_stationary(plant, k, ident, 1e-5):
        raise MaxIterations("structured polish did not reach stationarity")
    return k


def _structured_stationary(plant, k, ident, tol: float | None = None) -> bool:
    cl = _ClosedLoop(plant, k)
    if not cl.stable:
        return False
    gnorm = float(np.linalg.norm(cl.gradient() * ident))
    bound = (tol if tol is not None else 1e-5) * (1.0 + float(np.linalg.norm(k)))
    return gnorm <= bound
