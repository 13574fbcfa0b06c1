"""Shared descent engine: Armijo acceptance, masking, infeasible rejection."""
import math

import numpy as np
import pytest

from sparselink import NotStabilizing
from sparselink.descent import (
    CONVERGED,
    LOST_STABILITY,
    MAX_ITER,
    STALLED,
    descend,
)


class _Quadratic:
    """0.5 * ||x - target||^2 with an optional feasible ball."""

    def __init__(self, x, target, radius=None):
        self._diff = x - target
        if radius is not None and np.linalg.norm(x) > radius:
            self.value = math.inf
        else:
            self.value = 0.5 * float(np.sum(self._diff * self._diff))

    def gradient(self):
        return self._diff


def test_converges_on_quadratic():
    target = np.array([[1.0, -2.0], [3.0, 0.5]])
    res = descend(lambda x: _Quadratic(x, target), np.zeros((2, 2)),
                  grad_tol=1e-10, max_iter=200)
    assert res.status == CONVERGED
    assert np.linalg.norm(res.x - target) <= 1e-8
    assert res.value <= 1e-16


def test_mask_restricts_updates():
    target = np.array([[1.0, -2.0], [3.0, 0.5]])
    mask = np.array([[1.0, 0.0], [0.0, 1.0]])
    x0 = np.full((2, 2), 7.0)
    res = descend(lambda x: _Quadratic(x, target), x0,
                  grad_tol=1e-10, max_iter=500, mask=mask)
    assert res.status == CONVERGED
    # masked-out entries never move
    assert res.x[0, 1] == 7.0 and res.x[1, 0] == 7.0
    assert abs(res.x[0, 0] - 1.0) <= 1e-8
    assert abs(res.x[1, 1] - 0.5) <= 1e-8


def test_infeasible_trials_rejected():
    # optimum inside the feasible ball but far from the start; every accepted
    # iterate must stay feasible because +inf trials fail the Armijo test
    target = np.array([[2.0, 0.0]])
    radius = 2.5
    values = []

    def make(x):
        ev = _Quadratic(x, target, radius=radius)
        if math.isfinite(ev.value):
            values.append(np.linalg.norm(x))
        return ev

    res = descend(make, np.array([[-2.0, 0.0]]), grad_tol=1e-8, max_iter=300)
    assert res.status == CONVERGED
    assert np.linalg.norm(res.x - target) <= 1e-6
    assert max(values) <= radius + 1e-12


def test_infeasible_start_raises():
    with pytest.raises(NotStabilizing):
        descend(lambda x: _Quadratic(x, np.zeros((1, 1)), radius=0.5),
                np.array([[2.0]]), grad_tol=1e-8, max_iter=10)


def test_max_iter_status():
    target = np.ones((2, 2))
    res = descend(lambda x: _Quadratic(x, target), np.zeros((2, 2)),
                  grad_tol=1e-30, max_iter=2)
    assert res.status == MAX_ITER
    assert res.iterations == 2


def test_monotone_accepted_values():
    # gradient() is only invoked on accepted iterates, so the values seen
    # there must decrease strictly (Armijo contract)
    target = np.array([[4.0, -1.0, 2.0]])
    accepted = []

    class _Tracking(_Quadratic):
        def __init__(self, x):
            super().__init__(x, target)

        def gradient(self):
            accepted.append(self.value)
            return super().gradient()

    res = descend(lambda x: _Tracking(x), np.zeros((1, 3)),
                  grad_tol=1e-12, max_iter=500)
    assert res.status == CONVERGED
    assert len(accepted) >= 2
    assert all(b < a for a, b in zip(accepted, accepted[1:]))


def test_lost_stability_status():
    # start on the feasibility boundary with the descent direction pointing
    # out, so every trial evaluates to +inf
    class _Boundary:
        def __init__(self, x):
            self._x = x
            self.value = math.inf if x[0, 0] > 0.0 else 0.5 * (x[0, 0] - 100.0) ** 2

        def gradient(self):
            return self._x - 100.0

    res = descend(lambda x: _Boundary(x), np.array([[0.0]]), grad_tol=1e-14, max_iter=50)
    assert res.status == LOST_STABILITY
    assert res.x[0, 0] == 0.0


def test_stalled_status():
    # finite everywhere but discontinuously higher at every point other than
    # the start, so no Armijo trial can ever be accepted
    start = np.array([[1.0]])

    class _Cliff:
        def __init__(self, x):
            self.value = 0.0 if np.array_equal(x, start) else 1.0

        def gradient(self):
            return np.array([[1.0]])

    res = descend(lambda x: _Cliff(x), start, grad_tol=1e-14, max_iter=50)
    assert res.status == STALLED
