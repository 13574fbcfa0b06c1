"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the package's own solvers: Lyapunov
equations are cross-checked by a dense Kronecker-vectorized solve, costs by
numerical quadrature of the Gramian integral, gradients by central finite
differences, and Riccati solutions by scipy's solve_continuous_are.
"""
import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import expm

from sparselink import BlockPartition, GainMatrix, LtiPlant, PriorityRow, PriorityTable


# ---------------------------------------------------------------------------
# oracles

def lyapunov_kron(a_cl, q_hat):
    """Dense Kronecker-vectorized solve of A^T P + P A + Q = 0.

    vec(A^T P) = (I kron A^T) vec(P) and vec(P A) = (A^T kron I) vec(P)
    with column-major vec, so (I kron A^T + A^T kron I) vec(P) = -vec(Q).
    """
    a_cl = np.asarray(a_cl, dtype=float)
    q_hat = np.asarray(q_hat, dtype=float)
    n = a_cl.shape[0]
    eye = np.eye(n)
    lhs = np.kron(eye, a_cl.T) + np.kron(a_cl.T, eye)
    vec_p = np.linalg.solve(lhs, -q_hat.reshape(n * n, order="F"))
    return vec_p.reshape((n, n), order="F")


def fd_gradient(fun, x, step=1e-5):
    """Central finite differences of a scalar function of a matrix."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        plus = x.copy()
        minus = x.copy()
        plus[idx] += step
        minus[idx] -= step
        grad[idx] = (fun(plus) - fun(minus)) / (2.0 * step)
    return grad


def quadrature_cost(plant, k):
    """J(K) by direct quadrature of trace(W^T e^{Acl^T t} Qhat e^{Acl t} W)."""
    k = np.asarray(k, dtype=float)
    a_cl = plant.A - plant.B @ k
    q_hat = plant.Q + k.T @ plant.R @ k
    w = plant.W

    def integrand(t):
        e = expm(a_cl * t)
        return float(np.trace(w.T @ e.T @ q_hat @ e @ w))

    value, _ = quad(integrand, 0.0, np.inf, limit=400)
    return value


def relative_close(actual, expected, tol):
    actual = np.asarray(actual, dtype=float)
    expected = np.asarray(expected, dtype=float)
    return np.linalg.norm(actual - expected) <= tol * (1.0 + np.linalg.norm(expected))


# ---------------------------------------------------------------------------
# random problem factories

def random_stable_matrix(rng, n, margin=0.5):
    m = rng.uniform(-1.0, 1.0, size=(n, n))
    shift = float(np.max(np.linalg.eigvals(m).real)) + margin
    return m - shift * np.eye(n)


def random_psd(rng, n, scale=1.0):
    m = rng.uniform(-1.0, 1.0, size=(n, n))
    return scale * (m @ m.T) + 0.1 * np.eye(n)


def single_node_plant(rng, n, m, margin=0.5):
    """Generic dense plant with a one-node partition (m x n gain)."""
    a = random_stable_matrix(rng, n, margin)
    b = rng.uniform(-1.0, 1.0, size=(n, m))
    w = rng.uniform(-1.0, 1.0, size=(n, n))
    part = BlockPartition((m,), (n,))
    return LtiPlant(a, b, w, np.eye(n), np.eye(m), part)


def perturbed_gain(rng, plant, base, scale=0.2):
    """Stabilizing gain near base (base + bounded random perturbation)."""
    from sparselink import is_stabilizing

    k0 = base.K if isinstance(base, GainMatrix) else np.asarray(base, dtype=float)
    for attempt in range(40):
        k = k0 + scale * rng.standard_normal(k0.shape)
        if is_stabilizing(plant, k):
            return GainMatrix(k, plant.partition)
        scale *= 0.5
    raise AssertionError("could not build a stabilizing perturbed gain")


# ---------------------------------------------------------------------------
# golden fixtures: the two worked rerouting examples

EX1_K = np.array(
    [
        [3.0, 1.0, 0.0, 0.0, 7.0, 9.0, 3.0, 2.0],
        [0.0, 0.0, 1.0, 5.0, 0.0, 0.0, 1.0, 2.0],
        [0.0, 0.0, 5.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        [2.0, 4.0, 6.0, 8.0, 0.0, 0.0, 5.0, 3.0],
    ]
)
EX1_PRIORITIES = {
    (0, 0): 1,
    (3, 0): 2,
    (1, 1): 3,
    (2, 1): 4,
    (3, 1): 5,
    (0, 2): 6,
    (0, 3): 7,
    (1, 3): 8,
    (3, 3): 9,
}
EX1_ROWS = (
    PriorityRow(0, 0, 1, 2, (3.0, 1.0)),
    PriorityRow(3, 0, 2, 2, (2.0, 4.0)),
    PriorityRow(1, 1, 3, 2, (1.0, 5.0)),
    PriorityRow(2, 1, 4, 2, (5.0, 1.0)),
    PriorityRow(3, 1, 5, 2, (6.0, 8.0)),
    PriorityRow(0, 2, 6, 2, (7.0, 9.0)),
    PriorityRow(0, 3, 7, 2, (3.0, 2.0)),
    PriorityRow(1, 3, 8, 2, (1.0, 2.0)),
    PriorityRow(3, 3, 9, 2, (5.0, 3.0)),
)

EX2_K = np.array(
    [
        [2.0, 1.0, 3.0, 7.0, 5.0, 8.0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 3.0, 1.0, 3.0, 6.0, 0, 0, 0, 0],
        [1.0, 5.0, 0, 0, 0, 0, 0, 0, 0, 0, 7.0, 2.0, 6.0, 4.0],
        [3.0, 5.0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    ],
    dtype=float,
)
EX2_PRIORITIES = {
    (0, 0): 1,
    (2, 0): 2,
    (3, 0): 3,
    (0, 1): 4,
    (1, 2): 5,
    (2, 3): 6,
}
EX2_ROWS = (
    PriorityRow(0, 0, 1, 2, (2.0, 1.0, 0.0, 0.0)),
    PriorityRow(2, 0, 2, 2, (1.0, 5.0, 0.0, 0.0)),
    PriorityRow(3, 0, 3, 2, (3.0, 5.0, 0.0, 0.0)),
    PriorityRow(0, 1, 4, 4, (3.0, 7.0, 5.0, 8.0)),
    PriorityRow(1, 2, 5, 4, (3.0, 1.0, 3.0, 6.0)),
    PriorityRow(2, 3, 6, 4, (7.0, 2.0, 6.0, 4.0)),
)


@pytest.fixture
def ex1_partition():
    return BlockPartition((1, 1, 1, 1), (2, 2, 2, 2))


@pytest.fixture
def ex1_gain(ex1_partition):
    return GainMatrix(EX1_K, ex1_partition)


@pytest.fixture
def ex1_table():
    return PriorityTable(EX1_ROWS)


@pytest.fixture
def ex2_partition():
    return BlockPartition((1, 1, 1, 1), (2, 4, 4, 4))


@pytest.fixture
def ex2_gain(ex2_partition):
    return GainMatrix(EX2_K, ex2_partition)


@pytest.fixture
def ex2_table():
    return PriorityTable(EX2_ROWS)


def make_table(sizes, values=None):
    """Uniform helper: one diagonal block per row, ascending priority.

    sizes[k] is the unit count of the row with priority k+1; the partition
    is scalar control rows against state columns of the given sizes.
    """
    r2 = max(sizes)
    rows = []
    for idx, s in enumerate(sizes):
        if values is None:
            vals = tuple(float(idx + 1 + d) for d in range(s))
        else:
            vals = tuple(float(v) for v in values[idx])
        rows.append(PriorityRow(idx, idx, idx + 1, s, vals + (0.0,) * (r2 - s)))
    return PriorityTable(tuple(rows))
