import itertools

import numpy as np
import pytest

from energy_pyramid import EnergyInstance


def brute_energy(D, V, edges, labels):
    """Plain-loop energy of a labeling; shares no code with the package."""
    total = 0.0
    for i, a in enumerate(labels):
        total += D[i][a]
    for i, j, w in edges:
        total += w * V[labels[i]][labels[j]]
    return total


def brute_fractional(D, V, edges, U):
    """Plain-loop trace-form energy of an assignment matrix."""
    n, l = len(U), len(U[0])
    total = 0.0
    for i in range(n):
        for a in range(l):
            total += D[i][a] * U[i][a]
    for i, j, w in edges:
        s = 0.0
        for a in range(l):
            for b in range(l):
                s += U[i][a] * V[a][b] * U[j][b]
        total += w * s
    return total


def brute_min(D, V, edges, n, l):
    best, arg = np.inf, None
    for L in itertools.product(range(l), repeat=n):
        v = brute_energy(D, V, edges, L)
        if v < best:
            best, arg = v, L
    return np.array(arg), best


def rel_close(a, b, rtol):
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300)


def random_instance(rng, n, l, p_edge=0.4, loops=False, strength=1.0):
    """Random graph energy with symmetric V (diagonal included)."""
    D = rng.standard_normal((n, l))
    A = rng.uniform(0, 1, (l, l))
    V = A + A.T
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p_edge:
                edges.append((i, j, strength * rng.uniform(-1, 1)))
        if loops and rng.random() < 0.3:
            edges.append((i, i, rng.uniform(-1, 1)))
    return EnergyInstance.from_edges(D, V, edges)


def edge_list(e):
    return list(zip(e.rows.tolist(), e.cols.tolist(), e.weights.tolist()))


def random_stochastic(rng, rows, cols, density=0.5):
    """Random row-stochastic matrix with at least one nonzero per row."""
    M = rng.uniform(0, 1, (rows, cols)) * (rng.random((rows, cols)) < density)
    M[np.arange(rows), rng.integers(0, cols, rows)] += rng.uniform(0.1, 1, rows)
    return M / M.sum(axis=1, keepdims=True)


def potts(l):
    return 1.0 - np.eye(l)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
