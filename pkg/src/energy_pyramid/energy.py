"""Pairwise discrete energies and their evaluation.

An energy over ``n`` variables taking ``l`` labels is

    E(L) = sum_i D[i, L_i] + sum_{(i, j, w)} w * V[L_i, L_j]

or, with ``U`` the n-by-l assignment matrix (binary or fractional),

    E(U) = Tr(D U^T) + sum_{(i, j, w)} w * (U V U^T)[i, j].

Edges are stored once with ``i <= j``. An edge with ``i == j`` is a
self-loop; fine-scale inputs never have them, but variable coarsening
produces them on the diagonal of ``P^T W P`` and keeping them is what makes
coarse evaluation of fractional assignments exact.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .exceptions import InvalidArgumentError

__all__ = [
    "EnergyInstance",
    "evaluate_discrete",
    "evaluate_fractional",
    "to_binary_matrix",
]


def _readonly(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EnergyInstance:
    """Immutable (n, l, D, W, V) energy.

    Parameters
    ----------
    unary : array-like, shape (n, l)
        ``unary[i, a]`` is the cost of giving variable ``i`` label ``a``.
    label_costs : array-like, shape (l, l)
        Symmetric label-compatibility matrix ``V``.
    rows, cols : array-like of int, shape (m,)
        Edge endpoints with ``rows[k] <= cols[k]``.
    weights : array-like of float, shape (m,)
        Edge weights, any sign.

    Edges are sorted into lexicographic ``(row, col)`` order on construction.
    """

    unary: np.ndarray
    label_costs: np.ndarray
    rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    cols: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        D = np.array(self.unary, dtype=np.float64, copy=True)
        V = np.array(self.label_costs, dtype=np.float64, copy=True)
        if D.ndim != 2 or D.shape[0] < 1 or D.shape[1] < 1:
            raise InvalidArgumentError(f"unary must be a non-empty 2-d array, got shape {D.shape}")
        n, l = D.shape
        if V.shape != (l, l):
            raise InvalidArgumentError(f"label_costs must have shape ({l}, {l}), got {V.shape}")
        if not np.all(np.isfinite(D)) or not np.all(np.isfinite(V)):
            raise InvalidArgumentError("unary and label_costs must be finite")
        if not np.array_equal(V, V.T):
            raise InvalidArgumentError("label_costs must be symmetric")

        r = np.asarray(self.rows, dtype=np.int64).ravel()
        c = np.asarray(self.cols, dtype=np.int64).ravel()
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if not (r.shape == c.shape == w.shape):
            raise InvalidArgumentError("rows, cols and weights must have equal length")
        if r.size:
            if r.min() < 0 or c.max() >= n:
                raise InvalidArgumentError(f"edge endpoint out of range [0, {n})")
            if np.any(r > c):
                raise InvalidArgumentError("edges must satisfy i <= j")
            if not np.all(np.isfinite(w)):
                raise InvalidArgumentError("edge weights must be finite")
        order = np.lexsort((c, r))
        r, c, w = r[order], c[order], w[order]
        if r.size > 1:
            dup = (r[1:] == r[:-1]) & (c[1:] == c[:-1])
            if np.any(dup):
                k = int(np.argmax(dup))
                raise InvalidArgumentError(f"duplicate edge ({r[k]}, {c[k]})")

        object.__setattr__(self, "unary", _readonly(D))
        object.__setattr__(self, "label_costs", _readonly(V))
        object.__setattr__(self, "rows", _readonly(r))
        object.__setattr__(self, "cols", _readonly(c))
        object.__setattr__(self, "weights", _readonly(w))

    @classmethod
    def from_edges(cls, unary, label_costs, edges=()):
        """Build an instance from ``(i, j, w)`` triples in either orientation."""
        edges = list(edges)
        if edges:
            arr = np.asarray(edges, dtype=np.float64)
            if arr.ndim != 2 or arr.shape[1] != 3:
                raise InvalidArgumentError("edges must be (i, j, w) triples")
            i = arr[:, 0].astype(np.int64)
            j = arr[:, 1].astype(np.int64)
            if not (np.array_equal(i, arr[:, 0]) and np.array_equal(j, arr[:, 1])):
                raise InvalidArgumentError("edge endpoints must be integers")
            w = arr[:, 2]
        else:
            i = j = np.zeros(0, dtype=np.int64)
            w = np.zeros(0)
        lo, hi = np.minimum(i, j), np.maximum(i, j)
        return cls(unary, label_costs, lo, hi, w)

    @property
    def n(self):
        return self.unary.shape[0]

    @property
    def l(self):  # noqa: E743
        return self.unary.shape[1]

    @property
    def n_edges(self):
        return self.rows.size

    @property
    def has_self_loops(self):
        return bool(np.any(self.rows == self.cols))

    def __eq__(self, other):
        if not isinstance(other, EnergyInstance):
            return NotImplemented
        return (
            np.array_equal(self.unary, other.unary)
            and np.array_equal(self.label_costs, other.label_costs)
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = object.__hash__

    def __repr__(self):
        return f"EnergyInstance(n={self.n}, l={self.l}, edges={self.n_edges})"

    def pairwise_matrix(self):
        """Symmetric sparse ``A`` with pair term ``0.5 * sum_ij A_ij u_i V u_j^T``.

        Off-diagonal edges appear in both triangles; self-loops appear on
        the diagonal with twice their weight.
        """
        off = self.rows != self.cols
        r = np.concatenate([self.rows[off], self.cols[off], self.rows[~off]])
        c = np.concatenate([self.cols[off], self.rows[off], self.cols[~off]])
        w = np.concatenate([self.weights[off], self.weights[off], 2.0 * self.weights[~off]])
        return sp.csr_matrix((w, (r, c)), shape=(self.n, self.n))

    @cached_property
    def adjacency(self):
        """``(indptr, indices, weights, self_weights)`` for neighbor sweeps.

        The CSR arrays hold off-diagonal edges in both directions;
        ``self_weights[i]`` is the weight of the self-loop at ``i`` (or 0).
        """
        off = self.rows != self.cols
        r = np.concatenate([self.rows[off], self.cols[off]])
        c = np.concatenate([self.cols[off], self.rows[off]])
        w = np.concatenate([self.weights[off], self.weights[off]])
        A = sp.csr_matrix((w, (r, c)), shape=(self.n, self.n))
        A.sort_indices()
        loops = np.zeros(self.n)
        np.add.at(loops, self.rows[~off], self.weights[~off])
        return (
            A.indptr.astype(np.int64),
            A.indices.astype(np.int64),
            A.data.astype(np.float64),
            loops,
        )


def _check_labels(e, labels):
    L = np.asarray(labels)
    if L.ndim != 1 or L.shape[0] != e.n:
        raise InvalidArgumentError(f"labeling must have length {e.n}, got shape {L.shape}")
    if L.size and not np.issubdtype(L.dtype, np.integer):
        if not np.all(np.equal(np.mod(L, 1), 0)):
            raise InvalidArgumentError("labels must be integers")
    L = L.astype(np.int64)
    if L.size and (L.min() < 0 or L.max() >= e.l):
        raise InvalidArgumentError(f"labels must lie in [0, {e.l})")
    return L


def evaluate_discrete(e, labels):
    """Energy of a discrete labeling (edge-list form)."""
    L = _check_labels(e, labels)
    unary = e.unary[np.arange(e.n), L].sum()
    pair = np.dot(e.weights, e.label_costs[L[e.rows], L[e.cols]])
    return float(unary + pair)


def evaluate_fractional(e, U):
    """Energy of an assignment matrix ``U`` (trace form).

    ``U`` may be fractional; rows are not required to be stochastic here,
    which keeps the function usable on interpolated assignments directly.
    """
    U = np.asarray(U, dtype=np.float64)
    if U.shape != (e.n, e.l):
        raise InvalidArgumentError(f"assignment must have shape ({e.n}, {e.l}), got {U.shape}")
    unary = np.sum(e.unary * U)
    UV = U[e.rows] @ e.label_costs
    pair = np.dot(e.weights, np.einsum("ka,ka->k", UV, U[e.cols]))
    return float(unary + pair)


def to_binary_matrix(labels, l):
    """One-hot ``n x l`` matrix of a labeling."""
    L = np.asarray(labels)
    if L.ndim != 1:
        raise InvalidArgumentError("labeling must be one-dimensional")
    L = L.astype(np.int64)
    if L.size and (L.min() < 0 or L.max() >= l):
        raise InvalidArgumentError(f"labels must lie in [0, {l})")
    U = np.zeros((L.size, l))
    U[np.arange(L.size), L] = 1.0
    return U
