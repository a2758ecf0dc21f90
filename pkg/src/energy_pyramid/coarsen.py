"""Energy-aware coarsening of variables and labels.

Coarsening runs in three steps: measure how strongly neighbors agree,
pick coarse representatives greedily, and softly aggregate every other
item onto its strongest coarse neighbors. The resulting row-stochastic
interpolation ``P`` defines the coarse energy through Galerkin products.
"""
from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .energy import EnergyInstance
from .exceptions import InvalidArgumentError
from .solve import icm_batch
from .validation import check_energy, check_fraction, check_positive_int

__all__ = [
    "AgreementGraph",
    "LabelAgreement",
    "InterpolationMatrix",
    "sample_agreements",
    "agnostic_agreements",
    "label_agreements",
    "select_coarse",
    "build_interpolation",
    "coarsen_variables",
    "coarsen_labels",
    "VariableCoarsener",
    "LabelCoarsener",
]

LABEL_EPS = 1e-6
SIGMA_SCALE = 0.1


@dataclass(frozen=True, eq=False)
class AgreementGraph:
    """Per-edge disagreement ``d`` and agreement ``c = exp(-d / sigma)``.

    Only off-diagonal edges (``rows < cols``) of the energy are covered.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    disagreement: np.ndarray
    agreement: np.ndarray
    n_restarts: int = 0
    n_sweeps: int = 0
    sigma: float = 1.0

    def to_matrix(self):
        """Symmetric ``n x n`` sparse matrix of agreements."""
        r = np.concatenate([self.rows, self.cols])
        c = np.concatenate([self.cols, self.rows])
        v = np.concatenate([self.agreement, self.agreement])
        return sp.csr_matrix((v, (r, c)), shape=(self.n, self.n))


@dataclass(frozen=True, eq=False)
class LabelAgreement:
    """Dense label-pair agreements; the diagonal is zero (excluded)."""

    matrix: np.ndarray

    def to_matrix(self):
        return self.matrix


@dataclass(frozen=True, eq=False)
class InterpolationMatrix:
    """Sparse row-stochastic map from coarse to fine.

    ``coarse_index[k]`` is the fine index of the representative that owns
    coarse column ``k``.
    """

    matrix: sp.csr_matrix
    coarse_index: np.ndarray

    @property
    def n_fine(self):
        return self.matrix.shape[0]

    @property
    def n_coarse(self):
        return self.matrix.shape[1]

    @property
    def is_fixed_point(self):
        return self.n_coarse == self.n_fine

    def toarray(self):
        return self.matrix.toarray()


def _off_diagonal_edges(e):
    off = e.rows != e.cols
    return e.rows[off], e.cols[off]


def sample_agreements(e, n_restarts=10, n_sweeps=10, seed=0, sigma=None,
                      sigma_scale=SIGMA_SCALE):
    """Estimate neighbor agreements from low-energy ICM samples.

    Each of ``n_restarts`` samples is ``n_sweeps`` ICM sweeps from a
    uniformly random labeling; every restart draws from its own child of
    ``SeedSequence(seed)``. The disagreement of an edge is the mean label
    cost ``V[l_i, l_j]`` over samples. ``sigma`` defaults to
    ``sigma_scale * max(V)``; when it is not positive every agreement is 1.
    """
    check_energy(e)
    K = check_positive_int(n_restarts, "n_restarts")
    t = check_positive_int(n_sweeps, "n_sweeps")
    r, c = _off_diagonal_edges(e)
    V = e.label_costs
    if sigma is None:
        sigma = sigma_scale * float(V.max())
    if r.size == 0:
        empty = np.zeros(0)
        return AgreementGraph(e.n, r, c, empty, empty, K, t, sigma)

    children = np.random.SeedSequence(seed).spawn(K)
    inits = np.stack(
        [np.random.default_rng(ch).integers(0, e.l, size=e.n, dtype=np.int64) for ch in children]
    )
    samples = icm_batch(e, inits, t)
    d = V[samples[:, r], samples[:, c]].mean(axis=0)
    if sigma > 0:
        agreement = np.exp(-d / sigma)
    else:
        agreement = np.ones_like(d)
    return AgreementGraph(e.n, r, c, d, agreement, K, t, float(sigma))


def agnostic_agreements(e):
    """Structure-blind baseline: every edge gets agreement 1."""
    check_energy(e)
    r, c = _off_diagonal_edges(e)
    return AgreementGraph(e.n, r, c, np.zeros(r.size), np.ones(r.size), 0, 0, 1.0)


def label_agreements(e, eps=LABEL_EPS):
    """Closed-form label agreements, inversely proportional to ``V``.

    ``c[a, b] = max(V) / max(V[a, b], eps * max(V))`` off the diagonal,
    and all ones when ``max(V) <= 0``.
    """
    check_energy(e)
    V = e.label_costs
    vmax = float(V.max())
    if vmax > 0:
        C = vmax / np.maximum(V, eps * vmax)
    else:
        C = np.ones_like(V)
    np.fill_diagonal(C, 0.0)
    return LabelAgreement(C)


def _as_affinity(agreements):
    if hasattr(agreements, "to_matrix"):
        agreements = agreements.to_matrix()
    A = sp.csr_matrix(agreements, dtype=np.float64)
    if A.shape[0] != A.shape[1]:
        raise InvalidArgumentError(f"agreement matrix must be square, got {A.shape}")
    A = A - sp.diags(A.diagonal())
    A.eliminate_zeros()
    A.sort_indices()
    if A.nnz and A.data.min() < 0:
        raise InvalidArgumentError("agreements must be nonnegative")
    return A


@numba.njit(cache=True)
def _greedy_select(indptr, indices, data, order, beta):
    n = indptr.size - 1
    total = np.zeros(n)
    for i in range(n):
        for k in range(indptr[i], indptr[i + 1]):
            total[i] += data[k]
    in_coarse = np.zeros(n, dtype=np.bool_)
    coarse_sum = np.zeros(n)
    for i in order:
        if total[i] <= 0.0 or coarse_sum[i] < beta * total[i]:
            in_coarse[i] = True
            for k in range(indptr[i], indptr[i + 1]):
                coarse_sum[indices[k]] += data[k]
    return in_coarse


def select_coarse(agreements, beta, order=None):
    """Greedy choice of coarse representatives.

    Items are visited in ``order`` (ascending index by default). An item
    joins the coarse set when its agreement with the current coarse set is
    below ``beta`` times its total agreement; items with no agreement at
    all always join. Returns the sorted fine indices of the coarse set.
    """
    beta = check_fraction(beta, "beta")
    A = _as_affinity(agreements)
    n = A.shape[0]
    if order is None:
        order = np.arange(n, dtype=np.int64)
    else:
        order = np.asarray(order, dtype=np.int64)
        if not np.array_equal(np.sort(order), np.arange(n)):
            raise InvalidArgumentError("order must be a permutation of the items")
    in_coarse = _greedy_select(
        A.indptr.astype(np.int64), A.indices.astype(np.int64), A.data, order, beta
    )
    return np.flatnonzero(in_coarse)


def build_interpolation(agreements, coarse, delta):
    """Interpolation from agreements and a coarse set.

    Coarse items get unit indicator rows. Every other row takes its
    agreements with coarse neighbors, keeps the ``delta`` largest (ties
    to the lower coarse column) and is normalized to sum to 1. A row with
    no positive coarse neighbor is promoted into the coarse set.
    """
    delta = check_positive_int(delta, "delta")
    A = _as_affinity(agreements)
    n = A.shape[0]
    coarse = np.unique(np.asarray(coarse, dtype=np.int64))
    if coarse.size == 0:
        raise InvalidArgumentError("coarse set must be nonempty")
    if coarse[0] < 0 or coarse[-1] >= n:
        raise InvalidArgumentError("coarse index out of range")

    while True:
        is_coarse = np.zeros(n, dtype=bool)
        is_coarse[coarse] = True
        fine = np.flatnonzero(~is_coarse)
        B = A[fine][:, coarse].tocoo()
        keep = B.data > 0
        br, bc, bv = B.row[keep], B.col[keep], B.data[keep]
        orphans = np.setdiff1d(np.arange(fine.size), br)
        if orphans.size == 0:
            break
        coarse = np.union1d(coarse, fine[orphans])

    # rank entries within each row by (-value, column) and prune
    order = np.lexsort((bc, -bv, br))
    br, bc, bv = br[order], bc[order], bv[order]
    starts = np.searchsorted(br, np.arange(fine.size))
    rank = np.arange(br.size) - starts[br]
    keep = rank < delta
    br, bc, bv = br[keep], bc[keep], bv[keep]
    sums = np.bincount(br, weights=bv, minlength=fine.size)
    bv = bv / sums[br]

    rows = np.concatenate([coarse, fine[br]])
    cols = np.concatenate([np.arange(coarse.size), bc])
    vals = np.concatenate([np.ones(coarse.size), bv])
    P = sp.csr_matrix((vals, (rows, cols)), shape=(n, coarse.size))
    P.sort_indices()
    return InterpolationMatrix(P, coarse)


def _as_sparse_interp(P):
    if isinstance(P, InterpolationMatrix):
        return P.matrix
    return sp.csr_matrix(P, dtype=np.float64)


def coarsen_variables(e, P, fold_loops=False):
    """Galerkin coarsening along variables: ``D^c = P^T D``, ``W^c = P^T W P``.

    Off-diagonal coarse pairs become single edges ``I < J``; the diagonal of
    ``P^T W P`` becomes self-loop edges, which keeps evaluation of any
    fractional coarse assignment exact. With ``fold_loops`` the self-loops
    are moved into the unary through ``diag(V)`` instead; that is exact for
    discrete coarse labelings only.
    """
    check_energy(e)
    P = _as_sparse_interp(P)
    if P.shape[0] != e.n:
        raise InvalidArgumentError(f"interpolation has {P.shape[0]} rows, energy has {e.n} variables")
    nc = P.shape[1]
    Dc = np.asarray(P.T @ e.unary)
    Ac = (P.T @ e.pairwise_matrix() @ P).tocsr()
    S = sp.triu((Ac + Ac.T) * 0.5, k=1).tocoo()
    loops = 0.5 * Ac.diagonal()

    rows = [S.row.astype(np.int64)]
    cols = [S.col.astype(np.int64)]
    weights = [S.data]
    if fold_loops:
        Dc = Dc + loops[:, None] * np.diag(e.label_costs)[None, :]
    else:
        idx = np.flatnonzero(loops)
        rows.append(idx)
        cols.append(idx)
        weights.append(loops[idx])
    r, c, w = np.concatenate(rows), np.concatenate(cols), np.concatenate(weights)
    nz = w != 0
    if Dc.shape != (nc, e.l):
        Dc = Dc.reshape(nc, e.l)
    return EnergyInstance(Dc, e.label_costs, r[nz], c[nz], w[nz])


def coarsen_labels(e, P):
    """Galerkin coarsening along labels: ``D P`` and ``P^T V P``."""
    check_energy(e)
    P = _as_sparse_interp(P)
    if P.shape[0] != e.l:
        raise InvalidArgumentError(f"interpolation has {P.shape[0]} rows, energy has {e.l} labels")
    Pd = P.toarray()
    Dc = e.unary @ Pd
    Vc = Pd.T @ e.label_costs @ Pd
    Vc = 0.5 * (Vc + Vc.T)
    return EnergyInstance(Dc, Vc, e.rows, e.cols, e.weights)


class VariableCoarsener(TransformerMixin, BaseEstimator):
    """One level of variable coarsening as a transformer.

    ``fit`` measures agreements on an energy and builds the interpolation,
    ``transform`` returns the coarse energy and ``inverse_transform`` maps a
    coarse assignment matrix back to the fine variables.

    Parameters
    ----------
    beta : float, default=0.2
        Coarse-set threshold; smaller values give fewer coarse variables.
    delta : int, default=3
        Maximum number of coarse neighbors kept per fine row.
    n_restarts, n_sweeps : int, default=10
        Number of ICM samples and sweeps per sample.
    agreement : {"energy", "agnostic"}, default="energy"
        ``"agnostic"`` sets every agreement to 1.
    sigma_scale : float, default=0.1
        Agreement scale as a fraction of ``max(V)``.
    random_state : int, default=0
    """

    def __init__(self, beta=0.2, delta=3, n_restarts=10, n_sweeps=10,
                 agreement="energy", sigma_scale=SIGMA_SCALE, random_state=0):
        self.beta = beta
        self.delta = delta
        self.n_restarts = n_restarts
        self.n_sweeps = n_sweeps
        self.agreement = agreement
        self.sigma_scale = sigma_scale
        self.random_state = random_state

    def _agreements(self, e):
        if self.agreement == "energy":
            return sample_agreements(e, self.n_restarts, self.n_sweeps,
                                     seed=self.random_state, sigma_scale=self.sigma_scale)
        if self.agreement == "agnostic":
            return agnostic_agreements(e)
        raise InvalidArgumentError(f"unknown agreement {self.agreement!r}")

    def fit(self, X, y=None):
        e = check_energy(X)
        self.agreements_ = self._agreements(e)
        coarse = select_coarse(self.agreements_, self.beta)
        self.interpolation_ = build_interpolation(self.agreements_, coarse, self.delta)
        self.n_fine_ = e.n
        self.n_coarse_ = self.interpolation_.n_coarse
        return self

    def transform(self, X):
        check_is_fitted(self, "interpolation_")
        return coarsen_variables(check_energy(X), self.interpolation_)

    def inverse_transform(self, U):
        check_is_fitted(self, "interpolation_")
        U = np.asarray(U, dtype=np.float64)
        if U.ndim != 2 or U.shape[0] != self.n_coarse_:
            raise InvalidArgumentError(f"expected {self.n_coarse_} coarse rows, got shape {U.shape}")
        return np.asarray(self.interpolation_.matrix @ U)


class LabelCoarsener(TransformerMixin, BaseEstimator):
    """One level of label coarsening as a transformer.

    Same protocol as :class:`VariableCoarsener`, acting on the columns of
    the assignment matrix: ``inverse_transform`` computes ``U P^T``.
    """

    def __init__(self, beta=0.75, delta=2, eps=LABEL_EPS):
        self.beta = beta
        self.delta = delta
        self.eps = eps

    def fit(self, X, y=None):
        e = check_energy(X)
        if e.l < 2:
            raise InvalidArgumentError("label coarsening needs at least 2 labels")
        self.agreements_ = label_agreements(e, self.eps)
        coarse = select_coarse(self.agreements_, self.beta)
        self.interpolation_ = build_interpolation(self.agreements_, coarse, self.delta)
        self.n_fine_ = e.l
        self.n_coarse_ = self.interpolation_.n_coarse
        return self

    def transform(self, X):
        check_is_fitted(self, "interpolation_")
        return coarsen_labels(check_energy(X), self.interpolation_)

    def inverse_transform(self, U):
        check_is_fitted(self, "interpolation_")
        U = np.asarray(U, dtype=np.float64)
        if U.ndim != 2 or U.shape[1] != self.n_coarse_:
            raise InvalidArgumentError(f"expected {self.n_coarse_} coarse labels, got shape {U.shape}")
        return np.asarray((self.interpolation_.matrix @ U.T).T)
