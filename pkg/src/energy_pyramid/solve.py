"""Single-scale solvers.

Every refinement solver has the signature ``solver(energy, init, config)``
and returns a labeling; register new ones with :func:`register_solver` and
the multiscale pipeline picks them up by name.
"""
from dataclasses import dataclass
import itertools

import numba
import numpy as np
import scipy.sparse as sp

from .energy import evaluate_discrete
from .exceptions import CapacityError, InvalidArgumentError
from .validation import check_energy, check_labeling, check_positive_int

__all__ = [
    "SolverConfig",
    "icm",
    "icm_batch",
    "winner_take_all",
    "exact_min",
    "conditional_energies",
    "is_local_minimum",
    "random_labeling",
    "register_solver",
    "get_solver",
    "EXACT_MAX_STATES",
]

EXACT_MAX_STATES = 10**7


@dataclass(frozen=True)
class SolverConfig:
    """Iteration budget and seed for a single-scale solve.

    ``max_sweeps`` bounds the number of full passes; a pass that changes no
    label ends the run early. ``seed`` only matters when no initial labeling
    is supplied.
    """

    max_sweeps: int = 1000
    seed: int = 0

    def __post_init__(self):
        check_positive_int(self.max_sweeps, "max_sweeps")


@numba.njit(cache=True)
def _icm_kernel(D, V, indptr, indices, weights, loops, labels, max_sweeps):
    n, l = D.shape
    cond = np.empty(l)
    sweeps = 0
    converged = False
    for _ in range(max_sweeps):
        changed = 0
        for i in range(n):
            for a in range(l):
                cond[a] = D[i, a] + loops[i] * V[a, a]
            for k in range(indptr[i], indptr[i + 1]):
                w = weights[k]
                lj = labels[indices[k]]
                for a in range(l):
                    cond[a] += w * V[a, lj]
            cur = labels[i]
            best = cur
            best_val = cond[cur]
            # strict improvement only; lowest index among equal minima
            for a in range(l):
                if cond[a] < best_val:
                    best = a
                    best_val = cond[a]
            if best != cur:
                labels[i] = best
                changed += 1
        sweeps += 1
        if changed == 0:
            converged = True
            break
    return sweeps, converged


def _run_icm(e, labels, max_sweeps):
    indptr, indices, weights, loops = e.adjacency
    return _icm_kernel(e.unary, e.label_costs, indptr, indices, weights, loops, labels, max_sweeps)


def random_labeling(e, rng):
    return rng.integers(0, e.l, size=e.n, dtype=np.int64)


def icm(e, init=None, config=None, return_info=False):
    """Iterated Conditional Modes.

    Variables are visited in ascending index order. Each takes the label
    minimizing its conditional energy given its neighbors; a variable only
    moves on a strict decrease, and among equal minima the lowest label
    index wins. Stops after a sweep with no change or after
    ``config.max_sweeps`` sweeps.

    Returns the labeling, or ``(labeling, sweeps, converged)`` when
    ``return_info`` is set.
    """
    check_energy(e)
    config = config or SolverConfig()
    if init is None:
        labels = random_labeling(e, np.random.default_rng(config.seed))
    else:
        labels = check_labeling(init, e).copy()
    sweeps, converged = _run_icm(e, labels, config.max_sweeps)
    if return_info:
        return labels, int(sweeps), bool(converged)
    return labels


def icm_batch(e, inits, max_sweeps):
    """Run ICM independently from each row of ``inits`` (shape (K, n))."""
    out = np.array(inits, dtype=np.int64, copy=True)
    for k in range(out.shape[0]):
        _run_icm(e, out[k], max_sweeps)
    return out


def winner_take_all(e):
    """Per-variable argmin of the unary term; ties go to the lower label."""
    check_energy(e)
    return np.argmin(e.unary, axis=1).astype(np.int64)


def conditional_energies(e, labels):
    """``C[i, a]``: energy terms touching ``i`` if ``i`` took label ``a``."""
    L = check_labeling(labels, e)
    indptr, indices, weights, loops = e.adjacency
    A = sp.csr_matrix((weights, indices, indptr), shape=(e.n, e.n))
    V = e.label_costs
    return e.unary + loops[:, None] * np.diag(V)[None, :] + A @ V[L]


def is_local_minimum(e, labels, rtol=1e-12):
    """True when no single-variable change strictly lowers the energy."""
    L = check_labeling(labels, e)
    C = conditional_energies(e, L)
    current = C[np.arange(e.n), L]
    scale = max(1.0, float(np.max(np.abs(C))))
    return bool(np.all(C.min(axis=1) >= current - rtol * scale))


def exact_min(e, max_states=EXACT_MAX_STATES, chunk=1 << 16):
    """Exhaustive minimizer over all ``l**n`` labelings.

    Labelings are enumerated in lexicographic order (variable 0 most
    significant) and the first minimizer is returned, so ties resolve to
    the lexicographically smallest labeling.
    """
    check_energy(e)
    n, l = e.n, e.l
    total = l**n
    if total > max_states:
        raise CapacityError(
            f"exact_min needs l**n = {l}**{n} states, above the guard of {max_states}"
        )
    radix = l ** np.arange(n - 1, -1, -1, dtype=np.int64)
    best_val = np.inf
    best_idx = -1
    D, V = e.unary, e.label_costs
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        Ls = (idx[:, None] // radix[None, :]) % l
        vals = D[np.arange(n)[None, :], Ls].sum(axis=1)
        if e.n_edges:
            vals = vals + V[Ls[:, e.rows], Ls[:, e.cols]] @ e.weights
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val = float(vals[k])
            best_idx = int(idx[k])
    labels = (best_idx // radix) % l
    return labels.astype(np.int64), evaluate_discrete(e, labels)


def _icm_solver(e, init, config):
    return icm(e, init, config)


_SOLVERS = {"icm": _icm_solver}


def register_solver(name, fn):
    """Make ``fn(energy, init, config) -> labeling`` available by ``name``."""
    if not callable(fn):
        raise InvalidArgumentError("solver must be callable")
    _SOLVERS[name] = fn


def get_solver(name_or_fn):
    if callable(name_or_fn):
        return name_or_fn
    try:
        return _SOLVERS[name_or_fn]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown solver {name_or_fn!r}; known: {sorted(_SOLVERS)}"
        ) from None


def enumerate_labelings(n, l):
    """All labelings in lexicographic order, as an iterator of tuples."""
    return itertools.product(range(l), repeat=n)
