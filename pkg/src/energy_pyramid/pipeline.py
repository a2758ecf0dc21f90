"""Energy pyramids and coarse-to-fine optimization."""
from dataclasses import dataclass, field
import logging

import numpy as np
from sklearn.base import BaseEstimator

from .coarsen import SIGMA_SCALE, LabelCoarsener, VariableCoarsener
from .energy import evaluate_discrete, evaluate_fractional, to_binary_matrix
from .exceptions import InvalidArgumentError
from .solve import SolverConfig, get_solver, winner_take_all
from .validation import check_energy, check_positive_int

logger = logging.getLogger(__name__)

__all__ = [
    "PyramidConfig",
    "EnergyPyramid",
    "build_pyramid",
    "refine_pyramid",
    "solve_multiscale",
    "round_rows",
    "MultiscaleSolver",
    "ICMSolver",
]

MODES = ("vars", "labels")

_DEFAULTS = {
    # beta, delta, min_size, max_scales
    "vars": (0.2, 3, 10, None),
    "labels": (0.75, 2, 3, 5),
}


@dataclass(frozen=True)
class PyramidConfig:
    """Knobs for pyramid construction and refinement.

    ``None`` fields take the per-mode defaults. Construction coarsens while
    the current scale still has at least ``min_size`` variables (labels in
    label mode) and fewer than ``max_scales`` scales exist. With the
    defaults, variable pyramids stop below 10 variables and label pyramids
    stop at 2 labels or 5 scales.
    """

    mode: str = "vars"
    beta: float = None
    delta: int = None
    n_restarts: int = 10
    n_sweeps: int = 10
    agreement: str = "energy"
    sigma_scale: float = SIGMA_SCALE
    seed: int = 0
    min_size: int = None
    max_scales: int = None
    solver: object = "icm"
    solver_config: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidArgumentError(f"mode must be one of {MODES}, got {self.mode!r}")
        beta, delta, min_size, max_scales = _DEFAULTS[self.mode]
        if self.beta is None:
            object.__setattr__(self, "beta", beta)
        if self.delta is None:
            object.__setattr__(self, "delta", delta)
        if self.min_size is None:
            object.__setattr__(self, "min_size", min_size)
        if self.max_scales is None:
            object.__setattr__(self, "max_scales", max_scales)
        check_positive_int(self.min_size, "min_size")
        if self.max_scales is not None:
            check_positive_int(self.max_scales, "max_scales")


@dataclass
class EnergyPyramid:
    """Energies from fine (index 0) to coarsest, with interpolations.

    ``interps[s]`` maps scale ``s + 1`` to scale ``s``.
    """

    scales: list
    interps: list
    mode: str = "vars"
    fixed_point: bool = False
    warnings: list = field(default_factory=list)

    def __len__(self):
        return len(self.scales)

    @property
    def sizes(self):
        if self.mode == "labels":
            return [e.l for e in self.scales]
        return [e.n for e in self.scales]

    @property
    def rates(self):
        sz = self.sizes
        return [c / f for f, c in zip(sz[:-1], sz[1:])]

    def interpolate(self, s, U):
        """Map an assignment at scale ``s + 1`` to scale ``s``."""
        P = self.interps[s].matrix
        if self.mode == "labels":
            return np.asarray((P @ U.T).T)
        return np.asarray(P @ U)


def _coarsener(cfg, level):
    if cfg.mode == "labels":
        return LabelCoarsener(beta=cfg.beta, delta=cfg.delta)
    return VariableCoarsener(
        beta=cfg.beta, delta=cfg.delta, n_restarts=cfg.n_restarts,
        n_sweeps=cfg.n_sweeps, agreement=cfg.agreement,
        sigma_scale=cfg.sigma_scale, random_state=(int(cfg.seed), level),
    )


def build_pyramid(e, cfg=None):
    """Coarsen repeatedly until the stop rule fires.

    Agreements are re-estimated on every coarse energy. When a level fails
    to shrink, construction stops there and the pyramid records the fixed
    point in ``warnings``.
    """
    check_energy(e)
    cfg = cfg or PyramidConfig()
    size = (lambda x: x.l) if cfg.mode == "labels" else (lambda x: x.n)
    pyr = EnergyPyramid([e], [], cfg.mode)
    cur = e
    while size(cur) >= cfg.min_size:
        if cfg.max_scales is not None and len(pyr.scales) >= cfg.max_scales:
            break
        level = len(pyr.interps)
        co = _coarsener(cfg, level).fit(cur)
        if co.interpolation_.is_fixed_point:
            msg = f"coarsening reached a fixed point at scale {level} (size {size(cur)})"
            logger.warning(msg)
            pyr.fixed_point = True
            pyr.warnings.append(msg)
            break
        cur = co.transform(cur)
        pyr.interps.append(co.interpolation_)
        pyr.scales.append(cur)
    return pyr


def round_rows(U):
    """Discrete labeling from an assignment matrix: argmax per row.

    Ties go to the lower label index. Rows need not sum to 1: label
    interpolation ``U P^T`` yields columns of ``P``, which generally don't.
    """
    U = np.asarray(U, dtype=np.float64)
    if U.ndim != 2 or U.shape[1] < 1 or not np.all(np.isfinite(U)):
        raise InvalidArgumentError("assignment must be a finite 2-d array with >= 1 column")
    return np.argmax(U, axis=1).astype(np.int64)


def refine_pyramid(pyr, cfg=None):
    """Coarse-to-fine optimization over an existing pyramid.

    Returns the finest labeling and a per-scale trace, coarsest first.
    Each trace record holds the scale index, its size, the energy of the
    fractional interpolation (``None`` at the coarsest scale), the energy
    of the rounded initialization and the energy after refinement.
    """
    cfg = cfg or PyramidConfig(mode=pyr.mode)
    solver = get_solver(cfg.solver)
    S = len(pyr.scales) - 1
    trace = []
    e = pyr.scales[S]
    init = winner_take_all(e)
    labels = np.asarray(solver(e, init, cfg.solver_config), dtype=np.int64)
    trace.append(_record(S, pyr, e, None, init, labels))
    for s in range(S - 1, -1, -1):
        coarse_l = pyr.scales[s + 1].l
        U = pyr.interpolate(s, to_binary_matrix(labels, coarse_l))
        e = pyr.scales[s]
        init = round_rows(U)
        labels = np.asarray(solver(e, init, cfg.solver_config), dtype=np.int64)
        trace.append(_record(s, pyr, e, evaluate_fractional(e, U), init, labels))
    return labels, trace


def _record(s, pyr, e, frac, init, labels):
    return {
        "scale": s,
        "size": pyr.sizes[s],
        "energy_interpolated": frac,
        "energy_init": evaluate_discrete(e, init),
        "energy_refined": evaluate_discrete(e, labels),
    }


def solve_multiscale(e, cfg=None):
    """Build a pyramid and optimize coarse to fine.

    The coarsest scale starts from winner-take-all; every finer scale starts
    from the rounded interpolation of the coarser solution. Returns
    ``(labels, trace)``; see :func:`refine_pyramid` for the trace layout.
    """
    cfg = cfg or PyramidConfig()
    return refine_pyramid(build_pyramid(e, cfg), cfg)


class MultiscaleSolver(BaseEstimator):
    """Coarse-to-fine energy minimization as an estimator.

    ``fit(energy)`` builds the pyramid and solves; results land in
    ``labels_``, ``energy_``, ``trace_`` and ``pyramid_``.

    Parameters
    ----------
    mode : {"vars", "labels"}, default="vars"
    beta, delta : optional
        Coarsening threshold and interpolation sparsity; ``None`` takes the
        mode default (0.2 / 3 for variables, 0.75 / 2 for labels).
    n_restarts, n_sweeps : int, default=10
        Agreement sampler budget (variable mode only).
    agreement : {"energy", "agnostic"}, default="energy"
    sigma_scale : float, default=0.1
        Agreement scale as a fraction of ``max(V)``.
    min_size, max_scales : optional
        Stop rule; ``None`` takes the mode default.
    solver : str or callable, default="icm"
    max_sweeps : int, default=1000
        Sweep budget of the refinement solver.
    random_state : int, default=0
    """

    def __init__(self, mode="vars", beta=None, delta=None, n_restarts=10,
                 n_sweeps=10, agreement="energy", sigma_scale=SIGMA_SCALE, min_size=None,
                 max_scales=None, solver="icm", max_sweeps=1000,
                 random_state=0):
        self.mode = mode
        self.beta = beta
        self.delta = delta
        self.n_restarts = n_restarts
        self.n_sweeps = n_sweeps
        self.agreement = agreement
        self.sigma_scale = sigma_scale
        self.min_size = min_size
        self.max_scales = max_scales
        self.solver = solver
        self.max_sweeps = max_sweeps
        self.random_state = random_state

    def _config(self):
        return PyramidConfig(
            mode=self.mode, beta=self.beta, delta=self.delta,
            n_restarts=self.n_restarts, n_sweeps=self.n_sweeps,
            agreement=self.agreement, sigma_scale=self.sigma_scale,
            seed=self.random_state,
            min_size=self.min_size, max_scales=self.max_scales,
            solver=self.solver,
            solver_config=SolverConfig(self.max_sweeps, self.random_state),
        )

    def fit(self, X, y=None):
        e = check_energy(X)
        cfg = self._config()
        self.pyramid_ = build_pyramid(e, cfg)
        self.labels_, self.trace_ = refine_pyramid(self.pyramid_, cfg)
        self.energy_ = evaluate_discrete(e, self.labels_)
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_


class ICMSolver(BaseEstimator):
    """Single-scale ICM as an estimator.

    ``init="wta"`` starts from the unary argmin, ``"random"`` from a
    uniformly random labeling drawn with ``random_state``.
    """

    def __init__(self, init="wta", max_sweeps=1000, random_state=0):
        self.init = init
        self.max_sweeps = max_sweeps
        self.random_state = random_state

    def fit(self, X, y=None):
        e = check_energy(X)
        cfg = SolverConfig(self.max_sweeps, self.random_state)
        if self.init == "wta":
            start = winner_take_all(e)
        elif self.init == "random":
            start = np.random.default_rng(self.random_state).integers(0, e.l, e.n)
        else:
            raise InvalidArgumentError(f"unknown init {self.init!r}")
        self.init_labels_ = start
        self.labels_ = get_solver("icm")(e, start, cfg)
        self.energy_ = evaluate_discrete(e, self.labels_)
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_
