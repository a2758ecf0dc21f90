"""Synthetic benchmark generation and method comparison."""
from dataclasses import dataclass, field
import time

import numpy as np

from .energy import EnergyInstance, evaluate_discrete
from .exceptions import CapacityError, InvalidArgumentError
from .pipeline import ICMSolver, MultiscaleSolver
from .solve import exact_min
from .validation import check_positive_int

__all__ = [
    "SyntheticSpec",
    "gen_synthetic",
    "grid_edges",
    "RunReport",
    "run_compare",
    "relative_ratio",
    "METHODS",
    "REPORT_SCHEMA",
]

REPORT_SCHEMA = 1
# spawn key separating instance generation from solver randomness
_GEN_SPAWN_KEY = (0x6D7266,)


@dataclass(frozen=True)
class SyntheticSpec:
    """Random non-submodular grid energy.

    ``D ~ N(0, 1)``; ``V`` symmetric with ``U(0, 1)`` off-diagonal entries
    and zero diagonal; ``w ~ strength * U(-1, 1)`` on a 4-connected grid.
    Variates come from numpy's PCG64 bit generator (``standard_normal``
    uses the ziggurat method, uniforms use 53-bit doubles), seeded from
    ``SeedSequence(seed, spawn_key=(0x6D7266,))``.
    """

    height: int = 50
    width: int = 50
    labels: int = 5
    strength: float = 10.0
    seed: int = 0

    def __post_init__(self):
        check_positive_int(self.height, "height")
        check_positive_int(self.width, "width")
        check_positive_int(self.labels, "labels")


def grid_edges(height, width):
    """Endpoints of the 4-connected grid with row-major numbering."""
    idx = np.arange(height * width).reshape(height, width)
    r = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
    c = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
    return r.astype(np.int64), c.astype(np.int64)


def gen_synthetic(spec):
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=_GEN_SPAWN_KEY))
    n, l = spec.height * spec.width, spec.labels
    D = rng.standard_normal((n, l))
    upper = np.triu(rng.uniform(0.0, 1.0, size=(l, l)), k=1)
    V = upper + upper.T
    r, c = grid_edges(spec.height, spec.width)
    w = spec.strength * rng.uniform(-1.0, 1.0, size=r.size)
    return EnergyInstance(D, V, r, c, w)


def relative_ratio(energy, reference):
    """``energy / reference`` generalized to references of either sign.

    Defined as ``1 - (reference - energy) / |reference|``: equal to the
    plain ratio for positive references, and below 1 exactly when
    ``energy`` is lower than ``reference``.
    """
    if reference == 0:
        return float("nan")
    return 1.0 - (reference - energy) / abs(reference)


def _ss_icm(e, seed, params):
    est = ICMSolver(init="wta", max_sweeps=params.get("max_sweeps", 1000), random_state=seed).fit(e)
    return est.labels_, {"init_energy": evaluate_discrete(e, est.init_labels_)}


def _ms(agreement, mode):
    def run(e, seed, params):
        kw = {k: v for k, v in params.items() if v is not None}
        if mode == "labels":
            kw.pop("n_restarts", None)
            kw.pop("n_sweeps", None)
            kw.pop("beta", None)
            kw.pop("delta", None)
        est = MultiscaleSolver(mode=mode, agreement=agreement, random_state=seed, **kw).fit(e)
        return est.labels_, {
            "pyramid_sizes": est.pyramid_.sizes,
            "pyramid_rates": est.pyramid_.rates,
            "fixed_point": est.pyramid_.fixed_point,
            "trace": est.trace_,
        }
    return run


def _exact(e, seed, params):
    labels, _ = exact_min(e)
    return labels, {}


METHODS = {
    "ss-icm": _ss_icm,
    "ms-icm": _ms("energy", "vars"),
    "ms-icm-agnostic": _ms("agnostic", "vars"),
    "ms-icm-labels": _ms("energy", "labels"),
    "exact": _exact,
}


@dataclass
class RunReport:
    """Per-instance, per-method results plus ensemble summaries."""

    runs: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    schema: int = REPORT_SCHEMA

    def energies(self, method):
        """Energies of ``method`` in instance order; NaN where it failed."""
        rows = sorted((r for r in self.runs if r["method"] == method), key=lambda r: r["instance"])
        return np.array([np.nan if r["energy"] is None else r["energy"] for r in rows])

    def summary(self):
        methods = list(dict.fromkeys(r["method"] for r in self.runs))
        out = {}
        for m in methods:
            E = self.energies(m)
            ok = ~np.isnan(E)
            out[m] = {
                "mean_energy": float(E[ok].mean()) if ok.any() else None,
                "count": int(ok.sum()),
                "failed": int((~ok).sum()),
                "mean_time_sec": float(np.mean([r["time_sec"] for r in self.runs if r["method"] == m])),
            }
        if "ss-icm" in out:
            ref = self.energies("ss-icm")
            for m in methods:
                E = self.energies(m)
                ratios = [relative_ratio(a, b) for a, b in zip(E, ref)
                          if not (np.isnan(a) or np.isnan(b))]
                out[m]["mean_ratio_vs_ss_icm"] = float(np.mean(ratios)) if ratios else None
        return out

    def to_dict(self):
        return {"schema": self.schema, "config": self.config,
                "summary": self.summary(), "runs": self.runs}


def run_compare(instances, methods=("ss-icm", "ms-icm"), seeds=None, params=None,
                keep_labels=True):
    """Run every method on every instance with shared seeds.

    ``instances`` is a sequence of energies; ``seeds[k]`` seeds the solvers
    on instance ``k`` (defaults to ``k``). ``params`` is forwarded to the
    multiscale estimators (``beta``, ``delta``, ``n_restarts``,
    ``n_sweeps``, ``max_sweeps``). A capacity error from ``exact`` is
    recorded on its row and the batch continues.
    """
    instances = list(instances)
    seeds = list(range(len(instances))) if seeds is None else list(seeds)
    if len(seeds) != len(instances):
        raise InvalidArgumentError("seeds and instances must have equal length")
    params = dict(params or {})
    for m in methods:
        if m not in METHODS:
            raise InvalidArgumentError(f"unknown method {m!r}; known: {sorted(METHODS)}")
    report = RunReport(config={"methods": list(methods), "params": params})
    for k, (e, seed) in enumerate(zip(instances, seeds)):
        for m in methods:
            row = {"instance": k, "seed": int(seed), "method": m, "n": e.n, "l": e.l}
            t0 = time.perf_counter()
            try:
                labels, extra = METHODS[m](e, int(seed), params)
            except CapacityError as exc:
                row.update(energy=None, error=str(exc), time_sec=time.perf_counter() - t0)
                report.runs.append(row)
                continue
            row["time_sec"] = time.perf_counter() - t0
            row["energy"] = evaluate_discrete(e, labels)
            if keep_labels:
                row["labels"] = [int(x) for x in labels]
            row.update(extra)
            report.runs.append(row)
    return report

