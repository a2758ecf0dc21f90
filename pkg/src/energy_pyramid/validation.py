"""Input validation helpers shared by the estimators and functions."""
import numpy as np

from .energy import EnergyInstance, _check_labels
from .exceptions import InvalidArgumentError

ROW_SUM_TOL = 1e-12


def check_energy(e):
    if not isinstance(e, EnergyInstance):
        raise InvalidArgumentError(f"expected an EnergyInstance, got {type(e).__name__}")
    return e


def check_labeling(labels, e):
    """Return ``labels`` as an int64 vector valid for ``e``."""
    return _check_labels(check_energy(e), labels)


def check_assignment(U, n=None, l=None, tol=ROW_SUM_TOL):
    """Validate a fractional assignment matrix and return it as float64.

    Entries must lie in [0, 1] and rows must sum to 1 within ``tol``.
    """
    U = np.asarray(U, dtype=np.float64)
    if U.ndim != 2:
        raise InvalidArgumentError(f"assignment must be 2-d, got shape {U.shape}")
    if n is not None and U.shape[0] != n:
        raise InvalidArgumentError(f"assignment must have {n} rows, got {U.shape[0]}")
    if l is not None and U.shape[1] != l:
        raise InvalidArgumentError(f"assignment must have {l} columns, got {U.shape[1]}")
    if not np.all(np.isfinite(U)):
        raise InvalidArgumentError("assignment entries must be finite")
    if U.size and (U.min() < -tol or U.max() > 1 + tol):
        raise InvalidArgumentError("assignment entries must lie in [0, 1]")
    if U.size and np.max(np.abs(U.sum(axis=1) - 1.0)) > tol:
        raise InvalidArgumentError("assignment rows must sum to 1")
    return U


def check_positive_int(value, name, minimum=1):
    if isinstance(value, (bool, np.bool_)) or int(value) != value or value < minimum:
        raise InvalidArgumentError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_fraction(value, name):
    if not 0.0 < float(value) < 1.0:
        raise InvalidArgumentError(f"{name} must lie in (0, 1), got {value!r}")
    return float(value)
