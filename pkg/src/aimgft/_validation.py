"""Input validation helpers shared by the functional API and the estimators.

scikit-learn's ``check_array`` refuses complex input, so the checks needed
here (finite, square, complex-capable) live in this module.
"""

import numbers

import numpy as np

from .exceptions import InputError

EPS = np.finfo(float).eps


def as_matrix(M, name="matrix", square=False, copy=False):
    """Return ``M`` as a finite 2-D float or complex ndarray.

    Integer and boolean input is promoted to float; anything that is not
    numeric raises :class:`InputError`.
    """
    if hasattr(M, "toarray"):
        M = M.toarray()
    arr = np.array(M, copy=copy) if copy else np.asarray(M)
    if arr.dtype == object or not np.issubdtype(arr.dtype, np.number):
        raise InputError(f"{name} must be numeric, got dtype {arr.dtype}")
    if not np.issubdtype(arr.dtype, np.inexact):
        arr = arr.astype(float)
    if arr.ndim != 2:
        raise InputError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise InputError(f"{name} is empty")
    if square and arr.shape[0] != arr.shape[1]:
        raise InputError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


def as_vector(s, n=None, name="signal"):
    """Return ``s`` as a finite 1-D ndarray, optionally of length ``n``."""
    values = getattr(s, "values", s)
    arr = np.asarray(values)
    if arr.dtype == object or not np.issubdtype(arr.dtype, np.number):
        raise InputError(f"{name} must be numeric, got dtype {arr.dtype}")
    if not np.issubdtype(arr.dtype, np.inexact):
        arr = arr.astype(float)
    arr = arr.reshape(-1) if arr.ndim == 2 and 1 in arr.shape else arr
    if arr.ndim != 1:
        raise InputError(f"{name} must be 1-D, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise InputError(f"{name} has length {arr.shape[0]}, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise InputError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_fraction(value, name):
    value = check_positive(value, name)
    if value > 1:
        raise InputError(f"{name} must lie in (0, 1], got {value!r}")
    return value


def check_int(value, name, minimum=0):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise InputError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def default_rank_tol(shape):
    """Relative rank threshold ``max(shape) * eps`` used when none is given."""
    return max(shape) * EPS
