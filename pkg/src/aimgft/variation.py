"""Total variation of eigenspace bases and the ordering it induces.

The variation of a basis block ``V_i`` is ``||V_i - A V_i||_1`` (largest
column absolute sum). With ``V_i`` scaled to unit matrix 1-norm it never
exceeds ``|1 - lambda_i| + 1``, so eigenvalues can be ordered by that bound
from low to high variation without computing any basis at all.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from ._validation import as_matrix
from .exceptions import InputError
from .graph import permutation_matrix

NORMALIZE_MATRIX = "matrix"
NORMALIZE_COLUMNS = "columns"


def _one_norm(M):
    return float(np.abs(M).sum(axis=0).max()) if M.size else 0.0


def _normalization(normalize):
    if normalize is True:
        return NORMALIZE_MATRIX
    if normalize is False or normalize is None:
        return None
    if normalize in (NORMALIZE_MATRIX, NORMALIZE_COLUMNS):
        return normalize
    raise InputError(f"unknown normalization {normalize!r}")


def tv_component(A, V_i, normalize=True):
    """Total variation ``||V_i - A V_i||_1`` of one basis block.

    Parameters
    ----------
    normalize : bool or {"matrix", "columns"}
        ``True`` or ``"matrix"`` scales ``V_i`` to unit matrix 1-norm, under
        which the bound of :func:`tv_bound` always holds. ``"columns"``
        scales each column to unit 1-norm, which can exceed the bound when
        chain vectors shrink along the chain. ``False`` uses ``V_i`` as given.

    Examples
    --------
    >>> A = [[0.0, 1.0], [0.0, 0.0]]
    >>> tv_component(A, [[1.0, 0.0], [0.0, 1.0]])
    2.0
    """
    A = as_matrix(A, "A", square=True)
    V_i = as_matrix(V_i, "V_i")
    if V_i.shape[0] != A.shape[0]:
        raise InputError("V_i must have as many rows as A")
    normalize = _normalization(normalize)
    if normalize == NORMALIZE_MATRIX:
        scale = _one_norm(V_i)
        V_i = V_i / scale
    elif normalize == NORMALIZE_COLUMNS:
        V_i = V_i / np.abs(V_i).sum(axis=0)
    return _one_norm(V_i - A @ V_i)


def tv_bound(lam):
    """Upper bound ``|1 - lam| + 1`` on the variation of a unit-norm block."""
    return abs(1 - complex(lam)) + 1.0


def _tie_key(lam, decimals=12):
    lam = complex(lam)
    arg = float(np.mod(np.angle(lam), 2 * np.pi)) if lam != 0 else 0.0
    return (round(tv_bound(lam), decimals), round(abs(lam), decimals), round(arg, decimals))


def tv_order(eigenvalues):
    """Indices of ``eigenvalues`` from lowest to highest variation bound.

    Ties go to smaller magnitude, then smaller argument in ``[0, 2 pi)``.
    Accepts a :class:`~aimgft.spectral.Spectrum` or a sequence of values.

    Examples
    --------
    >>> tv_order([0.0, 1.0, 2.0])
    [1, 0, 2]
    """
    values = getattr(eigenvalues, "eigenvalues", eigenvalues)
    values = np.atleast_1d(np.asarray(values, dtype=complex))
    return sorted(range(values.size), key=lambda i: _tie_key(values[i]))


@dataclass(frozen=True)
class TvRow:
    component: int
    eigenvalue: complex
    tv: float
    bound: float
    rank: int


@dataclass(frozen=True)
class TvReport:
    """Per-component variation, bound and position in the bound ordering."""

    rows: tuple
    ordering: tuple
    normalize: object

    @property
    def normalized(self):
        return _normalization(self.normalize) is not None

    def violations(self, tol=1e-10):
        """Components whose variation exceeds the bound by more than ``tol``."""
        return [r.component for r in self.rows if r.tv > r.bound + tol]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["component", "eigenvalue_re", "eigenvalue_im", "tv", "bound", "order", "within_bound"])
        bad = set(self.violations())
        for r in self.rows:
            w.writerow(
                [
                    r.component,
                    repr(float(r.eigenvalue.real)),
                    repr(float(r.eigenvalue.imag)),
                    repr(r.tv),
                    repr(r.bound),
                    r.rank,
                    str(r.component not in bad).lower(),
                ]
            )
        return buf.getvalue()


def tv_report(A, basis, normalize=True):
    """Variation, bound and bound-order rank of every component of ``basis``."""
    lams = basis.eigenvalues
    ordering = tv_order(lams)
    rank = {i: r for r, i in enumerate(ordering)}
    rows = tuple(
        TvRow(
            i,
            complex(lams[i]),
            tv_component(A, basis.component_matrix(i), normalize),
            tv_bound(lams[i]),
            rank[i],
        )
        for i in range(basis.k)
    )
    return TvReport(rows, tuple(ordering), normalize)


def tv_isomorphism_check(A, B, perm, components, normalize=True, tol=1e-10):
    """Whether relabelling nodes by ``perm`` preserves every component's variation.

    ``B`` must equal ``P A P^T``; each block ``V_i`` of ``components`` (a
    basis or a sequence of matrices) is compared with ``P V_i`` on ``B``.

    Raises
    ------
    InputError
        If ``B`` is not the relabelled ``A``.
    """
    A = as_matrix(A, "A", square=True)
    B = as_matrix(B, "B", square=True)
    P = permutation_matrix(perm)
    if P.shape[0] != A.shape[0] or B.shape != A.shape:
        raise InputError("permutation and matrix sizes must agree")
    if not np.allclose(B, P @ A @ P.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise InputError("B is not P A P^T for the given permutation")
    if hasattr(components, "component_matrix"):
        components = [components.component_matrix(i) for i in range(components.k)]
    for V_i in components:
        V_i = as_matrix(V_i, "V_i")
        tv = tv_component(A, V_i, normalize)
        tv_p = tv_component(B, P @ V_i, normalize)
        if abs(tv - tv_p) > tol * max(tv, 1.0):
            return False
    return True
