"""Eigendecomposition, numerical rank, eigenvalue clustering and kernel profiles.

Two kinds of rank threshold appear here. ``numerical_rank`` and
``kernel_basis`` default to ``max(shape) * eps`` relative to the largest
singular value, which is right for matrices known exactly (eigenvector
matrices, adjacency matrices). Kernels of shifted matrices ``A - lambda I``
are taken with :data:`SUBSPACE_TOL` instead, because ``lambda`` is a cluster
centroid and ``A`` itself carries rounding from its construction; an
``N * eps`` threshold would count rounding noise as rank.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ._validation import as_matrix, check_int, check_positive, default_rank_tol
from .exceptions import (
    AmbiguousClusterWarning,
    InputError,
    NumericalError,
    SpectralAmbiguityError,
)

SUBSPACE_TOL = 1e-8
DEFAULT_CLUSTER_TOL = 1e-6
DEFAULT_ALPHA = 1e-8
DEFAULT_DELTA = 1e-13


def _singular_values(M):
    try:
        return sla.svd(M, compute_uv=False, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc


def _svd(M):
    try:
        return sla.svd(M, full_matrices=True, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc


def numerical_rank(M, tol=None):
    """Number of singular values above ``tol * sigma_max(M)``.

    ``tol`` defaults to ``max(M.shape) * eps``. The zero matrix has rank 0.
    """
    M = as_matrix(M, "M")
    tol = default_rank_tol(M.shape) if tol is None else check_positive(tol, "tol")
    s = _singular_values(M)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def null_space(M, atol):
    """Orthonormal basis of right singular vectors with ``sigma <= atol``."""
    U, s, Vh = _svd(M)
    r = int(np.count_nonzero(s > atol))
    return Vh[r:].conj().T


def range_space(M, atol):
    """Orthonormal basis of left singular vectors with ``sigma > atol``."""
    U, s, Vh = _svd(M)
    r = int(np.count_nonzero(s > atol))
    return U[:, :r]


def kernel_basis(M, tol=None):
    """Orthonormal basis of the numerical null space of ``M``.

    Columns are the right singular vectors whose singular values do not
    exceed ``tol * sigma_max``; their count is ``M.shape[1] -
    numerical_rank(M, tol)``.

    Examples
    --------
    >>> abs(kernel_basis([[0.0, 1.0], [0.0, 0.0]])).round(12)
    array([[1.],
           [0.]])
    """
    M = as_matrix(M, "M")
    tol = default_rank_tol(M.shape) if tol is None else check_positive(tol, "tol")
    U, s, Vh = _svd(M)
    if s.size == 0 or s[0] == 0:
        return np.eye(M.shape[1], dtype=Vh.dtype)
    r = int(np.count_nonzero(s > tol * s[0]))
    return Vh[r:].conj().T


def spectral_norm(M):
    s = _singular_values(M)
    return float(s[0]) if s.size else 0.0


def shifted(A, lam):
    """``A - lam * I`` in a dtype wide enough for ``lam``."""
    dtype = np.result_type(A.dtype, np.asarray(lam).dtype, float)
    B = np.array(A, dtype=dtype)
    B[np.diag_indices_from(B)] -= lam
    return B


@dataclass(frozen=True, eq=False)
class RawSpectrum:
    """Unclustered solver output: ``A @ eigenvectors ~= eigenvectors * eigenvalues``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    solver_rank: int
    left_eigenvectors: np.ndarray = None
    max_residual: float = 0.0

    @property
    def n(self):
        return self.eigenvalues.shape[0]


def eigendecompose(A, tol_rank=None, tol_eig=1e-8, left=True):
    """Dense eigendecomposition with a rank diagnosis of the eigenvector matrix.

    Parameters
    ----------
    A : (N, N) array_like
    tol_rank : float, optional
        Relative threshold for ``solver_rank``; defaults to ``N * eps``.
    tol_eig : float
        Every column must satisfy ``||A v - lambda v|| <= tol_eig * ||A||_F``.
    left : bool
        Also return left eigenvectors (``u^H A = lambda u^H``), which basis
        completion needs.

    Returns
    -------
    RawSpectrum
    """
    A = as_matrix(A, "A", square=True)
    try:
        if left:
            w, vl, vr = sla.eig(A, left=True, right=True, check_finite=False)
        else:
            w, vr = sla.eig(A, check_finite=False)
            vl = None
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    normA = np.linalg.norm(A)
    residuals = np.linalg.norm(A @ vr - vr * w, axis=0)
    max_res = float(residuals.max()) if residuals.size else 0.0
    if max_res > tol_eig * max(normA, np.finfo(float).tiny):
        if normA > 0:
            raise NumericalError(f"eigenpair residual {max_res:.3e} exceeds tolerance")
    rank = numerical_rank(vr, tol_rank)
    return RawSpectrum(w, vr, rank, vl, max_res)


@dataclass(frozen=True)
class DistinctEigenvalue:
    value: complex
    algebraic: int
    geometric: int
    members: tuple

    @property
    def deficiency(self):
        return self.algebraic - self.geometric


@dataclass(frozen=True)
class Spectrum:
    """Distinct eigenvalues sorted by ascending magnitude, then argument."""

    distinct: tuple
    cluster_tol: float
    ambiguities: tuple = field(default=())

    @property
    def k(self):
        return len(self.distinct)

    @property
    def n(self):
        return sum(d.algebraic for d in self.distinct)

    @property
    def eigenvalues(self):
        return np.array([d.value for d in self.distinct], dtype=complex)

    @property
    def algebraic(self):
        return [d.algebraic for d in self.distinct]

    @property
    def geometric(self):
        return [d.geometric for d in self.distinct]

    def deficient(self):
        """Indices of components whose algebraic multiplicity exceeds the geometric."""
        return [i for i, d in enumerate(self.distinct) if d.algebraic > d.geometric]

    def index_of(self, lam, tol=None):
        tol = self.cluster_tol if tol is None else tol
        d = np.abs(self.eigenvalues - lam)
        i = int(np.argmin(d))
        if d[i] > tol:
            raise InputError(f"{lam} is not a distinct eigenvalue of this spectrum")
        return i

    @classmethod
    def from_multiplicities(cls, items, cluster_tol=DEFAULT_CLUSTER_TOL):
        """Build from ``(value, algebraic, geometric)`` triples, in the given order."""
        distinct = []
        start = 0
        for value, a, g in items:
            distinct.append(DistinctEigenvalue(complex(value), int(a), int(g), tuple(range(start, start + a))))
            start += a
        return cls(tuple(distinct), cluster_tol)


def _sort_key(z):
    return (abs(z), float(np.mod(np.angle(z), 2 * np.pi)) if z != 0 else 0.0)


def cluster_eigenvalues(raw, A, cluster_tol=DEFAULT_CLUSTER_TOL, rank_tol=SUBSPACE_TOL, verify_simple=False):
    """Merge numerically repeated eigenvalues into distinct ones.

    Each raw eigenvalue joins the nearest cluster whose centroid lies within
    ``cluster_tol``; clusters are refined until centroids settle. A centroid
    with magnitude at most ``cluster_tol`` is snapped to exactly 0, and for
    real ``A`` an imaginary part within ``cluster_tol`` is dropped.

    The geometric multiplicity is ``dim Ker(A - lambda I)`` with relative
    threshold ``rank_tol``. Singleton clusters have geometric multiplicity 1
    by definition and skip the SVD unless ``verify_simple`` is set.

    Raises
    ------
    SpectralAmbiguityError
        If a cluster has no numerical eigenvector or more eigenvectors than
        members; the cluster radius is then inconsistent with the matrix.
    """
    A = as_matrix(A, "A", square=True)
    cluster_tol = check_positive(cluster_tol, "cluster_tol")
    vals = np.asarray(raw.eigenvalues, dtype=complex)
    if vals.shape[0] != A.shape[0]:
        raise InputError("raw spectrum size does not match A")
    order = sorted(range(vals.shape[0]), key=lambda i: _sort_key(vals[i]))

    centroids, groups = [], []
    for idx in order:
        if centroids:
            d = np.abs(np.asarray(centroids) - vals[idx])
            j = int(np.argmin(d))
            if d[j] <= cluster_tol:
                groups[j].append(idx)
                centroids[j] = vals[groups[j]].mean()
                continue
        centroids.append(vals[idx])
        groups.append([idx])

    ambiguities = []
    for _ in range(20):
        merged = False
        for a in range(len(centroids)):
            for b in range(a + 1, len(centroids)):
                if abs(centroids[a] - centroids[b]) <= cluster_tol:
                    groups[a].extend(groups[b])
                    del groups[b], centroids[b]
                    centroids[a] = vals[groups[a]].mean()
                    merged = True
                    break
            if merged:
                break
        if merged:
            continue
        C = np.asarray(centroids)
        new_groups = [[] for _ in centroids]
        ambiguities = []
        for idx in range(vals.shape[0]):
            d = np.abs(C - vals[idx])
            j = int(np.argmin(d))
            if np.count_nonzero(d <= cluster_tol) > 1:
                ambiguities.append(idx)
            new_groups[j].append(idx)
        new_groups = [g for g in new_groups if g]
        if sorted(map(sorted, new_groups)) == sorted(map(sorted, groups)):
            break
        groups = new_groups
        centroids = [vals[g].mean() for g in groups]
    if ambiguities:
        warnings.warn(
            f"{len(ambiguities)} eigenvalue(s) within cluster_tol of several centroids; "
            "assigned to the nearest",
            AmbiguousClusterWarning,
            stacklevel=2,
        )

    real_input = not np.iscomplexobj(A)
    distinct = []
    for g, c in zip(groups, centroids):
        c = complex(c)
        if abs(c) <= cluster_tol:
            c = 0j
        elif real_input and abs(c.imag) <= cluster_tol:
            c = complex(c.real, 0.0)
        a = len(g)
        if a == 1 and not verify_simple:
            geo = 1
        else:
            B = shifted(A, c)
            nb = spectral_norm(B)
            geo = A.shape[0] if nb == 0 else null_space(B, rank_tol * nb).shape[1]
        if geo < 1 or geo > a:
            raise SpectralAmbiguityError(
                f"cluster at {c:.6g} has {a} member(s) but {geo} numerical eigenvector(s); "
                "adjust cluster_tol"
            )
        distinct.append(DistinctEigenvalue(c, a, geo, tuple(sorted(g))))
    distinct.sort(key=lambda d: _sort_key(d.value))
    return Spectrum(tuple(distinct), cluster_tol, tuple(ambiguities))


@dataclass(frozen=True)
class ZeroRow:
    k: int
    m_k: int
    n_minus_m_k: int
    sigma_n_minus_m_k: float
    sigma_n_minus_m_k_plus_1: float
    holds: bool

    def to_dict(self):
        return {
            "k": self.k,
            "m_k": self.m_k,
            "N_minus_m_k": self.n_minus_m_k,
            "sigma_N_minus_m_k": self.sigma_n_minus_m_k,
            "sigma_N_minus_m_k_plus_1": self.sigma_n_minus_m_k_plus_1,
            "holds": self.holds,
        }


@dataclass(frozen=True)
class ZeroVerdict:
    is_numerical_zero: bool
    h_estimate: int
    rows: tuple
    alpha: float
    delta: float
    scale: float
    truncated: bool = False

    def to_dict(self):
        return {
            "is_numerical_zero": self.is_numerical_zero,
            "h_estimate": self.h_estimate,
            "truncated": self.truncated,
            "alpha": self.alpha,
            "delta": self.delta,
            "scale": self.scale,
            "rows": [r.to_dict() for r in self.rows],
        }


def verify_numerical_zero(A, alpha=DEFAULT_ALPHA, delta=DEFAULT_DELTA, k_max=None, rank_tol=None):
    """Singular-value certificate that 0 is a numerically multiple eigenvalue.

    ``A`` is rescaled to unit spectral norm (the factor is returned as
    ``scale``). For ``k = 1, 2, ...`` the kernel dimension ``m_k`` of
    ``A^k`` is the number of singular values below ``rank_tol`` (default
    ``delta``), and the gap test is

        sigma_{N-m_k}(A^k) > alpha > delta > sigma_{N-m_k+1}(A^k)

    with 1-based, descending singular values. When ``N - m_k = 0`` the left
    inequality holds vacuously. The scan stops at the first failing ``k``
    or at the first ``k`` whose kernel did not grow; either way the maximum
    chain length estimate is ``k - 1``. Reaching ``k_max`` without stopping
    marks the verdict truncated.

    Examples
    --------
    >>> v = verify_numerical_zero([[0.0, 1.0], [0.0, 0.0]])
    >>> v.is_numerical_zero, v.h_estimate, [r.m_k for r in v.rows]
    (True, 2, [1, 2, 2])
    """
    A = as_matrix(A, "A", square=True)
    alpha = check_positive(alpha, "alpha")
    delta = check_positive(delta, "delta")
    if not delta < alpha:
        raise InputError("delta must be smaller than alpha")
    n = A.shape[0]
    k_max = n + 1 if k_max is None else check_int(k_max, "k_max", 1)
    rank_tol = delta if rank_tol is None else check_positive(rank_tol, "rank_tol")

    s1 = spectral_norm(A)
    scale = s1 if s1 > 0 else 1.0
    As = A / scale
    Ak = As
    rows = []
    prev_m = None
    is_zero = False
    h = None
    for k in range(1, k_max + 1):
        s = _singular_values(Ak)
        m = int(np.count_nonzero(s < rank_tol))
        upper = float(s[n - m - 1]) if n - m >= 1 else None
        lower = float(s[n - m]) if m >= 1 else None
        holds = m >= 1 and (upper is None or upper > alpha) and lower < delta
        rows.append(ZeroRow(k, m, n - m, upper, lower, bool(holds)))
        if k == 1:
            is_zero = bool(holds)
        if not holds or (prev_m is not None and m == prev_m):
            h = k - 1
            break
        prev_m = m
        Ak = Ak @ As
    truncated = h is None
    if truncated:
        h = k_max
    return ZeroVerdict(is_zero, h, tuple(rows), alpha, delta, scale, truncated)


@dataclass(frozen=True)
class KernelProfile:
    """Kernel dimensions of ``(A - lambda I)^l`` and chain counts per length.

    ``dims[l]`` is ``dim Ker(A - lambda I)^l`` for ``l = 0..L`` and ``f[l]``
    the number of Jordan chains of length at least ``l`` (``f[1]`` is the
    geometric multiplicity). ``index`` is the maximum chain length.
    """

    lam: complex
    dims: tuple
    f: dict
    eigenspace_dim: int
    index: int
    approximate: bool = False

    def chain_lengths(self):
        """Multiset of chain lengths implied by ``f``, longest first."""
        out = []
        for l in sorted(self.f, reverse=True):
            count = self.f[l] - self.f.get(l + 1, 0)
            out.extend([l] * max(count, 0))
        return out


def _eigenspace_from_dims(dims, n, l_max):
    """Eigenspace dimension, index and approximation flag from a dims sequence.

    ``dims`` may stop early; the rules mirror those of
    :func:`kernel_dim_profile`: stop at the first vanishing ``f(l)``, or,
    when ``f`` starts increasing, take ``dims[l-1]`` at the turn and flag
    the profile approximate.
    """
    f = {l: dims[l] - dims[l - 1] for l in range(1, len(dims))}
    for l in range(1, len(dims)):
        if f[l] == 0:
            return dims[l - 1], l - 1, False
        if l >= 3 and f[l] > f[l - 1]:
            return dims[l - 1], l - 1, True
    return dims[-1], len(dims) - 1, dims[-1] != n


def kernel_dim_profile(A, lam, l_max=None, tol=SUBSPACE_TOL, method="deflate"):
    """Profile ``dim Ker(A - lam I)^l`` for increasing ``l``.

    Parameters
    ----------
    A : (N, N) array_like
    lam : complex
    l_max : int, optional
        Largest power examined; defaults to ``N + 1``.
    tol : float
        Singular values at most ``tol * ||A - lam I||_2`` count as zero.
    method : {"deflate", "power"}
        ``"deflate"`` gets ``Ker(B^l)`` from ``Ker(B^(l-1))`` as the kernel
        of ``B`` followed by the projection off ``Ker(B^(l-1))``; it never
        forms matrix powers. ``"power"`` forms ``B^l`` by repeated
        multiplication, rescaling each product to unit norm.

    Examples
    --------
    >>> p = kernel_dim_profile([[0.0, 1.0], [0.0, 0.0]], 0.0)
    >>> p.dims, p.f[2], p.eigenspace_dim
    ((0, 1, 2, 2), 1, 2)
    """
    A = as_matrix(A, "A", square=True)
    n = A.shape[0]
    l_max = n + 1 if l_max is None else check_int(l_max, "l_max", 1)
    tol = check_positive(tol, "tol")
    if method not in ("deflate", "power"):
        raise InputError(f"unknown method {method!r}")
    dims = [0]
    for basis in _kernel_chain(shifted(A, lam), tol, l_max, method):
        d = basis if isinstance(basis, int) else basis.shape[1]
        dims.append(d)
        l = len(dims) - 1
        if d == n:
            dims.append(n)
            break
        if dims[l] == dims[l - 1]:
            break
        if l >= 3 and dims[l] - dims[l - 1] > dims[l - 1] - dims[l - 2]:
            break
    eig_dim, index, approx = _eigenspace_from_dims(dims, n, l_max)
    f = {l: dims[l] - dims[l - 1] for l in range(1, len(dims))}
    return KernelProfile(complex(lam), tuple(dims), f, eig_dim, index, approx)


def _kernel_chain(B, tol, l_max, method="deflate"):
    """Yield a basis (or, for ``"power"``, the dimension) of ``Ker(B^l)``, l = 1..l_max."""
    n = B.shape[0]
    nb = spectral_norm(B)
    if nb == 0:
        for _ in range(l_max):
            yield np.eye(n, dtype=B.dtype)
        return
    atol = tol * nb
    if method == "power":
        Bn = B / nb
        M = Bn
        for _ in range(l_max):
            s = _singular_values(M)
            yield n if s[0] == 0 else int(np.count_nonzero(s <= tol * s[0]))
            M = M @ Bn
            norm = np.linalg.norm(M)
            if norm > 0:
                M = M / norm
        return
    K = null_space(B, atol)
    yield K
    for _ in range(l_max - 1):
        if K.shape[1] == n:
            yield K
            continue
        M = B - K @ (K.conj().T @ B)
        K = null_space(M, atol)
        yield K


def generalized_eigenspace(A, lam, tol=SUBSPACE_TOL, index=None):
    """Orthonormal basis of ``Ker(A - lam I)^m``, ``m`` the eigenvalue index.

    The kernel recursion runs until the dimension stops growing, or up to
    ``index`` powers when that is given.
    """
    A = as_matrix(A, "A", square=True)
    n = A.shape[0]
    l_max = n + 1 if index is None else check_int(index, "index", 1)
    K = np.zeros((n, 0), dtype=complex)
    for K_l in _kernel_chain(shifted(A, lam), tol, l_max):
        if K_l.shape[1] == K.shape[1] and K.shape[1] > 0:
            break
        K = K_l
        if K.shape[1] == n:
            break
    return K
