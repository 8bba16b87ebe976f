"""Generalized-eigenspace projections and the basis they are computed in.

A :class:`Basis` holds an invertible ``V`` whose columns are grouped by
distinct eigenvalue. The projection of a signal onto component ``i`` is
``V_i alpha_i`` where ``alpha = V^{-1} s``; summing over components
reconstructs ``s``. Energies pair ``alpha_i`` with ``beta_i = V_i^H s`` so
that they add up to ``||s||^2`` for any invertible ``V``.

Only the span of each ``V_i`` matters for the projections, which is why
:func:`complete_basis` may fill a deficient component with any basis of the
missing part of its generalized eigenspace instead of Jordan chains.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ._validation import as_matrix, as_vector, check_fraction, check_positive
from .exceptions import (
    IllConditionedBasisWarning,
    InputError,
    NumericalError,
    SpectralAmbiguityError,
)
from .spectral import (
    DEFAULT_CLUSTER_TOL,
    SUBSPACE_TOL,
    _singular_values,
    _svd,
    cluster_eigenvalues,
    eigendecompose,
    generalized_eigenspace,
    kernel_basis,
    shifted,
)

PROPER = "proper"
CHAIN = "chain"
COMPLETION = "completion"

COND_WARN = 1e8
TOL_PROJ = 1e-10


@dataclass(frozen=True)
class Component:
    """Columns ``start:stop`` of a basis, all belonging to ``eigenvalue``."""

    eigenvalue: complex
    start: int
    stop: int
    provenance: tuple = ()

    @property
    def size(self):
        return self.stop - self.start

    @property
    def columns(self):
        return slice(self.start, self.stop)


class Basis:
    """Invertible basis partitioned into eigenvalue components.

    Parameters
    ----------
    V : (N, N) array_like
    components : sequence of Component
        Contiguous, in column order, covering all ``N`` columns.
    chains : sequence of (component, start, stop), optional
        Column ranges of Jordan chains, when the basis is a Jordan basis.

    Raises
    ------
    NumericalError
        If ``V`` is numerically singular.
    """

    def __init__(self, V, components, chains=None):
        V = as_matrix(V, "V", square=True)
        n = V.shape[0]
        pos = 0
        for c in components:
            if c.start != pos or c.stop <= c.start:
                raise InputError("components must be contiguous and non-empty")
            if c.provenance and len(c.provenance) != c.size:
                raise InputError("provenance length must match component size")
            pos = c.stop
        if pos != n:
            raise InputError(f"components cover {pos} of {n} columns")
        s = _singular_values(V)
        if s[-1] <= n * np.finfo(float).eps * s[0]:
            raise NumericalError("basis matrix is numerically singular")
        self.V = V
        self.components = tuple(components)
        self.chains = None if chains is None else tuple(tuple(c) for c in chains)
        self.conditioning = float(s[0] / s[-1])
        self._lu = None

    @classmethod
    def from_blocks(cls, V, sizes, eigenvalues, provenance=None, chains=None):
        """Build from component sizes; ``provenance`` is one tag per column."""
        components = []
        start = 0
        for size, lam in zip(sizes, eigenvalues):
            prov = tuple(provenance[start : start + size]) if provenance is not None else ()
            components.append(Component(complex(lam), start, start + size, prov))
            start += size
        return cls(V, components, chains)

    def __repr__(self):
        return f"Basis(n={self.n}, k={self.k}, cond={self.conditioning:.3g})"

    @property
    def n(self):
        return self.V.shape[0]

    @property
    def k(self):
        return len(self.components)

    @property
    def eigenvalues(self):
        return np.array([c.eigenvalue for c in self.components], dtype=complex)

    @property
    def sizes(self):
        return [c.size for c in self.components]

    @property
    def provenance(self):
        out = []
        for c in self.components:
            out.extend(c.provenance or (PROPER,) * c.size)
        return out

    @property
    def is_jordan(self):
        return self.chains is not None and COMPLETION not in self.provenance

    def component_matrix(self, i):
        return self.V[:, self.components[i].columns]

    def solve(self, S):
        """``V^{-1} S`` through a cached LU factorization."""
        if self._lu is None:
            self._lu = sla.lu_factor(self.V, check_finite=False)
        return sla.lu_solve(self._lu, S, check_finite=False)

    def jordan_matrix(self):
        """Jordan matrix implied by the chain bookkeeping."""
        if self.chains is None:
            raise InputError("basis has no Jordan chain bookkeeping")
        dtype = np.result_type(self.V.dtype, self.eigenvalues.dtype)
        if np.all(self.eigenvalues.imag == 0):
            dtype = self.V.dtype
        J = np.zeros((self.n, self.n), dtype=dtype)
        for comp, start, stop in self.chains:
            lam = self.components[comp].eigenvalue
            idx = np.arange(start, stop)
            J[idx, idx] = lam if np.iscomplexobj(J) else lam.real
            J[idx[:-1], idx[1:]] = 1.0
        return J


@dataclass(frozen=True, eq=False)
class AimSpectrum:
    """Projections of one signal onto every component.

    ``energies`` are complex; their real parts sum to ``norm_sq`` and the
    imaginary parts to zero, up to rounding.
    """

    eigenvalues: np.ndarray
    projections: np.ndarray
    energies: np.ndarray
    alphas: tuple
    betas: tuple
    norm_sq: float
    residual: float
    tol: float
    conditioning: float

    @property
    def k(self):
        return len(self.eigenvalues)

    @property
    def real_energies(self):
        return self.energies.real

    @property
    def fractions(self):
        total = self.norm_sq if self.norm_sq > 0 else 1.0
        return self.energies.real / total

    def reconstruction(self):
        return self.projections.sum(axis=0)

    def to_dict(self):
        return {
            "norm_sq": self.norm_sq,
            "residual": self.residual,
            "tol": self.tol,
            "conditioning": self.conditioning,
            "components": [
                {
                    "index": i,
                    "eigenvalue": {"re": float(lam.real), "im": float(lam.imag)},
                    "energy": float(e.real),
                    "energy_imag": float(e.imag),
                    "fraction": float(f),
                    "projection_norm": float(np.linalg.norm(p)),
                }
                for i, (lam, e, f, p) in enumerate(
                    zip(self.eigenvalues, self.energies, self.fractions, self.projections)
                )
            ],
        }


def projection_tol(conditioning):
    """Relative tolerance for projector identities; grows with ``cond(V)`` past 1e8."""
    return TOL_PROJ * max(1.0, conditioning / COND_WARN)


def _warn_conditioning(basis, threshold=COND_WARN):
    if basis.conditioning > threshold:
        warnings.warn(
            f"basis condition number {basis.conditioning:.3e} exceeds {threshold:g}; "
            "projections may be inaccurate",
            IllConditionedBasisWarning,
            stacklevel=3,
        )


def component_projector(basis, i, cond_threshold=COND_WARN):
    """Matrix ``Z_i = V_i (V^{-1})_i`` projecting onto component ``i``."""
    _warn_conditioning(basis, cond_threshold)
    cols = basis.components[i].columns
    inv_rows = basis.solve(np.eye(basis.n, dtype=basis.V.dtype))[cols]
    return basis.V[:, cols] @ inv_rows


def aim_transform(basis, s, cond_threshold=COND_WARN):
    """Project ``s`` onto each generalized eigenspace of ``basis``.

    Uses one LU solve for ``alpha = V^{-1} s`` and reads each projection off
    its block: ``V_i alpha_i``.

    Examples
    --------
    >>> b = Basis.from_blocks([[1.0, 1.0], [0.0, 1.0]], [1, 1], [0.0, 1.0])
    >>> aim_transform(b, [1.0, 1.0]).projections
    array([[0., 0.],
           [1., 1.]])
    """
    s = as_vector(s, basis.n)
    _warn_conditioning(basis, cond_threshold)
    alpha = basis.solve(s)
    beta = basis.V.conj().T @ s
    alphas, betas, projections, energies = [], [], [], []
    for c in basis.components:
        a, b = alpha[c.columns], beta[c.columns]
        alphas.append(a)
        betas.append(b)
        projections.append(basis.V[:, c.columns] @ a)
        energies.append(np.vdot(b, a))
    projections = np.array(projections)
    norm_sq = float(np.vdot(s, s).real)
    residual = float(np.linalg.norm(s - projections.sum(axis=0)))
    return AimSpectrum(
        basis.eigenvalues,
        projections,
        np.array(energies, dtype=complex),
        tuple(alphas),
        tuple(betas),
        norm_sq,
        residual,
        projection_tol(basis.conditioning),
        basis.conditioning,
    )


def exact_gft(basis, s):
    """Coefficients ``V^{-1} s`` of ``s`` in the basis."""
    if not isinstance(basis, Basis):
        V = as_matrix(basis, "V", square=True)
        s = as_vector(s, V.shape[0])
        return sla.solve(V, s)
    return basis.solve(as_vector(s, basis.n))


@dataclass(frozen=True, eq=False)
class ChainProjection:
    component: int
    start: int
    stop: int
    coefficients: np.ndarray
    projection: np.ndarray


def jordan_gft(basis, s):
    """Per-chain projections of ``s`` in a Jordan basis.

    Raises
    ------
    InputError
        If ``basis`` carries completion columns or no chain bookkeeping;
        those bases only support per-component projections.
    """
    if not basis.is_jordan:
        raise InputError("basis has no Jordan chains; use aim_transform for per-component projections")
    s = as_vector(s, basis.n)
    alpha = basis.solve(s)
    return [
        ChainProjection(comp, start, stop, alpha[start:stop], basis.V[:, start:stop] @ alpha[start:stop])
        for comp, start, stop in basis.chains
    ]


@dataclass(frozen=True, eq=False)
class DualPair:
    """Coefficients of ``s`` for ``V`` and its dual ``W = V^{-H}``."""

    V: np.ndarray
    W: np.ndarray
    coeffs_V: np.ndarray
    coeffs_W: np.ndarray

    def inner(self):
        """``<coeffs_V, coeffs_W> = coeffs_W^H coeffs_V``, equal to ``||s||^2``."""
        return complex(np.vdot(self.coeffs_W, self.coeffs_V))


def dual_basis(V, s):
    """Dual basis ``W = V^{-H}`` with both coefficient vectors of ``s``.

    The coefficients of ``s`` in ``W`` are ``W^{-1} s = V^H s``.
    """
    V = V.V if isinstance(V, Basis) else as_matrix(V, "V", square=True)
    s = as_vector(s, V.shape[0])
    lu = sla.lu_factor(V, check_finite=False)
    W = sla.lu_solve(lu, np.eye(V.shape[0], dtype=V.dtype), trans=0, check_finite=False).conj().T
    return DualPair(V, W, sla.lu_solve(lu, s, check_finite=False), V.conj().T @ s)


def component_energy(basis, s, i):
    """Complex energy ``beta_i^H alpha_i`` of ``s`` on component ``i``."""
    s = as_vector(s, basis.n)
    cols = basis.components[i].columns
    return complex(np.vdot(basis.V[:, cols].conj().T @ s, basis.solve(s)[cols]))


@dataclass(frozen=True)
class EnergyRanking:
    order: list
    selected: list
    fractions: np.ndarray
    cumulative: np.ndarray
    has_negative: bool


def energy_ranking(energies, threshold, total=None):
    """Components by decreasing energy and the fewest reaching ``threshold``.

    Energies are real parts; ``total`` defaults to their sum. A component
    with negative energy can occur for non-orthogonal bases and is flagged.

    Examples
    --------
    >>> energy_ranking([0.1, 0.6, 0.3], 0.8).selected
    [1, 2]
    """
    threshold = check_fraction(threshold, "threshold")
    e = np.real(np.asarray(energies, dtype=complex))
    total = float(e.sum()) if total is None else check_positive(total, "total")
    if total <= 0:
        raise InputError("total energy must be positive")
    order = [int(i) for i in np.argsort(-e, kind="stable")]
    fractions = e / total
    cumulative = np.cumsum(fractions[order])
    hit = np.nonzero(cumulative >= threshold - 1e-12)[0]
    count = int(hit[0]) + 1 if hit.size else len(order)
    return EnergyRanking(order, order[:count], fractions, cumulative, bool(np.any(e < 0)))


def known_eigenvectors(A, spectrum, raw=None, rank_tol=SUBSPACE_TOL):
    """Right and left eigenvectors for every component, with column labels.

    Simple eigenvalues reuse the solver's vectors when ``raw`` is given;
    repeated ones take orthonormal bases of ``Ker(A - lam I)`` and
    ``Ker((A - lam I)^H)``.

    Returns
    -------
    right, left : (N, sum g_i) ndarray
    labels : ndarray of int
    """
    A = as_matrix(A, "A", square=True)
    rights, lefts, labels = [], [], []
    for i, d in enumerate(spectrum.distinct):
        if d.algebraic == 1 and raw is not None and raw.left_eigenvectors is not None:
            m = d.members[0]
            r = raw.eigenvectors[:, [m]]
            l = raw.left_eigenvectors[:, [m]]
        else:
            B = shifted(A, d.value)
            r = kernel_basis(B, rank_tol)
            l = kernel_basis(B.conj().T, rank_tol)
            if r.shape[1] != d.geometric or l.shape[1] != d.geometric:
                raise SpectralAmbiguityError(
                    f"kernel of A - lam I for {d.value} has dimension {r.shape[1]}, expected {d.geometric}"
                )
        rights.append(r)
        lefts.append(l)
        labels.extend([i] * r.shape[1])
    dtype = np.result_type(*rights, *lefts)
    return (
        np.hstack(rights).astype(dtype),
        np.hstack(lefts).astype(dtype),
        np.array(labels, dtype=int),
    )


def _scale_completion(A, lam, known, completion):
    """Shrink completion columns whose variation exceeds the eigenvector bound.

    Column ``v`` is scaled so ``||v - A v||_1 <= (|1 - lam| + 1) r`` with ``r``
    the largest 1-norm among the known columns; the block's normalized
    variation then stays within the bound of a Jordan basis.
    """
    if known.shape[1] == 0 or completion.shape[1] == 0:
        return completion
    ref = np.abs(known).sum(axis=0).max()
    cap = (abs(1 - lam) + 1) * ref
    var = np.abs(completion - A @ completion).sum(axis=0)
    scale = np.where(var > cap, cap / np.where(var > 0, var, 1.0), 1.0)
    return completion * scale


def complete_basis(V_known, spectrum, labels=None, left=None, provenance=None, tol=None, A=None):
    """Fill the one deficient component with a basis of its missing part.

    The completion is a single kernel computation: the vectors orthogonal to
    the left eigenvectors of every other component span exactly the
    deficient generalized eigenspace, and also requiring orthogonality to
    its known right vectors leaves a complement of them inside it.

    Parameters
    ----------
    V_known : (N, c) array_like
        Known basis vectors, for example one eigenvector per geometric
        multiplicity.
    spectrum : Spectrum
    labels : array_like of int, optional
        Component index of each known column. May be omitted when the
        spectrum has a single component.
    left : (N, c) array_like, optional
        Left vectors aligned with ``V_known``; only the columns of complete
        components are used. Without them the right vectors stand in, which
        is exact only when the components are mutually orthogonal.
    provenance : sequence of str, optional
        Tags for the known columns; ``proper`` by default.
    tol : float, optional
        Relative rank threshold for the kernel; ``N * eps`` by default.
    A : (N, N) array_like, optional
        The matrix itself. When given, completion columns are rescaled so
        that none varies more under ``A`` than a Jordan chain vector of the
        same eigenvalue could; the span is unchanged.

    Returns
    -------
    Basis
        Columns grouped by component; the completion follows the known
        columns of its component and is tagged ``completion``.
    """
    V_known = as_matrix(V_known, "V_known")
    n, c = V_known.shape
    if n != spectrum.n:
        raise InputError(f"V_known has {n} rows, spectrum has {spectrum.n} eigenvalues")
    if labels is None:
        if spectrum.k != 1:
            raise InputError("labels are required when the spectrum has several components")
        labels = np.zeros(c, dtype=int)
    labels = np.asarray(labels, dtype=int).reshape(-1)
    if labels.size != c or labels.min(initial=0) < 0 or labels.max(initial=0) >= spectrum.k:
        raise InputError("labels must give a component index for every known column")
    provenance = [PROPER] * c if provenance is None else list(provenance)
    if len(provenance) != c:
        raise InputError("provenance must have one tag per known column")
    counts = np.bincount(labels, minlength=spectrum.k)
    deficit = np.array(spectrum.algebraic) - counts
    if np.any(deficit < 0):
        i = int(np.nonzero(deficit < 0)[0][0])
        raise SpectralAmbiguityError(
            f"component {i} has {counts[i]} known vectors but algebraic multiplicity {spectrum.algebraic[i]}"
        )
    missing = [i for i in range(spectrum.k) if deficit[i] > 0]
    if len(missing) > 1:
        raise SpectralAmbiguityError(
            f"{len(missing)} components are incomplete; completion supports exactly one"
        )

    completion = np.zeros((n, 0), dtype=V_known.dtype)
    target = missing[0] if missing else None
    if target is not None:
        cons = V_known.copy()
        if left is not None:
            left = as_matrix(left, "left")
            if left.shape != V_known.shape:
                raise InputError("left must have the same shape as V_known")
            others = labels != target
            cons = cons.astype(np.result_type(cons, left))
            cons[:, others] = left[:, others]
        M = cons.conj().T
        tol = n * np.finfo(float).eps if tol is None else check_positive(tol, "tol")
        _, s, Vh = _svd(M)
        rank = int(np.count_nonzero(s > tol * s[0])) if s.size and s[0] > 0 else 0
        completion = Vh[rank:].conj().T
        if completion.shape[1] != deficit[target]:
            raise NumericalError(
                f"completion kernel has dimension {completion.shape[1]}, "
                f"expected {deficit[target]} for eigenvalue {spectrum.distinct[target].value}"
            )
        if A is not None:
            A = as_matrix(A, "A", square=True)
            completion = _scale_completion(
                A, spectrum.distinct[target].value, V_known[:, labels == target], completion
            )

    dtype = np.result_type(V_known, completion)
    blocks, components, start = [], [], 0
    for i, d in enumerate(spectrum.distinct):
        idx = np.nonzero(labels == i)[0]
        cols = [V_known[:, idx]]
        prov = [provenance[j] for j in idx]
        if i == target:
            cols.append(completion)
            prov.extend([COMPLETION] * completion.shape[1])
        block = np.hstack(cols).astype(dtype)
        blocks.append(block)
        components.append(Component(d.value, start, start + block.shape[1], tuple(prov)))
        start += block.shape[1]
    return Basis(np.hstack(blocks), components)


def eigenspace_angles(A, basis, rank_tol=SUBSPACE_TOL):
    """Largest principal angle between each basis component and its generalized eigenspace."""
    A = as_matrix(A, "A", square=True)
    angles = []
    for c in basis.components:
        G = generalized_eigenspace(A, c.eigenvalue, tol=rank_tol)
        Vi = basis.V[:, c.columns]
        if G.shape[1] != Vi.shape[1]:
            angles.append(np.pi / 2)
        else:
            angles.append(float(np.max(sla.subspace_angles(Vi, G))))
    return angles


def check_g_equivalence(A, B, tol=1e-6, cluster_tol=DEFAULT_CLUSTER_TOL, rank_tol=SUBSPACE_TOL):
    """Whether ``A`` and ``B`` share their spectrum and generalized eigenspaces.

    Both spectra are clustered with ``cluster_tol``; distinct values must
    agree within ``tol`` with equal algebraic and geometric multiplicities,
    and the principal angles between ``Ker(A - lam I)^m`` and
    ``Ker(B - lam I)^m`` must all be at most ``tol``.

    Examples
    --------
    >>> check_g_equivalence(np.diag([1.0, 2.0]), np.diag([1.0, 3.0]))
    False
    """
    A = as_matrix(A, "A", square=True)
    B = as_matrix(B, "B", square=True)
    if A.shape != B.shape:
        return False
    _, sa = spectrum_of(A, cluster_tol, rank_tol)
    _, sb = spectrum_of(B, cluster_tol, rank_tol)
    if sa.k != sb.k:
        return False
    for da in sa.distinct:
        j = int(np.argmin(np.abs(sb.eigenvalues - da.value)))
        db = sb.distinct[j]
        if abs(db.value - da.value) > max(tol, cluster_tol) or (da.algebraic, da.geometric) != (
            db.algebraic,
            db.geometric,
        ):
            return False
        Ga = generalized_eigenspace(A, da.value, tol=rank_tol)
        Gb = generalized_eigenspace(B, db.value, tol=rank_tol)
        if Ga.shape[1] != da.algebraic or Gb.shape[1] != db.algebraic:
            return False
        if np.max(sla.subspace_angles(Ga, Gb)) > tol:
            return False
    return True


def spectrum_of(A, cluster_tol=DEFAULT_CLUSTER_TOL, rank_tol=SUBSPACE_TOL, **kwargs):
    """Eigendecompose and cluster ``A`` in one call; returns ``(raw, spectrum)``."""
    A = as_matrix(A, "A", square=True)
    raw = eigendecompose(A)
    return raw, cluster_eigenvalues(raw, A, cluster_tol=cluster_tol, rank_tol=rank_tol, **kwargs)


def projection_agreement(first, second):
    """Largest componentwise difference between two decompositions of one signal.

    Components are matched by nearest eigenvalue, so the two bases may list
    them in different orders.
    """
    if first.k != second.k:
        return float("inf")
    worst = 0.0
    for i, lam in enumerate(first.eigenvalues):
        j = int(np.argmin(np.abs(second.eigenvalues - lam)))
        worst = max(worst, float(np.max(np.abs(first.projections[i] - second.projections[j]))))
    return worst
