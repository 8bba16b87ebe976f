"""scikit-learn style transformers over a graph's spectral components.

``fit`` takes an adjacency matrix (or a :class:`~aimgft.graph.Graph`) and
builds a Fourier basis; ``transform`` maps signals, one per row, to their
coefficients in it.

>>> import numpy as np
>>> A = np.array([[2.0, 0, 0], [0, 0, 1], [0, 0, 0]])
>>> est = InexactGFT().fit(A)
>>> est.project([1.0, 1.0, 1.0]).projections.real
array([[0., 1., 1.],
       [1., 0., 0.]])
"""

import time
import warnings

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_matrix, check_positive
from .aim import (
    CHAIN,
    PROPER,
    aim_transform,
    complete_basis,
    energy_ranking,
    jordan_gft,
    known_eigenvectors,
    spectrum_of,
)
from .chains import assemble_jordan_basis, compute_chains
from .exceptions import BasisRankError, ChainError
from .spectral import DEFAULT_CLUSTER_TOL, SUBSPACE_TOL, generalized_eigenspace


def _left_invariant_basis(A, lam, size):
    """Basis of the left generalized eigenspace of ``lam`` (``size`` columns)."""
    G = generalized_eigenspace(A.conj().T, np.conj(lam))
    if G.shape[1] != size:
        raise BasisRankError(f"left generalized eigenspace of {lam} has dimension {G.shape[1]}", {lam: size})
    return G


def _adjacency(X):
    if hasattr(X, "adjacency") and hasattr(X, "node_count"):
        return X.adjacency()
    return as_matrix(X, "A", square=True)


def _signals(X, n):
    S = np.asarray(getattr(X, "values", X))
    if S.ndim == 1:
        S = S[None, :]
    S = as_matrix(S, "signals")
    if S.shape[1] != n:
        raise ValueError(f"signals have {S.shape[1]} entries, the graph has {n} nodes")
    return S


class _SpectralGFT(TransformerMixin, BaseEstimator):
    def _fit_spectrum(self, X):
        check_positive(self.cluster_tol, "cluster_tol")
        check_positive(self.rank_tol, "rank_tol")
        A = _adjacency(X)
        self.adjacency_ = A
        self.raw_, self.spectrum_ = spectrum_of(A, self.cluster_tol, self.rank_tol)
        self.n_features_in_ = A.shape[0]
        return A

    def transform(self, X):
        """Coefficients ``V^{-1} s`` of each row ``s`` of ``X``."""
        check_is_fitted(self, "basis_")
        S = _signals(X, self.n_features_in_)
        return self.basis_.solve(S.T).T

    def inverse_transform(self, X):
        check_is_fitted(self, "basis_")
        C = np.atleast_2d(np.asarray(X))
        return C @ self.basis_.V.T

    def project(self, s):
        """Per-component projections and energies of one signal."""
        check_is_fitted(self, "basis_")
        return aim_transform(self.basis_, s)

    def energies(self, X):
        """Real component energies, one row per signal."""
        S = _signals(X, self.n_features_in_)
        return np.array([aim_transform(self.basis_, s).real_energies for s in S])

    def rank_components(self, s, threshold=0.6):
        spec = self.project(s)
        return energy_ranking(spec.energies, threshold, total=spec.norm_sq)


class InexactGFT(_SpectralGFT):
    """Projections onto generalized eigenspaces with a completed eigenvector basis.

    The basis keeps one eigenvector per geometric multiplicity and fills the
    single deficient eigenvalue with a basis of the rest of its generalized
    eigenspace, computed in one kernel solve.

    Parameters
    ----------
    cluster_tol : float
        Radius for merging numerically equal eigenvalues.
    rank_tol : float
        Relative threshold for kernels of ``A - lambda I``.

    Attributes
    ----------
    basis_ : Basis
    spectrum_ : Spectrum
    fit_seconds_ : float
        Wall-clock of the basis construction after eigendecomposition.
    """

    def __init__(self, cluster_tol=DEFAULT_CLUSTER_TOL, rank_tol=SUBSPACE_TOL):
        self.cluster_tol = cluster_tol
        self.rank_tol = rank_tol

    def fit(self, X, y=None):
        A = self._fit_spectrum(X)
        t0 = time.perf_counter()
        right, left, labels = known_eigenvectors(A, self.spectrum_, self.raw_, self.rank_tol)
        self.basis_ = complete_basis(right, self.spectrum_, labels, left=left, A=A)
        self.fit_seconds_ = time.perf_counter() - t0
        return self


class JordanGFT(_SpectralGFT):
    """Fourier transform in a Jordan basis built from computed chains.

    Parameters
    ----------
    cluster_tol, rank_tol : float
        As for :class:`InexactGFT`.
    tol_chain : float, optional
        Largest accepted chain link residual; ``1e-8 ||A||_2`` by default.
    retries : int
        Reseeding budget per eigenvalue.
    seed : int
        Seed of the reseeding generator.
    fallback : bool
        When chains cannot be completed, keep the vectors that were found
        and complete the rest as :class:`InexactGFT` does, with a warning.
        The result then has no chain bookkeeping for that eigenvalue.

    Attributes
    ----------
    basis_ : Basis
    chain_sets_ : list of ChainSet
    fell_back_ : bool
    fit_seconds_ : float
    """

    def __init__(
        self,
        cluster_tol=DEFAULT_CLUSTER_TOL,
        rank_tol=SUBSPACE_TOL,
        tol_chain=None,
        retries=10,
        seed=0,
        fallback=False,
    ):
        self.cluster_tol = cluster_tol
        self.rank_tol = rank_tol
        self.tol_chain = tol_chain
        self.retries = retries
        self.seed = seed
        self.fallback = fallback

    def fit(self, X, y=None):
        A = self._fit_spectrum(X)
        t0 = time.perf_counter()
        sets, failed = [], {}
        for i, d in enumerate(self.spectrum_.distinct):
            try:
                sets.append(
                    compute_chains(
                        A,
                        d.value,
                        tol=self.rank_tol,
                        tol_chain=self.tol_chain,
                        retries=self.retries,
                        seed=self.seed,
                    )
                )
            except ChainError as exc:
                if not self.fallback:
                    raise
                failed[i] = exc
        self.fell_back_ = False
        if not failed:
            try:
                self.basis_ = assemble_jordan_basis(self.spectrum_, sets, A)
            except BasisRankError:
                if not self.fallback:
                    raise
                self.fell_back_ = True
        else:
            self.fell_back_ = True
        if self.fell_back_:
            warnings.warn(
                "Jordan chains incomplete; completing the basis from the recovered vectors",
                RuntimeWarning,
                stacklevel=2,
            )
            self.basis_ = self._complete(A, sets, failed)
        self.chain_sets_ = sets
        self.fit_seconds_ = time.perf_counter() - t0
        return self

    def _complete(self, A, sets, failed):
        right, left, labels = known_eigenvectors(A, self.spectrum_, self.raw_, self.rank_tol)
        found = {self.spectrum_.index_of(cs.lam): cs for cs in sets}
        for i, exc in failed.items():
            if exc.partial is not None and exc.partial.chains:
                found[i] = exc.partial
        cols, lefts, labs, prov = [], [], [], []
        for i in range(self.spectrum_.k):
            if i in found:
                cs = found[i]
                vecs = cs.vectors()
                cols.append(vecs)
                d = self.spectrum_.distinct[i]
                lefts.append(left[:, labels == i] if d.algebraic == d.geometric == cs.total else vecs)
                prov.extend(PROPER if k == 0 else CHAIN for C in cs.chains for k in range(C.shape[1]))
            else:
                mask = labels == i
                vecs = right[:, mask]
                cols.append(vecs)
                lefts.append(left[:, mask])
                prov.extend([PROPER] * vecs.shape[1])
            labs.extend([i] * vecs.shape[1])
        labs = np.array(labs)
        V_known = np.hstack(cols)
        left_known = np.hstack(lefts)
        # chain vectors are right vectors; only components with left
        # eigenvectors can act as constraints for the completion
        complete = np.array(
            [i not in found or found[i].total == self.spectrum_.algebraic[i] for i in range(self.spectrum_.k)]
        )
        if complete.all():
            return complete_basis(V_known, self.spectrum_, labs, provenance=prov, A=A)
        target = int(np.nonzero(~complete)[0][0])
        for i in range(self.spectrum_.k):
            if i != target and i in found and self.spectrum_.algebraic[i] > self.spectrum_.geometric[i]:
                left_known[:, labs == i] = _left_invariant_basis(A, self.spectrum_.distinct[i].value, found[i].total)
        return complete_basis(V_known, self.spectrum_, labs, left=left_known, provenance=prov, A=A)

    def chain_projections(self, s):
        """Projections of ``s`` onto each Jordan subspace."""
        check_is_fitted(self, "basis_")
        return jordan_gft(self.basis_, s)
