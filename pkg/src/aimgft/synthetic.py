"""Matrices with prescribed Jordan structure, for tests and benchmarks."""

import numpy as np
import scipy.linalg as sla

from ._validation import check_int, check_positive


def jordan_block(lam, size):
    """``size x size`` Jordan block with ones on the superdiagonal."""
    J = np.diag(np.full(size, lam, dtype=np.result_type(lam, float)))
    J[np.arange(size - 1), np.arange(1, size)] = 1.0
    return J


def jordan_matrix(blocks):
    """Block diagonal of Jordan blocks given as ``(eigenvalue, size)`` pairs.

    Examples
    --------
    >>> jordan_matrix([(0.0, 2), (1.0, 1)])
    array([[0., 1., 0.],
           [0., 0., 0.],
           [0., 0., 1.]])
    """
    return sla.block_diag(*[jordan_block(lam, int(size)) for lam, size in blocks])


def random_basis(n, cond=10.0, rng=None, complex_=False):
    """Random ``n x n`` matrix with condition number ``cond``.

    Singular values are log-spaced between 1 and ``1/cond`` and the
    singular vectors are Haar-random.
    """
    n = check_int(n, "n", 1)
    cond = check_positive(cond, "cond")
    rng = np.random.default_rng(rng)

    def haar():
        Z = rng.standard_normal((n, n))
        if complex_:
            Z = Z + 1j * rng.standard_normal((n, n))
        Q, R = np.linalg.qr(Z)
        return Q * (np.diag(R) / np.abs(np.diag(R)))

    s = np.logspace(0, -np.log10(cond), n) if n > 1 else np.ones(1)
    return (haar() * s) @ haar().conj().T


def conjugated(blocks, cond=10.0, rng=None, complex_=False):
    """``A = P J P^{-1}`` for the Jordan matrix of ``blocks``.

    Returns ``(A, P, J)``.
    """
    J = jordan_matrix(blocks)
    P = random_basis(J.shape[0], cond, rng, complex_)
    A = P @ J @ np.linalg.inv(P)
    if not complex_ and not np.iscomplexobj(J):
        A = A.real
    return A, P, J


def nilpotent_plus_diagonal(p, n, cond=10.0, rng=None, magnitude=(0.5, 1.5)):
    """``A = P (J_p(0) + D) P^{-1}`` with ``D`` an invertible diagonal of size ``n - p``.

    Entries of ``D`` have random sign and magnitude in ``magnitude``, so 0
    is an eigenvalue of index ``p`` and multiplicity ``p``. Returns
    ``(A, P, T)`` with ``T`` the block-diagonal middle factor.
    """
    p = check_int(p, "p", 1)
    n = check_int(n, "n", p)
    rng = np.random.default_rng(rng)
    lo, hi = magnitude
    d = rng.uniform(lo, hi, n - p) * rng.choice([-1.0, 1.0], n - p)
    T = sla.block_diag(jordan_block(0.0, p), np.diag(d)) if n > p else jordan_block(0.0, p)
    P = random_basis(n, cond, rng)
    return P @ T @ np.linalg.inv(P), P, T
