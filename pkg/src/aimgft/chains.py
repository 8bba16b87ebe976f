"""Jordan chains: construction, validation, basis assembly and a cost model.

A Jordan chain of ``lambda`` is ``v_0, v_1, ...`` with ``(A - lambda I) v_0 = 0``
and ``(A - lambda I) v_k = v_{k-1}``. :func:`compute_chains` builds them
bottom-up: each tip that lies in the range of ``B = A - lambda I`` is
extended by the pseudoinverse, ``v_k = B^+ v_{k-1}``.

Two details make the bottom-up loop reliable. Seeds are not an arbitrary
kernel basis: a chain of length ``L`` must start in ``Ker B cap Range B^(L-1)``,
so the kernel basis is split along those nested subspaces. And the
pseudoinverse returns the minimum-norm solution, which can leave the range
that the next extension needs; the solution is moved by a kernel vector
into ``Range B^r``, where ``r`` is the number of extensions still to come.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_matrix, check_int, check_positive
from .aim import CHAIN, PROPER, Basis, Component
from .exceptions import BasisRankError, ChainError, InputError, NumericalError
from .spectral import SUBSPACE_TOL, _svd, numerical_rank, shifted, spectral_norm

K_SVD = 4
K_SVD_CUBIC = 22


@dataclass(frozen=True, eq=False)
class ChainSet:
    """Jordan chains of one eigenvalue.

    ``chains[j]`` is an ``(N, L_j)`` array with columns ``v_0 .. v_{L_j - 1}``;
    ``residuals[j][k]`` is ``||B v_k - v_{k-1}||`` (``v_{-1} = 0``).
    ``truncated`` means longer chains exist than ``max_len`` allowed.
    """

    lam: complex
    chains: tuple
    residuals: tuple
    truncated: bool = False
    chain_counts: dict = field(default_factory=dict)

    @property
    def lengths(self):
        return [c.shape[1] for c in self.chains]

    @property
    def total(self):
        return sum(self.lengths)

    @property
    def proper_count(self):
        return len(self.chains)

    def vectors(self):
        if not self.chains:
            return None
        return np.hstack(self.chains)

    def max_residual(self):
        return max((float(r.max()) for r in self.residuals if r.size), default=0.0)

    def to_manifest(self):
        lam = complex(self.lam)
        return {
            "eigenvalue": {"re": lam.real, "im": lam.imag},
            "chain_lengths": self.lengths,
            "residuals": [[float(x) for x in r] for r in self.residuals],
            "truncated": self.truncated,
        }


def _link_residuals(B, chain):
    res = np.empty(chain.shape[1])
    res[0] = np.linalg.norm(B @ chain[:, 0])
    for k in range(1, chain.shape[1]):
        res[k] = np.linalg.norm(B @ chain[:, k] - chain[:, k - 1])
    return res


def chain_residual(A, lam, chains):
    """Largest ``||(A - lam I) v_k - v_{k-1}||`` over all links, 0 when empty.

    ``chains`` is a :class:`ChainSet` or a sequence of ``(N, L)`` arrays.
    """
    items = chains.chains if isinstance(chains, ChainSet) else chains
    if not len(items):
        return 0.0
    A = as_matrix(A, "A", square=True)
    B = shifted(A, lam)
    return max(float(_link_residuals(B, np.atleast_2d(np.asarray(c).T).T).max()) for c in items)


class _ExtendFailure(Exception):
    def __init__(self, level, group):
        super().__init__(level)
        self.level = level
        self.group = group


def _orthonormal(M):
    Q, _ = np.linalg.qr(M)
    return Q


def _split_kernel(K, ranges, counts, range_tol):
    """Kernel coordinates split by the longest chain each seed can start.

    ``ranges[j]`` is an orthonormal basis of ``Range B^j`` (``None`` for j=0)
    and ``counts[l]`` the number of chains of length at least ``l``. Returns
    ``{length: (g, c) coordinate block}`` with mutually orthonormal blocks.
    """
    g = K.shape[1]
    longest = max(counts)
    acc = np.zeros((g, 0), dtype=K.dtype)
    groups = {}
    for j in range(longest - 1, -1, -1):
        need = counts[j + 1]
        if j == 0:
            C = np.eye(g, dtype=K.dtype)
        else:
            Q = ranges[j]
            M = K - Q @ (Q.conj().T @ K)
            _, s, Vh = _svd(M)
            C = Vh[g - need:].conj().T
            smallest = np.sort(np.concatenate([s, np.zeros(g - s.size)]))[:need]
            if smallest.size and smallest.max() > range_tol:
                raise _ExtendFailure(j + 1, j + 1)
        C = C - acc @ (acc.conj().T @ C)
        new = need - acc.shape[1]
        if new <= 0:
            continue
        U, _, _ = np.linalg.svd(C, full_matrices=False)
        block = U[:, :new]
        groups[j + 1] = block
        acc = np.hstack([acc, block])
    return groups


def compute_chains(
    A,
    lam,
    max_len=None,
    seed_kernel=None,
    *,
    known=None,
    tol=SUBSPACE_TOL,
    range_tol=1e-6,
    tol_chain=None,
    retries=10,
    seed=0,
):
    """Jordan chains of ``lam`` by pseudoinverse extension of kernel seeds.

    Parameters
    ----------
    A : (N, N) array_like
    lam : complex
        A distinct eigenvalue of ``A`` (for instance a cluster centroid).
    max_len : int, optional
        Longest chain to build; defaults to the eigenvalue index.
    seed_kernel : (N, g) array_like, optional
        Columns spanning ``Ker(A - lam I)``; computed when omitted.
    known : (N, c) array_like, optional
        Basis vectors of the other eigenvalues. Every appended chain vector
        is checked for linear independence against these and the vectors
        already accepted.
    tol : float
        Relative rank threshold for ``A - lam I``, its pseudoinverse, and the
        ranges of its powers.
    range_tol : float
        A tip ``v`` lies in ``Range(A - lam I)`` when
        ``||(I - QQ^H) v|| <= range_tol * ||v||``.
    tol_chain : float, optional
        Largest accepted link residual; ``1e-8 * ||A||_2`` by default.
    retries : int
        Reseeding budget. After a failure the seeds of the failing chain
        length are recombined by a random unitary and the loop restarts.
    seed : int
        Seed for the reseeding generator.

    Returns
    -------
    ChainSet

    Raises
    ------
    ChainError
        When the reseeding budget is exhausted; ``partial`` holds the chains
        accepted in the last attempt.
    """
    A = as_matrix(A, "A", square=True)
    n = A.shape[0]
    tol = check_positive(tol, "tol")
    range_tol = check_positive(range_tol, "range_tol")
    retries = check_int(retries, "retries", 0)
    B = shifted(A, lam)
    normA = spectral_norm(A)
    tol_chain = 1e-8 * max(normA, 1.0) if tol_chain is None else check_positive(tol_chain, "tol_chain")

    U, s, Vh = _svd(B)
    nb = float(s[0]) if s.size else 0.0
    r1 = int(np.count_nonzero(s > tol * nb)) if nb > 0 else 0

    if seed_kernel is None:
        K = Vh[r1:].conj().T
    else:
        K = _orthonormal(as_matrix(seed_kernel, "seed_kernel").astype(B.dtype))
        if K.shape[0] != n:
            raise InputError("seed_kernel has the wrong number of rows")
        if nb > 0 and np.linalg.norm(B @ K, 2) > range_tol * nb:
            raise InputError("seed_kernel columns are not in Ker(A - lam I)")
        if K.shape[1] != n - r1:
            raise InputError(f"seed_kernel has {K.shape[1]} columns, kernel dimension is {n - r1}")
    g = K.shape[1]
    if g == 0:
        raise InputError(f"{lam} is not an eigenvalue: A - lam I has full numerical rank")

    cap = n if max_len is None else check_int(max_len, "max_len", 1)
    R = Vh[:r1].conj().T @ (U[:, :r1].conj().T / s[:r1, None]) if r1 else np.zeros_like(B)

    ranges = [None, U[:, :r1]]
    ranks = [n, r1]
    while len(ranks) <= cap + 1 and ranks[-1] < ranks[-2] and ranks[-1] > 0:
        Qp = ranges[-1]
        Uj, sj, _ = np.linalg.svd(B @ Qp, full_matrices=False)
        rj = int(np.count_nonzero(sj > tol * nb))
        ranges.append(Uj[:, :rj])
        ranks.append(rj)
    dims = [n - r for r in ranks]
    counts = {l: dims[l] - dims[l - 1] for l in range(1, len(dims)) if dims[l] - dims[l - 1] > 0}
    counts[1] = g
    longest = max(counts)
    truncated = longest > cap
    if truncated:
        counts = {l: c for l, c in counts.items() if l <= cap}
        longest = cap

    known = None if known is None else as_matrix(known, "known")
    rng = np.random.default_rng(seed)
    groups = None
    last_partial = ()
    failure = None
    for _ in range(retries + 1):
        accepted = []
        try:
            if groups is None:
                groups = _split_kernel(K, ranges, counts, range_tol)
            _extend_all(B, K, R, ranges, groups, known, range_tol, tol_chain, accepted)
            return ChainSet(
                complex(lam),
                tuple(c for c, _ in accepted),
                tuple(r for _, r in accepted),
                truncated,
                dict(counts),
            )
        except _ExtendFailure as exc:
            failure = exc
            last_partial = tuple(accepted)
            if groups is None or exc.group not in groups:
                break
            block = groups[exc.group]
            c = block.shape[1]
            Z = rng.standard_normal((c, c))
            if np.iscomplexobj(block):
                Z = Z + 1j * rng.standard_normal((c, c))
            Qz, _ = np.linalg.qr(Z)
            groups = dict(groups)
            groups[exc.group] = block @ Qz
    partial = ChainSet(
        complex(lam),
        tuple(c for c, _ in last_partial),
        tuple(r for _, r in last_partial),
        truncated,
        dict(counts),
    )
    level = failure.level if failure is not None else None
    raise ChainError(
        f"could not build the chains of length {level} predicted for eigenvalue {lam} "
        f"after {retries} reseeding attempt(s)",
        level=level,
        partial=partial,
    )


def _extend_all(B, K, R, ranges, groups, known, range_tol, tol_chain, accepted):
    Q1 = ranges[1]
    cols = [] if known is None else [known]
    count = 0 if known is None else known.shape[1]
    for length in sorted(groups, reverse=True):
        for coords in groups[length].T:
            v = K @ coords
            chain = [v]
            count += 1
            _check_independent(cols, chain, count, length)
            for t in range(1, length):
                tip = chain[-1]
                miss = np.linalg.norm(tip - Q1 @ (Q1.conj().T @ tip))
                if miss > range_tol * np.linalg.norm(tip):
                    raise _ExtendFailure(t + 1, length)
                w = R @ tip
                remaining = length - 1 - t
                if remaining > 0:
                    Q = ranges[remaining]
                    Pw = w - Q @ (Q.conj().T @ w)
                    PK = K - Q @ (Q.conj().T @ K)
                    coef, *_ = np.linalg.lstsq(PK, -Pw, rcond=None)
                    w = w + K @ coef
                chain.append(w)
                count += 1
                _check_independent(cols, chain, count, length)
            C = np.column_stack(chain)
            res = _link_residuals(B, C)
            if res.max() > tol_chain:
                raise _ExtendFailure(length, length)
            cols.append(C)
            accepted.append((C, res))


def _check_independent(cols, chain, count, length):
    M = np.column_stack(cols + [np.column_stack(chain)]) if cols else np.column_stack(chain)
    if numerical_rank(M) < count:
        raise _ExtendFailure(len(chain), length)


def assemble_jordan_basis(spectrum, chain_sets, A=None, tol_basis=1e-8):
    """Stack chains into a Jordan basis ordered by distinct eigenvalue.

    Chains stay contiguous; the first column of each chain is tagged
    ``proper`` and the rest ``chain``. With ``A`` supplied the result must
    satisfy ``||A V - V J||_F <= tol_basis * ||A||_F`` for the implied Jordan
    matrix ``J``.

    Raises
    ------
    BasisRankError
        If some eigenvalue has fewer vectors than its algebraic multiplicity
        or the union is numerically rank deficient.
    """
    by_component = {}
    for cs in chain_sets:
        i = spectrum.index_of(cs.lam, tol=max(spectrum.cluster_tol, 1e-8 * (1 + abs(cs.lam))))
        if i in by_component:
            raise InputError(f"two chain sets for eigenvalue {spectrum.distinct[i].value}")
        by_component[i] = cs
    missing = {}
    for i, d in enumerate(spectrum.distinct):
        have = by_component[i].total if i in by_component else 0
        if have < d.algebraic:
            missing[d.value] = d.algebraic - have
        elif have > d.algebraic:
            raise InputError(f"eigenvalue {d.value} has {have} vectors for multiplicity {d.algebraic}")
    if missing:
        desc = ", ".join(f"{lam:.6g}: {c}" for lam, c in missing.items())
        raise BasisRankError(f"missing vectors per eigenvalue ({desc})", missing)

    blocks, components, chains = [], [], []
    start = 0
    for i, d in enumerate(spectrum.distinct):
        cs = by_component[i]
        prov = []
        cstart = start
        for C in cs.chains:
            blocks.append(C)
            chains.append((i, start, start + C.shape[1]))
            prov.extend([PROPER] + [CHAIN] * (C.shape[1] - 1))
            start += C.shape[1]
        components.append(Component(d.value, cstart, start, tuple(prov)))
    V = np.hstack(blocks)
    n = V.shape[0]
    if numerical_rank(V) < n:
        raise BasisRankError("assembled Jordan vectors are numerically dependent", {})
    basis = Basis(V, tuple(components), tuple(chains))
    if A is not None:
        A = as_matrix(A, "A", square=True)
        J = basis.jordan_matrix()
        nA = np.linalg.norm(A)
        res = np.linalg.norm(A @ V - V @ J)
        if nA > 0 and res > tol_basis * nA:
            raise NumericalError(f"Jordan basis residual {res / nA:.3e} exceeds {tol_basis:g}")
    return basis


def jordan_residual(A, basis):
    """``||A V - V J||_F / ||A||_F`` for a basis carrying chain bookkeeping."""
    A = as_matrix(A, "A", square=True)
    J = basis.jordan_matrix()
    nA = np.linalg.norm(A)
    return float(np.linalg.norm(A @ basis.V - basis.V @ J) / (nA if nA > 0 else 1.0))


@dataclass(frozen=True)
class CostEstimate:
    b_A: int
    flop_time: float
    mem_time: float
    total: float
    params: dict


def estimate_chain_cost(N, a_i, g_i, m_i, c, mem_rate):
    """Expected wall-clock of the chain search for one eigenvalue.

    The loop runs ``b_A = m_i (a_i - g_i)`` iterations. Each costs an SVD of
    the ``N x N(j)`` eigenvector matrix plus a matrix-vector product,
    ``c (4 N N(j)^2 + 22 N^3 + 2 N N(j))`` seconds, and an allocation of
    ``N N(j)`` entries at ``mem_rate`` seconds per entry. ``N(j)`` starts at
    the ``N - (a_i - g_i)`` known columns and gains one column every
    ``m_i`` iterations.

    ``mem_rate`` may also be a callable of the allocation size returning
    seconds per entry.
    """
    N = check_int(N, "N", 1)
    a_i = check_int(a_i, "a_i", 1)
    g_i = check_int(g_i, "g_i", 1)
    m_i = check_int(m_i, "m_i", 1)
    if g_i > a_i:
        raise InputError("g_i cannot exceed a_i")
    if a_i > N:
        raise InputError("a_i cannot exceed N")
    rate = mem_rate if callable(mem_rate) else (lambda size, r=float(mem_rate): r)
    missing = a_i - g_i
    b_A = m_i * missing
    j = np.arange(b_A)
    cols = (N - missing + j // m_i).astype(float)
    M = float(N)
    flop = float(np.sum(c * (K_SVD * M * cols**2 + K_SVD_CUBIC * M**3 + 2 * M * cols)))
    mem = float(sum(M * nj * rate(M * nj) for nj in cols))
    return CostEstimate(
        b_A,
        flop,
        mem,
        flop + mem,
        {"c": c, "k_svd": K_SVD, "k_prime_svd": K_SVD_CUBIC, "mem_rate": mem_rate, "M": N},
    )
