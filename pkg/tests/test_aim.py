import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from aimgft.aim import (
    Basis,
    aim_transform,
    check_g_equivalence,
    complete_basis,
    component_energy,
    component_projector,
    dual_basis,
    eigenspace_angles,
    energy_ranking,
    exact_gft,
    jordan_gft,
    known_eigenvectors,
    projection_agreement,
    spectrum_of,
)
from aimgft.chains import assemble_jordan_basis, compute_chains
from aimgft.exceptions import (
    IllConditionedBasisWarning,
    InputError,
    NumericalError,
    SpectralAmbiguityError,
)
from aimgft.spectral import Spectrum
from aimgft.synthetic import conjugated, random_basis

OBLIQUE = np.array([[1.0, 1.0], [0.0, 1.0]])


def jordan_basis(A, cluster_tol=1e-3):
    _, sp = spectrum_of(A, cluster_tol=cluster_tol)
    return assemble_jordan_basis(sp, [compute_chains(A, d.value) for d in sp.distinct], A)


def completed_basis(A, cluster_tol=1e-3):
    raw, sp = spectrum_of(A, cluster_tol=cluster_tol)
    right, left, labels = known_eigenvectors(A, sp, raw)
    return complete_basis(right, sp, labels, left=left)


def test_complete_nilpotent_from_e1():
    sp = Spectrum.from_multiplicities([(0.0, 2, 1)])
    b = complete_basis([[1.0], [0.0]], sp)
    np.testing.assert_allclose(np.abs(b.V), np.eye(2))
    assert b.provenance == ["proper", "completion"]


def test_complete_full_rank_unchanged(rng):
    V = random_basis(4, 5, rng)
    sp = Spectrum.from_multiplicities([(k, 1, 1) for k in range(4)])
    b = complete_basis(V, sp, labels=range(4))
    np.testing.assert_array_equal(b.V, V)
    assert "completion" not in b.provenance


def test_complete_refuses_two_deficient_components():
    sp = Spectrum.from_multiplicities([(0.0, 2, 1), (1.0, 2, 1)])
    with pytest.raises(SpectralAmbiguityError):
        complete_basis(np.eye(4)[:, [0, 2]], sp, labels=[0, 1])


def test_complete_rejects_surplus_columns():
    sp = Spectrum.from_multiplicities([(0.0, 1, 1), (1.0, 1, 1)])
    with pytest.raises(SpectralAmbiguityError):
        complete_basis(np.eye(2), sp, labels=[0, 0])


def test_complete_requires_labels_for_several_components():
    sp = Spectrum.from_multiplicities([(0.0, 1, 1), (1.0, 1, 1)])
    with pytest.raises(InputError):
        complete_basis(np.eye(2), sp)


def test_complete_kernel_dimension_mismatch():
    sp = Spectrum.from_multiplicities([(0.0, 3, 1)])
    with pytest.raises(NumericalError):
        complete_basis(np.array([[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]]), sp, labels=[0, 0])


def test_completion_is_orthonormal_and_spans_the_eigenspace(rng):
    A, _, _ = conjugated([(0.0, 3), (0.0, 1), (2.0, 1), (-1.0, 1)], cond=20, rng=rng)
    b = completed_basis(A)
    comp = b.V[:, [i for i, t in enumerate(b.provenance) if t == "completion"]]
    np.testing.assert_allclose(comp.T @ comp, np.eye(comp.shape[1]), atol=1e-12)
    assert max(eigenspace_angles(A, b)) < 1e-6


def test_projectors_orthogonal_case():
    b = Basis.from_blocks(np.eye(2), [1, 1], [2.0, 0.0])
    np.testing.assert_allclose(component_projector(b, 0), np.diag([1.0, 0.0]))
    np.testing.assert_allclose(component_projector(b, 1), np.diag([0.0, 1.0]))


def test_projector_canonical_block():
    b = Basis.from_blocks(np.eye(3), [1, 2], [2.0, 0.0])
    np.testing.assert_allclose(component_projector(b, 1), np.diag([0.0, 1.0, 1.0]))


def test_projector_oblique():
    b = Basis.from_blocks(OBLIQUE, [1, 1], [0.0, 1.0])
    np.testing.assert_allclose(component_projector(b, 0), [[1.0, -1.0], [0.0, 0.0]])


def test_ill_conditioned_warning():
    V = np.array([[1.0, 1.0], [0.0, 1e-9]])
    b = Basis.from_blocks(V, [1, 1], [0.0, 1.0])
    with pytest.warns(IllConditionedBasisWarning):
        Z = component_projector(b, 0)
    np.testing.assert_allclose(Z @ Z, Z, atol=1e-6)
    spec = aim_transform(b, [1.0, 1.0], cond_threshold=1e12)
    assert spec.tol > 1e-10


def test_singular_basis_rejected():
    with pytest.raises(NumericalError):
        Basis.from_blocks(np.ones((2, 2)), [2], [0.0])


def test_aim_canonical(canonical3):
    b = Basis.from_blocks(np.eye(3), [1, 2], [2.0, 0.0])
    spec = aim_transform(b, [1.0, 1.0, 1.0])
    np.testing.assert_allclose(spec.projections[0], [1, 0, 0])
    np.testing.assert_allclose(spec.projections[1], [0, 1, 1])


def test_aim_single_component(rng):
    A, _, _ = conjugated([(0.0, 3)], cond=5, rng=rng)
    s = rng.standard_normal(3)
    spec = aim_transform(jordan_basis(A), s)
    np.testing.assert_allclose(spec.projections[0], s, atol=1e-12)


def test_aim_concentrates_inside_component(rng):
    A, _, _ = conjugated([(0.0, 2), (0.0, 1), (1.0, 1), (3.0, 1)], cond=10, rng=rng)
    b = completed_basis(A)
    s = b.component_matrix(0) @ rng.standard_normal(3)
    spec = aim_transform(b, s)
    assert spec.fractions[0] == pytest.approx(1.0, abs=1e-10)
    assert abs(spec.energies[0] - spec.norm_sq) <= 1e-10 * spec.norm_sq
    assert abs(spec.energies[1:].sum()) <= 1e-10 * spec.norm_sq


def test_exact_gft_examples(rng):
    s = rng.standard_normal(3)
    np.testing.assert_allclose(exact_gft(np.eye(3), s), s)
    np.testing.assert_allclose(exact_gft(OBLIQUE, [1.0, 1.0]), [0.0, 1.0])
    V = random_basis(6, 10, rng)
    s = rng.standard_normal(6)
    b = Basis.from_blocks(V, [6], [0.0])
    assert np.linalg.norm(V @ exact_gft(b, s) - s) <= 1e-10 * np.linalg.norm(s)


def test_jordan_gft_diagonalizable(rng):
    A = np.diag([1.0, 2.0, 3.0])
    b = jordan_basis(A)
    s = rng.standard_normal(3)
    parts = jordan_gft(b, s)
    for p, i in zip(parts, range(3)):
        expected = np.zeros(3)
        expected[i] = s[i]
        np.testing.assert_allclose(np.abs(p.projection), np.abs(expected), atol=1e-15)


def test_jordan_gft_single_subspace(nilpotent2):
    b = jordan_basis(nilpotent2)
    s = np.array([0.3, -2.0])
    (part,) = jordan_gft(b, s)
    np.testing.assert_allclose(part.projection, s)


def test_jordan_gft_groups_to_aim(rng):
    A, _, _ = conjugated([(0.0, 2), (0.0, 2), (5.0, 1)], cond=10, rng=rng)
    b = jordan_basis(A)
    s = rng.standard_normal(5)
    parts = jordan_gft(b, s)
    aim = aim_transform(b, s)
    for i in range(b.k):
        grouped = sum(p.projection for p in parts if p.component == i)
        np.testing.assert_allclose(grouped, aim.projections[i], atol=1e-10)
    np.testing.assert_allclose(sum(p.projection for p in parts), s, atol=1e-10)


def test_jordan_gft_refuses_completed_basis(rng):
    A, _, _ = conjugated([(0.0, 2), (1.0, 1)], cond=5, rng=rng)
    with pytest.raises(InputError):
        jordan_gft(completed_basis(A), np.ones(3))


def test_dual_examples(rng):
    d = dual_basis(np.eye(2), [3.0, 4.0])
    assert d.inner() == pytest.approx(25.0)
    d = dual_basis(OBLIQUE, [1.0, 1.0])
    np.testing.assert_allclose(d.coeffs_V, [0.0, 1.0])
    np.testing.assert_allclose(d.coeffs_W, [1.0, 2.0])
    assert d.inner() == pytest.approx(2.0)
    np.testing.assert_allclose(d.V.conj().T @ d.W, np.eye(2), atol=1e-15)
    Q = sla.qr(rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5)))[0]
    s = rng.standard_normal(5)
    d = dual_basis(Q, s)
    np.testing.assert_allclose(d.coeffs_V, d.coeffs_W, atol=1e-12)


def test_component_energy_examples(rng):
    b = Basis.from_blocks(np.eye(3), [1, 2], [0.0, 1.0])
    s = np.ones(3)
    e = [component_energy(b, s, i) for i in range(2)]
    assert e == [pytest.approx(1.0), pytest.approx(2.0)]


def test_energy_ranking_examples():
    assert energy_ranking([0.5, 0.3, 0.2], 0.6).selected == [0, 1]
    assert energy_ranking([0.5, 0.3, 0.2], 1.0).selected == [0, 1, 2]
    r = energy_ranking([1.2, -0.2], 0.5)
    assert r.has_negative and r.order == [0, 1]
    with pytest.raises(InputError):
        energy_ranking([1.0], 1.5)


def test_g_equivalence_examples(rng):
    A, _, J = conjugated([(0.0, 2), (0.0, 1), (2.0, 1)], cond=10, rng=rng)
    assert check_g_equivalence(A, A, cluster_tol=1e-3)
    assert not check_g_equivalence(np.diag([1.0, 2.0]), np.diag([1.0, 3.0]))
    b = completed_basis(A)
    # a different matrix with the same eigenvalues and generalized eigenspaces
    J_hat = np.zeros((4, 4))
    J_hat[:3, :3] = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    J_hat[3, 3] = 2.0
    A_hat = b.V @ J_hat @ np.linalg.inv(b.V)
    assert check_g_equivalence(A, A_hat, cluster_tol=1e-3)


def test_oracle_equivalence_small(rng):
    for _ in range(5):
        A, _, _ = conjugated([(0.0, 3), (0.0, 2), (1.0, 1), (-2.0, 1), (4.0, 1)], cond=30, rng=rng)
        s = rng.standard_normal(A.shape[0])
        a = aim_transform(completed_basis(A), s)
        e = aim_transform(jordan_basis(A), s)
        assert projection_agreement(a, e) <= 1e-8


@st.composite
def bases(draw, max_n=16):
    n = draw(st.integers(2, max_n))
    seed = draw(st.integers(0, 2**31))
    rng = np.random.default_rng(seed)
    sizes = []
    left = n
    while left:
        k = draw(st.integers(1, left))
        sizes.append(k)
        left -= k
    cond = draw(st.floats(1.0, 1e4))
    complex_ = draw(st.booleans())
    V = random_basis(n, cond, rng, complex_)
    s = rng.standard_normal(n) + (1j * rng.standard_normal(n) if complex_ else 0)
    return Basis.from_blocks(V, sizes, range(len(sizes))), s


@given(bases())
def test_projector_algebra(case):
    b, _ = case
    Z = [component_projector(b, i) for i in range(b.k)]
    n = b.n
    scale = np.sqrt(n)
    tol = 1e-10 * max(1.0, b.conditioning ** 2 / 1e4)
    for i, Zi in enumerate(Z):
        assert np.linalg.norm(Zi @ Zi - Zi) <= tol * max(np.linalg.norm(Zi), scale)
        for j, Zj in enumerate(Z):
            if i != j:
                assert np.linalg.norm(Zi @ Zj) <= tol * max(np.linalg.norm(Zi) * np.linalg.norm(Zj), scale)
    assert np.linalg.norm(sum(Z) - np.eye(n)) <= tol * scale


@given(bases())
def test_parseval_and_reconstruction(case):
    b, s = case
    spec = aim_transform(b, s)
    ns = spec.norm_sq
    assert abs(spec.energies.sum() - ns) <= 1e-10 * ns * max(1.0, b.conditioning / 1e4)
    assert abs(spec.energies.sum().imag) <= 1e-10 * ns * max(1.0, b.conditioning / 1e4)
    assert spec.residual <= 1e-10 * np.sqrt(ns) * max(1.0, b.conditioning / 1e4)
    d = dual_basis(b.V, s)
    assert abs(d.inner() - ns) <= 1e-10 * ns * max(1.0, b.conditioning / 1e4)


@given(bases(max_n=10), st.randoms())
def test_permutation_equivariance(case, random):
    b, s = case
    perm = list(range(b.n))
    random.shuffle(perm)
    P = np.eye(b.n)[:, perm].T
    pb = Basis(P @ b.V, b.components)
    a = aim_transform(b, s).projections
    pa = aim_transform(pb, P @ s).projections
    np.testing.assert_allclose(pa, a @ P.T, atol=1e-10 * max(1.0, b.conditioning / 1e4) * np.linalg.norm(s))
