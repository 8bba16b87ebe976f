import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from aimgft import Graph, InexactGFT, JordanGFT
from aimgft.aim import projection_agreement
from aimgft.exceptions import ChainError, InputError
from aimgft.synthetic import conjugated


@pytest.fixture
def defective(rng):
    A, _, _ = conjugated([(0.0, 3), (0.0, 1), (1.0, 1), (2.0, 1), (-3.0, 1)], cond=10, rng=rng)
    return A


def test_params_round_trip():
    est = JordanGFT(cluster_tol=1e-3, retries=4, seed=7)
    assert est.get_params()["retries"] == 4
    c = clone(est)
    assert c.get_params() == est.get_params()
    assert InexactGFT().set_params(cluster_tol=0.1).cluster_tol == 0.1


def test_transform_requires_fit():
    with pytest.raises(NotFittedError):
        InexactGFT().transform(np.ones((1, 3)))


def test_transform_round_trip(defective, rng):
    est = InexactGFT(cluster_tol=1e-3).fit(defective)
    S = rng.standard_normal((4, defective.shape[0]))
    C = est.transform(S)
    np.testing.assert_allclose(est.inverse_transform(C).real, S, atol=1e-10)
    np.testing.assert_allclose(est.energies(S).sum(axis=1), (S**2).sum(axis=1), rtol=1e-10)


def test_estimators_agree_per_component(defective, rng):
    s = rng.standard_normal(defective.shape[0])
    a = InexactGFT(cluster_tol=1e-3).fit(defective).project(s)
    j = JordanGFT(cluster_tol=1e-3).fit(defective)
    assert not j.fell_back_
    assert projection_agreement(a, j.project(s)) <= 1e-8
    parts = j.chain_projections(s)
    assert len(parts) == 5


def test_fit_accepts_graph():
    g = Graph(2, ((0, 1, 1.0),))
    est = JordanGFT().fit(g)
    assert est.spectrum_.algebraic == [2]


def test_signal_length_checked(defective):
    est = InexactGFT(cluster_tol=1e-3).fit(defective)
    with pytest.raises(ValueError):
        est.transform(np.ones((1, 3)))


def test_bad_tolerance():
    with pytest.raises(InputError):
        InexactGFT(cluster_tol=-1).fit(np.eye(2))


def test_chain_failure_without_fallback(defective, monkeypatch):
    import aimgft.estimators as mod

    def fail(*args, **kwargs):
        raise ChainError("forced", level=2, partial=None)

    monkeypatch.setattr(mod, "compute_chains", fail)
    with pytest.raises(ChainError):
        JordanGFT(cluster_tol=1e-3).fit(defective)


def test_chain_failure_falls_back_to_completion(defective, rng, monkeypatch):
    import aimgft.estimators as mod

    real = mod.compute_chains

    def flaky(A, lam, **kwargs):
        cs = real(A, lam, **kwargs)
        if abs(lam) < 1e-9:
            # keep only the eigenvector of the long chain, as if its extension failed
            partial = type(cs)(cs.lam, (cs.chains[0][:, :1], cs.chains[1][:, :1]), (), False)
            raise ChainError("forced", level=2, partial=partial)
        return cs

    monkeypatch.setattr(mod, "compute_chains", flaky)
    with pytest.warns(RuntimeWarning):
        est = JordanGFT(cluster_tol=1e-3, fallback=True).fit(defective)
    assert est.fell_back_
    assert "completion" in est.basis_.provenance
    s = rng.standard_normal(defective.shape[0])
    ref = InexactGFT(cluster_tol=1e-3).fit(defective).project(s)
    assert projection_agreement(ref, est.project(s)) <= 1e-8
