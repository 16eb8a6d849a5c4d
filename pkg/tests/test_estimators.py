import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from scbadmm.estimators import SCBSPADMM, DirectADMM, NearestCorrelationMatrix
from scbadmm.instances import random_block_qp, scalar_qsdp


def test_params_and_clone():
    est = SCBSPADMM(sigma=2.0, tol=1e-7)
    assert est.get_params()["sigma"] == 2.0
    c = clone(est)
    assert c.get_params() == est.get_params()
    c.set_params(max_iter=10)
    assert c.max_iter == 10 and est.max_iter == 25000


@pytest.mark.parametrize("cls", [SCBSPADMM, DirectADMM])
def test_fit_scalar(cls):
    est = cls().fit(scalar_qsdp().problem())
    assert est.status_ == "tolerance_met"
    assert est.multiplier()[0] == pytest.approx(1.0, abs=1e-5)


def test_unfitted():
    with pytest.raises(NotFittedError):
        SCBSPADMM().multiplier()


def test_fit_rejects_arrays():
    with pytest.raises(TypeError):
        SCBSPADMM().fit(np.eye(2))


def test_fit_block_qp():
    est = SCBSPADMM(tol=1e-8, max_iter=5000).fit(random_block_qp(6, 2, (2,), 2, (1,), seed=0))
    assert est.eta_ <= 1e-8 and est.n_iter_ > 0


def test_ncm_unweighted():
    rng = np.random.default_rng(0)
    A = rng.uniform(-1, 1, (6, 6))
    G = 0.5 * (A + A.T)
    np.fill_diagonal(G, 1.0)
    X = NearestCorrelationMatrix(tol=1e-8).fit_transform(G)
    assert np.abs(np.diag(X) - 1).max() < 1e-6
    assert np.linalg.eigvalsh(X).min() > -1e-6
    assert X.min() > -0.5 - 1e-6
    # projection: <G - X, Y - X> <= 0 for feasible Y = I
    assert np.sum((G - X) * (np.eye(6) - X)) <= 1e-5


def test_ncm_validation():
    with pytest.raises(ValueError):
        NearestCorrelationMatrix().fit(np.ones((2, 3)))
    with pytest.raises(ValueError):
        NearestCorrelationMatrix(solver="nope").fit(np.eye(2))
