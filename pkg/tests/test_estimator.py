import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from envelope_dnn.estimator import NearestSite


def test_predict_matches_argmin():
    rng = np.random.default_rng(0)
    X, Q = rng.random((300, 2)), rng.random((100, 2))
    for backend in ("chan", "brute"):
        est = NearestSite(backend=backend).fit(X)
        d = np.hypot(Q[:, None, 0] - X[None, :, 0], Q[:, None, 1] - X[None, :, 1])
        assert (est.predict(Q) == d.argmin(1)).all()
        assert np.allclose(est.transform(Q)[:, 0], d.min(1))


def test_params_and_clone():
    est = NearestSite(backend="brute", k0=16)
    assert est.get_params()["k0"] == 16
    assert clone(est).get_params() == est.get_params()


def test_validation():
    with pytest.raises(NotFittedError):
        NearestSite().predict([[0, 0]])
    with pytest.raises(ValueError):
        NearestSite().fit(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        NearestSite().fit([[np.nan, 0]])


def test_partial_fit_and_remove():
    est = NearestSite().fit([[0, 0], [1, 1]])
    est.partial_fit([[0.9, 0.9]])
    assert est.predict([[0.92, 0.92]])[0] == 2
    est.remove(2)
    assert est.predict([[0.92, 0.92]])[0] == 1
