import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from loopflat.estimator import LoopFlatImmersion


@pytest.fixture(scope="module")
def fitted():
    return LoopFlatImmersion(L=0.5, h=0.125, lambdas=(1.0, 2.0), transform_lambda=2.0).fit()


def test_params_and_clone():
    est = LoopFlatImmersion(case="cpn_real:n=2", L=0.5)
    params = est.get_params()
    assert params["case"] == "cpn_real:n=2" and params["L"] == 0.5
    other = clone(est)
    assert other.get_params() == params and other is not est


def test_not_fitted():
    with pytest.raises(NotFittedError):
        LoopFlatImmersion().transform(np.zeros((1, 2)))


def test_transform_matches_grid(fitted):
    f = fitted.field_
    i, j = 1, 6
    x = np.array([[f.axes[0][i], f.axes[1][j]]])
    y = fitted.transform(x)
    ref = f.at(2.0)[i, j, :, fitted.convention_.f_col]
    assert np.abs(y[0] - ref).max() < 1e-10
    assert np.abs(np.linalg.norm(fitted.transform(np.array([[0.1, -0.2]])), axis=1) - 1).max() < 1e-12


def test_metric_ratio(fitted):
    assert fitted.metric_ratio(2.0) == pytest.approx(1.5625, rel=1e-9)


def test_feature_validation(fitted):
    with pytest.raises(ValueError):
        fitted.transform(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        LoopFlatImmersion(L=0.5, h=0.125).fit(np.zeros((4, 3)))
