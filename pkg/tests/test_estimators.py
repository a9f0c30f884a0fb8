import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from horofix.estimators import (
    AsymptoticCenter, CesaroAverager, CommonFixedPoint, MetricFunctionalEstimator, check_points, to_array,
)
from horofix.maps import FamilySpec, PrependShift, build_Tmu, Diagonal
from horofix.seqspace import SeqVector, distance, lp


def test_check_points_array_and_vectors():
    pts = check_points([[1.0, 0.0], [0.0, 2.0]])
    assert pts == [SeqVector((1.0,)), SeqVector((0.0, 2.0))]
    assert check_points(SeqVector((1.0,))) == [SeqVector((1.0,))]
    with pytest.raises(ValueError):
        check_points([[np.nan, 1.0]])
    with pytest.raises(ValueError):
        check_points([[1.0]], min_points=3)


def test_to_array():
    assert to_array([SeqVector((1.0,)), SeqVector((0.0, 2.0))]).tolist() == [[1.0, 0.0], [0.0, 2.0]]
    with pytest.raises(ValueError):
        to_array([SeqVector.constant(1.0)])


def test_metric_functional_estimator():
    pts = [SeqVector.ones(n) for n in range(20, 30)]
    est = MetricFunctionalEstimator(space=lp(1)).fit(pts)
    probes = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    assert est.transform(probes).tolist() == [0.0, -1.0, 0.0]
    assert np.all(est.convergence(probes) == 0.0)
    e = est.to_functional(probes)
    assert e.accepted
    assert est.get_params()["space"] == lp(1)
    assert clone(est).get_params()["tol"] == 1e-6
    with pytest.raises(NotFittedError):
        MetricFunctionalEstimator().transform(probes)


def test_asymptotic_center_estimator():
    a = np.array([1.0, -2.0, 0.5])
    X = np.zeros((30, 33))
    X[:, :3] = a
    X[np.arange(30), 3 + np.arange(30)] = 1.0
    est = AsymptoticCenter(dim=3).fit(X)
    assert distance(est.center_, SeqVector(a), lp(2)) <= 1e-6
    r = est.transform(np.vstack([np.pad(a, (0, 30)), np.zeros(33)]))
    assert r[0] == pytest.approx(1.0, abs=1e-12) and r[1] > r[0]


def test_cesaro_averager():
    F = FamilySpec((("T", PrependShift(1.0)),))
    out = CesaroAverager(family=F, n=4).fit().transform(np.zeros((2, 2)))
    assert out.shape == (2, 3)
    assert out[0].tolist() == [0.75, 0.5, 0.25]
    assert CesaroAverager(family=F, n=4).fit().transform([SeqVector()])[0] == SeqVector((0.75, 0.5, 0.25))
    with pytest.raises(TypeError):
        CesaroAverager(family="no").fit()


def test_common_fixed_point_estimator():
    b = SeqVector((1.0, 2.0))
    A = Diagonal(SeqVector((0.5, -0.5)))
    F = FamilySpec((("a", build_Tmu(A, b, 0.3)), ("b", build_Tmu(A, b, 0.6))))
    est = CommonFixedPoint(tol=1e-10).fit(F)
    assert distance(est.fixed_point_, SeqVector((2.0, 2.0 / 1.5)), lp(2)) <= 1e-8
    assert max(est.residuals_.values()) <= 1e-10
