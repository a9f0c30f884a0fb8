"""scikit-learn style wrappers.

Rows of a 2-D array are read as finitely supported sequences, so the
estimators drop into ordinary numpy / sklearn pipelines.  Lists of
:class:`SeqVector` are accepted as well and keep their symbolic tails.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from .engine import common_fixed_point, nested_average
from .limits import asymptotic_center, empirical_limit
from .maps import FamilySpec
from .probes import ProbeSet
from .seqspace import DirectSumPoint, SeqVector, distance, lp, zero

__all__ = [
    "check_points",
    "to_array",
    "MetricFunctionalEstimator",
    "AsymptoticCenter",
    "CesaroAverager",
    "CommonFixedPoint",
]


def check_points(X, min_points: int = 1) -> list:
    """Validate ``X`` and return it as a list of points.

    ``X`` is a single point, a sequence of :class:`SeqVector` /
    :class:`DirectSumPoint`, or an array-like of shape ``(n_points, dim)``.
    """
    if isinstance(X, (SeqVector, DirectSumPoint)):
        pts = [X]
    elif isinstance(X, (list, tuple)) and X and all(isinstance(p, (SeqVector, DirectSumPoint)) for p in X):
        pts = list(X)
    else:
        arr = check_array(X, dtype=float, ensure_min_samples=min_points)
        pts = [SeqVector(row) for row in arr]
    if len(pts) < min_points:
        raise ValueError(f"need at least {min_points} points, got {len(pts)}")
    return pts


def to_array(points, dim=None) -> np.ndarray:
    """Stack finitely supported points into rows of width ``dim``."""
    dim = dim or max([p.support for p in points] + [1])
    out = np.zeros((len(points), dim))
    for i, p in enumerate(points):
        if p.tail is not None:
            raise ValueError("constant tails cannot be written as array rows")
        out[i, : p.support] = p.coeffs[:dim]
    return out


def _was_array(X) -> bool:
    return not isinstance(X, (SeqVector, DirectSumPoint)) and not (
        isinstance(X, (list, tuple)) and X and isinstance(X[0], (SeqVector, DirectSumPoint))
    )


class MetricFunctionalEstimator(TransformerMixin, BaseEstimator):
    """Metric functional generated by a sequence ``a_1, a_2, ...``.

    ``fit`` stores the sequence; ``transform`` evaluates the last internal
    functional ``h_N(x) = d(x, a_N) - d(o, a_N)`` at each row and
    :meth:`convergence` reports how settled those values are.
    """

    def __init__(self, space=None, tol=1e-6, window=5):
        self.space = space
        self.tol = tol
        self.window = window

    def fit(self, X, y=None):
        self.points_ = check_points(X, min_points=3)
        self.space_ = self.space or lp(2)
        self.base_ = zero(self.space_)
        self.n_points_ = len(self.points_)
        return self

    def transform(self, X):
        check_is_fitted(self, "points_")
        a = self.points_[-1]
        r = distance(self.base_, a, self.space_)
        return np.array([distance(x, a, self.space_) - r for x in check_points(X)])

    def to_functional(self, X):
        """Empirical functional tabulated on the rows of ``X``."""
        check_is_fitted(self, "points_")
        probes = ProbeSet.of(check_points(X), self.base_)
        tail = self.points_[-max(self.window, 3):]
        return empirical_limit(tail, probes, self.space_, self.tol, self.window)

    def convergence(self, X):
        """Spread of the last ``window`` values at each row."""
        check_is_fitted(self, "points_")
        tail = self.points_[-max(self.window, 3):]
        pts = check_points(X)
        e = empirical_limit(tail, ProbeSet(tuple(pts)), self.space_, self.tol, self.window)
        return e.residuals


class AsymptoticCenter(BaseEstimator):
    """Asymptotic center of the last ``last_k`` points within ``dim`` coordinates."""

    def __init__(self, space=None, dim=None, last_k=20, delta=1e-3, tol=1e-6):
        self.space = space
        self.dim = dim
        self.last_k = last_k
        self.delta = delta
        self.tol = tol

    def fit(self, X, y=None):
        pts = check_points(X)
        space = self.space or lp(2)
        dim = self.dim or max(p.support for p in pts) or 1
        self.report_ = asymptotic_center(pts, space, dim, self.last_k, self.delta, self.tol)
        self.center_ = self.report_.center
        self.value_ = self.report_.value
        self.margin_ = self.report_.margin
        self.non_unique_ = self.report_.non_unique
        self._tail = pts[-self.last_k:]
        self._space = space
        return self

    def transform(self, X):
        """Radius function ``max_k ||x - a_k||`` at each row."""
        check_is_fitted(self, "center_")
        return np.array([max(distance(x, a, self._space) for a in self._tail) for x in check_points(X)])


class CesaroAverager(TransformerMixin, BaseEstimator):
    """Nested Cesaro average of each row under a commuting family."""

    def __init__(self, family=None, n=64, space=None):
        self.family = family
        self.n = n
        self.space = space

    def fit(self, X=None, y=None):
        if not isinstance(self.family, FamilySpec):
            raise TypeError("family must be a FamilySpec")
        if int(self.n) < 1:
            raise ValueError("n must be >= 1")
        self.space_ = self.space or lp(2)
        return self

    def transform(self, X):
        check_is_fitted(self, "space_")
        pts = check_points(X)
        out = [nested_average(self.family, p, self.n, self.space_).iterates[-1] for p in pts]
        return to_array(out, max(max(p.support for p in out), np.shape(X)[1])) if _was_array(X) else out


class CommonFixedPoint(BaseEstimator):
    """Common fixed point of an affine nonexpansive family, found by averaging."""

    def __init__(self, space=None, tol=1e-10, n_max=2**17):
        self.space = space
        self.tol = tol
        self.n_max = n_max

    def fit(self, family, seed=None):
        if not isinstance(family, FamilySpec):
            raise TypeError("fit expects a FamilySpec")
        seed = SeqVector() if seed is None else check_points(seed)[0]
        z, info = common_fixed_point(family, seed, self.space or lp(2), self.tol, self.n_max, full_output=True)
        self.fixed_point_ = z
        self.residuals_ = info["residuals"]
        self.trace_ = info["trace"]
        self.n_sweeps_ = info["sweeps"]
        return self
