"""Subinvariance certificates and explicit counterexamples for the shift."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NotFixed
from .functionals import Functional, Internal, LpForm
from .maps import MapExpr, PrependShift
from .seqspace import SeqVector, distance, lp, norm

__all__ = [
    "Verdict",
    "DefectReport",
    "subinvariance",
    "fixed_point_from_internal",
    "l2_linear_counterexample",
    "l2_lpform_counterexample",
]


class Verdict(str, enum.Enum):
    SUBINVARIANT = "subinvariant"
    VIOLATED = "violated"
    STRICT_DECREASE = "strict_decrease"


@dataclass
class DefectReport:
    """Per-probe defects ``h(Tx) - h(x)`` and their classification.

    ``STRICT_DECREASE`` means every defect is at most ``-gap < 0``; such a
    functional rules out fixed points of ``T``.
    """

    defects: np.ndarray
    probes: tuple
    max_defect: float
    min_defect: float
    witness: object
    verdict: Verdict
    gap: float = 0.0

    def to_dict(self):
        return {
            "verdict": self.verdict.value,
            "gap": self.gap,
            "max_defect": self.max_defect,
            "min_defect": self.min_defect,
            "witness": self.witness.to_dict(),
            "defects": [float(d) for d in self.defects],
        }


def subinvariance(h: Functional, T: MapExpr, probes, tol: float = 1e-12) -> DefectReport:
    probes = tuple(probes)
    if not probes:
        raise ValueError("need at least one probe")
    defects = np.array([h.evaluate(T.apply(x)) - h.evaluate(x) for x in probes])
    k = int(np.argmax(defects))
    hi, lo = float(defects[k]), float(defects.min())
    if hi < -tol:
        verdict, gap = Verdict.STRICT_DECREASE, -hi
    elif hi <= tol:
        verdict, gap = Verdict.SUBINVARIANT, 0.0
    else:
        verdict, gap = Verdict.VIOLATED, 0.0
    return DefectReport(defects, probes, hi, lo, probes[k], verdict, gap)


def fixed_point_from_internal(h: Internal, T: MapExpr, tol: float = 1e-12):
    """Return the anchor of ``h`` if ``T`` fixes it, else raise :class:`NotFixed`."""
    if not isinstance(h, Internal):
        raise TypeError("need an internal functional")
    r = distance(T.apply(h.w), h.w, h.space)
    if r <= tol:
        return h.w
    raise NotFixed(r)


def l2_linear_counterexample(z: SeqVector):
    """Vector ``x`` with ``<x - Tx, z> <= -1/2`` for the prepend-one shift ``T``.

    This shows the linear functional ``<., z>`` is not subinvariant in l2
    unless ``z = 0``.  Returns ``(x, inner)``.
    """
    if z.tail is not None:
        raise ValueError("z must lie in l2")
    if norm(z, lp(2)) > 1 + 1e-12:
        raise ValueError("z must lie in the unit ball")
    if z.support == 0:
        raise ValueError("z = 0: the zero functional is subinvariant, no counterexample exists")
    T = PrependShift(1.0)
    z1 = z[0]
    if z1 != 0:
        t = (z1 - 1) / z1
        bound = 1 / (2 * abs(t) + 1)
        n = 2
        while abs(z[n - 1]) > bound:
            n += 1
        x = SeqVector(np.full(n - 1, t))
    else:
        m = int(np.flatnonzero(z.coeffs)[0]) + 1
        x = SeqVector.unit(m - 1, 1.0 / z[m - 1])
    d = x - T.apply(x)
    k = max(d.support, z.support)
    inner = float(np.dot(d.padded(k)[:k], z.padded(k)[:k]))
    return x, inner


def l2_lpform_counterexample(h: LpForm):
    """Probe ``x = z`` at which ``h(Tx) > h(x)`` for the prepend-one shift.

    Subinvariance of such an ``h`` would force ``||Tx - z|| <= ||x - z||``,
    i.e. a fixed point at ``z``; returns ``(x, defect)`` with positive defect.
    """
    if h.p != 2:
        raise ValueError("l2 only")
    T = PrependShift(1.0)
    x = h.z
    return x, h.evaluate(T.apply(x)) - h.evaluate(x)
