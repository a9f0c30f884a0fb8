"""Metric functionals (horofunctions) with closed-form evaluation.

All functionals are normalized to vanish at their base point, which is the
origin unless an internal functional says otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .exceptions import DivergentSeries
from .seqspace import (
    DirectSumPoint,
    SeqVector,
    Space,
    distance,
    lp,
    norm,
    space_from_dict,
    zero,
)

__all__ = [
    "Functional",
    "Internal",
    "LpForm",
    "L1Form",
    "Linear",
    "BusemannL1Plane",
    "ShiftL1",
    "ShiftC0",
    "HN",
    "Sum",
    "Projection",
    "evaluate",
    "internal",
    "sum_functional",
    "busemann_limit",
    "BusemannResult",
    "functional_from_dict",
]

_SIGN_TOL = 1e-12


def _require_finite_tail(x: SeqVector, what: str):
    if x.tail is not None:
        raise DivergentSeries(f"{what}: terms do not vanish on tail {x.tail}")


class Functional:
    """Base class; ``h(x)`` evaluates the functional."""

    variant = "functional"

    @property
    def base(self):
        return SeqVector()

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


def evaluate(h: Functional, x) -> float:
    return h.evaluate(x)


@dataclass(frozen=True)
class Internal(Functional):
    """``h_w(x) = d(x, w) - d(o, w)``."""

    w: object
    o: object
    space: Space

    variant = "internal"

    @property
    def base(self):
        return self.o

    @cached_property
    def offset(self) -> float:
        return distance(self.o, self.w, self.space)

    def evaluate(self, x):
        d = distance(x, self.w, self.space)
        if math.isinf(d):
            raise DivergentSeries("distance to the anchor point is infinite")
        return d - self.offset

    def to_dict(self):
        return {"variant": "internal", "w": self.w.to_dict(), "o": self.o.to_dict(), "space": self.space.to_dict()}


def internal(w, space: Space, base=None) -> Internal:
    """Internal functional anchored at ``w`` and normalized at ``base``."""
    base = zero(space) if base is None else base
    if math.isinf(distance(base, w, space)):
        raise ValueError("base point and anchor are at infinite distance")
    return Internal(w, base, space)


@dataclass(frozen=True)
class LpForm(Functional):
    """``(||x - z||_p^p + c^p - ||z||_p^p)^(1/p) - c`` with ``c >= ||z||_p``."""

    p: float
    z: SeqVector
    c: float

    variant = "lp_form"

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError("p must be >= 1")
        zn = norm(self.z, lp(self.p))
        if math.isinf(zn):
            raise ValueError("z must lie in l_p")
        if self.c < zn - 1e-12 * max(1.0, zn):
            raise ValueError(f"c={self.c} must be at least ||z||_p={zn}")

    @cached_property
    def slack(self) -> float:
        """``c^p - ||z||_p^p``, snapped to 0 on the boundary ``c = ||z||_p``."""
        zn = norm(self.z, lp(self.p))
        if self.c <= zn * (1 + 1e-12):
            return 0.0
        return self.c**self.p - self._power_sum(self.z)

    def _power_sum(self, v: SeqVector) -> float:
        a = np.abs(v.coeffs)
        if self.p == 1:
            return float(a.sum())
        if self.p == 2:
            return float(np.dot(a, a))
        return float(np.sum(a**self.p))

    def evaluate(self, x):
        _require_finite_tail(x, "LpForm")
        inner = self._power_sum(x - self.z) + self.slack
        return max(inner, 0.0) ** (1.0 / self.p) - self.c

    def to_dict(self):
        return {"variant": "lp_form", "p": self.p, "z": self.z.to_dict(), "c": self.c}


@dataclass(frozen=True)
class L1Form(Functional):
    """``sum_{i in I} eps_i x_i + sum_{i not in I} (|x_i - z_i| - |z_i|)``.

    ``signs`` covers the first ``len(signs)`` indices: ``+1``/``-1`` mark
    indices in ``I`` with that sign, ``0`` marks indices outside ``I``
    where ``z`` supplies the anchor value.  Beyond the horizon the tail
    rule is ``"plus"`` (all in I, sign +1), ``"minus"`` (all in I, sign -1)
    or ``"out"`` (outside I with z = 0).
    """

    signs: tuple
    z: tuple
    tail_rule: str = "out"

    variant = "l1_form"

    def __post_init__(self):
        s = tuple(int(v) for v in self.signs)
        z = tuple(float(v) for v in self.z)
        if any(v not in (-1, 0, 1) for v in s):
            raise ValueError("signs must be -1, 0 or +1")
        if len(z) != len(s):
            raise ValueError("z must match the horizon")
        if self.tail_rule not in ("plus", "minus", "out"):
            raise ValueError("tail_rule must be 'plus', 'minus' or 'out'")
        object.__setattr__(self, "signs", s)
        object.__setattr__(self, "z", z)

    def evaluate(self, x):
        _require_finite_tail(x, "L1Form")
        m = len(self.signs)
        v = x.padded(m)
        s = np.array(self.signs, dtype=float)
        z = np.array(self.z)
        head = v[:m]
        in_i = s != 0
        total = float(np.sum(s[in_i] * head[in_i]))
        total += float(np.sum(np.abs(head[~in_i] - z[~in_i]) - np.abs(z[~in_i])))
        rest = v[m:]
        if self.tail_rule == "plus":
            total += float(rest.sum())
        elif self.tail_rule == "minus":
            total -= float(rest.sum())
        else:
            total += float(np.abs(rest).sum())
        return total

    def to_dict(self):
        return {"variant": "l1_form", "signs": list(self.signs), "z": list(self.z), "tail_rule": self.tail_rule}


@dataclass(frozen=True)
class Linear(Functional):
    """``x -> <x, z>``, validated as a metric functional for ``space``."""

    z: SeqVector
    space: Space

    variant = "linear"

    def __post_init__(self):
        sp = self.space
        if sp.is_direct_sum:
            raise ValueError("linear functionals on direct sums are not supported")
        if sp.kind == "lp" and sp.p == 1:
            vals = np.concatenate((self.z.coeffs, [self.z.tail_value]))
            if not np.all(np.abs(np.abs(vals) - 1) <= _SIGN_TOL):
                raise ValueError("l1 linear metric functionals need all signs in {-1, 1}")
            return
        if self.z.tail is not None:
            raise ValueError("dual vector must be finitely supported")
        if sp.kind == "lp":
            q = sp.p / (sp.p - 1)
            dual = norm(self.z, lp(q))
        else:
            dual = norm(self.z, lp(1))
        if dual > 1 + _SIGN_TOL:
            raise ValueError(f"dual norm {dual} exceeds 1")

    def evaluate(self, x):
        if x.tail is not None and self.z.tail is not None:
            raise DivergentSeries("pairing of two constant tails")
        m = max(x.support, self.z.support)
        return float(np.dot(x.padded(m)[:m], self.z.padded(m)[:m]))

    def to_dict(self):
        return {"variant": "linear", "z": self.z.to_dict(), "space": self.space.to_dict()}


@dataclass(frozen=True)
class BusemannL1Plane(Functional):
    """``-x_1 + alpha |x_2|`` on the plane with the 1-norm."""

    alpha: float = 1.0

    variant = "busemann_l1_plane"

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")

    def evaluate(self, x):
        if x.support > 2 or x.tail is not None:
            raise ValueError("BusemannL1Plane lives on R^2")
        return -x[0] + self.alpha * abs(x[1])

    def to_dict(self):
        return {"variant": "busemann_l1_plane", "alpha": self.alpha}


@dataclass(frozen=True)
class ShiftL1(Functional):
    """``sum_k (|x_k - 1| - 1)``, subinvariant for the prepend-one shift in l1."""

    variant = "shift_l1"

    def evaluate(self, x):
        t = x.tail_value
        if abs(t - 1) - 1 != 0:
            raise DivergentSeries(f"ShiftL1 diverges on tail {t}")
        return float(np.sum(np.abs(x.coeffs - 1) - 1))

    def to_dict(self):
        return {"variant": "shift_l1"}


@dataclass(frozen=True)
class ShiftC0(Functional):
    """``sup_k |x_k - 1| - 1``."""

    variant = "shift_c0"

    def evaluate(self, x):
        block = float(np.abs(x.coeffs - 1).max(initial=0.0))
        return max(block, abs(x.tail_value - 1)) - 1

    def to_dict(self):
        return {"variant": "shift_c0"}


@dataclass(frozen=True)
class HN(Functional):
    """``sum_{j>N} (-x_j) + sum_{j<=N} (|x_j - 1| - 1)``."""

    N: int

    variant = "hn"

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")

    def evaluate(self, x):
        _require_finite_tail(x, "HN")
        v = x.padded(self.N)
        head = v[: self.N]
        return float(np.sum(np.abs(head - 1) - 1)) - float(np.sum(v[self.N :]))

    def to_dict(self):
        return {"variant": "hn", "N": self.N}


@dataclass(frozen=True)
class Sum(Functional):
    """``(a, b) -> h^A(a) + h^B(b)`` on a direct sum.

    Only the p = 1 sum is guaranteed to be a metric functional; the flag
    :attr:`is_metric_functional` records this.
    """

    left: Functional
    right: Functional
    p: float = 1.0

    variant = "sum"

    @property
    def is_metric_functional(self) -> bool:
        return self.p == 1

    @property
    def base(self):
        return DirectSumPoint(self.left.base, self.right.base)

    def evaluate(self, x):
        return self.left.evaluate(x.left) + self.right.evaluate(x.right)

    def to_dict(self):
        return {"variant": "sum", "left": self.left.to_dict(), "right": self.right.to_dict(), "p": self.p}


def sum_functional(h_left: Functional, h_right: Functional, p: float = 1.0) -> Sum:
    return Sum(h_left, h_right, float(p))


@dataclass(frozen=True)
class Projection(Functional):
    """``(a, b) -> h(b)`` (or ``h(a)``) on a direct sum."""

    h: Functional
    side: str = "right"

    variant = "projection"

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")

    @property
    def base(self):
        return DirectSumPoint(SeqVector(), self.h.base) if self.side == "right" else DirectSumPoint(self.h.base, SeqVector())

    def evaluate(self, x):
        return self.h.evaluate(x.right if self.side == "right" else x.left)

    def to_dict(self):
        return {"variant": "projection", "h": self.h.to_dict(), "side": self.side}


@dataclass
class BusemannResult:
    value: float
    schedule: list
    values: list
    monotone: bool
    max_increase: float

    def to_dict(self):
        return {
            "value": self.value,
            "schedule": list(self.schedule),
            "values": list(self.values),
            "monotone": self.monotone,
            "max_increase": self.max_increase,
        }


def busemann_limit(u: SeqVector, x: SeqVector, space: Space, t_schedule: Sequence[float], tol: float = 1e-12) -> BusemannResult:
    """Evaluate ``||x - t u|| - t`` along an increasing schedule of ``t``.

    The sequence is non-increasing in ``t``; the audit records the largest
    observed increase.
    """
    ts = [float(t) for t in t_schedule]
    if len(ts) < 3:
        raise ValueError("schedule needs at least 3 points")
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("schedule must be strictly increasing")
    if abs(norm(u, space) - 1) > 1e-12:
        raise ValueError("u must be a unit vector")
    vals = [norm(x - u * t, space) - t for t in ts]
    inc = max((b - a for a, b in zip(vals, vals[1:])), default=0.0)
    return BusemannResult(vals[-1], ts, vals, inc <= tol, max(inc, 0.0))


def _point_from_dict(d):
    if isinstance(d, dict) and "left" in d:
        return DirectSumPoint.from_dict(d)
    return SeqVector.from_dict(d)


def functional_from_dict(d) -> Functional:
    v = d["variant"]
    if v == "internal":
        space = space_from_dict(d["space"])
        w = _point_from_dict(d["w"])
        o = _point_from_dict(d["o"]) if "o" in d else None
        return internal(w, space, o)
    if v == "lp_form":
        return LpForm(float(d["p"]), SeqVector.from_dict(d.get("z", {})), float(d["c"]))
    if v == "l1_form":
        return L1Form(tuple(d["signs"]), tuple(d.get("z", [0.0] * len(d["signs"]))), d.get("tail_rule", "out"))
    if v == "linear":
        return Linear(SeqVector.from_dict(d["z"]), space_from_dict(d["space"]))
    if v == "busemann_l1_plane":
        return BusemannL1Plane(float(d.get("alpha", 1.0)))
    if v == "shift_l1":
        return ShiftL1()
    if v == "shift_c0":
        return ShiftC0()
    if v == "hn":
        return HN(int(d["N"]))
    if v == "sum":
        return Sum(functional_from_dict(d["left"]), functional_from_dict(d["right"]), float(d.get("p", 1.0)))
    if v == "projection":
        return Projection(functional_from_dict(d["h"]), d.get("side", "right"))
    raise ValueError(f"unknown functional variant {v!r}")
