"""Points of classical sequence spaces and their metrics.

A :class:`SeqVector` is a finite block of real coefficients followed by a
symbolic tail that is either zero or a repeated constant.  This covers every
sequence needed here: finitely supported vectors of l_p and c_0, and
eventually-constant sequences such as ``(1, 1, 1, ...)`` in l_inf.

Coordinates are stored 0-based; helpers that mirror the mathematical
notation (``unit(k)`` for e_k) take 1-based indices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

__all__ = [
    "SeqVector",
    "DirectSumPoint",
    "Space",
    "lp",
    "c0",
    "linfty",
    "direct_sum",
    "contains",
    "norm",
    "distance",
    "combine_metrics",
    "dsum_distance",
    "zero",
    "space_from_dict",
]


def _tail_value(tail):
    return 0.0 if tail is None else tail


class SeqVector:
    """Immutable real sequence ``(c_1, ..., c_m, t, t, t, ...)``.

    ``tail=None`` means the zero tail.  A constant tail of ``0.0`` is
    normalized to ``None`` and trailing block entries equal to the tail are
    dropped, so equal sequences have equal representations.
    """

    __slots__ = ("_coeffs", "_tail")

    def __init__(self, coeffs=(), tail: Optional[float] = None):
        c = np.array(coeffs, dtype=float).ravel()
        if tail is not None:
            tail = float(tail)
            if not math.isfinite(tail):
                raise ValueError("tail must be finite")
            if tail == 0.0:
                tail = None
        if c.size and not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        tv = _tail_value(tail)
        keep = np.flatnonzero(c != tv)
        c = c[: keep[-1] + 1] if keep.size else c[:0]
        c = c + 0.0  # flush -0.0
        c.setflags(write=False)
        self._coeffs = c
        self._tail = tail

    # construction helpers
    @classmethod
    def zeros(cls) -> "SeqVector":
        return cls()

    @classmethod
    def unit(cls, k: int, scale: float = 1.0) -> "SeqVector":
        """``scale * e_k`` with ``k >= 1``."""
        if k < 1:
            raise ValueError("basis index is 1-based")
        c = np.zeros(k)
        c[k - 1] = scale
        return cls(c)

    @classmethod
    def constant(cls, value: float) -> "SeqVector":
        return cls((), tail=value)

    @classmethod
    def ones(cls, n: int) -> "SeqVector":
        return cls(np.ones(n))

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def tail(self) -> Optional[float]:
        return self._tail

    @property
    def tail_value(self) -> float:
        return _tail_value(self._tail)

    @property
    def support(self) -> int:
        """Length of the normalized coefficient block."""
        return self._coeffs.size

    @property
    def finitely_supported(self) -> bool:
        return self._tail is None

    def padded(self, m: int) -> np.ndarray:
        """First ``max(m, support)`` coordinates as a fresh array."""
        n = max(m, self.support)
        out = np.full(n, self.tail_value)
        out[: self.support] = self._coeffs
        return out

    def __getitem__(self, k: int) -> float:
        if k < 0:
            raise IndexError("negative coordinate")
        return float(self._coeffs[k]) if k < self.support else self.tail_value

    # arithmetic
    def _binary(self, other, op):
        if not isinstance(other, SeqVector):
            return NotImplemented
        m = max(self.support, other.support)
        tail = op(self.tail_value, other.tail_value)
        return SeqVector(op(self.padded(m), other.padded(m)), tail)

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return SeqVector(-self._coeffs, -self.tail_value)

    def __mul__(self, t):
        if isinstance(t, SeqVector):
            return self._binary(t, np.multiply)
        t = float(t)
        return SeqVector(self._coeffs * t, self.tail_value * t)

    __rmul__ = __mul__

    def __truediv__(self, t):
        t = float(t)
        return SeqVector(self._coeffs / t, self.tail_value / t)

    def __eq__(self, other):
        if not isinstance(other, SeqVector):
            return NotImplemented
        return self._tail == other._tail and np.array_equal(self._coeffs, other._coeffs)

    def __hash__(self):
        return hash((self._tail, self._coeffs.tobytes()))

    def __repr__(self):
        block = ", ".join(repr(float(v)) for v in self._coeffs[:8])
        if self.support > 8:
            block += f", ... ({self.support} coords)"
        tail = "" if self._tail is None else f", tail={self._tail!r}"
        return f"SeqVector([{block}]{tail})"

    def to_dict(self) -> dict:
        return {"coeffs": [float(v) for v in self._coeffs], "tail": self._tail}

    @classmethod
    def from_dict(cls, d) -> "SeqVector":
        if isinstance(d, (list, tuple)):
            return cls(d)
        return cls(d.get("coeffs", ()), d.get("tail"))


@dataclass(frozen=True)
class DirectSumPoint:
    """A point ``(a, b)`` of a direct sum ``A (+) B``."""

    left: SeqVector
    right: SeqVector

    def __add__(self, other):
        return DirectSumPoint(self.left + other.left, self.right + other.right)

    def __sub__(self, other):
        return DirectSumPoint(self.left - other.left, self.right - other.right)

    def __mul__(self, t):
        return DirectSumPoint(self.left * t, self.right * t)

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        return {"left": self.left.to_dict(), "right": self.right.to_dict()}

    @classmethod
    def from_dict(cls, d) -> "DirectSumPoint":
        return cls(SeqVector.from_dict(d["left"]), SeqVector.from_dict(d["right"]))


Point = Union[SeqVector, DirectSumPoint]


@dataclass(frozen=True)
class Space:
    """One of l_p (1 <= p < inf), c_0, l_inf or a direct sum of two spaces."""

    kind: str
    p: float = math.inf
    left: Optional["Space"] = None
    right: Optional["Space"] = None

    def __post_init__(self):
        if self.kind == "lp":
            if not (1 <= self.p < math.inf):
                raise ValueError(f"l_p requires 1 <= p < inf, got p={self.p}")
        elif self.kind in ("c0", "linfty"):
            object.__setattr__(self, "p", math.inf)
        elif self.kind == "dsum":
            if self.left is None or self.right is None:
                raise ValueError("direct sum needs both components")
            if not self.p >= 1:
                raise ValueError("direct sum exponent must be >= 1")
        else:
            raise ValueError(f"unknown space kind {self.kind!r}")

    @property
    def is_direct_sum(self) -> bool:
        return self.kind == "dsum"

    def __str__(self):
        if self.kind == "lp":
            return f"l{self.p:g}"
        if self.kind == "dsum":
            return f"({self.left} + {self.right})_{self.p:g}"
        return {"c0": "c0", "linfty": "linf"}[self.kind]

    def to_dict(self) -> dict:
        if self.kind == "lp":
            return {"kind": "lp", "p": self.p}
        if self.kind == "dsum":
            p = "inf" if math.isinf(self.p) else self.p
            return {"kind": "dsum", "p": p, "left": self.left.to_dict(), "right": self.right.to_dict()}
        return {"kind": self.kind}


def lp(p: float) -> Space:
    return Space("lp", float(p))


def c0() -> Space:
    return Space("c0")


def linfty() -> Space:
    return Space("linfty")


def direct_sum(left: Space, right: Space, p: float = 1.0) -> Space:
    return Space("dsum", float(p), left, right)


def space_from_dict(d) -> Space:
    kind = d["kind"]
    if kind == "lp":
        return lp(d["p"])
    if kind == "c0":
        return c0()
    if kind in ("linfty", "linf"):
        return linfty()
    if kind == "dsum":
        return direct_sum(space_from_dict(d["left"]), space_from_dict(d["right"]), float(d.get("p", 1)))
    raise ValueError(f"unknown space kind {kind!r}")


def zero(space: Space) -> Point:
    if space.is_direct_sum:
        return DirectSumPoint(zero(space.left), zero(space.right))
    return SeqVector()


def contains(space: Space, x: Point) -> bool:
    """Membership: l_p and c_0 need a zero tail, l_inf accepts any constant tail."""
    if space.is_direct_sum:
        return (
            isinstance(x, DirectSumPoint)
            and contains(space.left, x.left)
            and contains(space.right, x.right)
        )
    if not isinstance(x, SeqVector):
        return False
    return space.kind == "linfty" or x.tail is None


def _block_norm(c: np.ndarray, p: float) -> float:
    if c.size == 0:
        return 0.0
    a = np.abs(c)
    if math.isinf(p):
        return float(a.max())
    if p == 1:
        return float(a.sum())
    # scale by the largest entry so tiny coordinates do not underflow
    m = float(a.max())
    if m == 0.0:
        return 0.0
    a = a / m
    if p == 2:
        return m * math.sqrt(float(np.dot(a, a)))
    return m * float(np.sum(a**p) ** (1.0 / p))


def combine_metrics(d_left: float, d_right: float, p: float) -> float:
    """``(d_A^p + d_B^p)^(1/p)`` or ``max(d_A, d_B)`` for p = inf."""
    if math.isinf(d_left) or math.isinf(d_right):
        return math.inf
    if math.isinf(p):
        return max(d_left, d_right)
    if p == 1:
        return d_left + d_right
    return _block_norm(np.array([d_left, d_right]), p)


def norm(x: Point, space: Space) -> float:
    """Norm of ``x``; ``math.inf`` when a nonzero constant tail meets l_p or c_0."""
    if space.is_direct_sum:
        return combine_metrics(norm(x.left, space.left), norm(x.right, space.right), space.p)
    if space.kind == "linfty":
        return max(_block_norm(x.coeffs, math.inf), abs(x.tail_value))
    if x.tail is not None:
        return math.inf
    return _block_norm(x.coeffs, space.p)


def distance(x: Point, y: Point, space: Space) -> float:
    if space.is_direct_sum:
        return dsum_distance(x, y, space)
    return norm(x - y, space)


def dsum_distance(x: DirectSumPoint, y: DirectSumPoint, space: Space) -> float:
    if not space.is_direct_sum:
        raise ValueError("dsum_distance needs a direct-sum space")
    d_a = distance(x.left, y.left, space.left)
    d_b = distance(x.right, y.right, space.right)
    return combine_metrics(d_a, d_b, space.p)
