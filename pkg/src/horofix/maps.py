"""Affine self-maps of sequence spaces built from a small constructor algebra.

Every node acts exactly on :class:`~horofix.seqspace.SeqVector` values,
including constant tails, so orbits of shift maps stay symbolic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .seqspace import SeqVector, Space, distance

__all__ = [
    "MapExpr",
    "Identity",
    "PrependShift",
    "ForwardShift",
    "BackwardShift",
    "Diagonal",
    "DenseBlock",
    "Affine",
    "Convex",
    "Compose",
    "Translate",
    "FamilySpec",
    "apply",
    "iterate",
    "build_Tmu",
    "build_polynomial_family",
    "linear_combination",
    "affine_parts",
    "window_size",
    "check_commuting",
    "check_nonexpansive",
    "lipschitz_bound",
    "block_operator_norm",
    "map_from_dict",
    "family_from_dict",
]


class MapExpr:
    """Base class for map nodes; subclasses implement :meth:`apply`."""

    linear = False

    def apply(self, x: SeqVector) -> SeqVector:
        raise NotImplementedError

    def __call__(self, x: SeqVector) -> SeqVector:
        return self.apply(x)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Identity(MapExpr):
    linear = True

    def apply(self, x):
        return x

    def to_dict(self):
        return {"node": "identity"}


@dataclass(frozen=True)
class PrependShift(MapExpr):
    """``x -> (value, x_1, x_2, ...)``."""

    value: float = 1.0

    @property
    def linear(self):
        return self.value == 0

    def apply(self, x):
        return SeqVector(np.concatenate(([self.value], x.padded(0))), x.tail)

    def to_dict(self):
        return {"node": "prepend_shift", "value": self.value}


@dataclass(frozen=True)
class ForwardShift(MapExpr):
    """``x -> (0, x_1, x_2, ...)``."""

    linear = True

    def apply(self, x):
        return SeqVector(np.concatenate(([0.0], x.padded(0))), x.tail)

    def to_dict(self):
        return {"node": "forward_shift"}


@dataclass(frozen=True)
class BackwardShift(MapExpr):
    """``x -> (x_2, x_3, ...)``."""

    linear = True

    def apply(self, x):
        return SeqVector(x.coeffs[1:], x.tail)

    def to_dict(self):
        return {"node": "backward_shift"}


@dataclass(frozen=True)
class Diagonal(MapExpr):
    weights: SeqVector

    linear = True

    def apply(self, x):
        return x * self.weights

    def to_dict(self):
        return {"node": "diagonal", "weights": self.weights.to_dict()}


@dataclass(frozen=True, eq=False)
class DenseBlock(MapExpr):
    """Square matrix on the first m coordinates, identity beyond."""

    matrix: np.ndarray

    linear = True

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("DenseBlock needs a square matrix")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def apply(self, x):
        m = self.matrix.shape[0]
        v = x.padded(m)
        v[:m] = self.matrix @ v[:m]
        return SeqVector(v, x.tail)

    def to_dict(self):
        return {"node": "dense", "matrix": self.matrix.tolist()}


@dataclass(frozen=True)
class Affine(MapExpr):
    """``x -> L x + b`` with ``L`` a linear node."""

    linear_part: MapExpr
    offset: SeqVector

    def __post_init__(self):
        if not self.linear_part.linear:
            raise ValueError("Affine needs a linear node as its linear part")

    @property
    def linear(self):
        return self.offset == SeqVector()

    def apply(self, x):
        return self.linear_part.apply(x) + self.offset

    def to_dict(self):
        return {"node": "affine", "linear": self.linear_part.to_dict(), "offset": self.offset.to_dict()}


@dataclass(frozen=True)
class Convex(MapExpr):
    """``x -> (1 - t) f(x) + t g(x)``."""

    t: float
    f: MapExpr
    g: MapExpr

    @property
    def linear(self):
        return self.f.linear and self.g.linear

    def apply(self, x):
        if self.t == 0:
            return self.f.apply(x)
        if self.t == 1:
            return self.g.apply(x)
        return self.f.apply(x) * (1.0 - self.t) + self.g.apply(x) * self.t

    def to_dict(self):
        return {"node": "convex", "t": self.t, "f": self.f.to_dict(), "g": self.g.to_dict()}


@dataclass(frozen=True)
class Compose(MapExpr):
    """``x -> f(g(x))``."""

    f: MapExpr
    g: MapExpr

    @property
    def linear(self):
        return self.f.linear and self.g.linear

    def apply(self, x):
        return self.f.apply(self.g.apply(x))

    def to_dict(self):
        return {"node": "compose", "f": self.f.to_dict(), "g": self.g.to_dict()}


@dataclass(frozen=True)
class Translate(MapExpr):
    offset: SeqVector

    @property
    def linear(self):
        return self.offset == SeqVector()

    def apply(self, x):
        return x + self.offset

    def to_dict(self):
        return {"node": "translate", "offset": self.offset.to_dict()}


def apply(T: MapExpr, x: SeqVector) -> SeqVector:
    return T.apply(x)


def iterate(T: MapExpr, x: SeqVector, n: int) -> SeqVector:
    """``T^n x``; shifts, translations and diagonals jump directly."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0 or isinstance(T, Identity):
        return x
    if isinstance(T, (PrependShift, ForwardShift)):
        v = T.value if isinstance(T, PrependShift) else 0.0
        return SeqVector(np.concatenate((np.full(n, v), x.padded(0))), x.tail)
    if isinstance(T, BackwardShift):
        return SeqVector(x.coeffs[n:], x.tail)
    if isinstance(T, Translate):
        return x + T.offset * n
    if isinstance(T, Diagonal):
        w = T.weights
        return x * SeqVector(w.coeffs**n, w.tail_value**n)
    for _ in range(n):
        x = T.apply(x)
    return x


def _scalar(c: float) -> MapExpr:
    return Diagonal(SeqVector.constant(c))


def _add(f: MapExpr, g: MapExpr) -> MapExpr:
    return Compose(_scalar(2.0), Convex(0.5, f, g))


def linear_combination(coeffs: Sequence[float], A: MapExpr) -> MapExpr:
    """``sum_k coeffs[k] A^k`` by Horner's rule, as a linear node."""
    if not A.linear:
        raise ValueError("polynomial calculus needs a linear operator")
    coeffs = [float(c) for c in coeffs]
    if not coeffs:
        raise ValueError("empty coefficient list")
    node = _scalar(coeffs[-1])
    for c in reversed(coeffs[:-1]):
        node = _add(_scalar(c), Compose(A, node))
    return node


def build_Tmu(A: MapExpr, b: SeqVector, mu: float) -> MapExpr:
    """``T_mu x = (1 - mu) x + mu (A x + b)``."""
    if not A.linear:
        raise ValueError("A must be linear")
    return Convex(float(mu), Identity(), Affine(A, b))


def build_polynomial_family(A: MapExpr, b: SeqVector, q_coeffs, labels=None) -> "FamilySpec":
    """Commuting affine family ``T_s x = p_s(A) x + q_s(A) b``.

    Parameters
    ----------
    A : MapExpr
        Linear operator.
    b : SeqVector
        Offset vector.
    q_coeffs : list of coefficient lists
        Each entry lists ascending coefficients of ``q_s``; the linear part
        is ``p_s(l) = 1 - (1 - l) q_s(l)``.
    """
    if not A.linear:
        raise ValueError("A must be linear")
    if not q_coeffs:
        raise ValueError("need at least one polynomial q_s")
    members = []
    for i, q in enumerate(q_coeffs):
        q = np.trim_zeros(np.asarray(q, dtype=float), "b")
        if q.size == 0:
            raise ValueError("q_s must not vanish identically")
        p = P.polysub([1.0], P.polymul([1.0, -1.0], q))
        offset = linear_combination(q, A).apply(b)
        label = labels[i] if labels else f"T{i}"
        members.append((label, Affine(linear_combination(p, A), offset)))
    return FamilySpec(tuple(members))


@dataclass(frozen=True)
class FamilySpec:
    """Ordered, labelled family of maps assumed to commute."""

    members: tuple
    waive_commutation: bool = False

    def __post_init__(self):
        members = tuple((str(lbl), T) for lbl, T in self.members)
        if not members:
            raise ValueError("family must be nonempty")
        object.__setattr__(self, "members", members)

    @property
    def labels(self):
        return [lbl for lbl, _ in self.members]

    @property
    def maps(self):
        return [T for _, T in self.members]

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def verified(self, probes, tol=1e-12, space=None) -> "FamilySpec":
        """Return self after checking commutation on ``probes`` unless waived."""
        if not self.waive_commutation:
            rep = check_commuting(self, probes, tol, space)
            if not rep.passed:
                raise ValueError(f"family does not commute: {rep.worst_pair} defect {rep.max_defect:.3e}")
        return self

    def to_dict(self):
        return {
            "members": [{"label": lbl, "map": T.to_dict()} for lbl, T in self.members],
            "waive_commutation": self.waive_commutation,
        }


@dataclass
class CommutationReport:
    passed: bool
    max_defect: float
    worst_pair: Optional[tuple]
    witness: Optional[SeqVector]
    defects: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "passed": self.passed,
            "max_defect": self.max_defect,
            "worst_pair": list(self.worst_pair) if self.worst_pair else None,
            "witness": self.witness.to_dict() if self.witness is not None else None,
            "defects": {f"{a}|{b}": v for (a, b), v in self.defects.items()},
        }


def check_commuting(F: FamilySpec, probes, tol: float = 1e-12, space: Optional[Space] = None) -> CommutationReport:
    """Record ``d(TUx, UTx)`` for every pair and probe.

    The default metric is the sup-norm, which is finite on every
    eventually-constant sequence.
    """
    from .seqspace import linfty

    probes = list(probes)
    if not probes:
        raise ValueError("need at least one probe")
    space = space or linfty()
    worst, worst_pair, witness = 0.0, None, None
    defects = {}
    for (la, A), (lb, B) in combinations(F.members, 2):
        pair_max = 0.0
        for x in probes:
            d = distance(A.apply(B.apply(x)), B.apply(A.apply(x)), space)
            if d > pair_max:
                pair_max = d
            if d > worst:
                worst, worst_pair, witness = d, (la, lb), x
        defects[(la, lb)] = pair_max
    return CommutationReport(worst <= tol, worst, worst_pair, witness, defects)


def block_operator_norm(M: np.ndarray, space: Space, iters: int = 200, rtol: float = 1e-10) -> tuple:
    """Induced norm bound of a square block; returns ``(value, is_estimate)``.

    l1: max column sum; l_inf/c0: max row sum; l2: power iteration on M^T M;
    other l_p: the Riesz-Thorin interpolation bound.
    """
    M = np.asarray(M, dtype=float)
    col = float(np.abs(M).sum(axis=0).max()) if M.size else 0.0
    row = float(np.abs(M).sum(axis=1).max()) if M.size else 0.0
    if space.kind in ("c0", "linfty"):
        return row, False
    if space.p == 1:
        return col, False
    if space.p == 2:
        if not M.size:
            return 0.0, False
        v = np.random.default_rng(0).standard_normal(M.shape[0])
        v /= np.linalg.norm(v)
        sigma = 0.0
        for _ in range(iters):
            w = M.T @ (M @ v)
            nw = np.linalg.norm(w)
            if nw == 0:
                return 0.0, True
            new = math.sqrt(nw)
            v = w / nw
            if sigma and abs(new - sigma) <= rtol * sigma:
                sigma = new
                break
            sigma = new
        return sigma, True
    p = space.p
    return col ** (1.0 / p) * row ** (1.0 - 1.0 / p), False


def lipschitz_bound(T: MapExpr, space: Space) -> tuple:
    """Per-constructor upper bound on the Lipschitz constant of ``T``.

    Returns ``(bound, is_estimate)``; the flag is set when an l2 block norm
    came from power iteration.
    """
    if isinstance(T, (Identity, PrependShift, ForwardShift, BackwardShift, Translate)):
        return 1.0, False
    if isinstance(T, Diagonal):
        w = T.weights
        return max(float(np.abs(w.coeffs).max(initial=0.0)), abs(w.tail_value)), False
    if isinstance(T, DenseBlock):
        val, est = block_operator_norm(T.matrix, space)
        return max(val, 1.0), est
    if isinstance(T, Affine):
        return lipschitz_bound(T.linear_part, space)
    if isinstance(T, Convex):
        lf, ef = lipschitz_bound(T.f, space)
        lg, eg = lipschitz_bound(T.g, space)
        return abs(1 - T.t) * lf + abs(T.t) * lg, ef or eg
    if isinstance(T, Compose):
        lf, ef = lipschitz_bound(T.f, space)
        lg, eg = lipschitz_bound(T.g, space)
        return lf * lg, ef or eg
    raise TypeError(f"unknown node {type(T).__name__}")


@dataclass
class NonexpansiveReport:
    passed: bool
    max_defect: float
    witness: Optional[tuple]
    lipschitz_bound: float
    bound_is_estimate: bool

    @property
    def certified(self) -> bool:
        return self.lipschitz_bound <= 1.0 + 1e-12

    def to_dict(self):
        return {
            "passed": self.passed,
            "max_defect": self.max_defect,
            "witness": [w.to_dict() for w in self.witness] if self.witness else None,
            "lipschitz_bound": self.lipschitz_bound,
            "bound_is_estimate": self.bound_is_estimate,
            "certified": self.certified,
        }


def check_nonexpansive(T: MapExpr, space: Space, probe_pairs, tol: float = 1e-12) -> NonexpansiveReport:
    """Sampled audit of ``d(Tx, Ty) <= d(x, y)`` plus the constructor bound."""
    worst, witness = -math.inf, None
    for x, y in probe_pairs:
        d = distance(T.apply(x), T.apply(y), space) - distance(x, y, space)
        if d > worst:
            worst, witness = d, (x, y)
    if witness is None:
        worst = 0.0
    bound, est = lipschitz_bound(T, space)
    return NonexpansiveReport(worst <= tol, worst, witness, bound, est)


def window_size(T: MapExpr) -> Optional[int]:
    """Number of leading coordinates ``T`` can touch, or None for shifts.

    When finite, ``T`` maps vectors supported in the first ``w`` coordinates
    (with zero tail) into the same window, for any ``w`` at least this value.
    """
    if isinstance(T, Identity):
        return 0
    if isinstance(T, (PrependShift, ForwardShift, BackwardShift)):
        return None
    if isinstance(T, Diagonal):
        return T.weights.support
    if isinstance(T, DenseBlock):
        return T.matrix.shape[0]
    if isinstance(T, (Affine, Translate)):
        if T.offset.tail is not None:
            return None
        inner = window_size(T.linear_part) if isinstance(T, Affine) else 0
        return None if inner is None else max(inner, T.offset.support)
    if isinstance(T, (Convex, Compose)):
        a, b = window_size(T.f), window_size(T.g)
        return None if a is None or b is None else max(a, b)
    return None


def affine_parts(T: MapExpr, dim: int) -> tuple:
    """Matrix ``M`` and offset ``c`` with ``T x = M x + c`` on the first ``dim`` coordinates."""
    c = T.apply(SeqVector()).padded(dim)[:dim]
    M = np.empty((dim, dim))
    for j in range(dim):
        M[:, j] = T.apply(SeqVector.unit(j + 1)).padded(dim)[:dim] - c
    return M, c


_NODES = {
    "identity": lambda d: Identity(),
    "prepend_shift": lambda d: PrependShift(float(d.get("value", 1.0))),
    "forward_shift": lambda d: ForwardShift(),
    "backward_shift": lambda d: BackwardShift(),
    "diagonal": lambda d: Diagonal(SeqVector.from_dict(d["weights"])),
    "dense": lambda d: DenseBlock(np.array(d["matrix"], dtype=float)),
    "affine": lambda d: Affine(map_from_dict(d["linear"]), SeqVector.from_dict(d["offset"])),
    "convex": lambda d: Convex(float(d["t"]), map_from_dict(d["f"]), map_from_dict(d["g"])),
    "compose": lambda d: Compose(map_from_dict(d["f"]), map_from_dict(d["g"])),
    "translate": lambda d: Translate(SeqVector.from_dict(d["offset"])),
    "tmu": lambda d: build_Tmu(map_from_dict(d["A"]), SeqVector.from_dict(d["b"]), float(d["mu"])),
}


def map_from_dict(d) -> MapExpr:
    try:
        return _NODES[d["node"]](d)
    except KeyError as exc:
        raise ValueError(f"bad map expression: {d!r}") from exc


def family_from_dict(d) -> FamilySpec:
    members = tuple((m["label"], map_from_dict(m["map"])) for m in d["members"])
    return FamilySpec(members, bool(d.get("waive_commutation", False)))
