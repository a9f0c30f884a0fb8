"""Finite probe sets standing in for pointwise convergence."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seqspace import SeqVector

__all__ = ["ProbeSet", "default_probes", "random_vectors"]


@dataclass(frozen=True)
class ProbeSet:
    """Nonempty ordered list of probe points that contains the base point."""

    points: tuple

    def __post_init__(self):
        pts = tuple(self.points)
        if not pts:
            raise ValueError("probe set must be nonempty")
        object.__setattr__(self, "points", pts)

    @classmethod
    def of(cls, points, base=None) -> "ProbeSet":
        """Build from ``points``, prepending ``base`` (default 0) if absent; drops duplicates."""
        base = SeqVector() if base is None else base
        seen, out = set(), []
        for p in [base, *points]:
            if p not in seen:
                seen.add(p)
                out.append(p)
        return cls(tuple(out))

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def to_dict(self):
        return {"points": [p.to_dict() for p in self.points]}


def random_vectors(rng, count: int, max_support: int = 8, low: float = -2.0, high: float = 2.0, integer: bool = False):
    """Random finitely supported vectors with entries in ``[low, high]``."""
    out = []
    for _ in range(count):
        k = int(rng.integers(1, max_support + 1))
        if integer:
            c = rng.integers(int(low), int(high) + 1, size=k).astype(float)
        else:
            c = rng.uniform(low, high, size=k)
        out.append(SeqVector(c))
    return out


def default_probes(seed: int = 0, T=None, dim: int = 8, count: int = 50, orbit_len: int = 4, integer: bool = False) -> ProbeSet:
    """0, +-e_i (i <= dim), the orbit prefix of ``T`` and random vectors."""
    rng = np.random.default_rng(seed)
    pts = [SeqVector()]
    for i in range(1, dim + 1):
        pts += [SeqVector.unit(i), SeqVector.unit(i, -1.0)]
    if T is not None:
        x = SeqVector()
        for _ in range(orbit_len):
            x = T.apply(x)
            pts.append(x)
    pts += random_vectors(rng, count, dim, integer=integer)
    return ProbeSet.of(pts)
