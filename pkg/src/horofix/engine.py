"""Constructive fixed-point machinery for commuting families of affine maps.

Nested Cesaro averages drive the displacement of every member to zero at
rate ``||w - T^n w|| / n``; limits of the resulting internal functionals
are subinvariant for the whole family.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import NotFound, UnboundedOrbit, Unresolved
from .limits import asymptotic_center, empirical_limit, orbit
from .maps import FamilySpec, MapExpr, affine_parts, window_size
from .probes import ProbeSet
from .seqspace import SeqVector, Space, distance, lp, norm

__all__ = [
    "cesaro_average",
    "nested_average",
    "AveragingTrace",
    "translation_number",
    "TranslationEstimate",
    "product_orbit",
    "ProductOrbit",
    "common_fixed_point",
    "ump_fixed_point",
]

DEFAULT_SPACE = lp(2)


class _Kernel:
    """Runs members either structurally or as dense affine maps on a window.

    Compilation applies when no member shifts coordinates and the seed has a
    zero tail; both paths agree up to rounding.
    """

    def __init__(self, maps, seed: SeqVector, space: Space):
        self.maps = list(maps)
        self.space = space
        wins = [window_size(T) for T in self.maps]
        self.compiled = (
            not space.is_direct_sum
            and seed.tail is None
            and all(w is not None for w in wins)
        )
        if self.compiled:
            self.dim = max([seed.support, 1, *wins])
            self.parts = [affine_parts(T, self.dim) for T in self.maps]

    def start(self, x: SeqVector):
        return x.padded(self.dim)[: self.dim] if self.compiled else x

    def step(self, j: int, v):
        if self.compiled:
            M, c = self.parts[j]
            return M @ v + c
        return self.maps[j].apply(v)

    def norm(self, v) -> float:
        if not self.compiled:
            return norm(v, self.space)
        if math.isinf(self.space.p):
            return float(np.abs(v).max(initial=0.0))
        return float(np.linalg.norm(v, ord=self.space.p))

    def out(self, v) -> SeqVector:
        return SeqVector(v) if self.compiled else v


def _cesaro(kern: _Kernel, j: int, v, n: int):
    """Average of ``v, T v, ..., T^(n-1) v`` and the point ``T^n v``."""
    total, x = v, v
    for _ in range(n - 1):
        x = kern.step(j, x)
        total = total + x
    return total / n, kern.step(j, x)


def cesaro_average(T: MapExpr, seed: SeqVector, n: int, space: Space = DEFAULT_SPACE) -> SeqVector:
    """``n^-1 (w + T w + ... + T^(n-1) w)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    kern = _Kernel([T], seed, space)
    avg, _ = _cesaro(kern, 0, kern.start(seed), n)
    return kern.out(avg)


@dataclass
class AveragingTrace:
    """Nested Cesaro iterates over a schedule of ``n``.

    ``defects[label][i]`` is ``||b_n - T b_n||`` and ``bounds[label][i]`` is
    ``||w - T^n w|| / n`` at ``schedule[i]``; ``first_level`` holds
    ``||a_n - T a_n||`` for the first member.
    """

    order: list
    schedule: list
    iterates: list
    defects: dict
    bounds: dict
    first_level: list
    levels: list = field(default_factory=list)

    def bound_violation(self) -> float:
        """Largest ``defect - bound`` over members and n (<= 0 when the bound holds)."""
        worst = -math.inf
        for lbl in self.order:
            worst = max(worst, max(d - b for d, b in zip(self.defects[lbl], self.bounds[lbl])))
        first = self.order[0]
        worst = max(worst, max(d - a for d, a in zip(self.defects[first], self.first_level)))
        worst = max(worst, max(a - b for a, b in zip(self.first_level, self.bounds[first])))
        return worst

    def max_defects(self) -> list:
        return [max(self.defects[l][i] for l in self.order) for i in range(len(self.schedule))]

    def rows(self):
        for i, n in enumerate(self.schedule):
            row = {"n": n}
            for l in self.order:
                row[f"defect_{l}"] = self.defects[l][i]
                row[f"bound_{l}"] = self.bounds[l][i]
            yield row

    def to_csv(self, path):
        rows = list(self.rows())
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            for r in rows:
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})

    def to_dict(self):
        return {
            "order": list(self.order),
            "schedule": list(self.schedule),
            "defects": {k: list(v) for k, v in self.defects.items()},
            "bounds": {k: list(v) for k, v in self.bounds.items()},
            "first_level": list(self.first_level),
            "bound_violation": self.bound_violation(),
        }


def _nested_once(kern: _Kernel, seed_v, n: int, keep_levels=False):
    v, levels, t_n = seed_v, [], None
    for j in range(len(kern.maps)):
        v, last = _cesaro(kern, j, v, n)
        if j == 0:
            t_n = last
        levels.append(v)
    b = v
    defects = [kern.norm(b - kern.step(j, b)) for j in range(len(kern.maps))]
    bounds = [kern.norm(seed_v - t_n) / n]
    for j in range(1, len(kern.maps)):
        x = seed_v
        for _ in range(n):
            x = kern.step(j, x)
        bounds.append(kern.norm(seed_v - x) / n)
    a1 = levels[0]
    first = kern.norm(a1 - kern.step(0, a1))
    return b, defects, bounds, first, (levels if keep_levels else None)


def nested_average(F: FamilySpec, seed: SeqVector, n, space: Space = DEFAULT_SPACE, keep_levels: bool = False) -> AveragingTrace:
    """Fold Cesaro averaging over the members of ``F`` in their declared order.

    ``n`` may be a single count or a schedule of counts.
    """
    schedule = [int(n)] if np.isscalar(n) else [int(k) for k in n]
    if any(k < 1 for k in schedule):
        raise ValueError("n must be >= 1")
    kern = _Kernel(F.maps, seed, space)
    s = kern.start(seed)
    order = F.labels
    trace = AveragingTrace(order, schedule, [], {l: [] for l in order}, {l: [] for l in order}, [])
    for k in schedule:
        b, defects, bounds, first, levels = _nested_once(kern, s, k, keep_levels)
        trace.iterates.append(kern.out(b))
        for l, d, bd in zip(order, defects, bounds):
            trace.defects[l].append(d)
            trace.bounds[l].append(bd)
        trace.first_level.append(first)
        if keep_levels:
            trace.levels.append([kern.out(v) for v in levels])
    return trace


@dataclass
class TranslationEstimate:
    """Samples of ``||T^n y - y|| / n`` and ``||T^n y|| / n`` for ``n = 1..n_max``."""

    displacement: np.ndarray
    magnitude: np.ndarray
    envelope: np.ndarray
    estimate: float
    subadditivity_violation: float

    def to_dict(self):
        return {
            "estimate": self.estimate,
            "final_displacement_rate": float(self.displacement[-1]),
            "final_magnitude_rate": float(self.magnitude[-1]),
            "subadditivity_violation": self.subadditivity_violation,
        }


def translation_number(T: MapExpr, y: SeqVector, space: Space, n_max: int, seed: int = 0) -> TranslationEstimate:
    """Estimate the minimal displacement ``inf ||x - T x||`` from one orbit.

    The estimate is the Fekete envelope ``min_n ||T^n y - y|| / n``.
    """
    if n_max < 8:
        raise ValueError("n_max must be >= 8")
    kern = _Kernel([T], y, space)
    y0 = kern.start(y)
    D = np.zeros(n_max + 1)
    N = np.zeros(n_max + 1)
    x = y0
    for k in range(1, n_max + 1):
        x = kern.step(0, x)
        D[k] = kern.norm(x - y0)
        N[k] = kern.norm(x)
    ns = np.arange(1, n_max + 1)
    disp = D[1:] / ns
    mag = N[1:] / ns
    env = np.minimum.accumulate(disp)
    if n_max <= 2000:
        m, k = np.meshgrid(ns, ns, indexing="ij")
        ok = m + k <= n_max
        m, k = m[ok], k[ok]
    else:
        rng = np.random.default_rng(seed)
        m = rng.integers(1, n_max, size=20000)
        k = rng.integers(1, n_max - m + 1)
    viol = float(np.max(D[m + k] - D[m] - D[k]))
    return TranslationEstimate(disp, mag, env, float(env[-1]), viol)


@dataclass
class ProductOrbit:
    """``x_n = T_1^n ... T_r^n x_0`` with per-member residuals and their bounds."""

    points: list
    residuals: dict
    bounds: dict

    def audit_violation(self) -> float:
        return max(
            max(r - b for r, b in zip(self.residuals[l], self.bounds[l])) for l in self.residuals
        )

    def to_dict(self):
        return {
            "residuals": {k: list(v) for k, v in self.residuals.items()},
            "bounds": {k: list(v) for k, v in self.bounds.items()},
            "audit_violation": self.audit_violation(),
        }


def product_orbit(F: FamilySpec, x0: SeqVector, n: int, space: Space = DEFAULT_SPACE) -> ProductOrbit:
    """Product orbit of a commuting family, built incrementally as ``x_{k+1} = T_1 ... T_r x_k``."""
    kern = _Kernel(F.maps, x0, space)
    r = len(F)
    x = kern.start(x0)
    own = [x] * r
    pts = [kern.out(x)]
    res = {l: [] for l in F.labels}
    bnd = {l: [] for l in F.labels}
    for k in range(n + 1):
        if k:
            for j in reversed(range(r)):
                x = kern.step(j, x)
            pts.append(kern.out(x))
        for j, l in enumerate(F.labels):
            res[l].append(kern.norm(x - kern.step(j, x)))
            nxt = kern.step(j, own[j])
            bnd[l].append(kern.norm(own[j] - nxt))
            own[j] = nxt
    return ProductOrbit(pts, res, bnd)


def _residuals(F: FamilySpec, z: SeqVector, space: Space) -> dict:
    return {l: distance(T.apply(z), z, space) for l, T in F.members}


def common_fixed_point(F: FamilySpec, seed: SeqVector, space: Space = DEFAULT_SPACE, tol: float = 1e-10,
                       n_max: int = 2**17, n_min: int = 2**3, max_sweeps: int = 200_000, full_output: bool = False):
    """Common fixed point of a commuting affine nonexpansive family.

    Runs nested averaging on the doubling schedule ``n_min, 2 n_min, ...,
    n_max`` until every member displacement is at most ``tol``, then polishes
    the last average by cyclic midpoint iteration ``z <- (z + T z) / 2``.

    Returns ``z``; with ``full_output`` also a dict holding the averaging
    trace, the residuals and the sweep count.  Raises :class:`Unresolved`
    when the residual stays above ``tol`` and :class:`UnboundedOrbit` when
    iterates blow up.
    """
    if space.kind != "lp":
        raise ValueError("common fixed points are sought in l_p")
    kern = _Kernel(F.maps, seed, space)
    s = kern.start(seed)
    limit = 1e6 * (1 + norm(seed, space))
    order = F.labels
    trace = AveragingTrace(order, [], [], {l: [] for l in order}, {l: [] for l in order}, [])
    z = s
    n = n_min
    while n <= n_max:
        b, defects, bounds, first, _ = _nested_once(kern, s, n)
        if kern.norm(b) > limit:
            raise UnboundedOrbit(f"average norm {kern.norm(b):.3e} exceeds {limit:.3e}")
        trace.schedule.append(n)
        trace.iterates.append(kern.out(b))
        for l, d, bd in zip(order, defects, bounds):
            trace.defects[l].append(d)
            trace.bounds[l].append(bd)
        trace.first_level.append(first)
        z = b
        if max(defects) <= tol:
            break
        n *= 2
    sweeps = 0
    r = len(F)
    while sweeps < max_sweeps:
        worst = max(kern.norm(z - kern.step(j, z)) for j in range(r))
        if worst <= tol:
            break
        for j in range(r):
            z = (z + kern.step(j, z)) / 2
        sweeps += 1
        if sweeps % 64 == 0 and kern.norm(z) > limit:
            raise UnboundedOrbit("polishing iterates diverged")
    zs = kern.out(z)
    residuals = _residuals(F, zs, space)
    info = {"trace": trace, "residuals": residuals, "sweeps": sweeps, "compiled": kern.compiled}
    if max(residuals.values()) > tol:
        raise Unresolved(f"residual {max(residuals.values()):.3e} above tol {tol:.1e}", trace, residuals)
    return (zs, info) if full_output else zs


def ump_fixed_point(T: MapExpr, x0: SeqVector, space: Space = DEFAULT_SPACE, n: int = 200, tol: float = 1e-6,
                    last_k: int = 20, dim: Optional[int] = None):
    """Fixed point as the unique minimizer of the orbit's metric functional.

    The asymptotic center ``a`` of the orbit minimizes its limit functional;
    when that functional is subinvariant and the minimizer is unique, ``T a``
    must equal ``a``.  Raises :class:`NotFound` with a diagnostic otherwise.
    """
    if space.kind != "lp":
        raise ValueError("needs an l_p space")
    pts = orbit(T, x0, n)
    norms = [norm(p, space) for p in pts]
    bound = 1e6 * (1 + norms[0])
    if max(norms) > bound:
        raise NotFound("orbit is unbounded", {"max_norm": max(norms)})
    dim = dim or max(1, max(p.support for p in pts))
    rep = asymptotic_center(pts, space, dim, last_k)
    a = rep.center
    Ta = T.apply(a)
    r = distance(Ta, a, space)
    e = empirical_limit(pts[-max(last_k, 3):], ProbeSet.of([a, Ta]), space)
    diag = {
        "residual": r,
        "center_norm": norm(a, space),
        "orbit_norm_growth": norms[-1] - norms[len(norms) // 2],
        "h_Ta_minus_h_a": e.evaluate(Ta) - e.evaluate(a),
        "center": rep.to_dict(),
    }
    if r <= tol:
        return a
    raise NotFound(f"asymptotic center is not fixed (residual {r:.3e})", diag)
