"""Empirical metric functionals, asymptotic centers and property checks.

Metric functionals that are not internal arise as pointwise limits of
``h_n(x) = d(x, a_n) - d(o, a_n)`` along unbounded or weakly convergent
sequences.  Here the limit is tabulated on a finite probe set and accepted
when the last few values settle.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog, minimize

from .functionals import Functional
from .maps import MapExpr, iterate
from .probes import ProbeSet
from .seqspace import SeqVector, Space, distance, norm, zero

__all__ = [
    "orbit",
    "orbit_tail",
    "EmpiricalFunctional",
    "empirical_limit",
    "MatchReport",
    "match_hypothesis",
    "CenterReport",
    "asymptotic_center",
    "OpialReport",
    "opial_check",
    "ZFPResult",
    "zfp_scan",
    "lipschitz_violation",
    "scaled_tables",
]

CONVERGENCE_WINDOW = 5
LIMINF_WINDOW = 20


def orbit(T: MapExpr, x0: SeqVector, n: int) -> list:
    """``[x0, T x0, ..., T^n x0]``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = [x0]
    for _ in range(n):
        out.append(T.apply(out[-1]))
    return out


def orbit_tail(T: MapExpr, x0: SeqVector, n: int, k: int) -> list:
    """``[T^(n-k+1) x0, ..., T^n x0]`` without materializing the prefix when T jumps."""
    k = min(k, n + 1)
    x = iterate(T, x0, n - k + 1)
    out = [x]
    for _ in range(k - 1):
        out.append(T.apply(out[-1]))
    return out


@dataclass(eq=False)
class EmpiricalFunctional(Functional):
    """Probe table of ``h_n`` values along a sequence.

    ``table[j, i]`` is ``h_{n_j}`` at probe ``i``; the reported value at a
    probe is the last row.  A probe has converged when the spread of its
    last ``window`` values is at most ``tol``.
    """

    probes: ProbeSet
    table: np.ndarray
    indices: list
    space: Space
    tol: float
    window: int = CONVERGENCE_WINDOW
    source: str = ""
    base_point: object = None

    variant = "empirical"

    def __post_init__(self):
        self._lookup = {p: i for i, p in enumerate(self.probes)}

    @property
    def base(self):
        return self.base_point if self.base_point is not None else zero(self.space)

    @property
    def values(self) -> np.ndarray:
        return self.table[-1]

    @property
    def residuals(self) -> np.ndarray:
        tail = self.table[-self.window :]
        return tail.max(axis=0) - tail.min(axis=0)

    @property
    def converged(self) -> np.ndarray:
        return self.residuals <= self.tol

    @property
    def accepted(self) -> bool:
        return bool(np.all(self.converged))

    def evaluate(self, x):
        try:
            return float(self.values[self._lookup[x]])
        except KeyError:
            raise KeyError("empirical functional is only known on its probes") from None

    def items(self):
        return zip(self.probes, self.values)

    def to_dict(self):
        return {
            "variant": "empirical",
            "source": self.source,
            "space": self.space.to_dict(),
            "tol": self.tol,
            "accepted": self.accepted,
            "probes": [p.to_dict() for p in self.probes],
            "values": [float(v) for v in self.values],
            "residuals": [float(v) for v in self.residuals],
        }

    def csv_rows(self):
        for j, n in enumerate(self.indices):
            for i in range(len(self.probes)):
                yield i, n, float(self.table[j, i])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["probe_id", "n", "h_n"])
            for row in self.csv_rows():
                w.writerow([row[0], row[1], repr(row[2])])


def empirical_limit(points: Sequence, probes: ProbeSet, space: Space, tol: float = 1e-6,
                    window: int = CONVERGENCE_WINDOW, indices=None, base=None, source: str = "") -> EmpiricalFunctional:
    """Tabulate ``h_n(x) = d(x, a_n) - d(base, a_n)`` over ``probes``."""
    points = list(points)
    if len(points) < 3:
        raise ValueError("need at least 3 points")
    if not isinstance(probes, ProbeSet):
        probes = ProbeSet.of(probes, base)
    base = zero(space) if base is None else base
    table = np.empty((len(points), len(probes)))
    for j, a in enumerate(points):
        r = distance(base, a, space)
        for i, x in enumerate(probes):
            table[j, i] = distance(x, a, space) - r
    indices = list(indices) if indices is not None else list(range(len(points)))
    return EmpiricalFunctional(probes, table, indices, space, tol, window, source, base)


@dataclass
class MatchReport:
    passed: bool
    max_discrepancy: float
    discrepancies: list
    worst_probe: Optional[object] = None

    def to_dict(self):
        return {
            "passed": self.passed,
            "max_discrepancy": self.max_discrepancy,
            "worst_probe": self.worst_probe.to_dict() if self.worst_probe is not None else None,
        }


def match_hypothesis(e: EmpiricalFunctional, h: Functional, tol: float = 1e-9) -> MatchReport:
    """Compare empirical probe values with a closed-form functional."""
    disc = [abs(v - h.evaluate(x)) for x, v in e.items()]
    k = int(np.argmax(disc))
    return MatchReport(disc[k] <= tol, float(disc[k]), disc, e.probes[k])


def lipschitz_violation(probes, values, space: Space) -> float:
    """``max |h(x) - h(y)| - d(x, y)`` over probe pairs (<= 0 when 1-Lipschitz)."""
    probes = list(probes)
    worst = -math.inf
    for i in range(len(probes)):
        for j in range(i + 1, len(probes)):
            v = abs(values[i] - values[j]) - distance(probes[i], probes[j], space)
            worst = max(worst, v)
    return worst if worst > -math.inf else 0.0


def scaled_tables(points, probes: ProbeSet, space: Space, scales=(1, 2, 4)) -> dict:
    """Rescaled functionals ``m h(v / m)`` realized as internal ones at ``m a``.

    Returns per scale the final-row values and the Lipschitz audit.
    """
    out = {}
    for m in scales:
        e = empirical_limit([a * m for a in points], probes, space)
        direct = np.array([m * (distance(x / m, points[-1], space) - norm(points[-1], space)) for x in probes])
        out[m] = {
            "values": e.values.copy(),
            "identity_gap": float(np.max(np.abs(direct - e.values))),
            "lipschitz_violation": lipschitz_violation(probes, e.values, space),
        }
    return out


# asymptotic centers -------------------------------------------------------

def _window_arrays(points, space: Space, dim: int):
    if space.is_direct_sum:
        raise ValueError("asymptotic centers are computed in l_p, c0 or l_inf")
    A = np.zeros((len(points), dim))
    rest = np.zeros(len(points))
    p = space.p
    for k, a in enumerate(points):
        if a.tail is not None and space.kind != "linfty":
            raise ValueError("points must lie in the space")
        v = a.padded(dim)
        A[k] = v[:dim]
        beyond = np.abs(v[dim:])
        if math.isinf(p):
            rest[k] = max(float(beyond.max(initial=0.0)), abs(a.tail_value))
        else:
            rest[k] = float(np.sum(beyond**p))
    return A, rest


class _RadiusFunction:
    """``x -> max_k ||x - a_k||`` for x in the first ``dim`` coordinates."""

    def __init__(self, A, rest, p):
        self.A, self.rest, self.p = A, rest, p

    def dists(self, x):
        D = np.abs(x - self.A)
        if math.isinf(self.p):
            return np.maximum(D.max(axis=1, initial=0.0), self.rest)
        return ((D**self.p).sum(axis=1) + self.rest) ** (1.0 / self.p)

    def __call__(self, x):
        return float(self.dists(x).max())


def _minimax_smooth(F: _RadiusFunction, x0):
    A, rest, p = F.A, F.rest, F.p
    dim = A.shape[1]

    def cons(z):
        return z[-1] - F.dists(z[:-1])

    def cons_jac(z):
        x = z[:-1]
        d = x - A
        f = F.dists(x)
        J = np.zeros((A.shape[0], dim + 1))
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.sign(d) * np.abs(d) ** (p - 1) / f[:, None] ** (p - 1)
        g[~np.isfinite(g)] = 0.0
        J[:, :-1] = -g
        J[:, -1] = 1.0
        return J

    z0 = np.append(x0, F(x0))
    c = np.zeros(dim + 1)
    c[-1] = 1.0
    res = minimize(lambda z: z[-1], z0, jac=lambda z: c, method="SLSQP",
                   constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
                   options={"ftol": 1e-15, "maxiter": 500})
    x = res.x[:-1]
    return x if F(x) <= F(x0) else x0


def _minimax_lp(F: _RadiusFunction):
    A, rest, p = F.A, F.rest, F.p
    K, dim = A.shape
    if math.isinf(p):
        # vars: x (dim), s
        rows, rhs = [], []
        for k in range(K):
            for i in range(dim):
                r = np.zeros(dim + 1)
                r[i], r[-1] = 1.0, -1.0
                rows.append(r)
                rhs.append(A[k, i])
                r = np.zeros(dim + 1)
                r[i], r[-1] = -1.0, -1.0
                rows.append(r)
                rhs.append(-A[k, i])
        c = np.zeros(dim + 1)
        c[-1] = 1.0
        bounds = [(None, None)] * dim + [(float(rest.max(initial=0.0)), None)]
        res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds, method="highs")
        return res.x[:dim]
    # p == 1, vars: x (dim), e (K*dim), s
    nv = dim + K * dim + 1
    rows, rhs = [], []
    for k in range(K):
        for i in range(dim):
            e_idx = dim + k * dim + i
            r = np.zeros(nv)
            r[i], r[e_idx] = 1.0, -1.0
            rows.append(r)
            rhs.append(A[k, i])
            r = np.zeros(nv)
            r[i], r[e_idx] = -1.0, -1.0
            rows.append(r)
            rhs.append(-A[k, i])
        r = np.zeros(nv)
        r[dim + k * dim: dim + (k + 1) * dim] = 1.0
        r[-1] = -1.0
        rows.append(r)
        rhs.append(-rest[k])
    c = np.zeros(nv)
    c[-1] = 1.0
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=[(None, None)] * nv, method="highs")
    return res.x[:dim]


def _golden(f, lo, hi, tol):
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return (a + b) / 2


def _coordinate_descent(F: _RadiusFunction, x, sweeps=50, rtol=1e-10):
    x = x.copy()
    lo, hi = F.A.min(axis=0), F.A.max(axis=0)
    best = F(x)
    for _ in range(sweeps):
        start = best
        for i in range(x.size):
            old = x[i]

            def g(t):
                x[i] = t
                return F(x)

            width = hi[i] - lo[i]
            t = lo[i] if width == 0 else _golden(g, lo[i], hi[i], 1e-13 * max(1.0, abs(hi[i]), abs(lo[i])))
            x[i] = t
            val = F(x)
            if val <= best:
                best = val
            else:
                x[i] = old
        if start - best <= rtol * max(abs(start), 1e-300):
            break
    return x, best


@dataclass
class CenterReport:
    """Asymptotic-center certificate.

    ``margin`` is the smallest increase of the radius function under the
    perturbations ``center +- delta e_i``; positive margin certifies a
    unique minimizer on that probe set.
    """

    center: SeqVector
    value: float
    margin: float
    non_unique: bool
    dim: int
    last_k: int
    restart_gap: float = 0.0

    def to_dict(self):
        return {
            "center": self.center.to_dict(),
            "value": self.value,
            "margin": self.margin,
            "non_unique": self.non_unique,
            "dim": self.dim,
            "last_k": self.last_k,
            "restart_gap": self.restart_gap,
        }


def asymptotic_center(points, space: Space, dim: int, last_k: int = LIMINF_WINDOW,
                      delta: float = 1e-3, tol: float = 1e-6) -> CenterReport:
    """Minimize ``x -> max_{last_k} ||x - a_n||`` over the first ``dim`` coordinates.

    Mass of the points beyond ``dim`` enters the objective as a constant,
    which is how escaping (weakly vanishing) parts of a sequence are seen
    from a fixed finite window.  The minimax problem is solved by SLSQP on
    its epigraph (LP for p = 1 and p = inf), then polished by cyclic
    coordinate descent with golden-section line searches.
    """
    pts = list(points)[-last_k:]
    if dim < 1:
        raise ValueError("dim must be positive")
    A, rest = _window_arrays(pts, space, dim)
    F = _RadiusFunction(A, rest, space.p)
    smooth = not (space.p == 1 or math.isinf(space.p))

    def solve(x0):
        x = _minimax_smooth(F, x0) if smooth else _minimax_lp(F)
        x, _ = _coordinate_descent(F, x)
        return x

    c1 = solve(A.mean(axis=0))
    c2 = solve(np.zeros(dim))
    if F(c2) < F(c1):
        c1, c2 = c2, c1
    gap = norm(SeqVector(c1 - c2), space)
    value = F(c1)
    margin = math.inf
    for i in range(dim):
        for s in (delta, -delta):
            y = c1.copy()
            y[i] += s
            margin = min(margin, F(y) - value)
    return CenterReport(SeqVector(c1), value, float(margin), gap > tol, dim, len(pts), float(gap))


@dataclass
class OpialReport:
    passed: bool
    base_liminf: float
    challenger_liminfs: list
    margins: list
    skipped: int
    min_margin: float

    def to_dict(self):
        return {
            "passed": self.passed,
            "base_liminf": self.base_liminf,
            "challenger_liminfs": list(self.challenger_liminfs),
            "margins": list(self.margins),
            "skipped": self.skipped,
            "min_margin": self.min_margin,
        }


def opial_check(points, weak_limit: SeqVector, challengers, space: Space,
                window: int = LIMINF_WINDOW, tol: float = 1e-12) -> OpialReport:
    """Check ``liminf ||a_n - a|| < liminf ||a_n - x||`` using minima over the last terms."""
    if space.kind != "lp":
        raise ValueError("Opial check runs in l_p, 1 <= p < inf")
    tail = list(points)[-window:]
    base = min(distance(a, weak_limit, space) for a in tail)
    lims, margins, skipped = [], [], 0
    for x in challengers:
        if x == weak_limit:
            skipped += 1
            continue
        li = min(distance(a, x, space) for a in tail)
        lims.append(li)
        margins.append(li - base)
    min_margin = min(margins) if margins else math.inf
    return OpialReport(min_margin > tol, base, lims, margins, skipped, min_margin)


@dataclass
class ZFPResult:
    zero_on_probes: bool
    witness: Optional[object] = None
    value: float = 0.0

    def to_dict(self):
        return {
            "zero_on_probes": self.zero_on_probes,
            "witness": self.witness.to_dict() if self.witness is not None else None,
            "value": self.value,
        }


def zfp_scan(e: EmpiricalFunctional, tol: Optional[float] = None) -> ZFPResult:
    """First probe where the functional is visibly nonzero."""
    tol = e.tol if tol is None else tol
    for x, v in e.items():
        if abs(v) > tol:
            return ZFPResult(False, x, float(v))
    return ZFPResult(True)
