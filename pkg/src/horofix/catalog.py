"""Built-in replication scenarios.

Every entry is a function ``f(run) -> None`` that records checks, metrics
and CSV traces on a :class:`Run`.  Budgets and tolerances have defaults
that ``--n`` / ``--tol`` override; all randomness comes from ``run.rng``.
"""
from __future__ import annotations

import math
import operator
from dataclasses import dataclass, field

import numpy as np

from . import maps as M
from .engine import common_fixed_point, nested_average, product_orbit, translation_number, ump_fixed_point
from .exceptions import NotFixed, NotFound
from .functionals import (
    HN, BusemannL1Plane, L1Form, Linear, LpForm, Projection, ShiftC0, ShiftL1,
    busemann_limit, internal, sum_functional,
)
from .invariance import Verdict, fixed_point_from_internal, l2_linear_counterexample, l2_lpform_counterexample, subinvariance
from .limits import asymptotic_center, empirical_limit, match_hypothesis, opial_check, orbit_tail, zfp_scan
from .probes import ProbeSet, default_probes, random_vectors
from .seqspace import DirectSumPoint, SeqVector, c0, direct_sum, distance, linfty, lp, norm

__all__ = ["CATALOG", "Run", "replicate"]

OPS = {"<=": operator.le, "<": operator.lt, ">=": operator.ge, ">": operator.gt, "==": operator.eq, "!=": operator.ne}


@dataclass
class Run:
    """Mutable record filled in by a scenario."""

    id: str
    seed: int = 0
    n: int | None = None
    tol: float | None = None
    checks: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rng = np.random.default_rng(self.seed)

    def budget(self, default: int) -> int:
        return int(self.n) if self.n is not None else default

    def tolerance(self, default: float) -> float:
        return float(self.tol) if self.tol is not None else default

    def check(self, name: str, value, op: str, threshold):
        ok = bool(OPS[op](value, threshold))
        self.checks.append({"name": name, "value": value, "op": op, "threshold": threshold, "passed": ok})
        self.metrics[name] = value
        return ok

    def trace(self, name: str, header, rows):
        self.traces[name] = (list(header), [list(r) for r in rows])

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)


def _ball_probes(probes, space, radius=2.0):
    return ProbeSet(tuple(x for x in probes if norm(x, space) <= radius))


# Example 3: the prepend-one shift ----------------------------------------

def shift_l1(run: Run):
    T = M.PrependShift(1.0)
    probes = default_probes(run.seed, T, integer=True)
    rep = subinvariance(ShiftL1(), T, probes, tol=run.tolerance(1e-12))
    run.details["subinvariance"] = rep.to_dict()
    run.check("verdict", rep.verdict.value, "==", Verdict.STRICT_DECREASE.value)
    run.check("max_abs_defect_plus_one", float(np.max(np.abs(rep.defects + 1))), "==", 0.0)
    n = run.budget(64)
    e = empirical_limit(orbit_tail(T, SeqVector(), n, 20), probes, lp(1), indices=range(n - 19, n + 1), source="shift orbit")
    m = match_hypothesis(e, ShiftL1(), 1e-9)
    run.check("orbit_limit_vs_closed_form", m.max_discrepancy, "<=", 1e-9)
    tn = translation_number(T, SeqVector(), lp(1), max(n, 8))
    run.check("translation_number", tn.estimate, "==", 1.0)
    run.trace("orbit_limit", ["probe_id", "n", "h_n"], e.csv_rows())


def shift_l2(run: Run):
    T = M.PrependShift(1.0)
    space = lp(2)
    n = run.budget(10**6)
    probes = _ball_probes(default_probes(run.seed, T), space)
    e = empirical_limit(orbit_tail(T, SeqVector(), n, 5), probes, space, tol=run.tolerance(5e-3),
                        indices=range(n - 4, n + 1), source="shift orbit")
    run.check("max_abs_h_n", float(np.max(np.abs(e.values))), "<=", 5e-3)
    run.check("zero_on_probes", zfp_scan(e, 5e-3).zero_on_probes, "==", True)
    tn = translation_number(T, SeqVector(), space, 10**4)
    run.check("translation_number", tn.estimate, "<=", 1e-2)
    # no linear or lp-form functional is subinvariant
    worst = -math.inf
    for _ in range(100):
        z = SeqVector(run.rng.normal(size=int(run.rng.integers(1, 9))))
        z = z / (norm(z, space) * run.rng.uniform(1.0, 3.0))
        worst = max(worst, l2_linear_counterexample(z)[1])
    run.check("worst_counterexample_inner", worst, "<=", -0.5 + 1e-12)
    z = SeqVector(run.rng.normal(size=4))
    _, d = l2_lpform_counterexample(LpForm(2, z, norm(z, space) + 1.0))
    run.check("lpform_defect_positive", d, ">", 0.0)
    run.trace("orbit_limit", ["probe_id", "n", "h_n"], e.csv_rows())
    run.trace("translation", ["n", "magnitude", "envelope"],
              ((k + 1, tn.magnitude[k], tn.envelope[k]) for k in range(0, len(tn.magnitude), 100)))


def shift_c0(run: Run):
    T = M.PrependShift(1.0)
    n = run.budget(64)
    probes = default_probes(run.seed, T)
    e = empirical_limit(orbit_tail(T, SeqVector(), n, 20), probes, c0(), indices=range(n - 19, n + 1))
    run.check("orbit_limit_vs_closed_form", match_hypothesis(e, ShiftC0(), 1e-9).max_discrepancy, "<=", 1e-9)
    rep = subinvariance(ShiftC0(), T, probes, tol=run.tolerance(1e-12))
    run.details["subinvariance"] = rep.to_dict()
    run.check("verdict", rep.verdict.value, "!=", Verdict.VIOLATED.value)
    tn = translation_number(T, SeqVector(), c0(), 1000)
    run.check("translation_number", tn.estimate, "<=", 1e-3)
    run.trace("orbit_limit", ["probe_id", "n", "h_n"], e.csv_rows())


def shift_linfty(run: Run):
    T = M.PrependShift(1.0)
    space = linfty()
    w = SeqVector.constant(1.0)
    h = internal(w, space)
    try:
        z = fixed_point_from_internal(h, T)
        run.details["fixed_point"] = z.to_dict()
        found = z == w
    except NotFixed:
        found = False
    run.check("fixed_point_found", found, "==", True)
    probes = ProbeSet.of(list(default_probes(run.seed, T)) + [w, SeqVector.constant(-1.0), SeqVector((3.0,), 2.0)])
    rep = subinvariance(h, T, probes, tol=run.tolerance(1e-12))
    run.details["subinvariance"] = rep.to_dict()
    run.check("verdict", rep.verdict.value, "==", Verdict.SUBINVARIANT.value)
    tn = translation_number(T, SeqVector(), space, 1000)
    run.check("translation_number", tn.estimate, "<=", 1e-3)


# Prop. 4.3 ----------------------------------------------------------------

def l2_counterexample(run: Run):
    count = run.budget(500)
    inners = []
    for _ in range(count):
        k = int(run.rng.integers(1, 13))
        z = SeqVector(run.rng.normal(size=k))
        if z.support == 0:
            continue
        z = z * (run.rng.uniform() ** (1 / k) / norm(z, lp(2)))
        inners.append(l2_linear_counterexample(z)[1])
    ok = sum(v <= -0.5 + 1e-12 for v in inners)
    run.metrics["samples"] = len(inners)
    run.check("samples_with_inner_le_minus_half", ok, "==", len(inners))
    em = [l2_linear_counterexample(SeqVector.unit(m))[1] for m in range(2, 51)]
    run.check("unit_branch_max_abs_inner_plus_one", max(abs(v + 1) for v in em), "==", 0.0)
    run.trace("inner_products", ["sample", "inner"], enumerate(inners))


def hn_family(run: Run):
    worst, gaps = 0.0, []
    T = M.PrependShift(1.0)
    probes = random_vectors(run.rng, run.budget(200), 60)
    for N in range(1, 51):
        h = HN(N)
        for x in probes:
            lhs = h(x) - h(T(x))
            rhs = abs(x[N - 1] - 1) + x[N - 1]
            worst = max(worst, abs(lhs - rhs))
        rep = subinvariance(h, T, probes)
        gaps.append((N, rep.gap, rep.verdict.value))
    run.check("defect_identity_error", worst, "<=", 1e-12)
    run.check("min_gap", min(g for _, g, _ in gaps), ">=", 1.0 - 1e-12)
    lf = L1Form((0,) * 7, (1.0,) * 7, "minus")
    run.check("l1_form_agreement", max(abs(lf(x) - HN(7)(x)) for x in probes), "<=", 1e-12)
    run.trace("gaps", ["N", "gap", "verdict"], gaps)


# Example 2.1 -------------------------------------------------------------

def _tmu_setup(run: Run, dim=16, radius=1.0):
    d = run.rng.uniform(-radius, radius, size=dim)
    b = SeqVector(run.rng.normal(size=dim))
    return M.Diagonal(SeqVector(d)), b, d


def tmu_family(run: Run):
    A, b, d = _tmu_setup(run, radius=0.9)
    F = M.FamilySpec(tuple((f"T_{mu}", M.build_Tmu(A, b, mu)) for mu in (0.25, 0.5, 0.75)))
    space = lp(2)
    probes = default_probes(run.seed, dim=16)
    com = _commutation_defect(F, probes)
    run.check("commutation_defect", com, "<=", 1e-12)
    pairs = list(zip(probes.points, probes.points[1:]))
    run.check("nonexpansive_defect", max(M.check_nonexpansive(T, space, pairs).max_defect for T in F.maps), "<=", 1e-12)
    n = run.budget(1024)
    sched = [2**k for k in range(int(math.log2(n)) + 1)]
    tr = nested_average(M.FamilySpec(F.members[:2]), SeqVector(), sched, space)
    run.check("averaging_bound_violation", tr.bound_violation(), "<=", 1e-12)
    z, info = common_fixed_point(F, SeqVector(), space, tol=run.tolerance(1e-10), full_output=True)
    oracle = SeqVector(b.padded(16)[:16] / (1 - d))
    run.check("fixed_point_residual", max(info["residuals"].values()), "<=", 1e-8)
    run.check("fixed_point_error", distance(z, oracle, space), "<=", 1e-8)
    po = product_orbit(M.FamilySpec(F.members[:2]), SeqVector(), 64, space)
    run.check("product_orbit_audit", po.audit_violation(), "<=", 1e-12)
    run.trace("averaging", ["n"] + [f"{k}_{l}" for l in tr.order for k in ("defect", "bound")],
              ([r["n"]] + [r[f"{k}_{l}"] for l in tr.order for k in ("defect", "bound")] for r in tr.rows()))


def _commutation_defect(F, probes):
    return M.check_commuting(F, probes, tol=1e-12, space=lp(2)).max_defect


def polynomial_family(run: Run):
    A, b, _ = _tmu_setup(run)
    qs = [[0.5], [0.25, 0.5], [0.1, 0.2, 0.3]]
    F = M.build_polynomial_family(A, b, qs, labels=["q0", "q1", "q2"])
    probes = default_probes(run.seed, dim=16)
    run.check("commutation_defect", _commutation_defect(F, probes), "<=", 1e-12)
    Tm = M.build_Tmu(A, b, 0.5)
    const = F.maps[0]
    run.check("constant_q_matches_tmu", max(distance(const(x), Tm(x), lp(2)) for x in probes), "<=", 1e-12)
    one = M.build_polynomial_family(A, b, [[1.0]]).maps[0]
    aff = M.Affine(A, b)
    run.check("unit_q_matches_affine", max(distance(one(x), aff(x), lp(2)) for x in probes), "<=", 1e-12)


# direct sums ---------------------------------------------------------------

def dsum_p1(run: Run):
    A, B = lp(1), lp(2)
    X = direct_sum(A, B, 1)
    wa, wb = random_vectors(run.rng, 2, 6)
    hA, hB = internal(wa, A), internal(wb, B)
    S = sum_functional(hA, hB, 1)
    H = internal(DirectSumPoint(wa, wb), X)
    worst = 0.0
    count = run.budget(100)
    xs = random_vectors(run.rng, 2 * count, 6)
    for a, bb in zip(xs[::2], xs[1::2]):
        x = DirectSumPoint(a, bb)
        worst = max(worst, abs(S(x) - H(x)))
    run.check("sum_decomposition_discrepancy", worst, "<=", 1e-12)
    run.metrics["is_metric_functional"] = S.is_metric_functional


def dsum_pinf_projection(run: Run):
    A, B = lp(1), lp(2)
    X = direct_sum(A, B, math.inf)
    n = run.budget(10**4)
    a0 = SeqVector(run.rng.uniform(-1, 1, size=3))
    pts = [DirectSumPoint(a0, SeqVector.unit(1, float(k))) for k in range(n - 4, n + 1)]
    xs = random_vectors(run.rng, 100, 4, -1, 1)
    probes = ProbeSet.of([DirectSumPoint(a, bb) for a, bb in zip(xs[::2], xs[1::2])], DirectSumPoint(SeqVector(), SeqVector()))
    e = empirical_limit(pts, probes, X, tol=1e-3)
    P = Projection(Linear(SeqVector.unit(1, -1.0), B))
    m = match_hypothesis(e, P, 1e-3)
    run.check("projection_discrepancy", m.max_discrepancy, "<=", 1e-3)
    run.trace("orbit_limit", ["probe_id", "n", "h_n"], e.csv_rows())


# Busemann functions -------------------------------------------------------

def busemann_l1_plane(run: Run):
    space = lp(1)
    u = SeqVector.unit(1)
    h = BusemannL1Plane(1.0)
    rows, worst, mono = [], 0.0, True
    for x1 in range(-2, 3):
        for x2 in range(-2, 3):
            x = SeqVector((float(x1), float(x2)))
            r = busemann_limit(u, x, space, [abs(x1) + 1.0, abs(x1) + 10.0, abs(x1) + 100.0])
            worst = max(worst, abs(r.value - h(x)))
            mono &= r.monotone
            rows.append((x1, x2, r.value, h(x)))
    run.check("grid_discrepancy", worst, "==", 0.0)
    run.check("monotone", mono, "==", True)
    run.check("ray_value", max(abs(h(u * s) + s) for s in (0.0, 1.0, 5.0)), "==", 0.0)
    # smooth norm: the limit is linear
    xs = random_vectors(run.rng, 20, 4)
    lin = Linear(SeqVector.unit(1, -1.0), lp(2))
    err = max(abs(busemann_limit(u, x, lp(2), [1e3, 1e5, 1e7]).value - lin(x)) for x in xs)
    run.check("smooth_linear_limit", err, "<=", 1e-6)
    run.trace("grid", ["x1", "x2", "limit", "closed_form"], rows)


# C(K) at finite dimension ----------------------------------------------------

def ck_constant(run: Run, k: int = 16, count: int = 50):
    space = linfty()
    u = SeqVector.ones(k)
    probes = ProbeSet.of([u * t for t in (1.0, 2.0, -1.0, -2.0)])
    n = run.budget(1000)
    worst, accepted, rows = 0.0, True, []
    for kind in ("divergent", "bounded"):
        for j in range(count):
            v = run.rng.normal(size=k)
            w = run.rng.normal(size=k)
            if kind == "divergent":
                pts = [SeqVector(m * v + w) for m in range(n, n + 10)]
            else:
                xi = run.rng.normal(size=k)
                pts = [SeqVector(w + 2.0**-m * xi) for m in range(60, 70)]
            e = empirical_limit(pts, probes, space, tol=1e-6)
            accepted &= e.accepted
            for t in (1.0, 2.0):
                val = max(e(u * t), e(u * -t))
                worst = max(worst, abs(val - t))
                rows.append((kind, j, t, val))
    run.check("all_accepted", accepted, "==", True)
    run.check("max_t_discrepancy", worst, "<=", 1e-6)
    run.trace("values", ["kind", "sequence", "t", "max_h"], rows)


def ne_n_example(run: Run):
    space = c0()
    n = run.budget(1000)
    pts = [SeqVector.unit(k, float(k)) for k in range(n - 19, n + 1)]
    probes = default_probes(run.seed)
    e = empirical_limit(pts, probes, space, indices=range(n - 19, n + 1))
    run.check("max_abs_h_n", float(np.max(np.abs(e.values))), "<=", 1e-12)
    run.check("zero_on_probes", zfp_scan(e, 1e-12).zero_on_probes, "==", True)
    # pairwise distances max(j, k): no segment of the set is geodesic
    run.check("mutual_distance", distance(pts[0], pts[1], space), "==", float(n - 18))
    run.trace("orbit_limit", ["probe_id", "n", "h_n"], e.csv_rows())


# Opial and asymptotic centers -----------------------------------------------

def _escaping(a: SeqVector, m0: int, n: int):
    return [a + SeqVector.unit(m0 + k) for k in range(1, n + 1)]


def opial_en(run: Run):
    n = run.budget(60)
    for p, expected in ((2.0, math.sqrt(2) - 1), (1.0, 1.0)):
        space = lp(p)
        pts = [SeqVector.unit(k) for k in range(1, n + 1)]
        ch = [SeqVector.unit(i, s) for i in range(1, 6) for s in (1.0, -1.0)]
        rep = opial_check(pts, SeqVector(), ch, space)
        run.check(f"opial_margin_l{int(p)}", rep.min_margin, ">=", expected - 1e-9)


def asymptotic_center_run(run: Run):
    space = lp(2)
    m0 = 6
    a = SeqVector(run.rng.normal(size=m0))
    n = run.budget(60)
    pts = _escaping(a, m0, n)
    rep = asymptotic_center(pts, space, m0)
    run.details["center"] = rep.to_dict()
    run.check("center_error", distance(rep.center, a, space), "<=", 1e-6)
    ch = [a + SeqVector.unit(i, s) for i in range(1, m0 + 1) for s in (1.0, -1.0)]
    op = opial_check(pts, rep.center, ch, space)
    run.check("opial_margin", op.min_margin, ">=", math.sqrt(2) - 1 - 1e-6)
    alt = [SeqVector((1.0, 0.0)) if k % 2 else SeqVector((0.0, 1.0)) for k in range(40)]
    mid = asymptotic_center(alt, space, 2)
    run.check("alternating_midpoint_error", distance(mid.center, SeqVector((0.5, 0.5)), space), "<=", 1e-6)
    try:
        ump_fixed_point(M.PrependShift(1.0), SeqVector(), space)
        found = True
    except NotFound:
        found = False
    run.check("shift_ump_not_found", found, "==", False)


CATALOG = {
    "shift-l1": shift_l1,
    "shift-l2": shift_l2,
    "shift-c0": shift_c0,
    "shift-linfty": shift_linfty,
    "l2-counterexample": l2_counterexample,
    "hN-family": hn_family,
    "tmu-family": tmu_family,
    "polynomial-family": polynomial_family,
    "dsum-p1": dsum_p1,
    "dsum-pinf-projection": dsum_pinf_projection,
    "busemann-l1-plane": busemann_l1_plane,
    "ck-constant": ck_constant,
    "opial-en": opial_en,
    "asymptotic-center": asymptotic_center_run,
    "ne_n-example": ne_n_example,
}


def replicate(id: str, seed: int = 0, n=None, tol=None) -> Run:
    if id not in CATALOG:
        raise KeyError(f"unknown catalog id {id!r}; known: {', '.join(sorted(CATALOG))}")
    run = Run(id, seed, n, tol)
    CATALOG[id](run)
    return run
