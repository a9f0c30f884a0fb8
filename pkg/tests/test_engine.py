import math

import numpy as np
import pytest

from horofix.engine import (
    cesaro_average, common_fixed_point, nested_average, product_orbit, translation_number, ump_fixed_point,
)
from horofix.exceptions import NotFound, UnboundedOrbit, Unresolved
from horofix.functionals import ShiftL1, internal
from horofix.invariance import Verdict, subinvariance
from horofix.maps import (
    Affine, DenseBlock, Diagonal, FamilySpec, ForwardShift, Identity, PrependShift, Translate, build_Tmu,
)
from horofix.probes import default_probes
from horofix.seqspace import SeqVector, c0, distance, linfty, lp, norm

T = PrependShift(1.0)


def fam(*maps):
    return FamilySpec(tuple((f"m{i}", m) for i, m in enumerate(maps)))


def tmu_family(rng, dim=8, mus=(0.25, 0.75), radius=1.0):
    d = rng.uniform(-radius, radius, dim)
    b = SeqVector(rng.normal(size=dim))
    A = Diagonal(SeqVector(d))
    return FamilySpec(tuple((f"T{mu}", build_Tmu(A, b, mu)) for mu in mus)), d, b


class TestCesaro:
    def test_identity(self):
        x = SeqVector((1.0, 2.0))
        assert cesaro_average(Identity(), x, 7) == x

    @pytest.mark.parametrize("n", [1, 2, 5, 16])
    def test_idempotent_affine(self, n):
        b = SeqVector((2.0, -4.0))
        got = cesaro_average(Affine(Diagonal(SeqVector()), b), SeqVector(), n)
        assert distance(got, b * ((n - 1) / n), lp(2)) <= 1e-15

    def test_shift(self):
        assert cesaro_average(T, SeqVector(), 4) == SeqVector((0.75, 0.5, 0.25))

    def test_compiled_matches_structural(self, rng):
        # a zero-tail seed compiles to a dense kernel; a Const tail forces structural evaluation
        A = Diagonal(SeqVector(rng.uniform(-1, 1, 6)))
        b = SeqVector(rng.normal(size=6))
        U = build_Tmu(A, b, 0.4)
        seed = SeqVector(rng.normal(size=6))
        fast = cesaro_average(U, seed, 50)
        total = SeqVector()
        x = seed
        for _ in range(50):
            total = total + x
            x = U(x)
        slow = total / 50
        assert distance(fast, slow, lp(2)) <= 1e-12

    def test_constant_tail_seed(self):
        U = build_Tmu(Diagonal(SeqVector.constant(0.5)), SeqVector((1.0,)), 0.5)
        got = cesaro_average(U, SeqVector.constant(2.0), 3, linfty())
        x, total = SeqVector.constant(2.0), SeqVector()
        for _ in range(3):
            total, x = total + x, U(x)
        assert distance(got, total / 3, linfty()) <= 1e-15
        assert got.tail is not None

    def test_rejects_zero_n(self):
        with pytest.raises(ValueError):
            cesaro_average(T, SeqVector(), 0)


class TestNestedAverage:
    def test_single_member_is_cesaro(self, rng):
        U = build_Tmu(Diagonal(SeqVector(rng.uniform(-1, 1, 4))), SeqVector(rng.normal(size=4)), 0.5)
        tr = nested_average(fam(U), SeqVector(), 32)
        assert distance(tr.iterates[-1], cesaro_average(U, SeqVector(), 32), lp(2)) <= 1e-12

    def test_bound_and_decay(self, rng):
        F, _, _ = tmu_family(rng, radius=0.99)
        tr = nested_average(F, SeqVector(), [2**k for k in range(11)])
        assert tr.bound_violation() <= 1e-12
        md = tr.max_defects()
        assert md[-1] < md[0] and md[-1] <= 1e-2

    def test_bound_with_unit_weights(self, rng):
        # |d_i| = 1 allowed: the bound must still hold
        d = np.array([1.0, -1.0, 0.5])
        A, b = Diagonal(SeqVector(d)), SeqVector((0.0, 1.0, 2.0))
        F = fam(build_Tmu(A, b, 0.3), build_Tmu(A, b, 0.6))
        tr = nested_average(F, SeqVector((1.0, 1.0, 1.0)), [1, 3, 10, 100])
        assert tr.bound_violation() <= 1e-12

    def test_shift_rate(self):
        tr = nested_average(fam(T), SeqVector(), [16, 64, 256], lp(2))
        for n, d in zip(tr.schedule, tr.defects["m0"]):
            assert d <= 1 / math.sqrt(n) + 1e-12

    def test_records_order(self, rng):
        F, _, _ = tmu_family(rng)
        tr = nested_average(F, SeqVector(), 8)
        assert tr.order == F.labels
        rows = list(tr.rows())
        assert set(rows[0]) == {"n", "defect_T0.25", "bound_T0.25", "defect_T0.75", "bound_T0.75"}


class TestTranslationNumber:
    def test_l1(self):
        est = translation_number(T, SeqVector(), lp(1), 100)
        assert est.estimate == 1.0
        assert np.all(est.magnitude == 1.0)

    def test_l2(self):
        est = translation_number(T, SeqVector(), lp(2), 10**4)
        assert est.estimate == pytest.approx(1e-2, abs=1e-15)
        assert est.subadditivity_violation <= 1e-12

    @pytest.mark.parametrize("space", [c0(), linfty()])
    def test_sup_norm(self, space):
        assert translation_number(T, SeqVector(), space, 1000).estimate <= 1e-3

    def test_identity(self):
        assert translation_number(Identity(), SeqVector((1.0,)), lp(2), 20).estimate == 0.0

    def test_matches_strict_decrease_gap(self):
        rep = subinvariance(ShiftL1(), T, default_probes(0, T, integer=True))
        assert translation_number(T, SeqVector(), lp(1), 50).estimate == rep.gap

    def test_translation_map(self):
        est = translation_number(Translate(SeqVector((3.0, 4.0))), SeqVector(), lp(2), 50)
        assert est.estimate == pytest.approx(5.0)

    def test_needs_eight(self):
        with pytest.raises(ValueError):
            translation_number(T, SeqVector(), lp(2), 4)


class TestProductOrbit:
    def test_identity(self):
        x = SeqVector((1.0,))
        po = product_orbit(fam(Identity()), x, 5)
        assert all(p == x for p in po.points)

    def test_shift_residual_one(self):
        po = product_orbit(fam(T), SeqVector(), 10, lp(2))
        assert all(r == 1.0 for r in po.residuals["m0"])
        assert po.audit_violation() <= 1e-12

    def test_contraction(self):
        U = Affine(Diagonal(SeqVector.constant(0.5)), SeqVector())
        po = product_orbit(fam(U), SeqVector((1.0,)), 20, lp(2))
        for n, r in enumerate(po.residuals["m0"]):
            assert r == pytest.approx(2.0 ** -(n + 1), rel=1e-12)
        assert po.audit_violation() <= 1e-12


class TestCommonFixedPoint:
    def test_half_plus_b(self):
        b = SeqVector((1.0, -2.0, 0.5))
        U = Affine(Diagonal(SeqVector.constant(0.5)), b)
        z = common_fixed_point(fam(U), SeqVector(), lp(2), tol=1e-10)
        assert distance(z, b * 2, lp(2)) <= 1e-9
        assert distance(U(z), z, lp(2)) <= 1e-10

    def test_tmu_family(self, rng):
        F, d, b = tmu_family(rng, 32, (0.25, 0.5, 0.75), radius=0.9)
        z, info = common_fixed_point(F, SeqVector(), lp(2), tol=1e-10, full_output=True)
        oracle = SeqVector(b.padded(32)[:32] / (1 - d))
        assert max(info["residuals"].values()) <= 1e-8
        assert distance(z, oracle, lp(2)) <= 1e-8
        for lbl, U in F.members:
            rep = subinvariance(internal(z, lp(2)), U, list(default_probes(0, dim=8)) + [z], tol=1e-10)
            assert rep.verdict is not Verdict.VIOLATED

    def test_identity_returns_seed(self):
        x = SeqVector((4.0, 2.0))
        assert common_fixed_point(fam(Identity()), x, lp(2)) == x

    def test_p1_attempt_reports(self, rng):
        F, d, b = tmu_family(rng, 6, (0.5,), radius=0.8)
        z, info = common_fixed_point(F, SeqVector(), lp(1), tol=1e-9, full_output=True)
        assert max(info["residuals"].values()) <= 1e-9

    def test_unresolved(self):
        U = Translate(SeqVector((1.0,)))
        with pytest.raises((Unresolved, UnboundedOrbit)):
            common_fixed_point(fam(U), SeqVector(), lp(2), n_max=64, max_sweeps=10)

    def test_unbounded(self):
        with pytest.raises(UnboundedOrbit):
            common_fixed_point(fam(Translate(SeqVector((1e5,)))), SeqVector(), lp(2), n_max=2**10)

    def test_needs_lp(self):
        with pytest.raises(ValueError):
            common_fixed_point(fam(Identity()), SeqVector(), c0())


class TestUMP:
    def test_rotation(self):
        th = 1.0
        R = DenseBlock(np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]]))
        a = ump_fixed_point(R, SeqVector((1.0, 0.0)), lp(2))
        assert norm(a, lp(2)) <= 1e-6

    def test_contraction(self):
        a = ump_fixed_point(Diagonal(SeqVector.constant(0.5)), SeqVector((3.0, 1.0)), lp(2))
        assert norm(a, lp(2)) <= 1e-6

    def test_shift_not_found(self):
        with pytest.raises(NotFound) as info:
            ump_fixed_point(T, SeqVector(), lp(2))
        assert info.value.diagnostic["residual"] > 0.5

    def test_forward_shift_from_zero(self):
        assert ump_fixed_point(ForwardShift(), SeqVector(), lp(2)) == SeqVector()
