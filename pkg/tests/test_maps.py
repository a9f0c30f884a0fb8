import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import seqvectors
from horofix.maps import (
    Affine, BackwardShift, Compose, Convex, DenseBlock, Diagonal, FamilySpec, ForwardShift, Identity, PrependShift,
    Translate, affine_parts, block_operator_norm, build_polynomial_family, build_Tmu, check_commuting,
    check_nonexpansive, family_from_dict, iterate, lipschitz_bound, map_from_dict,
)
from horofix.probes import default_probes, random_vectors
from horofix.seqspace import SeqVector, c0, distance, linfty, lp

half = Diagonal(SeqVector.constant(0.5))


def tmu_oracle(d, b, mu, x):
    # (1 - mu) x + mu (A x + b), coordinatewise
    m = max(len(d), len(b), len(x))
    d, b, x = (np.pad(np.asarray(v, float), (0, m - len(v))) for v in (d, b, x))
    return (1 - mu) * x + mu * (d * x + b)


class TestApply:
    def test_prepend_shift_on_zero(self):
        assert PrependShift(1.0)(SeqVector()) == SeqVector((1.0,))

    def test_prepend_shift_keeps_constant_tail(self):
        assert PrependShift(1.0)(SeqVector.constant(1.0)) == SeqVector.constant(1.0)
        assert PrependShift(2.0)(SeqVector((5.0,), 3.0)) == SeqVector((2.0, 5.0), 3.0)

    def test_forward_backward(self):
        x = SeqVector((1.0, 2.0, 3.0))
        assert ForwardShift()(x) == SeqVector((0.0, 1.0, 2.0, 3.0))
        assert BackwardShift()(x) == SeqVector((2.0, 3.0))
        assert BackwardShift()(ForwardShift()(x)) == x

    def test_affine_zero_linear_part(self):
        b = SeqVector((1.0, -2.0))
        T = Affine(Diagonal(SeqVector()), b)
        for x in random_vectors(np.random.default_rng(0), 10):
            assert T(x) == b

    def test_affine_requires_linear(self):
        with pytest.raises(ValueError):
            Affine(PrependShift(1.0), SeqVector())

    def test_dense_block_identity_beyond(self):
        T = DenseBlock(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert T(SeqVector((1.0, 2.0, 3.0))) == SeqVector((2.0, 1.0, 3.0))

    def test_tmu_example_against_formula(self):
        # Diagonal(1/2), b = e1, mu = 1/2 at x = e1: 0.5 * 1 + 0.5 * (0.5 + 1)
        T = build_Tmu(half, SeqVector.unit(1), 0.5)
        assert T(SeqVector.unit(1)) == SeqVector(tmu_oracle([0.5], [1.0], 0.5, [1.0]))
        assert T(SeqVector.unit(1)) == SeqVector((1.25,))

    def test_convex_identity_affine_is_tmu(self, rng):
        d, b = rng.uniform(-1, 1, 6), rng.normal(size=6)
        T = Convex(0.3, DenseBlock(np.eye(6)), Affine(Diagonal(SeqVector(d)), SeqVector(b)))
        for x in random_vectors(rng, 20, 6):
            assert np.allclose(T(x).padded(6)[:6], tmu_oracle(d, b, 0.3, x.padded(6)[:6]), atol=1e-12)

    def test_compose_order(self):
        T = Compose(Translate(SeqVector((1.0,))), Diagonal(SeqVector.constant(2.0)))
        assert T(SeqVector((3.0,))) == SeqVector((7.0,))


class TestIterate:
    @pytest.mark.parametrize("n", [0, 1, 5, 1000])
    def test_shift_powers_of_zero(self, n):
        x = iterate(PrependShift(1.0), SeqVector(), n)
        assert x == SeqVector.ones(n)
        assert x.coeffs.tolist() == [1.0] * n

    def test_fast_paths_agree_with_loop(self, rng):
        x0 = SeqVector(rng.normal(size=4))
        for T in (PrependShift(2.0), ForwardShift(), BackwardShift(), Translate(SeqVector((1.0, 2.0))),
                  Diagonal(SeqVector((0.5, -1.0))), build_Tmu(half, SeqVector((1.0,)), 0.25)):
            y = x0
            for _ in range(7):
                y = T(y)
            assert distance(iterate(T, x0, 7), y, lp(2)) <= 1e-12


class TestTmu:
    def test_mu_zero_is_identity(self, rng):
        T = build_Tmu(half, SeqVector((1.0, 2.0)), 0.0)
        for x in random_vectors(rng, 10):
            assert T(x) == x

    def test_mu_one_is_affine(self, rng):
        b = SeqVector((1.0, 2.0))
        T = build_Tmu(half, b, 1.0)
        for x in random_vectors(rng, 10):
            assert distance(T(x), half(x) + b, lp(2)) <= 1e-15

    def test_rejects_nonlinear(self):
        with pytest.raises(ValueError):
            build_Tmu(PrependShift(1.0), SeqVector(), 0.5)

    @pytest.mark.parametrize("mu,nu", [(0.25, 0.5), (0.1, 0.9), (0.5, 0.5)])
    def test_composition_coefficient(self, mu, nu):
        # T_mu T_nu = (1-mu)(1-nu) I + (nu - 2 mu nu + mu) A + mu nu A^2 + const
        d = np.linspace(-1, 1, 7)
        A = Diagonal(SeqVector(d))
        b = SeqVector(np.ones(7))
        M, _ = affine_parts(Compose(build_Tmu(A, b, mu), build_Tmu(A, b, nu)), 7)
        assert np.allclose(M, np.diag(np.diag(M)), atol=1e-15)
        c2, c1, c0_ = np.polyfit(d, np.diag(M), 2)
        assert c1 == pytest.approx(nu - 2 * mu * nu + mu, abs=1e-12)
        assert c0_ == pytest.approx((1 - mu) * (1 - nu), abs=1e-12)
        assert c2 == pytest.approx(mu * nu, abs=1e-12)

    def test_nonexpansive_on_random_pairs(self, rng):
        for _ in range(5):
            d = rng.uniform(-1, 1, 10)
            T = build_Tmu(Diagonal(SeqVector(d)), SeqVector(rng.normal(size=10)), rng.uniform())
            xs = random_vectors(rng, 2000, 12)
            rep = check_nonexpansive(T, lp(2), list(zip(xs[::2], xs[1::2])), tol=1e-12)
            assert rep.passed and rep.certified


class TestPolynomialFamily:
    def test_q_one_is_affine(self, rng):
        A, b = Diagonal(SeqVector(rng.uniform(-1, 1, 5))), SeqVector(rng.normal(size=5))
        T = build_polynomial_family(A, b, [[1.0]]).maps[0]
        for x in random_vectors(rng, 20, 5):
            assert distance(T(x), A(x) + b, lp(2)) <= 1e-12

    @pytest.mark.parametrize("mu", [0.2, 0.5, 0.8])
    def test_constant_q_is_tmu(self, rng, mu):
        A, b = Diagonal(SeqVector(rng.uniform(-1, 1, 5))), SeqVector(rng.normal(size=5))
        T = build_polynomial_family(A, b, [[mu]]).maps[0]
        Tm = build_Tmu(A, b, mu)
        for x in random_vectors(rng, 20, 5):
            assert distance(T(x), Tm(x), lp(2)) <= 1e-12

    def test_members_commute(self, rng):
        A, b = Diagonal(SeqVector(rng.uniform(-1, 1, 6))), SeqVector(rng.normal(size=6))
        F = build_polynomial_family(A, b, [[0.3], [0.1, 0.4], [0.2, -0.1, 0.3]])
        probes = random_vectors(rng, 100, 6)
        rep = check_commuting(F, probes, tol=1e-12)
        assert rep.passed and rep.max_defect <= 1e-12

    def test_general_q_matches_polynomial_oracle(self, rng):
        d = rng.uniform(-1, 1, 5)
        b = rng.normal(size=5)
        q = [0.1, 0.4, -0.2]
        T = build_polynomial_family(Diagonal(SeqVector(d)), SeqVector(b), [q]).maps[0]
        qd = np.polyval(q[::-1], d)
        pd = 1 - (1 - d) * qd
        x = rng.normal(size=5)
        assert np.allclose(T(SeqVector(x)).padded(5)[:5], pd * x + qd * b, atol=1e-12)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            build_polynomial_family(half, SeqVector(), [])


class TestCommuting:
    def test_tmu_pair(self, rng):
        A, b = Diagonal(SeqVector(rng.uniform(-1, 1, 5))), SeqVector(rng.normal(size=5))
        F = FamilySpec((("a", build_Tmu(A, b, 0.25)), ("b", build_Tmu(A, b, 0.75))))
        assert check_commuting(F, default_probes(0)).passed

    def test_shift_and_backward_fail_at_zero(self):
        F = FamilySpec((("T", PrependShift(1.0)), ("U", BackwardShift())))
        rep = check_commuting(F, [SeqVector()])
        assert not rep.passed
        assert rep.witness == SeqVector()
        assert rep.max_defect == 1.0

    def test_singleton(self):
        assert check_commuting(FamilySpec((("T", PrependShift(1.0)),)), [SeqVector()]).passed

    def test_verified_raises_on_noncommuting(self):
        F = FamilySpec((("T", PrependShift(1.0)), ("U", BackwardShift())))
        with pytest.raises(ValueError):
            F.verified([SeqVector()])
        assert FamilySpec(F.members, waive_commutation=True).verified([SeqVector()]) is not None


class TestNonexpansive:
    def test_shift_isometry(self, rng):
        xs = random_vectors(rng, 200)
        rep = check_nonexpansive(PrependShift(1.0), lp(2), list(zip(xs[::2], xs[1::2])))
        assert rep.passed and abs(rep.max_defect) <= 1e-12

    def test_doubling_fails(self):
        rep = check_nonexpansive(Diagonal(SeqVector.constant(2.0)), lp(2), [(SeqVector(), SeqVector.unit(1))])
        assert not rep.passed
        assert rep.witness == (SeqVector(), SeqVector.unit(1))
        assert rep.max_defect == 1.0

    def test_translate_isometry(self, rng):
        xs = random_vectors(rng, 100)
        rep = check_nonexpansive(Translate(SeqVector((1.0, 2.0))), lp(1), list(zip(xs[::2], xs[1::2])))
        assert rep.passed and rep.max_defect <= 1e-12

    def test_block_norms(self):
        M = np.array([[1.0, -2.0], [3.0, 0.5]])
        assert block_operator_norm(M, lp(1)) == (4.0, False)
        assert block_operator_norm(M, linfty()) == (3.5, False)
        assert block_operator_norm(M, c0()) == (3.5, False)
        val, est = block_operator_norm(M, lp(2))
        assert est and val == pytest.approx(np.linalg.norm(M, 2), rel=1e-8)

    def test_lipschitz_bound_composes(self):
        T = Compose(Diagonal(SeqVector.constant(0.5)), Convex(0.5, Identity(), Diagonal(SeqVector.constant(-3.0))))
        assert lipschitz_bound(T, lp(2))[0] == pytest.approx(1.0)


@given(seqvectors(), seqvectors(), st.floats(0, 1))
def test_affine_midpoint(x, y, mu):
    A = DenseBlock(np.array([[0.5, 0.2], [-0.3, 0.1]]))
    for T in (build_Tmu(A, SeqVector((1.0, -1.0)), mu), Affine(Diagonal(SeqVector((0.5, -1.0))), SeqVector((2.0,))),
              Translate(SeqVector((1.0,))), PrependShift(3.0)):
        lhs = T((x + y) / 2)
        rhs = (T(x) + T(y)) / 2
        assert distance(lhs, rhs, lp(2)) <= 1e-12 * max(1.0, float(np.abs(lhs.coeffs).max(initial=0.0)))


def test_json_round_trip(rng):
    T = Compose(build_Tmu(Diagonal(SeqVector((0.5,))), SeqVector((1.0,)), 0.3), DenseBlock(np.eye(2)))
    U = map_from_dict(T.to_dict())
    for x in random_vectors(rng, 10):
        assert U(x) == T(x)
    F = family_from_dict({"members": [{"label": "s", "map": {"node": "prepend_shift", "value": 1}}]})
    assert F.labels == ["s"] and F.maps[0] == PrependShift(1.0)
    with pytest.raises(ValueError):
        map_from_dict({"node": "nope"})
