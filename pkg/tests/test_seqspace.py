import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import finite, seqvectors
from horofix.seqspace import (
    DirectSumPoint, SeqVector, c0, combine_metrics, contains, direct_sum, distance, dsum_distance, linfty, lp, norm,
    space_from_dict,
)

SPACES = [lp(1), lp(1.5), lp(2), lp(3), c0(), linfty()]


def oracle_norm(coeffs, p):
    # plain coordinate loop
    if math.isinf(p):
        return max((abs(c) for c in coeffs), default=0.0)
    return sum(abs(c) ** p for c in coeffs) ** (1 / p)


class TestSeqVector:
    def test_const_zero_tail_normalizes(self):
        assert SeqVector((1.0,), 0.0).tail is None
        assert SeqVector((1.0,), 0.0) == SeqVector((1.0,))

    def test_block_length_irrelevant(self):
        assert SeqVector((1.0, 0.0, 0.0)) == SeqVector((1.0,))
        assert SeqVector((2.0, 3.0, 3.0), 3.0) == SeqVector((2.0,), 3.0)
        assert hash(SeqVector((1.0, 0.0))) == hash(SeqVector((1.0,)))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            SeqVector((math.nan,))
        with pytest.raises(ValueError):
            SeqVector((), math.inf)

    def test_unit_is_one_based(self):
        assert SeqVector.unit(3).coeffs.tolist() == [0.0, 0.0, 1.0]
        with pytest.raises(ValueError):
            SeqVector.unit(0)

    def test_mixed_tail_arithmetic(self):
        x = SeqVector((1.0,), 2.0)
        y = SeqVector((0.0, 5.0), 1.5)
        d = x - y
        assert d.tail == 0.5
        assert d[0] == 1.0 and d[1] == -3.0 and d[10] == 0.5

    def test_json_round_trip(self):
        x = SeqVector((1.0, -2.5), 3.0)
        assert x.to_dict() == {"coeffs": [1.0, -2.5], "tail": 3.0}
        assert SeqVector.from_dict(x.to_dict()) == x
        assert SeqVector.from_dict([1, 2]) == SeqVector((1.0, 2.0))

    def test_membership(self):
        t = SeqVector.constant(1.0)
        assert contains(linfty(), t)
        assert not contains(lp(2), t)
        assert not contains(c0(), t)
        assert contains(c0(), SeqVector((4.0,)))


class TestNorms:
    def test_e1_in_l1(self):
        assert norm(SeqVector.unit(1), lp(1)) == 1.0

    @pytest.mark.parametrize("n", [1, 4, 9, 17])
    def test_ones_in_l2(self, n):
        assert norm(SeqVector.ones(n), lp(2)) == pytest.approx(oracle_norm([1.0] * n, 2), abs=1e-12)
        assert norm(SeqVector.ones(n), lp(2)) == pytest.approx(math.sqrt(n), abs=1e-12)

    def test_constant_tail_in_linfty(self):
        assert norm(SeqVector.constant(1.0), linfty()) == 1.0

    def test_constant_tail_infinite_in_lp_and_c0(self):
        assert norm(SeqVector.constant(2.0), lp(2)) == math.inf
        assert norm(SeqVector.constant(2.0), c0()) == math.inf

    @given(seqvectors(), st.sampled_from([1.0, 1.5, 2.0, 3.0, math.inf]))
    def test_norm_matches_loop(self, x, p):
        sp = linfty() if math.isinf(p) else lp(p)
        assert norm(x, sp) == pytest.approx(oracle_norm(x.coeffs.tolist(), p), rel=1e-12, abs=1e-12)

    @given(seqvectors(), finite, st.sampled_from(SPACES))
    def test_homogeneity(self, x, t, sp):
        assert abs(norm(x * t, sp) - abs(t) * norm(x, sp)) <= 1e-12 * max(1.0, abs(t) * norm(x, sp))


class TestDistance:
    def test_examples(self):
        assert distance(SeqVector(), SeqVector(), lp(2)) == 0.0
        assert distance(SeqVector.constant(1.0), SeqVector(), linfty()) == 1.0
        assert distance(SeqVector((3.0, -2.0)), SeqVector((0.0, 0.0)), lp(1)) == 5.0

    @given(seqvectors(tails=True), seqvectors(tails=True), seqvectors(tails=True))
    def test_triangle_linfty(self, x, y, z):
        sp = linfty()
        assert distance(x, z, sp) <= distance(x, y, sp) + distance(y, z, sp) + 1e-12

    @given(seqvectors(), seqvectors(), seqvectors(), st.sampled_from(SPACES))
    def test_triangle(self, x, y, z, sp):
        assert distance(x, z, sp) <= distance(x, y, sp) + distance(y, z, sp) + 1e-12

    def test_triangle_random_triples(self, rng):
        # 1000 random triples spread over every kind
        for i in range(1000):
            sp = SPACES[i % len(SPACES)]
            tails = sp.kind == "linfty"
            x, y, z = (SeqVector(rng.normal(size=rng.integers(0, 9)), rng.normal() if tails else None) for _ in range(3))
            assert distance(x, z, sp) <= distance(x, y, sp) + distance(y, z, sp) + 1e-12

    @given(seqvectors(), seqvectors(), st.sampled_from(SPACES))
    def test_symmetric_and_zero_iff_equal(self, x, y, sp):
        assert distance(x, y, sp) == distance(y, x, sp)
        assert (distance(x, y, sp) == 0) == (x == y)


class TestDirectSum:
    @pytest.mark.parametrize("p,expected", [(1, 7.0), (2, 5.0), (math.inf, 4.0)])
    def test_combine(self, p, expected):
        assert combine_metrics(3.0, 4.0, p) == expected

    def test_dsum_distance(self):
        X = direct_sum(lp(1), lp(2), 2)
        x = DirectSumPoint(SeqVector((3.0,)), SeqVector((0.0, 4.0)))
        assert dsum_distance(x, DirectSumPoint(SeqVector(), SeqVector()), X) == 5.0

    def test_infinite_component_propagates(self):
        X = direct_sum(lp(1), lp(2), 1)
        x = DirectSumPoint(SeqVector.constant(1.0), SeqVector())
        assert dsum_distance(x, DirectSumPoint(SeqVector(), SeqVector()), X) == math.inf

    def test_space_json(self):
        X = direct_sum(lp(1), c0(), math.inf)
        assert space_from_dict({"kind": "lp", "p": 2}) == lp(2)
        assert space_from_dict({"kind": "dsum", "left": {"kind": "lp", "p": 1}, "right": {"kind": "c0"}, "p": math.inf}) == X

    def test_lp_requires_finite_p_at_least_one(self):
        with pytest.raises(ValueError):
            lp(0.5)
        with pytest.raises(ValueError):
            lp(math.inf)
