import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftlab import errors
from shiftlab.symbolic import (
    Cylinder,
    TruncatedPoint,
    Word,
    as_point,
    first_disagreement,
    first_disagreement_many,
    metric,
    pair_decode,
    pair_encode,
    recode_tau,
    shift,
    unrecode_tau,
)


def brute_first_disagreement(xs, ys):
    for i, (a, b) in enumerate(zip(xs, ys)):
        if a != b:
            return i
    return None


def brute_metric(xs, ys, K):
    i = brute_first_disagreement(xs, ys)
    return Fraction(0) if i is None else Fraction(1, K**i)


@st.composite
def point_pairs(draw, max_K=5, max_h=40, count=2):
    K = draw(st.integers(2, max_K))
    h = draw(st.integers(1, max_h))
    seqs = [draw(st.lists(st.integers(0, K - 1), min_size=h, max_size=h)) for _ in range(count)]
    # make agreement on long prefixes likely
    cut = draw(st.integers(0, h))
    for s in seqs[1:]:
        s[:cut] = seqs[0][:cut]
    return K, [TruncatedPoint(np.array(s), K) for s in seqs]


class TestTypes:
    def test_word_rejects_out_of_range(self):
        with pytest.raises(errors.InvalidInputError):
            Word((0, 2), 2)

    def test_empty_word_is_valid(self):
        assert len(Word((), 3)) == 0

    def test_point_rejects_bad_symbols(self):
        with pytest.raises(errors.InvalidInputError):
            TruncatedPoint(np.array([0, 1, 5]), 3)
        with pytest.raises(errors.InvalidInputError):
            TruncatedPoint(np.array([0, 1]), 1)

    def test_point_is_immutable(self):
        x = as_point("0110", 2)
        with pytest.raises(ValueError):
            x.symbols[0] = 1

    def test_cylinder_diameter(self):
        assert Cylinder(Word((0, 1, 1), 2)).diameter == Fraction(1, 8)
        assert Cylinder(Word((), 5)).diameter == 1

    def test_cylinder_diameter_matches_metric(self):
        # two points in [w] differing right after w realize the diameter
        w = Word((2, 0, 1), 3)
        cyl = Cylinder(w)
        x = as_point("2010", 3)
        y = as_point("2011", 3)
        assert cyl.contains(x) and cyl.contains(y)
        assert metric(x, y, exact=True) == cyl.diameter
        assert not cyl.contains(as_point("2110", 3))


class TestFirstDisagreement:
    def test_identity_is_sentinel(self):
        x = as_point("0110", 2)
        assert first_disagreement(x, x) is None

    def test_examples(self):
        assert first_disagreement(as_point("0110", 2), as_point("0111", 2)) == 3
        assert first_disagreement(as_point("210", 3), as_point("010", 3)) == 0

    def test_mismatch_errors(self):
        with pytest.raises(errors.InvalidInputError):
            first_disagreement(as_point("01", 2), as_point("01", 3))
        with pytest.raises(errors.InvalidInputError):
            first_disagreement(as_point("01", 2), as_point("011", 2))

    @given(point_pairs())
    def test_matches_brute_force_and_is_symmetric(self, case):
        K, (x, y) = case
        expected = brute_first_disagreement(x.to_list(), y.to_list())
        assert first_disagreement(x, y) == expected
        assert first_disagreement(y, x) == expected

    def test_vectorised_matches_scalar(self):
        rng = np.random.default_rng(7)
        xs = rng.integers(0, 2, size=(300, 12))
        ys = xs.copy()
        flips = rng.integers(0, 14, size=300)
        for row, pos in enumerate(flips):
            if pos < 12:
                ys[row, pos] ^= 1
        got = first_disagreement_many(xs, ys)
        for row in range(300):
            ref = brute_first_disagreement(xs[row], ys[row])
            assert got[row] == (12 if ref is None else ref)


class TestMetric:
    def test_examples(self):
        x = as_point("0000", 2)
        assert metric(x, x) == 0
        assert metric(x, as_point("0001", 2)) == 0.125
        assert metric(as_point("01", 4), as_point("02", 4)) == 0.25

    @given(point_pairs(count=3))
    def test_ultrametric(self, case):
        K, (x, y, z) = case
        assert metric(x, z, exact=True) <= max(metric(x, y, exact=True), metric(y, z, exact=True))

    @given(point_pairs())
    def test_matches_brute_force(self, case):
        K, (x, y) = case
        assert metric(x, y, exact=True) == brute_metric(x.to_list(), y.to_list(), K)
        assert metric(x, y) == float(brute_metric(x.to_list(), y.to_list(), K))


class TestShift:
    def test_examples(self):
        x = as_point("0110", 2)
        assert shift(x, 0) == x
        assert shift(x, 2) == as_point("10", 2)

    def test_full_shift_is_degenerate(self):
        x = as_point("0110", 2)
        assert shift(x, 4).degenerate
        with pytest.raises(errors.InvalidInputError):
            shift(x, 5)


class TestRecode:
    def test_examples(self):
        assert recode_tau(as_point("0110", 2), 2).to_list() == [2, 1]
        assert recode_tau(as_point("111000", 2), 3).to_list() == [7, 0]
        x = as_point("0110", 2)
        assert recode_tau(x, 1) == x

    def test_drops_partial_block(self):
        z = recode_tau(as_point("01101", 2), 2)
        assert z.K == 4 and z.horizon == 2

    def test_capacity(self):
        with pytest.raises(errors.CapacityError):
            recode_tau(TruncatedPoint(np.zeros(6, dtype=np.int64), 2**16), 3)

    @given(point_pairs(max_h=30), st.integers(1, 4))
    def test_round_trip(self, case, n):
        K, (x, _) = case
        whole = x.horizon - x.horizon % n
        if whole == 0:
            return
        back = unrecode_tau(recode_tau(x, n), K, n)
        assert back.to_list() == x.to_list()[:whole]

    def test_sandwich_exhaustive(self):
        K, h = 2, 6
        words = [TruncatedPoint(np.array(w), K) for w in itertools.product((0, 1), repeat=h)]
        for n in (1, 2, 3):
            coded = [recode_tau(w, n) for w in words]
            for x, cx in zip(words, coded):
                for y, cy in zip(words, coded):
                    m = metric(x, y, exact=True)
                    assert m <= metric(cx, cy, exact=True) <= K**n * m

    def test_sandwich_single_flips(self):
        # sampled binary words of length 12 against each of their one-symbol flips
        K, h = 2, 12
        rng = np.random.default_rng(0)
        words = [np.array(w) for w in itertools.product((0, 1), repeat=h)]
        for n in (1, 2, 3):
            for idx in rng.choice(len(words), size=400, replace=False):
                x = TruncatedPoint(words[idx], K)
                for flip in range(h):
                    ys = words[idx].copy()
                    ys[flip] ^= 1
                    y = TruncatedPoint(ys, K)
                    m = metric(x, y, exact=True)
                    mt = metric(recode_tau(x, n), recode_tau(y, n), exact=True)
                    assert m <= mt <= K**n * m

    @given(point_pairs(max_K=4, max_h=60), st.integers(1, 4))
    def test_sandwich_random(self, case, n):
        K, (x, y) = case
        cut = x.horizon - x.horizon % n
        if cut == 0:
            return
        x, y = as_point(x.symbols[:cut], K), as_point(y.symbols[:cut], K)
        m = metric(x, y, exact=True)
        mt = metric(recode_tau(x, n), recode_tau(y, n), exact=True)
        assert m <= mt <= K**n * m

    @given(point_pairs(max_h=60), st.integers(1, 4))
    def test_conjugacy(self, case, n):
        K, (x, _) = case
        if x.horizon < n:
            return
        left = shift(recode_tau(x, n), 1)
        right = recode_tau(shift(x, n), n)
        size = min(left.horizon, right.horizon)
        assert left.to_list()[:size] == right.to_list()[:size]


class TestPairing:
    def test_examples(self):
        z = pair_encode(as_point([1, 0], 2), as_point([0, 1], 2))
        assert z.K == 4 and z.to_list() == [1, 2]
        zero = as_point([0, 0, 0], 2)
        assert pair_encode(zero, zero).to_list() == [0, 0, 0]
        assert pair_encode(as_point([2], 3), as_point([2], 3)).to_list() == [8]

    def test_decode_examples(self):
        x0, x1 = pair_decode(as_point([1, 2], 4))
        assert x0.to_list() == [1, 0] and x1.to_list() == [0, 1]
        a, b = pair_decode(as_point([0, 0], 9))
        assert a.to_list() == b.to_list() == [0, 0]

    def test_decode_needs_square_alphabet(self):
        with pytest.raises(errors.InvalidInputError):
            pair_decode(as_point([1, 2], 5))

    def test_encode_mismatch(self):
        with pytest.raises(errors.InvalidInputError):
            pair_encode(as_point([1, 0], 2), as_point([1, 0, 1], 2))

    @given(point_pairs())
    def test_round_trip(self, case):
        K, (x0, x1) = case
        assert pair_decode(pair_encode(x0, x1)) == (x0, x1)

    @given(point_pairs(count=4))
    def test_metric_squaring(self, case):
        K, (x0, x1, y0, y1) = case
        lhs = metric(pair_encode(x0, x1), pair_encode(y0, y1), exact=True)
        rhs = max(metric(x0, y0, exact=True), metric(x1, y1, exact=True)) ** 2
        assert lhs == rhs

    @given(point_pairs())
    def test_conjugacy(self, case):
        K, (x0, x1) = case
        assert shift(pair_encode(x0, x1), 1) == pair_encode(shift(x0, 1), shift(x1, 1))

    @settings(max_examples=30)
    @given(st.integers(2, 50), st.integers(0, 2**31 - 1))
    def test_large_alphabet_round_trip(self, K, seed):
        rng = np.random.default_rng(seed)
        x0 = TruncatedPoint(rng.integers(0, K, 20), K)
        x1 = TruncatedPoint(rng.integers(0, K, 20), K)
        assert pair_decode(pair_encode(x0, x1)) == (x0, x1)
