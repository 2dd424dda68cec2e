import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftlab import errors
from shiftlab.construct import build_dc_pair, build_exact_spectrum_pair, SpectrumTarget
from shiftlab.density import IndexSet
from shiftlab.dimension import (
    ANALYTIC_NOTE,
    BlockProductSpec,
    asym_piece_spec,
    box_dim_estimate,
    cover_sum_trajectory,
    cylinder_cover_sum,
    dc_analytic_bound,
    dc_lower_bound_spec,
    dist_piece_spec,
    liminf_dim_lower_bound,
    pair_space_source,
    special_relations_targets,
    theorem_targets,
    agreement_window_density,
)
from shiftlab.distributional import distributional_functions
from shiftlab.symbolic import TruncatedPoint

from conftest import admissible

EARLY = 100


@st.composite
def product_specs(draw, max_depth=30):
    base = draw(st.integers(2, 5))
    depth = draw(st.integers(10, max_depth))
    lengths = draw(st.lists(st.integers(1, 3), min_size=depth, max_size=depth))
    counts = [draw(st.integers(1, base**n)) for n in lengths]
    return BlockProductSpec(tuple(counts), tuple(lengths), base)


class TestBlockProductSpec:
    def test_validation(self):
        with pytest.raises(errors.InvalidInputError):
            BlockProductSpec((5,), (1,), 4)
        with pytest.raises(errors.InvalidInputError):
            BlockProductSpec((0,), (1,), 4)
        with pytest.raises(errors.InvalidInputError):
            BlockProductSpec((1, 2), (1,), 4)

    def test_pair_width(self):
        # a pair word of length 2 over {0,1} has 16 choices but diameter 2**-2
        spec = BlockProductSpec((12,), (2,), 2, width=2)
        assert cylinder_cover_sum(spec, 1, 1).diameter == Fraction(1, 4)
        with pytest.raises(errors.InvalidInputError):
            BlockProductSpec((12,), (2,), 2)


class TestCoverSums:
    @pytest.mark.parametrize("K", [2, 3, 7])
    def test_full_shift_unit_mass(self, K):
        spec = BlockProductSpec.full_shift(K, 60)
        for depth in (1, 10, 60):
            report = cylinder_cover_sum(spec, 1, depth)
            assert report.exact_sum_s[1] == 1
            assert report.count == K**depth and report.diameter == Fraction(1, K**depth)

    def test_full_shift_above_dimension(self):
        spec = BlockProductSpec.full_shift(2, 40)
        for depth in (1, 20, 40):
            assert cylinder_cover_sum(spec, 2, depth).exact_sum_s[2] == Fraction(1, 2**depth)

    def test_diagonal_half_exponent(self):
        spec = BlockProductSpec.diagonal(3, 30)
        for depth in (1, 15, 30):
            report = cylinder_cover_sum(spec, Fraction(1, 2), depth)
            assert report.exact_sum_s[Fraction(1, 2)] == 1
            assert report.sum_s[Fraction(1, 2)] == pytest.approx(1.0)

    def test_several_exponents(self):
        report = cylinder_cover_sum(BlockProductSpec.full_shift(2, 10), [0, 1, 2], 10)
        assert report.exact_sum_s == {0: 1024, 1: 1, 2: Fraction(1, 1024)}

    def test_irrational_power_has_no_exact_value(self):
        report = cylinder_cover_sum(BlockProductSpec.full_shift(2, 10), Fraction(1, 3), 10)
        assert Fraction(1, 3) not in report.exact_sum_s

    def test_large_sums_stay_in_log_space(self):
        spec = BlockProductSpec.full_shift(2, 5000)
        report = cylinder_cover_sum(spec, 0.0, 5000)
        assert report.sum_s[0.0] == math.inf
        assert report.log_sum_s[0.0] == pytest.approx(5000 * math.log(2))

    def test_depth_range(self):
        with pytest.raises(errors.InvalidInputError):
            cylinder_cover_sum(BlockProductSpec.full_shift(2, 5), 1, 6)

    @given(product_specs(), st.data())
    def test_count_and_diameter_exact(self, spec, data):
        depth = data.draw(st.integers(1, spec.depth))
        report = cylinder_cover_sum(spec, 1, depth)
        assert report.count == math.prod(spec.counts[:depth])
        assert report.diameter == Fraction(1, spec.base ** sum(spec.lengths[:depth]))
        assert report.exact_sum_s[1] == report.count * report.diameter

    @given(product_specs())
    def test_pair_space_doubling(self, spec):
        image = BlockProductSpec(spec.counts, spec.lengths, spec.base**2)
        source = pair_space_source(image)
        for depth in (1, spec.depth):
            for s in (Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2)):
                lhs = cylinder_cover_sum(image, s / 2, depth)
                rhs = cylinder_cover_sum(source, s, depth)
                assert lhs.log_sum_s[s / 2] == pytest.approx(rhs.log_sum_s[s], abs=1e-9)
                assert lhs.exact_sum_s.get(s / 2) == rhs.exact_sum_s.get(s)
            assert s in rhs.exact_sum_s

    def test_exact_power_uses_total_length(self):
        spec = BlockProductSpec((2, 2), (1, 1), 4)
        assert cylinder_cover_sum(spec, Fraction(1, 4), 2).exact_sum_s[Fraction(1, 4)] == 2
        assert Fraction(1, 4) not in cylinder_cover_sum(spec, Fraction(1, 4), 1).exact_sum_s

    def test_pair_space_needs_square_base(self):
        with pytest.raises(errors.InvalidInputError):
            pair_space_source(BlockProductSpec.full_shift(3, 5))


class TestLiminfBound:
    def test_full_shift(self):
        depth = 200
        spec = BlockProductSpec.full_shift(2, depth + 1)
        bound = liminf_dim_lower_bound(spec, depth, j0=depth - 1)
        assert abs(bound.value - 1) <= 1 / depth
        assert np.allclose(bound.trajectory, np.arange(1, depth + 1) / np.arange(2, depth + 2))

    def test_singleton(self):
        assert liminf_dim_lower_bound(BlockProductSpec.constant(1, 1, 2, 50)).value == 0.0

    def test_range(self):
        spec = BlockProductSpec.full_shift(2, 10)
        with pytest.raises(errors.InvalidInputError):
            liminf_dim_lower_bound(spec, 10)
        with pytest.raises(errors.InvalidInputError):
            liminf_dim_lower_bound(spec, 8, j0=9)

    def test_dc_trajectory_closed_form(self):
        A = admissible(0.5, 0.5)
        depth = 10**5
        N = IndexSet(A.set.mask[: depth + 1])
        K, n = 2, 4
        spec, analytic = dc_lower_bound_spec(SpectrumTarget(0.5, 0.5), K, n, N, check=False)
        bound = liminf_dim_lower_bound(spec, depth)
        j = np.arange(1, depth + 1)
        inside = N.counts[j]
        closed = (inside * math.log(K**n) + (j - inside) * math.log(K ** (2 * n) - K**n)) / (
            (j + 1) * n * math.log(K * K)
        )
        assert np.allclose(bound.trajectory, closed, rtol=0, atol=1e-12)
        assert abs(bound.value - analytic) <= 0.02
        assert abs(box_dim_estimate(spec).value - analytic) <= 0.02


class TestBoxDimension:
    def test_full_shift(self):
        assert box_dim_estimate(BlockProductSpec.full_shift(3, 100)).value == pytest.approx(1.0, abs=1e-6)

    def test_diagonal(self):
        assert box_dim_estimate(BlockProductSpec.diagonal(2, 100)).value == pytest.approx(0.5, abs=1e-6)

    def test_needs_depth(self):
        with pytest.raises(errors.InvalidInputError):
            box_dim_estimate(BlockProductSpec.full_shift(2, 9))

    @settings(max_examples=30)
    @given(st.lists(st.integers(1, 4), min_size=1, max_size=6), st.lists(st.integers(1, 2), min_size=1, max_size=6))
    def test_not_below_liminf_on_periodic_specs(self, counts, lengths):
        period = min(len(counts), len(lengths))
        counts = [min(c, 2**l) for c, l in zip(counts[:period], lengths[:period])]
        depth = 3000
        spec = BlockProductSpec(tuple(counts * depth)[:depth], tuple(lengths[:period] * depth)[:depth], 2)
        box = box_dim_estimate(spec)
        low = liminf_dim_lower_bound(spec, depth - 1)
        assert box.value >= low.value - 0.01

    @pytest.mark.parametrize("pattern", [(4, 2), (4, 4, 2), (3, 1, 1)])
    def test_critical_exponent_brackets(self, pattern):
        # periodic block pattern: sparse-block density is eventually constant
        depth = 30000
        counts = (pattern * depth)[:depth]
        spec = BlockProductSpec(counts, (1,) * depth, 4)
        box = box_dim_estimate(spec).value
        depths = [1000, 5000, 10000, 20000, 30000]
        below = cover_sum_trajectory(spec, box - 0.01, depths)
        above = cover_sum_trajectory(spec, box + 0.01, depths)
        assert np.all(np.diff(below) > 0)
        assert np.all(np.diff(above) < 0)


class TestDcSpec:
    def test_analytic_examples(self):
        for q in (0.0, 0.3, 1.0):
            assert dc_analytic_bound(q, 2, 1) == pytest.approx(0.5)
        assert dc_analytic_bound(0.5, 2, 4) == pytest.approx(0.7442, abs=5e-5)
        assert 2 * dc_analytic_bound(0.5, 2, 4) == pytest.approx(1.4884, abs=1e-4)
        for n in (1, 3, 8):
            assert dc_analytic_bound(1.0, 2, n) == pytest.approx(0.5)

    def test_doubled_bound_approaches_two_minus_q(self):
        gaps = [abs(2 * dc_analytic_bound(0.5, 2, n) - 1.5) for n in range(1, 12)]
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 1e-3

    def test_blocks_follow_the_set(self):
        N = IndexSet.from_members([0, 2, 3], 5)
        spec, _ = dc_lower_bound_spec(SpectrumTarget(0.5, 0.5), 2, 2, N, check=False)
        assert spec.counts == (4, 12, 4, 4, 12)
        assert spec.lengths == (2,) * 5 and spec.base == 4

    def test_checks_the_set(self):
        N = IndexSet.from_predicate(lambda i: i % 2 == 0, 10**4)
        with pytest.raises(errors.InvalidInputError):
            dc_lower_bound_spec(SpectrumTarget(0.5, 0.5), 2, 2, N)

    def test_accepts_admissible_set(self):
        A = admissible(0.3, 0.7)
        spec, analytic = dc_lower_bound_spec(A.target, 2, 3, A, warmup=EARLY)
        assert spec.depth == A.horizon
        assert analytic == pytest.approx(dc_analytic_bound(0.7, 2, 3))


class TestMeasurePieces:
    @pytest.mark.parametrize("K", [2, 3])
    def test_asym_half_exponent_sums(self, K):
        for n in range(1, 8):
            spec = asym_piece_spec(K, n, 40)
            for depth in (n, 20, 40):
                assert cylinder_cover_sum(spec, Fraction(1, 2), depth).exact_sum_s[Fraction(1, 2)] == K**n

    def test_dist_unit_exponent_sums(self):
        K, n = 2, 3
        spec = dist_piece_spec(K, n, 200)
        for depth in (1, 50, 200):
            got = cylinder_cover_sum(spec, 1, depth).exact_sum_s[1]
            assert got == Fraction(K ** (2 * n) - K**n, K ** (2 * n)) ** depth

    def test_targets(self):
        t = theorem_targets(SpectrumTarget(0.3, 0.7))
        assert t["dim_E"] == t["dim_D"] == pytest.approx(1.3)
        assert theorem_targets((0, 1))["dim_E"] == 1
        t0 = theorem_targets((0, 0))
        assert t0["dim_E"] == 2 and t0["measure_E"] == 1.0
        assert t0["note"] == ANALYTIC_NOTE
        rel = special_relations_targets()
        assert (rel["LY"]["dim"], rel["LY"]["measure"]) == (2, 1.0)
        assert (rel["Asym"]["dim"], rel["Asym"]["measure"]) == (1, math.inf)
        assert (rel["MLY"]["dim"], rel["MLY"]["measure"]) == (1, math.inf)


class TestAgreementWindows:
    def test_identical(self):
        x = TruncatedPoint(np.arange(1000) % 5, 5)
        assert agreement_window_density(x, x, 3).as_tuple() == (1.0, 1.0)

    def test_generic_pair(self):
        A = admissible(0.0, 0.0)
        y, z = build_exact_spectrum_pair(A.target, 2, A)
        for k in (1, 2):
            s = agreement_window_density(y, z, k)
            assert abs(s.lo - 2.0**-k) <= 0.05 and abs(s.hi - 2.0**-k) <= 0.05

    def test_interleaved_pair(self):
        A = admissible(0.3, 0.7)
        x, y = build_dc_pair(A.target, 2, A, warmup=EARLY)
        first = agreement_window_density(x, y, 1, warmup=EARLY)
        assert abs(first.lo - 0.3) <= 0.05 and abs(first.hi - 0.7) <= 0.05
        # longer windows only shrink the agreement set
        prev = first
        for k in (2, 4, 8):
            s = agreement_window_density(x, y, k, warmup=EARLY)
            assert s.lo <= prev.lo and s.hi <= prev.hi
            prev = s

    @given(st.integers(0, 2**31 - 1), st.integers(1, 5))
    def test_same_as_approach_time_spectrum(self, seed, k):
        rng = np.random.default_rng(seed)
        x = rng.integers(0, 2, 500)
        y = np.where(rng.random(500) < 0.1, 1 - x, x)
        X, Y = TruncatedPoint(x, 2), TruncatedPoint(y, 2)
        assert agreement_window_density(X, Y, k, 50).as_tuple() == distributional_functions(X, Y, k, 50)
