import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shiftlab import errors
from shiftlab.density import (
    IndexSet,
    SpectrumInterval,
    block_decompose,
    default_warmup,
    density_transform_check,
    dilate,
    progression_check,
    progression_density,
    running_density,
    spectrum_estimate,
    spectrum_via_blocks,
    zeta,
)


def brute_spectrum(members, horizon, warmup):
    member_set = set(members)
    count = 0
    ratios = []
    for n in range(1, horizon + 1):
        count += (n - 1) in member_set
        if n >= warmup:
            ratios.append(count / n)
    return min(ratios), max(ratios)


def evens(h):
    return IndexSet.from_predicate(lambda i: i % 2 == 0, h)


def quarter_powers(h):
    """Union of [4^i, 2*4^i); densities oscillate between 1/3 and 2/3."""
    intervals = []
    i = 0
    while 4**i < h:
        intervals.append((4**i, 2 * 4**i))
        i += 1
    return IndexSet.from_intervals(intervals, h)


@st.composite
def index_sets(draw, min_h=4, max_h=300):
    h = draw(st.integers(min_h, max_h))
    bits = draw(st.lists(st.booleans(), min_size=h, max_size=h))
    return IndexSet(np.array(bits))


@st.composite
def mixed_sets(draw, **kw):
    N = draw(index_sets(**kw))
    if len(N) in (0, N.horizon):
        mask = N.mask.copy()
        mask[0] = not mask[0]
        N = IndexSet(mask)
    return N


class TestIndexSet:
    def test_members_validated(self):
        with pytest.raises(errors.InvalidInputError):
            IndexSet.from_members([3, 1], 10)
        with pytest.raises(errors.InvalidInputError):
            IndexSet.from_members([1, 10], 10)

    def test_text_round_trip(self):
        N = IndexSet.from_members([0, 1, 4, 5, 6], 8)
        assert IndexSet.from_text(N.to_text()) == N

    def test_text_runs_are_half_open(self):
        N = IndexSet.from_text("horizon=10\n0\n3..6\n8\n")
        assert N.members.tolist() == [0, 3, 4, 5, 8]

    def test_text_needs_header(self):
        with pytest.raises(errors.InvalidInputError):
            IndexSet.from_text("1\n2\n")

    def test_intervals(self):
        assert IndexSet.from_members([0, 1, 4, 5, 6], 8).intervals() == [(0, 2), (4, 7)]


class TestZeta:
    def test_examples(self):
        assert zeta(IndexSet.from_members([], 50), 50) == 0
        assert zeta(evens(100), 100) == 50
        N = IndexSet.from_members([0, 1, 4, 5, 6], 8)
        # members strictly below n: {0, 1, 4, 5}
        assert zeta(N, 6) == 4
        assert zeta(N, 7) == 5
        assert [zeta(N, n) for n in range(9)] == [sum(1 for m in N.members if m < n) for n in range(9)]

    def test_beyond_horizon(self):
        with pytest.raises(errors.InvalidInputError):
            zeta(evens(10), 11)

    @given(index_sets(), st.data())
    def test_monotone_and_subset_monotone(self, N, data):
        counts = [zeta(N, n) for n in range(N.horizon + 1)]
        assert all(a <= b for a, b in zip(counts, counts[1:]))
        keep = data.draw(st.lists(st.booleans(), min_size=N.horizon, max_size=N.horizon))
        M = IndexSet(N.mask & np.array(keep))
        assert M.is_subset(N)
        assert np.all(M.counts <= N.counts)


class TestSpectrumEstimate:
    def test_evens(self):
        s = spectrum_estimate(evens(10**4))
        assert abs(s.lo - 0.5) <= 0.01 and abs(s.hi - 0.5) <= 0.01

    def test_empty_and_full(self):
        assert spectrum_estimate(IndexSet(np.zeros(1000, dtype=bool))).as_tuple() == (0.0, 0.0)
        assert spectrum_estimate(IndexSet(np.ones(1000, dtype=bool))).as_tuple() == (1.0, 1.0)

    def test_quarter_powers(self):
        s = spectrum_estimate(quarter_powers(4**8))
        assert abs(s.lo - 1 / 3) <= 0.02 and abs(s.hi - 2 / 3) <= 0.02

    def test_short_horizon_flag(self):
        s = spectrum_estimate(evens(150), warmup=100)
        assert "short_horizon" in s.flags

    def test_warmup_must_be_below_horizon(self):
        with pytest.raises(errors.InvalidInputError):
            spectrum_estimate(evens(100), warmup=100)

    def test_default_warmup(self):
        assert default_warmup(1000) == 100
        assert default_warmup(10**6) == 10**4

    @given(index_sets(min_h=10), st.integers(1, 9))
    def test_matches_brute_force(self, N, warmup):
        lo, hi = brute_spectrum(N.members.tolist(), N.horizon, warmup)
        s = spectrum_estimate(N, warmup)
        assert s.lo == pytest.approx(lo) and s.hi == pytest.approx(hi)

    def test_running_density_window(self):
        ns, ratios = running_density(evens(200), warmup=100)
        assert ns[0] == 100 and ns[-1] == 200
        assert ratios[0] == 0.5

    def test_interval_type(self):
        with pytest.raises(errors.InvalidInputError):
            SpectrumInterval(0.6, 0.4)
        assert SpectrumInterval(0.1, 0.2).precedes(SpectrumInterval(0.1, 0.3))


class TestBlocks:
    def test_example(self):
        B = block_decompose(IndexSet.from_members([0, 1, 4, 5, 6], 8))
        assert B.t.tolist() == [0, 2, 4, 7]
        assert B.d.tolist() == [2, 2, 3]
        assert B.e.tolist() == [2, 2, 5]
        assert B.f.tolist() == [0, 2, 2]

    def test_singleton(self):
        B = block_decompose(IndexSet.from_members([1], 5))
        assert B.L.tolist() == [1] and B.R.tolist() == [2]
        assert B.t.tolist() == [1, 2]

    def test_evens_have_unit_blocks(self):
        B = block_decompose(evens(10))
        assert set(B.d.tolist()) == {1}

    def test_degenerate(self):
        with pytest.raises(errors.DegenerateInputError):
            block_decompose(IndexSet(np.zeros(10, dtype=bool)))
        with pytest.raises(errors.DegenerateInputError):
            block_decompose(IndexSet(np.ones(10, dtype=bool)))

    @given(mixed_sets())
    def test_bookkeeping(self, N):
        B = block_decompose(N)
        if len(B.t) < 2:
            return
        assert np.array_equal(B.e + B.f, B.t[1:])
        assert np.all(B.d >= 1)
        assert np.all(np.diff(B.t) > 0)
        # members counted up to each run end equal the cumulative in-counts
        for i in range(0, len(B.e), 2):
            assert zeta(N, int(B.t[i + 1])) == B.e[i]

    def test_blocks_against_enumeration(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            mask = rng.random(60) < 0.4
            mask[5] = True
            mask[6] = False
            N = IndexSet(mask)
            B = block_decompose(N)
            # t_i are exactly the positions where membership flips, after the first member
            first = int(np.flatnonzero(mask)[0])
            flips = [i for i in range(first, 60) if i == first or mask[i] != mask[i - 1]]
            assert B.t.tolist() == flips


class TestSpectrumViaBlocks:
    def test_evens(self):
        s = spectrum_via_blocks(block_decompose(evens(10**4)))
        assert abs(s.lo - 0.5) <= 0.01 and abs(s.hi - 0.5) <= 0.01

    def test_single_block(self):
        h = 10**4
        N = IndexSet.from_intervals([(0, h // 2)], h)
        s = spectrum_via_blocks(block_decompose(N))
        assert s.lo == pytest.approx(0.5) and s.hi == pytest.approx(1.0)

    def test_constructed_set(self, build_set):
        built = build_set(0.3, 0.7)
        s = spectrum_via_blocks(block_decompose(built.set), warmup=100)
        assert abs(s.lo - 0.3) <= 0.05 and abs(s.hi - 0.7) <= 0.05

    def test_needs_a_complete_run(self):
        N = IndexSet.from_intervals([(50, 100)], 100)
        with pytest.raises(errors.InsufficientDataError):
            spectrum_via_blocks(block_decompose(N), warmup=10)

    @given(mixed_sets(min_h=20), st.integers(1, 10))
    def test_agrees_with_direct_scan(self, N, warmup):
        B = block_decompose(N)
        if len(B.t) < 2:
            return
        direct = spectrum_estimate(N, warmup)
        via = spectrum_via_blocks(B, warmup)
        bound = 2 / warmup + int(B.d.max()) / N.horizon
        assert abs(direct.lo - via.lo) <= bound and abs(direct.hi - via.hi) <= bound
        # with the window ends included the two coincide
        assert via.lo == pytest.approx(direct.lo) and via.hi == pytest.approx(direct.hi)


class TestDilation:
    def test_evens(self):
        report = density_transform_check(evens(10**4), 2)
        assert report.dilated.members[:6].tolist() == [0, 1, 4, 5, 8, 9]
        assert abs(report.transformed.lo - 0.5) <= 0.01 and abs(report.transformed.hi - 0.5) <= 0.01
        assert report.passed

    def test_identity(self):
        N = quarter_powers(4**7)
        report = density_transform_check(N, 1)
        assert report.original == report.transformed
        assert dilate(N, 1) == N

    def test_sparse_powers_of_two(self):
        h = 2**20
        N = IndexSet.from_members([2**i for i in range(20)], h)
        report = density_transform_check(N, 3)
        assert report.original.hi < 0.002 and report.transformed.hi < 0.002

    def test_subsets_precede(self):
        N = quarter_powers(4**7)
        M = IndexSet(N.mask & evens(4**7).mask)
        assert density_transform_check(N, 2, subsets=[M]).passed

    def test_rejects_non_subset(self):
        with pytest.raises(errors.InvalidInputError):
            density_transform_check(evens(1000), 2, subsets=[IndexSet(np.ones(1000, dtype=bool))])

    def test_capacity(self):
        with pytest.raises(errors.CapacityError):
            dilate(evens(10**6), 2000)

    @given(mixed_sets(min_h=200, max_h=600), st.integers(1, 4))
    def test_spectrum_preserved(self, N, k):
        assert density_transform_check(N, k, warmup=50).equal_within_tol


class TestProgressions:
    def test_quarter_powers_even_residue(self):
        N = quarter_powers(2 * 4**9)
        cps = [2 * 4**k for k in range(4, 10)]
        vals = progression_density(N, 2, 0, cps)
        assert abs(vals[-1] - 1 / 3) < 0.001
        assert all(abs(v - 1 / 3) < 0.01 for v in vals)

    def test_evens_need_few_runs(self):
        vals = progression_density(evens(10**4), 2, 0, [1000, 10**4])
        assert vals == pytest.approx([0.5, 0.5])

    def test_empty(self):
        assert progression_density(IndexSet(np.zeros(100, dtype=bool)), 3, 1, [10, 100]) == [0.0, 0.0]

    def test_residue_range(self):
        with pytest.raises(errors.InvalidInputError):
            progression_density(evens(100), 2, 2, [10])

    @given(st.integers(0, 200), st.integers(0, 200), st.integers(1, 9), st.data())
    def test_interval_residue_counts_differ_by_one(self, a, b, n, data):
        lo, hi = min(a, b), max(a, b)
        j0 = data.draw(st.integers(0, n - 1))
        j1 = data.draw(st.integers(0, n - 1))
        count = lambda j: sum(1 for i in range(lo, hi) if i % n == j)
        assert abs(count(j0) - count(j1)) <= 1

    @given(index_sets(min_h=10), st.integers(1, 6), st.data())
    def test_run_count_bound(self, N, n, data):
        j = data.draw(st.integers(0, n - 1))
        report = progression_check(N, n, j, list(range(1, N.horizon + 1)))
        assert report.holds
