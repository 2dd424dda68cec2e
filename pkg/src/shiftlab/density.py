"""Subsets of {0, ..., horizon-1}: counting, density spectra and block structure.

An :class:`IndexSet` keeps a boolean mask as its primary representation
and derives the sorted members and the prefix counts ``zeta(n)`` lazily.

Running densities ``zeta(n)/n`` only have extremes at the points where a
run of members or non-members ends, so most estimates here reduce to
looking at those boundaries (``t``) and at the ends of the window.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CapacityError,
    DegenerateInputError,
    InsufficientDataError,
    InvalidInputError,
    ShiftlabError,
)

MAX_HORIZON = 10**9


def default_warmup(horizon: int) -> int:
    """Window start used when no warmup is given: ``max(100, horizon // 100)``."""
    return max(100, int(horizon) // 100)


class IndexSet:
    """A subset of ``[0, horizon)``."""

    def __init__(self, mask: np.ndarray):
        mask = np.asarray(mask, dtype=bool).copy()
        if mask.ndim != 1 or mask.size < 1:
            raise InvalidInputError("an index set needs a positive horizon")
        mask.setflags(write=False)
        self.mask = mask
        self.horizon = int(mask.size)

    @classmethod
    def from_members(cls, members: Iterable[int], horizon: int) -> "IndexSet":
        horizon = int(horizon)
        if horizon < 1:
            raise InvalidInputError("horizon must be >= 1")
        arr = np.asarray(list(members) if not isinstance(members, np.ndarray) else members, dtype=np.int64)
        if arr.size:
            if np.any(np.diff(arr) <= 0):
                raise InvalidInputError("members must be strictly increasing")
            if arr[0] < 0 or arr[-1] >= horizon:
                raise InvalidInputError(f"members must lie in [0, {horizon})")
        mask = np.zeros(horizon, dtype=bool)
        mask[arr] = True
        return cls(mask)

    @classmethod
    def from_intervals(cls, intervals: Iterable[Sequence[int]], horizon: int) -> "IndexSet":
        """Union of half-open intervals ``[l, r)``, clipped to the horizon."""
        mask = np.zeros(int(horizon), dtype=bool)
        for lo, hi in intervals:
            if lo > hi:
                raise InvalidInputError(f"bad interval [{lo}, {hi})")
            mask[max(int(lo), 0) : min(int(hi), mask.size)] = True
        return cls(mask)

    @classmethod
    def from_predicate(cls, pred, horizon: int) -> "IndexSet":
        idx = np.arange(int(horizon))
        return cls(np.asarray(pred(idx), dtype=bool))

    @cached_property
    def members(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @cached_property
    def counts(self) -> np.ndarray:
        """``counts[n]`` is the number of members below ``n``, for ``0 <= n <= horizon``."""
        out = np.zeros(self.horizon + 1, dtype=np.int64)
        np.cumsum(self.mask, out=out[1:])
        return out

    def __len__(self):
        return int(self.counts[-1])

    def __contains__(self, i) -> bool:
        return 0 <= i < self.horizon and bool(self.mask[i])

    def __eq__(self, other):
        return isinstance(other, IndexSet) and np.array_equal(self.mask, other.mask)

    def __repr__(self):
        return f"IndexSet(horizon={self.horizon}, size={len(self)})"

    def complement(self) -> "IndexSet":
        return IndexSet(~self.mask)

    def is_subset(self, other: "IndexSet") -> bool:
        if self.horizon != other.horizon:
            raise InvalidInputError("horizons differ")
        return not np.any(self.mask & ~other.mask)

    def intervals(self) -> list[tuple[int, int]]:
        """Maximal runs as half-open intervals."""
        padded = np.concatenate(([False], self.mask, [False]))
        edges = np.flatnonzero(padded[1:] != padded[:-1])
        return [(int(a), int(b)) for a, b in zip(edges[::2], edges[1::2])]

    def to_text(self) -> str:
        lines = [f"horizon={self.horizon}"]
        lines.extend(str(int(m)) for m in self.members)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "IndexSet":
        """Parse the newline format; ``l..r`` lines denote the run ``[l, r)``."""
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines or not lines[0].startswith("horizon="):
            raise InvalidInputError("missing 'horizon=<n>' header")
        horizon = int(lines[0].split("=", 1)[1])
        mask = np.zeros(horizon, dtype=bool)
        prev = -1
        for ln in lines[1:]:
            if ".." in ln:
                lo, hi = (int(v) for v in ln.split("..", 1))
            else:
                lo = int(ln)
                hi = lo + 1
            if lo <= prev or hi <= lo or hi > horizon:
                raise InvalidInputError(f"entry {ln!r} is out of order or out of range")
            mask[lo:hi] = True
            prev = hi - 1
        return cls(mask)


@dataclass(frozen=True)
class SpectrumInterval:
    """Closed interval ``[lo, hi]`` inside ``[0, 1]``.

    ``flags`` carries estimator warnings such as ``"short_horizon"``.
    """

    lo: float
    hi: float
    flags: tuple = field(default=(), compare=False)

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (-1e-12 <= lo <= hi + 1e-12 and hi <= 1 + 1e-12):
            raise InvalidInputError(f"not a subinterval of [0, 1]: [{lo}, {hi}]")
        object.__setattr__(self, "lo", min(max(lo, 0.0), 1.0))
        object.__setattr__(self, "hi", min(max(hi, 0.0), 1.0))

    def precedes(self, other: "SpectrumInterval") -> bool:
        """Interval order: both endpoints are no larger than ``other``'s."""
        return self.lo <= other.lo and self.hi <= other.hi

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi

    def close_to(self, lo: float, hi: float, tol: float) -> bool:
        return abs(self.lo - lo) <= tol and abs(self.hi - hi) <= tol

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def as_tuple(self) -> tuple[float, float]:
        return (self.lo, self.hi)


def zeta(N: IndexSet, n: int) -> int:
    """Number of members of ``N`` below ``n``."""
    if n < 0 or n > N.horizon:
        raise InvalidInputError(f"n={n} outside [0, {N.horizon}]")
    return int(N.counts[n])


def _window(horizon: int, warmup: int | None) -> tuple[int, tuple]:
    w = default_warmup(horizon) if warmup is None else int(warmup)
    w = max(w, 1)
    if w >= horizon:
        raise InvalidInputError(f"warmup {w} must be below the horizon {horizon}")
    flags = ("short_horizon",) if horizon < 2 * w else ()
    return w, flags


def running_density(N: IndexSet, warmup: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``(n, zeta(n)/n)`` for ``n`` in ``[warmup, horizon]``."""
    w, _ = _window(N.horizon, warmup)
    ns = np.arange(w, N.horizon + 1)
    return ns, N.counts[w:] / ns


def spectrum_estimate(N: IndexSet, warmup: int | None = None) -> SpectrumInterval:
    """Min and max of ``zeta(n)/n`` over ``n`` in ``[warmup, horizon]``.

    The minimum stands in for the lower density and the maximum for the
    upper density.  ``short_horizon`` is flagged when the window is less
    than half the horizon.
    """
    w, flags = _window(N.horizon, warmup)
    _, ratios = running_density(N, w)
    return SpectrumInterval(float(ratios.min()), float(ratios.max()), flags)


@dataclass(frozen=True)
class BlockDecomposition:
    """Run boundaries of ``N`` observed strictly inside the horizon.

    ``t`` interleaves run starts and run ends (``t[0]`` is the first run
    start), ``d`` are the run lengths, ``e[i]`` counts members below
    ``t[i+1]`` and ``f[i]`` counts non-members below ``t[i+1]``.
    """

    t: np.ndarray
    d: np.ndarray
    e: np.ndarray
    f: np.ndarray
    L: np.ndarray
    R: np.ndarray
    horizon: int
    total: int  # members below the horizon

    @property
    def n_pairs(self) -> int:
        """Number of complete (member run, gap) pairs."""
        return (len(self.t) - 1) // 2

    def odd_ratios(self) -> np.ndarray:
        """``e[2i] / t[2i+1]``: densities where member runs end."""
        return self.e[0::2] / self.t[1::2]

    def even_ratios(self) -> np.ndarray:
        """``e[2i+1] / t[2i+2]``: densities where gaps end."""
        return self.e[1::2] / self.t[2::2]


def block_decompose(N: IndexSet) -> BlockDecomposition:
    total = len(N)
    if total == 0 or total == N.horizon:
        raise DegenerateInputError("block decomposition needs both the set and its complement nonempty")
    m = N.mask
    prev = np.concatenate(([False], m[:-1]))
    L = np.flatnonzero(m & ~prev)
    # a run reaching the horizon has no observed end
    R = np.flatnonzero(~m & prev)
    t = np.sort(np.concatenate((L, R)))
    d = np.diff(t)
    in_runs = np.zeros_like(d)
    in_runs[0::2] = d[0::2]
    out_runs = np.zeros_like(d)
    out_runs[1::2] = d[1::2]
    e = np.cumsum(in_runs)
    f = t[0] + np.cumsum(out_runs)
    if len(t) > 1:
        if not np.array_equal(e + f, t[1:]):
            raise ShiftlabError("block bookkeeping failed: e + f != t")
        if np.any(d < 1):
            raise ShiftlabError("block bookkeeping failed: non-positive run length")
    return BlockDecomposition(t=t, d=d, e=e, f=f, L=L, R=R, horizon=N.horizon, total=total)


def spectrum_via_blocks(B: BlockDecomposition, warmup: int | None = None) -> SpectrumInterval:
    """Density spectrum from run boundaries.

    Takes the minimum of the gap-end ratios and the maximum of the
    run-end ratios over boundaries in ``[warmup, horizon]``.  The window
    endpoints are included as well, since the running density is
    monotone between consecutive boundaries; with them the result
    coincides with :func:`spectrum_estimate` on the same window.
    """
    if len(B.t) < 2:
        raise InsufficientDataError("need at least one complete run (two boundaries)")
    w, flags = _window(B.horizon, warmup)
    cps = B.t[1:]
    ratios = B.e / cps
    keep = cps >= w
    # ratio at the window ends, rebuilt from the block sums
    ends = []
    for n in (w, B.horizon):
        ends.append(_zeta_from_blocks(B, n) / n)
    odd = ratios[0::2][keep[0::2]]
    even = ratios[1::2][keep[1::2]]
    lo = min([*even, *ends])
    hi = max([*odd, *ends])
    return SpectrumInterval(float(lo), float(hi), flags)


def _zeta_from_blocks(B: BlockDecomposition, n: int) -> int:
    """Members below ``n`` using only the boundary data."""
    t = B.t
    if n <= t[0]:
        return 0
    k = int(np.searchsorted(t, n, side="right")) - 1  # t[k] <= n < t[k+1]
    before = int(B.e[k - 1]) if k >= 1 else 0
    if k % 2 == 0:  # inside a member run that started at t[k]
        return before + (n - int(t[k]))
    return before


@dataclass(frozen=True)
class TransformReport:
    dilated: IndexSet
    original: SpectrumInterval
    transformed: SpectrumInterval
    tolerance: float
    equal_within_tol: bool
    monotone_subsets: tuple

    @property
    def passed(self) -> bool:
        return self.equal_within_tol and all(self.monotone_subsets)


def dilate(N: IndexSet, k: int) -> IndexSet:
    """``k*N + {0, ..., k-1}`` on the horizon ``k * N.horizon``."""
    k = int(k)
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    if k * N.horizon > MAX_HORIZON:
        raise CapacityError(f"dilated horizon {k * N.horizon} exceeds {MAX_HORIZON}")
    return IndexSet(np.repeat(N.mask, k))


def density_transform_check(
    N: IndexSet,
    k: int,
    subsets: Sequence[IndexSet] = (),
    warmup: int | None = None,
) -> TransformReport:
    """Dilation keeps the spectrum; subsets have smaller spectra.

    The dilated set is estimated on the window scaled by ``k``, where its
    running densities match the original's at every multiple of ``k``, so
    the tolerance is ``2 / warmup``.
    """
    w, _ = _window(N.horizon, warmup)
    D = dilate(N, k)
    s0 = spectrum_estimate(N, w)
    s1 = spectrum_estimate(D, w * int(k))
    tol = 0.0 if k == 1 else 2.0 / w
    same = abs(s0.lo - s1.lo) <= tol and abs(s0.hi - s1.hi) <= tol
    mono = []
    for M in subsets:
        if not M.is_subset(N):
            raise InvalidInputError("supplied set is not a subset of N")
        pointwise = bool(np.all(M.counts <= N.counts))
        mono.append(pointwise and spectrum_estimate(M, w).precedes(s0))
    return TransformReport(D, s0, s1, tol, same, tuple(mono))


@dataclass(frozen=True)
class ProgressionReport:
    checkpoints: tuple
    values: tuple
    deviations: tuple  # |n * zeta_t(N ∩ (nZ+j)) - zeta_t(N)| / n
    bounds: tuple  # (n-1)/n * zeta_t(run starts)
    holds: bool


def progression_check(N: IndexSet, n: int, j: int, checkpoints: Sequence[int]) -> ProgressionReport:
    """Densities of ``N`` restricted to ``n*Z + j`` with the run-count bound.

    Each run of ``N`` meets every residue class mod ``n`` within one of
    ``len/n``, so the restricted count differs from ``zeta_t(N)/n`` by at
    most ``(n-1)/n`` times the number of runs started before ``t``.  The
    comparison is done in integers.
    """
    n, j = int(n), int(j)
    if n < 1 or not 0 <= j < n:
        raise InvalidInputError(f"need 0 <= j < n, got j={j}, n={n}")
    sub = N.mask.copy()
    idx = np.arange(N.horizon)
    sub &= idx % n == j
    sub_counts = np.concatenate(([0], np.cumsum(sub)))
    prev = np.concatenate(([False], N.mask[:-1]))
    starts = np.concatenate(([0], np.cumsum(N.mask & ~prev)))
    vals, devs, bnds = [], [], []
    ok = True
    for t in checkpoints:
        t = int(t)
        if t < 1 or t > N.horizon:
            raise InvalidInputError(f"checkpoint {t} outside [1, {N.horizon}]")
        c = int(sub_counts[t])
        z = int(N.counts[t])
        runs = int(starts[t])
        ok &= abs(n * c - z) <= (n - 1) * runs
        vals.append(c / t)
        devs.append(abs(n * c - z) / n)
        bnds.append((n - 1) * runs / n)
    return ProgressionReport(tuple(int(t) for t in checkpoints), tuple(vals), tuple(devs), tuple(bnds), bool(ok))


def progression_density(N: IndexSet, n: int, j: int, checkpoints: Sequence[int]) -> list[float]:
    """``zeta_t(N ∩ (n*Z + j)) / t`` at each checkpoint ``t``."""
    report = progression_check(N, n, j, checkpoints)
    if not report.holds:
        raise ShiftlabError("run-count bound for residue classes violated")
    return list(report.values)
