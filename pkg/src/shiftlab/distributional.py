"""Approach times and distributional spectra of orbit pairs in the shift.

Two points are closer than ``K**-(k-1)`` exactly when they agree on their
first ``k`` symbols, so every threshold question reduces to agreement
runs.  :func:`agreement_runs` computes, for every index, the length of
the agreement run starting there; everything else is a threshold on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .density import (
    IndexSet,
    SpectrumInterval,
    _window,
    block_decompose,
    default_warmup,
    spectrum_estimate,
)
from .errors import InvalidInputError
from .symbolic import TruncatedPoint, _check_pair

DC_LOW = 0.02
DC_HIGH = 0.98
DC2_LOW = 0.9
STABILITY = 0.01


def agreement_runs(x: TruncatedPoint, y: TruncatedPoint) -> np.ndarray:
    """``runs[i]`` is the largest ``r`` with ``x[i:i+r] == y[i:i+r]``."""
    _check_pair(x, y)
    h = x.horizon
    idx = np.arange(h)
    nxt = np.where(x.symbols != y.symbols, idx, h)
    nxt = np.minimum.accumulate(nxt[::-1])[::-1]
    return nxt - idx


def exponent_for_epsilon(eps, K: int) -> int:
    """Smallest ``k`` with ``K**-k < eps``.

    Distance below ``eps`` is then the same as agreement on at least ``k``
    symbols.  Values of ``eps`` in ``(K**-k, K**-(k-1)]`` share one ``k``.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise InvalidInputError("epsilon must be positive")
    k = 0
    while Fraction(1, K**k) >= eps:
        k += 1
    return k


@dataclass(frozen=True)
class ApproachTimeSet:
    """Indices ``i <= horizon - k`` where the pair agrees on ``[i, i+k)``."""

    indices: IndexSet
    k: int
    pair_ref: tuple = ()


def approach_times(x: TruncatedPoint, y: TruncatedPoint, k: int, runs: np.ndarray | None = None) -> ApproachTimeSet:
    k = int(k)
    if k < 1 or k > x.horizon:
        raise InvalidInputError(f"k={k} outside [1, {x.horizon}]")
    if runs is None:
        runs = agreement_runs(x, y)
    valid = x.horizon - k + 1
    return ApproachTimeSet(IndexSet(runs[:valid] >= k), k)


def distributional_functions(x, y, k: int, warmup: int | None = None) -> tuple[float, float]:
    """Lower and upper running densities of the approach times at exponent ``k``."""
    A = approach_times(x, y, k)
    s = spectrum_estimate(A.indices, warmup)
    return s.lo, s.hi


def checkpoint_spectrum(A: IndexSet, N: IndexSet, warmup: int | None = None) -> SpectrumInterval:
    """Spectrum of ``A`` read at the run boundaries of ``N``.

    The lower value is taken where gaps of ``N`` end and the upper value
    where runs of ``N`` end, over boundaries in ``[warmup, A.horizon]``,
    together with the two window ends.
    """
    w, flags = _window(A.horizon, warmup)
    B = block_decompose(N)
    cps = B.t[1:]
    h = A.horizon
    run_ends = cps[0::2]
    gap_ends = cps[1::2]
    run_ends = run_ends[(run_ends >= w) & (run_ends <= h)]
    gap_ends = gap_ends[(gap_ends >= w) & (gap_ends <= h)]
    c = A.counts
    ends = [c[w] / w, c[h] / h]
    lo = min([*(c[gap_ends] / gap_ends), *ends])
    hi = max([*(c[run_ends] / run_ends), *ends])
    return SpectrumInterval(float(lo), float(hi), flags)


@dataclass
class DistributionalProfile:
    entries: dict  # k -> SpectrumInterval
    limits: tuple | None  # (p_hat, q_hat), None when no entry is stable
    stable_k: int | None
    band: float | None  # endpoint change at the stable k
    monotone: bool
    window: tuple  # (warmup, common horizon)

    @property
    def undetermined(self) -> bool:
        return self.limits is None

    def rows(self, K: int) -> list[tuple]:
        """``(k, eps_hi, lo, hi)`` rows; ``eps_hi = K**-(k-1)`` is the band's upper end."""
        return [(k, float(K) ** (-(k - 1)), s.lo, s.hi) for k, s in sorted(self.entries.items())]


def spectrum_profile(x, y, k_max: int, warmup: int | None = None) -> DistributionalProfile:
    """Running-density spectra of approach times for ``k = 1..k_max``.

    All entries are read on the common index range ``[0, horizon-k_max]``
    so that the nesting of approach sets carries over to the estimates.
    """
    h = x.horizon
    k_max = int(k_max)
    if k_max < 1 or k_max > h // 10:
        raise InvalidInputError(f"k_max must lie in [1, horizon/10], got {k_max}")
    runs = agreement_runs(x, y)
    common = h - k_max + 1
    w, _ = _window(common, warmup if warmup is not None else default_warmup(h))
    entries = {}
    for k in range(1, k_max + 1):
        entries[k] = spectrum_estimate(IndexSet(runs[:common] >= k), w)
    monotone = all(
        entries[k + 1].lo <= entries[k].lo and entries[k + 1].hi <= entries[k].hi for k in range(1, k_max)
    )
    stable_k = None
    band = None
    for k in range(2, k_max + 1):
        dlo = abs(entries[k].lo - entries[k - 1].lo)
        dhi = abs(entries[k].hi - entries[k - 1].hi)
        if dlo < STABILITY and dhi < STABILITY:
            stable_k, band = k, max(dlo, dhi)
    limits = None if stable_k is None else (entries[stable_k].lo, entries[stable_k].hi)
    return DistributionalProfile(entries, limits, stable_k, band, monotone, (w, common))


LABELS = ("asymptotic", "distal", "proximal_not_LY", "li_yorke", "dc1_candidate", "dc2_candidate", "undetermined")


@dataclass
class PairClass:
    """Finite-horizon verdict with its evidence.

    ``label`` is one of :data:`LABELS` minus the dc ones; ``dc1`` and
    ``dc2`` refine a ``li_yorke`` label.  ``proximal_not_LY`` is kept for
    export compatibility but never produced: a proximal pair that is not
    asymptotic is Li-Yorke.
    """

    label: str
    dc1: bool = False
    dc2: bool = False
    evidence: dict = field(default_factory=dict)

    @property
    def labels(self) -> tuple:
        out = [self.label]
        if self.dc1:
            out.append("dc1_candidate")
        if self.dc2:
            out.append("dc2_candidate")
        return tuple(out)

    @property
    def is_proximal(self) -> bool:
        return self.label in ("asymptotic", "proximal_not_LY", "li_yorke")


def default_gap_bound(K: int, horizon: int) -> int:
    """Largest agreement run still accepted as "bounded": half of ``log_K(horizon)``."""
    return max(1, int(math.log(horizon) / math.log(K) / 2))


def classify_pair(
    x: TruncatedPoint,
    y: TruncatedPoint,
    k_max: int | None = None,
    warmup: int | None = None,
    gap_bound: int | None = None,
) -> PairClass:
    """Label a pair from its prefix.

    * asymptotic: no disagreement in ``[warmup, horizon)`` and lower limit >= 0.98
    * distal: every agreement run in the prefix is at most ``gap_bound`` long
    * li_yorke: neither of the above (proximal, not asymptotic)
    * dc1 / dc2 flags from the profile limits, see ``DC_*`` thresholds
    """
    _check_pair(x, y)
    h = x.horizon
    if k_max is None:
        k_max = max(1, min(16, h // 10))
    w = default_warmup(h) if warmup is None else int(warmup)
    if gap_bound is None:
        gap_bound = default_gap_bound(x.K, h)
    dis = np.flatnonzero(x.symbols != y.symbols)
    last = int(dis[-1]) if dis.size else None
    # longest stretch of agreement anywhere in the prefix
    max_gap = int(np.max(np.diff(np.concatenate(([-1], dis, [h]))) - 1))
    evidence = {
        "horizon": h,
        "warmup": w,
        "last_disagreement": last,
        "max_gap": max_gap,
        "gap_bound": gap_bound,
        "k_max": k_max,
        "thresholds": {"dc_low": DC_LOW, "dc_high": DC_HIGH, "dc2_low": DC2_LOW, "stability": STABILITY},
    }
    if h < 2 * w:
        evidence["reason"] = "horizon shorter than twice the warmup"
        return PairClass("undetermined", evidence=evidence)
    profile = spectrum_profile(x, y, k_max, w)
    evidence["limits"] = profile.limits
    evidence["stable_k"] = profile.stable_k
    evidence["profile_monotone"] = profile.monotone
    quiet_tail = last is None or last < w
    p_hat = profile.limits[0] if profile.limits else None
    if quiet_tail and p_hat is not None and p_hat >= DC_HIGH:
        return PairClass("asymptotic", evidence=evidence)
    if max_gap <= gap_bound:
        return PairClass("distal", evidence=evidence)
    dc1 = dc2 = False
    if profile.limits is not None:
        p_hat, q_hat = profile.limits
        dc1 = p_hat <= DC_LOW and q_hat >= DC_HIGH
        dc2 = q_hat >= DC_HIGH and p_hat <= DC2_LOW
    return PairClass("li_yorke", dc1=dc1, dc2=dc2, evidence=evidence)


@dataclass(frozen=True)
class PowerInvarianceReport:
    n: int
    m: int
    forward_checked: int
    forward_violations: int
    backward_checked: int
    backward_violations: int

    @property
    def passed(self) -> bool:
        return self.forward_violations == 0 and self.backward_violations == 0


def power_invariance_check(
    x: TruncatedPoint, y: TruncatedPoint, n: int, m: int, runs: np.ndarray | None = None
) -> PowerInvarianceReport:
    """Approach times of the ``n``-th power against those of the shift itself.

    Forward: if the pair agrees for ``m+n`` symbols from ``i*n``, every
    ``i*n + j`` (``j < n``) is an approach time at exponent ``m``.
    Backward: if it disagrees within ``m`` symbols of ``i*n``, no
    ``i*n - j`` is an approach time at exponent ``m+n``.  Only indices
    whose windows fit in the prefix are tested.
    """
    n, m = int(n), int(m)
    h = x.horizon
    if n < 1 or m < 1 or m + n > h:
        raise InvalidInputError(f"need n >= 1, m >= 1 and m + n <= horizon, got n={n}, m={m}")
    if runs is None:
        runs = agreement_runs(x, y)
    A_m = approach_times(x, y, m, runs).indices.mask
    A_mn = approach_times(x, y, m + n, runs).indices.mask
    # the n-th power only visits multiples of n
    power_mn = A_mn[::n]
    power_m = A_m[::n]
    hits = np.flatnonzero(power_mn) * n
    fwd = hits[:, None] + np.arange(n)[None, :]
    fwd_ok = A_m[fwd.ravel()] if fwd.size else np.array([], dtype=bool)
    misses = np.flatnonzero(~power_m) * n
    back = misses[:, None] - np.arange(n)[None, :]
    back = back[(back >= 0) & (back < A_mn.size)]
    back_bad = A_mn[back]
    return PowerInvarianceReport(
        n=n,
        m=m,
        forward_checked=int(fwd_ok.size),
        forward_violations=int(np.count_nonzero(~fwd_ok)),
        backward_checked=int(back.size),
        backward_violations=int(np.count_nonzero(back_bad)),
    )
