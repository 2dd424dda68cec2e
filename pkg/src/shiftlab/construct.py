"""Index sets with a prescribed density spectrum and pairs built from them.

The set builder alternates runs of members and gaps.  A run is stopped
as soon as the running density reaches an upper level, a gap as soon as
it drops below a lower level.  The upper levels climb towards ``q`` and
the lower levels sink towards ``p``, with the lower level always kept a
margin below the preceding upper level so that the runs keep growing.

How fast the levels approach their targets is the ``rate`` schedule:

``"sqrt"``
    the distance to the target shrinks like ``1/sqrt(j)`` in the level
    index ``j``; slow, but gives ever longer runs even when ``p == q``.
``"position"``
    the distance shrinks like ``1/sqrt(t)`` in the position ``t`` where
    the level is chosen; runs grow like ``sqrt(t)`` and the levels are
    within ``1/sqrt(t)`` of their targets.
``"geometric"``
    the distance shrinks like ``4**-j``; runs grow geometrically as long
    as ``p < q`` and the levels sit on target after a handful of runs.

``"auto"`` picks ``"position"`` for ``p == q`` and ``"geometric"`` otherwise.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .density import IndexSet, block_decompose, default_warmup
from .distributional import approach_times, agreement_runs
from .errors import ConstructionError, DegenerateInputError, InvalidInputError
from .symbolic import TruncatedPoint, pair_decode

GEOMETRIC_BASE = 4.0


@dataclass(frozen=True)
class SpectrumTarget:
    p: float
    q: float

    def __post_init__(self):
        p, q = float(self.p), float(self.q)
        if not (0.0 <= p <= q <= 1.0):
            raise InvalidInputError(f"need 0 <= p <= q <= 1, got p={p}, q={q}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    def as_dict(self):
        return {"p": self.p, "q": self.q}


RATES = ("sqrt", "position", "geometric")


def rate_value(rate: str, j: int, t: int) -> float:
    """Distance factor for level ``j`` chosen at position ``t``."""
    if rate == "sqrt":
        return 1.0 / math.sqrt(j)
    if rate == "position":
        return 1.0 / math.sqrt(max(t, 1))
    if rate == "geometric":
        return GEOMETRIC_BASE ** (-j)
    raise InvalidInputError(f"unknown rate schedule {rate!r}; expected one of {RATES}")


def resolve_rate(target: SpectrumTarget, rate: str = "auto") -> str:
    if rate == "auto":
        return "position" if target.p == target.q else "geometric"
    rate_value(rate, 1, 1)
    return rate


def upper_level(target: SpectrumTarget, i: int, rate: str, t: int = 1) -> float:
    """Density level that ends member run ``i`` (run 0 always has level 1)."""
    if i == 0:
        return 1.0
    r = rate_value(rate, 2 * i + 1, t)
    return r if target.q == 0 else target.q - target.q * r


def lower_level(target: SpectrumTarget, upper: float, i: int, delta: float, rate: str, t: int = 1):
    """Level that ends gap ``i`` after a run that reached ``upper``.

    Returns ``(level, bound, clamped)``: the level must stay strictly
    under ``bound = upper - delta*r``.  The level is
    ``min(p, upper - 2*delta*r)``; for ``p == 0`` the target ``p`` is
    replaced by the vanishing ``r`` itself so the level stays positive.
    If that is still not positive, half the bound is used and the clamp
    is reported.
    """
    r = rate_value(rate, 2 * i + 2, t)
    bound = upper - delta * r
    if bound <= 0:
        raise ConstructionError(
            f"no admissible lower level for gap {i}: upper level {upper:.6g} leaves no room "
            f"for margin {delta * r:.6g}; use a smaller delta"
        )
    floor = target.p if target.p > 0 else r
    c = min(floor, upper - 2 * delta * r)
    clamped = False
    if c <= 0:
        c = bound / 2
        clamped = True
    if not c < bound:
        raise ConstructionError(f"lower level {c} is not below {bound} at gap {i}")
    return c, bound, clamped


@dataclass
class AdmissibleSet:
    """Output of :func:`construct_admissible_set`.

    ``checkpoint_report`` rows are ``(i, run_end_ratio, gap_end_ratio,
    min_block)`` for every complete (run, gap) pair ``i`` of the set,
    recomputed from the final set.
    """

    set: IndexSet
    target: SpectrumTarget
    delta: float
    horizon: int
    checkpoint_report: tuple
    rate: str
    complemented: bool = False
    truncated: bool = True
    clamp_activations: tuple = ()
    levels: tuple = field(default=(), repr=False)

    def to_json(self) -> str:
        payload = {
            "target": self.target.as_dict(),
            "delta": self.delta,
            "horizon": self.horizon,
            "rate": self.rate,
            "complemented": self.complemented,
            "intervals": [list(iv) for iv in self.set.intervals()],
            "checkpoints": [list(row) for row in self.checkpoint_report],
            "clamp_activations": list(self.clamp_activations),
        }
        return json.dumps(payload, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "AdmissibleSet":
        data = json.loads(text)
        S = IndexSet.from_intervals(data["intervals"], data["horizon"])
        return cls(
            set=S,
            target=SpectrumTarget(**data["target"]),
            delta=data["delta"],
            horizon=data["horizon"],
            checkpoint_report=tuple(tuple(r) for r in data["checkpoints"]),
            rate=data.get("rate", "sqrt"),
            complemented=data.get("complemented", False),
            clamp_activations=tuple(data.get("clamp_activations", ())),
        )


def checkpoint_rows(N: IndexSet) -> tuple:
    B = block_decompose(N)
    rows = []
    odd, even = B.odd_ratios(), B.even_ratios()
    for i in range(B.n_pairs):
        rows.append((i, float(odd[i]), float(even[i]), int(min(B.d[2 * i], B.d[2 * i + 1]))))
    return tuple(rows)


def _build_runs(target: SpectrumTarget, delta: float, horizon: int, rate: str):
    t = [0, 1]
    e = 1  # members below t[-1]
    clamps = []
    levels = []
    i = 0
    truncated = False
    c_run = 1.0
    while True:
        c_gap, _, clamped = lower_level(target, c_run, i, delta, rate, t[-1])
        if clamped:
            clamps.append(i)
        T = max(t[-1] + 1, math.floor(e / c_gap) + 1)
        while T - 1 >= t[-1] + 1 and e / (T - 1) < c_gap:
            T -= 1
        while not e / T < c_gap:
            T += 1
        if T > horizon:
            truncated = True
            break
        t.append(T)
        levels.append((i, c_run, c_gap))
        c_run = upper_level(target, i + 1, rate, T)
        T2 = max(T + 1, math.ceil((T - e) / (1.0 - c_run)))
        while T2 - 1 >= T + 1 and (e + T2 - 1 - T) / (T2 - 1) >= c_run:
            T2 -= 1
        while (e + T2 - T) / T2 < c_run:
            T2 += 1
        if T2 > horizon:
            t.append(horizon)
            truncated = True
            break
        e += T2 - T
        t.append(T2)
        i += 1
    intervals = [(t[j], t[j + 1]) for j in range(0, len(t) - 1, 2)]
    return intervals, truncated, tuple(clamps), tuple(levels)


def construct_admissible_set(
    target: SpectrumTarget,
    delta: float = 0.1,
    horizon: int = 10**6,
    rate: str = "auto",
    complement: bool | None = None,
) -> AdmissibleSet:
    """Build a set whose density spectrum approaches ``[target.p, target.q]``.

    Each gap ends at the least position where the running density drops
    strictly below the current lower level, and each run ends at the
    least position where it climbs back to the next upper level.

    With ``complement=True`` the set for ``[1-q, 1-p]`` is built and
    complemented; this is the default for ``p == 1``, where approaching
    the levels from above converges faster than from below.
    """
    if not isinstance(target, SpectrumTarget):
        target = SpectrumTarget(*target)
    if not 0 < delta <= 0.5:
        raise InvalidInputError(f"delta must lie in (0, 1/2], got {delta}")
    horizon = int(horizon)
    if horizon < 1000:
        raise InvalidInputError("horizon must be at least 1000")
    if complement is None:
        complement = target.p == 1.0
    build_target = SpectrumTarget(1 - target.q, 1 - target.p) if complement else target
    rate = resolve_rate(build_target, rate)
    intervals, truncated, clamps, levels = _build_runs(build_target, delta, horizon, rate)
    S = IndexSet.from_intervals(intervals, horizon)
    if complement:
        S = S.complement()
    return AdmissibleSet(
        set=S,
        target=target,
        delta=float(delta),
        horizon=horizon,
        checkpoint_report=checkpoint_rows(S),
        rate=rate,
        complemented=complement,
        truncated=truncated,
        clamp_activations=clamps,
        levels=levels,
    )


@dataclass
class AdmissibleReport:
    passed: bool
    i_min: int
    n_checked: int
    max_upper_error: float | None
    max_lower_error: float | None
    min_tail_d: int | None
    trend: tuple | None  # f[2i] - (1-q) t[2i+1] over the tail, when q > 0
    trend_increasing: bool | None
    reasons: tuple = ()

    def as_dict(self):
        return {
            "passed": self.passed,
            "i_min": self.i_min,
            "n_checked": self.n_checked,
            "max_upper_error": self.max_upper_error,
            "max_lower_error": self.max_lower_error,
            "min_tail_d": self.min_tail_d,
            "trend_increasing": self.trend_increasing,
            "reasons": list(self.reasons),
        }


def verify_admissible(
    N,
    target: SpectrumTarget,
    tol: float = 0.05,
    i_min: int | None = None,
    warmup: int | None = None,
    min_tail_d: int = 2,
    require_trend: bool = False,
) -> AdmissibleReport:
    """Check run-end ratios against ``q``, gap-end ratios against ``p``.

    Works from the set alone.  Pairs ``i >= i_min`` are checked; by
    default ``i_min`` is the first pair whose run ends at or after the
    warmup.  Besides the ratio errors, the shortest block in the tail
    must be at least ``min_tail_d`` long.

    For ``q > 0`` the excess ``f[2i] - (1-q) t[2i+1]`` is reported and
    called increasing when the tail ends at its maximum.  The ``"sqrt"``
    schedule makes it diverge; the ``"geometric"`` one does not, which
    does not affect the spectrum, so it only counts towards ``passed``
    with ``require_trend=True``.
    """
    if isinstance(N, AdmissibleSet):
        N = N.set
    if not isinstance(target, SpectrumTarget):
        target = SpectrumTarget(*target)
    B = block_decompose(N)  # raises on degenerate sets
    n_pairs = B.n_pairs
    if i_min is None:
        w = default_warmup(N.horizon) if warmup is None else int(warmup)
        run_ends = B.t[1::2][:n_pairs]
        later = np.flatnonzero(run_ends >= w)
        i_min = int(later[0]) if later.size else n_pairs
    reasons = []
    idx = np.arange(i_min, n_pairs)
    if idx.size == 0:
        reasons.append(f"no complete block pair at or beyond i_min={i_min} (only {n_pairs} pairs)")
        return AdmissibleReport(False, i_min, 0, None, None, None, None, None, tuple(reasons))
    odd = B.odd_ratios()[idx]
    even = B.even_ratios()[idx]
    up_err = float(np.max(np.abs(odd - target.q)))
    lo_err = float(np.max(np.abs(even - target.p)))
    tail_d = int(min(B.d[2 * idx].min(), B.d[2 * idx + 1].min()))
    if up_err > tol:
        reasons.append(f"run-end ratio off by {up_err:.4g} > {tol}")
    if lo_err > tol:
        reasons.append(f"gap-end ratio off by {lo_err:.4g} > {tol}")
    if tail_d < min_tail_d:
        reasons.append(f"shortest tail block {tail_d} < {min_tail_d}")
    trend = None
    increasing = None
    if target.q > 0:
        trend = tuple(int(B.f[2 * i]) - (1 - target.q) * int(B.t[2 * i + 1]) for i in idx)
        if len(trend) >= 2:
            increasing = trend[-1] > trend[0] and trend[-1] == max(trend)
            if not increasing and require_trend:
                reasons.append("excess of out-counts over (1-q) t is not increasing")
    return AdmissibleReport(
        passed=not reasons,
        i_min=i_min,
        n_checked=int(idx.size),
        max_upper_error=up_err,
        max_lower_error=lo_err,
        min_tail_d=tail_d,
        trend=trend,
        trend_increasing=increasing,
        reasons=tuple(reasons),
    )


def order_map_gamma(N: IndexSet, i: int, complement: bool = False) -> int:
    """Rank of ``i`` inside ``N`` (or inside its complement)."""
    S = N.complement() if complement else N
    if i not in S:
        side = "complement" if complement else "set"
        raise InvalidInputError(f"{i} is not in the {side}")
    return int(S.counts[i])


def interleave_phi(N: IndexSet, a: TruncatedPoint, x: TruncatedPoint) -> TruncatedPoint:
    """Write ``a`` on the positions of ``N`` and ``x`` on the rest, in order."""
    if a.K != x.K:
        raise InvalidInputError(f"alphabet mismatch: {a.K} vs {x.K}")
    need_a = len(N)
    need_x = N.horizon - need_a
    if a.horizon < need_a or x.horizon < need_x:
        raise InvalidInputError(
            f"interleaving needs {need_a} symbols on the set and {need_x} off it; "
            f"got {a.horizon} and {x.horizon}"
        )
    out = np.empty(N.horizon, dtype=np.int64)
    out[N.mask] = a.symbols[:need_a]
    out[~N.mask] = x.symbols[:need_x]
    return TruncatedPoint(out, a.K)


def deinterleave(N: IndexSet, z: TruncatedPoint) -> tuple[TruncatedPoint, TruncatedPoint]:
    """Inverse of :func:`interleave_phi`: the symbols on ``N`` and off ``N``."""
    if z.horizon != N.horizon:
        raise InvalidInputError("horizon mismatch")
    return TruncatedPoint(z.symbols[N.mask], z.K), TruncatedPoint(z.symbols[~N.mask], z.K)


@dataclass(frozen=True)
class GenericSource:
    alphabet_size: int
    kind: str = "champernowne"
    symbols: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("champernowne", "all_zero", "all_max", "user_supplied"):
            raise InvalidInputError(f"unknown generic source kind {self.kind!r}")
        if self.kind == "user_supplied" and self.symbols is None:
            raise InvalidInputError("user_supplied source needs symbols")


def champernowne(m: int, horizon: int) -> np.ndarray:
    """All words of length 1, 2, ... over ``m`` letters, in lexicographic order, concatenated."""
    parts = []
    total = 0
    L = 1
    while total < horizon:
        count = min(m**L, -(-(horizon - total) // L))
        words = np.arange(count, dtype=np.int64)
        digits = np.empty((count, L), dtype=np.int64)
        for j in range(L - 1, -1, -1):
            digits[:, j] = words % m
            words //= m
        parts.append(digits.ravel())
        total += count * L
        L += 1
    return np.concatenate(parts)[:horizon] if parts else np.zeros(0, dtype=np.int64)


def generic_sequence(src: GenericSource, horizon: int) -> TruncatedPoint:
    horizon = int(horizon)
    if horizon < 1:
        raise InvalidInputError("horizon must be >= 1")
    m = src.alphabet_size
    if src.kind == "champernowne":
        syms = champernowne(m, horizon)
    elif src.kind == "all_zero":
        syms = np.zeros(horizon, dtype=np.int64)
    elif src.kind == "all_max":
        syms = np.full(horizon, m - 1, dtype=np.int64)
    else:
        base = np.asarray(src.symbols, dtype=np.int64)
        if base.size < horizon:
            raise InvalidInputError(f"supplied sequence has {base.size} symbols, need {horizon}")
        syms = base[:horizon]
    return TruncatedPoint(syms, m)


def distal_exponent(a: TruncatedPoint, b: TruncatedPoint) -> int:
    """Smallest ``k`` such that every length-``k`` window of the pair has a disagreement."""
    runs = agreement_runs(a, b)
    return int(runs.max()) + 1 if runs.size else 1


@dataclass(frozen=True)
class InclusionReport:
    k: int
    s: int
    exponents: tuple
    inner_violations: tuple  # per exponent m: members of N minus run tails missing from the approach set
    outer_violations: tuple  # per exponent m >= k: approach times outside N ∪ gap tails ∪ [0, s)

    @property
    def passed(self) -> bool:
        return not any(self.inner_violations) and not any(self.outer_violations)


def _tails(ends: np.ndarray, width: int, horizon: int) -> np.ndarray:
    """Mask of ``{r - j : r in ends, 0 <= j < width}`` intersected with ``[0, horizon)``."""
    mask = np.zeros(horizon, dtype=bool)
    for j in range(width):
        pos = ends - j
        pos = pos[(pos >= 0) & (pos < horizon)]
        mask[pos] = True
    return mask


def dc_pair_inclusions(N: IndexSet, x: TruncatedPoint, y: TruncatedPoint, k: int, exponents=None) -> InclusionReport:
    """Exact set inclusions behind the interleaved pair's spectrum.

    For each exponent ``m`` the members of ``N`` that are at least ``m``
    before the end of their run must be approach times; and every
    approach time at exponent ``m >= k`` must lie in ``N``, within ``k``
    of the start of a run of ``N``, or before the first non-member.
    """
    h = N.horizon
    if exponents is None:
        exponents = tuple(range(1, k + 4))
    runs = agreement_runs(x, y)
    m_ = N.mask
    prev = np.concatenate(([False], m_[:-1]))
    run_ends = np.flatnonzero(~m_ & prev)  # R of the set, observed below the horizon
    run_starts = np.flatnonzero(m_ & ~prev)
    run_starts = run_starts[run_starts > 0]  # R of the complement
    comp = np.flatnonzero(~m_)
    s = int(comp[0]) if comp.size else h
    inner, outer = [], []
    for m in exponents:
        A = approach_times(x, y, m, runs).indices.mask
        valid = h - m + 1
        need = m_[:valid] & ~_tails(run_ends, m, h)[:valid]
        inner.append(int(np.count_nonzero(need & ~A)))
        if m >= k:
            allowed = m_.copy()
            allowed |= _tails(run_starts, k, h)
            allowed[:s] = True
            outer.append(int(np.count_nonzero(A & ~allowed[:valid])))
    return InclusionReport(int(k), s, tuple(exponents), tuple(inner), tuple(outer))


def _verified(N, target: SpectrumTarget, tol: float, warmup: int | None, i_min: int | None) -> IndexSet:
    S = N.set if isinstance(N, AdmissibleSet) else N
    report = verify_admissible(S, target, tol=tol, warmup=warmup, i_min=i_min)
    if not report.passed:
        raise InvalidInputError("index set fails the admissibility check: " + "; ".join(report.reasons))
    return S


def build_dc_pair(
    target: SpectrumTarget,
    K: int,
    N,
    a: TruncatedPoint | None = None,
    b: TruncatedPoint | None = None,
    c: TruncatedPoint | None = None,
    k: int | None = None,
    tol: float = 0.05,
    warmup: int | None = None,
    i_min: int | None = None,
) -> tuple[TruncatedPoint, TruncatedPoint]:
    """Pair sharing ``c`` on ``N`` and carrying the distal pair ``(a, b)`` off ``N``.

    Defaults are ``a = 0...``, ``b = (K-1)...`` and ``c = 0...``.  The
    distality exponent ``k`` is checked (or found) on the consumed
    prefixes, and the inclusions of :func:`dc_pair_inclusions` are
    checked before returning.  The set must pass :func:`verify_admissible`
    with the given ``tol``, ``warmup`` and ``i_min``.
    """
    if not isinstance(target, SpectrumTarget):
        target = SpectrumTarget(*target)
    S = _verified(N, target, tol, warmup, i_min)
    n_in = len(S)
    n_out = S.horizon - n_in
    if n_in == 0 or n_out == 0:
        raise DegenerateInputError("index set and its complement must be nonempty")
    a = TruncatedPoint.constant(0, K, n_out) if a is None else a
    b = TruncatedPoint.constant(K - 1, K, n_out) if b is None else b
    c = TruncatedPoint.constant(0, K, n_in) if c is None else c
    if a.horizon < n_out or b.horizon < n_out:
        raise InvalidInputError(f"distal pair needs {n_out} symbols")
    a_used = TruncatedPoint(a.symbols[:n_out], K)
    b_used = TruncatedPoint(b.symbols[:n_out], K)
    runs = agreement_runs(a_used, b_used)
    found = int(runs.max()) + 1
    if k is None:
        k = found
    elif found > k:
        bad = int(np.argmax(runs >= k))
        raise InvalidInputError(f"(a, b) agree on the window [{bad}, {bad + k}); not distal at exponent {k}")
    x = interleave_phi(S, c, a_used)
    y = interleave_phi(S, c, b_used)
    report = dc_pair_inclusions(S, x, y, k)
    if not report.passed:
        raise ConstructionError(f"interleaved pair violates the expected inclusions: {report}")
    return x, y


def build_exact_spectrum_pair(
    target: SpectrumTarget,
    K: int,
    N,
    a: TruncatedPoint | None = None,
    horizon: int | None = None,
    tol: float = 0.05,
    warmup: int | None = None,
    i_min: int | None = None,
) -> tuple[TruncatedPoint, TruncatedPoint]:
    """Pair sharing ``a`` on ``N`` and carrying a generic pair off ``N``.

    The generic pair is the two halves of the Champernowne sequence over
    ``K**2``.  ``a`` defaults to ``0...``.
    """
    if not isinstance(target, SpectrumTarget):
        target = SpectrumTarget(*target)
    S = _verified(N, target, tol, warmup, i_min)
    if horizon is not None and int(horizon) != S.horizon:
        if int(horizon) > S.horizon:
            raise InvalidInputError(f"horizon {horizon} exceeds the index set's {S.horizon}")
        S = IndexSet(S.mask[: int(horizon)])
    n_in = len(S)
    n_out = S.horizon - n_in
    a = TruncatedPoint.constant(0, K, n_in) if a is None else a
    z = generic_sequence(GenericSource(K * K), max(n_out, 1))
    b, c = pair_decode(z)
    y = interleave_phi(S, a, b)
    w = interleave_phi(S, a, c)
    return y, w


def predicted_exact_spectrum(target: SpectrumTarget, K: int, k: int) -> tuple[float, float]:
    """Closed-form spectrum at exponent ``k`` for :func:`build_exact_spectrum_pair`."""
    g = float(K) ** (-k)
    return target.p + (1 - target.p) * g, target.q + (1 - target.q) * g
