"""Cylinder covers of product sets and the dimension values they lead to.

A :class:`BlockProductSpec` describes ``X = A_0 x A_1 x ...`` where
``A_i`` is a set of ``a_i`` words of length ``n_i`` over a base alphabet.
The depth-``j`` cylinders over ``X`` number ``a_0 ... a_{j-1}`` and all
have diameter ``base ** -(n_0 + ... + n_{j-1})``, so cover sums, log
ratios and regression slopes are exact functions of the two sequences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .construct import AdmissibleSet, SpectrumTarget, verify_admissible
from .density import IndexSet, SpectrumInterval, spectrum_estimate
from .distributional import approach_times
from .errors import DegenerateInputError, InvalidInputError
from .symbolic import TruncatedPoint

ANALYTIC_NOTE = "analytic target, not numerically certified"


@dataclass(frozen=True)
class BlockProductSpec:
    counts: tuple  # a_i
    lengths: tuple  # n_i
    base: int
    width: int = 1  # base symbols per position; 2 for sequences of pairs

    def __post_init__(self):
        counts = tuple(int(a) for a in self.counts)
        lengths = tuple(int(n) for n in self.lengths)
        width = int(self.width)
        if len(counts) != len(lengths):
            raise InvalidInputError("counts and lengths must have the same length")
        if int(self.base) < 2:
            raise InvalidInputError("base alphabet must have at least 2 symbols")
        if width < 1:
            raise InvalidInputError("width must be >= 1")
        for a, n in set(zip(counts, lengths)):
            if n < 1 or not 1 <= a <= self.base ** (n * width):
                raise InvalidInputError(f"block ({a}, {n}) violates 1 <= a <= base**(n*width)")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "base", int(self.base))
        object.__setattr__(self, "width", width)

    @classmethod
    def constant(cls, a: int, n: int, base: int, depth: int) -> "BlockProductSpec":
        return cls((a,) * depth, (n,) * depth, base)

    @classmethod
    def full_shift(cls, K: int, depth: int) -> "BlockProductSpec":
        return cls.constant(K, 1, K, depth)

    @classmethod
    def diagonal(cls, K: int, depth: int) -> "BlockProductSpec":
        """Pairs of equal sequences, read over the paired alphabet ``K**2``."""
        return cls.constant(K, 1, K * K, depth)

    @property
    def depth(self) -> int:
        return len(self.counts)

    def log_counts(self) -> np.ndarray:
        """``ln(a_0 ... a_{j-1})`` for ``j = 0..depth``."""
        return np.concatenate(([0.0], np.cumsum(np.log(np.array(self.counts, dtype=float)))))

    def total_lengths(self) -> np.ndarray:
        """``n_0 + ... + n_{j-1}`` for ``j = 0..depth``."""
        return np.concatenate(([0], np.cumsum(np.array(self.lengths, dtype=np.int64))))


@dataclass(frozen=True)
class CoverReport:
    depth: int
    count: int  # exact number of cylinders
    length: int  # diameter is base ** -length
    base: int
    sum_s: dict  # s -> float cover sum
    log_sum_s: dict  # s -> natural log of the cover sum
    exact_sum_s: dict = field(default_factory=dict)  # s -> Fraction when representable

    @property
    def diameter(self) -> Fraction:
        return Fraction(1, self.base**self.length)

    @property
    def estimate(self) -> float:
        """``ln count / ln(1/diameter)``."""
        return math.log(self.count) / (self.length * math.log(self.base))


def _exact_power(base: int, length: int, s: Fraction) -> Fraction | None:
    """``base ** (-length * s)`` as a fraction when it is rational."""
    if s < 0:
        return None
    e = Fraction(length) * s
    num, den = e.numerator, e.denominator
    # with num and den coprime, base**num is a den-th power iff base is
    root = round(base ** (1.0 / den))
    for r in (root - 1, root, root + 1):
        if r > 0 and r**den == base:
            return Fraction(1, r**num)
    return None


def cylinder_cover_sum(spec: BlockProductSpec, s, depth: int) -> CoverReport:
    """``sum |A|**s`` over the depth-``depth`` cylinder cover.

    ``s`` may be a single exponent or a sequence of them.  Floats are
    summed in log space; rational exponents whose power of the base is
    rational also get the exact sum.
    """
    depth = int(depth)
    if depth < 1 or depth > spec.depth:
        raise InvalidInputError(f"depth {depth} outside [1, {spec.depth}]")
    exps = list(s) if isinstance(s, (list, tuple)) else [s]
    count = math.prod(spec.counts[:depth])
    length = sum(spec.lengths[:depth])
    ln_count = math.log(count)
    ln_diam = -length * math.log(spec.base)
    sums, logs, exact = {}, {}, {}
    for e in exps:
        if e < 0:
            raise InvalidInputError("exponent s must be >= 0")
        lv = ln_count + e * ln_diam
        logs[e] = lv
        sums[e] = math.exp(lv) if lv < 700 else math.inf
        if isinstance(e, (int, Fraction)) or float(e).is_integer():
            power = _exact_power(spec.base, length, Fraction(e))
            if power is not None:
                exact[e] = count * power
    return CoverReport(depth, count, length, spec.base, sums, logs, exact)


def cover_sum_trajectory(spec: BlockProductSpec, s: float, depths) -> np.ndarray:
    """Log cover sums at exponent ``s`` for each depth in ``depths``."""
    depths = np.asarray(depths, dtype=np.int64)
    lc = spec.log_counts()
    tl = spec.total_lengths()
    return lc[depths] - s * tl[depths] * math.log(spec.base)


@dataclass(frozen=True)
class DimensionBound:
    value: float
    j0: int
    argmin: int
    trajectory: np.ndarray = field(repr=False)

    def __float__(self):
        return self.value


def liminf_dim_lower_bound(spec: BlockProductSpec, depth_max: int | None = None, j0: int | None = None) -> DimensionBound:
    """Tail minimum of ``ln(a_0...a_{j-1}) / ((n_0+...+n_j) ln base)``.

    ``trajectory[j-1]`` is the ratio at ``j = 1..depth_max``; the bound is
    its minimum over ``j >= j0`` (default ``depth_max // 2``).
    """
    depth_max = spec.depth - 1 if depth_max is None else int(depth_max)
    if depth_max < 2 or depth_max >= spec.depth:
        raise InvalidInputError(f"depth_max must lie in [2, {spec.depth - 1}]")
    j0 = max(1, depth_max // 2) if j0 is None else int(j0)
    if not 1 <= j0 <= depth_max:
        raise InvalidInputError(f"j0 must lie in [1, {depth_max}]")
    lc = spec.log_counts()
    tl = spec.total_lengths()
    j = np.arange(1, depth_max + 1)
    ratio = lc[j] / (tl[j + 1] * math.log(spec.base))
    tail = ratio[j0 - 1 :]
    k = int(np.argmin(tail))
    return DimensionBound(float(tail[k]), j0, j0 + k, ratio)


@dataclass(frozen=True)
class BoxDimension:
    value: float
    residual: float  # root mean square residual of the fit
    window: tuple

    def __float__(self):
        return self.value


def box_dim_estimate(spec: BlockProductSpec, depth_max: int | None = None) -> BoxDimension:
    """Least-squares slope of ``ln count`` against ``ln(1/diameter)`` over depths ``[depth_max/2, depth_max]``."""
    depth_max = spec.depth if depth_max is None else int(depth_max)
    if depth_max < 10 or depth_max > spec.depth:
        raise InvalidInputError(f"depth_max must lie in [10, {spec.depth}]")
    j = np.arange(depth_max // 2, depth_max + 1)
    x = spec.total_lengths()[j] * math.log(spec.base)
    y = spec.log_counts()[j]
    xc = x - x.mean()
    var = float(np.dot(xc, xc))
    if var == 0:
        raise DegenerateInputError("all depths in the window have the same diameter")
    slope = float(np.dot(xc, y - y.mean()) / var)
    fit = y.mean() + slope * xc
    resid = float(np.sqrt(np.mean((y - fit) ** 2)))
    return BoxDimension(slope, resid, (int(j[0]), int(j[-1])))


def dc_lower_bound_spec(
    target: SpectrumTarget,
    K: int,
    n: int,
    N,
    check: bool = True,
    warmup: int | None = None,
    tol: float = 0.05,
) -> tuple[BlockProductSpec, float]:
    """Product set over the paired alphabet ``K**2`` steered by ``N``.

    Block ``i`` (length ``n``) is a diagonal word (``K**n`` choices) when
    ``i`` is in ``N`` and any non-diagonal word (``K**(2n) - K**n``)
    otherwise.  Returns the spec and ``q/2 + (1-q) ln(K**(2n)-K**n) / ln K**(2n)``,
    the dimension the construction guarantees for the image.
    """
    if not isinstance(target, SpectrumTarget):
        target = SpectrumTarget(*target)
    K, n = int(K), int(n)
    if K < 2 or n < 1:
        raise InvalidInputError("need K >= 2 and n >= 1")
    S = N.set if isinstance(N, AdmissibleSet) else N
    if not isinstance(S, IndexSet):
        raise InvalidInputError("N must be an IndexSet or AdmissibleSet")
    if check:
        report = verify_admissible(S, target, tol=tol, warmup=warmup)
        if not report.passed:
            raise InvalidInputError("index set fails the admissibility check: " + "; ".join(report.reasons))
    on, off = K**n, K ** (2 * n) - K**n
    counts = np.where(S.mask, on, off)
    spec = BlockProductSpec(tuple(counts.tolist()), (n,) * S.horizon, K * K)
    return spec, dc_analytic_bound(target.q, K, n)


def dc_analytic_bound(q: float, K: int, n: int) -> float:
    return q / 2 + (1 - q) * math.log(K ** (2 * n) - K**n) / math.log(K ** (2 * n))


def pair_space_source(spec: BlockProductSpec) -> BlockProductSpec:
    """Same blocks read in the pair space, where a cylinder's diameter is the square root of its image's."""
    r = math.isqrt(spec.base)
    if r * r != spec.base:
        raise InvalidInputError(f"base {spec.base} is not a paired alphabet")
    return BlockProductSpec(spec.counts, spec.lengths, r, width=2 * spec.width)


def asym_piece_spec(K: int, n: int, depth: int) -> BlockProductSpec:
    """Pairs that agree from index ``n`` on, as a subset of the paired shift."""
    if depth < n:
        raise InvalidInputError("depth must be at least n")
    return BlockProductSpec((K * K,) * n + (K,) * (depth - n), (1,) * depth, K * K)


def dist_piece_spec(K: int, n: int, depth: int) -> BlockProductSpec:
    """Aligned length-``n`` blocks that are never diagonal; covers the pairs with no agreement window of length ``n``."""
    return BlockProductSpec.constant(K ** (2 * n) - K**n, n, K * K, depth)


def theorem_targets(target: SpectrumTarget) -> dict:
    if not isinstance(target, SpectrumTarget):
        target = SpectrumTarget(*target)
    q = target.q
    return {
        "target": target.as_dict(),
        "dim_E": 2 - q,
        "dim_D": 2 - q,
        "measure_E": 1.0 if q == 0 else math.inf,
        "measure_D": math.inf if q == 1 else 0.0,
        "note": ANALYTIC_NOTE,
    }


def special_relations_targets() -> dict:
    return {
        "Asym": {"dim": 1, "measure": math.inf},
        "Prox": {"dim": 2, "measure": 1.0},
        "Dist": {"dim": 2, "measure": 0.0},
        "LY": {"dim": 2, "measure": 1.0},
        "MLY": {"dim": 1, "measure": math.inf},
        "note": ANALYTIC_NOTE,
    }


def agreement_window_density(x: TruncatedPoint, y: TruncatedPoint, k: int, warmup: int | None = None) -> SpectrumInterval:
    """Density spectrum of the indices where ``x`` and ``y`` agree on the next ``k`` symbols."""
    return spectrum_estimate(approach_times(x, y, k).indices, warmup)
