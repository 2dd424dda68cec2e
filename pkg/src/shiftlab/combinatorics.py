"""Types of words over a partitioned alphabet.

The alphabet ``[0, K)`` is split into classes ``K_0 .. K_{m-1}``.  The
type of a word is the vector of class frequencies; the words of a given
type are counted exactly by a multinomial, and the normalised log count
approaches the class-weighted entropy ``f(p) = sum p_i ln(#K_i / p_i)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .density import default_warmup
from .errors import CapacityError, InvalidInputError
from .symbolic import TruncatedPoint

EXACT_COUNT_CAP = 5000
BRUTE_FORCE_CAP = 10**7
ENUMERATION_CAP = 10**6
STIRLING_E = 1.0 / 12.0
SUM_TOL = 1e-12
# float coordinates within this of a lattice point are treated as on it
LATTICE_SNAP = 1e-9


@dataclass(frozen=True)
class AlphabetPartition:
    classes: tuple

    def __post_init__(self):
        classes = tuple(tuple(sorted(int(s) for s in c)) for c in self.classes)
        if len(classes) < 2:
            raise InvalidInputError("a partition needs at least two classes")
        if any(len(c) == 0 for c in classes):
            raise InvalidInputError("partition classes must be nonempty")
        flat = [s for c in classes for s in c]
        if sorted(flat) != list(range(len(flat))):
            raise InvalidInputError("classes must be disjoint and cover 0..K-1")
        object.__setattr__(self, "classes", classes)

    @classmethod
    def parse(cls, text: str) -> "AlphabetPartition":
        """``"0|1"`` or ``"0,1|2,3"``: classes separated by ``|``."""
        try:
            return cls(tuple(tuple(int(s) for s in part.split(",")) for part in text.split("|")))
        except ValueError as exc:
            raise InvalidInputError(f"cannot parse partition {text!r}") from exc

    @classmethod
    def singletons(cls, K: int) -> "AlphabetPartition":
        return cls(tuple((s,) for s in range(K)))

    @classmethod
    def split(cls, K: int, first: int) -> "AlphabetPartition":
        """Two classes: ``[0, first)`` and ``[first, K)``."""
        return cls((tuple(range(first)), tuple(range(first, K))))

    @property
    def K(self) -> int:
        return sum(len(c) for c in self.classes)

    @property
    def m(self) -> int:
        return len(self.classes)

    @property
    def sizes(self) -> tuple:
        return tuple(len(c) for c in self.classes)

    def class_of(self) -> np.ndarray:
        """Lookup table: symbol -> class index."""
        out = np.empty(self.K, dtype=np.int64)
        for i, c in enumerate(self.classes):
            out[list(c)] = i
        return out

    def __str__(self):
        return "|".join(",".join(str(s) for s in c) for c in self.classes)


@dataclass(frozen=True)
class TypeVector:
    """Probability vector over the classes.

    With ``lattice_n`` set the entries are exact fractions with
    denominator dividing ``lattice_n``.
    """

    probs: tuple
    lattice_n: int | None = None

    def __post_init__(self):
        if self.lattice_n is not None:
            n = int(self.lattice_n)
            if n < 1:
                raise InvalidInputError("lattice_n must be >= 1")
            probs = tuple(Fraction(p) for p in self.probs)
            if any((p * n).denominator != 1 for p in probs):
                raise InvalidInputError(f"{self.probs} is not on the 1/{n} lattice")
            if sum(probs) != 1:
                raise InvalidInputError("type vector must sum to 1")
            object.__setattr__(self, "lattice_n", n)
        else:
            probs = tuple(float(p) for p in self.probs)
            if abs(math.fsum(probs) - 1.0) > SUM_TOL:
                raise InvalidInputError(f"type vector sums to {math.fsum(probs)}, not 1")
        if len(probs) < 2:
            raise InvalidInputError("type vector needs at least two entries")
        if any(p < 0 for p in probs):
            raise InvalidInputError("type vector entries must be nonnegative")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_counts(cls, counts) -> "TypeVector":
        counts = [int(c) for c in counts]
        n = sum(counts)
        return cls(tuple(Fraction(c, n) for c in counts), n)

    @property
    def m(self) -> int:
        return len(self.probs)

    def counts(self, n: int | None = None) -> tuple | None:
        """Class counts ``n * p_i`` when they are all integers, else ``None``."""
        n = self.lattice_n if n is None else int(n)
        if n is None:
            return None
        out = []
        for p in self.probs:
            v = Fraction(p) * n
            if v.denominator != 1:
                r = round(float(v))
                if abs(float(v) - r) >= LATTICE_SNAP:
                    return None
                v = Fraction(r)
            out.append(int(v))
        return tuple(out) if sum(out) == n else None

    def as_floats(self) -> np.ndarray:
        return np.array([float(p) for p in self.probs])


def _as_type(p) -> TypeVector:
    return p if isinstance(p, TypeVector) else TypeVector(tuple(p))


@dataclass(frozen=True)
class BigCount:
    exact: int | None
    log_value: float

    def __int__(self):
        if self.exact is None:
            raise CapacityError("count only known in log space")
        return self.exact


def _check_dims(partition: AlphabetPartition, p: TypeVector) -> None:
    if p.m != partition.m:
        raise InvalidInputError(f"type vector has {p.m} entries, partition has {partition.m} classes")


def entropy_f(partition: AlphabetPartition, p) -> float:
    """``sum -p_i ln(p_i / #K_i)`` with ``0 ln 0 = 0``."""
    p = _as_type(p)
    _check_dims(partition, p)
    total = 0.0
    for pi, size in zip(p.probs, partition.sizes):
        pi = float(pi)
        if pi > 0:
            # split the log so tiny p_i cannot underflow the ratio
            total -= pi * (math.log(pi) - math.log(size))
    return total


def entropy_g(partition: AlphabetPartition, p) -> float:
    return entropy_f(partition, p) / math.log(partition.K)


def entropy_grid(partition: AlphabetPartition, resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """``g`` on the two-class lattice ``p_0 = j/resolution``."""
    if partition.m != 2:
        raise InvalidInputError("entropy grid needs a two-class partition")
    resolution = int(resolution)
    if resolution < 1:
        raise InvalidInputError("grid resolution must be >= 1")
    p0 = np.arange(resolution + 1) / resolution
    k0, k1 = partition.sizes
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(p0 > 0, -p0 * np.log(p0 / k0), 0.0)
        b = np.where(p0 < 1, -(1 - p0) * np.log((1 - p0) / k1), 0.0)
    return p0, (a + b) / math.log(partition.K)


def maximizer(partition: AlphabetPartition) -> TypeVector:
    """The type ``#K_i / K`` where ``g`` equals 1."""
    K = partition.K
    return TypeVector(tuple(Fraction(s, K) for s in partition.sizes), K)


@dataclass(frozen=True)
class ConcavityReport:
    trials: int
    concavity_violations: int
    worst_gap: float  # min over trials of f(mix) - mixture of f
    slice_maximizer: float
    slice_violations: int

    @property
    def passed(self) -> bool:
        return self.concavity_violations == 0 and self.slice_violations == 0


def concavity_maximizer_check(partition: AlphabetPartition, trials: int = 1000, seed: int = 0) -> ConcavityReport:
    """Random checks of strict concavity and of the two-coordinate slice maximizer.

    On the slice through ``p`` that only moves mass between classes 0 and
    1, ``f`` is largest when ``p_0 / (p_0 + p_1) = #K_0 / (#K_0 + #K_1)``.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    m = partition.m
    k0, k1 = partition.sizes[:2]
    c = k0 / (k0 + k1)
    grid = np.linspace(0.0, 1.0, 201)
    conc_bad = slice_bad = 0
    worst = math.inf
    for _ in range(trials):
        p = rng.dirichlet(np.ones(m))
        q = rng.dirichlet(np.ones(m))
        if np.allclose(p, q):
            continue
        lam = rng.uniform(0.01, 0.99)
        mix = lam * p + (1 - lam) * q
        mix /= mix.sum()
        gap = entropy_f(partition, mix) - (lam * entropy_f(partition, p) + (1 - lam) * entropy_f(partition, q))
        worst = min(worst, gap)
        if not gap > -1e-12:
            conc_bad += 1
        mass = p[0] + p[1]
        best = None
        for split in (c, *grid):
            v = p.copy()
            v[0], v[1] = split * mass, (1 - split) * mass
            val = entropy_f(partition, v / v.sum())
            if best is None:
                best = val
            elif val > best + 1e-12:
                slice_bad += 1
                break
    return ConcavityReport(int(trials), conc_bad, float(worst), c, slice_bad)


def nearest_lattice(p, n: int) -> TypeVector:
    """A point of the ``1/n`` lattice within sup-distance ``(m-1)/n`` of ``p``.

    The first ``m-1`` coordinates are rounded down to the lattice and the
    last one takes the remainder.
    """
    p = _as_type(p)
    n = int(n)
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    counts = []
    for pi in p.probs[:-1]:
        v = Fraction(pi) * n
        r = round(v)
        # 0.3 is stored just below 3/10; do not let that drop a whole step
        counts.append(int(r) if abs(float(v) - r) < LATTICE_SNAP else math.floor(v))
    counts.append(n - sum(counts))
    return TypeVector.from_counts(counts)


def sup_distance(p, q) -> float:
    p, q = _as_type(p), _as_type(q)
    return max(abs(float(Fraction(a) - Fraction(b))) for a, b in zip(p.probs, q.probs))


def lattice_count(m: int, n: int) -> int:
    return math.comb(n + m - 1, m - 1)


def _compositions(n: int, m: int):
    # stars and bars, lexicographic in the bar positions
    for bars in combinations(range(n + m - 1), m - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(n + m - 1 - prev - 1)
        yield tuple(out)


def lattice_enumerate(m: int, n: int, cap: int = ENUMERATION_CAP) -> list[TypeVector]:
    """Every type vector with ``m`` entries on the ``1/n`` lattice."""
    m, n = int(m), int(n)
    if m < 2 or n < 1:
        raise InvalidInputError("need m >= 2 and n >= 1")
    if (n + 1) ** m > cap:
        raise CapacityError(f"(n+1)**m = {(n + 1) ** m} exceeds the enumeration cap {cap}")
    out = [TypeVector.from_counts(c) for c in _compositions(n, m)]
    assert len(out) == lattice_count(m, n) <= (n + 1) ** m
    return out


def type_count(partition: AlphabetPartition, p, n: int, exact_cap: int = EXACT_COUNT_CAP) -> BigCount:
    """Number of length-``n`` words whose class frequencies are ``p``.

    ``n! / prod (n p_i)! * prod #K_i ** (n p_i)``.  Above ``exact_cap``
    only the log value is computed.
    """
    p = _as_type(p)
    _check_dims(partition, p)
    n = int(n)
    counts = p.counts(n)
    if counts is None:
        raise InvalidInputError(f"n * p is not integral for n={n}")
    log_value = math.lgamma(n + 1)
    for c, size in zip(counts, partition.sizes):
        log_value += c * math.log(size) - math.lgamma(c + 1)
    if n > exact_cap:
        return BigCount(None, log_value)
    exact = math.factorial(n)
    for c in counts:
        exact //= math.factorial(c)
    for c, size in zip(counts, partition.sizes):
        exact *= size**c
    return BigCount(exact, log_value)


def type_count_table_brute(partition: AlphabetPartition, n: int, chunk: int = 1 << 18) -> dict:
    """Enumerate all ``K**n`` words and tally their class-count vectors."""
    K, n = partition.K, int(n)
    if K**n > BRUTE_FORCE_CAP:
        raise CapacityError(f"K**n = {K**n} exceeds the brute-force cap {BRUTE_FORCE_CAP}")
    lookup = partition.class_of()
    m = partition.m
    weights = np.array([(n + 1) ** i for i in range(m)], dtype=np.int64)
    tally = {}
    for start in range(0, K**n, chunk):
        words = np.arange(start, min(start + chunk, K**n), dtype=np.int64)
        key = np.zeros_like(words)
        for _ in range(n):
            key += weights[lookup[words % K]]
            words //= K
        keys, freq = np.unique(key, return_counts=True)
        for k_, f_ in zip(keys.tolist(), freq.tolist()):
            tally[k_] = tally.get(k_, 0) + f_
    out = {}
    for k_, f_ in tally.items():
        counts = tuple((k_ // (n + 1) ** i) % (n + 1) for i in range(m))
        out[counts] = f_
    return out


def type_count_brute(partition: AlphabetPartition, p, n: int) -> BigCount:
    p = _as_type(p)
    _check_dims(partition, p)
    table = type_count_table_brute(partition, n)
    counts = p.counts(int(n))
    exact = table.get(counts, 0) if counts is not None else 0
    return BigCount(exact, math.log(exact) if exact else -math.inf)


def stirling_ln_factorial(n: int) -> tuple[float, float]:
    """``(n ln n - n + ln sqrt(2 pi n), 1/(12 n))``; the error lies in ``(0, 1/(12n)]``."""
    n = int(n)
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    approx = n * math.log(n) - n + 0.5 * math.log(2 * math.pi * n)
    return approx, 1.0 / (12 * n)


def stirling_bound(m: int, n: int) -> float:
    """Allowed gap between ``ln(count)/n`` and ``f`` for ``m`` classes."""
    return (m + 1) * (0.5 * math.log(2 * math.pi * n) + STIRLING_E) / n


@dataclass(frozen=True)
class StirlingReport:
    n: int
    bound: float
    max_deviation: float
    worst_type: tuple
    checked: int
    sampled: bool

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.bound


def stirling_error_check(
    partition: AlphabetPartition, n: int, max_types: int = 200_000, seed: int = 0
) -> StirlingReport:
    """``|ln(type_count)/n - f(p)|`` over the ``1/n`` lattice against its bound.

    Lattices larger than ``max_types`` are sampled uniformly.
    """
    n = int(n)
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    m = partition.m
    total = lattice_count(m, n)
    sampled = total > max_types
    if sampled:
        rng = np.random.default_rng(seed)
        types = []
        for _ in range(max_types):
            cuts = np.sort(rng.choice(n + m - 1, m - 1, replace=False))
            parts = np.diff(np.concatenate(([-1], cuts, [n + m - 1]))) - 1
            types.append(tuple(int(v) for v in parts))
    else:
        types = list(_compositions(n, m))
    worst, worst_type = -1.0, None
    for counts in types:
        tv = TypeVector.from_counts(counts)
        dev = abs(type_count(partition, tv, n, exact_cap=0).log_value / n - entropy_f(partition, tv))
        if dev > worst:
            worst, worst_type = dev, counts
    return StirlingReport(n, stirling_bound(m, n), worst, worst_type, len(types), sampled)


def _class_cumsums(x: TruncatedPoint, partition: AlphabetPartition) -> np.ndarray:
    if x.K != partition.K:
        raise InvalidInputError(f"point alphabet {x.K} differs from partition alphabet {partition.K}")
    cls = partition.class_of()[x.symbols]
    onehot = cls[:, None] == np.arange(partition.m)[None, :]
    return np.cumsum(onehot, axis=0)


def empirical_type(x: TruncatedPoint, partition: AlphabetPartition, n: int) -> TypeVector:
    """Class frequencies of the first ``n`` symbols."""
    n = int(n)
    if n < 1 or n > x.horizon:
        raise InvalidInputError(f"n={n} outside [1, {x.horizon}]")
    if x.K != partition.K:
        raise InvalidInputError(f"point alphabet {x.K} differs from partition alphabet {partition.K}")
    cls = partition.class_of()[x.symbols[:n]]
    return TypeVector.from_counts(np.bincount(cls, minlength=partition.m))


@dataclass(frozen=True)
class TypeBox:
    """Per-class min and max of the running class frequencies."""

    lower: tuple
    upper: tuple
    window: tuple

    def contains(self, p, tol: float = 0.0) -> bool:
        p = _as_type(p).as_floats()
        return bool(np.all(p >= np.array(self.lower) - tol) and np.all(p <= np.array(self.upper) + tol))


def empirical_type_spectrum(x: TruncatedPoint, partition: AlphabetPartition, warmup: int | None = None) -> TypeBox:
    h = x.horizon
    w = default_warmup(h) if warmup is None else int(warmup)
    if not 1 <= w <= h:
        raise InvalidInputError(f"warmup {w} outside [1, {h}]")
    cums = _class_cumsums(x, partition)[w - 1 :]
    freq = cums / np.arange(w, h + 1)[:, None]
    return TypeBox(tuple(freq.min(axis=0).tolist()), tuple(freq.max(axis=0).tolist()), (w, h))


@dataclass(frozen=True)
class Region:
    """Box ``lower_i <= p_i <= upper_i`` intersected with the simplex."""

    lower: tuple
    upper: tuple

    @classmethod
    def whole(cls, m: int) -> "Region":
        return cls((0.0,) * m, (1.0,) * m)

    @classmethod
    def at_least(cls, m: int, index: int, value: float) -> "Region":
        """Half-space ``p_index >= value``."""
        lower = [0.0] * m
        lower[index] = float(value)
        return cls(tuple(lower), (1.0,) * m)

    def feasible(self) -> bool:
        lo, hi = np.array(self.lower, float), np.array(self.upper, float)
        return bool(
            np.all(lo <= hi) and np.all(hi >= 0) and np.all(lo <= 1) and lo.sum() <= 1 + SUM_TOL and hi.sum() >= 1 - SUM_TOL
        )


def variational_maximizer(partition: AlphabetPartition, region: Region) -> tuple[float, np.ndarray]:
    """Maximize ``g`` over the region.

    ``f`` is separable and concave, so the maximizer has the form
    ``p_i = clip(#K_i * theta, lower_i, upper_i)`` for the ``theta``
    making the entries sum to 1; found by bisection.  When the box does
    not bind this is the unconstrained maximizer ``#K_i / K``.
    """
    m = partition.m
    if len(region.lower) != m or len(region.upper) != m:
        raise InvalidInputError(f"region has the wrong number of coordinates for {m} classes")
    if not region.feasible():
        raise InvalidInputError("region does not meet the probability simplex")
    sizes = np.array(partition.sizes, dtype=float)
    lo = np.clip(np.array(region.lower, float), 0.0, 1.0)
    hi = np.clip(np.array(region.upper, float), 0.0, 1.0)

    def mass(theta):
        return np.clip(sizes * theta, lo, hi).sum()

    a, b = 0.0, float(np.max(hi / sizes)) + 1.0
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mass(mid) < 1.0:
            a = mid
        else:
            b = mid
    p = np.clip(sizes * b, lo, hi)
    p = p / p.sum()
    return entropy_g(partition, p), p


def variational_upper_bound(partition: AlphabetPartition, region: Region) -> float:
    return variational_maximizer(partition, region)[0]
