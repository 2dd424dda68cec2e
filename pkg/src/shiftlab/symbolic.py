"""Finite prefixes of one-sided sequences over a K-letter alphabet.

A :class:`TruncatedPoint` stands in for an infinite sequence: every
operation here only looks at the stored prefix and documents which
indices it can vouch for.  The two recodings provided are the block
recoding (n symbols over K become one symbol over K**n, little-endian)
and the pair interleaving (two sequences over K become one over K**2).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, InvalidInputError

# symbols are stored as int64 but every alphabet must fit in 32 bits
MAX_ALPHABET = 2**32


def _as_symbols(symbols, K: int) -> np.ndarray:
    arr = np.asarray(symbols, dtype=np.int64)
    if arr.ndim != 1:
        raise InvalidInputError("symbols must be one-dimensional")
    if arr.size and (arr.min() < 0 or arr.max() >= K):
        raise InvalidInputError(f"symbols must lie in [0, {K})")
    return arr


def _check_alphabet(K: int) -> int:
    K = int(K)
    if K < 2:
        raise InvalidInputError(f"alphabet size must be >= 2, got {K}")
    if K > MAX_ALPHABET:
        raise CapacityError(f"alphabet size {K} exceeds the 32-bit symbol bound")
    return K


@dataclass(frozen=True, eq=False)
class Word:
    """A finite word over ``[0, K)``; the empty word is allowed."""

    symbols: tuple
    K: int

    def __post_init__(self):
        K = _check_alphabet(self.K)
        syms = tuple(int(s) for s in self.symbols)
        if any(s < 0 or s >= K for s in syms):
            raise InvalidInputError(f"word symbols must lie in [0, {K})")
        object.__setattr__(self, "symbols", syms)
        object.__setattr__(self, "K", K)

    def __len__(self):
        return len(self.symbols)

    def __eq__(self, other):
        return isinstance(other, Word) and (self.K, self.symbols) == (other.K, other.symbols)

    def __hash__(self):
        return hash((self.K, self.symbols))


@dataclass(frozen=True, eq=False)
class Cylinder:
    """All sequences starting with ``prefix``."""

    prefix: Word

    @property
    def diameter(self) -> Fraction:
        return Fraction(1, self.prefix.K ** len(self.prefix))

    def contains(self, x: "TruncatedPoint") -> bool:
        n = len(self.prefix)
        if x.K != self.prefix.K or x.horizon < n:
            return False
        return tuple(int(s) for s in x.symbols[:n]) == self.prefix.symbols


@dataclass(frozen=True, eq=False)
class TruncatedPoint:
    """Prefix of a point of the full shift on ``K`` symbols.

    The symbol array is copied and frozen on construction.  A length-zero
    point only arises from shifting by the full horizon and is reported
    through :attr:`degenerate`.
    """

    symbols: np.ndarray
    K: int

    def __post_init__(self):
        K = _check_alphabet(self.K)
        arr = _as_symbols(self.symbols, K).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "symbols", arr)
        object.__setattr__(self, "K", K)

    @classmethod
    def _trusted(cls, symbols: np.ndarray, K: int) -> "TruncatedPoint":
        # results of internal operations are already in range
        obj = object.__new__(cls)
        arr = np.array(symbols, dtype=np.int64)
        arr.setflags(write=False)
        object.__setattr__(obj, "symbols", arr)
        object.__setattr__(obj, "K", int(K))
        return obj

    @classmethod
    def from_string(cls, text: str, K: int) -> "TruncatedPoint":
        """Parse a digit string such as ``"0110"`` (alphabets up to 10)."""
        return cls(np.array([int(ch) for ch in text], dtype=np.int64), K)

    @classmethod
    def constant(cls, symbol: int, K: int, horizon: int) -> "TruncatedPoint":
        return cls(np.full(int(horizon), int(symbol), dtype=np.int64), K)

    @property
    def horizon(self) -> int:
        return int(self.symbols.shape[0])

    @property
    def degenerate(self) -> bool:
        return self.horizon == 0

    def __len__(self):
        return self.horizon

    def __eq__(self, other):
        if not isinstance(other, TruncatedPoint):
            return NotImplemented
        return self.K == other.K and np.array_equal(self.symbols, other.symbols)

    def __hash__(self):
        return hash((self.K, self.symbols.tobytes()))

    def __repr__(self):
        head = "".join(str(int(s)) if s < 10 else f"<{int(s)}>" for s in self.symbols[:24])
        more = "..." if self.horizon > 24 else ""
        return f"TruncatedPoint(K={self.K}, horizon={self.horizon}, {head}{more})"

    def to_list(self) -> list[int]:
        return [int(s) for s in self.symbols]


def _check_pair(x: TruncatedPoint, y: TruncatedPoint) -> None:
    if x.K != y.K:
        raise InvalidInputError(f"alphabet mismatch: {x.K} vs {y.K}")
    if x.horizon != y.horizon:
        raise InvalidInputError(f"horizon mismatch: {x.horizon} vs {y.horizon}")


def first_disagreement(x: TruncatedPoint, y: TruncatedPoint) -> int | None:
    """Smallest index where ``x`` and ``y`` differ.

    Returns ``None`` when the prefixes agree, meaning "at or beyond the
    horizon".
    """
    _check_pair(x, y)
    diff = np.flatnonzero(x.symbols != y.symbols)
    return int(diff[0]) if diff.size else None


def metric(x: TruncatedPoint, y: TruncatedPoint, exact: bool = False):
    """Shift metric ``K**-delta`` where delta is the first disagreement.

    Agreeing prefixes give 0.  With ``exact=True`` a :class:`Fraction` is
    returned so identities can be compared without rounding.
    """
    delta = first_disagreement(x, y)
    if delta is None:
        return Fraction(0) if exact else 0.0
    if exact:
        return Fraction(1, x.K**delta)
    return float(x.K) ** (-delta)


def first_disagreement_many(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorised :func:`first_disagreement` over the last axis.

    Rows that agree everywhere get the horizon (the row length) as their
    sentinel value.
    """
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    if xs.shape != ys.shape:
        raise InvalidInputError(f"shape mismatch: {xs.shape} vs {ys.shape}")
    diff = xs != ys
    h = xs.shape[-1]
    first = np.argmax(diff, axis=-1)
    hit = np.take_along_axis(diff, first[..., None], axis=-1)[..., 0]
    return np.where(hit, first, h)


def shift(x: TruncatedPoint, j: int) -> TruncatedPoint:
    """Drop the first ``j`` symbols."""
    j = int(j)
    if j < 0 or j > x.horizon:
        raise InvalidInputError(f"shift amount {j} outside [0, {x.horizon}]")
    return TruncatedPoint._trusted(x.symbols[j:], x.K)


def recode_tau(x: TruncatedPoint, n: int) -> TruncatedPoint:
    """Group symbols into blocks of ``n`` and read each block base ``K``.

    Block ``i`` becomes ``sum_j K**j * x[i*n + j]``; a trailing partial
    block is dropped, so the output has ``horizon // n`` symbols.
    """
    n = int(n)
    if n < 1:
        raise InvalidInputError("block length must be >= 1")
    if x.K**n > MAX_ALPHABET:
        raise CapacityError(f"recoded alphabet {x.K}**{n} exceeds the 32-bit symbol bound")
    if n == 1:
        return x
    return TruncatedPoint._trusted(recode_blocks(x.symbols, x.K, n), x.K**n)


def recode_blocks(symbols: np.ndarray, K: int, n: int) -> np.ndarray:
    """Array form of :func:`recode_tau`; works on the last axis of any array."""
    symbols = np.asarray(symbols, dtype=np.int64)
    length = symbols.shape[-1] // n
    blocks = symbols[..., : length * n].reshape(*symbols.shape[:-1], length, n)
    weights = np.asarray(K, dtype=np.int64) ** np.arange(n, dtype=np.int64)
    return blocks @ weights


def unrecode_tau(z: TruncatedPoint, K: int, n: int) -> TruncatedPoint:
    """Inverse of :func:`recode_tau` on its image."""
    if z.K != K**n:
        raise InvalidInputError(f"expected alphabet {K}**{n}, got {z.K}")
    digits = np.empty((z.horizon, n), dtype=np.int64)
    rest = z.symbols.copy()
    for j in range(n):
        digits[:, j] = rest % K
        rest //= K
    return TruncatedPoint(digits.ravel(), K)


def pair_encode(x0: TruncatedPoint, x1: TruncatedPoint) -> TruncatedPoint:
    """Merge two sequences into one over ``K**2`` via ``x0 + K * x1``."""
    _check_pair(x0, x1)
    if x0.K**2 > MAX_ALPHABET:
        raise CapacityError(f"paired alphabet {x0.K}**2 exceeds the 32-bit symbol bound")
    return TruncatedPoint._trusted(x0.symbols + x0.K * x1.symbols, x0.K**2)


def pair_decode(z: TruncatedPoint) -> tuple[TruncatedPoint, TruncatedPoint]:
    """Split a sequence over ``K**2`` back into its two components."""
    K = isqrt(z.K)
    if K * K != z.K:
        raise InvalidInputError(f"alphabet {z.K} is not a perfect square")
    return TruncatedPoint._trusted(z.symbols % K, K), TruncatedPoint._trusted(z.symbols // K, K)


def as_point(symbols: Sequence[int] | Iterable[int] | np.ndarray, K: int) -> TruncatedPoint:
    """Convenience constructor accepting lists, tuples, arrays or digit strings."""
    if isinstance(symbols, str):
        return TruncatedPoint.from_string(symbols, K)
    if isinstance(symbols, TruncatedPoint):
        return symbols
    return TruncatedPoint(np.asarray(list(symbols) if not isinstance(symbols, np.ndarray) else symbols), K)
