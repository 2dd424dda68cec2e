"""Finite-horizon tools for orbit pairs of the full shift.

Submodules: ``symbolic`` (points, metric, recodings), ``density``
(index sets and density spectra), ``construct`` (sets with a prescribed
spectrum and the pairs built from them), ``distributional`` (approach
times and pair classification), ``combinatorics`` (type classes and
entropy), ``dimension`` (cover sums and dimension bounds), ``cli``.
"""
from .errors import (
    CapacityError,
    ConstructionError,
    DegenerateInputError,
    InsufficientDataError,
    InvalidInputError,
    ShiftlabError,
)
from .symbolic import TruncatedPoint, metric, pair_decode, pair_encode, recode_tau, shift

__version__ = "0.1.0"
