"""Exact empirical CDFs over 1-D score multisets.

The CDF is right-continuous, ``F_n(s) = #{x <= s} / n``, and the quantile
query is the generalised inverse ``F_n^dagger(y) = inf{x : F_n(x) >= y}``,
which for an empirical CDF is always one of the stored order statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import CorrectorError

ArrayLike = Union[float, Iterable[float], np.ndarray]

# y*n within this many ulps of an integer is treated as that integer
_RANK_GUARD = 4 * np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class EmpiricalCdf:
    """Sorted multiset of scores; duplicates are kept.

    Instances are immutable (the backing array is marked read-only), so a
    fitted CDF may be queried from several threads at once.
    """

    values: np.ndarray

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def evaluate(self, s):
        """Fraction of stored values ``<= s``. Accepts a scalar or an array."""
        s_arr = np.asarray(s, dtype=float)
        if not np.all(np.isfinite(s_arr)):
            raise CorrectorError("non-finite query point")
        counts = np.searchsorted(self.values, s_arr, side="right")
        if s_arr.ndim == 0:
            return int(counts) / self.n
        return counts / self.n

    __call__ = evaluate

    def rank(self, y: float) -> int:
        """1-based rank ``ceil(y * n)`` of the order statistic returned for level ``y``."""
        y = float(y)
        if not (0.0 < y <= 1.0):
            raise CorrectorError(f"quantile level outside (0,1]: {y!r}")
        t = y * self.n
        nearest = round(t)
        if abs(t - nearest) <= _RANK_GUARD * max(1.0, abs(t)):
            k = int(nearest)
        else:
            k = math.ceil(t)
        return min(max(k, 1), self.n)

    def pseudo_inverse(self, y: float) -> float:
        """Smallest stored score ``x`` with ``evaluate(x) >= y``."""
        return float(self.values[self.rank(y) - 1])

    quantile = pseudo_inverse

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"EmpiricalCdf(n={self.n}, min={self.values[0]!r}, max={self.values[-1]!r})"


def build_ecdf(samples: ArrayLike) -> EmpiricalCdf:
    """Build an :class:`EmpiricalCdf` from a finite, nonempty multiset of scores."""
    values = np.array(samples, dtype=float).ravel()
    if values.size == 0:
        raise CorrectorError("empty sample")
    if not np.all(np.isfinite(values)):
        raise CorrectorError("non-finite score")
    values.sort(kind="stable")
    values.setflags(write=False)
    return EmpiricalCdf(values)


def evaluate(cdf: EmpiricalCdf, s):
    return cdf.evaluate(s)


def pseudo_inverse(cdf: EmpiricalCdf, y: float) -> float:
    return cdf.pseudo_inverse(y)
