"""Brute-force reference implementations used only by the tests."""

import numpy as np

DENSE_GRID = np.linspace(1e-12, 1.0, 1_000_000)


def dense_rho(a, d, grid=DENSE_GRID):
    vals = np.maximum(a - grid, 0.0) * (1.0 - 2.0 * np.exp(-2.0 * d * grid * grid))
    return max(float(vals.max()), 0.0)


def dense_psi(a, d, grid=DENSE_GRID):
    vals = 2.0 * np.exp(-2.0 * d * grid * grid) + np.minimum(1.0, a + grid)
    return float(vals.min())


def count_cdf(values, s):
    return sum(1 for v in values if v <= s) / len(values)


def sort_quantile(values, y):
    """Smallest element x of the multiset with count_cdf(x) >= y, by scanning."""
    for x in sorted(values):
        if count_cdf(values, x) >= y:
            return x
    raise AssertionError("no element reaches level y")
