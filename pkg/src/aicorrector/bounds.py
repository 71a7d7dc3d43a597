"""Distribution-free bounds on accept/reject probabilities.

Both bounds come from the Dvoretzky-Kiefer-Wolfowitz (DKW) inequality
``P(sup |F_n - F| > eps) <= 2 exp(-2 n eps^2)`` optimised over ``eps``:

    rho(a, d) = sup_{eps in (0,1]} max(a - eps, 0) * (1 - 2 exp(-2 d eps^2))
    psi(a, d) = inf_{eps in (0,1]} 2 exp(-2 d eps^2) + min(1, a + eps)

For an empirical CDF ``F_n`` built from ``n`` i.i.d. scores and a fixed
threshold ``theta``, a fresh score ``z`` satisfies
``rho(F_n(theta), n) <= P(z <= theta) <= psi(F_n(theta), n)``.

Neither objective is concave in ``eps``, so the optimum is located on a
coarse grid first and then polished by golden-section search inside the
bracketing grid cell.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np

from .errors import CorrectorError, NumericalError

EPS_MIN = 1e-12
GRID_SIZE = 2049
GOLDEN_TOL = 1e-10

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

CURVE_COLUMNS = ("m", "delta", "rho")


@dataclass(frozen=True)
class BoundPair:
    """Lower/upper bounds on a probability.

    ``lower`` and ``upper`` are clamped to ``[0, 1]``; ``raw_lower`` and
    ``raw_upper`` keep the unclamped values so complementary events can be
    checked to add up exactly.
    """

    lower: float
    upper: float
    raw_lower: float
    raw_upper: float

    @property
    def vacuous(self) -> bool:
        return self.lower <= 0.0


@dataclass(frozen=True)
class ClassBounds:
    """Per-class guarantees attached to a fitted corrector.

    Attributes
    ----------
    upsilon : float
        Lower bound on P(accept | prediction correct), clamped at 0.
    gamma : float
        Lower bound on P(reject | prediction incorrect).
    delta : float
        Quantile level used for the rejection threshold.
    m_plus, m_minus : int
        Number of correct / incorrect samples behind the threshold.
    upsilon_raw : float
        ``1 - psi`` before clamping; negative when the bound is vacuous.
    """

    upsilon: float
    gamma: float
    delta: float
    m_plus: int
    m_minus: int
    upsilon_raw: float

    @property
    def vacuous(self) -> bool:
        return self.upsilon_raw <= 0.0


def _check_count(n, name: str = "n") -> int:
    if isinstance(n, bool):
        raise CorrectorError(f"{name} must be a positive integer, got {n!r}")
    try:
        as_int = int(n)
    except (TypeError, ValueError):
        raise CorrectorError(f"{name} must be a positive integer, got {n!r}") from None
    if as_int != n or as_int < 1:
        raise CorrectorError(f"{name} must be a positive integer, got {n!r}")
    return as_int


def _check_probability(a, name: str = "a") -> float:
    a = float(a)
    if not (0.0 <= a <= 1.0):
        raise CorrectorError(f"{name} must lie in [0, 1], got {a!r}")
    return a


def dkw_failure(epsilon: float, n: int) -> float:
    """DKW bound on ``P(sup |F_n - F| > epsilon)``, capped at 1."""
    epsilon = float(epsilon)
    if not (0.0 < epsilon <= 1.0):
        raise CorrectorError(f"epsilon must lie in (0, 1], got {epsilon!r}")
    n = _check_count(n)
    return min(1.0, 2.0 * math.exp(-2.0 * n * epsilon * epsilon))


def _golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Maximise a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def maximize_on_unit(objective: Callable[[np.ndarray], np.ndarray]) -> tuple[float, float]:
    """Global maximum of a vectorised objective over ``[EPS_MIN, 1]``.

    A ``GRID_SIZE`` grid picks the best cell, golden-section search refines
    inside the neighbouring cells, and the better of grid point and refined
    point is returned as ``(argmax, max)``.
    """
    grid = np.linspace(EPS_MIN, 1.0, GRID_SIZE)
    values = objective(grid)
    if not np.all(np.isfinite(values)):
        raise NumericalError("objective is not finite on the search grid")
    i = int(np.argmax(values))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, GRID_SIZE - 1)]
    x, fx = _golden_section(lambda e: float(objective(np.asarray(e))), lo, hi, GOLDEN_TOL)
    if fx >= values[i]:
        return x, fx
    return float(grid[i]), float(values[i])


def _rho_objective(a: float, d: int):
    def f(eps):
        return np.maximum(a - eps, 0.0) * (1.0 - 2.0 * np.exp(-2.0 * d * eps * eps))

    return f


def _psi_objective(a: float, d: int):
    def f(eps):
        return 2.0 * np.exp(-2.0 * d * eps * eps) + np.minimum(1.0, a + eps)

    return f


@lru_cache(maxsize=65536)
def _rho(a: float, d: int) -> float:
    if a == 0.0:
        return 0.0
    _, value = maximize_on_unit(_rho_objective(a, d))
    return min(max(value, 0.0), a)


@lru_cache(maxsize=65536)
def _psi(a: float, d: int) -> float:
    f = _psi_objective(a, d)
    _, neg = maximize_on_unit(lambda e: -f(e))
    return max(-neg, a)


def rho(a: float, d: int) -> float:
    """Lower bound on ``P(z <= theta)`` given ``F_d(theta) = a`` over ``d`` samples.

    >>> rho(0.0, 50)
    0.0
    """
    return _rho(_check_probability(a), _check_count(d, "d"))


def psi(a: float, d: int) -> float:
    """Upper bound on ``P(z <= theta)``; may exceed 1 (then ``1 - psi`` is vacuous)."""
    return _psi(_check_probability(a), _check_count(d, "d"))


def lemma_event_bounds(f_at_theta: float, n: int) -> tuple[BoundPair, BoundPair]:
    """Bounds for the events ``z <= theta`` (E1) and ``z > theta`` (E2).

    ``f_at_theta`` is the empirical CDF of the ``n`` stored scores evaluated
    at ``theta``.
    """
    r = rho(f_at_theta, n)
    p = psi(f_at_theta, n)
    e1 = BoundPair(lower=r, upper=min(p, 1.0), raw_lower=r, raw_upper=p)
    e2 = BoundPair(lower=max(1.0 - p, 0.0), upper=min(1.0 - r, 1.0), raw_lower=1.0 - p, raw_upper=1.0 - r)
    return e1, e2


def class_bounds(delta: float, m_minus: int, f_plus_at_theta: float, m_plus: int) -> ClassBounds:
    """Guarantees for one class: ``gamma = rho(delta, M-)``, ``upsilon = 1 - psi(F+(theta), M+)``."""
    gamma = rho(delta, m_minus)
    upsilon_raw = 1.0 - psi(f_plus_at_theta, m_plus)
    return ClassBounds(
        upsilon=max(upsilon_raw, 0.0),
        gamma=gamma,
        delta=float(delta),
        m_plus=int(m_plus),
        m_minus=int(m_minus),
        upsilon_raw=upsilon_raw,
    )


def collapse_bounds(priors: Sequence[float], per_class: Sequence[ClassBounds]) -> tuple[float, float]:
    """Prior-weighted overall bounds.

    Returns ``(sum_j P_j * upsilon_j, sum_j (1 - P_j) * gamma_j)`` with the
    second sum capped at 1 (it is not a convex combination and can exceed 1).
    """
    p = np.asarray(priors, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise CorrectorError("priors must be a nonempty vector")
    if p.size != len(per_class):
        raise CorrectorError(f"got {p.size} priors for {len(per_class)} classes")
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1) or abs(p.sum() - 1.0) > 1e-9:
        raise CorrectorError("priors must lie in [0, 1] and sum to 1")
    ups = np.array([b.upsilon for b in per_class])
    gam = np.array([b.gamma for b in per_class])
    accept = float(np.dot(p, ups))
    reject = float(np.dot(1.0 - p, gam))
    return min(accept, 1.0), min(reject, 1.0)


def bound_curve(delta: float, m_values: Iterable[int]) -> list[tuple[int, float]]:
    """``(m, rho(delta, m))`` for each ``m``; nondecreasing in ``m``."""
    delta = float(delta)
    if not (0.0 < delta < 1.0):
        raise CorrectorError(f"delta must lie in (0, 1), got {delta!r}")
    ms = [_check_count(m, "m") for m in m_values]
    if not ms:
        raise CorrectorError("m_values must be nonempty")
    if any(b <= a for a, b in zip(ms, ms[1:])):
        raise CorrectorError("m_values must be strictly increasing")
    return [(m, rho(delta, m)) for m in ms]


def write_curve_csv(fh: TextIO, curves: dict[float, list[tuple[int, float]]]) -> None:
    """Write curve data as CSV with columns ``m,delta,rho``."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CURVE_COLUMNS)
    for delta, curve in curves.items():
        for m, value in curve:
            writer.writerow([m, repr(float(delta)), repr(value)])


def delta_for_gamma(gamma: float, m_minus: int, tol: float = 1e-9) -> float:
    """Smallest ``delta`` (to within ``tol``) with ``rho(delta, m_minus) >= gamma``.

    Raises CorrectorError when no ``delta < 1`` achieves the target.
    """
    gamma = float(gamma)
    if not (0.0 < gamma < 1.0):
        raise CorrectorError(f"gamma target must lie in (0, 1), got {gamma!r}")
    m_minus = _check_count(m_minus, "m_minus")
    lo, hi = 0.0, 1.0 - 1e-12
    if rho(hi, m_minus) < gamma:
        raise CorrectorError(
            f"gamma target {gamma} unattainable with {m_minus} incorrect samples "
            f"(best achievable {rho(hi, m_minus):.6f})"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if rho(mid, m_minus) >= gamma:
            hi = mid
        else:
            lo = mid
    return hi
