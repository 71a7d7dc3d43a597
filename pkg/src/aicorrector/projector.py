"""Linear 1-D projectors: PCA reduction followed by a Fisher discriminant.

A projector maps a feature vector ``z`` to the score ``w . T (z - mean)``,
where ``T`` holds the leading principal directions of the pooled
correctly-classified features and ``w`` is the Fisher direction separating
correct from incorrect decisions of one class in the reduced space.
Scores are oriented so that correct decisions score higher.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import CorrectorError, NumericalError

DEFAULT_PCA_VARIANCE = 0.9987
DEFAULT_RIDGE = 1e-6
CONDITION_LIMIT = 1e8


def as_feature_matrix(X, name: str = "features") -> np.ndarray:
    """Validate and return ``X`` as a 2-D float array (rows are samples)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise CorrectorError(f"{name} must be a nonempty 2-D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise CorrectorError(f"{name} contain non-finite values")
    return X


@dataclass(frozen=True, eq=False)
class PcaBasis:
    """Principal directions ``components`` (k x d, orthonormal rows) and centering ``mean``."""

    components: np.ndarray
    mean: np.ndarray
    explained_variance_ratio: np.ndarray

    @property
    def k(self) -> int:
        return int(self.components.shape[0])

    @property
    def dim(self) -> int:
        return int(self.components.shape[1])

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return (X - self.mean) @ self.components.T

    def inverse_transform(self, P) -> np.ndarray:
        return np.asarray(P, dtype=float) @ self.components + self.mean


def fit_pca(X, k: Optional[int] = None, variance: Optional[float] = None) -> PcaBasis:
    """Fit a centered PCA basis.

    Exactly one of ``k`` (number of components) or ``variance`` (smallest k
    whose cumulative explained variance reaches the fraction) should be
    given; with neither, ``variance`` defaults to 0.9987.
    """
    X = as_feature_matrix(X)
    n, d = X.shape
    if n < 2:
        raise CorrectorError("PCA needs at least 2 samples")
    if k is not None and variance is not None:
        raise CorrectorError("give either k or variance, not both")
    max_k = min(n - 1, d)
    if k is not None:
        if isinstance(k, bool) or int(k) != k or not (1 <= k <= max_k):
            raise CorrectorError(f"k must be an integer in [1, {max_k}], got {k!r}")
        k = int(k)
    else:
        variance = DEFAULT_PCA_VARIANCE if variance is None else float(variance)
        if not (0.0 < variance < 1.0):
            raise CorrectorError(f"variance fraction must lie in (0, 1), got {variance!r}")

    mean = X.mean(axis=0)
    centered = X - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    eigvals = s**2 / (n - 1)
    total = eigvals.sum()
    if not total > 0.0 or s[0] <= 1e-12 * max(1.0, float(np.abs(X).max())):
        raise CorrectorError("zero variance")
    ratio = eigvals / total

    if k is None:
        cumulative = np.cumsum(ratio)
        k = int(np.searchsorted(cumulative, variance - 1e-12) + 1)
        k = min(k, max_k)

    components = vt[:k].copy()
    # deterministic sign: largest-magnitude loading of each direction is positive
    pivots = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(k), pivots])
    components *= signs[:, None]
    for arr in (components, mean):
        arr.setflags(write=False)
    evr = ratio[:k].copy()
    evr.setflags(write=False)
    return PcaBasis(components=components, mean=mean, explained_variance_ratio=evr)


def _covariance(P: np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.cov(P, rowvar=False, ddof=1))


def fisher_direction(pos: np.ndarray, neg: np.ndarray, ridge: float = DEFAULT_RIDGE) -> np.ndarray:
    """Fisher discriminant weights in reduced coordinates.

    Solves ``(Cov(pos) + Cov(neg)) w = mean(pos) - mean(neg)``. When the
    summed covariance has condition number above 1e8, ``ridge * trace / k``
    is added to its diagonal before solving.
    """
    pos = np.atleast_2d(np.asarray(pos, dtype=float))
    neg = np.atleast_2d(np.asarray(neg, dtype=float))
    if pos.shape[0] < 2 or neg.shape[0] < 2:
        raise CorrectorError(
            f"Fisher discriminant needs >= 2 samples per side, got {pos.shape[0]} and {neg.shape[0]}"
        )
    if ridge < 0:
        raise CorrectorError("ridge must be nonnegative")
    k = pos.shape[1]
    diff = pos.mean(axis=0) - neg.mean(axis=0)
    scale = max(1.0, float(np.abs(pos).max()), float(np.abs(neg).max()))
    if np.linalg.norm(diff) <= 1e-12 * scale:
        raise NumericalError("degenerate Fisher system: class means coincide")

    S = _covariance(pos) + _covariance(neg)
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        trace = float(np.trace(S))
        if not trace > 0.0 or ridge == 0.0:
            raise NumericalError("degenerate Fisher system: singular scatter matrix")
        S = S + (ridge * trace / k) * np.eye(k)
    try:
        w = np.linalg.solve(S, diff)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("degenerate Fisher system") from exc
    if not np.all(np.isfinite(w)) or not np.any(w):
        raise NumericalError("degenerate Fisher system")
    # S is positive definite, so w . diff > 0; guard against round-off anyway
    if float(w @ diff) < 0:
        w = -w
    return w


@dataclass(frozen=True, eq=False)
class FisherProjector:
    """Per-class scoring map ``h(z) = weights . T (z - mean)``.

    Scores are computed as ``sum((z - mean) * T^T weights)`` row by row, so a
    single vector and the same vector inside a batch get bit-identical scores.
    """

    class_label: str
    weights: np.ndarray
    pca: PcaBasis

    @cached_property
    def direction(self) -> np.ndarray:
        """Equivalent weight vector in the original feature space (``T^T w``)."""
        v = self.pca.components.T @ self.weights
        v.setflags(write=False)
        return v

    def project_many(self, Z) -> np.ndarray:
        Z = as_feature_matrix(Z)
        if Z.shape[1] != self.pca.dim:
            raise CorrectorError(f"features have dimension {Z.shape[1]}, expected {self.pca.dim}")
        return np.sum((Z - self.pca.mean) * self.direction, axis=1)

    def project(self, z) -> float:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.pca.dim,):
            raise CorrectorError(f"feature vector has shape {z.shape}, expected ({self.pca.dim},)")
        return float(self.project_many(z[None, :])[0])


def fit_fisher(pca: PcaBasis, positives, negatives, ridge: float = DEFAULT_RIDGE, class_label: str = "") -> FisherProjector:
    """Fit the Fisher projector for one class on PCA-reduced features."""
    positives = as_feature_matrix(positives, "positives")
    negatives = as_feature_matrix(negatives, "negatives")
    for name, M in (("positives", positives), ("negatives", negatives)):
        if M.shape[1] != pca.dim:
            raise CorrectorError(f"{name} have dimension {M.shape[1]}, PCA expects {pca.dim}")
    w = fisher_direction(pca.transform(positives), pca.transform(negatives), ridge)
    w.setflags(write=False)
    return FisherProjector(class_label=str(class_label), weights=w, pca=pca)


def project(h: FisherProjector, z) -> float:
    return h.project(z)
