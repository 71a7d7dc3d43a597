"""Per-class error correctors with a priori guarantees.

For every label ``j`` the correction set is split into samples the base
classifier got right (``S+``) and wrong (``S-``) among those it labelled
``j``.  A projector ``h_j`` turns features into scores, the rejection
threshold is the ``delta_j`` empirical quantile of the wrong-decision scores,
and a new decision labelled ``j`` is rejected iff ``h_j(z) <= threshold``.
"""

from __future__ import annotations

import datetime as _dt
import json
import math
import os
from dataclasses import dataclass, field
from typing import IO, Any, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from . import __version__
from .bounds import ClassBounds, class_bounds, delta_for_gamma
from .ecdf import build_ecdf
from .errors import CorrectorError, ModelFormatError
from .projector import DEFAULT_PCA_VARIANCE, DEFAULT_RIDGE, FisherProjector, PcaBasis, fit_fisher, fit_pca

REJECT = "REJECT"
SCHEMA_NAME = "aicorrector.model"
SCHEMA_VERSION = 1
SPLIT_MODES = ("none", "disjoint")


@dataclass(frozen=True, eq=False)
class LabeledSample:
    """One record of the correction set.

    ``features`` is the feature vector handed to the projector, ``predicted``
    the base classifier's label, ``truth`` the true label when known.
    """

    id: str
    features: np.ndarray
    predicted: str
    truth: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "features", np.asarray(self.features, dtype=float))

    @property
    def correct(self) -> bool:
        if self.truth is None:
            raise CorrectorError(f"sample {self.id!r} has no true label")
        return self.truth == self.predicted


@dataclass(frozen=True)
class Decision:
    predicted: str
    accepted: bool
    score: float
    threshold: float
    class_bounds: ClassBounds

    @property
    def outcome(self) -> str:
        return self.predicted if self.accepted else REJECT

    @property
    def rejected(self) -> bool:
        return not self.accepted


@dataclass(frozen=True, eq=False)
class ClassCorrector:
    class_label: str
    projector: FisherProjector
    threshold: float
    delta: float
    m_plus: int
    m_minus: int
    f_plus_at_theta: float
    bounds: ClassBounds

    def reject_mask(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Scores of the rows of ``X`` and a boolean mask of rejected rows."""
        scores = self.projector.project_many(X)
        return scores, scores <= self.threshold


@dataclass(frozen=True, eq=False)
class CorrectorModel:
    label_set: tuple[str, ...]
    pca: PcaBasis
    per_class: dict[str, ClassCorrector]
    provenance: dict[str, Any] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.pca.dim

    def __getitem__(self, label: str) -> ClassCorrector:
        try:
            return self.per_class[label]
        except KeyError:
            raise CorrectorError(f"unknown label {label!r}; model labels are {list(self.label_set)}") from None

    def decide(self, predicted: str, features) -> Decision:
        """Accept or reject one decision of the base classifier.

        The boundary ``score == threshold`` is rejected.
        """
        cc = self[str(predicted)]
        score = cc.projector.project(features)
        return Decision(
            predicted=cc.class_label,
            accepted=not score <= cc.threshold,
            score=score,
            threshold=cc.threshold,
            class_bounds=cc.bounds,
        )

    def decide_many(self, predicted: Sequence[str], X) -> list[Decision]:
        """Vectorised :meth:`decide`; output order follows input order."""
        X = np.asarray(X, dtype=float)
        predicted = [str(p) for p in predicted]
        if X.ndim != 2 or X.shape[0] != len(predicted):
            raise CorrectorError("predicted labels and feature rows differ in number")
        scores = np.empty(len(predicted))
        for label in set(predicted):
            idx = [i for i, p in enumerate(predicted) if p == label]
            scores[idx] = self[label].projector.project_many(X[idx])
        out = []
        for p, s in zip(predicted, scores):
            cc = self.per_class[p]
            out.append(Decision(p, not s <= cc.threshold, float(s), cc.threshold, cc.bounds))
        return out


def decide(model: CorrectorModel, predicted: str, features) -> Decision:
    return model.decide(predicted, features)


# ---------------------------------------------------------------- fitting


def partition(
    samples: Iterable[LabeledSample], label_set: Sequence[str]
) -> dict[str, tuple[list[LabeledSample], list[LabeledSample]]]:
    """Split samples by predicted label into (correct, incorrect) lists."""
    parts: dict[str, tuple[list, list]] = {str(label): ([], []) for label in label_set}
    for s in samples:
        if s.truth is None:
            raise CorrectorError(f"unlabeled sample in correction set: {s.id!r}")
        if s.predicted not in parts:
            raise CorrectorError(f"sample {s.id!r}: predicted label {s.predicted!r} not in label set")
        parts[s.predicted][0 if s.truth == s.predicted else 1].append(s)
    return parts


def _per_class_values(values, label_set: Sequence[str], name: str) -> dict[str, float]:
    if isinstance(values, Mapping):
        missing = [label for label in label_set if label not in values]
        extra = [k for k in values if k not in label_set]
        if missing or extra:
            raise CorrectorError(f"{name}: missing labels {missing}, unknown labels {extra}")
        return {label: float(values[label]) for label in label_set}
    if np.ndim(values) == 0:
        return {label: float(values) for label in label_set}
    values = list(values)
    if len(values) == 1:
        return {label: float(values[0]) for label in label_set}
    if len(values) != len(label_set):
        raise CorrectorError(f"{name}: got {len(values)} values for {len(label_set)} classes")
    return {label: float(v) for label, v in zip(label_set, values)}


def _split_cell(cell: list, fraction: float, rng: np.random.Generator) -> tuple[list, list]:
    order = rng.permutation(len(cell))
    n_proj = int(math.floor(fraction * len(cell)))
    return [cell[i] for i in order[:n_proj]], [cell[i] for i in order[n_proj:]]


def _stack(samples: list[LabeledSample], d: int) -> np.ndarray:
    if not samples:
        return np.empty((0, d))
    return np.vstack([s.features for s in samples])


def fit(
    samples: Sequence[LabeledSample],
    deltas=None,
    *,
    gamma_targets=None,
    label_set: Optional[Sequence[str]] = None,
    pca_variance: Optional[float] = None,
    pca_k: Optional[int] = None,
    ridge: float = DEFAULT_RIDGE,
    split: str = "none",
    split_fraction: float = 0.5,
    seed: int = 0,
) -> CorrectorModel:
    """Fit a :class:`CorrectorModel` on a labelled correction set.

    Parameters
    ----------
    samples : sequence of LabeledSample
        Correction set; every sample must carry ``truth``.
    deltas : float, sequence or mapping, optional
        Quantile level per class in (0, 1). Mutually exclusive with
        ``gamma_targets``.
    gamma_targets : float, sequence or mapping, optional
        Desired lower bounds on P(reject | incorrect); each class gets the
        smallest delta that achieves its target with its own error count.
    label_set : sequence of str, optional
        Declared labels. Defaults to the sorted predicted labels. A declared
        label with no correct or no incorrect samples is an error.
    pca_variance, pca_k : optional
        PCA size, as explained-variance fraction or fixed dimension.
    ridge : float
        Diagonal loading factor used when the Fisher system is ill-conditioned.
    split : {"none", "disjoint"}
        ``"disjoint"`` fits projectors on a ``split_fraction`` share of every
        (class, correct/incorrect) cell and thresholds on the remainder, so
        projectors are independent of the data the guarantees are computed on.
    seed : int
        Seed for the disjoint split.
    """
    samples = list(samples)
    if not samples:
        raise CorrectorError("empty correction set")
    if (deltas is None) == (gamma_targets is None):
        raise CorrectorError("give exactly one of deltas or gamma_targets")
    if split not in SPLIT_MODES:
        raise CorrectorError(f"split must be one of {SPLIT_MODES}, got {split!r}")
    if split == "disjoint" and not (0.0 < split_fraction < 1.0):
        raise CorrectorError("split_fraction must lie in (0, 1)")

    d = int(np.asarray(samples[0].features).shape[0])
    for s in samples:
        f = np.asarray(s.features)
        if f.shape != (d,):
            raise CorrectorError(f"sample {s.id!r} has {f.size} features, expected {d}")
    if label_set is None:
        label_set = sorted({s.predicted for s in samples})
    label_set = tuple(str(label) for label in label_set)
    if not label_set:
        raise CorrectorError("label set is empty")
    if len(set(label_set)) != len(label_set):
        raise CorrectorError("label set contains duplicates")
    if REJECT in label_set:
        raise CorrectorError(f"{REJECT!r} is reserved and cannot be a class label")

    parts = partition(samples, label_set)
    for label, (pos, neg) in parts.items():
        if not pos:
            raise CorrectorError(f"class {label!r}: no correctly classified samples in correction set")
        if not neg:
            raise CorrectorError(f"class {label!r}: no misclassified samples in correction set")

    rng = np.random.default_rng(seed)
    proj_parts, thresh_parts = {}, {}
    for label in label_set:
        pos, neg = parts[label]
        if split == "disjoint":
            pos_p, pos_t = _split_cell(pos, split_fraction, rng)
            neg_p, neg_t = _split_cell(neg, split_fraction, rng)
        else:
            pos_p = pos_t = pos
            neg_p = neg_t = neg
        for side, p_cell, t_cell in (("correct", pos_p, pos_t), ("misclassified", neg_p, neg_t)):
            if len(p_cell) < 2 or len(t_cell) < 2:
                raise CorrectorError(
                    f"class {label!r}: need >= 2 {side} samples for projector and threshold fitting "
                    f"(have {len(p_cell)} and {len(t_cell)} after split)"
                )
        proj_parts[label] = (_stack(pos_p, d), _stack(neg_p, d))
        thresh_parts[label] = (_stack(pos_t, d), _stack(neg_t, d))

    if gamma_targets is not None:
        targets = _per_class_values(gamma_targets, label_set, "gamma_targets")
        delta_map = {label: delta_for_gamma(targets[label], thresh_parts[label][1].shape[0]) for label in label_set}
    else:
        targets = None
        delta_map = _per_class_values(deltas, label_set, "deltas")
    for label, delta in delta_map.items():
        if not (0.0 < delta < 1.0):
            raise CorrectorError(f"class {label!r}: delta must lie in (0, 1), got {delta!r}")

    pooled_positives = np.vstack([proj_parts[label][0] for label in label_set])
    pca = fit_pca(pooled_positives, k=pca_k, variance=None if pca_k is not None else pca_variance)

    per_class = {}
    for label in label_set:
        projector = fit_fisher(pca, *proj_parts[label], ridge=ridge, class_label=label)
        pos_scores = projector.project_many(thresh_parts[label][0])
        neg_scores = projector.project_many(thresh_parts[label][1])
        neg_cdf = build_ecdf(neg_scores)
        pos_cdf = build_ecdf(pos_scores)
        delta = delta_map[label]
        theta = neg_cdf.pseudo_inverse(delta)
        f_plus = pos_cdf.evaluate(theta)
        per_class[label] = ClassCorrector(
            class_label=label,
            projector=projector,
            threshold=theta,
            delta=delta,
            m_plus=pos_cdf.n,
            m_minus=neg_cdf.n,
            f_plus_at_theta=f_plus,
            bounds=class_bounds(delta, neg_cdf.n, f_plus, pos_cdf.n),
        )

    provenance = {
        "fitted_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "package_version": __version__,
        "sample_count": len(samples),
        "deltas": {label: delta_map[label] for label in label_set},
        "gamma_targets": targets,
        "pca_variance": None if pca_k is not None else (DEFAULT_PCA_VARIANCE if pca_variance is None else pca_variance),
        "pca_k": pca_k,
        "pca_components": pca.k,
        "ridge": ridge,
        "split": split,
        "split_fraction": split_fraction if split == "disjoint" else None,
        "seed": seed,
        "counts": {
            label: {
                "correct": len(parts[label][0]),
                "misclassified": len(parts[label][1]),
                "m_plus": per_class[label].m_plus,
                "m_minus": per_class[label].m_minus,
            }
            for label in label_set
        },
    }
    return CorrectorModel(label_set=label_set, pca=pca, per_class=per_class, provenance=provenance)


# ---------------------------------------------------------------- persistence


def _floats(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def model_to_dict(model: CorrectorModel) -> dict:
    classes = []
    for label in model.label_set:
        cc = model.per_class[label]
        b = cc.bounds
        classes.append(
            {
                "label": label,
                "weights": _floats(cc.projector.weights),
                "threshold": cc.threshold,
                "delta": cc.delta,
                "m_plus": cc.m_plus,
                "m_minus": cc.m_minus,
                "f_plus_at_theta": cc.f_plus_at_theta,
                "bounds": {
                    "gamma": b.gamma,
                    "upsilon": b.upsilon,
                    "upsilon_raw": b.upsilon_raw,
                    "vacuous": b.vacuous,
                },
            }
        )
    return {
        "schema": SCHEMA_NAME,
        "schema_version": SCHEMA_VERSION,
        "label_set": list(model.label_set),
        "dim": model.pca.dim,
        "k": model.pca.k,
        "pca": {
            "mean": _floats(model.pca.mean),
            "components": _floats(model.pca.components),
            "explained_variance_ratio": _floats(model.pca.explained_variance_ratio),
        },
        "classes": classes,
        "provenance": model.provenance,
    }


def _array(value, shape: tuple, name: str) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"{name}: not a numeric array") from exc
    if arr.shape != shape:
        raise ModelFormatError(f"{name}: shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelFormatError(f"{name}: non-finite values")
    arr.setflags(write=False)
    return arr


def model_from_dict(doc: Mapping) -> CorrectorModel:
    if not isinstance(doc, Mapping):
        raise ModelFormatError("model document must be a JSON object")
    if doc.get("schema") != SCHEMA_NAME:
        raise ModelFormatError(f"not a corrector model (schema={doc.get('schema')!r})")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ModelFormatError(f"unsupported schema_version {doc.get('schema_version')!r}")
    try:
        labels = tuple(str(x) for x in doc["label_set"])
        d, k = int(doc["dim"]), int(doc["k"])
        pca_doc = doc["pca"]
        if not labels or d < 1 or not (1 <= k <= d):
            raise ModelFormatError("inconsistent label_set/dim/k")
        pca = PcaBasis(
            components=_array(pca_doc["components"], (k, d), "pca.components"),
            mean=_array(pca_doc["mean"], (d,), "pca.mean"),
            explained_variance_ratio=_array(pca_doc["explained_variance_ratio"], (k,), "pca.explained_variance_ratio"),
        )
        per_class = {}
        for entry in doc["classes"]:
            label = str(entry["label"])
            if label in per_class:
                raise ModelFormatError(f"duplicate class entry {label!r}")
            b = entry["bounds"]
            bounds = ClassBounds(
                upsilon=float(b["upsilon"]),
                gamma=float(b["gamma"]),
                delta=float(entry["delta"]),
                m_plus=int(entry["m_plus"]),
                m_minus=int(entry["m_minus"]),
                upsilon_raw=float(b["upsilon_raw"]),
            )
            projector = FisherProjector(label, _array(entry["weights"], (k,), f"classes[{label}].weights"), pca)
            per_class[label] = ClassCorrector(
                class_label=label,
                projector=projector,
                threshold=float(entry["threshold"]),
                delta=bounds.delta,
                m_plus=bounds.m_plus,
                m_minus=bounds.m_minus,
                f_plus_at_theta=float(entry["f_plus_at_theta"]),
                bounds=bounds,
            )
        provenance = dict(doc.get("provenance") or {})
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model document: {exc!r}") from exc
    if set(per_class) != set(labels):
        raise ModelFormatError("class entries do not match label_set")
    return CorrectorModel(label_set=labels, pca=pca, per_class=per_class, provenance=provenance)


PathOrFile = Union[str, os.PathLike, IO[str]]


def save_model(model: CorrectorModel, destination: PathOrFile) -> None:
    """Write ``model`` as a JSON document (floats keep full precision)."""
    text = json.dumps(model_to_dict(model), indent=2)
    if hasattr(destination, "write"):
        destination.write(text)
        return
    tmp = f"{os.fspath(destination)}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, destination)


def load_model(source: PathOrFile) -> CorrectorModel:
    try:
        if hasattr(source, "read"):
            doc = json.load(source)
        else:
            with open(source, encoding="utf-8") as fh:
                doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model document is not valid JSON: {exc}") from exc
    return model_from_dict(doc)
