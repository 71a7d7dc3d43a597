"""Evaluation of a fitted corrector against labelled data.

Per predicted class the four outcomes (accepted/rejected x correct/incorrect)
are tallied. Two derived rates are reported:

* conditional recall: ``accepted_correct / (accepted_correct + accepted_incorrect)``
* accepted error proportion: ``accepted_incorrect / (accepted_incorrect + rejected_incorrect)``,
  i.e. the share of the class's errors that slipped through; its guaranteed
  upper bound is ``1 - gamma``.

Ratios with an empty denominator are ``None`` and render as ``undefined``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .bounds import collapse_bounds
from .corrector import CorrectorModel, LabeledSample
from .errors import CorrectorError

UNDEFINED = "undefined"
TABLE_COLUMNS = (
    "class",
    "Correct",
    "Incorrect",
    "Rejected",
    "Accepted incorrect proportion",
    "Theoretical upper bound (1-gamma)",
    "Conditional recall",
)


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den > 0 else None


@dataclass(frozen=True)
class ClassReport:
    class_label: str
    accepted_correct: int
    accepted_incorrect: int
    rejected_correct: int
    rejected_incorrect: int
    conditional_recall: Optional[float]
    accepted_error_proportion: Optional[float]
    accept_correct_rate: Optional[float]
    reject_incorrect_rate: Optional[float]
    theoretical_accepted_error_ub: float
    theoretical_reject_lb: float
    theoretical_accept_lb: float
    bound_violated: bool

    @property
    def total(self) -> int:
        return self.accepted_correct + self.accepted_incorrect + self.rejected_correct + self.rejected_incorrect

    @property
    def rejected(self) -> int:
        return self.rejected_correct + self.rejected_incorrect


def class_report(label: str, ac: int, ai: int, rc: int, ri: int, gamma: float, upsilon: float) -> ClassReport:
    """Build a :class:`ClassReport` from raw outcome counts and the class bounds."""
    proportion = _ratio(ai, ai + ri)
    return ClassReport(
        class_label=label,
        accepted_correct=ac,
        accepted_incorrect=ai,
        rejected_correct=rc,
        rejected_incorrect=ri,
        conditional_recall=_ratio(ac, ac + ai),
        accepted_error_proportion=proportion,
        accept_correct_rate=_ratio(ac, ac + rc),
        reject_incorrect_rate=_ratio(ri, ai + ri),
        theoretical_accepted_error_ub=1.0 - gamma,
        theoretical_reject_lb=gamma,
        theoretical_accept_lb=upsilon,
        bound_violated=proportion is not None and proportion > 1.0 - gamma,
    )


@dataclass(frozen=True)
class EvaluationReport:
    per_class: list[ClassReport]
    sample_count: int
    priors: list[float]
    collapsed_accept_lb: float
    collapsed_reject_lb: float
    overall_accept_correct_rate: Optional[float]
    overall_reject_incorrect_rate: Optional[float]

    def to_dict(self) -> dict:
        return {
            "sample_count": self.sample_count,
            "per_class": [asdict(r) for r in self.per_class],
            "overall": {
                "priors": self.priors,
                "collapsed_accept_lb": self.collapsed_accept_lb,
                "collapsed_reject_lb": self.collapsed_reject_lb,
                "accept_correct_rate": self.overall_accept_correct_rate,
                "reject_incorrect_rate": self.overall_reject_incorrect_rate,
            },
            "definitions": {
                "conditional_recall": "accepted_correct / (accepted_correct + accepted_incorrect)",
                "accepted_error_proportion": "accepted_incorrect / (accepted_incorrect + rejected_incorrect)",
                "theoretical_accepted_error_ub": "1 - gamma",
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def format_table(self) -> str:
        return format_table(self.per_class)


def _fmt(x: Optional[float], digits: int = 2) -> str:
    return UNDEFINED if x is None else f"{x:.{digits}f}"


def format_table(rows: Sequence[ClassReport]) -> str:
    """Fixed-width text table, one row per class."""
    body = [
        (
            r.class_label,
            str(r.accepted_correct),
            str(r.accepted_incorrect),
            str(r.rejected),
            _fmt(r.accepted_error_proportion, 3) + (" !" if r.bound_violated else ""),
            _fmt(r.theoretical_accepted_error_ub, 3),
            _fmt(r.conditional_recall),
        )
        for r in rows
    ]
    widths = [max(len(h), *(len(row[i]) for row in body)) if body else len(h) for i, h in enumerate(TABLE_COLUMNS)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(TABLE_COLUMNS, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in body]
    return "\n".join(lines)


def _outcome_counts(model: CorrectorModel, samples: Sequence[LabeledSample]) -> dict[str, np.ndarray]:
    samples = list(samples)
    if not samples:
        raise CorrectorError("no samples to evaluate")
    for s in samples:
        if s.truth is None:
            raise CorrectorError(f"sample {s.id!r} has no true label")
        if s.predicted not in model.per_class:
            raise CorrectorError(f"sample {s.id!r}: predicted label {s.predicted!r} not in model")
    counts = {label: np.zeros(4, dtype=int) for label in model.label_set}
    decisions = model.decide_many([s.predicted for s in samples], np.vstack([s.features for s in samples]))
    for s, dec in zip(samples, decisions):
        # index: 0 accepted-correct, 1 accepted-incorrect, 2 rejected-correct, 3 rejected-incorrect
        counts[s.predicted][(0 if dec.accepted else 2) + (0 if s.truth == s.predicted else 1)] += 1
    return counts


def evaluate(model: CorrectorModel, samples: Sequence[LabeledSample], priors: Optional[Sequence[float]] = None) -> EvaluationReport:
    """Run the corrector over labelled samples and compare with its guarantees.

    ``priors`` are the class probabilities used for the collapsed bounds;
    by default the empirical frequencies of the true labels (restricted to
    the model's label set) are used.
    """
    samples = list(samples)
    counts = _outcome_counts(model, samples)
    rows = []
    for label in model.label_set:
        b = model.per_class[label].bounds
        rows.append(class_report(label, *(int(c) for c in counts[label]), gamma=b.gamma, upsilon=b.upsilon))

    if priors is None:
        freq = np.array([sum(s.truth == label for s in samples) for label in model.label_set], dtype=float)
        priors = freq / freq.sum() if freq.sum() > 0 else np.full(len(freq), 1.0 / len(freq))
    priors = [float(p) for p in priors]
    accept_lb, reject_lb = collapse_bounds(priors, [model.per_class[label].bounds for label in model.label_set])

    tot = np.sum([counts[label] for label in model.label_set], axis=0)
    return EvaluationReport(
        per_class=rows,
        sample_count=len(samples),
        priors=priors,
        collapsed_accept_lb=accept_lb,
        collapsed_reject_lb=reject_lb,
        overall_accept_correct_rate=_ratio(int(tot[0]), int(tot[0] + tot[2])),
        overall_reject_incorrect_rate=_ratio(int(tot[3]), int(tot[1] + tot[3])),
    )


@dataclass(frozen=True)
class BaselineRow:
    class_label: str
    corrector_recall: Optional[float]
    baseline_recall: Optional[float]

    @property
    def recall_delta(self) -> Optional[float]:
        if self.corrector_recall is None or self.baseline_recall is None:
            return None
        return self.corrector_recall - self.baseline_recall


@dataclass(frozen=True)
class BaselineComparison:
    report: EvaluationReport
    rows: list[BaselineRow]

    def to_dict(self) -> dict:
        return {
            "rows": [dict(asdict(r), recall_delta=r.recall_delta) for r in self.rows],
            "report": self.report.to_dict(),
        }


def compare_with_baseline(model: CorrectorModel, samples: Sequence[LabeledSample]) -> BaselineComparison:
    """Corrector conditional recall against the accept-everything baseline."""
    report = evaluate(model, samples)
    rows = [
        BaselineRow(
            class_label=r.class_label,
            corrector_recall=r.conditional_recall,
            baseline_recall=_ratio(r.accepted_correct + r.rejected_correct, r.total),
        )
        for r in report.per_class
    ]
    return BaselineComparison(report=report, rows=rows)
