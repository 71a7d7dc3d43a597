"""Delimited-text datasets of precomputed features.

Layout::

    # labels: a,b,c            optional directive declaring the label set
    id,predicted_label,true_label,f0,f1,...
    s1,a,b,0.12,-3.4,...

``true_label`` is optional (and may be blank per row). Feature columns are
those whose name starts with the feature prefix (``f`` by default); other
columns are ignored. The delimiter is a tab if the header contains one,
otherwise a comma.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from .corrector import REJECT, Decision, LabeledSample
from .errors import CorrectorError

ID_COLUMN = "id"
PREDICTED_COLUMN = "predicted_label"
TRUTH_COLUMN = "true_label"
LABELS_DIRECTIVE = "labels:"
DECISION_COLUMNS = ("id", "predicted", "decision", "score", "threshold", "gamma")


@dataclass
class Dataset:
    samples: list[LabeledSample]
    feature_names: list[str]
    declared_labels: Optional[tuple[str, ...]]
    has_truth_column: bool

    @property
    def dim(self) -> int:
        return len(self.feature_names)


def parse_label_list(text: str) -> tuple[str, ...]:
    labels = tuple(x.strip() for x in text.split(",") if x.strip())
    if not labels:
        raise CorrectorError("empty label list")
    return labels


def read_dataset(path, feature_prefix: str = "f") -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_dataset(fh, feature_prefix=feature_prefix, source=str(path))


def parse_dataset(fh: TextIO, feature_prefix: str = "f", source: str = "<input>") -> Dataset:
    declared = None
    header_line = None
    for line in fh:
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped.lstrip("#").strip()
            if body.lower().startswith(LABELS_DIRECTIVE):
                declared = parse_label_list(body[len(LABELS_DIRECTIVE):])
            continue
        header_line = line
        break
    if header_line is None:
        raise CorrectorError(f"{source}: missing header row")

    delimiter = "\t" if "\t" in header_line else ","
    header = next(csv.reader([header_line], delimiter=delimiter))
    header = [h.strip() for h in header]
    for required in (ID_COLUMN, PREDICTED_COLUMN):
        if required not in header:
            raise CorrectorError(f"{source}: header lacks required column {required!r}")
    if len(set(header)) != len(header):
        raise CorrectorError(f"{source}: duplicate column names in header")
    feat_idx = [i for i, h in enumerate(header) if h.startswith(feature_prefix) and h not in (ID_COLUMN, PREDICTED_COLUMN, TRUTH_COLUMN)]
    if not feat_idx:
        raise CorrectorError(f"{source}: no feature columns with prefix {feature_prefix!r}")
    id_i, pred_i = header.index(ID_COLUMN), header.index(PREDICTED_COLUMN)
    truth_i = header.index(TRUTH_COLUMN) if TRUTH_COLUMN in header else None

    samples = []
    for lineno, row in enumerate(csv.reader(fh, delimiter=delimiter), start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise CorrectorError(f"{source}: row {lineno} has {len(row)} fields, header has {len(header)}")
        sid = row[id_i].strip()
        try:
            feats = np.array([float(row[i]) for i in feat_idx])
        except ValueError:
            raise CorrectorError(f"{source}: row {sid!r} has a non-numeric feature") from None
        if not np.all(np.isfinite(feats)):
            raise CorrectorError(f"{source}: row {sid!r} has a non-finite feature")
        truth = row[truth_i].strip() if truth_i is not None else ""
        samples.append(LabeledSample(sid, feats, row[pred_i].strip(), truth or None))
    return Dataset(
        samples=samples,
        feature_names=[header[i] for i in feat_idx],
        declared_labels=declared,
        has_truth_column=truth_i is not None,
    )


def write_dataset(
    fh: TextIO,
    samples: Iterable[LabeledSample],
    labels: Optional[Sequence[str]] = None,
    include_truth: bool = True,
) -> None:
    samples = list(samples)
    if labels is not None:
        fh.write(f"# {LABELS_DIRECTIVE} {','.join(labels)}\n")
    d = samples[0].features.shape[0] if samples else 0
    writer = csv.writer(fh, lineterminator="\n")
    cols = [ID_COLUMN, PREDICTED_COLUMN] + ([TRUTH_COLUMN] if include_truth else [])
    writer.writerow(cols + [f"f{i}" for i in range(d)])
    for s in samples:
        extra = [s.truth or ""] if include_truth else []
        writer.writerow([s.id, s.predicted, *extra, *(repr(float(x)) for x in s.features)])


def write_decisions(fh: TextIO, ids: Sequence[str], decisions: Sequence[Decision]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(DECISION_COLUMNS)
    for sid, dec in zip(ids, decisions):
        writer.writerow(
            [
                sid,
                dec.predicted,
                dec.predicted if dec.accepted else REJECT,
                repr(dec.score),
                repr(dec.threshold),
                repr(dec.class_bounds.gamma),
            ]
        )


def read_decisions(fh: TextIO) -> list[dict]:
    reader = csv.DictReader(fh)
    if tuple(reader.fieldnames or ()) != DECISION_COLUMNS:
        raise CorrectorError(f"unexpected decision columns {reader.fieldnames}")
    rows = []
    for r in reader:
        r["score"] = float(r["score"])
        r["threshold"] = float(r["threshold"])
        r["gamma"] = float(r["gamma"])
        rows.append(r)
    return rows

