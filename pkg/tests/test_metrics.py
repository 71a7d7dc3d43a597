import json

import numpy as np
import pytest

from aicorrector.corrector import LabeledSample, fit
from aicorrector.errors import CorrectorError
from aicorrector.metrics import (
    TABLE_COLUMNS,
    UNDEFINED,
    class_report,
    compare_with_baseline,
    evaluate,
    format_table,
)
from conftest import make_samples


def test_conditional_recall_38_of_47():
    r = class_report("c", ac=38, ai=9, rc=5, ri=30, gamma=0.8, upsilon=0.5)
    assert round(r.conditional_recall, 2) == 0.81
    assert r.conditional_recall == pytest.approx(38 / 47)
    assert r.accepted_error_proportion == pytest.approx(9 / 39)
    assert r.theoretical_accepted_error_ub == pytest.approx(0.2)
    assert r.bound_violated


def test_nothing_accepted_is_undefined():
    r = class_report("c", ac=0, ai=0, rc=4, ri=6, gamma=0.5, upsilon=0.0)
    assert r.conditional_recall is None
    assert r.accept_correct_rate == 0.0
    table = format_table([r])
    assert UNDEFINED in table.splitlines()[1]


def test_ten_samples_three_wrong_one_accepted():
    # one accepted incorrect out of three incorrect
    r = class_report("c", ac=5, ai=1, rc=2, ri=2, gamma=0.5, upsilon=0.2)
    assert r.total == 10
    assert r.accepted_error_proportion == pytest.approx(1 / 3)
    assert not r.bound_violated


def test_no_incorrect_samples():
    r = class_report("c", ac=3, ai=0, rc=1, ri=0, gamma=0.5, upsilon=0.2)
    assert r.accepted_error_proportion is None and r.reject_incorrect_rate is None
    assert not r.bound_violated


def test_table_header_and_rows():
    rows = [class_report("x", 1, 2, 3, 4, 0.6, 0.1), class_report("y", 5, 0, 0, 1, 0.9, 0.3)]
    lines = format_table(rows).splitlines()
    assert len(lines) == 3
    for col in TABLE_COLUMNS:
        assert col in lines[0]
    assert lines[1].split()[0] == "x" and lines[2].split()[0] == "y"


@pytest.fixture
def fitted():
    rng = np.random.default_rng(10)
    spec = {"a": (120, 60, 2.0), "b": (90, 45, 1.5), "c": (80, 40, 1.0)}
    model = fit(make_samples(rng, spec), 0.85)
    test = make_samples(rng, spec, prefix="t")
    return model, test


def test_counts_conserved(fitted):
    model, test = fitted
    report = evaluate(model, test)
    assert report.sample_count == len(test)
    assert sum(r.total for r in report.per_class) == len(test)
    for r in report.per_class:
        n_label = sum(s.predicted == r.class_label for s in test)
        wrong = sum(s.predicted == r.class_label and s.truth != s.predicted for s in test)
        assert r.total == n_label
        assert r.accepted_incorrect + r.rejected_incorrect == wrong


def test_overall_rates_are_weighted_averages(fitted):
    model, test = fitted
    report = evaluate(model, test)
    correct = np.array([r.accepted_correct + r.rejected_correct for r in report.per_class], dtype=float)
    wrong = np.array([r.accepted_incorrect + r.rejected_incorrect for r in report.per_class], dtype=float)
    acc = np.array([r.accept_correct_rate for r in report.per_class])
    rej = np.array([r.reject_incorrect_rate for r in report.per_class])
    assert report.overall_accept_correct_rate == pytest.approx(float(correct @ acc / correct.sum()))
    assert report.overall_reject_incorrect_rate == pytest.approx(float(wrong @ rej / wrong.sum()))
    lo, hi = min(acc), max(acc)
    assert lo <= report.overall_accept_correct_rate <= hi


def test_report_carries_bounds_and_priors(fitted):
    model, test = fitted
    report = evaluate(model, test, priors=[0.5, 0.3, 0.2])
    for r in report.per_class:
        b = model.per_class[r.class_label].bounds
        assert r.theoretical_reject_lb == b.gamma
        assert r.theoretical_accept_lb == b.upsilon
    gam = [model.per_class[x].bounds.gamma for x in model.label_set]
    ups = [model.per_class[x].bounds.upsilon for x in model.label_set]
    assert report.collapsed_accept_lb == pytest.approx(0.5 * ups[0] + 0.3 * ups[1] + 0.2 * ups[2])
    assert report.collapsed_reject_lb == pytest.approx(min(1.0, 0.5 * gam[0] + 0.7 * gam[1] + 0.8 * gam[2]))
    doc = json.loads(report.to_json())
    assert doc["sample_count"] == len(test)
    assert len(doc["per_class"]) == 3
    assert doc["overall"]["priors"] == [0.5, 0.3, 0.2]


def test_default_priors_are_truth_frequencies(fitted):
    model, test = fitted
    report = evaluate(model, test)
    assert sum(report.priors) == pytest.approx(1.0)
    freq_a = sum(s.truth == "a" for s in test)
    in_set = sum(s.truth in model.label_set for s in test)
    assert report.priors[0] == pytest.approx(freq_a / in_set)


def test_evaluate_needs_truth(fitted):
    model, test = fitted
    bad = test[:3] + [LabeledSample("u", test[0].features, "a", None)]
    with pytest.raises(CorrectorError, match="'u'"):
        evaluate(model, bad)


def test_evaluate_unknown_prediction(fitted):
    model, test = fitted
    with pytest.raises(CorrectorError, match="not in model"):
        evaluate(model, [LabeledSample("z", test[0].features, "nope", "a")])


def test_tiny_delta_matches_baseline():
    rng = np.random.default_rng(11)
    spec = {"a": (300, 300, 1.0), "b": (300, 300, 1.0)}
    model = fit(make_samples(rng, spec), 1e-9)
    test = make_samples(rng, spec, prefix="t")
    cmp = compare_with_baseline(model, test)
    for row in cmp.rows:
        assert abs(row.recall_delta) < 0.01
    # the only reject region is at or below the smallest error score
    for r in cmp.report.per_class:
        assert r.rejected <= 0.02 * r.total


def test_uninformative_features_give_baseline_recall():
    rng = np.random.default_rng(12)
    spec = {"a": (400, 200, 0.0), "b": (400, 200, 0.0)}
    model = fit(make_samples(rng, spec), 0.5)
    test = make_samples(rng, {"a": (4000, 2000, 0.0), "b": (4000, 2000, 0.0)}, prefix="t")
    cmp = compare_with_baseline(model, test)
    for row in cmp.rows:
        assert row.baseline_recall == pytest.approx(2 / 3)
        assert abs(row.recall_delta) < 0.05


def test_informative_features_beat_baseline(fitted):
    model, test = fitted
    for row in compare_with_baseline(model, test).rows:
        assert row.recall_delta > 0
    assert "rows" in compare_with_baseline(model, test).to_dict()
