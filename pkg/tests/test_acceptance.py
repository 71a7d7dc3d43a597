"""Acceptance criteria, one test each, with wall-clock limits.

Each test records a ``PASS``/``FAIL`` line which is printed in the pytest
terminal summary (and immediately with ``-s``).
"""

import itertools
import time

import numpy as np
import pytest

from aicorrector.bounds import bound_curve, psi, rho
from aicorrector.corrector import fit, load_model, save_model
from aicorrector.ecdf import build_ecdf
from aicorrector.metrics import class_report
from aicorrector.sim import standard_specs, validate_bounds
from conftest import ACCEPTANCE_LINES, make_samples
from oracles import count_cdf, dense_psi, dense_rho, sort_quantile


def report(number, title, ok, elapsed, limit, detail=""):
    ok = bool(ok) and (limit is None or elapsed < limit)
    budget = f"{elapsed:.2f}s" + (f" (limit {limit:g}s)" if limit is not None else "")
    line = f"{'PASS' if ok else 'FAIL'}  [{number}] {title}: {budget}" + (f"; {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_1_reference_reject_bounds():
    start = time.perf_counter()
    pairs = [(0.9167, 288), (0.7925, 53), (0.8125, 64), (0.9622, 1562), (0.7778, 45)]
    published = [0.19, 0.43, 0.39, 0.09, 0.46]
    got = [1.0 - rho(d, m) for d, m in pairs]
    elapsed = time.perf_counter() - start
    worst = max(abs(g - p) for g, p in zip(got, published))
    detail = "1-gamma = " + ", ".join(f"{g:.4f}" for g in got) + f"; max deviation {worst:.4f}"
    assert report(1, "reference reject bounds within 0.02", worst <= 0.02, elapsed, 1.0, detail)


def test_2_bound_curves():
    start = time.perf_counter()
    deltas = [0.8, 0.85, 0.9, 0.95]
    ms = sorted({int(round(m)) for m in np.geomspace(10, 100_000, 80)})
    curves = {d: np.array([g for _, g in bound_curve(d, ms)]) for d in deltas}
    elapsed = time.perf_counter() - start
    monotone = all(np.all(np.diff(c) >= 0) for c in curves.values())
    ordered = all(np.all(curves[a] <= curves[b]) for a, b in zip(deltas, deltas[1:]))
    end_gap = max(abs(curves[d][-1] - d) for d in deltas)
    ok = monotone and ordered and end_gap <= 0.01 and ms[-1] == 100_000
    detail = f"monotone={monotone}, ordered={ordered}, max |gamma(1e5)-delta|={end_gap:.4f}"
    assert report(2, "curve family monotone and ordered", ok, elapsed, 5.0, detail)


@pytest.mark.slow
def test_3_monte_carlo_validation():
    start = time.perf_counter()
    reports = [validate_bounds(spec) for spec in standard_specs(trials=200)]
    elapsed = time.perf_counter() - start
    parts = []
    for r in reports:
        for c in r.classes:
            parts.append(
                f"{r.spec_name}/{c.label}: reject {c.reject_given_incorrect:.3f}>={c.gamma:.3f}, "
                f"accept {c.accept_given_correct:.3f}>={c.upsilon:.3f}"
            )
    ok = len(reports) >= 3 and all(r.passed and r.completed_trials == 200 for r in reports)
    for r in reports:
        print(r.format_table())
    assert report(3, "Monte-Carlo check of both guarantees (R=200)", ok, elapsed, 120.0, "; ".join(parts))


def test_4_optimizer_oracle():
    rng = np.random.default_rng(404)
    a_values = rng.uniform(0.0, 1.0, 200)
    d_values = np.exp(rng.uniform(np.log(1.0), np.log(1e5), 200)).round().astype(int)
    start = time.perf_counter()
    worst = 0.0
    for a, d in zip(a_values, d_values):
        worst = max(worst, abs(rho(float(a), int(d)) - dense_rho(a, d)), abs(psi(float(a), int(d)) - dense_psi(a, d)))
    elapsed = time.perf_counter() - start
    assert report(4, "rho/psi vs dense-grid oracle", worst <= 1e-6, elapsed, 30.0, f"max abs diff {worst:.2e}")


def test_5_ecdf_oracle():
    rng = np.random.default_rng(505)
    start = time.perf_counter()
    bad = 0
    for _ in range(1000):
        n = int(rng.integers(1, 40))
        pool = rng.normal(size=int(rng.integers(1, 6)))  # few distinct values, heavy ties
        values = rng.choice(pool, size=n).tolist()
        cdf = build_ecdf(values)
        probes = list(pool) + list(rng.normal(size=5))
        bad += sum(cdf.evaluate(s) != count_cdf(values, s) for s in probes)
        levels = [k / n for k in range(1, n + 1)] + list(rng.uniform(1e-9, 1.0, 5))
        bad += sum(cdf.pseudo_inverse(y) != sort_quantile(values, y) for y in levels)

    galois_checks = 0
    alphabet = (0.0, 1.0, 2.0)
    probes = (-0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5)
    for n in range(1, 13):
        levels = sorted({k / n for k in range(1, n + 1)} | {min(1.0, k / n + 1e-9) for k in range(n)} | {0.37, 1.0})
        for values in itertools.combinations_with_replacement(alphabet, n):
            cdf = build_ecdf(values)
            for y in levels:
                q = cdf.pseudo_inverse(y)
                for s in probes:
                    galois_checks += 1
                    bad += (q <= s) != (cdf.evaluate(s) >= y)
    elapsed = time.perf_counter() - start
    detail = f"{bad} mismatches; {galois_checks} Galois checks on all multisets of size <= 12 over 3 values"
    assert report(5, "ECDF and pseudo-inverse vs naive oracles", bad == 0, elapsed, 10.0, detail)


def test_6_pipeline_invariants(tmp_path):
    start = time.perf_counter()
    rng = np.random.default_rng(606)
    spec = {"a": (150, 90, 1.5), "b": (120, 70, 1.0), "c": (100, 50, 2.0)}
    samples = make_samples(rng, spec, d=5)
    problems = []

    for delta in (0.6, 0.8, 0.9, 0.95):
        model = fit(samples, delta)
        for label in model.label_set:
            errs = [s for s in samples if s.predicted == label and s.truth != label]
            frac = sum(model.decide(label, s.features).rejected for s in errs) / len(errs)
            if frac < delta:
                problems.append(f"resubstitution {label}@{delta}: {frac:.3f}")

    probe = make_samples(rng, spec, d=5, prefix="p")
    previous = None
    for delta in np.linspace(0.05, 0.99, 15):
        model = fit(samples, float(delta))
        rejected = {s.id for s in probe if model.decide(s.predicted, s.features).rejected}
        if previous is not None and not previous <= rejected:
            problems.append(f"reject set shrank at delta {delta:.3f}")
        previous = rejected

    model = fit(samples, {"a": 0.9, "b": 0.85, "c": 0.8}, split="disjoint", seed=1)
    save_model(model, tmp_path / "m.json")
    loaded = load_model(tmp_path / "m.json")
    X = rng.normal(scale=2.0, size=(1000, 5))
    preds = rng.choice(list(spec), size=1000).tolist()
    if loaded.decide_many(preds, X) != model.decide_many(preds, X):
        problems.append("round trip changed decisions")
    elapsed = time.perf_counter() - start
    detail = "; ".join(problems) or "resubstitution, monotone reject sets, 1000-input round trip"
    assert report(6, "pipeline invariants", not problems, elapsed, None, detail)


def test_7_conditional_recall_spot_check():
    start = time.perf_counter()
    r = class_report("1", ac=38, ai=9, rc=0, ri=0, gamma=0.81, upsilon=0.0)
    elapsed = time.perf_counter() - start
    shown = f"{r.conditional_recall:.2f}"
    assert report(7, "conditional recall 38/9", shown == "0.81", elapsed, None, f"recall {shown}")
