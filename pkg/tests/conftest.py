import numpy as np
import pytest

from aicorrector.corrector import LabeledSample


def make_samples(rng, spec, d=3, prefix="s"):
    """spec: {label: (n_correct, n_wrong, gap)}; score axis 0, noise elsewhere."""
    labels = list(spec)
    out = []
    for j, (label, (n_pos, n_neg, gap)) in enumerate(spec.items()):
        wrong = labels[(j + 1) % len(labels)] if len(labels) > 1 else "other"
        for i in range(n_pos):
            x = rng.normal(size=d)
            x[0] += gap
            out.append(LabeledSample(f"{prefix}{label}+{i}", x, label, label))
        for i in range(n_neg):
            out.append(LabeledSample(f"{prefix}{label}-{i}", rng.normal(size=d), label, wrong))
    return out


@pytest.fixture
def two_class_samples():
    rng = np.random.default_rng(42)
    return make_samples(rng, {"a": (80, 40, 2.0), "b": (60, 30, 1.5)})


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
