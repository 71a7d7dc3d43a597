"""Synthetic correction sets and Monte-Carlo checks of the guarantees.

Every class ``j`` gets Gaussian scores on feature axis 0: correct decisions
draw from ``N(mu_plus, sigma_plus^2)``, incorrect ones from
``N(mu_minus, sigma_minus^2)``. The remaining ``d - 1`` axes carry
isotropic ``N(0, noise_sigma^2)`` noise. Because the fitted projector is
linear, the true reject/accept probabilities of any fitted corrector are
available in closed form and are reported next to the sampled rates.

Random streams use numpy's PCG64 generator; trial ``t`` is seeded with the
entropy pair ``(seed, t)`` so results do not depend on execution order.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import norm

from .corrector import LabeledSample, fit
from .errors import CorrectorError, NumericalError


@dataclass(frozen=True)
class ClassScoreSpec:
    label: str
    mu_plus: float
    sigma_plus: float
    mu_minus: float
    sigma_minus: float
    m_plus: int
    m_minus: int
    delta: float


@dataclass(frozen=True)
class SyntheticSpec:
    classes: tuple[ClassScoreSpec, ...]
    d: int = 3
    noise_sigma: float = 1.0
    test_count: int = 500
    trials: int = 200
    seed: int = 0
    split: str = "disjoint"
    pca_k: Optional[int] = None
    name: str = "synthetic"

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        if not self.classes:
            raise CorrectorError("spec needs at least one class")
        if self.d < 1:
            raise CorrectorError("d must be >= 1")
        if self.noise_sigma <= 0 and self.d > 1:
            raise CorrectorError("noise_sigma must be positive")
        if self.test_count < 1 or self.trials < 1:
            raise CorrectorError("test_count and trials must be positive")
        labels = [c.label for c in self.classes]
        if len(set(labels)) != len(labels):
            raise CorrectorError("class labels must be unique")
        for c in self.classes:
            if c.m_plus < 2 or c.m_minus < 2:
                raise CorrectorError(f"class {c.label!r}: counts must be >= 2")
            if c.sigma_plus <= 0 or c.sigma_minus <= 0:
                raise CorrectorError(f"class {c.label!r}: sigma must be positive")
            if not (0.0 < c.delta < 1.0):
                raise CorrectorError(f"class {c.label!r}: delta must lie in (0, 1)")

    @property
    def q(self) -> int:
        return len(self.classes)

    @classmethod
    def from_dict(cls, doc: dict) -> "SyntheticSpec":
        doc = dict(doc)
        try:
            classes = tuple(ClassScoreSpec(**{**c, "label": str(c["label"])}) for c in doc.pop("classes"))
            return cls(classes=classes, **doc)
        except (KeyError, TypeError) as exc:
            raise CorrectorError(f"invalid simulation spec: {exc}") from exc

    def to_dict(self) -> dict:
        return asdict(self)


def _wrong_label(spec: SyntheticSpec, index: int) -> str:
    if spec.q == 1:
        return f"not-{spec.classes[0].label}"
    return spec.classes[(index + 1) % spec.q].label


def _features(rng: np.random.Generator, n: int, mu: float, sigma: float, d: int, noise: float) -> np.ndarray:
    X = np.empty((n, d))
    X[:, 0] = rng.normal(mu, sigma, size=n)
    if d > 1:
        X[:, 1:] = rng.normal(0.0, noise, size=(n, d - 1))
    return X


def _draw(spec: SyntheticSpec, rng: np.random.Generator, test: bool) -> list[tuple[np.ndarray, np.ndarray]]:
    out = []
    for c in spec.classes:
        n_pos = spec.test_count if test else c.m_plus
        n_neg = spec.test_count if test else c.m_minus
        out.append(
            (
                _features(rng, n_pos, c.mu_plus, c.sigma_plus, spec.d, spec.noise_sigma),
                _features(rng, n_neg, c.mu_minus, c.sigma_minus, spec.d, spec.noise_sigma),
            )
        )
    return out


def _to_samples(spec: SyntheticSpec, arrays, prefix: str) -> list[LabeledSample]:
    samples = []
    for j, (c, (pos, neg)) in enumerate(zip(spec.classes, arrays)):
        wrong = _wrong_label(spec, j)
        samples += [LabeledSample(f"{prefix}{c.label}+{i}", x, c.label, c.label) for i, x in enumerate(pos)]
        samples += [LabeledSample(f"{prefix}{c.label}-{i}", x, c.label, wrong) for i, x in enumerate(neg)]
    return samples


def generate(spec: SyntheticSpec, rng: Optional[np.random.Generator] = None) -> tuple[list[LabeledSample], list[LabeledSample]]:
    """Draw a fit set (``m_plus``/``m_minus`` per class) and a test set
    (``test_count`` correct and ``test_count`` incorrect per class)."""
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(spec.seed))
    fit_arrays = _draw(spec, rng, test=False)
    test_arrays = _draw(spec, rng, test=True)
    return _to_samples(spec, fit_arrays, "fit-"), _to_samples(spec, test_arrays, "test-")


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, trial])))


def exact_reject_probability(projector, threshold: float, mu: float, sigma: float, noise: float) -> float:
    """P(score <= threshold) for a fresh feature vector of the synthetic model."""
    v = projector.direction
    mean = v[0] * mu - float(v @ projector.pca.mean)
    var = v[0] ** 2 * sigma**2 + noise**2 * float(v[1:] @ v[1:])
    return float(norm.cdf((threshold - mean) / math.sqrt(var)))


def _summary(x: np.ndarray) -> dict:
    q = np.quantile(x, [0.0, 0.05, 0.5, 0.95, 1.0])
    return dict(zip(("min", "p05", "median", "p95", "max"), (float(v) for v in q)), mean=float(x.mean()))


def mc_tolerance(p_hat: float, trials: int, test_count: int) -> float:
    return 3.0 * math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / (trials * test_count))


@dataclass
class ClassValidation:
    label: str
    delta: float
    m_plus: int
    m_minus: int
    gamma: float
    upsilon: float
    reject_given_incorrect: float
    accept_given_correct: float
    exact_reject_given_incorrect: float
    exact_accept_given_correct: float
    reject_tolerance: float
    accept_tolerance: float
    reject_distribution: dict
    accept_distribution: dict

    @property
    def reject_ok(self) -> bool:
        return self.reject_given_incorrect >= self.gamma - self.reject_tolerance

    @property
    def accept_ok(self) -> bool:
        return self.accept_given_correct >= self.upsilon - self.accept_tolerance

    @property
    def passed(self) -> bool:
        return self.reject_ok and self.accept_ok


@dataclass
class ValidationReport:
    spec_name: str
    trials: int
    completed_trials: int
    test_count: int
    classes: list[ClassValidation]
    failed_trials: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.completed_trials > 0 and all(c.passed for c in self.classes)

    def to_dict(self) -> dict:
        return {
            "spec_name": self.spec_name,
            "trials": self.trials,
            "completed_trials": self.completed_trials,
            "test_count": self.test_count,
            "passed": self.passed,
            "classes": [dict(asdict(c), reject_ok=c.reject_ok, accept_ok=c.accept_ok, passed=c.passed) for c in self.classes],
            "failed_trials": self.failed_trials,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def format_table(self) -> str:
        head = f"{'class':>8} {'gamma':>7} {'reject':>7} {'upsilon':>8} {'accept':>7} {'ok':>4}"
        lines = [f"{self.spec_name}: {self.completed_trials}/{self.trials} trials", head]
        for c in self.classes:
            lines.append(
                f"{c.label:>8} {c.gamma:7.4f} {c.reject_given_incorrect:7.4f} "
                f"{c.upsilon:8.4f} {c.accept_given_correct:7.4f} {('yes' if c.passed else 'NO'):>4}"
            )
        return "\n".join(lines)


def validate_bounds(spec: SyntheticSpec, min_trials: int = 100) -> ValidationReport:
    """Fit a corrector on ``spec.trials`` independent fit sets and check both
    guarantees against trial-averaged conditional rates on fresh samples."""
    if spec.trials < min_trials:
        raise CorrectorError(f"need at least {min_trials} trials, got {spec.trials}")
    deltas = {c.label: c.delta for c in spec.classes}
    labels = [c.label for c in spec.classes]
    q = spec.q
    gam, ups, rej, acc, rej_x, acc_x = (np.full((spec.trials, q), np.nan) for _ in range(6))
    m_counts = np.zeros((q, 2), dtype=int)
    failed = []
    for t in range(spec.trials):
        rng = trial_rng(spec.seed, t)
        fit_set = _to_samples(spec, _draw(spec, rng, test=False), "fit-")
        test_arrays = _draw(spec, rng, test=True)
        try:
            model = fit(fit_set, deltas, label_set=labels, split=spec.split, seed=t, pca_k=spec.pca_k)
        except (CorrectorError, NumericalError) as exc:
            failed.append({"trial": t, "error": str(exc)})
            continue
        for j, c in enumerate(spec.classes):
            cc = model.per_class[c.label]
            pos, neg = test_arrays[j]
            m_counts[j] = (cc.m_plus, cc.m_minus)
            gam[t, j] = cc.bounds.gamma
            ups[t, j] = cc.bounds.upsilon
            rej[t, j] = cc.reject_mask(neg)[1].mean()
            acc[t, j] = 1.0 - cc.reject_mask(pos)[1].mean()
            rej_x[t, j] = exact_reject_probability(cc.projector, cc.threshold, c.mu_minus, c.sigma_minus, spec.noise_sigma)
            acc_x[t, j] = 1.0 - exact_reject_probability(cc.projector, cc.threshold, c.mu_plus, c.sigma_plus, spec.noise_sigma)

    done = ~np.isnan(gam[:, 0])
    n_done = int(done.sum())
    classes = []
    for j, c in enumerate(spec.classes):
        if n_done == 0:
            break
        r, a = rej[done, j], acc[done, j]
        classes.append(
            ClassValidation(
                label=c.label,
                delta=c.delta,
                m_plus=int(m_counts[j, 0]),
                m_minus=int(m_counts[j, 1]),
                gamma=float(gam[done, j].mean()),
                upsilon=float(ups[done, j].mean()),
                reject_given_incorrect=float(r.mean()),
                accept_given_correct=float(a.mean()),
                exact_reject_given_incorrect=float(rej_x[done, j].mean()),
                exact_accept_given_correct=float(acc_x[done, j].mean()),
                reject_tolerance=mc_tolerance(float(r.mean()), n_done, spec.test_count),
                accept_tolerance=mc_tolerance(float(a.mean()), n_done, spec.test_count),
                reject_distribution=_summary(r),
                accept_distribution=_summary(a),
            )
        )
    return ValidationReport(
        spec_name=spec.name,
        trials=spec.trials,
        completed_trials=n_done,
        test_count=spec.test_count,
        classes=classes,
        failed_trials=failed,
    )


def standard_specs(trials: int = 200, seed: int = 2024) -> list[SyntheticSpec]:
    """Three reference scenarios: well separated, overlapping, identical scores."""

    def two_classes(gap_a: float, gap_b: float) -> tuple[ClassScoreSpec, ...]:
        return (
            ClassScoreSpec("a", gap_a, 1.0, 0.0, 1.0, m_plus=200, m_minus=100, delta=0.9),
            ClassScoreSpec("b", gap_b, 1.0, 0.0, 1.5, m_plus=120, m_minus=60, delta=0.8),
        )

    return [
        SyntheticSpec(two_classes(6.0, 5.0), d=3, trials=trials, seed=seed, name="separated"),
        SyntheticSpec(two_classes(1.5, 1.0), d=3, trials=trials, seed=seed + 1, name="overlapping"),
        SyntheticSpec(
            (
                ClassScoreSpec("a", 0.0, 1.0, 0.0, 1.0, m_plus=200, m_minus=100, delta=0.9),
                ClassScoreSpec("b", 0.0, 1.0, 0.0, 1.0, m_plus=120, m_minus=60, delta=0.8),
            ),
            d=3,
            trials=trials,
            seed=seed + 2,
            name="identical",
        ),
    ]


def load_spec(path) -> SyntheticSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            return SyntheticSpec.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise CorrectorError(f"{path}: not valid JSON: {exc}") from exc

