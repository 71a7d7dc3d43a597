"""Command-line interface.

Exit codes: 0 success, 1 user or input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import shutil
import sys
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bounds import bound_curve, psi, rho
from .corrector import fit, load_model, save_model
from .dataio import parse_label_list, read_dataset, write_decisions
from .errors import CorrectorError, NumericalError
from .metrics import compare_with_baseline
from .sim import load_spec, standard_specs, validate_bounds

EXIT_OK, EXIT_USER, EXIT_NUMERIC = 0, 1, 2

FIT_DEFAULTS = {
    "deltas": None,
    "gamma_targets": None,
    "pca_variance": None,
    "pca_k": None,
    "split": "none",
    "split_fraction": 0.5,
    "seed": 0,
    "ridge": 1e-6,
    "labels": None,
}


def _float_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _open_out(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


# ---------------------------------------------------------------- fit


def _fit_settings(args) -> dict:
    settings = dict(FIT_DEFAULTS)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CorrectorError(f"{args.config}: not valid JSON: {exc}") from exc
        unknown = set(cfg) - set(settings)
        if unknown:
            raise CorrectorError(f"{args.config}: unknown keys {sorted(unknown)}")
        settings.update(cfg)
    for key in settings:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    if isinstance(settings["labels"], str):
        settings["labels"] = list(parse_label_list(settings["labels"]))
    if settings["pca_k"] is not None and settings["pca_variance"] is not None:
        if args.pca_k is not None and args.pca_variance is None:
            settings["pca_variance"] = None
        elif args.pca_variance is not None and args.pca_k is None:
            settings["pca_k"] = None
        else:
            raise CorrectorError("give only one of --pca-k and --pca-variance")
    if settings["deltas"] is not None and settings["gamma_targets"] is not None:
        if args.gamma_targets is not None and args.deltas is None:
            settings["deltas"] = None
        elif args.deltas is not None and args.gamma_targets is None:
            settings["gamma_targets"] = None
        else:
            raise CorrectorError("give only one of --deltas and --gamma-targets")
    if settings["deltas"] is None and settings["gamma_targets"] is None:
        raise CorrectorError("one of --deltas or --gamma-targets is required")
    return settings


def cmd_fit(args) -> int:
    data = read_dataset(args.data, feature_prefix=args.feature_prefix)
    s = _fit_settings(args)
    labels = s["labels"] or data.declared_labels
    if labels is None:
        raise CorrectorError("label set must be declared (--labels, config 'labels', or a '# labels:' header line)")
    for sample in data.samples:
        if sample.truth is None:
            raise CorrectorError(f"unlabeled sample in correction set: {sample.id!r}")
    model = fit(
        data.samples,
        s["deltas"],
        gamma_targets=s["gamma_targets"],
        label_set=labels,
        pca_variance=s["pca_variance"],
        pca_k=s["pca_k"],
        ridge=s["ridge"],
        split=s["split"],
        split_fraction=s["split_fraction"],
        seed=s["seed"],
    )
    model.provenance["data"] = str(args.data)
    model.provenance["config"] = str(args.config) if args.config else None
    save_model(model, args.model)

    # resubstitution on the whole input set
    rejected = {label: [0, 0] for label in model.label_set}
    decisions = model.decide_many([x.predicted for x in data.samples], np.vstack([x.features for x in data.samples]))
    for sample, dec in zip(data.samples, decisions):
        if dec.rejected:
            rejected[sample.predicted][0 if sample.truth == sample.predicted else 1] += 1

    cols = ("class", "delta", "theta", "m_plus", "m_minus", "gamma", "upsilon", "rejected_correct", "rejected_incorrect")
    print("\t".join(cols))
    for label in model.label_set:
        cc = model.per_class[label]
        print(
            "\t".join(
                [
                    label,
                    repr(cc.delta),
                    repr(cc.threshold),
                    str(cc.m_plus),
                    str(cc.m_minus),
                    repr(cc.bounds.gamma),
                    repr(cc.bounds.upsilon) + (" (vacuous)" if cc.bounds.vacuous else ""),
                    str(rejected[label][0]),
                    str(rejected[label][1]),
                ]
            )
        )
    print(f"model written to {args.model} (k={model.pca.k}, d={model.dim})", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------- apply / evaluate


def _check_against_model(model, data) -> None:
    if data.samples and data.dim != model.dim:
        raise CorrectorError(f"feature dimension {data.dim} does not match model dimension {model.dim}")
    for sample in data.samples:
        if sample.predicted not in model.per_class:
            raise CorrectorError(f"row {sample.id!r}: unknown predicted label {sample.predicted!r}")


def cmd_apply(args) -> int:
    model = load_model(args.model)
    data = read_dataset(args.data, feature_prefix=args.feature_prefix)
    _check_against_model(model, data)
    if data.samples:
        decisions = model.decide_many([s.predicted for s in data.samples], np.vstack([s.features for s in data.samples]))
    else:
        decisions = []
    fh, close = _open_out(args.out)
    try:
        write_decisions(fh, [s.id for s in data.samples], decisions)
    finally:
        if close:
            fh.close()
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    data = read_dataset(args.data, feature_prefix=args.feature_prefix)
    _check_against_model(model, data)
    comparison = compare_with_baseline(model, data.samples)
    report = comparison.report
    print(report.format_table())
    print(f"samples: {report.sample_count}")
    print(
        f"collapsed bounds: accept >= {report.collapsed_accept_lb:.4f}, reject >= {report.collapsed_reject_lb:.4f}"
    )
    if args.baseline:
        print("class\tcorrector_recall\tbaseline_recall\tdelta")
        for r in comparison.rows:
            fmt = lambda x: "undefined" if x is None else f"{x:.4f}"  # noqa: E731
            print(f"{r.class_label}\t{fmt(r.corrector_recall)}\t{fmt(r.baseline_recall)}\t{fmt(r.recall_delta)}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(comparison.to_dict(), fh, indent=2)
    return EXIT_OK


# ---------------------------------------------------------------- bounds / curve


def cmd_bounds(args) -> int:
    gamma = rho(args.delta, args.m_minus)
    print(f"gamma\t{gamma!r}")
    print(f"one_minus_gamma\t{1.0 - gamma!r}")
    if (args.f_plus is None) != (args.m_plus is None):
        raise CorrectorError("f_plus and m_plus must be given together")
    if args.f_plus is not None:
        raw = 1.0 - psi(args.f_plus, args.m_plus)
        print(f"upsilon\t{max(raw, 0.0)!r}")
        print(f"upsilon_raw\t{raw!r}")
        print(f"vacuous\t{str(raw <= 0.0).lower()}")
    return EXIT_OK


def log_grid(m_min: int, m_max: int, points: int) -> list[int]:
    """Integer, strictly increasing, approximately log-spaced grid."""
    if m_min < 1 or m_max < m_min:
        raise CorrectorError("need 1 <= m_min <= m_max")
    if points < 1:
        raise CorrectorError("points must be >= 1")
    if points == 1:
        return [int(m_min)]
    grid = np.unique(np.rint(np.geomspace(m_min, m_max, points)).astype(int))
    return [int(m) for m in grid]


def cmd_curve(args) -> int:
    ms = log_grid(args.m_min, args.m_max, args.points)
    fh, close = _open_out(args.out)
    try:
        fh.write("delta,m,gamma\n")
        for delta in args.deltas:
            for m, g in bound_curve(delta, ms):
                fh.write(f"{delta!r},{m},{g!r}\n")
    finally:
        if close:
            fh.close()
    return EXIT_OK


# ---------------------------------------------------------------- simulate


def cmd_simulate(args) -> int:
    if args.spec:
        specs = [load_spec(args.spec)]
    else:
        specs = standard_specs()
    reports = []
    for spec in specs:
        overrides = {}
        if args.trials is not None:
            overrides["trials"] = args.trials
        if args.seed is not None:
            overrides["seed"] = args.seed
        if overrides:
            spec = dataclasses.replace(spec, **overrides)
        report = validate_bounds(spec)
        print(report.format_table())
        reports.append(report.to_dict())
    doc = reports[0] if len(reports) == 1 else {"reports": reports}
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
    print("passed" if all(r["passed"] for r in reports) else "FAILED")
    return EXIT_OK


def cmd_demo(args) -> int:
    out = Path(args.dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("demo_fit.csv", "demo_test.csv", "demo_sim.json"):
        with resources.as_file(resources.files("aicorrector.data") / name) as src:
            shutil.copy(src, out / name)
        print(out / name)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aicorrector", description="Fit and apply error correctors with guaranteed bounds.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def data_args(sp, model_help: str):
        sp.add_argument("--data", required=True, help="delimited feature file")
        sp.add_argument("--model", required=True, help=model_help)
        sp.add_argument("--feature-prefix", default="f", help="prefix of feature columns (default: f)")

    f = sub.add_parser("fit", help="fit correctors and write a model file")
    data_args(f, "output model path")
    f.add_argument("--config", help="JSON file with fit settings (flags take precedence)")
    f.add_argument("--deltas", type=_float_list, help="quantile level(s), one or one per class")
    f.add_argument("--gamma-targets", dest="gamma_targets", type=_float_list, help="target reject bound(s)")
    f.add_argument("--pca-variance", dest="pca_variance", type=float, help="explained-variance fraction (default 0.9987)")
    f.add_argument("--pca-k", dest="pca_k", type=int, help="fixed number of principal components")
    f.add_argument("--split", choices=("none", "disjoint"), help="fit projectors on a disjoint share of the data")
    f.add_argument("--split-fraction", dest="split_fraction", type=float, help="share used for projectors (default 0.5)")
    f.add_argument("--seed", type=int)
    f.add_argument("--ridge", type=float)
    f.add_argument("--labels", help="comma-separated label set")
    f.set_defaults(func=cmd_fit)

    a = sub.add_parser("apply", help="write accept/reject decisions")
    data_args(a, "model file")
    a.add_argument("--out", help="decisions CSV (default stdout)")
    a.set_defaults(func=cmd_apply)

    e = sub.add_parser("evaluate", help="report metrics on labelled data")
    data_args(e, "model file")
    e.add_argument("--out", help="write the machine-readable report (JSON)")
    e.add_argument("--baseline", action="store_true", help="also print comparison with accepting everything")
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("bounds", help="print the guaranteed bounds for given delta and counts")
    b.add_argument("delta", type=float)
    b.add_argument("m_minus", type=int)
    b.add_argument("f_plus", type=float, nargs="?")
    b.add_argument("m_plus", type=int, nargs="?")
    b.set_defaults(func=cmd_bounds)

    c = sub.add_parser("curve", help="CSV of gamma against the number of errors")
    c.add_argument("--deltas", type=_float_list, default=[0.8, 0.85, 0.9, 0.95])
    c.add_argument("--m-min", dest="m_min", type=int, default=10)
    c.add_argument("--m-max", dest="m_max", type=int, default=100_000)
    c.add_argument("--points", type=int, default=60)
    c.add_argument("--out", help="output CSV (default stdout)")
    c.set_defaults(func=cmd_curve)

    s = sub.add_parser("simulate", help="Monte-Carlo check of the guarantees")
    s.add_argument("spec", nargs="?", help="JSON simulation spec (default: built-in scenarios)")
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", help="write the validation report (JSON)")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("demo", help="copy the bundled demo files into a directory")
    d.add_argument("dir")
    d.set_defaults(func=cmd_demo)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CorrectorError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
