"""Command-line entry point.

Subcommands: ``inspect``, ``run``, ``sweep``, ``kfold``, ``synth`` and
``protos`` (build/show). Every run writes line-delimited reports and
CSV tables into the output directory, renders the matching figures
(PNG) next to them, and prints a one-line summary. All randomness flows
from ``--seed``; outputs contain no wall-clock or locale dependence, so
identical inputs reproduce identical files.

Flags may be preloaded from a JSON config file (``--config``); explicit
command-line flags take precedence, and the effective configuration is
echoed into every report.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from collections import Counter

import numpy as np

from . import plots, report
from .embedstore import (
    ClassVocab,
    Dataset,
    bind,
    read_embeddings,
    read_manifest,
    write_embeddings,
    write_manifest,
)
from .errors import ConfigError, ProtoshotError
from .evaluation import (
    EvalReport,
    RunConfig,
    canonical_method,
    kfold_run,
    run_once,
    sweep,
)
from .prototypes import build_prototypes, load_prototypes, save_prototypes
from .sampler import SupportSpec, sample_support, save_support_sets
from .synth import SynthSpec, gen_gaussian, spec_header


def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--embeddings", required=True, help="EMB1 embedding file")
    p.add_argument("--manifest", required=True, help="line-delimited manifest file")


def _add_run_args(p: argparse.ArgumentParser) -> None:
    _add_dataset_args(p)
    p.add_argument("--task", choices=["single-label", "multi-label"],
                   default="single-label")
    p.add_argument("--method", default="AVG",
                   help="AVG | LDA | MI+AVG | MI+LDA | ZS-external")
    p.add_argument("--scheme", choices=["uniform", "norm-weighted"],
                   default="uniform", help="prototype weighting scheme")
    p.add_argument("--metric", choices=["cosine", "mse"], default="cosine")
    p.add_argument("--k", type=int, default=5, help="support size per class")
    p.add_argument("--ratio-k", type=float, default=None,
                   help="K ratio for MI methods (kept features = K * |C|)")
    p.add_argument("--bins", type=int, default=None,
                   help="MI histogram bins (default: from support size)")
    p.add_argument("--lambda", dest="lam", type=float, default=1e-4,
                   help="LDA ridge coefficient")
    p.add_argument("--strategy", choices=["uniform-random", "least-overlap"],
                   default=None, help="support sampling (default: by task type)")
    p.add_argument("--protos", default=None,
                   help="external prototype EMB1 file (ZS-external)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-figures", action="store_true",
                   help="skip PNG rendering, write tables only")


def _load_dataset(args) -> Dataset:
    return bind(read_embeddings(args.embeddings), read_manifest(args.manifest))


def _build_config(args) -> RunConfig:
    return RunConfig(
        method=canonical_method(args.method),
        scheme=args.scheme,
        metric=args.metric,
        k=args.k,
        ratio_k=args.ratio_k,
        bins=args.bins,
        lam=args.lam,
        seed=args.seed,
        task=args.task,
        strategy=args.strategy,
    )


def _load_external(args, dataset: Dataset):
    if canonical_method(args.method) != "ZS-external":
        return None
    if args.protos is None:
        raise ConfigError("ZS-external requires --protos")
    return load_prototypes(args.protos, dataset.vocab)


def _echo_paths(rep_config: dict, args) -> dict:
    # input paths are provenance; the output directory is not part of
    # the run configuration and would break cross-directory rerun diffs
    rep_config["embeddings"] = args.embeddings
    rep_config["manifest"] = args.manifest
    return rep_config


def _metric_name(task: str) -> str:
    return "accuracy" if task == "single-label" else "map"


def _atomic(writer, obj, path, **kwargs) -> None:
    """Run a path-taking writer against a temp file, then rename."""
    tmp = f"{path}.tmp.{os.getpid()}"
    writer(obj, tmp, **kwargs)
    os.replace(tmp, path)


def _write_run_outputs(args, rep: EvalReport) -> None:
    out = args.out
    os.makedirs(out, exist_ok=True)
    report.write_report_jsonl([rep], os.path.join(out, "report.jsonl"))
    report.write_runs_csv(
        [report.report_run_row(rep)],
        os.path.join(out, "runs.csv"),
        ["value", "run", "seed", "metric"],
    )
    if rep.support_ids is not None:
        report.write_support_jsonl(rep.support_ids, os.path.join(out, "support.jsonl"))
    if rep.confusion is not None:
        report.write_confusion_csv(rep.confusion, os.path.join(out, "confusion.csv"))
        if not args.no_figures:
            plots.save_confusion_figure(
                rep.confusion, os.path.join(out, "confusion.png")
            )
    if rep.per_class_ap is not None and not args.no_figures:
        plots.save_per_class_ap_figure(
            rep.classes, rep.per_class_ap, os.path.join(out, "per_class_ap.png")
        )


def cmd_inspect(args) -> int:
    dataset = _load_dataset(args)
    print(f"rows: {dataset.n}")
    print(f"dim: {dataset.dim}")
    print(f"classes: {len(dataset.vocab)}")
    per_class = Counter()
    splits = Counter()
    folds = Counter()
    for rec in dataset.manifest.records:
        splits[rec.split] += 1
        if rec.fold is not None:
            folds[rec.fold] += 1
        for cls in rec.labels:
            per_class[cls] += 1
    print("per-class counts:")
    for cls in dataset.vocab.classes:
        print(f"  {cls}: {per_class[cls]}")
    print("splits: " + ", ".join(f"{s}={splits[s]}" for s in ("dev", "eval")))
    if folds:
        fold_str = ", ".join(f"{f}={folds[f]}" for f in sorted(folds))
        print(f"folds: {fold_str}")
    else:
        print("folds: none")
    single = dataset.manifest.is_single_label
    print(f"task shape: {'single-label' if single else 'multi-label'}")
    return 0


def cmd_run(args) -> int:
    dataset = _load_dataset(args)
    config = _build_config(args)
    rep = run_once(dataset, config, _load_external(args, dataset))
    rep = dataclasses.replace(rep, config=_echo_paths(dict(rep.config), args))
    _write_run_outputs(args, rep)
    print(f"{_metric_name(rep.task)}={rep.value!r}")
    return 0


def _parse_values(raw: str, axis: str) -> list:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ConfigError("empty --values list")
    try:
        if axis == "support_size":
            return [int(p) for p in parts]
        values = []
        for p in parts:
            if "/" in p:  # ratio notation, e.g. 1/2
                num, den = p.split("/", 1)
                values.append(float(num) / float(den))
            else:
                values.append(float(p))
        return values
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"invalid --values entry: {exc}") from exc


def cmd_sweep(args) -> int:
    dataset = _load_dataset(args)
    axis = "support_size" if args.axis == "support-size" else "K"
    values = _parse_values(args.values, axis)
    if axis == "K" and args.ratio_k is None:
        args.ratio_k = values[0]  # placeholder; the sweep sets it per point
    config = _build_config(args)
    result = sweep(
        dataset,
        config,
        axis,
        values,
        args.runs,
        args.seed,
        _load_external(args, dataset),
        workers=args.workers,
    )
    out = args.out
    os.makedirs(out, exist_ok=True)
    report.write_sweep_csv(result, os.path.join(out, "sweep.csv"))
    report.write_runs_csv(
        report.sweep_run_rows(result),
        os.path.join(out, "runs.csv"),
        ["value", "run", "seed", "metric"],
    )
    all_reports = [r for p in result.points for r in p.reports]
    report.write_report_jsonl(all_reports, os.path.join(out, "report.jsonl"))
    if not args.no_figures:
        ylabel = "Accuracy" if args.task == "single-label" else "mAP"
        plots.save_sweep_figure(result, os.path.join(out, "sweep.png"), ylabel)
    for p in result.points:
        std = "" if p.std is None else f" std={p.std!r}"
        print(f"value={p.value} mean={p.mean!r}{std}")
    return 0


def cmd_kfold(args) -> int:
    dataset = _load_dataset(args)
    config = _build_config(args)
    result = kfold_run(dataset, config, _load_external(args, dataset))
    out = args.out
    os.makedirs(out, exist_ok=True)
    report.write_kfold_csv(result, os.path.join(out, "folds.csv"))
    report.write_report_jsonl(result.reports, os.path.join(out, "report.jsonl"))
    for fold, rep in zip(result.folds, result.reports):
        if rep.support_ids is not None:
            report.write_support_jsonl(
                rep.support_ids, os.path.join(out, f"support_fold{fold}.jsonl")
            )
    if not args.no_figures:
        ylabel = "Accuracy" if args.task == "single-label" else "mAP"
        plots.save_fold_figure(result, os.path.join(out, "folds.png"), ylabel)
    print(f"pooled_{_metric_name(config.task)}={result.pooled_mean!r}")
    return 0


def cmd_synth(args) -> int:
    jitter = None
    if args.jitter:
        try:
            lo, hi = (float(x) for x in args.jitter.split(","))
        except ValueError as exc:
            raise ConfigError(f"--jitter expects LO,HI: {exc}") from exc
        jitter = (lo, hi)
    try:
        spec = _synth_spec(args, jitter)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    dataset = gen_gaussian(spec)
    _atomic(write_embeddings, dataset.matrix, args.out_embeddings)
    _atomic(
        write_manifest, dataset.manifest, args.out_manifest,
        header_comment=spec_header(spec),
    )
    print(
        f"wrote {dataset.n} rows x {dataset.dim} dims, "
        f"{len(dataset.vocab)} classes -> {args.out_embeddings}"
    )
    return 0


def _synth_spec(args, jitter) -> SynthSpec:
    return SynthSpec(
        classes=args.classes,
        dim=args.dim,
        rows_per_class_dev=args.dev_rows,
        rows_per_class_eval=args.eval_rows,
        mean_scale=args.mean_scale,
        sigma=args.sigma,
        gain_jitter=jitter,
        noise_dims=args.noise_dims,
        folds=args.folds,
        seed=args.seed,
    )


def cmd_protos_build(args) -> int:
    dataset = _load_dataset(args)
    spec = SupportSpec(k=args.k, strategy=args.strategy or "uniform-random",
                       seed=args.seed)
    support = sample_support(dataset, spec)
    protos = build_prototypes(dataset, support, args.scheme)
    tmp = f"{args.out}.tmp.{os.getpid()}"
    save_prototypes(protos, tmp)
    os.replace(tmp, args.out)
    os.replace(f"{tmp}.classes", f"{args.out}.classes")
    _atomic(lambda s, p: save_support_sets(s, dataset, p),
            support, f"{args.out}.support.jsonl")
    print(
        f"built {len(dataset.vocab)} prototypes (dim {protos.dim}, "
        f"scheme {args.scheme}, digest {protos.provenance.support_digest[:12]})"
    )
    return 0


def cmd_protos_show(args) -> int:
    manifest = read_manifest(args.manifest)
    vocab = ClassVocab.from_labels(manifest.label_union())
    protos = load_prototypes(args.protos, vocab)
    norms = np.linalg.norm(protos.vectors.astype(np.float64), axis=1)
    print(f"classes: {len(vocab)}")
    print(f"dim: {protos.dim}")
    print(f"provenance: {protos.provenance.kind}")
    for cls, norm in zip(vocab.classes, norms):
        print(f"  {cls}: |e|={norm:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="protoshot",
        description="Few-shot classification over precomputed embeddings.",
    )
    parser.add_argument("--config", default=None,
                        help="JSON file of flag defaults (flags override)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="validate and summarize a dataset")
    _add_dataset_args(p)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("run", help="one evaluation run")
    _add_run_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="repeated runs over an axis")
    _add_run_args(p)
    p.add_argument("--axis", choices=["support-size", "K"], required=True)
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.add_argument("--runs", type=int, default=1, help="runs per axis value")
    p.add_argument("--workers", type=int, default=1, help="parallel runs")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("kfold", help="cross-validation over the manifest folds")
    _add_run_args(p)
    p.set_defaults(func=cmd_kfold)

    p = sub.add_parser("synth", help="generate a synthetic Gaussian dataset")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--dev-rows", type=int, required=True,
                   help="dev rows per class")
    p.add_argument("--eval-rows", type=int, required=True,
                   help="eval rows per class")
    p.add_argument("--mean-scale", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--noise-dims", type=int, default=0)
    p.add_argument("--jitter", default=None, help="per-row gain range LO,HI")
    p.add_argument("--folds", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-embeddings", required=True)
    p.add_argument("--out-manifest", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("protos", help="build or show prototype files")
    psub = p.add_subparsers(dest="protos_command", required=True)
    pb = psub.add_parser("build", help="sample support and save prototypes")
    _add_dataset_args(pb)
    pb.add_argument("--k", type=int, default=5)
    pb.add_argument("--scheme", choices=["uniform", "norm-weighted"],
                    default="uniform")
    pb.add_argument("--strategy", choices=["uniform-random", "least-overlap"],
                    default=None)
    pb.add_argument("--seed", type=int, default=0)
    pb.add_argument("--out", required=True, help="prototype EMB1 path")
    pb.set_defaults(func=cmd_protos_build)
    ps = psub.add_parser("show", help="load and summarize a prototype file")
    ps.add_argument("--protos", required=True)
    ps.add_argument("--manifest", required=True,
                    help="manifest supplying the class vocabulary")
    ps.set_defaults(func=cmd_protos_show)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Load --config JSON as subparser defaults; explicit flags override."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return argv
    with open(known.config, "r", encoding="utf-8") as fh:
        defaults = json.load(fh)
    if not isinstance(defaults, dict):
        raise ConfigError("config file must hold a JSON object")
    # apply to every (nested) subparser that knows the key; unknown keys error
    def walk(p: argparse.ArgumentParser):
        yield p
        for action in p._actions:
            if isinstance(action, argparse._SubParsersAction):
                for child in action.choices.values():
                    yield from walk(child)

    all_parsers = list(walk(parser))
    for key, value in defaults.items():
        applied = False
        for sp in all_parsers:
            if key in {a.dest for a in sp._actions}:
                sp.set_defaults(**{key: value})
                applied = True
        if not applied:
            raise ConfigError(f"config file key {key!r} matches no flag")
    return argv


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except ProtoshotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
