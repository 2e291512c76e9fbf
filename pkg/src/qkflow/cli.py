"""``qkflow`` command-line pipeline.

::

    qkflow get-dataset      -> X.npy, y.npy, dataset.json
    qkflow preprocess       -> X_train.npy, y_train.npy, X_test.npy, y_test.npy
    qkflow apply-kernel     -> K_train.npy, K_test.npy, kernel.json (+ label copies)
    qkflow optimize-kernel  -> feature_map.json, trace.jsonl
    qkflow evaluate         -> results.jsonl, plot.svg

Relative paths are resolved against the workspace (``--workspace``, else
``$QKFLOW_WORKSPACE``, else the current directory). ``--config FILE`` reads
an INI file whose ``[global]`` section and per-command sections (named like
the subcommand) supply defaults; explicit flags win. Every command writes
``run_config.json`` next to its outputs.

Exit codes: 0 success, 2 usage or configuration error, 3 data or file
format error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
import time

import numpy as np

from . import data as qdata
from . import metrics as qmetrics
from .arrayio import load_array, save_array
from .exceptions import DataFormatError, NumericalError, OptimizationError
from .featuremaps import MAP_KINDS, FeatureMap, build_feature_map, default_generators, genome_to_feature_map
from .kernelmachines import svm_predict, svm_train
from .kernels import CLASSICAL_FAMILIES, QUANTUM_FAMILIES, KernelSpec, gram, psd_clip
from .optimize import (
    KernelObjective,
    adam_train,
    anneal_structure,
    genetic_structure,
    grid_search_bandwidth,
)
from .plotting import bar_chart_svg

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4
WORKSPACE_ENV = "QKFLOW_WORKSPACE"
METRICS = ("accuracy", "alignment", "polarity", "geometric_difference", "dimension", "complexity", "mse")


class UsageError(Exception):
    """Invalid combination of options."""


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _words(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


# ---------------------------------------------------------------------------
# paths and run snapshots


class Workspace:
    def __init__(self, root: str):
        self.root = os.path.abspath(root)

    def path(self, p: str) -> str:
        return p if os.path.isabs(p) else os.path.join(self.root, p)

    def rel(self, p: str) -> str:
        p = os.path.abspath(p)
        try:
            return os.path.relpath(p, self.root)
        except ValueError:
            return p

    def outdir(self, p: str) -> str:
        path = self.path(p)
        os.makedirs(path, exist_ok=True)
        return path


def _snapshot(args, ws: Workspace, outdir: str, extra: dict | None = None) -> None:
    skip = {"func", "config", "workspace"}
    resolved = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        if key in getattr(args, "_path_keys", ()) and value is not None:
            value = [ws.rel(ws.path(v)) for v in value] if isinstance(value, list) else ws.rel(ws.path(value))
        resolved[key] = value
    resolved.pop("_path_keys", None)
    body = {"command": args.command, "options": resolved, **(extra or {})}
    _write_json(os.path.join(outdir, "run_config.json"), body)


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON ({exc})") from None


def _load_split(ws: Workspace, directory: str):
    base = ws.path(directory)
    arrays = {}
    for name in ("X_train", "y_train", "X_test", "y_test"):
        arrays[name] = load_array(os.path.join(base, f"{name}.npy"))
    X_train, X_test = np.atleast_2d(arrays["X_train"]), arrays["X_test"]
    if X_test.ndim == 1:
        X_test = X_test[:, None] if X_train.shape[1] == 1 else X_test[None, :]
    if X_train.shape[1] != X_test.shape[1]:
        raise DataFormatError(f"X_train has {X_train.shape[1]} features but X_test has {X_test.shape[1]}")
    y_train, y_test = arrays["y_train"].reshape(-1), arrays["y_test"].reshape(-1)
    if y_train.shape[0] != X_train.shape[0] or y_test.shape[0] != X_test.shape[0]:
        raise DataFormatError("label files do not match the feature files in length")
    return X_train, y_train, X_test, y_test


# ---------------------------------------------------------------------------
# get-dataset


def cmd_get_dataset(args, ws: Workspace) -> int:
    if args.kind is not None:
        if args.kind not in qdata.GENERATORS:
            raise UsageError(f"unknown dataset {args.kind!r}; generators are {', '.join(qdata.GENERATORS)}")
        ds = qdata.generate(args.kind, args.n, args.d, args.noise, args.seed)
    elif args.name is not None:
        if args.catalog is None:
            raise UsageError("--name needs --catalog")
        catalog = qdata.load_catalog(ws.path(args.catalog))
        if args.name not in catalog:
            raise UsageError(f"unknown dataset {args.name!r}; catalog has {', '.join(sorted(catalog)) or 'nothing'}")
        ds = qdata.load_from_catalog(args.name, catalog, args.orientation)
    else:
        raise UsageError("give --kind (generator) or --name (catalog entry)")
    if args.relabel_map is not None:
        n = args.relabel_qubits or ds.num_features
        fm = build_feature_map(args.relabel_map, n, ds.num_features, bandwidth=args.relabel_bandwidth)
        theta = None
        if fm.num_params:
            theta = np.random.default_rng(args.seed).uniform(-np.pi, np.pi, fm.num_params)
        relabelled = qdata.quantum_relabel(ds.X, fm, args.relabel_observable, theta)
        ds = ds.derive(relabelled.provenance[-1], y=relabelled.y, task="classification")
    out = ws.outdir(args.out)
    save_array(os.path.join(out, "X.npy"), ds.X)
    save_array(os.path.join(out, "y.npy"), ds.y)
    _write_json(os.path.join(out, "dataset.json"), {"task": ds.task, "provenance": list(ds.provenance), "summary": ds.summary()})
    _snapshot(args, ws, out)
    _log(f"dataset: {json.dumps(ds.summary(), sort_keys=True)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# preprocess

PREPROCESS_ORDER = ("filter-labels", "split", "scale", "pca", "resample")


def cmd_preprocess(args, ws: Workspace) -> int:
    if args.famd:
        raise UsageError("FAMD (mixed categorical data) is not supported; use --pca on numeric features")
    if args.undersample and args.oversample:
        raise UsageError("--undersample and --oversample are mutually exclusive")
    if args.keep_labels is not None and args.label_range is not None:
        raise UsageError("--keep-labels and --label-range are mutually exclusive")
    source = ws.path(args.input)
    X = qdata.load_matrix(args.x and ws.path(args.x) or os.path.join(source, "X.npy"))
    y = qdata.load_matrix(args.y and ws.path(args.y) or os.path.join(source, "y.npy")).reshape(-1)
    if args.orientation == "columns":
        X = X.T
    ds = qdata.Dataset(X, y, args.task, ({"op": "load", "orientation": args.orientation},))
    resample_mode = "undersample" if args.undersample else "oversample" if args.oversample else None
    if resample_mode and ds.task != "classification":
        raise UsageError("resampling is only defined for classification data")

    performed = []
    if args.keep_labels is not None or args.label_range is not None:
        between = tuple(args.label_range) if args.label_range is not None else None
        if between is not None and len(between) != 2:
            raise UsageError("--label-range needs exactly two numbers lo,hi")
        ds = qdata.filter_labels(ds, args.keep_labels, between)
        performed.append("filter-labels")
    parts = qdata.split(ds, args.split, args.seed, args.stratified)
    performed.append("split")
    train, test = parts.train, parts.test
    transforms = {}
    if args.scale is not None:
        lo, hi = args.scale_range
        train, t = qdata.scale_features(train, args.scale, lo, hi)
        test = test.derive(train.provenance[-1], X=t.apply(test.X))
        transforms["scale"] = t.to_dict()
        performed.append("scale")
    if args.pca is not None:
        train, t = qdata.pca_reduce(train, args.pca)
        test = test.derive(train.provenance[-1], X=t.apply(test.X))
        transforms["pca"] = t.to_dict()
        performed.append("pca")
    if resample_mode:
        train = qdata.resample(train, resample_mode, args.seed)
        performed.append("resample (train only)")
    _log("preprocess order: " + " -> ".join(performed))

    out = ws.outdir(args.out)
    save_array(os.path.join(out, "X_train.npy"), train.X)
    save_array(os.path.join(out, "y_train.npy"), train.y)
    save_array(os.path.join(out, "X_test.npy"), test.X)
    save_array(os.path.join(out, "y_test.npy"), test.y)
    _write_json(
        os.path.join(out, "preprocess.json"),
        {
            "order": performed,
            "train_provenance": list(train.provenance),
            "test_provenance": list(test.provenance),
            "transforms": transforms,
            "train_summary": train.summary(),
            "test_summary": test.summary(),
        },
    )
    _snapshot(args, ws, out)
    _log(f"train: {json.dumps(train.summary(), sort_keys=True)}")
    _log(f"test: {json.dumps(test.summary(), sort_keys=True)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# kernels and feature maps


def _load_feature_map(path: str) -> tuple[FeatureMap, np.ndarray | None]:
    doc = _read_json(path)
    if "feature_map" in doc:
        fm = FeatureMap.from_dict(doc["feature_map"])
        theta = doc.get("theta")
    else:
        fm, theta = FeatureMap.from_dict(doc), None
    return fm, None if theta is None else np.asarray(theta, dtype=float)


def _feature_map_from_args(args, ws: Workspace, d: int) -> tuple[FeatureMap, np.ndarray | None]:
    if getattr(args, "feature_map", None):
        fm, theta = _load_feature_map(ws.path(args.feature_map))
        if args.bandwidth is not None:
            fm = fm.with_bandwidth(args.bandwidth)
        if fm.num_features != d:
            raise DataFormatError(f"feature map expects {fm.num_features} features, data has {d}")
        return fm, theta
    n = args.qubits or d
    fm = build_feature_map(args.map, n, d, args.layers, 1.0 if args.bandwidth is None else args.bandwidth)
    return fm, None


def _kernel_spec(args, ws: Workspace, d: int) -> KernelSpec:
    family = args.kernel
    if family in CLASSICAL_FAMILIES:
        return KernelSpec(family, degree=args.degree, coef0=args.coef0, alpha=args.alpha)
    fm, theta = _feature_map_from_args(args, ws, d)
    if theta is None and fm.num_params:
        theta = np.random.default_rng(args.seed).uniform(-np.pi, np.pi, fm.num_params)
    theta = None if theta is None else tuple(theta)
    if family == "projected":
        return KernelSpec("projected", feature_map=fm, theta=theta, gamma=args.gamma, squared_norm=not args.unsquared)
    if args.shots < 0:
        raise UsageError(f"--shots must be non-negative, got {args.shots}")
    mode = "exact" if args.shots == 0 else args.estimator
    return KernelSpec("fidelity", mode=mode, shots=max(args.shots, 1), seed=args.seed, clamp=args.clamp, feature_map=fm, theta=theta)


def cmd_apply_kernel(args, ws: Workspace) -> int:
    if args.kernel not in CLASSICAL_FAMILIES + QUANTUM_FAMILIES:
        raise UsageError(f"unknown kernel {args.kernel!r}; expected one of {', '.join(CLASSICAL_FAMILIES + QUANTUM_FAMILIES)}")
    X_train, y_train, X_test, y_test = _load_split(ws, args.input)
    spec = _kernel_spec(args, ws, X_train.shape[1])
    start = time.perf_counter()
    K_train = gram(spec, X_train, workers=args.workers)
    K_test = gram(spec, X_test, X_train, workers=args.workers)
    wall = time.perf_counter() - start
    clipped = False
    if args.psd_clip or (spec.family == "fidelity" and spec.mode != "exact"):
        K_train = psd_clip(K_train)
        clipped = True
    out = ws.outdir(args.out)
    K_train.save(os.path.join(out, "K_train.npy"))
    K_test.save(os.path.join(out, "K_test.npy"))
    save_array(os.path.join(out, "y_train.npy"), y_train)
    save_array(os.path.join(out, "y_test.npy"), y_test)
    sidecar = {
        "spec": K_train.spec,
        "shots": 0 if spec.family == "fidelity" and spec.mode == "exact" else int(spec.shots) if spec.family == "fidelity" else None,
        "seed": args.seed,
        "psd_clipped": clipped,
        "train_shape": list(K_train.shape),
        "test_shape": list(K_test.shape),
        "source": ws.rel(ws.path(args.input)),
        "wall_time_seconds": wall,
        **K_train.meta,
    }
    _write_json(os.path.join(out, "kernel.json"), sidecar)
    _snapshot(args, ws, out)
    _log(f"kernel {spec.family}: K_train {K_train.shape}, K_test {K_test.shape} in {wall:.2f}s")
    return EXIT_OK


# ---------------------------------------------------------------------------
# optimize-kernel


def _holdout(X, y, fraction: float, seed: int):
    ds = qdata.Dataset(X, y)
    parts = qdata.split(ds, 1.0 - fraction, seed, stratified=True)
    return parts.train.X, parts.train.y, parts.test.X, parts.test.y


def cmd_optimize_kernel(args, ws: Workspace) -> int:
    methods = ("grid", "adam", "anneal", "genetic")
    if args.method not in methods:
        raise UsageError(f"unsupported method {args.method!r}; expected one of {', '.join(methods)}")
    X, y, _, _ = _load_split(ws, args.input)
    if args.objective == "accuracy":
        X_fit, y_fit, X_val, y_val = _holdout(X, y, args.val_fraction, args.seed)
        objective = KernelObjective(X_fit, y_fit, "negative_validation_accuracy", X_val, y_val, args.C)
    else:
        objective = KernelObjective(X, y, "negative_alignment")
    d = X.shape[1]
    theta = None
    if args.method in ("grid", "adam"):
        fm, theta = _feature_map_from_args(args, ws, d)
        if args.method == "grid":
            betas = args.betas or [0.1, 0.25, 0.5, 1.0, 2.0]
            if theta is None and fm.num_params:
                theta = fm.default_theta()
            best_beta, trace = grid_search_bandwidth(fm, betas, objective, theta)
            fm = fm.with_bandwidth(best_beta)
        else:
            if fm.num_params == 0:
                raise UsageError(f"map {fm.kind!r} has no trainable parameters; use --map hardware_efficient_trainable")
            if args.objective != "alignment":
                raise UsageError("adam needs the differentiable alignment objective")
            theta0 = theta if theta is not None else np.random.default_rng(args.seed).uniform(-np.pi, np.pi, fm.num_params)
            theta, trace = adam_train(fm, theta0, objective, args.steps, args.lr, args.seed, args.batch_fraction)
    else:
        n = args.qubits or d
        generators = args.generators or list(default_generators(n))
        bandwidth = 1.0 if args.bandwidth is None else args.bandwidth

        def structure_objective(fm):
            return objective(fm)

        if args.method == "anneal":
            genome, trace = anneal_structure(
                generators, args.slots, d, structure_objective, (args.t0, args.cooling, args.steps), args.seed, n, bandwidth
            )
        else:
            genome, trace = genetic_structure(
                generators, args.slots, d, structure_objective, args.population, args.generations,
                args.mutation_rate, args.seed, n, bandwidth,
            )
        fm = genome_to_feature_map(genome, generators, n, d, bandwidth)
    out = ws.outdir(args.out)
    doc = {"feature_map": fm.to_dict(), "theta": None if theta is None else [float(t) for t in theta]}
    _write_json(os.path.join(out, "feature_map.json"), doc)
    trace.save(os.path.join(out, "trace.jsonl"))
    _snapshot(args, ws, out)
    _log(f"{args.method}: best objective {trace.best['value']:.6g} after {len(trace.iterations)} evaluations")
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate


def _parse_gram_arg(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise UsageError(f"--gram expects label=DIR, got {text!r}")
    label, path = text.split("=", 1)
    if not label or not path:
        raise UsageError(f"--gram expects label=DIR, got {text!r}")
    return label, path


def _load_gram_dir(ws: Workspace, directory: str) -> dict:
    base = ws.path(directory)
    out = {
        "K_train": load_array(os.path.join(base, "K_train.npy")),
        "K_test": load_array(os.path.join(base, "K_test.npy")),
        "y_train": load_array(os.path.join(base, "y_train.npy")).reshape(-1),
        "y_test": load_array(os.path.join(base, "y_test.npy")).reshape(-1),
    }
    sidecar = os.path.join(base, "kernel.json")
    out["sidecar"] = _read_json(sidecar) if os.path.exists(sidecar) else {}
    return out


def _metric_records(metric: str, g: dict, label: str, meta: dict, args, reference, classical) -> list:
    K, y = g["K_train"], g["y_train"]
    if metric == "accuracy":
        model = svm_train(K, y, C=args.C)
        train_pred, _ = svm_predict(model, K)
        test_pred, _ = svm_predict(model, g["K_test"])
        meta = meta | {"predictor": "svm", "C": args.C}
        return [
            qmetrics.EvaluationRecord(label, "train_accuracy", qmetrics.accuracy(y, train_pred), meta),
            qmetrics.EvaluationRecord(label, "test_accuracy", qmetrics.accuracy(g["y_test"], test_pred), meta),
        ]
    if metric == "mse":
        return qmetrics.evaluate_predictor("krr", K, y, g["K_test"], g["y_test"], {"ridge": args.ridge}, label, meta)
    if metric == "alignment":
        value = qmetrics.target_alignment(K, y)
    elif metric == "polarity":
        value = qmetrics.polarity(K, reference)
        meta = meta | {"reference": args.reference}
    elif metric == "geometric_difference":
        value = qmetrics.geometric_difference(classical, K)
        meta = meta | {"classical": args.classical, "eps": "1e-7*trace/N", "normalized": True, "sqrt_N": float(np.sqrt(K.shape[0]))}
    elif metric == "dimension":
        value = qmetrics.approximate_dimension(K)
        meta = meta | {"normalized": True}
    elif metric == "complexity":
        value = qmetrics.model_complexity(K, y)
        meta = meta | {"eps": "1e-7*trace/N"}
    else:
        raise UsageError(f"unknown metric {metric!r}")
    return [qmetrics.EvaluationRecord(label, metric, value, meta)]


def cmd_evaluate(args, ws: Workspace) -> int:
    if not args.gram:
        raise UsageError("evaluate needs at least one --gram label=DIR")
    metrics = args.metric or ["accuracy", "alignment"]
    unknown = [m for m in metrics if m not in METRICS]
    if unknown:
        raise UsageError(f"unknown metric(s) {', '.join(unknown)}; expected {', '.join(METRICS)}")
    if "polarity" in metrics and not args.reference:
        raise UsageError("metric polarity needs --reference DIR")
    if "geometric_difference" in metrics and not args.classical:
        raise UsageError("metric geometric_difference needs --classical DIR (a classical Gram)")
    pairs = [_parse_gram_arg(text) for text in args.gram]
    reference = _load_gram_dir(ws, args.reference)["K_train"] if args.reference else None
    classical = _load_gram_dir(ws, args.classical)["K_train"] if args.classical else None

    records = []
    groups: dict[str, dict[str, list[float]]] = {}
    for label, directory in pairs:
        g = _load_gram_dir(ws, directory)
        for other, name in ((reference, "reference"), (classical, "classical")):
            if other is not None and other.shape != g["K_train"].shape:
                raise DataFormatError(f"{name} Gram has shape {other.shape}, {directory} has {g['K_train'].shape}")
        meta = {"source": directory, "kernel": g["sidecar"].get("spec", {}).get("family")}
        for metric in metrics:
            for record in _metric_records(metric, g, label, meta, args, reference, classical):
                records.append(record)
                groups.setdefault(label, {}).setdefault(record.metric_name, []).append(record.value)
    out = ws.outdir(args.out)
    qmetrics.write_records(os.path.join(out, "results.jsonl"), records)
    with open(os.path.join(out, "plot.svg"), "w") as fh:
        fh.write(bar_chart_svg(groups, title=args.title or "kernel evaluation"))
    _snapshot(args, ws, out)
    for label, per_metric in groups.items():
        summary = ", ".join(f"{m}={np.mean(v):.4g}" for m, v in sorted(per_metric.items()))
        _log(f"{label}: {summary}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _add_map_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--map", choices=MAP_KINDS, default="angle", help="stock feature map")
    p.add_argument("--feature-map", help="feature_map.json written by optimize-kernel")
    p.add_argument("--qubits", type=int, help="number of qubits (default: number of features)")
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--bandwidth", type=float, help="bandwidth scaling of data angles")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workspace", help=f"workspace root (default: ${WORKSPACE_ENV} or cwd)")
    common.add_argument("--config", help="INI config file with [global] and per-command sections")
    common.add_argument("--seed", type=int, default=0)

    parser = argparse.ArgumentParser(prog="qkflow", description="Quantum kernel pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("get-dataset", parents=[common], help="generate or load a dataset")
    p.add_argument("--kind", help=f"generator: {', '.join(qdata.GENERATORS)}")
    p.add_argument("--name", help="catalog dataset name")
    p.add_argument("--catalog", help="JSON catalog file")
    p.add_argument("--orientation", choices=("rows", "columns"), default=None)
    p.add_argument("--n", type=int, default=40, help="number of samples")
    p.add_argument("--d", type=int, default=2, help="number of features")
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--relabel-map", choices=MAP_KINDS)
    p.add_argument("--relabel-observable", default="Z")
    p.add_argument("--relabel-qubits", type=int)
    p.add_argument("--relabel-bandwidth", type=float, default=1.0)
    p.add_argument("--out", default="dataset")
    p.set_defaults(func=cmd_get_dataset, _path_keys=("out", "catalog"))

    p = sub.add_parser("preprocess", parents=[common], help="filter, split, scale, reduce, resample")
    p.add_argument("--input", default="dataset", help="directory holding X.npy and y.npy")
    p.add_argument("--x", help="explicit feature file (.npy or .csv)")
    p.add_argument("--y", help="explicit label file (.npy or .csv)")
    p.add_argument("--orientation", choices=("rows", "columns"), default="rows")
    p.add_argument("--task", choices=qdata.TASKS, default="classification")
    p.add_argument("--keep-labels", type=_floats)
    p.add_argument("--label-range", type=_floats)
    p.add_argument("--scale", choices=("minmax", "standardize"))
    p.add_argument("--scale-range", type=_floats, default=[-1.0, 1.0])
    p.add_argument("--pca", type=int)
    p.add_argument("--famd", action="store_true", help="not supported; reported as an error")
    p.add_argument("--undersample", action="store_true")
    p.add_argument("--oversample", action="store_true")
    p.add_argument("--split", type=float, default=0.75, help="training fraction")
    p.add_argument("--stratified", action="store_true")
    p.add_argument("--out", default="split")
    p.set_defaults(func=cmd_preprocess, _path_keys=("input", "x", "y", "out"))

    p = sub.add_parser("apply-kernel", parents=[common], help="compute training and test Gram matrices")
    p.add_argument("--input", default="split")
    p.add_argument("--kernel", default="fidelity", help=f"{', '.join(CLASSICAL_FAMILIES + QUANTUM_FAMILIES)}")
    _add_map_options(p)
    p.add_argument("--shots", type=int, default=0, help="0 means exact statevector fidelity")
    p.add_argument("--estimator", choices=("overlap", "swap"), default="overlap")
    p.add_argument("--clamp", action="store_true", help="clamp SWAP-test estimates to [0, 1]")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--coef0", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--unsquared", action="store_true", help="projected kernel with unsquared distance")
    p.add_argument("--psd-clip", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="kernel")
    p.set_defaults(func=cmd_apply_kernel, _path_keys=("input", "feature_map", "out"))

    p = sub.add_parser("optimize-kernel", parents=[common], help="tune a feature map")
    p.add_argument("--input", default="split")
    p.add_argument("--method", default="grid", help="grid, adam, anneal or genetic")
    _add_map_options(p)
    p.add_argument("--objective", choices=("alignment", "accuracy"), default="alignment")
    p.add_argument("--val-fraction", type=float, default=0.25)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--betas", type=_floats)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--batch-fraction", type=float, default=1.0)
    p.add_argument("--slots", type=int, default=2, help="genome length")
    p.add_argument("--generators", type=_words, help="comma-separated Pauli words")
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--cooling", type=float, default=0.95)
    p.add_argument("--population", type=int, default=8)
    p.add_argument("--generations", type=int, default=20)
    p.add_argument("--mutation-rate", type=float, default=0.1)
    p.add_argument("--out", default="optimized")
    p.set_defaults(func=cmd_optimize_kernel, _path_keys=("input", "feature_map", "out"))

    p = sub.add_parser("evaluate", parents=[common], help="metrics, results.jsonl and an SVG plot")
    p.add_argument("--gram", action="append", default=None, help="label=DIR (repeatable)")
    p.add_argument("--metric", action="append", type=_words, default=None, help=", ".join(METRICS))
    p.add_argument("--reference", help="kernel directory for polarity")
    p.add_argument("--classical", help="classical kernel directory for geometric difference")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--ridge", type=float, default=1e-6)
    p.add_argument("--title")
    p.add_argument("--out", default="results")
    p.set_defaults(func=cmd_evaluate, _path_keys=("reference", "classical", "out"))
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> str | None:
    """Install config-file values as parser defaults; returns the config path."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return None
    if not os.path.exists(known.config):
        raise UsageError(f"config file {known.config} does not exist")
    cfg = configparser.ConfigParser()
    try:
        cfg.read(known.config)
    except configparser.Error as exc:
        raise UsageError(f"cannot parse config {known.config}: {exc}") from None
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, sp in subparsers.choices.items():
        actions = {a.dest: a for a in sp._actions if a.dest != "help"}
        values = dict(cfg["global"]) if cfg.has_section("global") else {}
        if cfg.has_section(name):
            values.update(cfg[name])
        defaults = {}
        for key, raw in values.items():
            dest = key.replace("-", "_")
            if dest not in actions:
                if cfg.has_section(name) and key in cfg[name]:
                    raise UsageError(f"config section [{name}] has unknown option {key!r}")
                continue
            action = actions[dest]
            if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                defaults[dest] = cfg.BOOLEAN_STATES.get(raw.lower())
                if defaults[dest] is None:
                    raise UsageError(f"config option {key} expects a boolean, got {raw!r}")
            elif isinstance(action, argparse._AppendAction):
                items = [v for v in raw.splitlines() if v.strip()]
                defaults[dest] = [action.type(v) if action.type else v for v in items]
            else:
                try:
                    defaults[dest] = action.type(raw) if action.type else raw
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    raise UsageError(f"config option {key}: {exc}") from None
        sp.set_defaults(**defaults)
    return known.config


def _finalize(args) -> None:
    if args.command == "evaluate" and args.metric:
        args.metric = [m for group in args.metric for m in group]
    if args.command == "optimize-kernel" and args.steps is None:
        args.steps = 200 if args.method == "anneal" else 100


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        _log(f"qkflow: error: {exc}")
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    _finalize(args)
    ws = Workspace(args.workspace or os.environ.get(WORKSPACE_ENV) or os.getcwd())
    try:
        return args.func(args, ws)
    except UsageError as exc:
        _log(f"qkflow {args.command}: error: {exc}")
        return EXIT_USAGE
    except (DataFormatError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        _log(f"qkflow {args.command}: data error: {exc}")
        return EXIT_DATA
    except (NumericalError, OptimizationError, FloatingPointError) as exc:
        _log(f"qkflow {args.command}: numerical error: {exc}")
        return EXIT_NUMERICAL
    except (ValueError, KeyError) as exc:
        _log(f"qkflow {args.command}: error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
