"""Datasets: synthetic generators, quantum relabelling, file loading and preprocessing.

Samples are rows (``X`` has shape ``(N, d)``). Every transformation returns a
new :class:`Dataset` whose ``provenance`` is the input's with one entry
appended; inputs are never modified.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import numerics
from .arrayio import load_array, load_csv, save_array, save_csv
from .exceptions import DataFormatError
from .featuremaps import FeatureMap, bind
from .simulator import expectation_pauli, run_circuit

__all__ = [
    "Dataset",
    "SplitDataset",
    "generate",
    "quantum_relabel",
    "load_array",
    "save_array",
    "load_csv",
    "save_csv",
    "load_matrix",
    "load_catalog",
    "load_from_catalog",
    "filter_labels",
    "PcaTransform",
    "pca_reduce",
    "ScaleTransform",
    "scale_features",
    "resample",
    "split",
]

TASKS = ("classification", "regression")
GENERATORS = ("blobs", "circles", "linear_separable")


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    task: str = "classification"
    provenance: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.ndim != 2:
            raise DataFormatError(f"feature matrix must be 2-D, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise DataFormatError(f"X has {X.shape[0]} rows but y has {y.shape[0]} labels")
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "provenance", tuple(self.provenance))

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def num_features(self) -> int:
        return self.X.shape[1]

    def derive(self, step: dict, **changes) -> "Dataset":
        return replace(self, provenance=self.provenance + (step,), **changes)

    def class_counts(self) -> dict[float, int]:
        labels, counts = np.unique(self.y, return_counts=True)
        return {float(k): int(c) for k, c in zip(labels, counts)}

    def summary(self) -> dict:
        out = {"samples": len(self), "features": self.num_features, "task": self.task}
        if self.task == "classification":
            out["class_counts"] = {str(k): v for k, v in self.class_counts().items()}
        else:
            out["label_range"] = [float(self.y.min()), float(self.y.max())]
        return out


@dataclass(frozen=True)
class SplitDataset:
    train: Dataset
    test: Dataset
    seed: int
    ratio: float
    train_indices: np.ndarray = field(repr=False, default=None)
    test_indices: np.ndarray = field(repr=False, default=None)


# ---------------------------------------------------------------------------
# generators


def _balanced_labels(N: int) -> np.ndarray:
    return np.repeat([-1.0, 1.0], N // 2)


def generate(kind: str, N: int, d: int, noise: float = 0.1, seed: int = 0) -> Dataset:
    """Synthetic binary dataset with ``N/2`` samples per class.

    ``blobs``
        Gaussian clouds (std ``noise``) around ``-0.5 * 1`` and ``+0.5 * 1``.
    ``circles``
        Concentric circles of radius 0.5 and 1 in the first two features,
        with Gaussian noise on every feature. Requires ``d >= 2``.
    ``linear_separable``
        Uniform points in ``[-1, 1]^d`` (jittered by ``noise``), labelled by
        a random hyperplane through the origin. Points within 0.05 of the
        hyperplane are redrawn, so the classes are strictly separable.
    """
    if kind not in GENERATORS:
        raise ValueError(f"unknown generator {kind!r}; expected one of {GENERATORS}")
    if N < 4 or N % 2:
        raise ValueError(f"N must be an even number >= 4, got {N}")
    if d < 1:
        raise ValueError(f"d must be positive, got {d}")
    if noise < 0:
        raise ValueError(f"noise must be non-negative, got {noise}")
    rng = np.random.default_rng(seed)
    y = _balanced_labels(N)
    if kind == "blobs":
        X = 0.5 * y[:, None] * np.ones(d) + noise * rng.standard_normal((N, d))
    elif kind == "circles":
        if d < 2:
            raise ValueError("circles needs at least two features")
        angles = rng.uniform(0, 2 * np.pi, N)
        radius = np.where(y > 0, 0.5, 1.0)
        X = noise * rng.standard_normal((N, d))
        X[:, 0] += radius * np.cos(angles)
        X[:, 1] += radius * np.sin(angles)
    else:
        normal = rng.standard_normal(d)
        normal /= np.linalg.norm(normal)
        margin = 0.05
        wanted = {-1.0: N // 2, 1.0: N // 2}
        rows = {-1.0: [], 1.0: []}
        while wanted[-1.0] or wanted[1.0]:
            batch = rng.uniform(-1, 1, (2 * N, d)) + noise * rng.standard_normal((2 * N, d))
            for x in batch:
                s = float(x @ normal)
                if abs(s) < margin:
                    continue
                label = 1.0 if s > 0 else -1.0
                if wanted[label]:
                    rows[label].append(x)
                    wanted[label] -= 1
        X = np.array(rows[-1.0] + rows[1.0])
    step = {"op": "generate", "kind": kind, "N": N, "d": d, "noise": noise, "seed": seed}
    return Dataset(X, y, "classification", (step,))


def quantum_relabel(X, fm: FeatureMap, observable: str, theta=None) -> Dataset:
    """Label points by the median of ``<phi(x)|P|phi(x)>``.

    ``y_i = +1`` when the score is at least the median, else ``-1``. A
    leading ``-`` on ``observable`` negates the scores.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    sign = 1.0
    word = observable
    if word.startswith("-"):
        sign, word = -1.0, word[1:]
    scores = np.array(
        [sign * expectation_pauli(run_circuit(bind(fm, x, theta), fm.num_qubits), word) for x in X]
    )
    if np.ptp(scores) == 0:
        raise ValueError("degenerate relabeling: every point has the same observable value")
    y = np.where(scores >= np.median(scores), 1.0, -1.0)
    step = {"op": "quantum_relabel", "observable": observable, "map": fm.kind, "num_qubits": fm.num_qubits}
    return Dataset(X, y, "classification", (step,))


# ---------------------------------------------------------------------------
# files


def load_matrix(path) -> np.ndarray:
    """Load ``.npy`` or ``.csv`` depending on the file extension."""
    path = os.fspath(path)
    if path.lower().endswith(".csv"):
        return load_csv(path)
    return load_array(path)


def load_catalog(path) -> dict:
    """Read a JSON catalog mapping names to ``{x_path, y_path, task}``.

    Relative paths are resolved against the catalog's directory.
    """
    with open(path) as fh:
        try:
            catalog = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: invalid catalog JSON ({exc})") from None
    base = os.path.dirname(os.path.abspath(path))
    out = {}
    for name, entry in catalog.items():
        if not isinstance(entry, dict) or "x_path" not in entry or "y_path" not in entry:
            raise DataFormatError(f"{path}: catalog entry {name!r} needs x_path and y_path")
        out[name] = {
            "x_path": os.path.join(base, entry["x_path"]),
            "y_path": os.path.join(base, entry["y_path"]),
            "task": entry.get("task", "classification"),
            "orientation": entry.get("orientation", "rows"),
        }
    return out


def load_from_catalog(name: str, catalog: dict, orientation: str | None = None) -> Dataset:
    """Load a catalog entry. ``orientation='columns'`` means the file stores ``d x N``."""
    if name not in catalog:
        raise KeyError(f"dataset {name!r} is not in the catalog (known: {sorted(catalog)})")
    entry = catalog[name]
    orientation = orientation or entry.get("orientation", "rows")
    if orientation not in ("rows", "columns"):
        raise ValueError(f"orientation must be 'rows' or 'columns', got {orientation!r}")
    X = load_matrix(entry["x_path"])
    y = load_matrix(entry["y_path"]).reshape(-1)
    if orientation == "columns":
        X = X.T
    step = {"op": "load", "name": name, "orientation": orientation}
    return Dataset(X, y, entry.get("task", "classification"), (step,))


# ---------------------------------------------------------------------------
# preprocessing


def filter_labels(ds: Dataset, keep=None, between: tuple[float, float] | None = None) -> Dataset:
    """Keep rows whose label is in ``keep`` or in the closed interval ``between``.

    Exactly one of the two selectors must be given. Two surviving classes
    are remapped to -1/+1 in ascending order of the original label.
    """
    if (keep is None) == (between is None):
        raise ValueError("give exactly one of a label set or a label range")
    if between is not None:
        lo, hi = float(between[0]), float(between[1])
        mask = (ds.y >= lo) & (ds.y <= hi)
        selection = [lo, hi]
    else:
        values = np.asarray(list(keep), dtype=float)
        mask = np.isin(ds.y, values)
        selection = sorted(float(v) for v in values)
    if not np.any(mask):
        raise ValueError(f"no rows have labels in {selection}")
    y = ds.y[mask]
    classes = np.unique(y)
    if ds.task == "classification" and classes.size < 2:
        raise ValueError(f"label selection {selection} leaves a single class")
    if ds.task == "classification" and classes.size == 2:
        y = np.where(y == classes[0], -1.0, 1.0)
    step = {"op": "filter_labels", "keep": selection, "kept_rows": int(mask.sum())}
    return ds.derive(step, X=ds.X[mask], y=y)


@dataclass(frozen=True)
class PcaTransform:
    mean: np.ndarray
    components: np.ndarray  # d x k, columns are principal directions
    variances: np.ndarray

    def apply(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) @ self.components

    def inverse(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=float) @ self.components.T + self.mean

    def to_dict(self) -> dict:
        return {k: v.tolist() for k, v in vars(self).items()}


def pca_reduce(ds: Dataset, k: int) -> tuple[Dataset, PcaTransform]:
    """Project onto the top-``k`` principal components of the (training) data."""
    d = ds.num_features
    if not 1 <= k <= d:
        raise ValueError(f"number of components must be in [1, {d}], got {k}")
    mean = ds.X.mean(axis=0)
    centered = ds.X - mean
    cov = centered.T @ centered / max(len(ds) - 1, 1)
    cov = 0.5 * (cov + cov.T)
    values, vectors = numerics.eig_sym(cov)
    transform = PcaTransform(mean, vectors[:, :k].copy(), np.clip(values[:k], 0.0, None))
    step = {"op": "pca", "k": k}
    return ds.derive(step, X=transform.apply(ds.X)), transform


@dataclass(frozen=True)
class ScaleTransform:
    mode: str
    offset: np.ndarray
    scale: np.ndarray
    target: tuple[float, float] = (-1.0, 1.0)

    def apply(self, X) -> np.ndarray:
        Z = (np.asarray(X, dtype=float) - self.offset) / self.scale
        if self.mode == "minmax":
            lo, hi = self.target
            Z = lo + (hi - lo) * Z
        return Z

    def to_dict(self) -> dict:
        return {"mode": self.mode, "offset": self.offset.tolist(), "scale": self.scale.tolist(), "target": list(self.target)}


def scale_features(ds: Dataset, mode: str = "minmax", lo: float = -1.0, hi: float = 1.0) -> tuple[Dataset, ScaleTransform]:
    """Column-wise scaling fitted on ``ds``.

    ``minmax`` maps each column's range onto ``[lo, hi]`` (constant columns
    map to ``lo``); ``standardize`` gives zero mean and unit variance.
    """
    X = ds.X
    if mode == "minmax":
        if not lo < hi:
            raise ValueError(f"minmax needs lo < hi, got [{lo}, {hi}]")
        offset = X.min(axis=0)
        span = X.max(axis=0) - offset
        scale = np.where(span > 0, span, 1.0)
    elif mode == "standardize":
        offset = X.mean(axis=0)
        scale = X.std(axis=0)
        constant = np.flatnonzero(scale == 0)
        if constant.size:
            raise ValueError(f"cannot standardize constant column(s) {constant.tolist()}")
    else:
        raise ValueError(f"unknown scaling mode {mode!r}; expected 'minmax' or 'standardize'")
    transform = ScaleTransform(mode, offset, scale, (float(lo), float(hi)))
    step = {"op": "scale", "mode": mode} | ({"range": [lo, hi]} if mode == "minmax" else {})
    return ds.derive(step, X=transform.apply(X)), transform


def resample(ds: Dataset, mode: str, seed: int = 0) -> Dataset:
    """Balance classes by undersampling majorities or oversampling minorities."""
    if ds.task != "classification":
        raise ValueError("resampling needs a classification dataset")
    if mode not in ("undersample", "oversample"):
        raise ValueError(f"unknown resampling mode {mode!r}")
    classes, counts = np.unique(ds.y, return_counts=True)
    if classes.size < 2:
        raise ValueError("resampling needs at least two classes")
    rng = np.random.default_rng(seed)
    target = counts.min() if mode == "undersample" else counts.max()
    chosen = []
    for label, count in zip(classes, counts):
        idx = np.flatnonzero(ds.y == label)
        if count == target:
            chosen.append(idx)
        elif mode == "undersample":
            chosen.append(np.sort(rng.choice(idx, size=target, replace=False)))
        else:
            chosen.append(np.concatenate([idx, rng.choice(idx, size=target - count, replace=True)]))
    order = np.concatenate(chosen)
    step = {"op": "resample", "mode": mode, "seed": seed, "per_class": int(target)}
    return ds.derive(step, X=ds.X[order], y=ds.y[order])


def split(ds: Dataset, ratio: float = 0.75, seed: int = 0, stratified: bool = False) -> SplitDataset:
    """Random train/test split with ``round(ratio * N)`` training rows.

    With ``stratified=True`` each class is split separately by the same
    ratio, so class proportions hold within one sample per class.
    """
    if not 0 < ratio < 1:
        raise ValueError(f"split ratio must lie strictly between 0 and 1, got {ratio}")
    N = len(ds)
    rng = np.random.default_rng(seed)
    if stratified:
        if ds.task != "classification":
            raise ValueError("stratified splitting needs a classification dataset")
        train_parts, test_parts = [], []
        for label in np.unique(ds.y):
            idx = rng.permutation(np.flatnonzero(ds.y == label))
            cut = int(round(ratio * idx.size))
            train_parts.append(idx[:cut])
            test_parts.append(idx[cut:])
        train_idx = np.sort(np.concatenate(train_parts))
        test_idx = np.sort(np.concatenate(test_parts))
    else:
        perm = rng.permutation(N)
        cut = int(round(ratio * N))
        train_idx, test_idx = np.sort(perm[:cut]), np.sort(perm[cut:])
    if train_idx.size == 0 or test_idx.size == 0:
        raise ValueError(f"split ratio {ratio} on {N} samples leaves an empty side")
    step = {"op": "split", "ratio": ratio, "seed": seed, "stratified": stratified}
    train = ds.derive(step | {"side": "train"}, X=ds.X[train_idx], y=ds.y[train_idx])
    test = ds.derive(step | {"side": "test"}, X=ds.X[test_idx], y=ds.y[test_idx])
    return SplitDataset(train, test, seed, ratio, train_idx, test_idx)
