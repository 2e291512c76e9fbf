"""Kernel quality diagnostics.

``geometric_difference``, ``approximate_dimension`` and ``model_complexity``
follow the definitions of Huang et al., "Power of data in quantum machine
learning" (Nat. Commun. 12, 2631, 2021):

    g(K_c || K_q) = sqrt(|| sqrt(K_q) (K_c + eps I)^-1 sqrt(K_q) ||_inf)
    d(K)          = sum_k 1/(N-k+1) sum_{l>=k} t_l     (t_1 >= ... >= t_N)
    s(K, y)       = y^T (K + eps I)^-1 y

Kernels are rescaled to trace ``N`` before ``g`` and ``d`` unless
``normalize=False``. Every default that affects a reported number is
recorded in the metadata of the produced :class:`EvaluationRecord`.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import numerics
from .exceptions import NumericalError
from .kernelmachines import krr_predict, krr_train, svm_predict, svm_train

RELATIVE_EPS = 1e-7


@dataclass(frozen=True)
class EvaluationRecord:
    label: str
    metric_name: str
    value: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"metric {self.metric_name!r} produced a non-finite value {self.value}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "EvaluationRecord":
        d = json.loads(line)
        return cls(d["label"], d["metric_name"], float(d["value"]), d.get("meta", {}))


def write_records(path, records, append: bool = False) -> None:
    with open(path, "a" if append else "w") as fh:
        for record in records:
            fh.write(record.to_json() + "\n")


def read_records(path) -> list[EvaluationRecord]:
    with open(path) as fh:
        return [EvaluationRecord.from_json(line) for line in fh if line.strip()]


def fingerprint(*arrays) -> str:
    """Short content hash of one or more arrays, used as a dataset identifier."""
    h = hashlib.sha256()
    for arr in arrays:
        arr = np.ascontiguousarray(np.asarray(arr, dtype=float))
        h.update(str(arr.shape).encode())
        h.update(arr.tobytes())
    return h.hexdigest()[:16]


def _matrix(K, name="K") -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.ndim != 2:
        raise ValueError(f"{name} must be a matrix, got shape {K.shape}")
    return K


def _trace_normalized(K: np.ndarray) -> np.ndarray:
    trace = np.trace(K)
    if trace <= 0:
        raise ValueError(f"cannot normalize a kernel with trace {trace}")
    return K * (K.shape[0] / trace)


def polarity(K1, K2) -> float:
    """Frobenius inner product ``sum_ij K1_ij K2_ij``."""
    K1, K2 = _matrix(K1, "K1"), _matrix(K2, "K2")
    if K1.shape != K2.shape:
        raise ValueError(f"shape mismatch: {K1.shape} vs {K2.shape}")
    return float(np.sum(K1 * K2))


def target_alignment(K, y) -> float:
    """``<K, yy^T>_F / (||K||_F ||yy^T||_F)``, in [-1, 1]."""
    K = _matrix(K)
    y = np.asarray(y, dtype=float).reshape(-1)
    if K.shape != (y.shape[0], y.shape[0]):
        raise ValueError(f"Gram shape {K.shape} does not match {y.shape[0]} labels")
    k_norm = np.linalg.norm(K)
    y_norm = float(y @ y)  # ||yy^T||_F = ||y||^2
    if k_norm == 0 or y_norm == 0:
        raise ValueError("target alignment is undefined for a zero kernel or zero labels")
    return float(y @ K @ y / (k_norm * y_norm))


def default_regularization(K) -> float:
    K = np.asarray(K, dtype=float)
    return RELATIVE_EPS * float(np.trace(K)) / K.shape[0]


def geometric_difference(K_classical, K_quantum, eps: float | None = None, normalize: bool = True) -> float:
    """Geometric difference ``g(K_c || K_q)``.

    Parameters
    ----------
    K_classical, K_quantum : array_like, shape (N, N)
        PSD Gram matrices on the same points.
    eps : float, optional
        Jitter added to ``K_classical`` before inversion. Defaults to
        ``1e-7 * trace(K_c) / N`` (after normalization).
    normalize : bool
        Rescale both kernels to trace ``N`` first.
    """
    Kc = numerics.check_symmetric(K_classical, "classical Gram")
    Kq = numerics.check_symmetric(K_quantum, "quantum Gram")
    if Kc.shape != Kq.shape:
        raise ValueError(f"shape mismatch: {Kc.shape} vs {Kq.shape}")
    if normalize:
        Kc, Kq = _trace_normalized(Kc), _trace_normalized(Kq)
    if eps is None:
        eps = default_regularization(Kc)
    root = numerics.sqrt_psd(Kq)
    inner = root @ numerics.solve_regularized(Kc, root, eps)
    inner = 0.5 * (inner + inner.T)
    top = numerics.eig_sym(inner).eigenvalues[0]
    return float(np.sqrt(max(top, 0.0)))


def approximate_dimension(K, normalize: bool = True) -> float:
    """Effective dimension ``sum_k 1/(N-k+1) sum_{l>=k} t_l`` of the spectrum of ``K``."""
    K = numerics.check_symmetric(K)
    if normalize:
        K = _trace_normalized(K)
    values = numerics.eig_sym(K).eigenvalues
    tol = numerics.PSD_RTOL * np.linalg.norm(K)
    if values.size and values[-1] < -tol:
        raise NumericalError(
            f"approximate dimension needs a PSD kernel; eigenvalue {values[-1]:.3e} is below -{tol:.3e}"
        )
    values = np.clip(values, 0.0, None)
    N = values.shape[0]
    tails = np.cumsum(values[::-1])[::-1]  # tails[k] = sum_{l>=k} t_l
    weights = 1.0 / (N - np.arange(N))
    return float(np.sum(weights * tails))


def model_complexity(K, y, eps: float | None = None) -> float:
    """``y^T (K + eps I)^-1 y``; ``eps`` defaults to ``1e-7 * trace(K) / N``."""
    K = numerics.check_symmetric(K)
    y = np.asarray(y, dtype=float).reshape(-1)
    if eps is None:
        eps = default_regularization(K)
    return float(y @ numerics.solve_regularized(K, y, eps))


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true).reshape(-1)
    y_pred = np.asarray(y_pred).reshape(-1)
    return float(np.mean(y_true == y_pred))


def evaluate_predictor(
    kind: str,
    K_train,
    y_train,
    K_cross,
    y_test,
    hyper: dict | None = None,
    label: str = "",
    meta: dict | None = None,
) -> list[EvaluationRecord]:
    """Train on ``K_train`` and score on training and test points.

    ``kind='svm'`` yields ``train_accuracy`` and ``test_accuracy`` records;
    ``kind='krr'`` yields ``train_mse`` and ``test_mse``. ``hyper`` may set
    ``C`` and ``tol`` (SVM) or ``ridge`` (KRR).
    """
    hyper = dict(hyper or {})
    base_meta = {
        "predictor": kind,
        "hyper": hyper,
        "train_fingerprint": fingerprint(K_train, y_train),
        "test_fingerprint": fingerprint(K_cross, y_test),
        **(meta or {}),
    }
    K_train = np.asarray(K_train, dtype=float)
    if kind == "svm":
        model = svm_train(K_train, y_train, C=hyper.get("C", 1.0), tol=hyper.get("tol", 1e-3))
        train_pred, _ = svm_predict(model, K_train)
        test_pred, _ = svm_predict(model, K_cross)
        values = {"train_accuracy": accuracy(y_train, train_pred), "test_accuracy": accuracy(y_test, test_pred)}
    elif kind == "krr":
        model = krr_train(K_train, y_train, hyper.get("ridge", 1e-6))
        train_pred = krr_predict(model, K_train)
        test_pred = krr_predict(model, K_cross)
        values = {
            "train_mse": float(np.mean((train_pred - np.asarray(y_train)) ** 2)),
            "test_mse": float(np.mean((test_pred - np.asarray(y_test)) ** 2)),
        }
    else:
        raise ValueError(f"unknown predictor {kind!r}; expected 'svm' or 'krr'")
    return [EvaluationRecord(label, name, value, dict(base_meta)) for name, value in values.items()]
