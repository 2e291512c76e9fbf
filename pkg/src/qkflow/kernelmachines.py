"""Kernel machines that consume precomputed Gram matrices.

* :func:`svm_train` / :func:`svm_predict` -- binary soft-margin SVM solved by
  SMO with maximal-violating-pair selection.
* :func:`krr_train` / :func:`krr_predict` -- kernel ridge regression.
* :func:`kpca_fit` / :func:`kpca_project` -- kernel PCA on the double-centered Gram.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import numerics
from .exceptions import ConvergenceError, NumericalError

SMO_MAX_ITER = 100_000
_TAU = 1e-12


def _square(K, name="K") -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError(f"{name} must be square, got shape {K.shape}")
    return K


def _check_binary(y) -> np.ndarray:
    y = np.asarray(y, dtype=float).reshape(-1)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError(f"SVM labels must be -1 or +1, got values {np.unique(y)}")
    return y


@dataclass(frozen=True)
class SvmModel:
    alphas: np.ndarray
    bias: float
    labels: np.ndarray
    C: float
    support_indices: np.ndarray
    iterations: int = 0
    kkt_violation: float = 0.0
    objective_history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def dual_coef(self) -> np.ndarray:
        return self.alphas * self.labels

    def dual_objective(self, K) -> float:
        return dual_objective(K, self.labels, self.alphas)

    def to_dict(self) -> dict:
        return {
            "kind": "svm",
            "alphas": self.alphas.tolist(),
            "bias": self.bias,
            "labels": self.labels.tolist(),
            "C": self.C,
            "support_indices": self.support_indices.tolist(),
            "iterations": self.iterations,
            "kkt_violation": self.kkt_violation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        return cls(
            np.asarray(d["alphas"], dtype=float),
            float(d["bias"]),
            np.asarray(d["labels"], dtype=float),
            float(d["C"]),
            np.asarray(d["support_indices"], dtype=int),
            int(d.get("iterations", 0)),
            float(d.get("kkt_violation", 0.0)),
        )


def dual_objective(K, y, alphas) -> float:
    """``sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij``."""
    ay = np.asarray(alphas) * np.asarray(y)
    return float(np.sum(alphas) - 0.5 * ay @ np.asarray(K) @ ay)


def _bias(G: np.ndarray, y: np.ndarray, alphas: np.ndarray, C: float) -> float:
    at_lower = alphas <= 0.0
    at_upper = alphas >= C
    free = ~(at_lower | at_upper)
    candidates = -y * G
    if np.any(free):
        return float(np.mean(candidates[free]))
    # no free vectors: b lies in an interval fixed by the KKT inequalities
    lower_mask = (at_lower & (y > 0)) | (at_upper & (y < 0))
    upper_mask = (at_lower & (y < 0)) | (at_upper & (y > 0))
    lo = np.max(candidates[lower_mask]) if np.any(lower_mask) else None
    hi = np.min(candidates[upper_mask]) if np.any(upper_mask) else None
    if lo is None and hi is None:
        return 0.0
    if lo is None:
        return float(hi)
    if hi is None:
        return float(lo)
    return float(0.5 * (lo + hi))


def svm_train(K, y, C: float = 1.0, tol: float = 1e-3, check_psd: bool = True, max_iter: int = SMO_MAX_ITER) -> SvmModel:
    """Train a binary SVM on a precomputed Gram matrix.

    Parameters
    ----------
    K : array_like, shape (N, N)
        Symmetric PSD Gram matrix (run :func:`qkflow.kernels.psd_clip` on
        shot-noise estimates first).
    y : array_like, shape (N,)
        Labels in {-1, +1}.
    C : float
        Box constraint.
    tol : float
        Stop when the maximal KKT violation ``m(a) - M(a)`` drops to ``tol``.

    Raises
    ------
    NumericalError
        ``K`` has an eigenvalue below ``-1e-8 * ||K||_F``.
    ConvergenceError
        ``max_iter`` pair updates without meeting ``tol``.
    """
    K = numerics.check_symmetric(_square(K), "Gram matrix")
    y = _check_binary(y)
    if K.shape[0] != y.shape[0]:
        raise ValueError(f"Gram matrix has {K.shape[0]} rows but {y.shape[0]} labels were given")
    if not C > 0:
        raise ValueError(f"C must be positive, got {C}")
    if check_psd and K.shape[0] > 1:
        lowest = numerics.min_eigenvalue(K)
        if lowest < -numerics.PSD_RTOL * np.linalg.norm(K):
            raise NumericalError(
                f"Gram matrix is not PSD (smallest eigenvalue {lowest:.3e}); apply psd_clip first"
            )

    N = y.shape[0]
    alphas = np.zeros(N)
    G = -np.ones(N)  # gradient of 1/2 a'Qa - e'a
    diag = np.diag(K)
    history = [0.0]
    violation = np.inf
    iterations = 0
    while True:
        score = -y * G
        up = ((y > 0) & (alphas < C)) | ((y < 0) & (alphas > 0))
        low = ((y > 0) & (alphas > 0)) | ((y < 0) & (alphas < C))
        if not np.any(up) or not np.any(low):
            violation = 0.0
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        j = int(np.flatnonzero(low)[np.argmin(score[low])])
        violation = float(score[i] - score[j])
        if violation <= tol:
            break
        if iterations >= max_iter:
            raise ConvergenceError(
                f"SMO did not converge in {max_iter} pair updates (KKT violation {violation:.3e} > tol {tol:g})"
            )
        # move along a_i += y_i*lam, a_j -= y_j*lam; keeps sum(a*y) fixed
        limit_i = C - alphas[i] if y[i] > 0 else alphas[i]
        limit_j = alphas[j] if y[j] > 0 else C - alphas[j]
        limit = min(limit_i, limit_j)
        eta = diag[i] + diag[j] - 2.0 * K[i, j]
        lam = limit if eta <= _TAU else min(violation / eta, limit)
        alphas[i] += y[i] * lam
        alphas[j] -= y[j] * lam
        for k in (i, j):
            if alphas[k] < 1e-12 * C:
                alphas[k] = 0.0
            elif alphas[k] > C * (1 - 1e-12):
                alphas[k] = C
        G += lam * y * (K[:, i] - K[:, j])
        iterations += 1
        history.append(-0.5 * float(alphas @ (G - 1.0)))

    bias = _bias(G, y, alphas, C)
    return SvmModel(
        alphas=alphas,
        bias=bias,
        labels=y,
        C=float(C),
        support_indices=np.flatnonzero(alphas > 0),
        iterations=iterations,
        kkt_violation=max(violation, 0.0),
        objective_history=tuple(history),
    )


def svm_predict(model: SvmModel, K_cross) -> tuple[np.ndarray, np.ndarray]:
    """Labels and margins for test points.

    ``margin_j = sum_i a_i y_i K_cross[j, i] + b``; zero margins predict +1.
    """
    K_cross = np.atleast_2d(np.asarray(K_cross, dtype=float))
    if K_cross.shape[1] != model.alphas.shape[0]:
        raise ValueError(
            f"cross Gram has {K_cross.shape[1]} columns, model was trained on {model.alphas.shape[0]} points"
        )
    margins = K_cross @ model.dual_coef + model.bias
    labels = np.where(margins >= 0, 1.0, -1.0)
    return labels, margins


@dataclass(frozen=True)
class KrrModel:
    alphas: np.ndarray
    ridge: float

    def to_dict(self) -> dict:
        return {"kind": "krr", "alphas": self.alphas.tolist(), "ridge": self.ridge}

    @classmethod
    def from_dict(cls, d: dict) -> "KrrModel":
        return cls(np.asarray(d["alphas"], dtype=float), float(d["ridge"]))


def krr_train(K, y, ridge: float = 0.0) -> KrrModel:
    """Solve ``(K + ridge * I) a = y``."""
    K = _square(K)
    y = np.asarray(y, dtype=float).reshape(-1)
    if K.shape[0] != y.shape[0]:
        raise ValueError(f"Gram matrix has {K.shape[0]} rows but {y.shape[0]} targets were given")
    return KrrModel(numerics.solve_regularized(K, y, ridge), float(ridge))


def krr_predict(model: KrrModel, K_cross) -> np.ndarray:
    K_cross = np.atleast_2d(np.asarray(K_cross, dtype=float))
    if K_cross.shape[1] != model.alphas.shape[0]:
        raise ValueError(
            f"cross Gram has {K_cross.shape[1]} columns, model was trained on {model.alphas.shape[0]} points"
        )
    return K_cross @ model.alphas


@dataclass(frozen=True)
class KpcaModel:
    """Top-``k`` kernel principal components.

    ``coefficients[:, c]`` is eigenvector ``c`` of the centered Gram divided
    by the square root of its eigenvalue, so projecting the training set
    gives features with variance ``eigenvalue / N``.
    """

    coefficients: np.ndarray
    eigenvalues: np.ndarray
    train_size: int
    train_column_means: np.ndarray
    train_mean: float

    @property
    def components(self) -> np.ndarray:
        return self.coefficients

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in d.items()} | {"kind": "kpca"}


def center_gram(K) -> np.ndarray:
    """``K - 1K/N - K1/N + 1K1/N^2``."""
    K = _square(K)
    col = K.mean(axis=0)
    row = K.mean(axis=1)
    return K - col[None, :] - row[:, None] + K.mean()


def kpca_fit(K, k: int) -> KpcaModel:
    K = numerics.check_symmetric(_square(K), "Gram matrix")
    N = K.shape[0]
    if not 1 <= k <= N:
        raise ValueError(f"number of components must be in [1, {N}], got {k}")
    centered = center_gram(K)
    centered = 0.5 * (centered + centered.T)
    values, vectors = numerics.eig_sym(centered)
    values = np.clip(values[:k], 0.0, None)
    coef = np.zeros((N, k))
    positive = values > 0
    coef[:, positive] = vectors[:, :k][:, positive] / np.sqrt(values[positive])
    return KpcaModel(coef, values, N, K.mean(axis=0), float(K.mean()))


def kpca_project(model: KpcaModel, K_cross) -> np.ndarray:
    """Project points given their kernel rows against the training set (M x N)."""
    K_cross = np.atleast_2d(np.asarray(K_cross, dtype=float))
    if K_cross.shape[1] != model.train_size:
        raise ValueError(f"cross Gram has {K_cross.shape[1]} columns, model expects {model.train_size}")
    centered = (
        K_cross
        - model.train_column_means[None, :]
        - K_cross.mean(axis=1, keepdims=True)
        + model.train_mean
    )
    return centered @ model.coefficients


def save_model(path, model) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=2)


def load_model(path):
    with open(path) as fh:
        d = json.load(fh)
    kind = d.get("kind")
    if kind == "svm":
        return SvmModel.from_dict(d)
    if kind == "krr":
        return KrrModel.from_dict(d)
    raise ValueError(f"unknown model kind {kind!r}")
