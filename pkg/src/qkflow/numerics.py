"""Dense real symmetric linear algebra.

The eigensolver is a cyclic Jacobi method. Rotations are scheduled in
round-robin order so that every round touches disjoint index pairs; the
rotations of a round commute and are applied together as whole-row and
whole-column updates, which keeps the sweep cost at O(n^3) numpy work.
All tolerances are relative to the Frobenius norm of the input.
"""
from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .exceptions import ConvergenceError, NumericalError

SYMMETRY_RTOL = 1e-12
PSD_RTOL = 1e-8
JACOBI_RTOL = 1e-12
JACOBI_MAX_SWEEPS = 100


class EigenDecomposition(NamedTuple):
    """Eigenvalues sorted descending with matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def check_symmetric(A, name: str = "matrix") -> np.ndarray:
    """Return ``A`` as a float array after verifying it is square and symmetric.

    The check is relative: ``|A_ij - A_ji| <= 1e-12 * max(1, ||A||_F)``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    scale = max(1.0, float(np.linalg.norm(A)))
    asym = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    if asym > SYMMETRY_RTOL * scale:
        raise ValueError(
            f"{name} is not symmetric: max |A_ij - A_ji| = {asym:.3e} "
            f"exceeds tolerance {SYMMETRY_RTOL * scale:.3e}"
        )
    return A


@lru_cache(maxsize=64)
def _round_robin(n: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    # circle method: player 0 fixed, the rest rotate; a dummy pads odd n
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[k], players[m - 1 - k]) for k in range(m // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a < n and b < n]
        if pairs:
            p, q = (np.array(v, dtype=np.intp) for v in zip(*pairs))
            rounds.append((p, q))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _off_diagonal_norm(A: np.ndarray) -> float:
    off = A.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


def eig_sym(A) -> EigenDecomposition:
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi sweeps.

    Parameters
    ----------
    A : array_like, shape (n, n)
        Symmetric matrix. Asymmetry beyond ``1e-12 * max(1, ||A||_F)`` is rejected.

    Returns
    -------
    EigenDecomposition
        ``eigenvalues`` in descending order and ``eigenvectors`` as columns,
        so that ``A = V @ diag(t) @ V.T``.
    """
    A = check_symmetric(A)
    n = A.shape[0]
    work = 0.5 * (A + A.T)
    V = np.eye(n)
    threshold = JACOBI_RTOL * float(np.linalg.norm(A))
    rounds = _round_robin(n)
    for _ in range(JACOBI_MAX_SWEEPS + 1):
        if _off_diagonal_norm(work) <= threshold:
            break
        for p, q in rounds:
            apq = work[p, q]
            active = np.abs(apq) > 0.0
            if not np.any(active):
                continue
            app = work[p, p]
            aqq = work[q, q]
            safe = np.where(active, apq, 1.0)
            with np.errstate(over="ignore"):
                # huge theta only arises for negligible apq; t -> 0 is then exact enough
                theta = (aqq - app) / (2.0 * safe)
                t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            c = np.where(active, c, 1.0)
            s = np.where(active, s, 0.0)

            col_p = work[:, p].copy()
            col_q = work[:, q].copy()
            work[:, p] = c * col_p - s * col_q
            work[:, q] = s * col_p + c * col_q
            row_p = work[p, :].copy()
            row_q = work[q, :].copy()
            work[p, :] = c[:, None] * row_p - s[:, None] * row_q
            work[q, :] = s[:, None] * row_p + c[:, None] * row_q
            work[p, q] = 0.0
            work[q, p] = 0.0

            vp = V[:, p].copy()
            vq = V[:, q].copy()
            V[:, p] = c * vp - s * vq
            V[:, q] = s * vp + c * vq
    else:
        raise ConvergenceError(
            f"Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps "
            f"(off-diagonal norm {_off_diagonal_norm(work):.3e}, target {threshold:.3e})"
        )
    values = np.diag(work).copy()
    order = np.argsort(-values, kind="stable")
    return EigenDecomposition(values[order], V[:, order])


def _negativity_tolerance(A: np.ndarray) -> float:
    return PSD_RTOL * float(np.linalg.norm(A))


def clamp_spectrum(A) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm: negative eigenvalues set to zero.

    Already-PSD inputs are returned unchanged (as a copy).
    """
    A = check_symmetric(A)
    values, vectors = eig_sym(A)
    if A.shape[0] == 0 or values[-1] >= 0.0:
        return A.copy()
    clipped = (vectors * np.clip(values, 0.0, None)) @ vectors.T
    return 0.5 * (clipped + clipped.T)


def sqrt_psd(A) -> np.ndarray:
    """Symmetric PSD square root of a (numerically) PSD matrix.

    Eigenvalues in ``[-1e-8 * ||A||_F, 0)`` are treated as noise and clamped
    to zero; anything more negative raises :class:`NumericalError`.
    """
    A = check_symmetric(A)
    values, vectors = eig_sym(A)
    tol = _negativity_tolerance(A)
    if values.size and values[-1] < -tol:
        raise NumericalError(
            f"matrix is not positive semidefinite: eigenvalue {values[-1]:.6e} "
            f"is below the tolerance -{tol:.3e}"
        )
    roots = np.sqrt(np.clip(values, 0.0, None))
    S = (vectors * roots) @ vectors.T
    return 0.5 * (S + S.T)


def min_eigenvalue(A) -> float:
    values, _ = eig_sym(A)
    return float(values[-1])


def solve_regularized(A, b, jitter: float = 0.0) -> np.ndarray:
    """Solve ``(A + jitter * I) x = b`` by Cholesky factorization.

    ``b`` may be a vector or a matrix of right-hand sides. One step of
    iterative refinement is applied.

    Raises
    ------
    NumericalError
        If ``A + jitter * I`` is not positive definite.
    """
    A = check_symmetric(A)
    if jitter < 0:
        raise ValueError(f"jitter must be nonnegative, got {jitter}")
    b = np.asarray(b, dtype=float)
    if b.shape[0] != A.shape[0]:
        raise ValueError(f"right-hand side has {b.shape[0]} rows, matrix has order {A.shape[0]}")
    M = A + jitter * np.eye(A.shape[0])
    try:
        factor = scipy.linalg.cho_factor(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"A + {jitter:g}*I is not positive definite ({exc}); try a larger jitter"
        ) from None
    x = scipy.linalg.cho_solve(factor, b, check_finite=False)
    x = x + scipy.linalg.cho_solve(factor, b - M @ x, check_finite=False)
    if not np.all(np.isfinite(x)):
        raise NumericalError("regularized solve produced non-finite values; try a larger jitter")
    return x
