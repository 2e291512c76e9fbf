"""Classical and quantum kernel functions and Gram-matrix assembly.

Classical families follow their textbook closed forms::

    linear      x . x'
    polynomial  (x . x' + b) ** r
    rbf         exp(-alpha * ||x - x'||)        (unsquared norm)
    equality    1 - delta(x, x')

``equality`` is evaluated exactly as written, so identical points score 0
and every distinct pair scores 1. Note that the limit of
``exp(-n ||x - x'||)`` as ``n -> inf`` is ``delta`` itself, not ``1 - delta``;
the function here keeps the ``1 - delta`` form.

Quantum fidelity kernels compute ``|<phi(x)|phi(x')>|^2`` either exactly or
from simulated measurement shots (overlap test on the composed circuit
``U(x')^dagger U(x)``, or the SWAP-test ancilla statistics).
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import numerics
from .arrayio import load_array, save_array
from .featuremaps import FeatureMap, bind
from .simulator import (
    StateVector,
    _apply_raw,
    bloch_vector,
    expectation_pauli,
    reduced_dm,
    run_circuit,
    sample_bitstrings,
    validate_pauli_word,
)

CLASSICAL_FAMILIES = ("linear", "polynomial", "rbf", "equality")
QUANTUM_FAMILIES = ("fidelity", "projected")
FIDELITY_MODES = ("exact", "overlap", "swap")


@dataclass(frozen=True)
class KernelSpec:
    """Complete description of a kernel, classical or quantum.

    Only the fields relevant to ``family`` are read. ``theta`` holds the
    trainable parameters of ``feature_map`` (zeros when omitted).
    """

    family: str
    degree: int = 2
    coef0: float = 1.0
    alpha: float = 1.0
    mode: str = "exact"
    shots: int = 1024
    seed: int = 0
    clamp: bool = False
    feature_map: FeatureMap | None = None
    theta: tuple[float, ...] | None = None
    gamma: float = 1.0
    observables: tuple[str, ...] | None = None
    squared_norm: bool = True
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.family not in CLASSICAL_FAMILIES + QUANTUM_FAMILIES:
            raise ValueError(
                f"unknown kernel family {self.family!r}; expected one of {CLASSICAL_FAMILIES + QUANTUM_FAMILIES}"
            )
        if self.family == "polynomial" and (int(self.degree) != self.degree or self.degree < 1):
            raise ValueError(f"polynomial degree must be a positive integer, got {self.degree}")
        if self.family == "rbf" and not self.alpha > 0:
            raise ValueError(f"rbf alpha must be positive, got {self.alpha}")
        if self.family in QUANTUM_FAMILIES:
            if self.feature_map is None:
                raise ValueError(f"{self.family} kernel requires a feature map")
            if self.theta is not None:
                object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
                if len(self.theta) != self.feature_map.num_params:
                    raise ValueError(
                        f"theta has length {len(self.theta)}, feature map has {self.feature_map.num_params} parameters"
                    )
        if self.family == "fidelity":
            if self.mode not in FIDELITY_MODES:
                raise ValueError(f"unknown fidelity mode {self.mode!r}; expected one of {FIDELITY_MODES}")
            if self.mode != "exact" and (int(self.shots) != self.shots or self.shots < 1):
                raise ValueError(f"shots must be a positive integer, got {self.shots}")
        if self.family == "projected" and not self.gamma > 0:
            raise ValueError(f"projected kernel gamma must be positive, got {self.gamma}")

    @property
    def theta_array(self) -> np.ndarray:
        if self.theta is None:
            return self.feature_map.default_theta()
        return np.asarray(self.theta, dtype=float)

    def to_dict(self) -> dict:
        d: dict = {"family": self.family}
        if self.family == "polynomial":
            d.update(degree=int(self.degree), coef0=self.coef0)
        elif self.family == "rbf":
            d.update(alpha=self.alpha, distance="euclidean")
        elif self.family == "fidelity":
            d["mode"] = self.mode
            if self.mode != "exact":
                d.update(shots=int(self.shots), seed=int(self.seed))
            if self.mode == "swap":
                d["clamp"] = self.clamp
        elif self.family == "projected":
            d.update(
                gamma=self.gamma,
                squared_norm=self.squared_norm,
                observables=list(self.observables) if self.observables else None,
            )
        if self.feature_map is not None:
            d["feature_map"] = self.feature_map.to_dict()
            d["theta"] = list(self.theta_array)
        d.update(self.extra)
        return d


# ---------------------------------------------------------------------------
# single-pair kernels


def classical_kernel(spec: KernelSpec, x, x2) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    x2 = np.asarray(x2, dtype=float).reshape(-1)
    if x.shape != x2.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {x2.shape[0]}")
    family = spec.family
    if family == "linear":
        return float(np.dot(x, x2))
    if family == "polynomial":
        return float((np.dot(x, x2) + spec.coef0) ** int(spec.degree))
    if family == "rbf":
        return float(np.exp(-spec.alpha * np.linalg.norm(x - x2)))
    if family == "equality":
        # exact representation equality, deliberately not fuzzy
        return 0.0 if x.tobytes() == x2.tobytes() else 1.0
    raise ValueError(f"{family!r} is not a classical kernel family")


def encode(fm: FeatureMap, x, theta=None) -> StateVector:
    """``|phi(x)> = U(x; theta)|0...0>``."""
    return run_circuit(bind(fm, x, theta), fm.num_qubits)


def _fidelity_states(a: StateVector, b: StateVector) -> float:
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def fidelity_exact(fm: FeatureMap, x, x2, theta=None) -> float:
    """``|<phi(x)|phi(x')>|^2`` from exact amplitudes."""
    return _fidelity_states(encode(fm, x, theta), encode(fm, x2, theta))


def _uncompute(state: StateVector, gates) -> StateVector:
    amps = state.amplitudes
    n = state.num_qubits
    for gate in reversed(gates):
        amps = _apply_raw(amps, gate.inverse(), n)
    return StateVector(n, amps)


def _overlap_from_state(state: StateVector, gates_other, shots: int, seed: int) -> float:
    composed = _uncompute(state, gates_other)
    counts = sample_bitstrings(composed, shots, seed)
    return counts.get(0, 0) / shots


def overlap_test(fm: FeatureMap, x, x2, theta=None, shots: int = 1024, seed: int = 0) -> float:
    """Frequency of the all-zeros outcome after running ``U(x')^dagger U(x)`` on ``|0...0>``."""
    return _overlap_from_state(encode(fm, x, theta), bind(fm, x2, theta), shots, seed)


def _swap_from_fidelity(f: float, shots: int, seed: int, clamp: bool) -> float:
    p0 = min(max(0.5 * (1.0 + f), 0.0), 1.0)
    ancilla = StateVector(1, np.array([np.sqrt(p0), np.sqrt(1.0 - p0)]))
    p0_hat = sample_bitstrings(ancilla, shots, seed).get(0, 0) / shots
    estimate = 2.0 * p0_hat - 1.0
    return max(estimate, 0.0) if clamp else estimate


def swap_test(fm: FeatureMap, x, x2, theta=None, shots: int = 1024, seed: int = 0, clamp: bool = False) -> float:
    """SWAP-test estimate ``2 p0_hat - 1`` with ancilla ``P(0) = (1 + F) / 2``.

    The ancilla statistics are simulated directly from the exact fidelity
    rather than on the ``2n + 1`` qubit register. The estimate can be
    negative under shot noise unless ``clamp`` is set.
    """
    return _swap_from_fidelity(fidelity_exact(fm, x, x2, theta), shots, seed, clamp)


def default_observables(n: int) -> tuple[str, ...]:
    """X, Y, Z on each qubit in turn."""
    return tuple("".join(p if k == q else "I" for k in range(n)) for q in range(n) for p in "XYZ")


def _single_site(word: str) -> tuple[int, str] | None:
    support = [(k, p) for k, p in enumerate(word) if p != "I"]
    return support[0] if len(support) == 1 else None


def _features_from_state(state: StateVector, observables) -> np.ndarray:
    n = state.num_qubits
    blochs: dict[int, np.ndarray] = {}
    out = np.empty(len(observables))
    for k, word in enumerate(observables):
        validate_pauli_word(word, n)
        site = _single_site(word)
        if site is None:
            out[k] = expectation_pauli(state, word)
            continue
        q, p = site
        if q not in blochs:
            blochs[q] = bloch_vector(reduced_dm(state, q))
        out[k] = blochs[q]["XYZ".index(p)]
    return out


def projected_features(fm: FeatureMap, x, theta=None, observables=None) -> np.ndarray:
    """Expectation values ``<phi(x)|P|phi(x)>`` for each observable.

    Single-qubit observables are read off the one-qubit reduced density
    matrices; the default is X, Y, Z on every qubit (length ``3n``).
    """
    observables = default_observables(fm.num_qubits) if observables is None else tuple(observables)
    return _features_from_state(encode(fm, x, theta), observables)


def _gaussian(f1: np.ndarray, f2: np.ndarray, gamma: float, squared_norm: bool) -> float:
    diff = f1 - f2
    dist = float(np.dot(diff, diff))
    if not squared_norm:
        dist = float(np.sqrt(dist))
    return float(np.exp(-gamma * dist))


def projected_kernel(
    fm: FeatureMap, x, x2, theta=None, gamma: float = 1.0, squared_norm: bool = True, observables=None
) -> float:
    """``exp(-gamma * D)`` over projected feature vectors.

    ``D`` is the squared Euclidean distance by default, or the plain
    Euclidean distance with ``squared_norm=False``.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    f1 = projected_features(fm, x, theta, observables)
    f2 = projected_features(fm, x2, theta, observables)
    return _gaussian(f1, f2, gamma, squared_norm)


def pair_seed(seed: int, i: int, j: int) -> int:
    """Stable per-entry seed so shot-based Grams do not depend on evaluation order."""
    return int(np.random.SeedSequence([int(seed), int(i), int(j)]).generate_state(1, np.uint64)[0])


def kernel_value(spec: KernelSpec, x, x2, seed: int | None = None) -> float:
    """Evaluate one kernel entry; ``seed`` overrides ``spec.seed`` for shot-based modes."""
    if spec.family in CLASSICAL_FAMILIES:
        return classical_kernel(spec, x, x2)
    fm, theta = spec.feature_map, spec.theta_array
    if spec.family == "projected":
        return projected_kernel(fm, x, x2, theta, spec.gamma, spec.squared_norm, spec.observables)
    seed = spec.seed if seed is None else seed
    if spec.mode == "exact":
        return fidelity_exact(fm, x, x2, theta)
    if spec.mode == "overlap":
        return overlap_test(fm, x, x2, theta, int(spec.shots), seed)
    return swap_test(fm, x, x2, theta, int(spec.shots), seed, spec.clamp)


# ---------------------------------------------------------------------------
# Gram matrices


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Kernel values ``K[i, j] = k(a_i, b_j)`` with the spec that produced them."""

    entries: np.ndarray
    spec: dict
    symmetric: bool
    meta: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def sidecar(self) -> dict:
        return {"spec": self.spec, "symmetric": self.symmetric, "shape": list(self.shape), **self.meta}

    def save(self, path, sidecar_path=None) -> None:
        """Write entries as ``.npy`` and, if given, a JSON sidecar with provenance."""
        save_array(path, self.entries)
        if sidecar_path is not None:
            with open(sidecar_path, "w") as fh:
                json.dump(self.sidecar(), fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path, sidecar_path=None) -> "GramMatrix":
        entries = load_array(path)
        info = {}
        if sidecar_path is not None:
            with open(sidecar_path) as fh:
                info = json.load(fh)
        spec = info.pop("spec", {})
        symmetric = info.pop("symmetric", entries.shape[0] == entries.shape[1] and np.array_equal(entries, entries.T))
        info.pop("shape", None)
        return cls(entries, spec, bool(symmetric), info)


def _as_rows(A, name: str) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array of row vectors, got shape {A.shape}")
    return A


class _PairEvaluator:
    """Caches per-row work (encoded states, projected features) for one Gram."""

    def __init__(self, spec: KernelSpec, A: np.ndarray, B: np.ndarray):
        self.spec = spec
        self.A, self.B = A, B
        if spec.family in QUANTUM_FAMILIES:
            fm, theta = spec.feature_map, spec.theta_array
            if A.shape[1] != fm.num_features:
                raise ValueError(f"data has {A.shape[1]} features, feature map expects {fm.num_features}")
            self.gates_a = [bind(fm, x, theta) for x in A]
            self.gates_b = self.gates_a if B is A else [bind(fm, x, theta) for x in B]
            self.states_a = [run_circuit(g, fm.num_qubits) for g in self.gates_a]
            self.states_b = self.states_a if B is A else [run_circuit(g, fm.num_qubits) for g in self.gates_b]
            if spec.family == "projected":
                obs = default_observables(fm.num_qubits) if spec.observables is None else spec.observables
                self.feat_a = [_features_from_state(s, obs) for s in self.states_a]
                self.feat_b = self.feat_a if B is A else [_features_from_state(s, obs) for s in self.states_b]

    def __call__(self, i: int, j: int) -> float:
        spec = self.spec
        if spec.family in CLASSICAL_FAMILIES:
            return classical_kernel(spec, self.A[i], self.B[j])
        if spec.family == "projected":
            return _gaussian(self.feat_a[i], self.feat_b[j], spec.gamma, spec.squared_norm)
        if spec.mode == "exact":
            return _fidelity_states(self.states_a[i], self.states_b[j])
        seed = pair_seed(spec.seed, i, j)
        if spec.mode == "overlap":
            return _overlap_from_state(self.states_a[i], self.gates_b[j], int(spec.shots), seed)
        f = _fidelity_states(self.states_a[i], self.states_b[j])
        return _swap_from_fidelity(f, int(spec.shots), seed, spec.clamp)


def gram(spec: KernelSpec, A, B=None, workers: int = 1) -> GramMatrix:
    """Assemble the Gram matrix of ``spec`` over row vectors.

    With ``B`` omitted the result is the symmetric ``N x N`` matrix on ``A``;
    only ``i <= j`` is evaluated and mirrored, so a shot-based estimate is
    shared by ``(i, j)`` and ``(j, i)``. Shot-based entries use the seed
    ``pair_seed(spec.seed, i, j)``, which makes the output independent of
    ``workers`` and evaluation order.
    """
    A = _as_rows(A, "A")
    symmetric = B is None
    B = A if symmetric else _as_rows(B, "B")
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: A has {A.shape[1]} features, B has {B.shape[1]}")
    evaluate = _PairEvaluator(spec, A, B)
    N, M = A.shape[0], B.shape[0]
    rows = list(range(N))

    def row_values(i: int) -> np.ndarray:
        cols = range(i, M) if symmetric else range(M)
        return np.array([evaluate(i, j) for j in cols], dtype=float)

    if workers > 1 and N > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(row_values, rows))
    else:
        results = [row_values(i) for i in rows]
    K = np.empty((N, M))
    for i, values in zip(rows, results):
        if symmetric:
            K[i, i:] = values
            K[i:, i] = values
        else:
            K[i, :] = values
    meta = {}
    if spec.family == "projected":
        meta["projected_distance"] = "squared_euclidean" if spec.squared_norm else "euclidean"
    return GramMatrix(K, spec.to_dict(), symmetric, meta)


def psd_clip(G) -> GramMatrix | np.ndarray:
    """Nearest PSD matrix by clamping negative eigenvalues to zero.

    Accepts a :class:`GramMatrix` (returned with ``meta['psd_clipped']`` set)
    or a plain square array (returned as an array).
    """
    entries = np.asarray(G, dtype=float)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ValueError(f"psd_clip needs a square matrix, got shape {entries.shape}")
    clipped = numerics.clamp_spectrum(entries)
    if isinstance(G, GramMatrix):
        return replace(G, entries=clipped, meta={**G.meta, "psd_clipped": True})
    return clipped
