"""Dense statevector simulation.

Conventions
-----------
* Qubit 0 is the least-significant bit of the amplitude index.
* Pauli words are strings whose character ``k`` acts on qubit ``k``,
  e.g. ``"XZ"`` is X on qubit 0 and Z on qubit 1.
* Rotations are ``RX(t) = exp(-i t X/2)``, ``RY(t) = exp(-i t Y/2)``,
  ``RZ(t) = exp(-i t Z/2)`` and ``PauliRotation(P, t) = exp(-i t P/2)``.
* ``CNOT`` targets are ``[control, target]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_QUBITS = 24
GATE_KINDS = ("H", "RX", "RY", "RZ", "CNOT", "CZ", "PauliRotation")
ROTATION_KINDS = frozenset({"RX", "RY", "RZ", "PauliRotation"})
PAULI_LETTERS = frozenset("IXYZ")

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _rotation_matrix(kind: str, angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "RZ":
        return np.array([[np.exp(-0.5j * angle), 0], [0, np.exp(0.5j * angle)]], dtype=complex)
    raise ValueError(f"not a single-qubit rotation: {kind}")


def validate_pauli_word(word: str, num_qubits: int | None = None) -> str:
    if not isinstance(word, str) or not word:
        raise ValueError(f"Pauli word must be a nonempty string, got {word!r}")
    bad = set(word) - PAULI_LETTERS
    if bad:
        raise ValueError(f"Pauli word {word!r} contains letters outside IXYZ: {sorted(bad)}")
    if num_qubits is not None and len(word) != num_qubits:
        raise ValueError(f"Pauli word {word!r} has length {len(word)}, expected {num_qubits}")
    return word


@dataclass(frozen=True)
class GateOp:
    """One gate: its kind, target qubits, rotation angle and (for PauliRotation) word."""

    kind: str
    targets: tuple[int, ...]
    angle: float | None = None
    pauli_word: str | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}; expected one of {GATE_KINDS}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.kind in ROTATION_KINDS:
            if self.angle is None:
                raise ValueError(f"{self.kind} requires an angle")
            object.__setattr__(self, "angle", float(self.angle))
        if self.kind == "PauliRotation":
            validate_pauli_word(self.pauli_word)
            if set(self.pauli_word) == {"I"}:
                raise ValueError("PauliRotation word must contain at least one non-I letter")
            support = tuple(k for k, letter in enumerate(self.pauli_word) if letter != "I")
            if not self.targets:
                object.__setattr__(self, "targets", support)

    def validate(self, num_qubits: int) -> None:
        arity = {"H": 1, "RX": 1, "RY": 1, "RZ": 1, "CNOT": 2, "CZ": 2}
        if self.kind == "PauliRotation":
            if len(self.pauli_word) != num_qubits:
                raise ValueError(
                    f"PauliRotation word {self.pauli_word!r} has length "
                    f"{len(self.pauli_word)}, state has {num_qubits} qubits"
                )
        elif len(self.targets) != arity[self.kind]:
            raise ValueError(f"{self.kind} takes {arity[self.kind]} target(s), got {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"{self.kind} targets must be distinct, got {self.targets}")
        for t in self.targets:
            if not 0 <= t < num_qubits:
                raise ValueError(f"{self.kind} target {t} out of range for {num_qubits} qubits")

    def inverse(self) -> "GateOp":
        if self.kind in ROTATION_KINDS:
            return GateOp(self.kind, self.targets, -self.angle, self.pauli_word)
        return self


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized vector of ``2**num_qubits`` complex amplitudes (read-only)."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.num_qubits,):
            raise ValueError(
                f"expected {2**self.num_qubits} amplitudes for {self.num_qubits} qubits, got {amps.shape}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)


def _check_num_qubits(n: int) -> int:
    if isinstance(n, bool) or int(n) != n or not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"number of qubits must be an integer in [1, {MAX_QUBITS}], got {n}")
    return int(n)


def init_zero(n: int) -> StateVector:
    """The computational basis state ``|0...0>`` on ``n`` qubits."""
    n = _check_num_qubits(n)
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = 1.0
    return StateVector(n, amps)


def _apply_1q(amps: np.ndarray, matrix: np.ndarray, qubit: int, n: int) -> np.ndarray:
    view = amps.reshape(2 ** (n - 1 - qubit), 2, 2**qubit)
    return np.einsum("ab,ibj->iaj", matrix, view).reshape(-1)


@lru_cache(maxsize=32)
def _indices(n: int) -> np.ndarray:
    idx = np.arange(2**n, dtype=np.int64)
    idx.setflags(write=False)
    return idx


def _pauli_masks(word: str) -> tuple[int, int, int]:
    x_mask = z_mask = 0
    n_y = 0
    for k, letter in enumerate(word):
        if letter in "XY":
            x_mask |= 1 << k
        if letter in "ZY":
            z_mask |= 1 << k
        n_y += letter == "Y"
    return x_mask, z_mask, n_y


def _parity(idx: np.ndarray, mask: int) -> np.ndarray:
    parity = np.zeros(idx.shape, dtype=np.int64)
    k = 0
    while mask >> k:
        if (mask >> k) & 1:
            parity ^= (idx >> k) & 1
        k += 1
    return parity


def apply_pauli(amps: np.ndarray, word: str) -> np.ndarray:
    """Return ``P |psi>`` for a Pauli word ``P`` acting on raw amplitudes."""
    n = len(word)
    x_mask, z_mask, n_y = _pauli_masks(word)
    idx = _indices(n)
    # Y = iXZ on each site: P|i> = i^{n_y} (-1)^{popcount(i & z)} |i ^ x>
    phase = (1j**n_y) * (1 - 2 * _parity(idx, z_mask))
    out = np.empty_like(amps)
    out[idx ^ x_mask] = phase * amps
    return out


def _apply_raw(amps: np.ndarray, gate: GateOp, n: int) -> np.ndarray:
    kind = gate.kind
    if kind == "H":
        return _apply_1q(amps, _H, gate.targets[0], n)
    if kind in ("RX", "RY", "RZ"):
        return _apply_1q(amps, _rotation_matrix(kind, gate.angle), gate.targets[0], n)
    if kind == "CNOT":
        control, target = gate.targets
        idx = _indices(n)
        src = np.where((idx >> control) & 1, idx ^ (1 << target), idx)
        return amps[src]
    if kind == "CZ":
        a, b = gate.targets
        idx = _indices(n)
        sign = 1 - 2 * (((idx >> a) & 1) & ((idx >> b) & 1))
        return amps * sign
    # PauliRotation: cos(t/2) I - i sin(t/2) P
    half = 0.5 * gate.angle
    return np.cos(half) * amps - 1j * np.sin(half) * apply_pauli(amps, gate.pauli_word)


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    """Apply one gate, returning a new state."""
    gate.validate(state.num_qubits)
    return StateVector(state.num_qubits, _apply_raw(state.amplitudes, gate, state.num_qubits))


def run_circuit(gates, n: int, initial: StateVector | None = None) -> StateVector:
    """Fold ``apply_gate`` over ``gates`` starting from ``|0...0>`` (or ``initial``)."""
    state = init_zero(n) if initial is None else initial
    if state.num_qubits != n:
        raise ValueError(f"initial state has {state.num_qubits} qubits, circuit expects {n}")
    amps = state.amplitudes
    for gate in gates:
        gate.validate(n)
        amps = _apply_raw(amps, gate, n)
    return StateVector(n, amps)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """``<a|b> = sum_k conj(a_k) b_k``."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"qubit counts differ: {a.num_qubits} vs {b.num_qubits}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    return abs(inner_product(a, b)) ** 2


def expectation_pauli(state: StateVector, word: str) -> float:
    """``<psi|P|psi>`` for a Pauli word of length ``num_qubits``."""
    validate_pauli_word(word, state.num_qubits)
    amps = state.amplitudes
    return float(np.real(np.vdot(amps, apply_pauli(amps, word))))


def reduced_dm(state: StateVector, qubit: int) -> np.ndarray:
    """2x2 reduced density matrix of one qubit, tracing out all others."""
    n = state.num_qubits
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range for {n} qubits")
    view = state.amplitudes.reshape(2 ** (n - 1 - qubit), 2, 2**qubit)
    rho = np.einsum("iaj,ibj->ab", view, view.conj())
    return 0.5 * (rho + rho.conj().T)


def bloch_vector(rho: np.ndarray) -> np.ndarray:
    """(<X>, <Y>, <Z>) of a single-qubit density matrix."""
    return np.array(
        [2 * rho[0, 1].real, -2 * rho[0, 1].imag, (rho[0, 0] - rho[1, 1]).real]
    )


def _clean_probabilities(amps: np.ndarray) -> np.ndarray:
    probs = np.abs(amps) ** 2
    # floating-point dust on exactly-zero amplitudes would otherwise leak into samples
    probs[probs < 1e-14] = 0.0
    return probs / probs.sum()


def sample_bitstrings(state: StateVector, shots: int, seed: int) -> dict[int, int]:
    """Measure all qubits ``shots`` times.

    Outcomes are drawn by inverse-CDF lookup of uniforms produced by a
    Philox counter-based generator keyed by ``seed``, so a given
    ``(state, shots, seed)`` always yields the same counts.

    Returns
    -------
    dict
        Map from basis-state index (qubit 0 = LSB) to count, ordered by index.
    """
    if isinstance(shots, bool) or int(shots) != shots or shots < 1:
        raise ValueError(f"shots must be a positive integer, got {shots}")
    rng = np.random.Generator(np.random.Philox(int(seed)))
    cdf = np.cumsum(_clean_probabilities(state.amplitudes))
    cdf[-1] = 1.0
    draws = np.searchsorted(cdf, rng.random(int(shots)), side="right")
    outcomes, counts = np.unique(draws, return_counts=True)
    return {int(k): int(c) for k, c in zip(outcomes, counts)}
