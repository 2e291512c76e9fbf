"""Circuit templates binding rotation angles to data features and trainable parameters.

A :class:`FeatureMap` is an ordered list of slots. Each slot is a gate
template plus an optional :class:`ParamExpr` giving its angle as an affine
function of the features ``x`` and parameters ``theta`` (plus optional
``x_i * x_j`` products). The bandwidth ``beta`` multiplies the evaluated
angle of every slot whose expression reads the data; slots that depend only
on trainable parameters are left unscaled.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from .simulator import GateOp, ROTATION_KINDS, validate_pauli_word

MAP_KINDS = ("angle", "zz", "hardware_efficient_trainable")


@dataclass(frozen=True)
class ParamExpr:
    """``constant + sum c*x_i + sum c*theta_k + sum c*x_i*x_j``."""

    constant: float = 0.0
    feature_terms: tuple[tuple[int, float], ...] = ()
    param_terms: tuple[tuple[int, float], ...] = ()
    products: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "feature_terms", tuple((int(i), float(c)) for i, c in self.feature_terms))
        object.__setattr__(self, "param_terms", tuple((int(k), float(c)) for k, c in self.param_terms))
        object.__setattr__(self, "products", tuple((int(i), int(j), float(c)) for i, j, c in self.products))

    @property
    def reads_data(self) -> bool:
        return bool(self.feature_terms or self.products)

    def evaluate(self, x, theta) -> float:
        value = self.constant
        for i, c in self.feature_terms:
            value += c * x[i]
        for k, c in self.param_terms:
            value += c * theta[k]
        for i, j, c in self.products:
            value += c * x[i] * x[j]
        return float(value)

    def check_dims(self, num_features: int, num_params: int) -> None:
        for i, _ in self.feature_terms:
            if not 0 <= i < num_features:
                raise ValueError(f"feature index {i} out of range for {num_features} features")
        for i, j, _ in self.products:
            if not (0 <= i < num_features and 0 <= j < num_features):
                raise ValueError(f"product ({i}, {j}) out of range for {num_features} features")
        for k, _ in self.param_terms:
            if not 0 <= k < num_params:
                raise ValueError(f"parameter index {k} out of range for {num_params} parameters")

    def to_dict(self) -> dict:
        return {
            "constant": self.constant,
            "features": [list(t) for t in self.feature_terms],
            "params": [list(t) for t in self.param_terms],
            "products": [list(t) for t in self.products],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParamExpr":
        return cls(
            d.get("constant", 0.0),
            tuple(tuple(t) for t in d.get("features", ())),
            tuple(tuple(t) for t in d.get("params", ())),
            tuple(tuple(t) for t in d.get("products", ())),
        )


@dataclass(frozen=True)
class Slot:
    kind: str
    targets: tuple[int, ...]
    expr: ParamExpr | None = None
    pauli_word: str | None = None

    def to_dict(self) -> dict:
        d = {"gate": self.kind, "targets": list(self.targets)}
        if self.pauli_word is not None:
            d["pauli_word"] = self.pauli_word
        if self.expr is not None:
            d["expr"] = self.expr.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Slot":
        expr = ParamExpr.from_dict(d["expr"]) if "expr" in d else None
        return cls(d["gate"], tuple(d.get("targets", ())), expr, d.get("pauli_word"))


@dataclass(frozen=True)
class FeatureMap:
    """Parameterized circuit template ``U(x; theta)``."""

    num_qubits: int
    num_features: int
    num_params: int
    slots: tuple[Slot, ...]
    bandwidth: float = 1.0
    kind: str = "custom"
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("a feature map needs at least one qubit")
        if self.num_features < 0 or self.num_params < 0:
            raise ValueError("feature and parameter counts must be nonnegative")
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        object.__setattr__(self, "slots", tuple(self.slots))
        object.__setattr__(self, "bandwidth", float(self.bandwidth))
        for slot in self.slots:
            if slot.kind in ROTATION_KINDS:
                if slot.expr is None:
                    raise ValueError(f"rotation slot {slot.kind} needs an angle expression")
                slot.expr.check_dims(self.num_features, self.num_params)
            elif slot.expr is not None:
                raise ValueError(f"{slot.kind} takes no angle")
            if slot.kind == "PauliRotation":
                validate_pauli_word(slot.pauli_word, self.num_qubits)
            # validates targets against the qubit count
            GateOp(slot.kind, slot.targets, 0.0 if slot.expr else None, slot.pauli_word).validate(
                self.num_qubits
            )

    def with_bandwidth(self, bandwidth: float) -> "FeatureMap":
        return replace(self, bandwidth=bandwidth)

    def slot_scale(self, slot: Slot) -> float:
        """Factor applied to the evaluated expression of ``slot``."""
        return self.bandwidth if slot.expr is not None and slot.expr.reads_data else 1.0

    def default_theta(self) -> np.ndarray:
        return np.zeros(self.num_params)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "num_qubits": self.num_qubits,
            "num_features": self.num_features,
            "num_params": self.num_params,
            "bandwidth": self.bandwidth,
            "metadata": self.metadata,
            "slots": [s.to_dict() for s in self.slots],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureMap":
        return cls(
            num_qubits=int(d["num_qubits"]),
            num_features=int(d["num_features"]),
            num_params=int(d["num_params"]),
            slots=tuple(Slot.from_dict(s) for s in d["slots"]),
            bandwidth=float(d.get("bandwidth", 1.0)),
            kind=d.get("kind", "custom"),
            metadata=dict(d.get("metadata", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "FeatureMap":
        return cls.from_dict(json.loads(text))


def _as_vector(values, expected: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1) if values is not None else np.zeros(0)
    if arr.shape[0] != expected:
        raise ValueError(f"{what} has length {arr.shape[0]}, feature map expects {expected}")
    return arr


def bind(fm: FeatureMap, x, theta=None) -> list[GateOp]:
    """Instantiate the circuit for one data point.

    Each rotation gets angle ``beta * expr(x, theta)`` (``expr(x, theta)`` for
    parameter-only slots).
    """
    x = _as_vector(x, fm.num_features, "x")
    theta = _as_vector(fm.default_theta() if theta is None else theta, fm.num_params, "theta")
    gates = []
    for slot in fm.slots:
        angle = None
        if slot.expr is not None:
            angle = fm.slot_scale(slot) * slot.expr.evaluate(x, theta)
        gates.append(GateOp(slot.kind, slot.targets, angle, slot.pauli_word))
    return gates


def _encoding_slots(n: int, d: int, kind: str) -> list[Slot]:
    # one slot per max(n, d) position: qubit k mod n reads feature k mod d
    return [
        Slot(kind, (k % n,), ParamExpr(feature_terms=((k % d, 1.0),)))
        for k in range(max(n, d))
    ]


def build_feature_map(kind: str, n: int, d: int, layers: int = 1, bandwidth: float = 1.0) -> FeatureMap:
    """Construct one of the stock feature maps.

    ``angle``
        ``RY(beta x_i)`` on qubit ``i`` per layer.
    ``zz``
        Per layer: Hadamards, ``RZ(beta x_i)`` on each qubit, then
        ``exp(-i beta x_i x_j Z_i Z_j / 2)`` on adjacent pairs of a line.
    ``hardware_efficient_trainable``
        Per layer: ``RY(beta x_i)`` data re-upload, ``RY(theta) RZ(theta)``
        on every qubit with fresh parameters, then a CNOT ring.

    When ``d != n`` features are spread round-robin: position ``k`` in
    ``range(max(n, d))`` puts feature ``k mod d`` on qubit ``k mod n``.
    """
    if kind not in MAP_KINDS:
        raise ValueError(f"unknown feature map kind {kind!r}; expected one of {MAP_KINDS}")
    if n < 1:
        raise ValueError("feature map needs at least one qubit")
    if d < 1:
        raise ValueError("feature map needs at least one feature")
    if layers < 1:
        raise ValueError("feature map needs at least one layer")
    slots: list[Slot] = []
    num_params = 0
    for _ in range(layers):
        if kind == "angle":
            slots += _encoding_slots(n, d, "RY")
        elif kind == "zz":
            slots += [Slot("H", (q,)) for q in range(n)]
            slots += _encoding_slots(n, d, "RZ")
            for q in range(n - 1):
                word = "".join("Z" if k in (q, q + 1) else "I" for k in range(n))
                expr = ParamExpr(products=((q % d, (q + 1) % d, 1.0),))
                slots.append(Slot("PauliRotation", (q, q + 1), expr, word))
        else:
            slots += _encoding_slots(n, d, "RY")
            for q in range(n):
                slots.append(Slot("RY", (q,), ParamExpr(param_terms=((num_params, 1.0),))))
                slots.append(Slot("RZ", (q,), ParamExpr(param_terms=((num_params + 1, 1.0),))))
                num_params += 2
            ring = [(q, (q + 1) % n) for q in range(n)] if n > 2 else [(0, 1)] if n == 2 else []
            slots += [Slot("CNOT", pair) for pair in ring]
    metadata = {
        "layers": layers,
        "feature_assignment": "round_robin: position k -> qubit k mod n, feature k mod d",
    }
    if kind == "zz":
        metadata["entangling_angle"] = "beta * x_i * x_j on adjacent line pairs"
    return FeatureMap(n, d, num_params, tuple(slots), bandwidth, kind, metadata)


# ---------------------------------------------------------------------------
# structure search representation


@dataclass(frozen=True)
class StructureGenome:
    """Slot ``g`` is ``exp(-i beta x_{slot_features[g]} G / 2)`` with ``G = generators[slot_generators[g]]``."""

    slot_generators: tuple[int, ...]
    slot_features: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "slot_generators", tuple(int(g) for g in self.slot_generators))
        object.__setattr__(self, "slot_features", tuple(int(f) for f in self.slot_features))
        if len(self.slot_generators) < 1:
            raise ValueError("a genome needs at least one slot")
        if len(self.slot_generators) != len(self.slot_features):
            raise ValueError("slot_generators and slot_features must have equal length")

    def __len__(self):
        return len(self.slot_generators)

    @property
    def fingerprint(self) -> str:
        gens = ",".join(map(str, self.slot_generators))
        feats = ",".join(map(str, self.slot_features))
        return f"g[{gens}]f[{feats}]"

    def validate(self, num_generators: int, num_features: int) -> None:
        for g in self.slot_generators:
            if not 0 <= g < num_generators:
                raise ValueError(f"generator index {g} out of range for {num_generators} generators")
        for f in self.slot_features:
            if not 0 <= f < num_features:
                raise ValueError(f"feature index {f} out of range for {num_features} features")

    def to_dict(self) -> dict:
        return {"slot_generators": list(self.slot_generators), "slot_features": list(self.slot_features)}


def default_generators(n: int) -> tuple[str, ...]:
    """X, Y, Z on every qubit and all two-letter products on adjacent pairs."""
    words = []
    for q in range(n):
        for p in "XYZ":
            words.append("".join(p if k == q else "I" for k in range(n)))
    for q in range(n - 1):
        for p1, p2 in product("XYZ", repeat=2):
            words.append("".join(p1 if k == q else p2 if k == q + 1 else "I" for k in range(n)))
    return tuple(words)


def _check_generators(generators, n: int | None = None) -> tuple[str, ...]:
    generators = tuple(generators)
    if not generators:
        raise ValueError("generator set is empty")
    n = len(generators[0]) if n is None else n
    for word in generators:
        validate_pauli_word(word, n)
        if set(word) == {"I"}:
            raise ValueError("identity is not a valid generator")
    return generators


def genome_to_feature_map(
    genome: StructureGenome, generators, n: int | None = None, d: int | None = None, bandwidth: float = 1.0
) -> FeatureMap:
    generators = _check_generators(generators, n)
    n = len(generators[0]) if n is None else n
    d = max(genome.slot_features) + 1 if d is None else d
    genome.validate(len(generators), d)
    slots = tuple(
        Slot("PauliRotation", (), ParamExpr(feature_terms=((f, 1.0),)), generators[g])
        for g, f in zip(genome.slot_generators, genome.slot_features)
    )
    metadata = {"genome": genome.to_dict(), "generators": list(generators)}
    return FeatureMap(n, d, 0, slots, bandwidth, "structure", metadata)


def random_genome(generators, L: int, d: int, seed: int) -> StructureGenome:
    """Uniformly random genome of length ``L``."""
    generators = _check_generators(generators)
    if L < 1 or d < 1:
        raise ValueError("genome length and feature count must be positive")
    rng = np.random.default_rng(seed)
    return StructureGenome(
        tuple(rng.integers(len(generators), size=L)), tuple(rng.integers(d, size=L))
    )


def enumerate_genomes(num_generators: int, L: int, d: int):
    """Every genome of length ``L`` over the given alphabet sizes."""
    choices = list(product(range(num_generators), range(d)))
    for combo in product(choices, repeat=L):
        yield StructureGenome(tuple(g for g, _ in combo), tuple(f for _, f in combo))
