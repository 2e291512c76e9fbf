"""Kernel optimization.

Every optimizer minimizes. Kernel objectives are therefore expressed as
``-alignment`` or ``-validation accuracy``.

* :func:`grid_search_bandwidth` -- exhaustive search over bandwidth values.
* :func:`param_shift_gradient` / :func:`adam_train` -- gradient training of
  trainable feature-map parameters. Derivatives come from the two-term
  parameter-shift rule applied to every gate occurrence of a parameter.
* :func:`anneal_structure` / :func:`genetic_structure` -- combinatorial
  search over which Pauli generator (and feature) each slot uses.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import OptimizationError
from .featuremaps import FeatureMap, StructureGenome, _check_generators, bind, genome_to_feature_map, random_genome
from .kernelmachines import svm_predict, svm_train
from .kernels import KernelSpec, gram, psd_clip
from .metrics import accuracy, target_alignment
from .simulator import GateOp, _apply_raw, init_zero, run_circuit

SHIFT = math.pi / 2


@dataclass
class OptimizationTrace:
    method: str
    seed: int | None = None
    config: dict = field(default_factory=dict)
    iterations: list[dict] = field(default_factory=list)
    best: dict | None = None

    def record(self, step: int, candidate, value: float, **extra) -> dict:
        entry = {"step": int(step), "candidate": candidate, "value": float(value), **extra}
        self.iterations.append(entry)
        if self.best is None or entry["value"] < self.best["value"]:
            self.best = entry
        return entry

    def to_jsonl(self) -> str:
        header = {"method": self.method, "seed": self.seed, "config": self.config, "best": self.best}
        lines = [json.dumps({"header": header}, sort_keys=True)]
        lines += [json.dumps(entry, sort_keys=True) for entry in self.iterations]
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_jsonl())


def _finite(value, candidate) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise OptimizationError(f"objective is non-finite ({value}) at {candidate}")
    return value


# ---------------------------------------------------------------------------
# objectives


@dataclass
class KernelObjective:
    """Objective over a feature map evaluated on a fixed training split.

    ``kind='negative_alignment'`` returns ``-alignment(K_train, y)``.
    ``kind='negative_validation_accuracy'`` trains an SVM on the training
    Gram and returns minus its accuracy on ``(X_val, y_val)``.
    """

    X: np.ndarray
    y: np.ndarray
    kind: str = "negative_alignment"
    X_val: np.ndarray | None = None
    y_val: np.ndarray | None = None
    C: float = 1.0

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        if self.kind not in ("negative_alignment", "negative_validation_accuracy"):
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if self.kind == "negative_validation_accuracy" and (self.X_val is None or self.y_val is None):
            raise ValueError("validation accuracy objective needs X_val and y_val")

    def _spec(self, fm: FeatureMap, theta) -> KernelSpec:
        return KernelSpec("fidelity", feature_map=fm, theta=None if theta is None else tuple(theta))

    def __call__(self, fm: FeatureMap, theta=None) -> float:
        spec = self._spec(fm, theta)
        K = gram(spec, self.X).entries
        if self.kind == "negative_alignment":
            return -target_alignment(K, self.y)
        model = svm_train(psd_clip(K), self.y, C=self.C)
        pred, _ = svm_predict(model, gram(spec, self.X_val, self.X).entries)
        return -accuracy(self.y_val, pred)

    def gradient(self, fm: FeatureMap, theta, rows=None) -> np.ndarray:
        if self.kind != "negative_alignment":
            raise ValueError("only the alignment objective is differentiable")
        X, y = (self.X, self.y) if rows is None else (self.X[rows], self.y[rows])
        return -param_shift_gradient(fm, theta, Alignment(X, y))


@dataclass(frozen=True)
class GramEntry:
    """Kernel value ``|<phi(x2)|phi(x)>|^2``; ``x2=None`` compares against ``|0...0>``."""

    x: np.ndarray
    x2: np.ndarray | None = None


@dataclass(frozen=True)
class Alignment:
    """Target alignment of the exact fidelity Gram on ``X`` with labels ``y``."""

    X: np.ndarray
    y: np.ndarray


# ---------------------------------------------------------------------------
# parameter-shift gradients


def _occurrences(fm: FeatureMap) -> list[list[tuple[int, float]]]:
    """For each parameter, the (slot index, d angle / d theta) pairs where it appears."""
    occ: list[list[tuple[int, float]]] = [[] for _ in range(fm.num_params)]
    for k, slot in enumerate(fm.slots):
        if slot.expr is None:
            continue
        for j, coef in slot.expr.param_terms:
            occ[j].append((k, coef * fm.slot_scale(slot)))
    return occ


def _run(gates: list[GateOp], n: int) -> np.ndarray:
    amps = init_zero(n).amplitudes
    for gate in gates:
        amps = _apply_raw(amps, gate, n)
    return amps


def _shifted(gates: list[GateOp], k: int, delta: float) -> list[GateOp]:
    g = gates[k]
    out = list(gates)
    out[k] = GateOp(g.kind, g.targets, g.angle + delta, g.pauli_word)
    return out


def _shifted_states(fm: FeatureMap, x, theta, occ) -> tuple[np.ndarray, list[list[tuple[float, np.ndarray, np.ndarray]]]]:
    gates = bind(fm, x, theta)
    n = fm.num_qubits
    base = _run(gates, n)
    shifts = [
        [(c, _run(_shifted(gates, k, SHIFT), n), _run(_shifted(gates, k, -SHIFT), n)) for k, c in occ_j]
        for occ_j in occ
    ]
    return base, shifts


def _entry_gradient(fm: FeatureMap, theta, comp: GramEntry) -> np.ndarray:
    occ = _occurrences(fm)
    base_a, shifts_a = _shifted_states(fm, comp.x, theta, occ)
    if comp.x2 is None:
        ref = np.zeros_like(base_a)
        ref[0] = 1.0
        base_b, shifts_b = ref, [[] for _ in occ]
    else:
        base_b, shifts_b = _shifted_states(fm, comp.x2, theta, occ)

    def fid(u, v):
        return abs(np.vdot(u, v)) ** 2

    grad = np.zeros(fm.num_params)
    for j in range(fm.num_params):
        total = 0.0
        for c, plus, minus in shifts_a[j]:
            total += c * (fid(base_b, plus) - fid(base_b, minus)) / 2
        for c, plus, minus in shifts_b[j]:
            total += c * (fid(plus, base_a) - fid(minus, base_a)) / 2
        grad[j] = total
    return grad


def _alignment_gradient(fm: FeatureMap, theta, comp: Alignment) -> np.ndarray:
    X = np.atleast_2d(np.asarray(comp.X, dtype=float))
    y = np.asarray(comp.y, dtype=float).reshape(-1)
    occ = _occurrences(fm)
    per_point = [_shifted_states(fm, x, theta, occ) for x in X]
    S = np.array([b for b, _ in per_point])
    K = np.abs(S.conj() @ S.T) ** 2
    k_norm = np.linalg.norm(K)
    y_sq = float(y @ y)
    inner = float(y @ K @ y)
    # d alignment / d K
    dA = np.outer(y, y) / (k_norm * y_sq) - inner * K / (k_norm**3 * y_sq)
    grad = np.zeros(fm.num_params)
    for j in range(fm.num_params):
        dK = np.zeros_like(K)
        for r in range(len(occ[j])):
            c = per_point[0][1][j][r][0]
            plus = np.array([shifts[j][r][1] for _, shifts in per_point])
            minus = np.array([shifts[j][r][2] for _, shifts in per_point])
            # T[i, l]: derivative of K_il through the copy of the gate in row i's circuit
            T = c * (np.abs(plus.conj() @ S.T) ** 2 - np.abs(minus.conj() @ S.T) ** 2) / 2
            dK += T + T.T
        grad[j] = float(np.sum(dA * dK))
    return grad


def param_shift_gradient(fm: FeatureMap, theta, component, j: int | None = None):
    """Parameter-shift derivative of a kernel quantity.

    Each occurrence of ``theta_j`` in a gate ``exp(-i a P / 2)`` (in either
    of the two encoded circuits) contributes
    ``c * [f(a + pi/2) - f(a - pi/2)] / 2`` with ``c = d a / d theta_j``.
    When ``theta_j`` appears once this is the textbook two-term rule.

    Parameters
    ----------
    component : GramEntry or Alignment
        The differentiated quantity.
    j : int, optional
        Return only ``d f / d theta_j``; by default the full gradient.
    """
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != fm.num_params:
        raise ValueError(f"theta has length {theta.shape[0]}, feature map has {fm.num_params} parameters")
    if isinstance(component, GramEntry):
        grad = _entry_gradient(fm, theta, component)
    elif isinstance(component, Alignment):
        grad = _alignment_gradient(fm, theta, component)
    else:
        raise TypeError(f"unsupported objective component {type(component).__name__}")
    return grad if j is None else float(grad[j])


def entry_value(fm: FeatureMap, theta, comp: GramEntry) -> float:
    """Value of a :class:`GramEntry` (used for finite-difference checks)."""
    a = run_circuit(bind(fm, comp.x, theta), fm.num_qubits).amplitudes
    if comp.x2 is None:
        return float(abs(a[0]) ** 2)
    b = run_circuit(bind(fm, comp.x2, theta), fm.num_qubits).amplitudes
    return float(abs(np.vdot(b, a)) ** 2)


# ---------------------------------------------------------------------------
# continuous optimizers


def grid_search_bandwidth(fm: FeatureMap, betas, objective, theta=None) -> tuple[float, OptimizationTrace]:
    """Evaluate ``objective(fm.with_bandwidth(beta), theta)`` at every ``beta``.

    Returns the minimizing bandwidth (smallest ``beta`` among ties) and the trace.
    """
    betas = [float(b) for b in betas]
    if not betas:
        raise ValueError("bandwidth grid is empty")
    trace = OptimizationTrace("grid", None, {"betas": betas})
    best_beta, best_value = None, None
    for step, beta in enumerate(betas):
        try:
            value = _finite(objective(fm.with_bandwidth(beta), theta), f"beta={beta}")
        except OptimizationError:
            raise
        except Exception as exc:
            raise OptimizationError(f"objective failed at beta={beta}: {exc}") from exc
        trace.record(step, {"beta": beta}, value)
        if best_value is None or value < best_value or (value == best_value and beta < best_beta):
            best_beta, best_value = beta, value
    trace.best = next(e for e in trace.iterations if e["candidate"]["beta"] == best_beta and e["value"] == best_value)
    return best_beta, trace


def adam_train(
    fm: FeatureMap,
    theta0,
    objective,
    steps: int = 100,
    lr: float = 0.05,
    seed: int = 0,
    batch_fraction: float = 1.0,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[np.ndarray, OptimizationTrace]:
    """Minimize ``objective(fm, theta)`` with ADAM.

    ``objective`` must provide ``__call__(fm, theta)`` and
    ``gradient(fm, theta, rows)``; ``rows`` is a sorted random subset of the
    training points when ``batch_fraction < 1`` and ``None`` otherwise.

    Returns the best parameters seen (initial, intermediate or final) and
    the trace, whose ``best`` entry holds their objective value.
    """
    if steps < 1:
        raise ValueError(f"steps must be at least 1, got {steps}")
    if not 0 < batch_fraction <= 1:
        raise ValueError(f"batch_fraction must be in (0, 1], got {batch_fraction}")
    theta = np.array(theta0, dtype=float).reshape(-1)
    rng = np.random.default_rng(seed)
    config = {"steps": steps, "lr": lr, "beta1": beta1, "beta2": beta2, "eps": eps, "batch_fraction": batch_fraction}
    trace = OptimizationTrace("adam", seed, config)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    num_points = getattr(objective, "X", np.zeros((1, 0))).shape[0]
    best_theta = theta.copy()
    for t in range(1, steps + 1):
        value = _finite(objective(fm, theta), f"theta={theta.tolist()}")
        entry = trace.record(t - 1, theta.tolist(), value)
        if trace.best is entry:
            best_theta = theta.copy()
        rows = None
        if batch_fraction < 1:
            size = max(2, int(math.ceil(batch_fraction * num_points)))
            rows = np.sort(rng.choice(num_points, size=min(size, num_points), replace=False))
        g = np.asarray(objective.gradient(fm, theta, rows), dtype=float)
        if not np.all(np.isfinite(g)):
            raise OptimizationError(f"gradient is non-finite at theta={theta.tolist()}")
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        theta = theta - lr * m_hat / (np.sqrt(v_hat) + eps)
    value = _finite(objective(fm, theta), f"theta={theta.tolist()}")
    entry = trace.record(steps, theta.tolist(), value)
    if trace.best is entry:
        best_theta = theta.copy()
    return best_theta, trace


# ---------------------------------------------------------------------------
# structure search


class _GenomeScorer:
    """Evaluates genomes through their feature maps, cached by fingerprint."""

    def __init__(self, generators, n, d, bandwidth, objective):
        self.generators = generators
        self.n, self.d, self.bandwidth = n, d, bandwidth
        self.objective = objective
        self.cache: dict[str, float] = {}

    def __call__(self, genome: StructureGenome) -> float:
        key = genome.fingerprint
        if key not in self.cache:
            fm = genome_to_feature_map(genome, self.generators, self.n, self.d, self.bandwidth)
            try:
                value = self.objective(fm)
            except Exception as exc:
                raise OptimizationError(f"objective failed for genome {key}: {exc}") from exc
            self.cache[key] = _finite(value, f"genome {key}")
        return self.cache[key]


def _redraw(rng: np.random.Generator, size: int, current: int) -> int:
    if size == 1:
        return current
    new = int(rng.integers(size - 1))
    return new if new < current else new + 1


def anneal_structure(
    generators,
    L: int,
    d: int,
    objective,
    schedule: tuple[float, float, int] = (1.0, 0.95, 200),
    seed: int = 0,
    n: int | None = None,
    bandwidth: float = 1.0,
) -> tuple[StructureGenome, OptimizationTrace]:
    """Simulated annealing over genomes.

    A move picks one slot at random and redraws either its generator or its
    feature index (to a different value). Moves with ``delta <= 0`` are always
    accepted, others with probability ``exp(-delta / T)``; ``T`` is multiplied
    by the cooling factor after every step. ``objective`` maps a
    :class:`FeatureMap` to a float.
    """
    generators = _check_generators(generators, n)
    T0, cooling, steps = schedule
    steps = int(steps)
    if steps < 1:
        raise ValueError(f"annealing needs at least one step, got {steps}")
    if not 0 < cooling < 1:
        raise ValueError(f"cooling factor must lie in (0, 1), got {cooling}")
    if not T0 > 0:
        raise ValueError(f"initial temperature must be positive, got {T0}")
    score = _GenomeScorer(generators, n, d, bandwidth, objective)
    rng = np.random.default_rng(seed)
    current = random_genome(generators, L, d, int(rng.integers(2**63)))
    current_value = score(current)
    trace = OptimizationTrace(
        "anneal", seed, {"T0": T0, "cooling": cooling, "steps": steps, "L": L, "d": d, "generators": list(generators)}
    )
    trace.record(0, current.fingerprint, current_value, accepted=True, temperature=T0)
    best, best_value = current, current_value
    T = float(T0)
    G = len(generators)
    for step in range(1, steps + 1):
        slot = int(rng.integers(L))
        gens = list(current.slot_generators)
        feats = list(current.slot_features)
        change_generator = d == 1 or (G > 1 and rng.random() < 0.5)
        if change_generator:
            gens[slot] = _redraw(rng, G, gens[slot])
        else:
            feats[slot] = _redraw(rng, d, feats[slot])
        candidate = StructureGenome(tuple(gens), tuple(feats))
        value = score(candidate)
        delta = value - current_value
        accepted = delta <= 0 or rng.random() < math.exp(-delta / T)
        if accepted:
            current, current_value = candidate, value
        trace.record(step, candidate.fingerprint, value, accepted=bool(accepted), temperature=T)
        if current_value < best_value:
            best, best_value = current, current_value
        T *= cooling
    trace.best = {"step": None, "candidate": best.fingerprint, "value": best_value, "genome": best.to_dict()}
    return best, trace


def genetic_structure(
    generators,
    L: int,
    d: int,
    objective,
    population: int = 8,
    generations: int = 20,
    mutation_rate: float = 0.1,
    seed: int = 0,
    n: int | None = None,
    bandwidth: float = 1.0,
    initial_population=None,
) -> tuple[StructureGenome, OptimizationTrace]:
    """Genetic algorithm over genomes.

    Binary tournament selection, one-point crossover on the slot lists,
    per-slot mutation (generator and feature redrawn independently with
    probability ``mutation_rate``) and elitism of one individual.
    """
    generators = _check_generators(generators, n)
    if population < 2:
        raise ValueError(f"population must be at least 2, got {population}")
    if not 0 <= mutation_rate <= 1:
        raise ValueError(f"mutation rate must lie in [0, 1], got {mutation_rate}")
    score = _GenomeScorer(generators, n, d, bandwidth, objective)
    rng = np.random.default_rng(seed)
    G = len(generators)
    if initial_population is None:
        pop = [random_genome(generators, L, d, int(rng.integers(2**63))) for _ in range(population)]
    else:
        pop = [StructureGenome(g.slot_generators, g.slot_features) for g in initial_population]
        if len(pop) != population:
            raise ValueError(f"initial population has {len(pop)} members, expected {population}")
    values = [score(g) for g in pop]
    config = {
        "population": population,
        "generations": generations,
        "mutation_rate": mutation_rate,
        "L": L,
        "d": d,
        "generators": list(generators),
    }
    trace = OptimizationTrace("genetic", seed, config)
    best_index = int(np.argmin(values))
    best, best_value = pop[best_index], values[best_index]
    trace.record(0, best.fingerprint, best_value, generation_best=values[best_index])

    def tournament() -> StructureGenome:
        a, b = rng.choice(population, size=2, replace=False)
        return pop[a] if values[a] <= values[b] else pop[b]

    for generation in range(1, generations + 1):
        elite = pop[int(np.argmin(values))]
        children = [elite]
        while len(children) < population:
            p1, p2 = tournament(), tournament()
            cut = int(rng.integers(1, L)) if L > 1 else L
            gens = list(p1.slot_generators[:cut] + p2.slot_generators[cut:])
            feats = list(p1.slot_features[:cut] + p2.slot_features[cut:])
            for s in range(L):
                if rng.random() < mutation_rate:
                    gens[s] = int(rng.integers(G))
                if rng.random() < mutation_rate:
                    feats[s] = int(rng.integers(d))
            children.append(StructureGenome(tuple(gens), tuple(feats)))
        pop = children
        values = [score(g) for g in pop]
        gen_best = int(np.argmin(values))
        if values[gen_best] < best_value:
            best, best_value = pop[gen_best], values[gen_best]
        trace.record(generation, best.fingerprint, best_value, generation_best=values[gen_best])
    trace.best = {"step": None, "candidate": best.fingerprint, "value": best_value, "genome": best.to_dict()}
    return best, trace
