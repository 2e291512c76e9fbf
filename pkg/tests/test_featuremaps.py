import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkflow.featuremaps import (
    FeatureMap,
    ParamExpr,
    Slot,
    StructureGenome,
    bind,
    build_feature_map,
    default_generators,
    enumerate_genomes,
    genome_to_feature_map,
    random_genome,
)
from qkflow.kernels import fidelity_exact
from qkflow.simulator import init_zero, run_circuit


def reference_angles(doc, x, theta):
    """Evaluate bound angles straight from the JSON description."""
    beta = doc["bandwidth"]
    angles = []
    for slot in doc["slots"]:
        if "expr" not in slot:
            angles.append(None)
            continue
        e = slot["expr"]
        value = e["constant"]
        value += sum(c * x[i] for i, c in e["features"])
        value += sum(c * theta[k] for k, c in e["params"])
        value += sum(c * x[i] * x[j] for i, j, c in e["products"])
        reads = bool(e["features"] or e["products"])
        angles.append(beta * value if reads else value)
    return angles


class TestBind:
    def test_zero_input_angle_map(self):
        fm = build_feature_map("angle", 3, 3)
        gates = bind(fm, np.zeros(3))
        assert all(g.angle == 0 for g in gates)
        np.testing.assert_allclose(run_circuit(gates, 3).amplitudes, init_zero(3).amplitudes)

    def test_bandwidth_halves_angles(self):
        x = np.array([0.3, -1.2])
        full = bind(build_feature_map("angle", 2, 2), x)
        half = bind(build_feature_map("angle", 2, 2, bandwidth=0.5), x)
        assert [h.angle for h in half] == [0.5 * f.angle for f in full]

    @pytest.mark.parametrize("kind", ["angle", "zz", "hardware_efficient_trainable"])
    @pytest.mark.parametrize("seed", range(3))
    def test_matches_independent_evaluation(self, kind, seed):
        rng = np.random.default_rng(seed)
        fm = build_feature_map(kind, 3, 2, layers=2, bandwidth=rng.uniform(0.2, 2))
        x = rng.normal(size=2)
        theta = rng.normal(size=fm.num_params)
        doc = json.loads(fm.to_json())
        got = [g.angle for g in bind(fm, x, theta)]
        for a, b in zip(got, reference_angles(doc, x, theta)):
            assert (a is None and b is None) or a == pytest.approx(b, abs=1e-15)

    def test_dimension_mismatch(self):
        fm = build_feature_map("hardware_efficient_trainable", 2, 2)
        with pytest.raises(ValueError):
            bind(fm, np.zeros(3))
        with pytest.raises(ValueError):
            bind(fm, np.zeros(2), np.zeros(3))

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.05, 3), st.lists(st.floats(-3, 3), min_size=3, max_size=3))
    def test_bandwidth_equals_scaled_input_for_linear_maps(self, beta, x):
        x = np.array(x)
        for kind in ("angle", "hardware_efficient_trainable"):
            fm = build_feature_map(kind, 3, 3, bandwidth=beta)
            theta = np.linspace(-1, 1, fm.num_params)
            a = bind(fm, x, theta)
            b = bind(fm.with_bandwidth(1.0), beta * x, theta)
            for ga, gb in zip(a, b):
                assert ga.kind == gb.kind and ga.targets == gb.targets
                if ga.angle is not None:
                    assert ga.angle == pytest.approx(gb.angle, abs=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.sampled_from(["angle", "zz", "hardware_efficient_trainable"]), st.integers(1, 4), st.integers(0, 1000))
    def test_unit_norm(self, kind, n, seed):
        rng = np.random.default_rng(seed)
        fm = build_feature_map(kind, n, n, layers=2)
        psi = run_circuit(bind(fm, rng.normal(size=n), rng.normal(size=fm.num_params)), n)
        assert abs(np.linalg.norm(psi.amplitudes) - 1) <= 1e-12


class TestBuild:
    @pytest.mark.parametrize("beta", [0.25, 0.5, 1.0])
    def test_single_qubit_angle_kernel(self, beta):
        fm = build_feature_map("angle", 1, 1, bandwidth=beta)
        assert len(fm.slots) == 1 and fm.slots[0].kind == "RY"
        for x, x2 in [(0.1, 1.3), (-2.0, 0.5)]:
            assert fidelity_exact(fm, [x], [x2]) == pytest.approx(np.cos(beta * (x - x2) / 2) ** 2, abs=1e-12)

    def test_hardware_efficient_param_count(self):
        assert build_feature_map("hardware_efficient_trainable", 2, 2).num_params == 4
        assert build_feature_map("hardware_efficient_trainable", 3, 3, layers=2).num_params == 12

    def test_zz_structure(self):
        fm = build_feature_map("zz", 2, 2)
        assert [s.kind for s in fm.slots] == ["H", "H", "RZ", "RZ", "PauliRotation"]
        assert fm.slots[-1].pauli_word == "ZZ"
        assert fm.slots[-1].expr.products == ((0, 1, 1.0),)
        assert "entangling_angle" in fm.metadata

    def test_round_robin(self):
        fm = build_feature_map("angle", 2, 3)
        assert [(s.targets[0], s.expr.feature_terms[0][0]) for s in fm.slots] == [(0, 0), (1, 1), (0, 2)]

    @pytest.mark.parametrize("args", [("nope", 2, 2), ("angle", 0, 2), ("angle", 2, 0)])
    def test_errors(self, args):
        with pytest.raises(ValueError):
            build_feature_map(*args)

    @pytest.mark.parametrize("kind", ["angle", "zz", "hardware_efficient_trainable"])
    def test_json_round_trip(self, kind):
        fm = build_feature_map(kind, 3, 2, layers=2, bandwidth=0.7)
        again = FeatureMap.from_json(fm.to_json())
        assert again == fm
        x, theta = np.array([0.2, -0.4]), np.arange(fm.num_params, dtype=float)
        assert bind(again, x, theta) == bind(fm, x, theta)

    def test_out_of_range_expr_rejected(self):
        with pytest.raises(ValueError):
            FeatureMap(1, 1, 0, (Slot("RY", (0,), ParamExpr(feature_terms=((2, 1.0),))),))


class TestGenomes:
    def test_z_generator_is_trivial_kernel(self):
        fm = genome_to_feature_map(StructureGenome((0,), (0,)), ("Z",), 1, 1)
        for x, x2 in [(0.0, 1.0), (-2.0, 3.0)]:
            assert fidelity_exact(fm, [x], [x2]) == pytest.approx(1, abs=1e-14)

    @pytest.mark.parametrize("beta", [0.5, 1.0])
    def test_x_generator_cosine_kernel(self, beta):
        fm = genome_to_feature_map(StructureGenome((0,), (0,)), ("X",), 1, 1, bandwidth=beta)
        x, x2 = 0.4, -1.1
        assert fidelity_exact(fm, [x], [x2]) == pytest.approx(np.cos(beta * (x - x2) / 2) ** 2, abs=1e-12)

    def test_identical_genomes_bind_identically(self):
        gens = default_generators(2)
        a = genome_to_feature_map(StructureGenome((3, 10), (0, 1)), gens, 2, 2)
        b = genome_to_feature_map(StructureGenome((3, 10), (0, 1)), gens, 2, 2)
        assert bind(a, [0.1, 0.2]) == bind(b, [0.1, 0.2])

    def test_index_errors(self):
        with pytest.raises(ValueError):
            genome_to_feature_map(StructureGenome((5,), (0,)), ("X", "Z"), 1, 1)
        with pytest.raises(ValueError):
            genome_to_feature_map(StructureGenome((0,), (3,)), ("X",), 1, 2)
        with pytest.raises(ValueError):
            genome_to_feature_map(StructureGenome((0,), (0,)), (), 1, 1)

    def test_random_genome(self):
        gens = ("X", "Y", "Z")
        assert random_genome(gens, 3, 2, 5) == random_genome(gens, 3, 2, 5)
        g = random_genome(gens, 3, 2, 5)
        assert len(g.slot_generators) == len(g.slot_features) == 3

    def test_random_genome_uniform(self):
        draws = [random_genome(("X", "Z"), 1, 1, s).slot_generators[0] for s in range(10_000)]
        assert abs(np.mean(np.array(draws) == 0) - 0.5) <= 0.02

    def test_default_generators(self):
        gens = default_generators(2)
        assert len(gens) == 3 * 2 + 9
        assert "XI" in gens and "ZZ" in gens

    def test_enumeration_count(self):
        genomes = list(enumerate_genomes(3, 2, 1))
        assert len(genomes) == 9 and len({g.fingerprint for g in genomes}) == 9
