import math
import sys
import unittest
from pathlib import Path

import numpy as np
from numpy.testing import assert_allclose
from scipy.linalg import expm

sys.path.insert(0, str(Path(__file__).resolve().parent.parent.parent))

from ansatz_forge.ansatz_builders import (
    MERA_SIZES,
    adapt_blueprint,
    entangler_schedule,
    hea_ansatz,
    hva_ansatz,
    mera_ansatz,
    mera_levels,
    parse_generator,
    pauli_exponential,
    qaoa_ansatz,
    qce_embedding,
    qcnn_ansatz,
    qcnn_readout,
    qcnn_rounds,
    qnn_filter_ansatz,
    spa_a_gate,
    spa_ansatz,
    ucc_ansatz,
)
from ansatz_forge.ansatz_catalog import (
    build_blueprint,
    catalog_list,
    catalog_show,
    config_schema,
    family_names,
)
from ansatz_forge.circuit import CircuitBuilder
from ansatz_forge.errors import (
    CatalogLookupError,
    DimensionError,
    HamiltonianError,
    SizeError,
    ValidationFailure,
)
from ansatz_forge.hamiltonian import (
    PAULI_LETTERS,
    Graph,
    PauliString,
    PauliSum,
    maxcut_hamiltonian,
    pauli_matrix,
    tfim_hamiltonian,
    tfim_hva_groups,
)
from ansatz_forge.simulator import circuit_to_unitary, equal_up_to_global_phase, new_zero_state, run_circuit
from ansatz_forge.variational import Objective, evaluate


def _random_binding(rng: np.random.Generator, names) -> dict[str, float]:
    return {name: float(rng.uniform(-math.pi, math.pi)) for name in names}


def _random_string(rng: np.random.Generator, n: int) -> PauliString:
    while True:
        letters = tuple((q, PAULI_LETTERS[int(rng.integers(3))]) for q in range(n) if rng.random() < 0.6)
        if letters:
            return PauliString(n, letters)


class TestPauliExponential(unittest.TestCase):
    def test_matches_dense_matrix_exponential(self) -> None:
        rng = np.random.default_rng(21)
        for _ in range(100):
            n = int(rng.integers(1, 6))
            string = _random_string(rng, n)
            theta = float(rng.uniform(-math.pi, math.pi))
            u = circuit_to_unitary(pauli_exponential(string, "t"), {"t": theta})
            dense = expm(-0.5j * theta * pauli_matrix(PauliSum(n, ((1.0, string),))))
            self.assertTrue(equal_up_to_global_phase(u, dense), string.label)

    def test_prefactor_scales_the_angle(self) -> None:
        string = PauliString.from_label(2, "Y0 X1")
        scaled = circuit_to_unitary(pauli_exponential(string, "t", prefactor=-2.0), {"t": 0.3})
        direct = circuit_to_unitary(pauli_exponential(string, "t"), {"t": -0.6})
        assert_allclose(scaled, direct, atol=1e-12)

    def test_identity_string_is_rejected(self) -> None:
        with self.assertRaises(HamiltonianError):
            pauli_exponential(PauliString(2), "t")

    def test_parse_generator_reads_signed_coefficient(self) -> None:
        coefficient, string = parse_generator(2, "-1 Y0 X1")
        self.assertEqual(coefficient, -1.0)
        self.assertEqual(string.label, "Y0 X1")
        self.assertEqual(parse_generator(2, "Z1")[0], 1.0)


class TestVqeFamilies(unittest.TestCase):
    def test_ucc_shares_one_parameter_per_group(self) -> None:
        groups = [[parse_generator(4, "Y0 X1"), parse_generator(4, "-1 X0 Y1")], [parse_generator(4, "Y2 X3")]]
        blueprint = ucc_ansatz(groups, reference=(0, 2))
        circuit = blueprint.build()
        self.assertEqual(blueprint.parameter_names, ("ucc_0", "ucc_1"))
        self.assertEqual(circuit.count("X"), 2)
        self.assertEqual(sum(1 for occ in circuit.occurrences() if occ.name == "ucc_0"), 2)

    def test_ucc_at_zero_is_identity(self) -> None:
        groups = [[parse_generator(4, "Y0 X1"), parse_generator(4, "-1 X0 Y1")], [parse_generator(4, "X0 Z1 Z2 Y3")]]
        blueprint = ucc_ansatz(groups)
        u = circuit_to_unitary(blueprint.build(), blueprint.zero_binding())
        self.assertTrue(equal_up_to_global_phase(u, np.eye(16)))

    def test_hea_layer_structure(self) -> None:
        circuit = hea_ansatz(2, 1).build()
        self.assertEqual(len(circuit.parameters), 6)
        self.assertEqual(circuit.count("RX") + circuit.count("RZ"), 6)
        self.assertEqual(circuit.count("CNOT"), 2)
        deeper = hea_ansatz(3, 2).build()
        self.assertEqual(len(deeper.parameters), 18)
        self.assertEqual(deeper.count("CNOT"), 6)

    def test_hea_figure_entangler_needs_four_qubits(self) -> None:
        self.assertEqual(hea_ansatz(4, 2, "figure2").num_parameters, 2 * (12 + 4))
        with self.assertRaises(SizeError):
            hea_ansatz(3, 1, "figure2")

    def test_spa_gate_keeps_00_and_11(self) -> None:
        rng = np.random.default_rng(22)
        circuit = spa_a_gate("theta", "phi")
        for _ in range(10):
            u = circuit_to_unitary(circuit, _random_binding(rng, circuit.parameters))
            self.assertAlmostEqual(abs(u[0, 0]), 1.0, places=10)
            self.assertAlmostEqual(abs(u[3, 3]), 1.0, places=10)

    def test_spa_gate_maps_every_basis_input_within_its_weight(self) -> None:
        rng = np.random.default_rng(26)
        circuit = spa_a_gate("theta", "phi")
        weight = [bin(i).count("1") for i in range(4)]
        for _ in range(10):
            u = circuit_to_unitary(circuit, _random_binding(rng, circuit.parameters))
            for column in range(4):
                leaked = sum(abs(u[row, column]) ** 2 for row in range(4) if weight[row] != weight[column])
                self.assertLess(leaked, 1e-10)

    def test_spa_gate_counts(self) -> None:
        single = spa_ansatz(2, 1)
        self.assertEqual(single.num_parameters, 2)
        self.assertEqual(single.build().count("CNOT"), 3)
        brick = spa_ansatz(4, 2)
        self.assertEqual(brick.num_parameters, 12)
        self.assertEqual(brick.build().count("CNOT"), 6 * 3)

    def test_spa_conserves_hamming_weight(self) -> None:
        rng = np.random.default_rng(23)
        blueprint = spa_ansatz(4, 2)
        circuit = blueprint.build()
        weight_two = [i for i in range(16) if bin(i).count("1") == 2]
        outside = [i for i in range(16) if bin(i).count("1") != 2]
        for _ in range(200):
            u = circuit_to_unitary(circuit, _random_binding(rng, blueprint.parameter_names))
            leaked = np.sum(np.abs(u[np.ix_(outside, weight_two)]) ** 2, axis=0)
            self.assertLess(float(leaked.max()), 1e-10)

    def test_adapt_blueprint_names_parameters_in_order(self) -> None:
        strings = [PauliString.from_label(2, "Y0"), PauliString.from_label(2, "X0 Y1")]
        blueprint = adapt_blueprint(2, strings)
        self.assertEqual(blueprint.family, "ADAPT")
        self.assertEqual(blueprint.parameter_names, ("adapt_0", "adapt_1"))


class TestQaoaFamilies(unittest.TestCase):
    def setUp(self) -> None:
        self.cost, _ = maxcut_hamiltonian(Graph(3, ((0, 1), (1, 2), (0, 2))))

    def test_qaoa_parameters_alternate_gamma_beta(self) -> None:
        circuit = qaoa_ansatz(self.cost, "x_mixer", 2).build()
        self.assertEqual(circuit.parameters, ("qaoa_0", "qaoa_1", "qaoa_2", "qaoa_3"))
        self.assertEqual(circuit.count("ZZ"), 6)
        self.assertEqual(circuit.count("RX"), 6)
        self.assertEqual(circuit.count("H"), 3)

    def test_qaoa_at_zero_prepares_uniform_superposition(self) -> None:
        for mixer in ("x_mixer", "xy_ring"):
            blueprint = qaoa_ansatz(self.cost, mixer, 2)
            state, _ = run_circuit(blueprint.build(), blueprint.zero_binding(), new_zero_state(3))
            assert_allclose(state.amplitudes, np.full(8, 1 / math.sqrt(8)), atol=1e-12)

    def test_qaoa_x_mixer_rejects_non_diagonal_cost(self) -> None:
        with self.assertRaises(HamiltonianError):
            qaoa_ansatz(PauliSum.from_labels(2, [(1.0, "X0 X1")]), "x_mixer", 1)

    def test_qaoa_initial_bitstring_replaces_hadamards(self) -> None:
        circuit = qaoa_ansatz(self.cost, "xy_ring", 1, initial_bitstring="011").build()
        first_ops = [(op.gate.kind, op.targets) for op in circuit.ops[:2]]
        self.assertEqual(first_ops, [("X", (0,)), ("X", (1,))])
        with self.assertRaises(DimensionError):
            qaoa_ansatz(self.cost, "xy_ring", 1, initial_bitstring="01")

    def test_xy_mixer_conserves_hamming_weight(self) -> None:
        rng = np.random.default_rng(24)
        blueprint = qaoa_ansatz(self.cost, "xy_ring", 2, initial_bitstring="011")
        outside = [i for i in range(8) if bin(i).count("1") != 2]
        for _ in range(10):
            binding = _random_binding(rng, blueprint.parameter_names)
            state, _ = run_circuit(blueprint.build(), binding, new_zero_state(3))
            self.assertLess(float(np.sum(state.probabilities()[outside])), 1e-10)

    def test_hva_uses_one_parameter_per_group(self) -> None:
        h = tfim_hamiltonian(4, 1.0, "ring")
        circuit = hva_ansatz(h, tfim_hva_groups(4, "ring"), 2).build()
        self.assertEqual(len(circuit.parameters), 6)
        self.assertEqual(circuit.count("H"), 4)
        self.assertEqual(circuit.count("ZZ"), 8)
        self.assertEqual(circuit.count("RX"), 8)

    def test_hva_rejects_incomplete_partition(self) -> None:
        h = tfim_hamiltonian(4, 1.0, "ring")
        with self.assertRaises(HamiltonianError):
            hva_ansatz(h, tfim_hva_groups(4, "ring")[:2], 1)

    def test_hva_zero_parameters_leave_plus_state_energy(self) -> None:
        h = tfim_hamiltonian(4, 1.0, "ring")
        blueprint = hva_ansatz(h, tfim_hva_groups(4, "ring"), 1)
        self.assertAlmostEqual(evaluate(Objective(blueprint, h), blueprint.zero_binding()), -4.0, places=12)


class TestQmlFamilies(unittest.TestCase):
    def test_qce_figure_mode(self) -> None:
        blueprint = qce_embedding([0.1, 0.2, 0.3])
        circuit = blueprint.build()
        self.assertEqual(blueprint.num_parameters, 8)
        self.assertEqual(circuit.count("ZZ"), 4)
        self.assertEqual(circuit.count("H"), 1)
        with self.assertRaises(DimensionError):
            qce_embedding([0.1, 0.2, 0.3, 0.4])

    def test_qce_at_zero_only_applies_hadamard_to_last_qubit(self) -> None:
        blueprint = qce_embedding([0.0, 0.0, 0.0])
        state, _ = run_circuit(blueprint.build(), blueprint.zero_binding(), new_zero_state(4))
        expected = np.zeros(16)
        expected[0] = expected[0b1000] = 1 / math.sqrt(2)
        assert_allclose(state.amplitudes, expected, atol=1e-12)

    def test_qce_general_mode(self) -> None:
        blueprint = qce_embedding([0.1] * 5, n=5, mode="general")
        self.assertEqual(blueprint.num_parameters, 10)

    def test_mera_levels(self) -> None:
        self.assertEqual(mera_levels(8), [[2, 5], [1, 2, 5, 6], list(range(8))])
        self.assertEqual(qcnn_readout(4), 1)
        self.assertEqual(qcnn_readout(8), 2)
        self.assertEqual([qcnn_rounds(4), qcnn_rounds(8)], [1, 2])

    def test_mera_has_one_layer_per_doubling(self) -> None:
        for n in MERA_SIZES:
            circuit = mera_ansatz(n).build()
            layers = {op.tag for op in circuit.ops if op.tag and op.tag.startswith("unitary/")}
            self.assertEqual(len(layers), int(math.log2(n)), f"n={n}")
            self.assertEqual(len(mera_levels(n)), int(math.log2(n)), f"n={n}")

    def test_mera_at_zero_reduces_to_cnot_skeleton(self) -> None:
        for n in (2, 4, 8):
            blueprint = mera_ansatz(n)
            circuit = blueprint.build()
            skeleton = CircuitBuilder(n)
            for op in circuit.ops:
                if op.gate.kind == "CNOT":
                    skeleton.cnot(*op.targets)
            self.assertTrue(
                equal_up_to_global_phase(
                    circuit_to_unitary(circuit, blueprint.zero_binding()),
                    circuit_to_unitary(skeleton.build(), {}),
                ),
                f"n={n}",
            )

    def test_reversed_mera_schedule_matches_qcnn(self) -> None:
        for n in (4, 8):
            mera = entangler_schedule(mera_ansatz(n).build().reversed())
            for deferred in (False, True):
                qcnn = entangler_schedule(qcnn_ansatz(n, deferred).build())
                self.assertEqual(mera, qcnn, f"n={n}, deferred={deferred}")

    def test_qcnn_deferred_form_matches_measured_form(self) -> None:
        rng = np.random.default_rng(25)
        n = 4
        measured = qcnn_ansatz(n)
        deferred = qcnn_ansatz(n, deferred=True)
        self.assertTrue(measured.build().has_mid_circuit_measurement())
        self.assertFalse(deferred.build().has_measurements)
        self.assertEqual(measured.parameter_names, deferred.parameter_names)
        readout = PauliSum(n, ((1.0, PauliString(n, ((measured.readout, "Z"),))),))
        for _ in range(5):
            binding = _random_binding(rng, measured.parameter_names)
            self.assertAlmostEqual(
                evaluate(Objective(measured, readout), binding),
                evaluate(Objective(deferred, readout), binding),
                delta=1e-10,
            )

    def test_qcnn_rejects_unsupported_size(self) -> None:
        with self.assertRaises(SizeError):
            qcnn_ansatz(6)

    def test_qnn_filter_variants(self) -> None:
        layered = qnn_filter_ansatz(layers=1).build()
        self.assertEqual(layered.count("RY"), 4)
        self.assertEqual(layered.count("CNOT"), 3)
        first = qnn_filter_ansatz(random_gates=12, seed=4).build()
        second = qnn_filter_ansatz(random_gates=12, seed=4).build()
        self.assertEqual(first, second)
        with self.assertRaises(SizeError):
            qnn_filter_ansatz(random_gates=3)


class TestCatalog(unittest.TestCase):
    def test_catalog_lists_ten_families_by_class(self) -> None:
        entries = catalog_list()
        self.assertEqual(len(entries), 10)
        self.assertEqual(family_names(), ["UCC", "HEA", "ADAPT", "SPA", "QAOA", "HVA", "QCE", "MERA", "QNN", "QCNN"])
        classes = [entry.vqa_class for entry in entries]
        self.assertEqual(classes, ["VQE"] * 4 + ["QAOA"] * 2 + ["QML"] * 4)

    def test_catalog_descriptions(self) -> None:
        self.assertIn("customizes the initialization state", catalog_show("HEA").description)
        self.assertIn("encoding conventional data into quantum states", catalog_show("QCE").description)

    def test_catalog_show_is_case_insensitive(self) -> None:
        self.assertEqual(catalog_show("hva").vqa_class, "QAOA")

    def test_unknown_family_lists_valid_names(self) -> None:
        with self.assertRaises(CatalogLookupError) as ctx:
            catalog_show("XYZ")
        self.assertIn("Valid families: UCC", str(ctx.exception))

    def test_config_schema_names_fields(self) -> None:
        self.assertIn("layers", config_schema("HEA")["properties"])

    def test_build_blueprint_from_dict(self) -> None:
        blueprint = build_blueprint({"family": "HVA", "n": 4, "layers": 1})
        self.assertEqual(blueprint.family, "HVA")
        self.assertEqual(blueprint.num_parameters, 3)
        qaoa = build_blueprint({"family": "QAOA", "graph": {"vertices": 3, "edges": [[0, 1], [1, 2]]}, "layers": 2})
        self.assertEqual(qaoa.num_parameters, 4)

    def test_build_blueprint_reports_field_path(self) -> None:
        with self.assertRaises(ValidationFailure) as ctx:
            build_blueprint({"family": "HEA", "n": 1})
        self.assertTrue(ctx.exception.field_path.endswith("n"))
        with self.assertRaises(ValidationFailure):
            build_blueprint({"family": "HEA", "n": 2, "depth": 3})


if __name__ == "__main__":
    unittest.main()
