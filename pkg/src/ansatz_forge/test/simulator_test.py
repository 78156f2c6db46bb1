import math
import sys
import unittest
from pathlib import Path

import numpy as np
from numpy.testing import assert_allclose

sys.path.insert(0, str(Path(__file__).resolve().parent.parent.parent))

from ansatz_forge.circuit import CircuitBuilder
from ansatz_forge.errors import BindingError, OrderingError, SizeError, TargetError, UnsupportedError
from ansatz_forge.gates import controlled, fixed, rotation
from ansatz_forge.simulator import (
    apply_gate,
    basis_state,
    circuit_to_unitary,
    equal_up_to_global_phase,
    fidelity,
    measure_qubit,
    new_zero_state,
    run_branches,
    run_circuit,
    sample,
    state_from_amplitudes,
)


def _random_circuit(rng: np.random.Generator, n: int, depth: int):
    builder = CircuitBuilder(n)
    for _ in range(depth):
        choice = int(rng.integers(6))
        q = int(rng.integers(n))
        if choice == 0:
            builder.h(q)
        elif choice == 1:
            builder.rx(q, float(rng.uniform(-math.pi, math.pi)))
        elif choice == 2:
            builder.ry(q, float(rng.uniform(-math.pi, math.pi)))
        elif choice == 3:
            builder.rz(q, float(rng.uniform(-math.pi, math.pi)))
        elif n > 1:
            a, b = (int(x) for x in rng.choice(n, size=2, replace=False))
            if choice == 4:
                builder.cnot(a, b)
            else:
                builder.zz(a, b, float(rng.uniform(-math.pi, math.pi)))
    return builder.build()


class TestStatePreparation(unittest.TestCase):
    def test_zero_state_has_single_unit_amplitude(self) -> None:
        state = new_zero_state(3)
        self.assertEqual(state.amplitudes.shape, (8,))
        self.assertEqual(state.amplitudes[0], 1.0)
        self.assertAlmostEqual(state.norm, 1.0)

    def test_zero_state_rejects_zero_qubits(self) -> None:
        with self.assertRaises(SizeError):
            new_zero_state(0)

    def test_basis_state_uses_little_endian_index(self) -> None:
        state = basis_state(3, 0b101)
        self.assertEqual(state.amplitudes[5], 1.0)

    def test_state_from_amplitudes_normalizes_on_request(self) -> None:
        state = state_from_amplitudes([1.0, 1.0], normalize=True)
        assert_allclose(state.amplitudes, [1 / math.sqrt(2), 1 / math.sqrt(2)])

    def test_state_from_amplitudes_rejects_unnormalized_input(self) -> None:
        with self.assertRaises(SizeError):
            state_from_amplitudes([1.0, 1.0])

    def test_amplitudes_are_read_only(self) -> None:
        state = new_zero_state(1)
        with self.assertRaises(ValueError):
            state.amplitudes[0] = 0.0


class TestGateApplication(unittest.TestCase):
    def test_x_on_qubit_zero_sets_lowest_bit(self) -> None:
        state = apply_gate(new_zero_state(2), fixed("X"), (0,))
        self.assertAlmostEqual(abs(state.amplitudes[1]), 1.0)

    def test_cnot_flips_target_when_control_set(self) -> None:
        state = apply_gate(basis_state(2, 0b01), fixed("CNOT"), (0, 1))
        self.assertAlmostEqual(abs(state.amplitudes[0b11]), 1.0)

    def test_cnot_leaves_target_when_control_clear(self) -> None:
        state = apply_gate(basis_state(2, 0b10), fixed("CNOT"), (0, 1))
        self.assertAlmostEqual(abs(state.amplitudes[0b10]), 1.0)

    def test_bell_state_from_h_and_cnot(self) -> None:
        circuit = CircuitBuilder(2).h(0).cnot(0, 1).build()
        state, _ = run_circuit(circuit, {}, new_zero_state(2))
        assert_allclose(np.abs(state.amplitudes) ** 2, [0.5, 0.0, 0.0, 0.5], atol=1e-12)

    def test_controlled_rx_by_pi_matches_cnot_up_to_phase_on_control_subspace(self) -> None:
        state = apply_gate(basis_state(2, 0b01), controlled(rotation("RX", math.pi)), (0, 1))
        self.assertAlmostEqual(abs(state.amplitudes[0b11]), 1.0)

    def test_duplicate_targets_are_rejected(self) -> None:
        with self.assertRaises(TargetError):
            apply_gate(new_zero_state(2), fixed("CNOT"), (1, 1))

    def test_unbound_parameter_is_rejected(self) -> None:
        builder = CircuitBuilder(1)
        builder.rx(0, builder.parameter("theta"))
        with self.assertRaises(BindingError):
            run_circuit(builder.build(), {}, new_zero_state(1))

    def test_random_circuits_preserve_norm(self) -> None:
        rng = np.random.default_rng(11)
        for _ in range(1000):
            n = int(rng.integers(1, 9))
            circuit = _random_circuit(rng, n, int(rng.integers(1, 51)))
            state, _ = run_circuit(circuit, {}, new_zero_state(n))
            self.assertAlmostEqual(state.norm, 1.0, delta=1e-10)

    def test_composed_unitary_is_product_in_reverse_order(self) -> None:
        rng = np.random.default_rng(14)
        for _ in range(20):
            n = int(rng.integers(1, 5))
            first, second = _random_circuit(rng, n, 12), _random_circuit(rng, n, 12)
            combined = circuit_to_unitary(first.compose(second), {})
            product = circuit_to_unitary(second, {}) @ circuit_to_unitary(first, {})
            assert_allclose(combined, product, atol=1e-10)

    def test_compose_renumbers_measurement_records(self) -> None:
        head = CircuitBuilder(2)
        head.x(0)
        head.measure(0)
        tail = CircuitBuilder(2)
        record = tail.measure(0)
        tail.append(fixed("X"), (1,), condition=record)
        combined = head.build().compose(tail.build())
        self.assertEqual(combined.num_measurements, 2)
        self.assertEqual(combined.ops[-1].condition, 1)
        state, records = run_circuit(combined, {}, new_zero_state(2), np.random.default_rng(3))
        self.assertEqual([r.outcome for r in records], [1, 1])
        self.assertAlmostEqual(abs(state.amplitudes[0b11]), 1.0)

    def test_compose_rejects_different_register_sizes(self) -> None:
        with self.assertRaises(TargetError):
            CircuitBuilder(1).build().compose(CircuitBuilder(2).build())

    def test_random_unitaries_are_unitary(self) -> None:
        rng = np.random.default_rng(12)
        for _ in range(50):
            n = int(rng.integers(1, 7))
            u = circuit_to_unitary(_random_circuit(rng, n, 20), {})
            assert_allclose(u.conj().T @ u, np.eye(1 << n), atol=1e-10)

    def test_unitary_column_matches_state_run(self) -> None:
        rng = np.random.default_rng(13)
        circuit = _random_circuit(rng, 3, 15)
        u = circuit_to_unitary(circuit, {})
        state, _ = run_circuit(circuit, {}, basis_state(3, 6))
        assert_allclose(u[:, 6], state.amplitudes, atol=1e-12)

    def test_global_phase_comparison(self) -> None:
        u = circuit_to_unitary(CircuitBuilder(1).rz(0, 0.3).build(), {})
        self.assertTrue(equal_up_to_global_phase(u, np.exp(0.7j) * u))
        self.assertFalse(equal_up_to_global_phase(u, np.eye(2)))


class TestMeasurement(unittest.TestCase):
    def test_measuring_basis_state_is_deterministic(self) -> None:
        record, state = measure_qubit(basis_state(2, 0b10), 1, np.random.default_rng(0))
        self.assertEqual(record.outcome, 1)
        self.assertAlmostEqual(record.probability, 1.0)
        self.assertAlmostEqual(abs(state.amplitudes[0b10]), 1.0)

    def test_measurement_needs_rng(self) -> None:
        builder = CircuitBuilder(1)
        builder.h(0)
        builder.measure(0)
        with self.assertRaises(UnsupportedError):
            run_circuit(builder.build(), {}, new_zero_state(1))

    def test_same_seed_gives_identical_runs(self) -> None:
        builder = CircuitBuilder(2)
        builder.h(0)
        record = builder.measure(0)
        builder.append(fixed("X"), (1,), condition=record)
        circuit = builder.build()
        first = [run_circuit(circuit, {}, new_zero_state(2), np.random.default_rng(5))[1] for _ in range(3)]
        second = [run_circuit(circuit, {}, new_zero_state(2), np.random.default_rng(5))[1] for _ in range(3)]
        self.assertEqual(first, second)

    def test_conditioned_gate_follows_record(self) -> None:
        builder = CircuitBuilder(2)
        builder.x(0)
        record = builder.measure(0)
        builder.append(fixed("X"), (1,), condition=record)
        state, records = run_circuit(builder.build(), {}, new_zero_state(2), np.random.default_rng(1))
        self.assertEqual(records[0].outcome, 1)
        self.assertAlmostEqual(abs(state.amplitudes[0b11]), 1.0)

    def test_condition_on_future_record_is_an_ordering_error(self) -> None:
        builder = CircuitBuilder(2)
        with self.assertRaises(OrderingError):
            builder.append(fixed("X"), (1,), condition=0)

    def test_branches_cover_all_outcomes_with_exact_weights(self) -> None:
        builder = CircuitBuilder(2)
        builder.ry(0, 2 * math.acos(math.sqrt(0.3)))
        record = builder.measure(0)
        builder.append(fixed("X"), (1,), condition=record)
        branches = run_branches(builder.build(), {}, new_zero_state(2))
        weights = sorted(branch.probability for branch in branches)
        assert_allclose(weights, [0.3, 0.7], atol=1e-12)
        for branch in branches:
            expected = 0b11 if branch.records[0].outcome == 1 else 0b00
            self.assertAlmostEqual(abs(branch.state.amplitudes[expected]), 1.0)

    def test_deferred_measurement_matches_branch_average(self) -> None:
        angle = 1.1
        measured = CircuitBuilder(2)
        measured.ry(0, angle)
        record = measured.measure(0)
        measured.append(rotation("RY", 0.4), (1,), condition=record)
        branches = run_branches(measured.build(), {}, new_zero_state(2))
        p1_measured = sum(b.probability * b.state.probabilities()[0b10] for b in branches)
        p1_measured += sum(b.probability * b.state.probabilities()[0b11] for b in branches)

        deferred = CircuitBuilder(2)
        deferred.ry(0, angle)
        deferred.controlled(rotation("RY", 0.4), (0,), (1,))
        state, _ = run_circuit(deferred.build(), {}, new_zero_state(2))
        probabilities = state.probabilities()
        self.assertAlmostEqual(p1_measured, probabilities[0b10] + probabilities[0b11], places=12)

    def test_sample_counts_sum_to_shots_and_use_msb_first_keys(self) -> None:
        counts = sample(basis_state(3, 0b001), 100, np.random.default_rng(2))
        self.assertEqual(counts, {"001": 100})

    def test_measurement_after_hadamard_is_fair(self) -> None:
        rng = np.random.default_rng(41)
        plus, _ = run_circuit(CircuitBuilder(1).h(0).build(), {}, new_zero_state(1))
        ones = sum(measure_qubit(plus, 0, rng)[0].outcome for _ in range(10_000))
        self.assertAlmostEqual(ones / 10_000, 0.5, delta=0.02)

    def test_bell_samples_split_evenly_between_correlated_outcomes(self) -> None:
        bell, _ = run_circuit(CircuitBuilder(2).h(0).cnot(0, 1).build(), {}, new_zero_state(2))
        counts = sample(bell, 10_000, np.random.default_rng(42))
        self.assertEqual(set(counts), {"00", "11"})
        self.assertEqual(sum(counts.values()), 10_000)
        self.assertAlmostEqual(counts["00"] / 10_000, 0.5, delta=0.02)

    def test_record_probability_follows_born_rule(self) -> None:
        rng = np.random.default_rng(43)
        state = state_from_amplitudes([0.6, 0.8])
        ones = 0
        for _ in range(10_000):
            record, collapsed = measure_qubit(state, 0, rng)
            self.assertAlmostEqual(record.probability, 0.64 if record.outcome else 0.36, places=12)
            self.assertAlmostEqual(abs(collapsed.amplitudes[record.outcome]), 1.0, places=12)
            ones += record.outcome
        self.assertAlmostEqual(ones / 10_000, 0.64, delta=0.02)

    def test_fidelity_of_orthogonal_states_is_zero(self) -> None:
        self.assertAlmostEqual(fidelity(basis_state(1, 0), basis_state(1, 1)), 0.0)


if __name__ == "__main__":
    unittest.main()
