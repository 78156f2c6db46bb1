import sys
import unittest
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent.parent))

from ansatz_forge.adapt import adapt_energy, adapt_vqe_run, y_local_pool
from ansatz_forge.errors import HamiltonianError
from ansatz_forge.hamiltonian import PauliString, PauliSum, exact_ground, tfim_hamiltonian
from ansatz_forge.variational import OptimizerConfig

MINUS_X = PauliSum.from_labels(1, [(-1.0, "X0")])
SINGLE_QUBIT_POOL = [PauliString.from_label(1, "Y0"), PauliString.from_label(1, "Z0")]


class TestOperatorPool(unittest.TestCase):
    def test_y_local_pool_contents(self) -> None:
        pool = y_local_pool(4)
        self.assertEqual(len(pool), 34)
        self.assertEqual(len(set(pool)), 34)
        self.assertTrue(all("Y" in string.label for string in pool))
        self.assertEqual(pool[0].label, "Y0")

    def test_single_qubit_pool(self) -> None:
        self.assertEqual([s.label for s in y_local_pool(1)], ["Y0"])


class TestAdaptVqe(unittest.TestCase):
    def test_selects_y_and_reaches_ground_energy(self) -> None:
        result, state = adapt_vqe_run(MINUS_X, SINGLE_QUBIT_POOL, OptimizerConfig())
        self.assertEqual(state.chosen_indices[0], 0)
        self.assertEqual(state.chosen[0].label, "Y0")
        self.assertAlmostEqual(result.best_value, -1.0, delta=1e-6)
        self.assertAlmostEqual(result.exact_energy, -1.0, places=10)
        self.assertAlmostEqual(state.energy_trace[0], 0.0, places=12)
        self.assertAlmostEqual(adapt_energy(MINUS_X, state), result.best_value, places=10)

    def test_large_epsilon_chooses_nothing(self) -> None:
        result, state = adapt_vqe_run(MINUS_X, SINGLE_QUBIT_POOL, OptimizerConfig(), epsilon=10.0)
        self.assertEqual(state.depth, 0)
        self.assertEqual(len(state.gradient_trace), 1)
        self.assertAlmostEqual(result.best_value, 0.0, places=12)

    def test_candidate_scoring_shifts_only_the_new_parameter(self) -> None:
        _, state = adapt_vqe_run(MINUS_X, SINGLE_QUBIT_POOL, OptimizerConfig(), epsilon=10.0)
        # one reference evaluation, then one shift pair per pool candidate
        self.assertEqual(state.evaluations, 1 + 2 * len(SINGLE_QUBIT_POOL))

    def test_reference_occupation_is_applied(self) -> None:
        h = PauliSum.from_labels(1, [(1.0, "Z0")])
        result, state = adapt_vqe_run(h, [PauliString.from_label(1, "Y0")], OptimizerConfig(), reference=(0,))
        self.assertEqual(state.depth, 0)
        self.assertAlmostEqual(result.best_value, -1.0, places=12)
        self.assertAlmostEqual(adapt_energy(h, state), -1.0, places=12)

    def test_max_depth_bounds_growth(self) -> None:
        h = tfim_hamiltonian(3, 1.0)
        _, state = adapt_vqe_run(h, y_local_pool(3), OptimizerConfig(method="bfgs"), max_depth=2)
        self.assertEqual(state.depth, 2)
        self.assertEqual(len(state.energy_trace), 3)

    def test_tfim_energy_trace_is_monotone_and_reaches_ground(self) -> None:
        h = tfim_hamiltonian(4, 1.0)
        config = OptimizerConfig(method="bfgs", max_iters=300, tolerance=1e-9)
        result, state = adapt_vqe_run(h, y_local_pool(4), config, epsilon=1e-4, max_depth=20)
        for previous, current in zip(state.energy_trace, state.energy_trace[1:]):
            self.assertLessEqual(current, previous + 1e-6)
        ground, _ = exact_ground(h)
        self.assertLess(result.best_value - ground, 1e-3)
        self.assertEqual(result.evaluations, state.evaluations)
        self.assertAlmostEqual(adapt_energy(h, state), result.best_value, places=8)

    def test_empty_pool_is_rejected(self) -> None:
        with self.assertRaises(HamiltonianError):
            adapt_vqe_run(MINUS_X, [], OptimizerConfig())

    def test_pool_on_wrong_qubit_count_is_rejected(self) -> None:
        with self.assertRaises(HamiltonianError):
            adapt_vqe_run(MINUS_X, y_local_pool(2), OptimizerConfig())


if __name__ == "__main__":
    unittest.main()
