import unittest

TEST_MODULES = (
    "ansatz_forge.test.simulator_test",
    "ansatz_forge.test.hamiltonian_test",
    "ansatz_forge.test.ansatz_test",
    "ansatz_forge.test.qasm_test",
    "ansatz_forge.test.variational_test",
    "ansatz_forge.test.adapt_test",
    "ansatz_forge.test.qml_test",
    "ansatz_forge.test.cli_test",
)


def main() -> None:
    suite = unittest.defaultTestLoader.loadTestsFromNames(TEST_MODULES)
    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite)
    raise SystemExit(0 if result.wasSuccessful() else 1)
