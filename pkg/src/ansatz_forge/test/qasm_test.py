import math
import re
import sys
import unittest
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent.parent))

from ansatz_forge.ansatz_builders import hea_ansatz, qcnn_ansatz
from ansatz_forge.ansatz_catalog import build_blueprint
from ansatz_forge.circuit import CircuitBuilder
from ansatz_forge.errors import BindingError, ExportError
from ansatz_forge.gates import Gate, controlled, rotation
from ansatz_forge.qasm import format_angle, to_qasm
from ansatz_forge.simulator import circuit_to_unitary, equal_up_to_global_phase

GOLDEN_DIR = Path(__file__).resolve().parent / "golden"
GATE_LINE = re.compile(r"^(cx|rz\((?P<angle>[^)]+)\)) (?P<qubits>q\[\d+\](?:,q\[\d+\])*);$")


def _rebuild_cx_rz(text: str, num_qubits: int):
    """Read the cx/rz body of an exported program back into a circuit."""
    builder = CircuitBuilder(num_qubits)
    for line in text.splitlines()[3:]:
        match = GATE_LINE.match(line)
        if match is None:
            raise AssertionError(f"Unexpected QASM line: {line}")
        qubits = [int(q) for q in re.findall(r"\d+", match.group("qubits"))]
        if match.group("angle") is None:
            builder.cnot(qubits[0], qubits[1])
        else:
            builder.rz(qubits[0], float(match.group("angle")))
    return builder.build()


class TestQasmExport(unittest.TestCase):
    def test_hva_matches_golden_file(self) -> None:
        blueprint = build_blueprint({"family": "HVA", "n": 4, "layers": 1, "g": 1.0, "boundary": "ring"})
        text = to_qasm(blueprint.build(), blueprint.zero_binding())
        expected = (GOLDEN_DIR / "hva_tfim_n4_p1_zeros.qasm").read_text(encoding="utf-8")
        self.assertEqual(text, expected)

    def test_hea_rotation_and_entangler_lines(self) -> None:
        blueprint = hea_ansatz(2, 1)
        lines = to_qasm(blueprint.build(), blueprint.zero_binding()).splitlines()
        self.assertEqual(lines[:3], ["OPENQASM 2.0;", 'include "qelib1.inc";', "qreg q[2];"])
        rotations = [line for line in lines if line.startswith(("rx(", "rz("))]
        self.assertEqual(len(rotations), 6)
        self.assertEqual(lines[-2:], ["cx q[0],q[1];", "cx q[1],q[0];"])

    def test_zz_decomposition_has_the_zz_unitary(self) -> None:
        rng = np.random.default_rng(31)
        for a, b in [(0, 1), (1, 0), (0, 2), (2, 1)]:
            theta = float(rng.uniform(-math.pi, math.pi))
            builder = CircuitBuilder(3)
            builder.zz(a, b, theta)
            circuit = builder.build()
            rebuilt = _rebuild_cx_rz(to_qasm(circuit, {}), 3)
            self.assertEqual(rebuilt.count("CNOT"), 2)
            self.assertTrue(
                equal_up_to_global_phase(circuit_to_unitary(rebuilt, {}), circuit_to_unitary(circuit, {})),
                f"ZZ on {(a, b)} with theta={theta}",
            )

    def test_angles_use_round_trip_precision(self) -> None:
        self.assertEqual(format_angle(-0.0), "0")
        self.assertEqual(float(format_angle(math.pi)), math.pi)

    def test_r2_and_its_adjoint_decompose_in_opposite_order(self) -> None:
        builder = CircuitBuilder(1)
        builder.r2(0, 0.25, 0.5)
        builder.r2(0, 0.25, 0.5, adjoint=True)
        lines = to_qasm(builder.build(), {}).splitlines()[3:]
        self.assertEqual(lines, ["ry(0.25) q[0];", "rz(0.5) q[0];", "rz(-0.5) q[0];", "ry(-0.25) q[0];"])

    def test_controlled_rotations_map_to_cu3(self) -> None:
        builder = CircuitBuilder(2)
        builder.controlled(rotation("RY", 0.5), (0,), (1,))
        builder.controlled(rotation("RZ", 0.5), (1,), (0,))
        lines = to_qasm(builder.build(), {}).splitlines()[3:]
        self.assertEqual(lines, ["cu3(0.5,0,0) q[0],q[1];", "crz(0.5) q[1],q[0];"])

    def test_measured_qcnn_uses_per_record_registers(self) -> None:
        blueprint = qcnn_ansatz(4)
        text = to_qasm(blueprint.build(), blueprint.zero_binding())
        self.assertIn("creg m0[1];", text)
        self.assertIn("creg m1[1];", text)
        self.assertIn("measure q[0] -> m0[0];", text)
        self.assertIn("if(m0==1) u3(0,0,0) q[1];", text)

    def test_unmappable_gate_raises_export_error(self) -> None:
        builder = CircuitBuilder(3)
        builder.controlled(rotation("RY", 0.1), (0, 1), (2,))
        with self.assertRaises(ExportError):
            to_qasm(builder.build(), {})

    def test_missing_binding_raises(self) -> None:
        blueprint = hea_ansatz(2, 1)
        with self.assertRaises(BindingError):
            to_qasm(blueprint.build(), {})

    def test_export_does_not_mutate_circuit(self) -> None:
        circuit = CircuitBuilder(1).append(Gate("S", adjoint=True), (0,)).build()
        self.assertEqual(to_qasm(circuit, {}).splitlines()[-1], "sdg q[0];")
        self.assertEqual(to_qasm(circuit, {}).splitlines()[-1], "sdg q[0];")


if __name__ == "__main__":
    unittest.main()
