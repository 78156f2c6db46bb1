from __future__ import annotations

import logging
import math
from typing import Mapping

from ansatz_forge.circuit import Circuit, Operation
from ansatz_forge.errors import ExportError
from ansatz_forge.gates import Gate

logger = logging.getLogger("ansatz-forge-qasm")

QASM_HEADER = ('OPENQASM 2.0;', 'include "qelib1.inc";')

_SIMPLE_NAMES = {
    "H": "h",
    "X": "x",
    "Y": "y",
    "Z": "z",
    "RX": "rx",
    "RY": "ry",
    "RZ": "rz",
    "U3": "u3",
    "CNOT": "cx",
    "CZ": "cz",
    "SWAP": "swap",
}
_SELF_INVERSE = {"H", "X", "Y", "Z", "CNOT", "CZ", "SWAP"}
_CONTROLLED_NAMES = {"X": "cx", "Y": "cy", "Z": "cz", "H": "ch", "RZ": "crz"}


def format_angle(value: float) -> str:
    if value == 0.0:
        value = 0.0  # folds -0.0 into 0
    return format(float(value), ".17g")


def _qubits(targets: tuple[int, ...]) -> str:
    return ",".join(f"q[{t}]" for t in targets)


def _call(name: str, angles: tuple[float, ...], targets: tuple[int, ...]) -> str:
    if angles:
        return f"{name}({','.join(format_angle(a) for a in angles)}) {_qubits(targets)};"
    return f"{name} {_qubits(targets)};"


def _uncontrolled_lines(gate: Gate, targets: tuple[int, ...]) -> list[str]:
    params = tuple(float(p) for p in gate.params)
    kind = gate.kind
    if kind == "ZZ":
        a, b = targets
        return [_call("cx", (), (a, b)), _call("rz", params, (b,)), _call("cx", (), (a, b))]
    if kind == "R2":
        theta, phi = params
        if gate.adjoint:
            return [_call("rz", (-phi,), targets), _call("ry", (-theta,), targets)]
        return [_call("ry", (theta,), targets), _call("rz", (phi,), targets)]
    if kind == "S":
        return [_call("sdg" if gate.adjoint else "s", (), targets)]
    if kind not in _SIMPLE_NAMES:
        raise ExportError(f"Gate {gate.label} has no OpenQASM 2.0 mapping")
    if gate.adjoint and kind not in _SELF_INVERSE:
        if kind == "U3":
            theta, phi, lam = params
            params = (-theta, -lam, -phi)
        else:
            params = tuple(-p for p in params)
    return [_call(_SIMPLE_NAMES[kind], params, targets)]


def _controlled_lines(gate: Gate, targets: tuple[int, ...]) -> list[str]:
    inner = gate.inner
    if inner.adjoint and inner.kind not in _SELF_INVERSE:
        raise ExportError(f"Gate {gate.label} (adjoint inner gate) has no OpenQASM 2.0 mapping")
    params = tuple(float(p) for p in inner.params)
    if gate.num_controls == 2 and inner.kind == "X":
        return [_call("ccx", (), targets)]
    if gate.num_controls != 1:
        raise ExportError(f"Gate {gate.label} has no OpenQASM 2.0 mapping")
    if inner.kind in _CONTROLLED_NAMES:
        return [_call(_CONTROLLED_NAMES[inner.kind], params, targets)]
    if inner.kind == "RX":
        return [_call("cu3", (params[0], -math.pi / 2, math.pi / 2), targets)]
    if inner.kind == "RY":
        return [_call("cu3", (params[0], 0.0, 0.0), targets)]
    if inner.kind == "U3":
        return [_call("cu3", params, targets)]
    raise ExportError(f"Gate {gate.label} has no OpenQASM 2.0 mapping")


def _operation_lines(op: Operation, record_index: int) -> list[str]:
    if op.is_measurement:
        return [f"measure q[{op.targets[0]}] -> m{record_index}[0];"]
    gate = op.gate
    if gate.kind == "CONTROLLED":
        lines = _controlled_lines(gate, op.targets)
    else:
        lines = _uncontrolled_lines(gate, op.targets)
    if op.condition is not None:
        lines = [f"if(m{op.condition}==1) {line}" for line in lines]
    return lines


def to_qasm(circuit: Circuit, binding: Mapping[str, float]) -> str:
    """Render `circuit` as OpenQASM 2.0 text.

    Each measurement record i gets its own one-bit register `m{i}` so that
    classically controlled ops can use the `if(creg==1)` form.
    """
    bound = circuit.bind(binding)
    lines = list(QASM_HEADER)
    lines.append(f"qreg q[{bound.num_qubits}];")
    lines.extend(f"creg m{i}[1];" for i in range(bound.num_measurements))

    record_index = 0
    for op in bound.ops:
        lines.extend(_operation_lines(op, record_index))
        if op.is_measurement:
            record_index += 1

    logger.debug("Exported %d ops on %d qubits to OpenQASM", len(bound.ops), bound.num_qubits)
    return "\n".join(lines) + "\n"
