from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping, Sequence

from ansatz_forge.errors import BindingError, OrderingError, TargetError
from ansatz_forge.gates import Angle, Gate, ParamRef, check_targets, controlled, fixed, r2, rotation, u3


@dataclass(frozen=True)
class Operation:
    """One circuit step.

    A gate op carries `gate`; a measurement op has `gate=None` and a single target.
    `condition` is the index of an earlier measurement record: the gate is applied
    only when that record's outcome is 1.
    """

    targets: tuple[int, ...]
    gate: Gate | None = None
    condition: int | None = None
    tag: str | None = None

    @property
    def is_measurement(self) -> bool:
        return self.gate is None


@dataclass(frozen=True)
class ParameterOccurrence:
    op_index: int
    slot: int
    name: str
    scale: float


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    ops: tuple[Operation, ...] = ()
    parameters: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise TargetError("A circuit needs at least one qubit")
        if len(set(self.parameters)) != len(self.parameters):
            raise BindingError(f"Duplicate names in parameter table: {self.parameters}")
        known = set(self.parameters)
        for op in self.ops:
            if op.is_measurement:
                if len(op.targets) != 1 or not 0 <= op.targets[0] < self.num_qubits:
                    raise TargetError(f"Invalid measurement target {op.targets}")
                continue
            check_targets(op.gate, op.targets, self.num_qubits)
            missing = [name for name in op.gate.symbols() if name not in known]
            if missing:
                raise BindingError(f"Parameters {missing} are used but not declared")
            if op.condition is not None and op.condition < 0:
                raise TargetError(f"Negative classical condition index {op.condition}")

    @property
    def num_measurements(self) -> int:
        return sum(1 for op in self.ops if op.is_measurement)

    @property
    def has_measurements(self) -> bool:
        return any(op.is_measurement for op in self.ops)

    def has_mid_circuit_measurement(self) -> bool:
        seen_measurement = False
        for op in self.ops:
            if op.is_measurement:
                seen_measurement = True
            elif seen_measurement:
                return True
        return False

    def occurrences(self) -> list[ParameterOccurrence]:
        found: list[ParameterOccurrence] = []
        for index, op in enumerate(self.ops):
            if op.gate is None:
                continue
            for slot, angle in enumerate(op.gate.slots()):
                if isinstance(angle, ParamRef):
                    found.append(ParameterOccurrence(index, slot, angle.name, angle.scale))
        return found

    def shifted(self, op_index: int, slot: int, delta: float) -> "Circuit":
        """Copy with one symbolic slot's angle moved by `delta` radians."""
        op = self.ops[op_index]
        angle = op.gate.slots()[slot]
        if not isinstance(angle, ParamRef):
            raise BindingError(f"Op {op_index} slot {slot} is not symbolic")
        ops = list(self.ops)
        ops[op_index] = replace(op, gate=op.gate.with_slot(slot, angle.shifted(delta)))
        return replace(self, ops=tuple(ops))

    def bind(self, binding: Mapping[str, float]) -> "Circuit":
        missing = [name for name in self.parameters if name not in binding]
        if missing:
            raise BindingError(f"Binding is missing parameters: {', '.join(missing)}")
        ops = tuple(op if op.gate is None else replace(op, gate=op.gate.bind(binding)) for op in self.ops)
        return Circuit(self.num_qubits, ops, ())

    def compose(self, other: "Circuit") -> "Circuit":
        """This circuit followed by `other` (same register, records renumbered)."""
        if other.num_qubits != self.num_qubits:
            raise TargetError("Cannot compose circuits on different qubit counts")
        offset = self.num_measurements
        shifted_ops = tuple(
            replace(op, condition=op.condition + offset) if op.condition is not None else op
            for op in other.ops
        )
        parameters = self.parameters + tuple(p for p in other.parameters if p not in self.parameters)
        return Circuit(self.num_qubits, self.ops + shifted_ops, parameters)

    def reversed(self) -> "Circuit":
        """Ops in reverse order (structural view only, not the inverse unitary)."""
        if self.has_measurements:
            raise TargetError("Only measurement-free circuits can be reversed")
        return replace(self, ops=tuple(reversed(self.ops)))

    def count(self, kind: str) -> int:
        return sum(1 for op in self.ops if op.gate is not None and op.gate.kind == kind)

    def __iter__(self) -> Iterator[Operation]:
        return iter(self.ops)

    def __len__(self) -> int:
        return len(self.ops)


@dataclass
class CircuitBuilder:
    num_qubits: int
    ops: list[Operation] = field(default_factory=list)
    parameters: list[str] = field(default_factory=list)
    tag: str | None = None
    _measurements: int = 0

    def parameter(self, name: str) -> ParamRef:
        if name not in self.parameters:
            self.parameters.append(name)
        return ParamRef(name)

    def ref(self, name: str, scale: float = 1.0, offset: float = 0.0) -> ParamRef:
        self.parameter(name)
        return ParamRef(name, scale, offset)

    def append(self, gate: Gate, targets: Sequence[int], condition: int | None = None) -> "CircuitBuilder":
        if condition is not None and condition >= self._measurements:
            raise OrderingError(f"Condition on record {condition} precedes its measurement")
        for name in gate.symbols():
            self.parameter(name)
        self.ops.append(Operation(tuple(targets), gate, condition, self.tag))
        return self

    def measure(self, qubit: int) -> int:
        self.ops.append(Operation((qubit,), None, None, self.tag))
        self._measurements += 1
        return self._measurements - 1

    def h(self, q: int) -> "CircuitBuilder":
        return self.append(fixed("H"), (q,))

    def x(self, q: int) -> "CircuitBuilder":
        return self.append(fixed("X"), (q,))

    def rx(self, q: int, angle: Angle) -> "CircuitBuilder":
        return self.append(rotation("RX", angle), (q,))

    def ry(self, q: int, angle: Angle) -> "CircuitBuilder":
        return self.append(rotation("RY", angle), (q,))

    def rz(self, q: int, angle: Angle) -> "CircuitBuilder":
        return self.append(rotation("RZ", angle), (q,))

    def zz(self, a: int, b: int, angle: Angle) -> "CircuitBuilder":
        return self.append(rotation("ZZ", angle), (a, b))

    def r2(self, q: int, theta: Angle, phi: Angle, adjoint: bool = False) -> "CircuitBuilder":
        return self.append(r2(theta, phi, adjoint), (q,))

    def u3(self, q: int, theta: Angle, phi: Angle, lam: Angle, condition: int | None = None) -> "CircuitBuilder":
        return self.append(u3(theta, phi, lam), (q,), condition)

    def cnot(self, control: int, target: int) -> "CircuitBuilder":
        return self.append(fixed("CNOT"), (control, target))

    def cz(self, a: int, b: int) -> "CircuitBuilder":
        return self.append(fixed("CZ"), (a, b))

    def controlled(self, inner: Gate, controls: Sequence[int], targets: Sequence[int]) -> "CircuitBuilder":
        return self.append(controlled(inner, len(controls)), tuple(controls) + tuple(targets))

    def extend(self, circuit: Circuit, qubit_map: Sequence[int] | None = None) -> "CircuitBuilder":
        """Append `circuit`, relabelling its qubit k to qubit_map[k]."""
        mapping = list(qubit_map) if qubit_map is not None else list(range(circuit.num_qubits))
        if len(mapping) != circuit.num_qubits:
            raise TargetError("qubit_map must cover every qubit of the appended circuit")
        for name in circuit.parameters:
            self.parameter(name)
        offset = self._measurements
        for op in circuit.ops:
            targets = tuple(mapping[t] for t in op.targets)
            if op.is_measurement:
                self.measure(targets[0])
                continue
            condition = op.condition + offset if op.condition is not None else None
            self.ops.append(Operation(targets, op.gate, condition, self.tag or op.tag))
        return self

    def build(self) -> Circuit:
        return Circuit(self.num_qubits, tuple(self.ops), tuple(self.parameters))
