from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ansatz_forge.circuit import Circuit, Operation
from ansatz_forge.errors import OrderingError, SizeError, TargetError, UnsupportedError
from ansatz_forge.gates import Gate, check_targets

logger = logging.getLogger("ansatz-forge-sim")

MAX_STATE_QUBITS = 24
MAX_UNITARY_QUBITS = 10
NORM_TOLERANCE = 1e-10


@dataclass(frozen=True)
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amplitudes = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amplitudes.shape[0] != 1 << self.num_qubits:
            raise SizeError(
                f"{self.num_qubits} qubits need {1 << self.num_qubits} amplitudes, got {amplitudes.shape[0]}"
            )
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.num_qubits)


@dataclass(frozen=True)
class MeasurementRecord:
    qubit: int
    outcome: int
    probability: float


@dataclass(frozen=True)
class Branch:
    probability: float
    state: StateVector
    records: tuple[MeasurementRecord, ...]


def _check_size(n: int, limit: int = MAX_STATE_QUBITS) -> None:
    if not 1 <= n <= limit:
        raise SizeError(f"Qubit count {n} outside supported range 1..{limit}")


def new_zero_state(n: int) -> StateVector:
    return basis_state(n, 0)


def basis_state(n: int, index: int) -> StateVector:
    _check_size(n)
    if not 0 <= index < 1 << n:
        raise SizeError(f"Basis index {index} out of range for {n} qubits")
    amplitudes = np.zeros(1 << n, dtype=complex)
    amplitudes[index] = 1.0
    return StateVector(n, amplitudes)


def state_from_amplitudes(amplitudes: Sequence[complex] | np.ndarray, normalize: bool = False) -> StateVector:
    values = np.asarray(amplitudes, dtype=complex).reshape(-1)
    n = int(values.shape[0]).bit_length() - 1
    if n < 1 or values.shape[0] != 1 << n:
        raise SizeError(f"Amplitude count {values.shape[0]} is not a power of two >= 2")
    _check_size(n)
    norm = float(np.linalg.norm(values))
    if normalize:
        if norm == 0.0:
            raise SizeError("Cannot normalise the zero vector")
        values = values / norm
    elif abs(norm - 1.0) > NORM_TOLERANCE:
        raise SizeError(f"Amplitudes have norm {norm}, expected 1")
    return StateVector(n, values)


def fidelity(a: StateVector, b: StateVector) -> float:
    if a.num_qubits != b.num_qubits:
        raise SizeError("Fidelity needs states on the same number of qubits")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def _apply_matrix(tensor: np.ndarray, matrix: np.ndarray, targets: Sequence[int], num_qubits: int) -> np.ndarray:
    # works on (2,)*n state tensors with optional trailing batch axes
    m = len(targets)
    gate = matrix.reshape((2,) * (2 * m))
    state_axes = [num_qubits - 1 - targets[m - 1 - j] for j in range(m)]
    moved = np.tensordot(gate, tensor, axes=(list(range(m, 2 * m)), state_axes))
    return np.moveaxis(moved, list(range(m)), state_axes)


def apply_gate(state: StateVector, gate: Gate, targets: Sequence[int]) -> StateVector:
    targets = tuple(targets)
    check_targets(gate, targets, state.num_qubits)
    tensor = _apply_matrix(state.tensor(), gate.matrix(), targets, state.num_qubits)
    return StateVector(state.num_qubits, tensor.reshape(-1))


def _outcome_probability(tensor: np.ndarray, qubit: int, num_qubits: int) -> float:
    axis = num_qubits - 1 - qubit
    one_slice = np.take(tensor, 1, axis=axis)
    return float(np.sum(np.abs(one_slice) ** 2))


def _collapse(tensor: np.ndarray, qubit: int, outcome: int, probability: float, num_qubits: int) -> np.ndarray:
    axis = num_qubits - 1 - qubit
    collapsed = np.array(tensor, copy=True)
    index = [slice(None)] * collapsed.ndim
    index[axis] = 1 - outcome
    collapsed[tuple(index)] = 0.0
    return collapsed / np.sqrt(probability)


def measure_qubit(state: StateVector, q: int, rng: np.random.Generator) -> tuple[MeasurementRecord, StateVector]:
    if not 0 <= q < state.num_qubits:
        raise TargetError(f"Qubit {q} out of range for {state.num_qubits} qubits")
    tensor = state.tensor()
    p_one = min(max(_outcome_probability(tensor, q, state.num_qubits), 0.0), 1.0)
    outcome = 1 if rng.random() < p_one else 0
    probability = p_one if outcome == 1 else 1.0 - p_one
    collapsed = _collapse(tensor, q, outcome, probability, state.num_qubits)
    return MeasurementRecord(q, outcome, probability), StateVector(state.num_qubits, collapsed.reshape(-1))


def bitstring(index: int, num_qubits: int) -> str:
    """Qubit n-1 is the leftmost character, qubit 0 the rightmost."""
    return format(index, f"0{num_qubits}b")


def sample(state: StateVector, shots: int, rng: np.random.Generator) -> dict[str, int]:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probabilities = state.probabilities()
    probabilities = probabilities / probabilities.sum()
    counts = rng.multinomial(shots, probabilities)
    return {bitstring(int(index), state.num_qubits): int(counts[index]) for index in np.flatnonzero(counts)}


def _condition_holds(op: Operation, records: Sequence[MeasurementRecord]) -> bool:
    if op.condition is None:
        return True
    if op.condition >= len(records):
        raise OrderingError(
            f"Operation on {op.targets} is conditioned on record {op.condition}, "
            f"but only {len(records)} measurements happened before it"
        )
    return records[op.condition].outcome == 1


def run_circuit(
    circuit: Circuit,
    binding: Mapping[str, float],
    initial: StateVector,
    rng: np.random.Generator | None = None,
) -> tuple[StateVector, tuple[MeasurementRecord, ...]]:
    if initial.num_qubits != circuit.num_qubits:
        raise SizeError(
            f"Initial state has {initial.num_qubits} qubits, circuit expects {circuit.num_qubits}"
        )
    bound = circuit.bind(binding)
    n = circuit.num_qubits
    tensor = initial.tensor()
    records: list[MeasurementRecord] = []
    for op in bound.ops:
        if op.is_measurement:
            if rng is None:
                raise UnsupportedError("Circuit contains measurements; pass an explicit seeded rng")
            record, collapsed = measure_qubit(StateVector(n, tensor.reshape(-1)), op.targets[0], rng)
            records.append(record)
            tensor = collapsed.tensor()
            continue
        if not _condition_holds(op, records):
            continue
        tensor = _apply_matrix(tensor, op.gate.matrix(), op.targets, n)
    return StateVector(n, tensor.reshape(-1)), tuple(records)


def run_branches(
    circuit: Circuit,
    binding: Mapping[str, float],
    initial: StateVector,
    min_probability: float = 1e-15,
) -> list[Branch]:
    """Every measurement outcome path with its exact probability; no sampling involved."""
    if initial.num_qubits != circuit.num_qubits:
        raise SizeError(
            f"Initial state has {initial.num_qubits} qubits, circuit expects {circuit.num_qubits}"
        )
    bound = circuit.bind(binding)
    n = circuit.num_qubits
    branches: list[tuple[float, np.ndarray, tuple[MeasurementRecord, ...]]] = [(1.0, initial.tensor(), ())]
    for op in bound.ops:
        if op.is_measurement:
            qubit = op.targets[0]
            split: list[tuple[float, np.ndarray, tuple[MeasurementRecord, ...]]] = []
            for weight, tensor, records in branches:
                p_one = min(max(_outcome_probability(tensor, qubit, n), 0.0), 1.0)
                for outcome, probability in ((0, 1.0 - p_one), (1, p_one)):
                    if probability <= min_probability:
                        continue
                    collapsed = _collapse(tensor, qubit, outcome, probability, n)
                    record = MeasurementRecord(qubit, outcome, probability)
                    split.append((weight * probability, collapsed, records + (record,)))
            branches = split
            continue
        matrix = op.gate.matrix()
        branches = [
            (weight, _apply_matrix(tensor, matrix, op.targets, n) if _condition_holds(op, records) else tensor, records)
            for weight, tensor, records in branches
        ]
    return [Branch(weight, StateVector(n, tensor.reshape(-1)), records) for weight, tensor, records in branches]


def circuit_to_unitary(circuit: Circuit, binding: Mapping[str, float]) -> np.ndarray:
    _check_size(circuit.num_qubits, MAX_UNITARY_QUBITS)
    if circuit.has_measurements:
        raise UnsupportedError("circuit_to_unitary does not support measurement operations")
    bound = circuit.bind(binding)
    n = circuit.num_qubits
    dim = 1 << n
    tensor = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for op in bound.ops:
        tensor = _apply_matrix(tensor, op.gate.matrix(), op.targets, n)
    return tensor.reshape(dim, dim)


def equal_up_to_global_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-10) -> bool:
    """|tr(A^dagger B)| / dim == 1 within `atol`, the phase-insensitive unitary comparison."""
    if a.shape != b.shape:
        return False
    overlap = abs(np.trace(a.conj().T @ b)) / a.shape[0]
    return abs(overlap - 1.0) <= atol
