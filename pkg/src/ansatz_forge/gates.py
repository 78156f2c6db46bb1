from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Union

import numpy as np

from ansatz_forge.errors import BindingError, TargetError

# Qubit k of a gate's local matrix is bit k of the local basis index
# (targets[0] is the least significant bit), matching the global little-endian order.

FIXED_KINDS = ("H", "X", "Y", "Z", "S", "CNOT", "CZ", "SWAP")
ROTATION_KINDS = ("RX", "RY", "RZ", "ZZ")
PARAMETER_COUNTS = {
    "H": 0,
    "X": 0,
    "Y": 0,
    "Z": 0,
    "S": 0,
    "CNOT": 0,
    "CZ": 0,
    "SWAP": 0,
    "RX": 1,
    "RY": 1,
    "RZ": 1,
    "ZZ": 1,
    "R2": 2,
    "U3": 3,
    "CONTROLLED": 0,
}
QUBIT_COUNTS = {
    "H": 1,
    "X": 1,
    "Y": 1,
    "Z": 1,
    "S": 1,
    "RX": 1,
    "RY": 1,
    "RZ": 1,
    "R2": 1,
    "U3": 1,
    "ZZ": 2,
    "CNOT": 2,
    "CZ": 2,
    "SWAP": 2,
}

_SQRT_HALF = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class ParamRef:
    """Symbolic angle slot: value = scale * binding[name] + offset (radians)."""

    name: str
    scale: float = 1.0
    offset: float = 0.0

    def resolve(self, binding: Mapping[str, float]) -> float:
        if self.name not in binding:
            raise BindingError(f"Parameter '{self.name}' is not bound")
        return self.scale * float(binding[self.name]) + self.offset

    def shifted(self, delta: float) -> "ParamRef":
        return replace(self, offset=self.offset + delta)


Angle = Union[ParamRef, float]


@dataclass(frozen=True)
class Gate:
    kind: str
    params: tuple[Angle, ...] = ()
    inner: Gate | None = None
    num_controls: int = 0
    adjoint: bool = False

    def __post_init__(self) -> None:
        if self.kind not in PARAMETER_COUNTS:
            raise ValueError(f"Unknown gate kind: {self.kind}")
        if self.kind == "CONTROLLED":
            if self.inner is None or self.num_controls < 1:
                raise ValueError("CONTROLLED gates need an inner gate and at least one control")
            if self.inner.kind == "CONTROLLED":
                raise ValueError("Nest controls by raising num_controls, not by wrapping CONTROLLED gates")
        elif len(self.params) != PARAMETER_COUNTS[self.kind]:
            raise ValueError(
                f"Gate {self.kind} takes {PARAMETER_COUNTS[self.kind]} parameters, got {len(self.params)}"
            )

    @property
    def num_qubits(self) -> int:
        if self.kind == "CONTROLLED":
            return self.num_controls + self.inner.num_qubits
        return QUBIT_COUNTS[self.kind]

    @property
    def label(self) -> str:
        if self.kind == "CONTROLLED":
            prefix = "C" * self.num_controls
            return f"{prefix}-{self.inner.label}"
        return f"{self.kind}_dg" if self.adjoint else self.kind

    def slots(self) -> tuple[Angle, ...]:
        """Angle slots of the gate, including the inner gate's for CONTROLLED."""
        if self.kind == "CONTROLLED":
            return self.inner.params
        return self.params

    def symbols(self) -> tuple[str, ...]:
        return tuple(slot.name for slot in self.slots() if isinstance(slot, ParamRef))

    def is_bound(self) -> bool:
        return not self.symbols()

    def with_slot(self, slot: int, value: Angle) -> "Gate":
        if self.kind == "CONTROLLED":
            return replace(self, inner=self.inner.with_slot(slot, value))
        params = list(self.params)
        params[slot] = value
        return replace(self, params=tuple(params))

    def bind(self, binding: Mapping[str, float]) -> "Gate":
        if self.kind == "CONTROLLED":
            return replace(self, inner=self.inner.bind(binding))
        if self.is_bound():
            return self
        values = tuple(p.resolve(binding) if isinstance(p, ParamRef) else float(p) for p in self.params)
        return replace(self, params=values)

    def matrix(self) -> np.ndarray:
        if not self.is_bound():
            raise BindingError(f"Gate {self.label} has unbound parameters: {', '.join(self.symbols())}")
        if self.kind == "CONTROLLED":
            return _controlled_matrix(self.inner.matrix(), self.num_controls)
        base = _base_matrix(self.kind, tuple(float(p) for p in self.params))
        return base.conj().T if self.adjoint else base


def _rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def _ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def _base_matrix(kind: str, params: tuple[float, ...]) -> np.ndarray:
    if kind == "H":
        return np.array([[_SQRT_HALF, _SQRT_HALF], [_SQRT_HALF, -_SQRT_HALF]], dtype=complex)
    if kind == "X":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if kind == "Y":
        return np.array([[0, -1j], [1j, 0]], dtype=complex)
    if kind == "Z":
        return np.diag([1.0, -1.0]).astype(complex)
    if kind == "S":
        return np.diag([1.0, 1j])
    if kind == "RX":
        return _rx(params[0])
    if kind == "RY":
        return _ry(params[0])
    if kind == "RZ":
        return _rz(params[0])
    if kind == "R2":
        theta, phi = params
        return _rz(phi) @ _ry(theta)
    if kind == "U3":
        theta, phi, lam = params
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        return np.array(
            [
                [c, -np.exp(1j * lam) * s],
                [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c],
            ],
            dtype=complex,
        )
    if kind == "ZZ":
        minus, plus = np.exp(-0.5j * params[0]), np.exp(0.5j * params[0])
        return np.diag([minus, plus, plus, minus])
    if kind == "CNOT":
        # control = local qubit 0, target = local qubit 1
        return np.array(
            [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]],
            dtype=complex,
        )
    if kind == "CZ":
        return np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
    if kind == "SWAP":
        return np.array(
            [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
            dtype=complex,
        )
    raise ValueError(f"No matrix for gate kind {kind}")


def _controlled_matrix(inner: np.ndarray, num_controls: int) -> np.ndarray:
    # controls occupy the low local bits, the inner gate the high ones
    inner_dim = inner.shape[0]
    dim = inner_dim << num_controls
    all_set = (1 << num_controls) - 1
    full = np.eye(dim, dtype=complex)
    active = [all_set + (j << num_controls) for j in range(inner_dim)]
    full[np.ix_(active, active)] = inner
    return full


def check_targets(gate: Gate, targets: tuple[int, ...], num_qubits: int) -> None:
    if len(targets) != gate.num_qubits:
        raise TargetError(f"Gate {gate.label} acts on {gate.num_qubits} qubits, got targets {targets}")
    if len(set(targets)) != len(targets):
        raise TargetError(f"Duplicate targets {targets} for gate {gate.label}")
    for target in targets:
        if not 0 <= target < num_qubits:
            raise TargetError(f"Target {target} out of range for {num_qubits} qubits")


def fixed(kind: str) -> Gate:
    return Gate(kind)


def rotation(kind: str, angle: Angle) -> Gate:
    return Gate(kind, (angle,))


def r2(theta: Angle, phi: Angle, adjoint: bool = False) -> Gate:
    return Gate("R2", (theta, phi), adjoint=adjoint)


def u3(theta: Angle, phi: Angle, lam: Angle) -> Gate:
    return Gate("U3", (theta, phi, lam))


def controlled(inner: Gate, num_controls: int = 1) -> Gate:
    return Gate("CONTROLLED", inner=inner, num_controls=num_controls)
