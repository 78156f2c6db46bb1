from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from ansatz_forge.circuit import Circuit, CircuitBuilder
from ansatz_forge.errors import DimensionError, HamiltonianError, SizeError
from ansatz_forge.gates import Angle, ParamRef, rotation, u3
from ansatz_forge.hamiltonian import PauliString, PauliSum

logger = logging.getLogger("ansatz-forge-ansatz")

HALF_PI = math.pi / 2
HEA_ENTANGLERS = ("cnot_ring", "cz_ring", "figure2")
QAOA_MIXERS = ("x_mixer", "xy_ring")
MERA_SIZES = (2, 4, 8, 16)
QCNN_SIZES = (4, 8, 16)
ENTANGLER_TAG = "entangler/"


@dataclass(frozen=True)
class AnsatzBlueprint:
    """A buildable ansatz: `build()` returns the same circuit structure every time."""

    family: str
    num_qubits: int
    num_parameters: int
    config: Mapping[str, Any]
    factory: Callable[[], Circuit] = field(repr=False, compare=False)
    readout: int | None = None

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return tuple(f"{self.family.lower()}_{i}" for i in range(self.num_parameters))

    def build(self) -> Circuit:
        circuit = self.factory()
        if circuit.parameters != self.parameter_names:
            raise SizeError(
                f"{self.family} build produced parameters {circuit.parameters}, expected {self.parameter_names}"
            )
        return circuit

    def zero_binding(self) -> dict[str, float]:
        return {name: 0.0 for name in self.parameter_names}


def _blueprint(
    family: str,
    config: Mapping[str, Any],
    build: Callable[[], Circuit],
    readout: int | None = None,
) -> AnsatzBlueprint:
    circuit = build()
    logger.debug("Built %s blueprint: %d qubits, %d parameters", family, circuit.num_qubits, len(circuit.parameters))
    return AnsatzBlueprint(family, circuit.num_qubits, len(circuit.parameters), dict(config), build, readout)


def _fresh(builder: CircuitBuilder, family: str) -> ParamRef:
    return builder.parameter(f"{family.lower()}_{len(builder.parameters)}")


def _scaled(angle: Angle, factor: float) -> Angle:
    if isinstance(angle, ParamRef):
        return ParamRef(angle.name, angle.scale * factor, angle.offset * factor)
    return float(angle) * factor


def _apply_reference(builder: CircuitBuilder, occupied: Sequence[int]) -> None:
    for q in occupied:
        builder.x(q)


def append_pauli_exponential(builder: CircuitBuilder, string: PauliString, angle: Angle) -> None:
    """exp(-i angle/2 P): basis change, CNOT staircase onto the last qubit, RZ(angle), uncompute."""
    if string.is_identity():
        raise HamiltonianError("Cannot exponentiate the identity string (empty generator)")
    qubits = string.qubits
    ladder = list(zip(qubits, qubits[1:]))
    for q in qubits:
        if string.letter(q) == "X":
            builder.h(q)
        elif string.letter(q) == "Y":
            builder.rx(q, HALF_PI)
    for control, target in ladder:
        builder.cnot(control, target)
    builder.rz(qubits[-1], angle)
    for control, target in reversed(ladder):
        builder.cnot(control, target)
    for q in qubits:
        if string.letter(q) == "X":
            builder.h(q)
        elif string.letter(q) == "Y":
            builder.rx(q, -HALF_PI)


def pauli_exponential(p: PauliString, param: str, prefactor: float = 1.0) -> Circuit:
    builder = CircuitBuilder(p.num_qubits)
    append_pauli_exponential(builder, p, builder.ref(param, scale=prefactor))
    return builder.build()


def _append_term(builder: CircuitBuilder, string: PauliString, angle: Angle) -> None:
    # native gates where one exists, the generic staircase otherwise
    letters = [letter for _, letter in string.letters]
    if letters == ["Z", "Z"]:
        builder.zz(*string.qubits, angle)
    elif len(letters) == 1:
        builder.append(rotation(f"R{letters[0]}", angle), string.qubits)
    else:
        append_pauli_exponential(builder, string, angle)


def parse_generator(num_qubits: int, text: str) -> tuple[float, PauliString]:
    """"X0 Y1" or "-1 Y0 X1" into (coefficient, string)."""
    tokens = text.split()
    coefficient = 1.0
    if tokens:
        try:
            coefficient = float(tokens[0])
            tokens = tokens[1:]
        except ValueError:
            pass
    return coefficient, PauliString.from_label(num_qubits, " ".join(tokens))


def ucc_ansatz(
    groups: Sequence[Sequence[PauliString | tuple[float, PauliString]]],
    reference: Sequence[int] = (),
) -> AnsatzBlueprint:
    """Trotterised UCC: one parameter per group, every string in a group shares it."""
    if not groups or not all(groups):
        raise HamiltonianError("UCC needs a non-empty list of non-empty generator groups")
    normalized = [
        [item if isinstance(item, tuple) else (1.0, item) for item in group]
        for group in groups
    ]
    sizes = {string.num_qubits for group in normalized for _, string in group}
    if len(sizes) != 1:
        raise HamiltonianError(f"UCC generators act on different qubit counts: {sorted(sizes)}")
    n = sizes.pop()

    def build() -> Circuit:
        builder = CircuitBuilder(n)
        _apply_reference(builder, reference)
        for group in normalized:
            theta = _fresh(builder, "UCC")
            for coefficient, string in group:
                append_pauli_exponential(builder, string, _scaled(theta, coefficient))
        return builder.build()

    config = {
        "family": "UCC",
        "n": n,
        "generators": [[f"{format(c, '.17g')} {s.label}" for c, s in group] for group in normalized],
        "reference": list(reference),
    }
    return _blueprint("UCC", config, build)


def _hea_rotations(builder: CircuitBuilder, n: int) -> None:
    for q in range(n):
        builder.rx(q, _fresh(builder, "HEA"))
        builder.rz(q, _fresh(builder, "HEA"))
        builder.rx(q, _fresh(builder, "HEA"))


def hea_ansatz(n: int, layers: int, entangler: str = "cnot_ring") -> AnsatzBlueprint:
    if n < 2 or layers < 1:
        raise SizeError(f"HEA needs n >= 2 and layers >= 1, got n={n}, layers={layers}")
    if entangler not in HEA_ENTANGLERS:
        raise SizeError(f"Unknown HEA entangler '{entangler}', expected one of {HEA_ENTANGLERS}")
    if entangler == "figure2" and n != 4:
        raise SizeError("The figure2 entangler block is defined for exactly 4 qubits")
    ring = [(i, (i + 1) % n) for i in range(n)]

    def build() -> Circuit:
        builder = CircuitBuilder(n)
        for _ in range(layers):
            _hea_rotations(builder, n)
            builder.tag = "entangler/hea"
            for control, target in ring:
                if entangler == "cnot_ring":
                    builder.cnot(control, target)
                elif entangler == "cz_ring":
                    builder.cz(control, target)
                else:
                    builder.controlled(rotation("RY", _fresh(builder, "HEA")), (control,), (target,))
            builder.tag = None
        return builder.build()

    return _blueprint("HEA", {"family": "HEA", "n": n, "layers": layers, "entangler": entangler}, build)


def _append_a_gate(builder: CircuitBuilder, q0: int, q1: int, theta: ParamRef, phi: ParamRef) -> None:
    # R(theta, phi) = RZ(phi + pi) RY(theta + pi/2)
    r_theta = ParamRef(theta.name, 1.0, HALF_PI)
    r_phi = ParamRef(phi.name, 1.0, math.pi)
    builder.cnot(q1, q0)
    builder.r2(q1, r_theta, r_phi)
    builder.cnot(q0, q1)
    builder.r2(q1, r_theta, r_phi, adjoint=True)
    builder.cnot(q1, q0)


def spa_a_gate(theta: str, phi: str) -> Circuit:
    builder = CircuitBuilder(2)
    _append_a_gate(builder, 0, 1, builder.parameter(theta), builder.parameter(phi))
    return builder.build()


def spa_ansatz(n: int, layers: int) -> AnsatzBlueprint:
    """Brick layout of particle-number-preserving A gates, two parameters each."""
    if n < 2 or layers < 1:
        raise SizeError(f"SPA needs n >= 2 and layers >= 1, got n={n}, layers={layers}")
    bricks = [
        [(i, i + 1) for i in range(0, n - 1, 2)],
        [(i, i + 1) for i in range(1, n - 1, 2)],
    ]

    def build() -> Circuit:
        builder = CircuitBuilder(n)
        for _ in range(layers):
            for brick in bricks:
                for q0, q1 in brick:
                    theta = _fresh(builder, "SPA")
                    phi = _fresh(builder, "SPA")
                    _append_a_gate(builder, q0, q1, theta, phi)
        return builder.build()

    return _blueprint("SPA", {"family": "SPA", "n": n, "layers": layers}, build)


def xy_ring_bonds(n: int) -> list[tuple[int, int]]:
    if n == 2:
        return [(0, 1)]
    return sorted((min(i, (i + 1) % n), max(i, (i + 1) % n)) for i in range(n))


def qaoa_ansatz(
    cost: PauliSum,
    mixer: str = "x_mixer",
    p: int = 1,
    initial_bitstring: str | None = None,
    config: Mapping[str, Any] | None = None,
) -> AnsatzBlueprint:
    """Alternating cost/mixer layers; gamma_k is qaoa_{2k}, beta_k is qaoa_{2k+1}."""
    if p < 1:
        raise SizeError(f"QAOA needs p >= 1, got {p}")
    if mixer not in QAOA_MIXERS:
        raise SizeError(f"Unknown QAOA mixer '{mixer}', expected one of {QAOA_MIXERS}")
    if mixer == "x_mixer" and not cost.is_diagonal():
        raise HamiltonianError("The x_mixer needs a diagonal (Z/ZZ-only) cost operator")
    n = cost.num_qubits
    if initial_bitstring is not None and (
        len(initial_bitstring) != n or set(initial_bitstring) - {"0", "1"}
    ):
        raise DimensionError(f"Initial bitstring '{initial_bitstring}' does not match {n} qubits")

    def build() -> Circuit:
        builder = CircuitBuilder(n)
        if initial_bitstring is None:
            for q in range(n):
                builder.h(q)
        else:
            _apply_reference(builder, [q for q, bit in enumerate(reversed(initial_bitstring)) if bit == "1"])
        for _ in range(p):
            gamma = _fresh(builder, "QAOA")
            beta = _fresh(builder, "QAOA")
            builder.tag = "cost"
            for coefficient, string in cost.terms:
                _append_term(builder, string, _scaled(gamma, 2.0 * coefficient))
            builder.tag = "mixer"
            if mixer == "x_mixer":
                for q in range(n):
                    builder.rx(q, _scaled(beta, 2.0))
            else:
                for a, b in xy_ring_bonds(n):
                    append_pauli_exponential(builder, PauliString(n, ((a, "X"), (b, "X"))), beta)
                    append_pauli_exponential(builder, PauliString(n, ((a, "Y"), (b, "Y"))), beta)
            builder.tag = None
        return builder.build()

    recorded = dict(config) if config is not None else {"family": "QAOA", "n": n, "layers": p, "mixer": mixer}
    return _blueprint("QAOA", recorded, build)


def hva_ansatz(
    h: PauliSum,
    groups: Sequence[Sequence[PauliString]],
    p: int,
    init: str = "plus",
    config: Mapping[str, Any] | None = None,
) -> AnsatzBlueprint:
    """One parameter per commuting group per layer; every term in a group uses it unscaled."""
    if p < 1:
        raise SizeError(f"HVA needs p >= 1, got {p}")
    grouped = [string for group in groups for string in group]
    missing = [s.label for s in h.strings() if s not in grouped]
    if missing:
        raise HamiltonianError(f"HVA partition misses Hamiltonian terms: {missing}")
    foreign = [s.label for s in grouped if s not in h.strings()]
    if foreign:
        raise HamiltonianError(f"HVA partition lists strings absent from the Hamiltonian: {foreign}")
    if init not in ("plus", "zeros"):
        raise SizeError(f"Unknown HVA init '{init}', expected plus or zeros")
    n = h.num_qubits

    def build() -> Circuit:
        builder = CircuitBuilder(n)
        if init == "plus":
            for q in range(n):
                builder.h(q)
        for _ in range(p):
            for group in groups:
                theta = _fresh(builder, "HVA")
                for string in group:
                    _append_term(builder, string, theta)
        return builder.build()

    recorded = dict(config) if config is not None else {"family": "HVA", "n": n, "layers": p}
    return _blueprint("HVA", recorded, build)


def qce_embedding(features: Sequence[float], n: int = 4, mode: str = "figure") -> AnsatzBlueprint:
    """Feature-encoding circuit with a single trainable ZZ + RY layer.

    The features are fixed angles baked into the circuit; only the trainable
    layer carries parameters.
    """
    values = [float(x) for x in features]
    if mode == "figure":
        if n != 4:
            raise SizeError("The figure-mode QCE embedding is defined for exactly 4 qubits")
        if len(values) > 3:
            raise DimensionError(f"Figure-mode QCE takes at most 3 features, got {len(values)}")
        values += [0.0] * (3 - len(values))
        zz_pairs = [(0, 1), (2, 3), (1, 2), (0, 3)]
    elif mode == "general":
        if n < 2:
            raise SizeError("QCE needs at least 2 qubits")
        if len(values) > n:
            raise DimensionError(f"QCE on {n} qubits takes at most {n} features, got {len(values)}")
        values += [0.0] * (n - len(values))
        zz_pairs = [(0, 1)] if n == 2 else [(i, (i + 1) % n) for i in range(n)]
    else:
        raise SizeError(f"Unknown QCE mode '{mode}', expected figure or general")

    def build() -> Circuit:
        builder = CircuitBuilder(n)
        for q, x in enumerate(values):
            builder.rx(q, x)
        if mode == "figure":
            builder.h(3)
        for a, b in zz_pairs:
            builder.zz(a, b, _fresh(builder, "QCE"))
        for q in range(n):
            builder.ry(q, _fresh(builder, "QCE"))
        return builder.build()

    return _blueprint("QCE", {"family": "QCE", "n": n, "mode": mode, "features": values}, build)


def _euler(builder: CircuitBuilder, q: int, family: str) -> None:
    builder.rz(q, _fresh(builder, family))
    builder.ry(q, _fresh(builder, family))
    builder.rz(q, _fresh(builder, family))


def mera_levels(n: int) -> list[list[int]]:
    """Active qubit blocks from the innermost level outwards."""
    levels = [list(range(n))]
    while len(levels[0]) > 2:
        levels.insert(0, [q for i, q in enumerate(levels[0]) if i % 4 in (1, 2)])
    return levels


def mera_ansatz(n: int) -> AnsatzBlueprint:
    if n not in MERA_SIZES:
        raise SizeError(f"MERA is built for n in {MERA_SIZES}, got {n}")
    levels = mera_levels(n)

    def build() -> Circuit:
        builder = CircuitBuilder(n)
        previous: set[int] = set()
        for depth, block in enumerate(levels):
            builder.tag = f"entangler/level{depth}/isometry"
            for i in range(0, len(block) - 1, 2):
                a, b = block[i], block[i + 1]
                # the qubit already carrying state drives the fresh wire
                control, target = (b, a) if b in previous and a not in previous else (a, b)
                builder.cnot(control, target)
            builder.tag = f"unitary/level{depth}"
            for q in block:
                _euler(builder, q, "MERA")
            builder.tag = f"entangler/level{depth}/disentangle"
            touched: list[int] = []
            for i in range(1, len(block) - 1, 2):
                builder.cnot(block[i], block[i + 1])
                touched.extend((block[i], block[i + 1]))
            builder.tag = f"unitary/level{depth}"
            for q in touched:
                _euler(builder, q, "MERA")
            previous = set(block)
        builder.tag = None
        return builder.build()

    return _blueprint("MERA", {"family": "MERA", "n": n}, build)


def _append_conv(builder: CircuitBuilder, a: int, b: int, weights: Sequence[ParamRef]) -> None:
    builder.u3(a, *weights[0:3])
    builder.u3(b, *weights[3:6])
    builder.cnot(a, b)
    builder.u3(a, *weights[6:9])
    builder.u3(b, *weights[9:12])


def qcnn_ansatz(n: int, deferred: bool = False) -> AnsatzBlueprint:
    """Convolution + pooling rounds down to two qubits, then a fully connected block.

    Pooling measures the qubits at positions 0 and 3 (mod 4) of the active list
    and applies V to their inner neighbour, conditioned on the outcome. With
    `deferred=True` the measurement is replaced by a controlled V, which keeps
    the circuit unitary and differentiable.
    """
    if n not in QCNN_SIZES:
        raise SizeError(f"QCNN is built for n in {QCNN_SIZES}, got {n}")

    def build() -> Circuit:
        builder = CircuitBuilder(n)
        active = list(range(n))
        round_index = 0
        while len(active) > 2:
            conv = [_fresh(builder, "QCNN") for _ in range(12)]
            builder.tag = f"entangler/round{round_index}/conv-a"
            for i in range(1, len(active) - 1, 2):
                _append_conv(builder, active[i], active[i + 1], conv)
            builder.tag = f"entangler/round{round_index}/conv-b"
            for i in range(0, len(active) - 1, 2):
                _append_conv(builder, active[i], active[i + 1], conv)
            pool = [_fresh(builder, "QCNN") for _ in range(3)]
            builder.tag = f"pool/round{round_index}"
            survivors = []
            for i, q in enumerate(active):
                if i % 4 in (1, 2):
                    survivors.append(q)
                    continue
                neighbor = active[i + 1] if i % 4 == 0 else active[i - 1]
                if deferred:
                    builder.controlled(u3(*pool), (q,), (neighbor,))
                else:
                    record = builder.measure(q)
                    builder.u3(neighbor, *pool, condition=record)
            active = survivors
            round_index += 1
        builder.tag = "entangler/final"
        _append_conv(builder, active[0], active[1], [_fresh(builder, "QCNN") for _ in range(12)])
        builder.tag = None
        return builder.build()

    return _blueprint("QCNN", {"family": "QCNN", "n": n, "deferred": deferred}, build, readout=qcnn_readout(n))


def qcnn_rounds(n: int) -> int:
    return len(mera_levels(n)) - 1


def qcnn_readout(n: int) -> int:
    return mera_levels(n)[0][0]


def qnn_filter_ansatz(layers: int = 1, random_gates: int = 0, seed: int | None = None) -> AnsatzBlueprint:
    """Variational part of a 2x2 quanvolution filter (4 qubits).

    The layered form is RY on every qubit followed by a CNOT chain. With
    `random_gates > 0` a seeded random sequence of rotations and CNOTs is drawn
    instead, in the style of random quanvolution filters.
    """
    if layers < 1 and random_gates < 1:
        raise SizeError("A QNN filter needs at least one layer or one random gate")
    if random_gates > 0 and seed is None:
        raise SizeError("Random QNN filters need an explicit seed")
    n = 4

    def build() -> Circuit:
        builder = CircuitBuilder(n)
        if random_gates > 0:
            rng = np.random.default_rng(seed)
            for _ in range(random_gates):
                kind = ("RX", "RY", "RZ", "CNOT")[int(rng.integers(4))]
                if kind == "CNOT":
                    control, target = (int(q) for q in rng.choice(n, size=2, replace=False))
                    builder.cnot(control, target)
                else:
                    builder.append(rotation(kind, _fresh(builder, "QNN")), (int(rng.integers(n)),))
            return builder.build()
        for _ in range(layers):
            for q in range(n):
                builder.ry(q, _fresh(builder, "QNN"))
            for q in range(n - 1):
                builder.cnot(q, q + 1)
        return builder.build()

    config = {"family": "QNN", "n": n, "layers": layers, "random_gates": random_gates, "seed": seed}
    return _blueprint("QNN", config, build)


def adapt_blueprint(
    n: int,
    generators: Sequence[PauliString],
    reference: Sequence[int] = (),
) -> AnsatzBlueprint:
    """An ADAPT-grown operator sequence materialised as a plain blueprint."""
    strings = list(generators)
    if any(s.num_qubits != n for s in strings):
        raise HamiltonianError(f"ADAPT generators must act on {n} qubits")

    def build() -> Circuit:
        builder = CircuitBuilder(n)
        _apply_reference(builder, reference)
        for string in strings:
            append_pauli_exponential(builder, string, _fresh(builder, "ADAPT"))
        return builder.build()

    config = {"family": "ADAPT", "n": n, "generators": [s.label for s in strings], "reference": list(reference)}
    return _blueprint("ADAPT", config, build)


def entangler_schedule(circuit: Circuit) -> list[frozenset[tuple[int, int]]]:
    """Two-qubit pairs touched by each consecutive run of "entangler/..." tagged ops."""
    schedule: list[frozenset[tuple[int, int]]] = []
    current_tag: str | None = None
    pairs: set[tuple[int, int]] = set()
    for op in circuit.ops:
        if op.tag != current_tag:
            if pairs:
                schedule.append(frozenset(pairs))
            current_tag, pairs = op.tag, set()
        if op.tag and op.tag.startswith(ENTANGLER_TAG) and len(op.targets) == 2:
            pairs.add((min(op.targets), max(op.targets)))
    if pairs:
        schedule.append(frozenset(pairs))
    return schedule
