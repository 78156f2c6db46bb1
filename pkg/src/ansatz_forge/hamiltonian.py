from __future__ import annotations

import json
import logging
import numbers
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
from cachetools.func import lru_cache
from scipy import linalg

from ansatz_forge.errors import GraphError, HamiltonianError, SizeError, ValidationFailure
from ansatz_forge.simulator import MAX_UNITARY_QUBITS, StateVector

logger = logging.getLogger("ansatz-forge-hamiltonian")

PAULI_LETTERS = ("X", "Y", "Z")
MAX_BRUTE_FORCE_VERTICES = 20
COEFFICIENT_CUTOFF = 1e-14

_SINGLE_QUBIT = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class PauliString:
    """Tensor product of X/Y/Z letters; qubits not listed carry the identity."""

    num_qubits: int
    letters: tuple[tuple[int, str], ...] = ()

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise HamiltonianError("A Pauli string needs at least one qubit")
        normalized = tuple(sorted((int(q), str(letter).upper()) for q, letter in self.letters))
        qubits = [q for q, _ in normalized]
        if len(set(qubits)) != len(qubits):
            raise HamiltonianError(f"Qubit repeated in Pauli string {normalized}")
        for q, letter in normalized:
            if letter not in PAULI_LETTERS:
                raise HamiltonianError(f"Unknown Pauli letter '{letter}'")
            if not 0 <= q < self.num_qubits:
                raise HamiltonianError(f"Qubit {q} out of range for {self.num_qubits} qubits")
        object.__setattr__(self, "letters", normalized)

    @classmethod
    def from_label(cls, num_qubits: int, label: str) -> "PauliString":
        """Parse "X0 Y1" (or "I" / "" for the identity)."""
        letters = []
        for token in label.split():
            if token.upper() == "I":
                continue
            letter, index = token[0].upper(), token[1:]
            if not index.isdigit():
                raise HamiltonianError(f"Malformed Pauli token '{token}'")
            letters.append((int(index), letter))
        return cls(num_qubits, tuple(letters))

    @property
    def label(self) -> str:
        return " ".join(f"{letter}{q}" for q, letter in self.letters) or "I"

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.letters)

    def letter(self, qubit: int) -> str:
        for q, letter in self.letters:
            if q == qubit:
                return letter
        return "I"

    def is_identity(self) -> bool:
        return not self.letters

    def is_diagonal(self) -> bool:
        return all(letter == "Z" for _, letter in self.letters)

    def masks(self) -> tuple[int, int, int]:
        """(flip mask, phase mask, Y count): P|b> = i^nY (-1)^popcount(b & phase) |b ^ flip>."""
        flip = phase = 0
        y_count = 0
        for q, letter in self.letters:
            if letter in ("X", "Y"):
                flip |= 1 << q
            if letter in ("Z", "Y"):
                phase |= 1 << q
            if letter == "Y":
                y_count += 1
        return flip, phase, y_count


@dataclass(frozen=True)
class PauliSum:
    num_qubits: int
    terms: tuple[tuple[float, PauliString], ...] = ()

    def __post_init__(self) -> None:
        merged: dict[PauliString, float] = {}
        for coefficient, string in self.terms:
            value = _real_coefficient(coefficient)
            if string.num_qubits != self.num_qubits:
                raise HamiltonianError(
                    f"Term {string.label} is on {string.num_qubits} qubits, sum is on {self.num_qubits}"
                )
            merged[string] = merged.get(string, 0.0) + value
        terms = tuple((c, s) for s, c in merged.items() if abs(c) >= COEFFICIENT_CUTOFF)
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_labels(cls, num_qubits: int, terms: Iterable[tuple[float, str]]) -> "PauliSum":
        return cls(num_qubits, tuple((c, PauliString.from_label(num_qubits, label)) for c, label in terms))

    def strings(self) -> tuple[PauliString, ...]:
        return tuple(s for _, s in self.terms)

    def is_diagonal(self) -> bool:
        return all(s.is_diagonal() for _, s in self.terms)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.num_qubits != self.num_qubits:
            raise HamiltonianError("Cannot add Pauli sums on different qubit counts")
        return PauliSum(self.num_qubits, self.terms + other.terms)

    def scaled(self, factor: float) -> "PauliSum":
        return PauliSum(self.num_qubits, tuple((factor * c, s) for c, s in self.terms))

    def __len__(self) -> int:
        return len(self.terms)


def _real_coefficient(value: Any) -> float:
    if isinstance(value, (complex, np.complexfloating)):
        if value.imag != 0:
            raise HamiltonianError(f"Coefficient {value} is complex; only real coefficients are allowed")
        value = value.real
    if not isinstance(value, numbers.Real):
        raise HamiltonianError(f"Coefficient {value!r} is not a real number")
    return float(value)


def _string_expectation(amplitudes: np.ndarray, string: PauliString) -> complex:
    flip, phase, y_count = string.masks()
    indices = np.arange(amplitudes.shape[0])
    parity = np.zeros_like(indices)
    for q in range(string.num_qubits):
        if phase >> q & 1:
            parity ^= (indices >> q) & 1
    signs = 1 - 2 * parity
    value = np.sum(np.conj(amplitudes[indices ^ flip]) * signs * amplitudes)
    return (1j**y_count) * value


def expectation(state: StateVector, obs: PauliSum) -> float:
    if state.num_qubits != obs.num_qubits:
        raise SizeError(f"State has {state.num_qubits} qubits, observable has {obs.num_qubits}")
    total = 0.0 + 0.0j
    for coefficient, string in obs.terms:
        total += coefficient * _string_expectation(state.amplitudes, string)
    if abs(total.imag) > 1e-10:
        logger.debug("Discarding imaginary residue %.3e in expectation value", total.imag)
    return float(total.real)


@lru_cache(maxsize=512)
def _string_matrix(string: PauliString) -> np.ndarray:
    matrix = np.array([[1.0]], dtype=complex)
    for q in range(string.num_qubits - 1, -1, -1):
        matrix = np.kron(matrix, _SINGLE_QUBIT[string.letter(q)])
    matrix.setflags(write=False)
    return matrix


def pauli_matrix(obs: PauliSum) -> np.ndarray:
    if not 1 <= obs.num_qubits <= MAX_UNITARY_QUBITS:
        raise SizeError(f"Dense matrices are limited to {MAX_UNITARY_QUBITS} qubits, got {obs.num_qubits}")
    dim = 1 << obs.num_qubits
    matrix = np.zeros((dim, dim), dtype=complex)
    for coefficient, string in obs.terms:
        matrix += coefficient * _string_matrix(string)
    return matrix


def exact_spectrum(obs: PauliSum) -> tuple[np.ndarray, np.ndarray]:
    return linalg.eigh(pauli_matrix(obs))


def exact_ground(obs: PauliSum) -> tuple[float, StateVector]:
    energies, vectors = exact_spectrum(obs)
    ground = vectors[:, 0]
    # fix the phase so the largest component is real and positive
    pivot = int(np.argmax(np.abs(ground)))
    ground = ground * (abs(ground[pivot]) / ground[pivot])
    ground = ground / np.linalg.norm(ground)
    return float(energies[0]), StateVector(obs.num_qubits, ground)


def lattice_bonds(n: int, boundary: str = "chain") -> list[tuple[int, int]]:
    if n < 2:
        raise HamiltonianError(f"Lattice models need at least 2 sites, got {n}")
    if boundary not in ("chain", "ring"):
        raise HamiltonianError(f"Unknown boundary '{boundary}', expected chain or ring")
    bonds = [(i, i + 1) for i in range(n - 1)]
    if boundary == "ring" and n > 2:
        bonds.append((n - 1, 0))
    return bonds


def _zz(n: int, i: int, j: int) -> PauliString:
    return PauliString(n, ((i, "Z"), (j, "Z")))


def tfim_hamiltonian(n: int, g: float, boundary: str = "chain") -> PauliSum:
    """H = -sum Z_i Z_j - g sum X_i over the chain (or ring) bonds."""
    terms: list[tuple[float, PauliString]] = [(-1.0, _zz(n, i, j)) for i, j in lattice_bonds(n, boundary)]
    terms.extend((-float(g), PauliString(n, ((i, "X"),))) for i in range(n))
    return PauliSum(n, tuple(terms))


def heisenberg_hamiltonian(n: int, J: float, boundary: str = "chain") -> PauliSum:
    terms = []
    for i, j in lattice_bonds(n, boundary):
        for letter in PAULI_LETTERS:
            terms.append((float(J), PauliString(n, ((i, letter), (j, letter)))))
    return PauliSum(n, tuple(terms))


def tfim_hva_groups(n: int, boundary: str = "ring") -> list[list[PauliString]]:
    """Even-bond ZZ, odd-bond ZZ (the wrap bond included), and the X field."""
    even, odd = [], []
    for i, j in lattice_bonds(n, boundary):
        (even if i % 2 == 0 else odd).append(_zz(n, i, j))
    field = [PauliString(n, ((i, "X"),)) for i in range(n)]
    return [group for group in (even, odd, field) if group]


def parse_pauli_sum(text: str, num_qubits: int | None = None) -> PauliSum:
    """Read lines of the form "coeff  X0 Z3"; blank lines and '#' comments are skipped."""
    parsed: list[tuple[float, list[tuple[int, str]]]] = []
    highest = -1
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *tokens = line.split()
        try:
            coefficient = float(head)
        except ValueError as exc:
            raise HamiltonianError(f"Line {line_number}: '{head}' is not a real coefficient") from exc
        letters = []
        for token in tokens:
            if token.upper() == "I":
                continue
            letter, index = token[0].upper(), token[1:]
            if letter not in PAULI_LETTERS or not index.isdigit():
                raise HamiltonianError(f"Line {line_number}: malformed Pauli token '{token}'")
            letters.append((int(index), letter))
            highest = max(highest, int(index))
        parsed.append((coefficient, letters))
    if not parsed:
        raise HamiltonianError("Pauli sum text contains no terms")
    n = num_qubits if num_qubits is not None else max(highest + 1, 1)
    return PauliSum(n, tuple((c, PauliString(n, tuple(letters))) for c, letters in parsed))


def format_pauli_sum(obs: PauliSum) -> str:
    return "".join(f"{format(c, '.17g')} {s.label}\n" for c, s in obs.terms)


@dataclass(frozen=True)
class Graph:
    num_vertices: int
    edges: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self) -> None:
        if self.num_vertices < 1:
            raise GraphError("A graph needs at least one vertex")
        seen: set[tuple[int, int]] = set()
        normalized = []
        for edge in self.edges:
            if len(edge) == 2:
                u, v, weight = edge[0], edge[1], 1.0
            elif len(edge) == 3:
                u, v, weight = edge
            else:
                raise GraphError(f"Edge {edge!r} must be [u, v] or [u, v, weight]")
            u, v = int(u), int(v)
            if u == v:
                raise GraphError(f"Self-loop on vertex {u}")
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise GraphError(f"Edge ({u}, {v}) references a vertex outside 0..{self.num_vertices - 1}")
            pair = (min(u, v), max(u, v))
            if pair in seen:
                raise GraphError(f"Edge {pair} listed twice")
            seen.add(pair)
            normalized.append((pair[0], pair[1], float(weight)))
        object.__setattr__(self, "edges", tuple(normalized))

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "Graph":
        try:
            return cls(int(payload["vertices"]), tuple(tuple(edge) for edge in payload["edges"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, GraphError):
                raise
            raise GraphError(f"Graph JSON needs 'vertices' and 'edges': {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "Graph":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphError(f"Graph file is not valid JSON: {exc}") from exc
        return cls.from_dict(payload)

    def to_dict(self) -> dict[str, Any]:
        return {"vertices": self.num_vertices, "edges": [[u, v, w] for u, v, w in self.edges]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @property
    def total_weight(self) -> float:
        return sum(w for _, _, w in self.edges)

    def cut_value(self, assignment: Sequence[int] | str) -> float:
        """Cut weight of a 0/1 side assignment.

        A string is read as a sampled bitstring, vertex n-1 leftmost.
        """
        if isinstance(assignment, str):
            sides = [int(bit) for bit in reversed(assignment)]
        else:
            sides = [int(bit) for bit in assignment]
        if len(sides) != self.num_vertices:
            raise GraphError(f"Assignment has {len(sides)} entries for {self.num_vertices} vertices")
        return float(sum(w for u, v, w in self.edges if sides[u] != sides[v]))


def maxcut_hamiltonian(g: Graph) -> tuple[PauliSum, float]:
    """Cut observable C = offset + sum -w/2 Z_u Z_v, with the constant kept outside the sum."""
    if not g.edges:
        raise GraphError("MaxCut needs at least one edge")
    terms = tuple((-w / 2.0, _zz(g.num_vertices, u, v)) for u, v, w in g.edges)
    return PauliSum(g.num_vertices, terms), g.total_weight / 2.0


def brute_force_maxcut(g: Graph) -> tuple[float, str]:
    if g.num_vertices > MAX_BRUTE_FORCE_VERTICES:
        raise SizeError(f"Brute-force MaxCut is limited to {MAX_BRUTE_FORCE_VERTICES} vertices")
    assignments = np.arange(1 << g.num_vertices)
    values = np.zeros(assignments.shape[0], dtype=float)
    for u, v, w in g.edges:
        values += w * (((assignments >> u) ^ (assignments >> v)) & 1)
    best = int(np.argmax(values))
    return float(values[best]), format(best, f"0{g.num_vertices}b")


def _generator_number(kwargs: Mapping[str, float | str], key: str, default: float) -> float:
    value = kwargs.get(key, default)
    try:
        number = float(value)
    except (TypeError, ValueError) as e:
        raise ValidationFailure(f"Generator argument '{key}' must be a number, got {value!r}", f"args.{key}") from e
    if not np.isfinite(number):
        raise ValidationFailure(f"Generator argument '{key}' must be finite, got {value!r}", f"args.{key}")
    return number


def named_hamiltonian(name: str, n: int, **kwargs: float | str) -> PauliSum:
    """Generator lookup used by run manifests and the oracle command."""
    boundary = str(kwargs.get("boundary", "chain"))
    if name == "tfim":
        return tfim_hamiltonian(n, _generator_number(kwargs, "g", 1.0), boundary)
    if name == "heisenberg":
        return heisenberg_hamiltonian(n, _generator_number(kwargs, "J", 1.0), boundary)
    raise HamiltonianError(f"Unknown Hamiltonian generator '{name}', expected tfim or heisenberg")
