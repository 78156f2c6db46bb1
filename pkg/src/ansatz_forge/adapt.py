from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

from ansatz_forge.ansatz_builders import adapt_blueprint
from ansatz_forge.errors import HamiltonianError
from ansatz_forge.hamiltonian import PAULI_LETTERS, PauliString, PauliSum
from ansatz_forge.simulator import StateVector
from ansatz_forge.variational import (
    EvaluationCounter,
    Objective,
    OptimizerConfig,
    OptResult,
    attach_exact_gap,
    evaluate,
    optimize,
    parameter_shift_partial,
)

logger = logging.getLogger("ansatz-forge-adapt")

DEFAULT_EPSILON = 1e-3
DEFAULT_MAX_DEPTH = 12


@dataclass
class AdaptState:
    pool: list[PauliString]
    epsilon: float
    chosen: list[PauliString] = field(default_factory=list)
    chosen_indices: list[int] = field(default_factory=list)
    params: dict[str, float] = field(default_factory=dict)
    energy_trace: list[float] = field(default_factory=list)
    gradient_trace: list[float] = field(default_factory=list)
    evaluations: int = 0
    reference: tuple[int, ...] = ()

    @property
    def depth(self) -> int:
        return len(self.chosen)


def y_local_pool(n: int) -> list[PauliString]:
    """Every 1- and 2-local Pauli string containing at least one Y."""
    pool = [PauliString(n, ((q, "Y"),)) for q in range(n)]
    for i, j in itertools.combinations(range(n), 2):
        for a, b in itertools.product(PAULI_LETTERS, repeat=2):
            if "Y" in (a, b):
                pool.append(PauliString(n, ((i, a), (j, b))))
    return pool


def _candidate_gradients(
    h: PauliSum,
    state: AdaptState,
    initial_state: StateVector | None,
    reference: Sequence[int],
    counter: EvaluationCounter,
) -> list[float]:
    n = h.num_qubits
    gradients = []
    for candidate in state.pool:
        blueprint = adapt_blueprint(n, state.chosen + [candidate], reference)
        obj = Objective(blueprint, h, initial_state)
        binding = dict(state.params)
        new_name = obj.parameter_names[-1]
        binding[new_name] = 0.0
        gradients.append(abs(parameter_shift_partial(obj, binding, new_name, counter)))
    return gradients


def adapt_vqe_run(
    h: PauliSum,
    pool: Sequence[PauliString],
    config: OptimizerConfig,
    epsilon: float = DEFAULT_EPSILON,
    max_depth: int = DEFAULT_MAX_DEPTH,
    initial_state: StateVector | None = None,
    reference: Sequence[int] = (),
) -> tuple[OptResult, AdaptState]:
    """Grow the ansatz one pool operator at a time.

    Each outer step scores every pool operator by |dE/dtheta| at theta=0 appended to
    the current circuit, keeps the largest (lowest pool index on ties), then
    re-optimises every parameter starting from the previous optimum.
    """
    if not pool:
        raise HamiltonianError("ADAPT needs a non-empty operator pool")
    if any(s.num_qubits != h.num_qubits for s in pool):
        raise HamiltonianError(f"Pool operators must act on {h.num_qubits} qubits")

    state = AdaptState(pool=list(pool), epsilon=epsilon, reference=tuple(reference))
    counter = EvaluationCounter()
    reference_obj = Objective(adapt_blueprint(h.num_qubits, [], reference), h, initial_state)
    result = optimize(reference_obj, config, {})
    counter.add(result.evaluations)
    state.energy_trace.append(result.best_value)

    while state.depth < max_depth:
        gradients = _candidate_gradients(h, state, initial_state, reference, counter)
        best_index, best_gradient = 0, gradients[0]
        for index, value in enumerate(gradients):
            if value > best_gradient:
                best_index, best_gradient = index, value
        state.gradient_trace.append(best_gradient)
        if best_gradient < epsilon:
            logger.info("ADAPT stopped at depth %d: max gradient %.3e < epsilon %.3e", state.depth, best_gradient, epsilon)
            break

        chosen = state.pool[best_index]
        state.chosen.append(chosen)
        state.chosen_indices.append(best_index)
        blueprint = adapt_blueprint(h.num_qubits, state.chosen, reference)
        obj = Objective(blueprint, h, initial_state)
        start = dict(state.params)
        start[obj.parameter_names[-1]] = 0.0
        result = optimize(obj, config, start)
        counter.add(result.evaluations)
        state.params = dict(result.best_params)
        state.energy_trace.append(result.best_value)
        logger.info(
            "ADAPT step %d: picked %s (|grad| %.6f), energy %.10f",
            state.depth,
            chosen.label,
            best_gradient,
            result.best_value,
        )
    else:
        logger.warning("ADAPT reached max depth %d before the gradient fell below %.3e", max_depth, epsilon)

    state.evaluations = counter.count
    final = result.model_copy(update={"evaluations": counter.count})
    return attach_exact_gap(final, h), state


def adapt_energy(h: PauliSum, state: AdaptState, initial_state: StateVector | None = None) -> float:
    """Re-evaluate the energy of a finished ADAPT state from its chosen operators."""
    blueprint = adapt_blueprint(h.num_qubits, state.chosen, state.reference)
    return evaluate(Objective(blueprint, h, initial_state), state.params)
