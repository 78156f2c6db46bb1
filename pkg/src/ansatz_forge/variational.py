from __future__ import annotations

import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Literal, Mapping, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import OptimizeResult, minimize

from ansatz_forge.ansatz_builders import AnsatzBlueprint, qaoa_ansatz
from ansatz_forge.circuit import Circuit, ParameterOccurrence
from ansatz_forge.config import get_max_workers
from ansatz_forge.errors import BindingError, NumericalError, SizeError, UnsupportedGateError, ValidationFailure
from ansatz_forge.hamiltonian import Graph, PauliSum, brute_force_maxcut, exact_ground, expectation, maxcut_hamiltonian
from ansatz_forge.simulator import MAX_UNITARY_QUBITS, StateVector, new_zero_state, run_branches, run_circuit, sample

logger = logging.getLogger("ansatz-forge-variational")

HALF_PI = math.pi / 2
# four-term rule for generators with spectrum {0, +-1/2} (controlled rotations)
FOUR_TERM_NEAR = (math.sqrt(2) + 1) / (4 * math.sqrt(2))
FOUR_TERM_FAR = (math.sqrt(2) - 1) / (4 * math.sqrt(2))
SHIFTABLE_KINDS = {"RX", "RY", "RZ", "ZZ", "R2", "U3"}
ARMIJO_C = 1e-4
MIN_STEP = 1e-12
QAOA_RAMP_DT = 0.75


class OptimizerConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    method: Literal["gradient_descent", "spsa", "nelder_mead", "bfgs"] = "gradient_descent"
    max_iters: int = Field(default=200, ge=1)
    step_size: float = Field(default=0.1, gt=0)
    tolerance: float = Field(default=1e-8, gt=0)
    seed: int | None = None
    spsa_a: float = Field(default=0.2, gt=0)
    spsa_c: float = Field(default=0.1, gt=0)
    spsa_alpha: float = 0.602
    spsa_gamma: float = 0.101
    spsa_stability: float = Field(default=10.0, ge=0)
    init: Literal["zeros", "uniform"] = "zeros"
    init_scale: float = Field(default=0.1, gt=0)
    gradient: Literal["parameter_shift", "finite_difference"] = "parameter_shift"
    finite_difference_step: float = Field(default=1e-5, gt=0)


class OptResult(BaseModel):
    method: str
    best_params: dict[str, float]
    best_value: float
    trace: list[float]
    grad_norms: list[float | None]
    evaluations_trace: list[int]
    evaluations: int
    converged: bool
    exact_energy: float | None = None
    exact_gap: float | None = None

    @property
    def iterations(self) -> int:
        return len(self.trace)


class QaoaResult(BaseModel):
    optimization: OptResult
    best_bitstring: str
    best_cut: float
    optimum: float
    approximation_ratio: float
    counts: dict[str, int]


@dataclass(frozen=True)
class Objective:
    """Expectation of `observable` (plus `offset`) on the blueprint's output state.

    `preparation` is an optional parameter-free circuit run before the ansatz.
    """

    blueprint: AnsatzBlueprint
    observable: PauliSum
    initial_state: StateVector | None = None
    sense: Literal["minimize", "maximize"] = "minimize"
    offset: float = 0.0
    preparation: Circuit | None = None
    circuit: Circuit = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = self.blueprint.num_qubits
        if self.observable.num_qubits != n:
            raise SizeError(f"Observable has {self.observable.num_qubits} qubits, ansatz has {n}")
        if self.initial_state is None:
            object.__setattr__(self, "initial_state", new_zero_state(n))
        elif self.initial_state.num_qubits != n:
            raise SizeError(f"Initial state has {self.initial_state.num_qubits} qubits, ansatz has {n}")
        if self.preparation is not None and self.preparation.parameters:
            raise SizeError("State preparation circuits must be parameter-free")
        circuit = self.blueprint.build()
        if self.preparation is not None:
            circuit = self.preparation.compose(circuit)
        object.__setattr__(self, "circuit", circuit)

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return self.circuit.parameters

    def to_binding(self, values: Sequence[float]) -> dict[str, float]:
        return {name: float(v) for name, v in zip(self.parameter_names, values)}

    def to_vector(self, binding: Mapping[str, float]) -> np.ndarray:
        return np.array([float(binding[name]) for name in self.parameter_names], dtype=float)


def _evaluate_circuit(obj: Objective, circuit: Circuit, params: Mapping[str, float]) -> float:
    if circuit.has_measurements:
        # exact average over measurement branches
        value = sum(
            branch.probability * expectation(branch.state, obj.observable)
            for branch in run_branches(circuit, params, obj.initial_state)
        )
    else:
        state, _ = run_circuit(circuit, params, obj.initial_state)
        value = expectation(state, obj.observable)
    return float(value) + obj.offset


def evaluate(obj: Objective, params: Mapping[str, float]) -> float:
    return _evaluate_circuit(obj, obj.circuit, params)


def _shift_rule(obj: Objective, params: Mapping[str, float], occurrence: ParameterOccurrence) -> tuple[float, int]:
    op = obj.circuit.ops[occurrence.op_index]
    gate = op.gate
    inner_kind = gate.inner.kind if gate.kind == "CONTROLLED" else gate.kind
    if inner_kind not in SHIFTABLE_KINDS:
        raise UnsupportedGateError(f"Gate {gate.label} has no parameter-shift rule")

    def shifted(delta: float) -> float:
        circuit = obj.circuit.shifted(occurrence.op_index, occurrence.slot, delta)
        return _evaluate_circuit(obj, circuit, params)

    if gate.kind == "CONTROLLED":
        near = shifted(HALF_PI) - shifted(-HALF_PI)
        far = shifted(3 * HALF_PI) - shifted(-3 * HALF_PI)
        return occurrence.scale * (FOUR_TERM_NEAR * near - FOUR_TERM_FAR * far), 4
    return occurrence.scale * (shifted(HALF_PI) - shifted(-HALF_PI)) / 2.0, 2


def parameter_shift_gradient(
    obj: Objective,
    params: Mapping[str, float],
    counter: "EvaluationCounter | None" = None,
) -> np.ndarray:
    """Exact gradient, one shift pair per parameter occurrence, summed per name."""
    return _shift_derivatives(obj, params, obj.parameter_names, counter)


def parameter_shift_partial(
    obj: Objective,
    params: Mapping[str, float],
    name: str,
    counter: "EvaluationCounter | None" = None,
) -> float:
    """dE/d(name) alone; only the occurrences of `name` are shifted."""
    if name not in obj.parameter_names:
        raise BindingError(f"Objective has no parameter '{name}'")
    return float(_shift_derivatives(obj, params, (name,), counter)[0])


def _shift_derivatives(
    obj: Objective,
    params: Mapping[str, float],
    names: Sequence[str],
    counter: "EvaluationCounter | None",
) -> np.ndarray:
    index = {name: i for i, name in enumerate(names)}
    occurrences = [occ for occ in obj.circuit.occurrences() if occ.name in index]
    with ThreadPoolExecutor(max_workers=get_max_workers()) as executor:
        contributions = list(executor.map(lambda occ: _shift_rule(obj, params, occ), occurrences))
    gradient = np.zeros(len(index), dtype=float)
    for occurrence, (value, cost) in zip(occurrences, contributions):
        gradient[index[occurrence.name]] += value
        if counter is not None:
            counter.add(cost)
    return gradient


def finite_difference_gradient(
    obj: Objective,
    params: Mapping[str, float],
    h: float = 1e-5,
    counter: "EvaluationCounter | None" = None,
) -> np.ndarray:
    if h <= 0:
        raise ValueError("Finite-difference step must be positive")
    gradient = np.zeros(len(obj.parameter_names), dtype=float)
    for i, name in enumerate(obj.parameter_names):
        plus = dict(params)
        minus = dict(params)
        plus[name] = float(params[name]) + h
        minus[name] = float(params[name]) - h
        gradient[i] = (evaluate(obj, plus) - evaluate(obj, minus)) / (2 * h)
        if counter is not None:
            counter.add(2)
    return gradient


class EvaluationCounter:
    def __init__(self) -> None:
        self._count = 0
        self._lock = threading.Lock()

    def add(self, amount: int = 1) -> None:
        with self._lock:
            self._count += amount

    @property
    def count(self) -> int:
        return self._count


@dataclass
class MinimizeOutcome:
    """Raw minimiser output on the internal (always minimised) scale."""

    best_x: np.ndarray
    best_value: float
    trace: list[float]
    grad_norms: list[float | None]
    evaluations_trace: list[int]
    converged: bool


def _check_finite(value: float, trace: Sequence[float], what: str) -> None:
    if not np.isfinite(value):
        raise NumericalError(f"Non-finite {what} encountered after {len(trace)} iterations", trace)


def _gradient_descent(fun, grad, x0, config, counter) -> MinimizeOutcome:
    x = np.array(x0, dtype=float)
    value = fun(x)
    _check_finite(value, [], "objective value")
    trace, norms, evals = [value], [None], [counter.count]
    step = config.step_size
    converged = False
    while len(trace) < config.max_iters:
        g = grad(x)
        g_norm = float(np.linalg.norm(g))
        _check_finite(g_norm, trace, "gradient")
        norms[-1] = g_norm
        if g_norm < config.tolerance:
            converged = True
            break
        t = step
        while True:
            candidate = x - t * g
            candidate_value = fun(candidate)
            _check_finite(candidate_value, trace, "objective value")
            if candidate_value <= value - ARMIJO_C * t * g_norm**2:
                break
            t *= 0.5
            if t < MIN_STEP:
                break
        if t < MIN_STEP:
            logger.warning(
                "Line search found no descent step at iteration %d (gradient norm %.3g); stopping unconverged",
                len(trace) - 1,
                g_norm,
            )
            break
        decrease = value - candidate_value
        x, value = candidate, candidate_value
        trace.append(value)
        norms.append(None)
        evals.append(counter.count)
        logger.debug("gradient_descent iteration %d value=%.12g step=%.3g", len(trace) - 1, value, t)
        step = 2.0 * t
        if decrease < config.tolerance:
            converged = True
            break
    return MinimizeOutcome(x, value, trace, norms, evals, converged)


def _spsa(fun, x0, config, counter) -> MinimizeOutcome:
    if config.seed is None:
        raise ValidationFailure("SPSA needs an explicit optimizer seed", "optimizer.seed")
    rng = np.random.default_rng(config.seed)
    x = np.array(x0, dtype=float)
    value = fun(x)
    _check_finite(value, [], "objective value")
    trace, norms, evals = [value], [None], [counter.count]
    best_x, best_value = x.copy(), value
    converged = False
    k = 0
    while len(trace) < config.max_iters:
        k += 1
        a_k = config.spsa_a / (k + config.spsa_stability) ** config.spsa_alpha
        c_k = config.spsa_c / k**config.spsa_gamma
        delta = rng.choice((-1.0, 1.0), size=x.shape[0])
        estimate = (fun(x + c_k * delta) - fun(x - c_k * delta)) / (2 * c_k) * delta
        x = x - a_k * estimate
        previous, value = value, fun(x)
        _check_finite(value, trace, "objective value")
        trace.append(value)
        norms.append(None)
        evals.append(counter.count)
        if value < best_value:
            best_x, best_value = x.copy(), value
        if abs(previous - value) < config.tolerance:
            converged = True
            break
    return MinimizeOutcome(best_x, best_value, trace, norms, evals, converged)


def _scipy_minimize(fun, grad, x0, config, counter) -> MinimizeOutcome:
    x = np.array(x0, dtype=float)
    value = fun(x)
    _check_finite(value, [], "objective value")
    trace, norms, evals = [value], [None], [counter.count]
    points = [x.copy()]
    if len(trace) >= config.max_iters:
        return MinimizeOutcome(x, value, trace, norms, evals, False)

    def callback(intermediate_result: OptimizeResult) -> None:
        current = float(intermediate_result.fun)
        _check_finite(current, trace, "objective value")
        trace.append(current)
        points.append(np.array(intermediate_result.x, dtype=float))
        jac = intermediate_result.get("jac")
        norms.append(float(np.linalg.norm(jac)) if jac is not None else None)
        evals.append(counter.count)
        if len(trace) >= config.max_iters:
            raise StopIteration

    if config.method == "bfgs":
        options = {"maxiter": config.max_iters, "gtol": config.tolerance}
        result = minimize(fun, x, jac=grad, method="BFGS", callback=callback, options=options)
    else:
        options = {"maxiter": config.max_iters, "xatol": config.tolerance, "fatol": config.tolerance}
        result = minimize(fun, x, method="Nelder-Mead", callback=callback, options=options)
    best = int(np.argmin(trace))
    converged = bool(result.success) or (
        len(trace) > 1 and abs(trace[-1] - trace[-2]) < config.tolerance
    )
    return MinimizeOutcome(points[best], trace[best], trace, norms, evals, converged)


def minimize_function(
    fun: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray] | None,
    x0: Sequence[float],
    config: OptimizerConfig,
    counter: EvaluationCounter,
) -> MinimizeOutcome:
    """Run the configured method on a plain vector function; the trace starts at f(x0)."""
    if len(x0) == 0:
        value = fun(np.zeros(0))
        _check_finite(value, [], "objective value")
        return MinimizeOutcome(np.zeros(0), value, [value], [None], [counter.count], True)
    if config.method in ("gradient_descent", "bfgs") and grad is None:
        raise ValidationFailure(f"Method {config.method} needs a gradient", "optimizer.method")
    if config.method == "gradient_descent":
        return _gradient_descent(fun, grad, x0, config, counter)
    if config.method == "spsa":
        return _spsa(fun, x0, config, counter)
    return _scipy_minimize(fun, grad, x0, config, counter)


def initial_parameters(names: Sequence[str], config: OptimizerConfig) -> dict[str, float]:
    if config.init == "zeros":
        return {name: 0.0 for name in names}
    if config.seed is None:
        raise ValidationFailure("Uniform initialisation needs an explicit optimizer seed", "optimizer.seed")
    rng = np.random.default_rng(config.seed)
    values = rng.uniform(-config.init_scale, config.init_scale, size=len(names))
    return {name: float(v) for name, v in zip(names, values)}


def optimize(
    obj: Objective,
    config: OptimizerConfig,
    start: Mapping[str, float] | None = None,
) -> OptResult:
    names = obj.parameter_names
    start = dict(start) if start is not None else initial_parameters(names, config)
    missing = [name for name in names if name not in start]
    if missing:
        raise ValidationFailure(f"Start binding is missing parameters: {', '.join(missing)}", "start")
    sign = -1.0 if obj.sense == "maximize" else 1.0
    counter = EvaluationCounter()

    def fun(x: np.ndarray) -> float:
        counter.add()
        return sign * evaluate(obj, obj.to_binding(x))

    def grad(x: np.ndarray) -> np.ndarray:
        binding = obj.to_binding(x)
        if config.gradient == "finite_difference":
            g = finite_difference_gradient(obj, binding, config.finite_difference_step, counter)
        else:
            g = parameter_shift_gradient(obj, binding, counter)
        return sign * g

    logger.info(
        "Optimizing %s (%d parameters) with %s, max_iters=%d",
        obj.blueprint.family,
        len(names),
        config.method,
        config.max_iters,
    )
    try:
        outcome = minimize_function(fun, grad, obj.to_vector(start), config, counter)
    except NumericalError as exc:
        exc.trace = [sign * v for v in exc.trace]
        logger.error("Optimization of %s diverged: %s", obj.blueprint.family, exc)
        raise

    trace = [sign * v for v in outcome.trace]
    if not outcome.converged:
        logger.warning("%s did not converge within %d iterations", config.method, config.max_iters)
    logger.info("Finished %s: best value %.12g after %d evaluations", config.method, sign * outcome.best_value, counter.count)
    return OptResult(
        method=config.method,
        best_params=obj.to_binding(outcome.best_x),
        best_value=sign * outcome.best_value,
        trace=trace,
        grad_norms=outcome.grad_norms,
        evaluations_trace=outcome.evaluations_trace,
        evaluations=counter.count,
        converged=outcome.converged,
    )


def attach_exact_gap(result: OptResult, h: PauliSum) -> OptResult:
    if h.num_qubits > MAX_UNITARY_QUBITS:
        return result
    energy, _ = exact_ground(h)
    return result.model_copy(update={"exact_energy": energy, "exact_gap": result.best_value - energy})


def vqe_run(
    h: PauliSum,
    blueprint: AnsatzBlueprint,
    config: OptimizerConfig,
    initial_state: StateVector | None = None,
    start: Mapping[str, float] | None = None,
) -> OptResult:
    obj = Objective(blueprint, h, initial_state)
    return attach_exact_gap(optimize(obj, config, start), h)


def qaoa_linear_ramp(p: int, dt: float = QAOA_RAMP_DT) -> dict[str, float]:
    """gamma ramps up and beta ramps down across the p layers."""
    start = {}
    for k in range(p):
        fraction = (k + 0.5) / p
        start[f"qaoa_{2 * k}"] = fraction * dt
        start[f"qaoa_{2 * k + 1}"] = (1.0 - fraction) * dt
    return start


def grid_scan_p1(
    cost: PauliSum,
    offset: float = 0.0,
    points: int = 50,
    mixer: str = "x_mixer",
) -> tuple[float, float, float]:
    """Best <C> over a points x points (gamma, beta) grid on [0, pi] x [0, pi/2]; returns (value, gamma, beta)."""
    obj = Objective(qaoa_ansatz(cost, mixer, 1), cost, sense="maximize", offset=offset)
    best = (-math.inf, 0.0, 0.0)
    for gamma in np.linspace(0.0, math.pi, points):
        for beta in np.linspace(0.0, HALF_PI, points):
            value = evaluate(obj, {"qaoa_0": float(gamma), "qaoa_1": float(beta)})
            if value > best[0]:
                best = (value, float(gamma), float(beta))
    return best


def qaoa_run(
    g: Graph,
    p: int,
    config: OptimizerConfig,
    shots: int,
    rng: np.random.Generator,
    mixer: str = "x_mixer",
    start: Mapping[str, float] | None = None,
) -> QaoaResult:
    cost, offset = maxcut_hamiltonian(g)
    blueprint = qaoa_ansatz(cost, mixer, p)
    obj = Objective(blueprint, cost, sense="maximize", offset=offset)
    result = optimize(obj, config, start if start is not None else qaoa_linear_ramp(p))

    state, _ = run_circuit(obj.circuit, result.best_params, obj.initial_state)
    counts = sample(state, shots, rng)
    best_bitstring = max(counts, key=lambda bits: (g.cut_value(bits), counts[bits]))
    best_cut = g.cut_value(best_bitstring)
    optimum, _ = brute_force_maxcut(g)
    ratio = best_cut / optimum if optimum > 0 else 1.0
    logger.info("QAOA p=%d: <C>=%.6f, best sampled cut %.6g of %.6g", p, result.best_value, best_cut, optimum)
    return QaoaResult(
        optimization=result,
        best_bitstring=best_bitstring,
        best_cut=best_cut,
        optimum=optimum,
        approximation_ratio=ratio,
        counts=counts,
    )
