from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from pydantic import BaseModel

from ansatz_forge.ansatz_builders import qce_embedding, qcnn_ansatz
from ansatz_forge.circuit import Circuit, CircuitBuilder
from ansatz_forge.config import get_max_workers
from ansatz_forge.errors import DimensionError, SizeError, ValidationFailure
from ansatz_forge.hamiltonian import PauliString, PauliSum
from ansatz_forge.simulator import fidelity, new_zero_state, run_circuit, sample
from ansatz_forge.variational import (
    EvaluationCounter,
    Objective,
    OptimizerConfig,
    evaluate,
    initial_parameters,
    minimize_function,
    parameter_shift_gradient,
)

logger = logging.getLogger("ansatz-forge-qml")

FILTER_QUBITS = 4
PATCH_SIZE = 2
QCNN_TRAIN_SIZES = (4, 8)
FEATURE_COLUMNS = ("row", "col", "c0", "c1", "c2", "c3")


@dataclass(frozen=True)
class ImageGrid:
    """A 2-D image with pixel values already scaled into [0, pi]."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        pixels = np.asarray(self.pixels, dtype=float)
        if pixels.ndim != 2:
            raise DimensionError(f"Images must be 2-D, got shape {pixels.shape}")
        if pixels.size and (pixels.min() < 0.0 or pixels.max() > math.pi + 1e-12):
            raise DimensionError("Pixel values must lie in [0, pi]; use ImageGrid.from_raw to rescale")
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @classmethod
    def from_raw(cls, values: Sequence[Sequence[float]] | np.ndarray) -> "ImageGrid":
        """Max-normalise non-negative raw values onto [0, pi]."""
        raw = np.asarray(values, dtype=float)
        if raw.ndim != 2:
            raise DimensionError(f"Images must be 2-D, got shape {raw.shape}")
        if raw.size and raw.min() < 0.0:
            raise ValidationFailure("Pixel values must be non-negative", "image")
        peak = raw.max() if raw.size else 0.0
        scaled = raw / peak * math.pi if peak > 0 else np.zeros_like(raw)
        return cls(scaled)

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])


def load_image_csv(text: str) -> ImageGrid:
    rows = [row for row in csv.reader(io.StringIO(text)) if row and any(cell.strip() for cell in row)]
    try:
        values = [[float(cell) for cell in row] for row in rows]
    except ValueError as exc:
        raise ValidationFailure(f"Image CSV contains a non-numeric cell: {exc}", "image") from exc
    if not values or len({len(row) for row in values}) != 1:
        raise DimensionError("Image CSV rows must be non-empty and of equal length")
    return ImageGrid.from_raw(values)


def features_to_csv(features: np.ndarray) -> str:
    if features.ndim != 3 or features.shape[2] != FILTER_QUBITS:
        raise DimensionError(f"Feature grids must have shape (rows, cols, 4), got {features.shape}")
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(FEATURE_COLUMNS)
    for row in range(features.shape[0]):
        for col in range(features.shape[1]):
            writer.writerow([row, col, *(repr(float(v)) for v in features[row, col])])
    return buffer.getvalue()


def _z_expectations(probabilities: np.ndarray, num_qubits: int) -> np.ndarray:
    indices = np.arange(probabilities.shape[0])
    signs = np.array([1 - 2 * ((indices >> k) & 1) for k in range(num_qubits)])
    return signs @ probabilities


def quanv_filter(
    patch: Sequence[float] | np.ndarray,
    filter_circuit: Circuit,
    binding: Mapping[str, float],
    shots: int | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """RX-embed a 2x2 patch (row-major onto qubits 0..3), run the filter, return <Z_k> per qubit.

    With `shots` the expectations are estimated from samples drawn with `rng`.
    """
    if filter_circuit.num_qubits != FILTER_QUBITS:
        raise SizeError(f"Quanvolution filters act on {FILTER_QUBITS} qubits, got {filter_circuit.num_qubits}")
    pixels = np.asarray(patch, dtype=float).reshape(-1)
    if pixels.shape[0] != FILTER_QUBITS:
        raise DimensionError(f"A filter patch has {FILTER_QUBITS} pixels, got {pixels.shape[0]}")

    builder = CircuitBuilder(FILTER_QUBITS)
    for q, value in enumerate(pixels):
        builder.rx(q, float(value))
    builder.extend(filter_circuit)
    circuit = builder.build()
    state, _ = run_circuit(circuit, binding, new_zero_state(FILTER_QUBITS), rng)

    if shots is None:
        return _z_expectations(state.probabilities(), FILTER_QUBITS)
    if rng is None:
        raise ValidationFailure("Sampled filter features need an explicit rng", "rng")
    counts = sample(state, shots, rng)
    estimate = np.zeros(len(state.amplitudes))
    for bits, count in counts.items():
        estimate[int(bits, 2)] = count / shots
    return _z_expectations(estimate, FILTER_QUBITS)


def quanv_layer(
    img: ImageGrid,
    filter_circuit: Circuit,
    binding: Mapping[str, float],
    stride: int = 2,
    shots: int | None = None,
    seed: int | None = None,
) -> np.ndarray:
    """Slide the filter over 2x2 patches; returns an array of shape (rows, cols, 4)."""
    if stride < 1:
        raise DimensionError("Stride must be at least 1")
    if img.height < PATCH_SIZE or img.width < PATCH_SIZE:
        raise DimensionError(f"Image {img.height}x{img.width} is smaller than a {PATCH_SIZE}x{PATCH_SIZE} patch")
    if stride == PATCH_SIZE and (img.height % 2 or img.width % 2):
        raise DimensionError(f"Stride-2 quanvolution needs even image sides, got {img.height}x{img.width}")
    if shots is not None and seed is None:
        raise ValidationFailure("Sampled quanvolution needs an explicit seed", "seed")

    rows = (img.height - PATCH_SIZE) // stride + 1
    cols = (img.width - PATCH_SIZE) // stride + 1
    positions = [(i, j) for i in range(rows) for j in range(cols)]

    def run_patch(index: int) -> np.ndarray:
        i, j = positions[index]
        r, c = i * stride, j * stride
        patch = img.pixels[r : r + PATCH_SIZE, c : c + PATCH_SIZE]
        # per-patch generator seeded by (seed, patch index)
        rng = np.random.default_rng([seed, index]) if shots is not None else None
        return quanv_filter(patch, filter_circuit, binding, shots, rng)

    with ThreadPoolExecutor(max_workers=get_max_workers()) as executor:
        results = list(executor.map(run_patch, range(len(positions))))
    logger.debug("Quanvolution over %dx%d image produced %dx%d cells", img.height, img.width, rows, cols)
    return np.array(results, dtype=float).reshape(rows, cols, FILTER_QUBITS)


@dataclass(frozen=True)
class LabeledStateSample:
    preparation: Circuit
    label: int

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValidationFailure(f"Labels must be 0 or 1, got {self.label}", "label")
        if self.preparation.parameters:
            raise ValidationFailure("Sample preparations must be parameter-free", "preparation")


class QcnnTrainingResult(BaseModel):
    binding: dict[str, float]
    loss_trace: list[float]
    accuracy: float
    evaluations: int
    converged: bool


def _readout_objectives(samples: Sequence[LabeledStateSample], n: int) -> list[Objective]:
    blueprint = qcnn_ansatz(n, deferred=True)
    readout = PauliSum(n, ((1.0, PauliString(n, ((blueprint.readout, "Z"),))),))
    objectives = []
    for sample_ in samples:
        if sample_.preparation.num_qubits != n:
            raise SizeError(f"Sample preparation has {sample_.preparation.num_qubits} qubits, classifier has {n}")
        objectives.append(Objective(blueprint, readout, preparation=sample_.preparation))
    return objectives


def _label_from_readout(value: float) -> int:
    return 0 if value >= 0.0 else 1


def qcnn_predict(binding: Mapping[str, float], samples: Sequence[LabeledStateSample], n: int) -> list[int]:
    """Label 0 when the readout <Z> is non-negative, 1 otherwise."""
    return [_label_from_readout(evaluate(obj, binding)) for obj in _readout_objectives(samples, n)]


def _squared_error_gradient(
    objectives: Sequence[Objective],
    targets: np.ndarray,
    binding: Mapping[str, float],
    counter: EvaluationCounter | None,
) -> np.ndarray:
    residuals = np.array([evaluate(obj, binding) for obj in objectives]) - targets
    if counter is not None:
        counter.add(len(objectives))
    gradient = np.zeros(len(objectives[0].parameter_names))
    for obj, residual in zip(objectives, residuals):
        gradient += 2.0 * residual * parameter_shift_gradient(obj, binding, counter)
    return gradient / len(objectives)


def qcnn_loss_gradient(binding: Mapping[str, float], samples: Sequence[LabeledStateSample], n: int) -> np.ndarray:
    """Gradient of the training loss at `binding`, in blueprint parameter order."""
    objectives = _readout_objectives(samples, n)
    targets = np.array([1.0 - 2.0 * s.label for s in samples])
    return _squared_error_gradient(objectives, targets, binding, None)


def qcnn_train(
    dataset: Sequence[LabeledStateSample],
    n: int,
    config: OptimizerConfig,
) -> QcnnTrainingResult:
    """Fit the deferred-measurement QCNN by mean squared error against targets 1 - 2*label."""
    if n not in QCNN_TRAIN_SIZES:
        raise SizeError(f"QCNN training supports n in {QCNN_TRAIN_SIZES}, got {n}")
    if not dataset:
        raise ValidationFailure("Training dataset is empty", "dataset")
    if len({s.label for s in dataset}) < 2:
        raise ValidationFailure("Training dataset needs both labels", "dataset")

    objectives = _readout_objectives(dataset, n)
    targets = np.array([1.0 - 2.0 * s.label for s in dataset])
    names = objectives[0].parameter_names
    counter = EvaluationCounter()

    def readouts(x: np.ndarray) -> np.ndarray:
        binding = objectives[0].to_binding(x)
        counter.add(len(objectives))
        return np.array([evaluate(obj, binding) for obj in objectives])

    def loss(x: np.ndarray) -> float:
        return float(np.mean((readouts(x) - targets) ** 2))

    def loss_gradient(x: np.ndarray) -> np.ndarray:
        return _squared_error_gradient(objectives, targets, objectives[0].to_binding(x), counter)

    start = initial_parameters(names, config)
    logger.info("Training QCNN n=%d on %d samples with %s", n, len(dataset), config.method)
    outcome = minimize_function(loss, loss_gradient, objectives[0].to_vector(start), config, counter)
    binding = objectives[0].to_binding(outcome.best_x)
    predictions = qcnn_predict(binding, dataset, n)
    accuracy = sum(p == s.label for p, s in zip(predictions, dataset)) / len(dataset)
    logger.info("QCNN training finished: loss %.6g, train accuracy %.3f", outcome.best_value, accuracy)
    return QcnnTrainingResult(
        binding=binding,
        loss_trace=outcome.trace,
        accuracy=accuracy,
        evaluations=counter.count,
        converged=outcome.converged,
    )


def embedding_fidelity(
    x1: Sequence[float],
    x2: Sequence[float],
    binding: Mapping[str, float],
    n: int = 4,
    mode: str = "figure",
) -> float:
    """|<psi(x1)|psi(x2)>|^2 for two feature vectors through the same QCE embedding and binding."""
    if len(x1) != len(x2):
        raise DimensionError(f"Feature vectors differ in length: {len(x1)} vs {len(x2)}")
    states = []
    for features in (x1, x2):
        circuit = qce_embedding(features, n, mode).build()
        state, _ = run_circuit(circuit, binding, new_zero_state(n))
        states.append(state)
    return fidelity(states[0], states[1])
