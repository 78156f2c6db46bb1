from __future__ import annotations

import json
import logging
import os
from typing import Any, Callable, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ansatz_forge.adapt import DEFAULT_EPSILON, DEFAULT_MAX_DEPTH, y_local_pool
from ansatz_forge.ansatz_builders import AnsatzBlueprint
from ansatz_forge.ansatz_catalog import build_blueprint, validation_field_path
from ansatz_forge.errors import GraphError, HamiltonianError, ValidationFailure
from ansatz_forge.hamiltonian import Graph, PauliString, PauliSum, named_hamiltonian, parse_pauli_sum
from ansatz_forge.variational import OptimizerConfig

logger = logging.getLogger("ansatz-forge-manifest")


def _nested_failure(section: str, error: ValidationFailure) -> ValidationFailure:
    """Re-anchor a failure raised below a manifest section onto that section's key."""
    field_path = f"{section}.{error.field_path}" if error.field_path else section
    return ValidationFailure(f"Invalid {section} at '{field_path}': {error}", field_path)


class HamiltonianSource(BaseModel):
    """Exactly one of `inline` (Pauli-sum text), `file`, or `generator`."""

    model_config = ConfigDict(extra="forbid")

    inline: str | None = None
    file: str | None = None
    generator: Literal["tfim", "heisenberg"] | None = None
    n: int | None = Field(default=None, ge=1)
    args: dict[str, float | str] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _one_source(self) -> "HamiltonianSource":
        given = [name for name in ("inline", "file", "generator") if getattr(self, name) is not None]
        if len(given) != 1:
            raise ValueError(f"exactly one of inline, file, generator is required, got {given or 'none'}")
        if self.generator is not None and self.n is None:
            raise ValueError("generator Hamiltonians need 'n'")
        return self


class GraphSource(BaseModel):
    model_config = ConfigDict(extra="forbid")

    inline: dict[str, Any] | None = None
    file: str | None = None

    @model_validator(mode="after")
    def _one_source(self) -> "GraphSource":
        if (self.inline is None) == (self.file is None):
            raise ValueError("exactly one of inline, file is required")
        return self


class PoolSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["y_local", "explicit"] = "y_local"
    strings: list[str] = Field(default_factory=list)


class RunManifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    task: Literal["vqe", "qaoa", "adapt"] = "vqe"
    seed: int
    ansatz: dict[str, Any] | None = None
    hamiltonian: HamiltonianSource | None = None
    graph: GraphSource | None = None
    layers: int = Field(default=1, ge=1)
    mixer: Literal["x_mixer", "xy_ring"] = "x_mixer"
    shots: int = Field(default=1024, ge=1)
    pool: PoolSpec = Field(default_factory=PoolSpec)
    epsilon: float = Field(default=DEFAULT_EPSILON, gt=0)
    max_depth: int = Field(default=DEFAULT_MAX_DEPTH, ge=1)
    reference: list[int] = Field(default_factory=list)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    output_dir: str = "results"

    @model_validator(mode="after")
    def _task_inputs(self) -> "RunManifest":
        if self.task == "vqe" and (self.ansatz is None or self.hamiltonian is None):
            raise ValueError("vqe manifests need 'ansatz' and 'hamiltonian'")
        if self.task == "adapt" and self.hamiltonian is None:
            raise ValueError("adapt manifests need 'hamiltonian'")
        if self.task == "qaoa" and self.graph is None:
            raise ValueError("qaoa manifests need 'graph'")
        return self

    def effective_optimizer(self) -> OptimizerConfig:
        """The optimizer config with the run seed filled in where none was given.

        QAOA manifests without an optimizer section default to Nelder-Mead.
        """
        update: dict[str, Any] = {}
        if self.optimizer.seed is None:
            update["seed"] = self.seed
        if self.task == "qaoa" and "optimizer" not in self.model_fields_set:
            update["method"] = "nelder_mead"
        return self.optimizer.model_copy(update=update) if update else self.optimizer


class ManifestRepository:
    def __init__(self, *, read_text: Callable[[str], str]) -> None:
        self._read_text = read_text

    def _read(self, path: str, what: str) -> str:
        try:
            return self._read_text(path)
        except OSError as e:
            logger.error("Failed to read %s %s: %s", what, path, e)
            raise ValidationFailure(f"Failed to read {what} {path}: {e}", what) from e

    def load(self, path: str) -> RunManifest:
        logger.info("Loading run manifest %s", path)
        text = self._read(path, "manifest")
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as e:
            logger.error("Failed to parse manifest %s: %s", path, e)
            raise ValidationFailure(f"Failed to parse manifest {path}: {e}", "manifest") from e
        return self.parse(payload)

    def parse(self, payload: Any) -> RunManifest:
        try:
            return RunManifest.model_validate(payload)
        except ValidationError as e:
            field_path = validation_field_path(e) or "manifest"
            message = e.errors()[0]["msg"]
            logger.error("Invalid manifest at %s: %s", field_path, message)
            raise ValidationFailure(f"Invalid manifest at '{field_path}': {message}", field_path) from e

    def resolve_hamiltonian(self, manifest: RunManifest, base_dir: str = ".") -> PauliSum:
        source = manifest.hamiltonian
        if source is None:
            raise ValidationFailure("Manifest has no hamiltonian", "hamiltonian")
        try:
            if source.generator is not None:
                return named_hamiltonian(source.generator, source.n, **source.args)
            if source.file is not None:
                text = self._read(os.path.join(base_dir, source.file), "hamiltonian")
            else:
                text = source.inline
            return parse_pauli_sum(text, source.n)
        except ValidationFailure as e:
            raise _nested_failure("hamiltonian", e) from e
        except HamiltonianError as e:
            raise ValidationFailure(f"Invalid hamiltonian: {e}", "hamiltonian") from e

    def resolve_ansatz(self, manifest: RunManifest) -> AnsatzBlueprint:
        if manifest.ansatz is None:
            raise ValidationFailure("Manifest has no ansatz", "ansatz")
        try:
            return build_blueprint(manifest.ansatz)
        except ValidationFailure as e:
            raise _nested_failure("ansatz", e) from e

    def resolve_graph(self, manifest: RunManifest, base_dir: str = ".") -> Graph:
        source = manifest.graph
        if source is None:
            raise ValidationFailure("Manifest has no graph", "graph")
        try:
            if source.file is not None:
                return Graph.from_json(self._read(os.path.join(base_dir, source.file), "graph"))
            return Graph.from_dict(source.inline)
        except GraphError as e:
            raise ValidationFailure(f"Invalid graph: {e}", "graph") from e

    def resolve_pool(self, manifest: RunManifest, num_qubits: int) -> list[PauliString]:
        if manifest.pool.kind == "y_local":
            return y_local_pool(num_qubits)
        if not manifest.pool.strings:
            raise ValidationFailure("Explicit pools need at least one string", "pool.strings")
        try:
            return [PauliString.from_label(num_qubits, label) for label in manifest.pool.strings]
        except HamiltonianError as e:
            raise ValidationFailure(f"Invalid pool string: {e}", "pool.strings") from e
