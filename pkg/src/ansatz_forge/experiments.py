from __future__ import annotations

import logging
import time
from importlib.metadata import PackageNotFoundError, version
from typing import Callable

import numpy as np

from ansatz_forge.adapt import adapt_vqe_run
from ansatz_forge.infrastructure.manifest_repository import RunManifest
from ansatz_forge.infrastructure.results_repository import ResultBundle
from ansatz_forge.infrastructure.service_container import ForgeServices
from ansatz_forge.variational import qaoa_run, vqe_run

logger = logging.getLogger("ansatz-forge-experiments")


def tool_version() -> str:
    try:
        return version("ansatz-forge")
    except PackageNotFoundError:
        return "0.1.0"


def planned_family(manifest: RunManifest) -> str:
    if manifest.task == "qaoa":
        return "QAOA"
    if manifest.task == "adapt":
        return "ADAPT"
    return str((manifest.ansatz or {}).get("family", "unknown")).upper()


def run_experiment(
    manifest: RunManifest,
    services: ForgeServices,
    base_dir: str = ".",
    clock: Callable[[], float] = time.perf_counter,
) -> ResultBundle:
    """Execute one manifest; the optimizer inherits the manifest seed unless it names its own."""
    optimizer = manifest.effective_optimizer()
    repository = services.manifest_repository
    started = clock()
    logger.info("Starting %s run (seed %d)", manifest.task, manifest.seed)

    qaoa_details = None
    adapt_details = None
    if manifest.task == "vqe":
        h = repository.resolve_hamiltonian(manifest, base_dir)
        blueprint = repository.resolve_ansatz(manifest)
        family, num_qubits = blueprint.family, blueprint.num_qubits
        result = vqe_run(h, blueprint, optimizer)
    elif manifest.task == "qaoa":
        graph = repository.resolve_graph(manifest, base_dir)
        rng = np.random.default_rng(manifest.seed)
        outcome = qaoa_run(graph, manifest.layers, optimizer, manifest.shots, rng, manifest.mixer)
        family, num_qubits = "QAOA", graph.num_vertices
        result = outcome.optimization
        qaoa_details = outcome.model_dump(exclude={"optimization"})
    else:
        h = repository.resolve_hamiltonian(manifest, base_dir)
        pool = repository.resolve_pool(manifest, h.num_qubits)
        result, state = adapt_vqe_run(
            h,
            pool,
            optimizer,
            epsilon=manifest.epsilon,
            max_depth=manifest.max_depth,
            reference=manifest.reference,
        )
        family, num_qubits = "ADAPT", h.num_qubits
        adapt_details = {
            "chosen": [s.label for s in state.chosen],
            "chosen_indices": state.chosen_indices,
            "energy_trace": state.energy_trace,
            "gradient_trace": state.gradient_trace,
            "pool_size": len(state.pool),
        }

    elapsed = clock() - started
    logger.info("Finished %s run in %.3f s", manifest.task, elapsed)
    return ResultBundle(
        tool_version=tool_version(),
        task=manifest.task,
        family=family,
        num_qubits=num_qubits,
        manifest=manifest.model_dump(mode="json"),
        wall_time_seconds=elapsed,
        result=result,
        exact_gap=result.exact_gap,
        qaoa=qaoa_details,
        adapt=adapt_details,
    )
