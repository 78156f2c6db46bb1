from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Any, Sequence

from ansatz_forge.ansatz_catalog import (
    VQA_CLASSES,
    build_blueprint,
    catalog_list,
    catalog_show,
    config_schema,
    parse_blueprint_config,
)
from ansatz_forge.config import configure_logging
from ansatz_forge.errors import AnsatzForgeError, ExportError, NumericalError, ValidationFailure
from ansatz_forge.experiments import planned_family, run_experiment
from ansatz_forge.hamiltonian import Graph, brute_force_maxcut, exact_ground, named_hamiltonian, parse_pauli_sum
from ansatz_forge.infrastructure.results_repository import result_stem
from ansatz_forge.infrastructure.service_container import ForgeServices, build_forge_services
from ansatz_forge.qasm import to_qasm

logger = logging.getLogger("ansatz-forge-cli")

EXIT_OK = 0
EXIT_USER_ERROR = 2
EXIT_NUMERICAL_ERROR = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ansatz-forge", description="Variational quantum ansatz workbench")
    commands = parser.add_subparsers(dest="command", required=True)

    catalog = commands.add_parser("catalog", help="Browse the ansatz catalog")
    catalog_commands = catalog.add_subparsers(dest="catalog_command", required=True)
    catalog_list_parser = catalog_commands.add_parser("list", help="List every ansatz family")
    catalog_list_parser.add_argument("--json", action="store_true")
    catalog_show_parser = catalog_commands.add_parser("show", help="Describe one family and its config schema")
    catalog_show_parser.add_argument("family")
    catalog_show_parser.add_argument("--json", action="store_true")

    run = commands.add_parser("run", help="Run an experiment manifest")
    run.add_argument("manifest")
    run.add_argument("--seed", type=int, default=None, help="Override the manifest seed")
    run.add_argument("--output-dir", default=None, help="Override the manifest output directory")
    run.add_argument("--json", action="store_true")

    export = commands.add_parser("export", help="Export a blueprint as OpenQASM 2.0")
    export.add_argument("config", help="Blueprint config JSON file")
    source = export.add_mutually_exclusive_group(required=True)
    source.add_argument("--binding", help="Parameter binding JSON file")
    source.add_argument("--zeros", action="store_true", help="Bind every parameter to 0")
    export.add_argument("--deferred", action="store_true", help="Use the deferred-measurement QCNN form")
    export.add_argument("--output", default=None, help="Write QASM here instead of standard output")

    oracle = commands.add_parser("oracle", help="Exact reference values")
    oracle_commands = oracle.add_subparsers(dest="oracle_command", required=True)
    ground = oracle_commands.add_parser("ground", help="Exact ground energy of a Hamiltonian")
    ground_source = ground.add_mutually_exclusive_group(required=True)
    ground_source.add_argument("--hamiltonian", help="Pauli-sum text file")
    ground_source.add_argument("--generator", choices=("tfim", "heisenberg"))
    ground.add_argument("--n", type=int, default=None, help="Qubit count")
    ground.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Generator argument such as g=1.0 or boundary=ring",
    )
    ground.add_argument("--json", action="store_true")
    maxcut = oracle_commands.add_parser("maxcut", help="Brute-force MaxCut of a graph")
    maxcut.add_argument("graph", help="Graph JSON file")
    maxcut.add_argument("--json", action="store_true")
    return parser


def _emit(payload: Any) -> None:
    print(json.dumps(payload, indent=2))


def _load_json(services: ForgeServices, path: str, what: str) -> Any:
    try:
        text = services.read_text(path)
    except OSError as e:
        logger.error("Failed to read %s %s: %s", what, path, e)
        raise ValidationFailure(f"Failed to read {what} {path}: {e}", what) from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        logger.error("Failed to parse %s %s: %s", what, path, e)
        raise ValidationFailure(f"Failed to parse {what} {path}: {e}", what) from e


def cmd_catalog(args: argparse.Namespace) -> int:
    if args.catalog_command == "list":
        entries = catalog_list()
        if args.json:
            _emit([entry.model_dump() for entry in entries])
            return EXIT_OK
        for vqa_class in VQA_CLASSES:
            print(vqa_class)
            for entry in entries:
                if entry.vqa_class == vqa_class:
                    print(f"  {entry.family:<6} {entry.name:<48} {entry.description}")
        return EXIT_OK

    entry = catalog_show(args.family)
    schema = config_schema(entry.family)
    if args.json:
        _emit({**entry.model_dump(), "config_schema": schema})
        return EXIT_OK
    print(f"{entry.family}: {entry.name} ({entry.vqa_class})")
    print(f"Description: {entry.description}")
    print(f"Intent: {entry.intent}")
    print(f"Applicability: {entry.applicability}")
    if entry.extensions:
        print(f"Extensions: {', '.join(entry.extensions)}")
    print("Config schema:")
    print(json.dumps(schema, indent=2))
    return EXIT_OK


def cmd_run(args: argparse.Namespace, services: ForgeServices) -> int:
    manifest = services.manifest_repository.load(args.manifest)
    if args.seed is not None:
        manifest = manifest.model_copy(update={"seed": args.seed})
    output_dir = args.output_dir or manifest.output_dir
    base_dir = os.path.dirname(os.path.abspath(args.manifest))

    try:
        bundle = run_experiment(manifest, services, base_dir)
    except NumericalError as e:
        stem = result_stem(manifest.task, planned_family(manifest), manifest.seed)
        path = services.results_repository.save_partial_trace(e.trace, output_dir, stem)
        logger.error("Run failed numerically; partial trace saved to %s", path)
        raise

    json_path, csv_path = services.results_repository.save(bundle, output_dir)
    result = bundle.result
    summary = {
        "family": bundle.family,
        "n": bundle.num_qubits,
        "best_value": result.best_value,
        "exact_gap": bundle.exact_gap,
        "evaluations": result.evaluations,
        "converged": result.converged,
        "result_json": json_path,
        "trace_csv": csv_path,
    }
    if args.json:
        _emit(summary)
    else:
        gap = "n/a" if bundle.exact_gap is None else f"{bundle.exact_gap:.3e}"
        print(
            f"family={bundle.family} n={bundle.num_qubits} best_value={result.best_value:.12g} "
            f"exact_gap={gap} evaluations={result.evaluations}"
        )
    return EXIT_OK


def cmd_export(args: argparse.Namespace, services: ForgeServices) -> int:
    raw = _load_json(services, args.config, "config")
    if not isinstance(raw, dict):
        raise ValidationFailure("Blueprint config must be a JSON object", "config")
    if args.deferred:
        if str(raw.get("family", "")).upper() != "QCNN":
            raise ValidationFailure("--deferred only applies to QCNN blueprints", "deferred")
        raw = {**raw, "deferred": True}
    blueprint = build_blueprint(parse_blueprint_config(raw))
    circuit = blueprint.build()
    if circuit.has_mid_circuit_measurement():
        raise ExportError(
            f"{blueprint.family} has a mid-circuit measurement with classically conditioned gates; "
            "re-run with --deferred to export the coherent form"
        )

    if args.zeros:
        binding = blueprint.zero_binding()
    else:
        loaded = _load_json(services, args.binding, "binding")
        if not isinstance(loaded, dict):
            raise ValidationFailure("Binding file must be a JSON object of name -> angle", "binding")
        try:
            binding = {str(name): float(value) for name, value in loaded.items()}
        except (TypeError, ValueError) as e:
            raise ValidationFailure(f"Binding values must be numbers: {e}", "binding") from e

    text = to_qasm(circuit, binding)
    if args.output:
        services.results_repository.save_text(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _generator_args(pairs: Sequence[str]) -> dict[str, float | str]:
    parsed: dict[str, float | str] = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ValidationFailure(f"Generator argument '{pair}' must look like KEY=VALUE", "param")
        try:
            parsed[key] = float(value)
        except ValueError:
            parsed[key] = value
    return parsed


def cmd_oracle(args: argparse.Namespace, services: ForgeServices) -> int:
    if args.oracle_command == "maxcut":
        graph = Graph.from_dict(_load_json(services, args.graph, "graph"))
        value, bits = brute_force_maxcut(graph)
        if args.json:
            _emit({"vertices": graph.num_vertices, "max_cut": value, "bitstring": bits})
        else:
            print(f"max_cut={value:.12g} bitstring={bits}")
        return EXIT_OK

    if args.generator is not None:
        if args.n is None:
            raise ValidationFailure("--generator needs --n", "n")
        h = named_hamiltonian(args.generator, args.n, **_generator_args(args.param))
    else:
        try:
            text = services.read_text(args.hamiltonian)
        except OSError as e:
            raise ValidationFailure(f"Failed to read hamiltonian {args.hamiltonian}: {e}", "hamiltonian") from e
        h = parse_pauli_sum(text, args.n)
    energy, _ = exact_ground(h)
    if args.json:
        _emit({"num_qubits": h.num_qubits, "terms": len(h), "ground_energy": energy})
    else:
        print(f"ground_energy={energy:.12g} n={h.num_qubits}")
    return EXIT_OK


def main(argv: Sequence[str] | None = None, services: ForgeServices | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USER_ERROR

    configure_logging()
    services = services or build_forge_services()
    try:
        if args.command == "catalog":
            return cmd_catalog(args)
        if args.command == "run":
            return cmd_run(args, services)
        if args.command == "export":
            return cmd_export(args, services)
        return cmd_oracle(args, services)
    except NumericalError as e:
        print(f"Numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL_ERROR
    except ValidationFailure as e:
        where = f" (field: {e.field_path})" if e.field_path else ""
        print(f"Invalid input{where}: {e}", file=sys.stderr)
        return EXIT_USER_ERROR
    except AnsatzForgeError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USER_ERROR
