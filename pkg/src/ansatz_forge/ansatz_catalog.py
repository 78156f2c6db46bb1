from __future__ import annotations

import logging
from typing import Annotated, Any, Literal, Mapping, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError

from ansatz_forge.ansatz_builders import (
    AnsatzBlueprint,
    adapt_blueprint,
    hea_ansatz,
    hva_ansatz,
    mera_ansatz,
    parse_generator,
    qaoa_ansatz,
    qce_embedding,
    qcnn_ansatz,
    qnn_filter_ansatz,
    spa_ansatz,
    ucc_ansatz,
)
from ansatz_forge.errors import CatalogLookupError, ValidationFailure
from ansatz_forge.hamiltonian import (
    Graph,
    PauliString,
    maxcut_hamiltonian,
    parse_pauli_sum,
    tfim_hamiltonian,
    tfim_hva_groups,
)

logger = logging.getLogger("ansatz-forge-catalog")

VQA_CLASSES = ("VQE", "QAOA", "QML")


class CatalogEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    family: str
    name: str
    description: str
    vqa_class: Literal["VQE", "QAOA", "QML"]
    intent: str
    applicability: str
    references: list[str]
    extensions: list[str] = Field(default_factory=list)


class _FamilyConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")


class UccConfig(_FamilyConfig):
    family: Literal["UCC"]
    n: int = Field(ge=1)
    generators: list[list[str]] = Field(min_length=1)
    reference: list[int] = Field(default_factory=list)


class HeaConfig(_FamilyConfig):
    family: Literal["HEA"]
    n: int = Field(ge=2)
    layers: int = Field(default=1, ge=1)
    entangler: Literal["cnot_ring", "cz_ring", "figure2"] = "cnot_ring"


class AdaptConfig(_FamilyConfig):
    family: Literal["ADAPT"]
    n: int = Field(ge=1)
    generators: list[str] = Field(default_factory=list)
    reference: list[int] = Field(default_factory=list)


class SpaConfig(_FamilyConfig):
    family: Literal["SPA"]
    n: int = Field(ge=2)
    layers: int = Field(default=1, ge=1)


class QaoaConfig(_FamilyConfig):
    family: Literal["QAOA"]
    layers: int = Field(default=1, ge=1)
    mixer: Literal["x_mixer", "xy_ring"] = "x_mixer"
    graph: dict[str, Any] | None = None
    cost: str | None = None
    initial_bitstring: str | None = None


class HvaConfig(_FamilyConfig):
    family: Literal["HVA"]
    n: int = Field(ge=2)
    layers: int = Field(default=1, ge=1)
    model: Literal["tfim"] = "tfim"
    g: float = 1.0
    boundary: Literal["chain", "ring"] = "ring"
    init: Literal["plus", "zeros"] = "plus"


class QceConfig(_FamilyConfig):
    family: Literal["QCE"]
    n: int = Field(default=4, ge=2)
    mode: Literal["figure", "general"] = "figure"
    features: list[float] = Field(default_factory=list)


class MeraConfig(_FamilyConfig):
    family: Literal["MERA"]
    n: Literal[2, 4, 8, 16]


class QnnConfig(_FamilyConfig):
    family: Literal["QNN"]
    n: Literal[4] = 4
    layers: int = Field(default=1, ge=0)
    random_gates: int = Field(default=0, ge=0)
    seed: int | None = None


class QcnnConfig(_FamilyConfig):
    family: Literal["QCNN"]
    n: Literal[4, 8, 16]
    deferred: bool = False


BlueprintConfig = Annotated[
    Union[
        UccConfig,
        HeaConfig,
        AdaptConfig,
        SpaConfig,
        QaoaConfig,
        HvaConfig,
        QceConfig,
        MeraConfig,
        QnnConfig,
        QcnnConfig,
    ],
    Field(discriminator="family"),
]
_CONFIG_ADAPTER: TypeAdapter[Any] = TypeAdapter(BlueprintConfig)

CONFIG_MODELS: dict[str, type[_FamilyConfig]] = {
    "UCC": UccConfig,
    "HEA": HeaConfig,
    "ADAPT": AdaptConfig,
    "SPA": SpaConfig,
    "QAOA": QaoaConfig,
    "HVA": HvaConfig,
    "QCE": QceConfig,
    "MERA": MeraConfig,
    "QNN": QnnConfig,
    "QCNN": QcnnConfig,
}

_CATALOG: tuple[CatalogEntry, ...] = (
    CatalogEntry(
        family="UCC",
        name="Unitary Coupled Cluster (UCC) Ansatz",
        description=(
            "It is the scalable scheme for generating the parameterized states required for variational "
            "methods. This heuristic ansatz is widely used in quantum chemistry problems"
        ),
        vqa_class="VQE",
        intent="Prepare correlated trial states by exponentiating excitation generators on a reference state.",
        applicability="Ground-state problems whose Hamiltonian comes with a natural reference occupation.",
        references=["shen2017quantum"],
        extensions=["UVCC", "UCCG", "UCCSD", "k-UpCCGSD", "OO-UCC", "Unitary Cluster-Jastrow", "LDCA"],
    ),
    CatalogEntry(
        family="HEA",
        name="Hardware-Efficient Ansatz (HEA)",
        description="It customizes the initialization state for QVE problems to specific quantum devices.",
        vqa_class="VQE",
        intent="Alternate native single-qubit rotations with the device's cheapest entangling layer.",
        applicability="Shallow-circuit experiments where gate fidelity matters more than problem structure.",
        references=["kandala2017hardware"],
        extensions=["QCC", "iQCC"],
    ),
    CatalogEntry(
        family="ADAPT",
        name="Adaptive Derivative Assembled Pseudo-Trotter (ADAPT VQE) Ansatz",
        description=(
            "An adaptive ansatz aimed at incrementally constructing a parametric representation of quantum "
            "states, reducing circuit depth to achieve higher accuracy."
        ),
        vqa_class="VQE",
        intent="Grow the circuit one pool operator at a time, picking the largest energy gradient.",
        applicability="Problems where a fixed ansatz is too deep and an operator pool is available.",
        references=["grimsley2019adaptive"],
        extensions=["qubit ADAPT VQE", "QEB ADAPT VQE", "ClusterVQE"],
    ),
    CatalogEntry(
        family="SPA",
        name="Symmetry-Preserving Ansatz (SPA)",
        description=(
            "An ansatz constructing a parameterized representation of quantum states, aimed at ensuring that "
            "the generated quantum states remain invariant under specific symmetry operations."
        ),
        vqa_class="VQE",
        intent="Restrict the search to a fixed particle-number sector with two-qubit exchange blocks.",
        applicability="Hamiltonians that conserve Hamming weight, such as particle-conserving chemistry models.",
        references=["barkoutsos2018quantum"],
        extensions=["ESPA"],
    ),
    CatalogEntry(
        family="QAOA",
        name="Quantum Alternating Operator Ansatz (QAOA)",
        description=(
            "It customizes an alternating structure in its ansatz to address Quantum Approximate Optimization "
            "Algorithm obtaining approximate solutions for combinatorial optimization problems."
        ),
        vqa_class="QAOA",
        intent="Alternate a problem-defined phase separator with a mixer for p rounds.",
        applicability="Combinatorial problems with a diagonal cost function, MaxCut being the reference case.",
        references=["farhi2014quantum"],
        extensions=["GM-QAOA", "QAOA+"],
    ),
    CatalogEntry(
        family="HVA",
        name="Hamiltonian Variational Ansatz (HVA)",
        description=(
            "A circuit design approach based on hierarchical structure and adjustable parameters aimed at more "
            "effectively managing and controlling the complexity of quantum circuits to tackle complex quantum "
            "computing problems."
        ),
        vqa_class="QAOA",
        intent="Trotterise the target Hamiltonian into commuting groups with one angle per group and layer.",
        applicability="Lattice models whose terms split into a few mutually commuting groups.",
        references=["wecker2015progress"],
        extensions=["Symmetry Breaking HVA", "VMFHA", "QOCA", "Fourier-transform HVA"],
    ),
    CatalogEntry(
        family="QCE",
        name="Quantum Circuit Embedding (QCE)",
        description="An ansatz for encoding conventional data into quantum states.",
        vqa_class="QML",
        intent="Load classical features as rotation angles and follow them with a trainable layer.",
        applicability="Small feature vectors that fit one feature per qubit.",
        references=["lloyd2020quantum"],
        extensions=["FQCE", "QEKs"],
    ),
    CatalogEntry(
        family="MERA",
        name="Multiscale Entanglement Renormalization Ansatz (MERA)",
        description=(
            "An ansatz for quantum many-body states on a D-dimensional lattice precisely and efficiently "
            "calculate the local observables' expectation"
        ),
        vqa_class="QML",
        intent="Build entanglement scale by scale, doubling the active register at each level.",
        applicability="Power-of-two registers representing critical or hierarchically correlated states.",
        references=["vidal2008class"],
        extensions=[],
    ),
    CatalogEntry(
        family="QNN",
        name="Quanvolutional Neural Network (QNN)",
        description=(
            "A hybrid classical-quantum algorithm leveraging some non-linear quantum circuit transformations for CNN."
        ),
        vqa_class="QML",
        intent="Replace a convolution kernel with a small circuit applied patch by patch.",
        applicability="Image-like inputs small enough to encode one pixel per qubit of a 2x2 patch.",
        references=["henderson2020quanvolutional"],
        extensions=[],
    ),
    CatalogEntry(
        family="QCNN",
        name="Quantum Convolutional Neural Network (QCNN)",
        description=(
            "A quantum convolutional neural network inspired by an inversed MERA circuit to enable efficient "
            "machine learning on quantum devices."
        ),
        vqa_class="QML",
        intent="Alternate shared convolution bricks with measurement-based pooling until two qubits remain.",
        applicability="Classifying quantum states prepared on 4, 8 or 16 qubits.",
        references=["cong2019quantum"],
        extensions=[],
    ),
)


def family_names() -> list[str]:
    return [entry.family for entry in _CATALOG]


def catalog_list() -> list[CatalogEntry]:
    return list(_CATALOG)


def catalog_show(family: str) -> CatalogEntry:
    wanted = family.strip().upper()
    for entry in _CATALOG:
        if entry.family == wanted:
            return entry
    raise CatalogLookupError(family, family_names())


def config_schema(family: str) -> dict[str, Any]:
    entry = catalog_show(family)
    return CONFIG_MODELS[entry.family].model_json_schema()


def validation_field_path(error: ValidationError) -> str:
    first = error.errors()[0]
    return ".".join(str(part) for part in first["loc"])


def parse_blueprint_config(raw: Mapping[str, Any]) -> _FamilyConfig:
    try:
        return _CONFIG_ADAPTER.validate_python(dict(raw))
    except ValidationError as exc:
        path = validation_field_path(exc)
        logger.error("Invalid blueprint config at %s: %s", path, exc.errors()[0]["msg"])
        raise ValidationFailure(f"Invalid blueprint config at '{path}': {exc.errors()[0]['msg']}", path) from exc


def _qaoa_cost(config: QaoaConfig):
    if (config.graph is None) == (config.cost is None):
        raise ValidationFailure("QAOA config needs exactly one of 'graph' or 'cost'", "cost")
    if config.graph is not None:
        cost, _ = maxcut_hamiltonian(Graph.from_dict(config.graph))
        return cost
    return parse_pauli_sum(config.cost)


def build_blueprint(raw: Mapping[str, Any] | _FamilyConfig) -> AnsatzBlueprint:
    """Dispatch a blueprint config (dict or validated model) to its family builder."""
    config = raw if isinstance(raw, _FamilyConfig) else parse_blueprint_config(raw)
    recorded = config.model_dump(mode="json")

    if isinstance(config, UccConfig):
        groups = [[parse_generator(config.n, text) for text in group] for group in config.generators]
        return ucc_ansatz(groups, config.reference)
    if isinstance(config, HeaConfig):
        return hea_ansatz(config.n, config.layers, config.entangler)
    if isinstance(config, AdaptConfig):
        strings = [PauliString.from_label(config.n, label) for label in config.generators]
        return adapt_blueprint(config.n, strings, config.reference)
    if isinstance(config, SpaConfig):
        return spa_ansatz(config.n, config.layers)
    if isinstance(config, QaoaConfig):
        return qaoa_ansatz(_qaoa_cost(config), config.mixer, config.layers, config.initial_bitstring, recorded)
    if isinstance(config, HvaConfig):
        h = tfim_hamiltonian(config.n, config.g, config.boundary)
        return hva_ansatz(h, tfim_hva_groups(config.n, config.boundary), config.layers, config.init, recorded)
    if isinstance(config, QceConfig):
        return qce_embedding(config.features, config.n, config.mode)
    if isinstance(config, MeraConfig):
        return mera_ansatz(config.n)
    if isinstance(config, QnnConfig):
        return qnn_filter_ansatz(config.layers, config.random_gates, config.seed)
    if isinstance(config, QcnnConfig):
        return qcnn_ansatz(config.n, config.deferred)
    raise CatalogLookupError(str(recorded.get("family")), family_names())

