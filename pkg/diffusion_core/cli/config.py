"""
Pipeline configuration: one versioned JSON document, validated into frozen sections.

Every section except ``seed`` and ``schema_version`` is optional; a missing
section skips its stage and every stage that needs it.
"""
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace

from diffusion_core.cache.backends import OUTPUT_DIR_ENV
from diffusion_core.errors.exceptions import ConfigError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TOP_LEVEL_KEYS = (
    "schema_version",
    "seed",
    "output_dir",
    "tolerances",
    "constants",
    "hamiltonian",
    "tree",
    "normal_form",
    "potential",
    "nhic",
    "geodesics",
)


@dataclass(frozen=True)
class Tolerances:
    newton: float = 1e-12
    graph: float = 1e-10
    geodesic: float = 1e-8
    junction: float = 5e-3


@dataclass(frozen=True)
class ConstantsSection:
    d: int = 14
    theta_eff: int = 3
    m_eff: int | None = None


@dataclass(frozen=True)
class HamiltonianSection:
    """½Iᵀ h0 I + ε Σ a cos(k·(φ, t) + phase); ``terms`` are [k, a] or [k, a, phase]."""

    terms: tuple
    h0: tuple = ((1.0, 0.0), (0.0, 1.0))
    epsilon: float = 1e-3
    regularity_r: float = 8.0
    box: tuple = ((-1.0, 1.0), (-1.0, 1.0))
    grid: int = 9


@dataclass(frozen=True)
class TreeSection:
    domain: tuple = ((0.3, 0.5), (0.3, 0.5))
    R0: float = 20.0
    tau: float = 0.2
    generations: int = 1
    eta: float = 0.05
    cutoff_K: int = 30
    max_centers: int = 4
    max_children: int = 3
    K_cap: int = 10


@dataclass(frozen=True)
class NormalFormSection:
    """Either an explicit action ``zone`` around ``k`` or a tree ``segment`` whose first zone is used."""

    k: tuple = (1, 0, 0)
    zone: tuple | None = ((-0.05, 0.05), (0.1, 0.2))
    segment: str | None = None
    steps: int = 1
    tolerance: float = 0.0
    divisor_floor: float = 0.0
    grid: int = 32


@dataclass(frozen=True)
class PotentialSection:
    jf: tuple = (0.1, 0.2)
    nodes: int = 9
    orientation: str = "max"
    lambda_star: float = 1e-4
    grid: int = 64
    nu: float = 0.1


@dataclass(frozen=True)
class NhicSection:
    jf: tuple = (0.1, 0.2)
    nodes: int = 5
    grid: tuple = (16, 5, 8)
    iterations: int = 50
    tube_orbits: int = 0
    tube_time: float = 50.0


@dataclass(frozen=True)
class DoubleResonanceSection:
    """Γ_k ∩ Γ_k' of the configured Hamiltonian and the action box around it."""

    k: tuple = (1, 0, 0)
    k_prime: tuple = (0, 1, 0)
    core: tuple = ((-0.01, 0.01), (-0.01, 0.01))
    tolerance: float = 1e-12
    max_iterations: int = 10
    grid: int = 32


@dataclass(frozen=True)
class GeodesicSection:
    """
    A two degree of freedom system and one homology class: either
    ½|J|² + ε Σ a cos(k·ψ) from ``terms`` or, with ``double_resonance``, the
    slow system of the configured Hamiltonian near that double resonance.
    """

    terms: tuple = ()
    h: tuple = (0, 1)
    epsilon: float = 0.01
    energy_offsets: tuple = (1e-3, 1e-2, 1e-1)
    orbit_energies: tuple = ()
    restarts: int = 4
    nodes: int = 64
    samples: int = 128
    double_resonance: DoubleResonanceSection | None = None


@dataclass(frozen=True)
class PipelineConfig:
    """
    Usage:
        config = load_pipeline_config("run.json")
        config.seed, config.tree.R0, config.tolerances.newton
    """

    seed: int
    schema_version: int = SCHEMA_VERSION
    output_dir: str = "runs/default"
    tolerances: Tolerances = field(default_factory=Tolerances)
    constants: ConstantsSection = field(default_factory=ConstantsSection)
    hamiltonian: HamiltonianSection | None = None
    tree: TreeSection | None = None
    normal_form: NormalFormSection | None = None
    potential: PotentialSection | None = None
    nhic: NhicSection | None = None
    geodesics: GeodesicSection | None = None

    def as_dict(self):
        return asdict(self)


SECTIONS = {
    "tolerances": Tolerances,
    "constants": ConstantsSection,
    "hamiltonian": HamiltonianSection,
    "tree": TreeSection,
    "normal_form": NormalFormSection,
    "potential": PotentialSection,
    "nhic": NhicSection,
    "geodesics": GeodesicSection,
}


def _frozen(value):
    if isinstance(value, list):
        return tuple(_frozen(item) for item in value)
    return value


def _section(name, data, cls=None):
    cls = cls or SECTIONS[name]
    if not isinstance(data, dict):
        raise ConfigError(f"section {name} must be an object", witness={"key": name})
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown keys in {name}: {unknown}", witness={"key": f"{name}.{unknown[0]}"})
    try:
        return cls(**{key: _frozen(value) for key, value in data.items()})
    except TypeError as exc:
        raise ConfigError(f"section {name}: {exc}", witness={"key": name}) from exc


def _check_positive(name, section, keys):
    for key in keys:
        value = getattr(section, key)
        if not isinstance(value, (int, float)) or value <= 0:
            raise ConfigError(f"{name}.{key} must be positive, got {value!r}", witness={"key": f"{name}.{key}"})


def _geodesic_section(section):
    nested = section.double_resonance
    if nested is not None:
        nested = _section("geodesics.double_resonance", nested, DoubleResonanceSection)
        _check_positive("geodesics.double_resonance", nested, ("tolerance", "max_iterations", "grid"))
        section = replace(section, double_resonance=nested)
    elif not section.terms:
        raise ConfigError("geodesics needs terms or a double_resonance section", witness={"key": "geodesics.terms"})
    return section


def validate_pipeline_config(document):
    """
    :raises ConfigError: missing seed, unknown keys, a non-positive tolerance
        or an unsupported schema version; the witness names the key
    """
    if not isinstance(document, dict):
        raise ConfigError("configuration must be a JSON object", witness={"key": None})
    unknown = sorted(set(document) - set(TOP_LEVEL_KEYS))
    if unknown:
        raise ConfigError(f"unknown configuration keys {unknown}", witness={"key": unknown[0]})
    if "schema_version" not in document:
        raise ConfigError("schema_version is required", witness={"key": "schema_version"})
    if document["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema version {document['schema_version']!r}",
            witness={"key": "schema_version", "supported": SCHEMA_VERSION},
        )
    seed = document.get("seed")
    if seed is None:
        raise ConfigError("seed is required", witness={"key": "seed"})
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}", witness={"key": "seed"})

    sections = {name: _section(name, document[name]) for name in SECTIONS if document.get(name) is not None}
    tolerances = sections.get("tolerances", Tolerances())
    _check_positive("tolerances", tolerances, [f.name for f in fields(Tolerances)])
    if "hamiltonian" in sections:
        _check_positive("hamiltonian", sections["hamiltonian"], ("epsilon", "grid"))
    if "potential" in sections:
        _check_positive("potential", sections["potential"], ("lambda_star", "nu", "nodes"))
    if "tree" in sections:
        _check_positive("tree", sections["tree"], ("R0", "tau", "eta", "generations", "K_cap"))
    if "geodesics" in sections:
        sections["geodesics"] = _geodesic_section(sections["geodesics"])

    output_dir = os.environ.get(OUTPUT_DIR_ENV) or document.get("output_dir") or "runs/default"
    return PipelineConfig(seed=seed, schema_version=SCHEMA_VERSION, output_dir=output_dir, **sections)


def load_pipeline_config(path):
    """
    :raises ConfigError: unreadable JSON or a schema violation
    :raises FileNotFoundError: no file at ``path``
    """
    with open(path, encoding="utf-8") as handle:
        try:
            document = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}", witness={"key": None, "line": exc.lineno}) from exc
    config = validate_pipeline_config(document)
    logger.info("loaded configuration %s (seed %d)", path, config.seed)
    return config


def get_default_pipeline_config(**overrides):
    """
    A minimal document: a free ℋ₀ with two modes, a one generation net, one
    averaging step and the averaged potential along the first resonance.

    Usage:
        document = get_default_pipeline_config(seed=11, output_dir="runs/r2")
        config = validate_pipeline_config(document)
    """
    document = {
        "schema_version": SCHEMA_VERSION,
        "seed": 7,
        "output_dir": "runs/default",
        "tolerances": asdict(Tolerances()),
        "constants": asdict(ConstantsSection()),
        "hamiltonian": {
            "terms": [[[1, 0, 0], 1.0], [[0, 1, 0], 1.0]],
            "h0": [[1.0, 0.0], [0.0, 1.0]],
            "epsilon": 1e-3,
        },
        "tree": {"domain": [[0.3, 0.5], [0.3, 0.5]], "R0": 20.0, "tau": 0.2, "generations": 1, "eta": 0.05},
        "normal_form": {"k": [1, 0, 0], "zone": [[-0.05, 0.05], [0.1, 0.2]], "steps": 1},
        "potential": {"jf": [0.1, 0.2], "nodes": 9, "orientation": "max", "lambda_star": 1e-4},
        "nhic": None,
        "geodesics": None,
    }
    document.update(overrides)
    return document
