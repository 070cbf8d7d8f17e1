"""
generations -> segments -> {k, anchor, endpoints_freq, endpoints_action, ...}

Zone partitions are written for inspection and recomputed on load.
"""
import numpy as np

from diffusion_core.diophantine.params import DiophantineParams, ResonanceVector
from diffusion_core.hamiltonian.scales import PaperConstants, ScaleLadder
from diffusion_core.resonance_net.grid import VoronoiGrid
from diffusion_core.resonance_net.tree import ResonanceTree, ResonantSegment
from diffusion_core.serializers.documents import check_document, dump_document

SCHEMA_NAME = "resonance_tree"


def _grid_key(key):
    return str(key) if isinstance(key, int) else f"{key[0]}|{key[1]}"


def _parse_grid_key(text):
    if "|" not in text:
        return int(text)
    generation, parent = text.split("|", 1)
    return int(generation), parent


def _segment_from_dict(data):
    return ResonantSegment(
        id=data["id"],
        generation=data["generation"],
        k=ResonanceVector(tuple(data["k"]), normalized=False),
        endpoints=np.array(data["endpoints_freq"], dtype=float),
        radius=data["radius"],
        rho=data["rho"],
        anchor=None if data["anchor"] is None else np.array(data["anchor"], dtype=float),
        parent=data["parent"],
        status=data["status"],
        clause=data["clause"],
        action_endpoints=None if data["endpoints_action"] is None else np.array(data["endpoints_action"], dtype=float),
    )


def _grid_from_dict(data):
    return VoronoiGrid(
        generation=data["generation"],
        rho=data["rho"],
        centers=np.array(data["centers"], dtype=float).reshape(-1, 2),
        domain=tuple(tuple(axis) for axis in data["domain"]),
        complete=data["complete"],
    )


FIELDS = {
    "domain": lambda tree: [list(axis) for axis in tree.domain],
    "ladder": lambda tree: {"R0": tree.ladder.R0, "tau": tree.ladder.tau, "generations": tree.ladder.generations},
    "params": lambda tree: tree.params.as_dict(),
    "constants": lambda tree: tree.constants.as_dict(),
    "seed": lambda tree: tree.seed,
    "generations": lambda tree: [[segment.as_dict() for segment in generation] for generation in tree.generations],
    "rejected": lambda tree: [segment.as_dict() for segment in tree.rejected],
    "grids": lambda tree: {_grid_key(key): grid.as_dict() for key, grid in tree.grids.items()},
    "edges": lambda tree: sorted([sorted([a, b]) + [np.asarray(point).tolist()] for a, b, point in tree.intersections()]),
    "zones": lambda tree: {segment_id: partition.as_dict() for segment_id, partition in sorted(tree.zones.items())},
}


def tree_document(tree, fields=None):
    return dump_document(SCHEMA_NAME, FIELDS, tree, fields)


def load_tree(document):
    """
    Rebuild the tree, its intersection graph and its zone partitions.

    :raises ValueError: not a complete resonance_tree document of this version
    """
    document = check_document(document, SCHEMA_NAME, FIELDS)
    tree = ResonanceTree(
        domain=tuple(tuple(axis) for axis in document["domain"]),
        ladder=ScaleLadder(**document["ladder"]),
        params=DiophantineParams(**document["params"]),
        constants=PaperConstants(**document["constants"]),
        generations=[[_segment_from_dict(item) for item in generation] for generation in document["generations"]],
        rejected=[_segment_from_dict(item) for item in document["rejected"]],
        grids={_parse_grid_key(text): _grid_from_dict(grid) for text, grid in document["grids"].items()},
        seed=document["seed"],
    )
    tree.rebuild_graph()
    return tree
