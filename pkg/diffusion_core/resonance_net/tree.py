"""
The net of Dirichlet resonant segments in frequency space.

Generation 0 holds the vertical and horizontal lines k = (k1, 0, k0) and
(0, k2, k0) with gcd 1 and |k| <= R0 that cross the domain. Every later
segment lies on a selected line Γ_k = {ω : k·(ω, 1) = 0} and runs from the
foot of its anchor ω_n to the crossing with its parent line, which makes the
union connected.
"""
import logging
import math
from dataclasses import dataclass, field, replace

import networkx as nx
import numpy as np

from diffusion_core.diophantine.params import ResonanceVector
from diffusion_core.diophantine.selection import select_resonance_vector
from diffusion_core.errors.exceptions import SelectionError
from diffusion_core.resonance_net.grid import build_grid

logger = logging.getLogger(__name__)

ON_SEGMENT_TOL = 1e-9
POLYLINE_NODES = 64

ACCEPTED = "accepted"
REJECTED = "rejected"


def foot_point(k, point):
    """Orthogonal projection of ``point`` onto Γ_k."""
    k = np.asarray(getattr(k, "k", k), dtype=float)
    point = np.asarray(point, dtype=float)
    return point - (k[:2] @ point + k[2]) * k[:2] / (k[:2] @ k[:2])


def line_distance(k, points):
    k = np.asarray(getattr(k, "k", k), dtype=float)
    return np.abs(np.asarray(points, dtype=float) @ k[:2] + k[2]) / np.linalg.norm(k[:2])


def line_intersection(k, l):
    """Γ_k ∩ Γ_l, or None for parallel lines."""
    k = np.asarray(getattr(k, "k", k), dtype=float)
    l = np.asarray(getattr(l, "k", l), dtype=float)
    matrix = np.array([k[:2], l[:2]])
    if abs(np.linalg.det(matrix)) < 1e-14 * np.linalg.norm(k[:2]) * np.linalg.norm(l[:2]):
        return None
    return np.linalg.solve(matrix, -np.array([k[2], l[2]]))


def child_seed(seed, *path):
    """Deterministic integer seed for a sub-grid identified by ``path``."""
    return int(np.random.SeedSequence([seed, *path]).generate_state(1)[0])


@dataclass(frozen=True, eq=False)
class ResonantSegment:
    """
    Piece of Γ_k between two endpoints in frequency space.

    ``anchor`` is the grid center ω_n the segment was selected for (None in
    generation 0); ``parent`` is the id of the segment whose line it crosses.
    Action-space fields are filled in by ``pullback_to_actions``.
    """

    id: str
    generation: int
    k: ResonanceVector
    endpoints: np.ndarray
    radius: float
    rho: float
    anchor: np.ndarray | None = None
    parent: str | None = None
    status: str = ACCEPTED
    clause: str | None = None
    action_endpoints: np.ndarray | None = None
    action_polyline: np.ndarray | None = None
    graph: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "endpoints", np.asarray(self.endpoints, dtype=float).reshape(2, 2))
        if self.anchor is not None:
            object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float))

    @property
    def length(self):
        return float(np.linalg.norm(self.endpoints[1] - self.endpoints[0]))

    def point(self, s):
        s = np.asarray(s, dtype=float)[..., None]
        return self.endpoints[0] + s * (self.endpoints[1] - self.endpoints[0])

    def polyline(self, nodes=POLYLINE_NODES):
        return self.point(np.linspace(0.0, 1.0, nodes))

    def parameter(self, points):
        """Parameter s of the projection of ``points`` onto the segment's line."""
        direction = self.endpoints[1] - self.endpoints[0]
        scale = direction @ direction
        if scale == 0:
            return np.zeros(np.shape(points)[:-1])
        return (np.asarray(points, dtype=float) - self.endpoints[0]) @ direction / scale

    def distance_to(self, points):
        s = np.clip(self.parameter(points), 0.0, 1.0)
        return np.linalg.norm(np.asarray(points, dtype=float) - self.point(s), axis=-1)

    def contains(self, point, tol=ON_SEGMENT_TOL):
        scale = max(self.length, 1.0)
        return bool(self.distance_to(point) <= tol * scale)

    def intersection(self, other):
        """Common point of two segments on distinct lines, or None."""
        point = line_intersection(self.k, other.k)
        if point is None or not (self.contains(point) and other.contains(point)):
            return None
        return point

    def extended_to(self, point):
        """Smallest segment on the same line holding this one and ``point``."""
        points = np.vstack([self.endpoints, np.asarray(point, dtype=float)[None]])
        direction = self.endpoints[1] - self.endpoints[0]
        if not np.any(direction):
            direction = np.array([-self.k.k[1], self.k.k[0]], dtype=float)
        projections = points @ direction
        ends = sorted([points[int(np.argmin(projections))].tolist(), points[int(np.argmax(projections))].tolist()])
        return self.replace(endpoints=ends)

    def replace(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        return {
            "id": self.id,
            "generation": self.generation,
            "k": list(self.k.k),
            "anchor": None if self.anchor is None else self.anchor.tolist(),
            "endpoints_freq": self.endpoints.tolist(),
            "endpoints_action": None if self.action_endpoints is None else self.action_endpoints.tolist(),
            "radius": self.radius,
            "rho": self.rho,
            "parent": self.parent,
            "status": self.status,
            "clause": self.clause,
        }


@dataclass(eq=False)
class ResonanceTree:
    domain: tuple
    ladder: object
    params: object
    constants: object
    generations: list = field(default_factory=list)
    rejected: list = field(default_factory=list)
    grids: dict = field(default_factory=dict)
    zones: dict = field(default_factory=dict)
    graph: nx.Graph = field(default_factory=nx.Graph)
    seed: int = 0

    def segments(self):
        return [segment for generation in self.generations for segment in generation]

    def segment(self, segment_id):
        for segment in self.segments():
            if segment.id == segment_id:
                return segment
        raise KeyError(segment_id)

    def grid_of(self, segment):
        """Voronoi grid the segment's anchor was drawn from."""
        return self.grids.get(segment.generation if segment.generation <= 1 else (segment.generation, segment.parent))

    @property
    def depth(self):
        return len(self.generations) - 1

    def is_empty(self):
        return not self.segments()

    def is_connected(self):
        return self.graph.number_of_nodes() > 0 and nx.is_connected(self.graph)

    def intersections(self):
        """(id, id, point) for every recorded crossing."""
        return [(a, b, data["point"]) for a, b, data in self.graph.edges(data=True)]

    def replace_segment(self, segment):
        self.generations[segment.generation] = [
            segment if item.id == segment.id else item for item in self.generations[segment.generation]
        ]
        self.rebuild_graph()

    def rebuild_graph(self):
        self.graph = intersection_graph(self.segments())
        return self.graph


def generation_zero(domain, R0, rho0):
    """Vertical and horizontal resonance lines with gcd 1 and |k| <= R0 crossing ``domain``."""
    R0 = int(math.floor(R0))
    segments = []
    for axis, (lo, hi) in enumerate(domain):
        other_lo, other_hi = domain[1 - axis]
        for q in range(1, R0 + 1):
            for p in range(-R0, R0 + 1):
                if math.gcd(p, q) != 1 or not lo <= p / q <= hi:
                    continue
                k = (q, 0, -p) if axis == 0 else (0, q, -p)
                value = p / q
                endpoints = [[value, other_lo], [value, other_hi]] if axis == 0 else [[other_lo, value], [other_hi, value]]
                segments.append((axis, p / q, k, endpoints))
    segments.sort(key=lambda item: (item[0], item[1]))
    return [
        ResonantSegment(id=f"g0-{i}", generation=0, k=ResonanceVector(k), endpoints=endpoints, radius=R0, rho=rho0)
        for i, (_, _, k, endpoints) in enumerate(segments)
    ]


def intersection_graph(segments):
    """networkx graph of segments with an edge per crossing, storing the crossing point."""
    graph = nx.Graph()
    for segment in segments:
        graph.add_node(segment.id, generation=segment.generation, segment=segment)
    for i, first in enumerate(segments):
        for second in segments[i + 1 :]:
            if first.generation == 0 and second.generation == 0:
                if first.k.k[0] and second.k.k[0] or first.k.k[1] and second.k.k[1]:
                    continue
            point = first.intersection(second)
            if point is not None:
                graph.add_edge(first.id, second.id, point=point)
    return graph


def _child_segment(segment_id, generation, omega, k, parent, radius, rho):
    """Minimal piece of Γ_k holding the foot of ω and the crossing with the parent line."""
    foot = foot_point(k, omega)
    crossing = line_intersection(k, parent.k)
    if crossing is None:
        return None
    endpoints = sorted([foot.tolist(), crossing.tolist()])
    return ResonantSegment(
        id=segment_id,
        generation=generation,
        k=k,
        endpoints=endpoints,
        radius=radius,
        rho=rho,
        anchor=omega,
        parent=parent.id,
    )


def construction_failure(segment, parent, parent_grid, parent_anchor_index, params, tau):
    """
    First construction clause the segment breaks, or None.

    Checks the divisor bounds, that the segment meets B_ρ(ω_n), that the
    crossing with the parent line lies in the parent's Voronoi cell (on the
    parent itself for generation-0 lines), and from generation 2 on that the
    segment stays inside B_ρ(parent anchor).
    """
    R = segment.radius
    divisor = abs(segment.k.small_divisor(segment.anchor))
    if not R / 4 <= segment.k.norm <= R:
        return "item1"
    if not params.eta * R ** -(2 + tau) <= divisor <= R ** -(2 - 3 * tau):
        return "item2"
    if segment.distance_to(segment.anchor) > segment.rho:
        return "item3"
    crossing = line_intersection(segment.k, parent.k)
    if crossing is None or (parent.generation == 0 and not parent.contains(crossing)):
        return "item5"
    if parent_grid is not None and parent_anchor_index is not None:
        index, _ = parent_grid.nearest(crossing)
        if int(index) != parent_anchor_index:
            return "item5"
    if segment.generation >= 2 and not within_ball(segment, parent.anchor, parent.rho):
        return "item6"
    return None


def within_ball(segment, center, radius):
    return bool(np.max(np.linalg.norm(segment.endpoints - center, axis=1)) <= radius)


def _reject(tree, segment_id, generation, k, omega, parent, clause, strict, segment=None):
    if strict:
        raise SelectionError(
            f"segment {segment_id} breaks {clause}",
            witness={"segment": segment_id, "clause": clause, "k": list(k.k), "parent": parent.id},
        )
    logger.warning("rejecting %s (k=%s): %s", segment_id, k.k, clause)
    if segment is None:
        segment = ResonantSegment(
            id=segment_id,
            generation=generation,
            k=k,
            endpoints=[omega, omega],
            radius=tree.ladder.radius(generation),
            rho=tree.ladder.rho(generation),
            anchor=omega,
        )
    tree.rejected.append(segment.replace(status=REJECTED, clause=clause, parent=parent.id))


def _select_children(tree, generation, centers, parents, parent_grid_of, strict):
    """
    Selected segments of one generation; parents of generation >= 1 are
    extended along their line to hold the crossings of their children.
    """
    R, rho = tree.ladder.radius(generation), tree.ladder.rho(generation)
    current = {segment.id: segment for segment in tree.generations[generation - 1]}
    accepted = []
    for position, (omega, parent) in enumerate(zip(centers, parents)):
        segment_id = f"g{generation}-{position}"
        parent = current[parent.id]
        try:
            k = select_resonance_vector(omega, R, parent.k, tree.params)
        except SelectionError as exc:
            if strict:
                exc.witness.update({"segment": segment_id, "anchor": omega.tolist(), "parent": parent.id})
                raise
            _reject(tree, segment_id, generation, parent.k, omega, parent, exc.witness.get("clause", "selection"), False)
            continue

        segment = _child_segment(segment_id, generation, omega, k, parent, R, rho)
        if segment is None:
            _reject(tree, segment_id, generation, k, omega, parent, "item5", strict)
            continue
        grid, index = parent_grid_of(parent)
        failure = construction_failure(segment, parent, grid, index, tree.params, tree.ladder.tau)
        extended = parent
        if failure is None and parent.generation >= 1:
            extended = parent.extended_to(line_intersection(k, parent.k))
            if parent.generation >= 2:
                grandparent = tree.segment(parent.parent)
                if not within_ball(extended, grandparent.anchor, grandparent.rho):
                    failure = "item6"
        if failure is not None:
            _reject(tree, segment_id, generation, k, omega, parent, failure, strict, segment)
            continue
        current[parent.id] = extended
        accepted.append(segment)

    tree.generations[generation - 1] = [current[segment.id] for segment in tree.generations[generation - 1]]
    return accepted


def build_tree(
    domain,
    ladder,
    params,
    n_generations,
    constants,
    seed,
    max_centers=4,
    max_children=3,
    child_radius_fraction=0.25,
    strict=False,
):
    """
    Build generations 0..n_generations of the resonance net.

    Generation 1 anchors are the first ``max_centers`` centers of a ρ_1 grid
    over the whole domain and cross the nearest generation-0 line. Each later
    generation draws up to ``max_children`` anchors from a complete-in-box
    ρ_n grid around every parent anchor (box half-size
    ``child_radius_fraction``·ρ_{n-1}). Children breaking a construction
    clause are kept in ``tree.rejected``, or raised when ``strict``.

    Usage:
        tree = build_tree(((0.3, 0.5), (0.3, 0.5)), ScaleLadder(20, 0.2, 2), params, 2, PaperConstants(), seed=7)
    """
    if n_generations < 1:
        raise ValueError(f"n_generations must be at least 1, got {n_generations}")
    domain = tuple(tuple(float(x) for x in axis) for axis in domain)
    tree = ResonanceTree(domain=domain, ladder=ladder, params=params, constants=constants, seed=seed)
    if any(hi <= lo for lo, hi in domain):
        logger.info("empty domain %s, empty tree", domain)
        return tree

    zero = generation_zero(domain, ladder.radius(0), ladder.rho(0))
    tree.generations.append(zero)
    if not zero:
        return tree

    grid = build_grid(domain, 1, ladder, params, child_seed(seed, 1), max_centers=max_centers)
    tree.grids[1] = grid
    parents = []
    for omega in grid.centers:
        distances = [float(line_distance(line.k, omega)) for line in zero]
        parents.append(zero[int(np.argmin(distances))])
    tree.generations.append(
        _select_children(tree, 1, grid.centers, parents, lambda parent: (None, None), strict)
    )

    for generation in range(2, n_generations + 1):
        if generation > ladder.generations:
            raise ValueError(f"ladder has {ladder.generations} generations, {generation} requested")
        centers, parents = [], []
        for index, parent in enumerate(tree.generations[generation - 1]):
            half = child_radius_fraction * parent.rho
            box = tuple((float(c - half), float(c + half)) for c in parent.anchor)
            child_grid = build_grid(
                box, generation, ladder, params, child_seed(seed, generation, index), max_centers=max_children
            )
            tree.grids[(generation, parent.id)] = child_grid
            centers.extend(child_grid.centers)
            parents.extend([parent] * len(child_grid))

        def parent_grid_of(parent):
            grid = tree.grid_of(parent)
            index, _ = grid.nearest(parent.anchor)
            return grid, int(index)

        tree.generations.append(_select_children(tree, generation, centers, parents, parent_grid_of, strict))

    tree.rebuild_graph()
    logger.info(
        "resonance tree: %s segments per generation, %d rejected, connected=%s",
        [len(items) for items in tree.generations],
        len(tree.rejected),
        tree.is_connected(),
    )
    return tree
