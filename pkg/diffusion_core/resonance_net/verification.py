"""
Per-segment checks of the selection theorem on a built tree.

Items (numbering of the construction):
  1  R/4 <= |k_n| <= R
  2  η R^-(2+τ) <= |k_n·(ω_n, 1)| <= R^-(2-3τ)
  3  the segment meets B_ρ(ω_n)
  4  angle(k_n, k_{n-1}) >= π/10
  5  the crossing with the parent line lies on the parent and in its Voronoi cell
  6  the segment lies in B_{ρ_{n-1}}(ω_{n-1})
  7  lines through B_{3ρ}(ω_n) have |k_n|/|k| <= R^(c1 τ), c1 measured
  8  lines through a crossing number at most ρ^-(c2 τ), c2 measured
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from diffusion_core.resonance_net.tree import line_distance, line_intersection

logger = logging.getLogger(__name__)

ITEMS = ("item1", "item2", "item3", "item4", "item5", "item6", "item7", "item8")
# selection clauses of a rejected child, by the item they break
CLAUSE_ITEMS = {"primitive": "item1", "annulus": "item1", "lower": "item2", "upper": "item2", "angle": "item4"}
MIN_ANGLE = math.pi / 10
THROUGH_TOL = 1e-12


@dataclass
class TreeReport:
    entries: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    connected: bool = True
    adjacency_violations: list = field(default_factory=list)
    isolation_violations: list = field(default_factory=list)

    def add(self, segment_id, item, passed, **values):
        self.entries.append({"segment": segment_id, "item": item, "passed": bool(passed), **values})

    def failures(self, item=None):
        return [entry for entry in self.entries if not entry["passed"] and (item is None or entry["item"] == item)]

    def rejections(self):
        return [entry for entry in self.entries if entry.get("rejected")]

    def passed(self, item=None):
        if item is not None:
            return not self.failures(item)
        return not self.failures() and self.connected and not self.adjacency_violations

    @property
    def summary(self):
        return {
            item: {
                "checked": sum(entry["item"] == item for entry in self.entries),
                "failures": len(self.failures(item)),
                "rejected": sum(entry["item"] == item for entry in self.rejections()),
                "passed": self.passed(item),
            }
            for item in ITEMS
        }

    def as_dict(self):
        return {
            "passed": self.passed(),
            "summary": self.summary,
            "constants": self.constants,
            "connected": self.connected,
            "adjacency_violations": self.adjacency_violations,
            "isolation_violations": self.isolation_violations,
            "rejected": self.rejections(),
            "entries": self.entries,
        }


def nearby_line_ratio(k, omega, radius):
    """
    Smallest |k'| <= |k| over lines Γ_k' (k' not parallel to k) meeting
    B_radius(ω); returns |k| / that norm, or 1 when there is none.
    """
    size = k.norm
    axis = np.arange(-size, size + 1)
    planar = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    planar = planar[np.any(planar != 0, axis=1)]
    values = planar @ np.asarray(omega, dtype=float)
    smallest = None
    for k0 in (np.floor(-values), np.ceil(-values)):
        candidates = np.column_stack([planar, k0.astype(np.int64)])
        norms = np.max(np.abs(candidates), axis=1)
        close = np.abs(values + k0) / np.linalg.norm(planar, axis=1) <= radius
        independent = np.any(np.cross(candidates, np.asarray(k.k)) != 0, axis=1)
        selected = norms[close & independent & (norms <= size)]
        if len(selected):
            smallest = min(smallest or size, int(np.min(selected)))
    return size / smallest if smallest else 1.0


def _lines_through(point, lines, tol=THROUGH_TOL):
    distances = np.array([float(line_distance(k, point)) for k in lines])
    return int(np.sum(distances <= tol * max(1.0, float(np.max(np.abs(point))))))


def verify_tree(tree):
    """
    Evaluate items 1-8 on every accepted segment plus connectivity, the
    generation-adjacency rule and isolation of crossings. Every child the
    construction rejected is a failed entry of the item its clause breaks.
    Failures are report entries, never exceptions.
    """
    report = TreeReport()
    for segment in tree.rejected:
        item = CLAUSE_ITEMS.get(segment.clause, segment.clause)
        report.add(segment.id, item, False, rejected=True, clause=segment.clause, k=list(segment.k.k))
    eta, tau = tree.params.eta, tree.ladder.tau
    lines = sorted({segment.k.k for segment in tree.segments()})
    c1_values, c2_values = [], []

    for segment in tree.segments():
        k, R, rho = segment.k, segment.radius, segment.rho
        if segment.generation == 0:
            report.add(segment.id, "item1", k.norm <= R, norm=k.norm, bound=R)
            continue
        parent = tree.segment(segment.parent)
        omega = segment.anchor

        report.add(segment.id, "item1", R / 4 <= k.norm <= R, norm=k.norm, lower=R / 4, upper=R)
        divisor = abs(k.small_divisor(omega))
        lower, upper = eta * R ** -(2 + tau), R ** -(2 - 3 * tau)
        report.add(segment.id, "item2", lower <= divisor <= upper, divisor=divisor, lower=lower, upper=upper)
        distance = float(segment.distance_to(omega))
        report.add(segment.id, "item3", distance <= rho, distance=distance, rho=rho)
        angle = k.angle_with(parent.k)
        report.add(segment.id, "item4", angle >= MIN_ANGLE, angle=angle, bound=MIN_ANGLE)

        crossing = line_intersection(k, parent.k)
        in_cell = crossing is not None and parent.contains(crossing)
        if in_cell and segment.generation >= 2:
            grid = tree.grid_of(parent)
            index, _ = grid.nearest(crossing)
            in_cell = bool(np.allclose(grid.centers[index], parent.anchor))
        report.add(segment.id, "item5", in_cell, crossing=None if crossing is None else crossing.tolist())

        if segment.generation >= 2:
            reach = float(np.max(np.linalg.norm(segment.endpoints - parent.anchor, axis=1)))
            report.add(segment.id, "item6", reach <= parent.rho, reach=reach, rho=parent.rho)

        ratio = nearby_line_ratio(k, omega, 3 * rho)
        c1 = max(0.0, math.log(ratio) / (tau * math.log(R)))
        c1_values.append(c1)
        report.add(segment.id, "item7", ratio <= eta**-2 * R ** (2 * tau), ratio=ratio, c1=c1)

        if crossing is not None:
            multiplicity = _lines_through(crossing, lines)
            c2 = math.log(multiplicity) / (tau * math.log(1 / rho))
            c2_values.append(c2)
            report.add(segment.id, "item8", multiplicity <= 1 / rho, multiplicity=multiplicity, c2=c2)

    report.constants = {
        "c1": max(c1_values, default=0.0),
        "c2": max(c2_values, default=0.0),
    }
    report.connected = tree.is_connected() if not tree.is_empty() else True
    for a, b, _ in tree.intersections():
        gap = abs(tree.graph.nodes[a]["generation"] - tree.graph.nodes[b]["generation"])
        if gap > 2:
            report.adjacency_violations.append([a, b])
    report.isolation_violations = isolation_violations(tree)
    logger.info("tree verification: %s", {item: value["failures"] for item, value in report.summary.items()})
    return report


def isolation_violations(tree):
    """
    Crossings ω' with a line of generation <= max(pair) that passes within
    ρ of ω' without containing it.
    """
    lines = {}
    for segment in tree.segments():
        lines.setdefault(segment.generation, set()).add(segment.k.k)
    lines = {generation: np.array(sorted(vectors), dtype=float) for generation, vectors in lines.items()}
    violations = []
    for a, b, point in tree.intersections():
        first, second = tree.graph.nodes[a]["segment"], tree.graph.nodes[b]["segment"]
        generation = max(first.generation, second.generation)
        rho = tree.ladder.rho(generation)
        scale = THROUGH_TOL * max(1.0, float(np.max(np.abs(point))))
        vectors = np.concatenate([lines[g] for g in range(generation + 1) if g in lines])
        distances = np.abs(vectors[:, :2] @ point + vectors[:, 2]) / np.linalg.norm(vectors[:, :2], axis=1)
        for index in np.flatnonzero((distances > scale) & (distances < rho)):
            violations.append({"pair": [a, b], "k": vectors[index].astype(int).tolist(), "distance": float(distances[index])})
    return violations


@dataclass(frozen=True)
class AccumulationProfile:
    anchor: np.ndarray
    chain: tuple
    distances: tuple
    decreasing: bool

    def as_dict(self):
        return {
            "anchor": self.anchor.tolist(),
            "chain": list(self.chain),
            "distances": list(self.distances),
            "decreasing": self.decreasing,
        }


def accumulation_profile(tree):
    """
    Distance from the anchor ω* of the deepest segment to each segment of its
    ancestry, generation 0 first.
    """
    deepest = [segment for segment in tree.segments() if segment.anchor is not None]
    if not deepest:
        return AccumulationProfile(anchor=np.zeros(2), chain=(), distances=(), decreasing=True)
    target = max(deepest, key=lambda segment: segment.generation)
    chain = [target]
    while chain[-1].parent is not None:
        chain.append(tree.segment(chain[-1].parent))
    chain.reverse()
    distances = tuple(float(segment.distance_to(target.anchor)) for segment in chain)
    decreasing = all(later < earlier for earlier, later in zip(distances, distances[1:]))
    return AccumulationProfile(
        anchor=target.anchor,
        chain=tuple(segment.id for segment in chain),
        distances=distances,
        decreasing=decreasing,
    )
