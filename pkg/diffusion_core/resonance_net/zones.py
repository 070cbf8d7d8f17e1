"""
Double resonances along a segment and the core / single-zone partition.

A double resonance of Γ_{k_n} with Γ_{k'} is the point where both vanish;
it depends only on the saturated rank-two lattice of integer vectors that
are resonant there, i.e. on the primitive normal of k_n × k'.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from diffusion_core.errors.exceptions import BudgetError, PartitionError

logger = logging.getLogger(__name__)

SCAN_LIMIT = 1000
PARAMETER_TOL = 1e-12


def primitive(vector):
    vector = np.asarray(vector, dtype=np.int64)
    divisor = int(np.gcd.reduce(np.abs(vector)))
    return vector // divisor if divisor else vector


def _canonical(vector):
    vector = tuple(int(x) for x in vector)
    leading = next((x for x in vector if x), 0)
    return tuple(-x for x in vector) if leading < 0 else vector


def lattice_order(k, k_prime):
    """
    𝒩: smallest sup norm of a vector resonant at Γ_k ∩ Γ_k' that is not a multiple of k.

    :return: (order, vector) with the lexicographically smallest vector among ties
    :raises ValueError: for parallel lines, which have no double resonance point
    """
    k = np.asarray(getattr(k, "k", k), dtype=np.int64)
    k_prime = np.asarray(getattr(k_prime, "k", k_prime), dtype=np.int64)
    normal = primitive(np.cross(k, k_prime))
    if normal[2] == 0:
        raise ValueError(f"{tuple(k)} and {tuple(k_prime)} have no common resonant frequency")
    bound = int(np.max(np.abs(k_prime)))
    best = None
    for size in range(1, bound + 1):
        axis = np.arange(-size, size + 1)
        planar = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
        numerator = -(planar @ normal[:2])
        integral = numerator % normal[2] == 0
        candidates = np.column_stack([planar[integral], numerator[integral] // normal[2]])
        norms = np.max(np.abs(candidates), axis=1)
        candidates = candidates[(norms == size)]
        candidates = candidates[np.any(np.cross(candidates, k) != 0, axis=1)]
        if len(candidates):
            best = min(_canonical(c) for c in candidates)
            return size, best
    return bound, _canonical(k_prime)


@dataclass(frozen=True)
class DoubleResonance:
    """Point P_{k'} of the segment with the smallest k' resonant there."""

    point: np.ndarray
    parameter: float
    k_prime: tuple
    order: int
    strong_by_order: bool
    strong_by_cap: bool

    def as_dict(self):
        return {
            "point": np.asarray(self.point).tolist(),
            "parameter": self.parameter,
            "k_prime": list(self.k_prime),
            "order": self.order,
            "strong_by_order": self.strong_by_order,
            "strong_by_cap": self.strong_by_cap,
        }


@dataclass(frozen=True)
class ThetaStrongScan:
    segment_id: str
    K_cap: int
    points: tuple
    gap_constant: float

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def as_dict(self):
        return {
            "segment": self.segment_id,
            "K_cap": self.K_cap,
            "gap_constant": self.gap_constant,
            "points": [point.as_dict() for point in self.points],
            "strength_readings": ["order <= |k_n|^theta_eff", "|k'| <= K_cap"],
        }


def theta_strong_scan(seg, constants, K_cap):
    """
    Double resonances on ``seg`` with |k'| <= K_cap, sorted along the segment.

    K_cap stands in for R_n^θ. Each point records its lattice order and both
    readings of θ-strength. The gap constant is
    max_P dist(P, nearest other P)·K_cap²/|k_n|.

    :raises BudgetError: K_cap above ``SCAN_LIMIT``
    """
    if K_cap > SCAN_LIMIT:
        raise BudgetError(f"K_cap={K_cap} exceeds the scan limit {SCAN_LIMIT}", witness={"K_cap": K_cap})
    k = np.asarray(seg.k.k, dtype=np.int64)
    start, end = seg.endpoints
    direction = end - start
    axis = np.arange(-K_cap, K_cap + 1)
    planar = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    planar = planar[np.any(planar != 0, axis=1)]
    at_start, at_end = planar @ start, planar @ end
    low = np.ceil(-np.maximum(at_start, at_end) - PARAMETER_TOL).astype(np.int64)
    high = np.floor(-np.minimum(at_start, at_end) + PARAMETER_TOL).astype(np.int64)
    low, high = np.maximum(low, -K_cap), np.minimum(high, K_cap)

    groups = {}
    for row in np.flatnonzero(high >= low):
        speed = planar[row] @ direction
        if speed == 0:
            continue
        for k0 in range(low[row], high[row] + 1):
            k_prime = np.array([planar[row][0], planar[row][1], k0], dtype=np.int64)
            normal = np.cross(k, k_prime)
            if not np.any(normal):
                continue
            key = _canonical(primitive(normal))
            candidate = (int(np.max(np.abs(k_prime))), _canonical(k_prime))
            if key not in groups or candidate < groups[key][0]:
                parameter = float(-(planar[row] @ start + k0) / speed)
                groups[key] = (candidate, parameter)

    threshold = float(np.max(np.abs(k))) ** constants.theta_eff
    points = []
    for key, ((_, k_prime), parameter) in groups.items():
        if key[2] == 0:
            continue
        norm, k_prime = lattice_order(k, k_prime)
        parameter = min(1.0, max(0.0, parameter))
        points.append(
            DoubleResonance(
                point=seg.point(parameter),
                parameter=parameter,
                k_prime=k_prime,
                order=norm,
                strong_by_order=norm <= threshold,
                strong_by_cap=norm <= K_cap,
            )
        )
    points.sort(key=lambda item: (item.parameter, item.k_prime))

    gap_constant = 0.0
    if len(points) > 1:
        positions = np.array([item.point for item in points])
        steps = np.linalg.norm(np.diff(positions, axis=0), axis=1)
        nearest = np.minimum(np.append(steps, np.inf), np.insert(steps, 0, np.inf))
        gap_constant = float(np.max(nearest)) * K_cap**2 / float(np.max(np.abs(k)))
    logger.debug("segment %s: %d double resonances with |k'|<=%d, C=%.3g", seg.id, len(points), K_cap, gap_constant)
    return ThetaStrongScan(segment_id=seg.id, K_cap=K_cap, points=tuple(points), gap_constant=gap_constant)


@dataclass(frozen=True)
class Core:
    center: np.ndarray
    position: float
    radius: float
    k_prime: tuple

    def as_dict(self):
        return {
            "center": np.asarray(self.center).tolist(),
            "position": self.position,
            "radius": self.radius,
            "k_prime": list(self.k_prime),
        }


@dataclass(frozen=True)
class SingleZone:
    """Tube around [start, end] (arclength along the segment) between neighbouring cores."""

    start: float
    end: float
    half_width: float
    left: tuple | None = None
    right: tuple | None = None

    def as_dict(self):
        return {
            "start": self.start,
            "end": self.end,
            "half_width": self.half_width,
            "left": None if self.left is None else list(self.left),
            "right": None if self.right is None else list(self.right),
        }


@dataclass(frozen=True)
class ZonePartition:
    segment_id: str
    length: float
    cores: tuple
    zones: tuple
    mu: float
    mu_constant: float
    exponents: dict = field(default_factory=dict)
    action_centers: np.ndarray | None = None

    def as_dict(self):
        return {
            "segment": self.segment_id,
            "length": self.length,
            "cores": [core.as_dict() for core in self.cores],
            "zones": [zone.as_dict() for zone in self.zones],
            "mu": self.mu,
            "mu_constant": self.mu_constant,
            "exponents": self.exponents,
            "action_centers": None if self.action_centers is None else np.asarray(self.action_centers).tolist(),
        }


def scale_exponent(radius, rho):
    """τ recovered from ρ = R^-(3-5τ)."""
    return (3 - math.log(1 / rho) / math.log(radius)) / 5


def partition_zones(seg, scan, constants, c_core=1.0, c_tube=2.0, overlap_ratio=0.5):
    """
    Cores of radius c_core·ρ^m around the double resonances and single zones
    of half-width c_tube·ρ^(m + θ/3 + 1) between consecutive cores, with the
    effective exponents (θ_eff, m_eff) of ``constants``.

    Every single zone reaches ``overlap_ratio`` of a core radius into each
    neighbouring core. The covering radius μ is the largest distance from a
    point of the segment to the nearest double resonance and is reported with
    its constant in front of ρ^((2θ-1)(1+2τ)/(3-5τ)).

    :raises PartitionError: two cores intersect
    """
    if c_tube <= c_core:
        raise ValueError(f"c_tube={c_tube} must exceed c_core={c_core}")
    if not 0 < overlap_ratio < 1:
        raise ValueError(f"overlap_ratio must lie in (0, 1), got {overlap_ratio}")
    rho, theta, m = seg.rho, constants.theta_eff, constants.m_eff
    length = seg.length
    core_radius = c_core * rho**m
    half_width = c_tube * rho ** (m + theta / 3 + 1)

    cores = tuple(
        Core(center=item.point, position=item.parameter * length, radius=core_radius, k_prime=item.k_prime)
        for item in scan
    )
    for first, second in zip(cores, cores[1:]):
        if second.position - first.position <= first.radius + second.radius:
            raise PartitionError(
                f"cores around {first.k_prime} and {second.k_prime} overlap",
                witness={"pair": [list(first.k_prime), list(second.k_prime)], "gap": second.position - first.position},
            )

    reach = core_radius * (1 - overlap_ratio)
    zones = []
    bounds = [(0.0, None)] + [(core.position, core) for core in cores] + [(length, None)]
    for (left_position, left), (right_position, right) in zip(bounds, bounds[1:]):
        start = left_position + reach if left is not None else 0.0
        end = right_position - reach if right is not None else length
        if end > start:
            zones.append(
                SingleZone(
                    start=start,
                    end=end,
                    half_width=half_width,
                    left=None if left is None else left.k_prime,
                    right=None if right is None else right.k_prime,
                )
            )

    if cores:
        positions = [core.position for core in cores]
        gaps = [positions[0], length - positions[-1]] + [0.5 * (b - a) for a, b in zip(positions, positions[1:])]
        mu = float(max(gaps))
    else:
        mu = math.inf
    tau = scale_exponent(seg.radius, rho) if seg.radius > 1 else 0.0
    mu_exponent = (2 * theta - 1) * (1 + 2 * tau) / (3 - 5 * tau)
    exponents = {
        "theta_eff": theta,
        "m_eff": m,
        "core": m,
        "tube": m + theta / 3 + 1,
        "mu": mu_exponent,
        "tau": tau,
        "c_core": c_core,
        "c_tube": c_tube,
        "overlap_ratio": overlap_ratio,
    }
    return ZonePartition(
        segment_id=seg.id,
        length=length,
        cores=cores,
        zones=tuple(zones),
        mu=mu,
        mu_constant=mu / rho**mu_exponent if cores else math.inf,
        exponents=exponents,
    )


def partition_tree(tree, K_cap, **options):
    """Scan and partition every accepted segment of generation >= 1 into ``tree.zones``."""
    for segment in tree.segments():
        if segment.generation == 0:
            continue
        scan = theta_strong_scan(segment, tree.constants, K_cap)
        tree.zones[segment.id] = partition_zones(segment, scan, tree.constants, **options)
    return tree.zones
