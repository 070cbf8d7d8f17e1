"""
The kissing cylinder: periodic orbits around the saddle glued along the homoclinics.

For E > 0 the orbits of the two simple classes sweep two cylinders, for E < 0
the orbits shadowing γ+ then γ- sweep a third; all three close up on
γ+ ∪ γ- at the critical level.  The assembly samples every orbit and
measures how the pieces meet.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import subspace_angles

from diffusion_core.errors.exceptions import AssemblyError
from diffusion_core.maupertuis.two_dof import wrap

logger = logging.getLogger(__name__)

SAMPLES = 256
DENSIFY = 4
ENERGY_MATCH = 1e-9


def polyline_distances(points, polyline, angles=2):
    """
    Distance from each point to the closed polyline through ``polyline``.

    The first ``angles`` coordinates are compared modulo 2π.
    """
    points = np.asarray(points, dtype=float)
    a = np.asarray(polyline, dtype=float)
    chord = np.roll(a, -1, axis=0) - a
    chord[:, :angles] = wrap(chord[:, :angles])
    d = points[:, None, :] - a[None, :, :]
    d[..., :angles] = wrap(d[..., :angles])
    length = np.maximum(np.einsum("ij,ij->i", chord, chord), np.finfo(float).tiny)
    t = np.clip(np.einsum("pij,ij->pi", d, chord) / length, 0.0, 1.0)
    return np.min(np.linalg.norm(d - t[..., None] * chord[None], axis=-1), axis=1)


def hausdorff(first, second, angles=2):
    """Symmetric Hausdorff distance between two closed polylines."""
    return float(
        max(np.max(polyline_distances(first, second, angles)), np.max(polyline_distances(second, first, angles)))
    )


@dataclass(frozen=True)
class Piece:
    label: str
    energy: float
    states: np.ndarray


@dataclass(frozen=True, eq=False)
class KissingCylinder:
    """
    Usage:
        cylinder = kissing_cylinder_assemble(H, orbits)
        cylinder.junctions        # Hausdorff distance of the closest orbits to γ±
        cylinder.tangency_angle   # degrees between the two simple-class cylinders at the saddle
    """

    pieces: tuple
    junctions: dict
    adjacent: tuple
    tangency_angle: float
    center_angle: float
    overlap: float | None = None
    windows: dict = field(default_factory=dict)

    def closes(self, tol):
        return bool(max(self.junctions.values()) <= tol)

    def rows(self):
        rows = []
        for piece in self.pieces:
            for index, state in enumerate(piece.states):
                rows.append(
                    {
                        "label": piece.label,
                        "energy": piece.energy,
                        "index": index,
                        "psi1": float(state[0]),
                        "psi2": float(state[1]),
                        "J1": float(state[2]),
                        "J2": float(state[3]),
                    }
                )
        return rows

    def as_dict(self):
        return {
            "pieces": [{"label": p.label, "energy": p.energy, "samples": len(p.states)} for p in self.pieces],
            "junctions": dict(self.junctions),
            "adjacent": [list(a) for a in self.adjacent],
            "tangency_angle": self.tangency_angle,
            "center_angle": self.center_angle,
            "overlap": self.overlap,
            "windows": {k: list(v) for k, v in self.windows.items()},
        }


def _plane(frame, radius, groups):
    xi = frame.to_saddle(np.concatenate(groups))
    near = xi[np.linalg.norm(xi, axis=-1) < radius]
    if len(near) < 2:
        raise AssemblyError("too few samples inside the saddle ball", witness={"radius": radius, "samples": len(near)})
    # planes through the saddle
    return np.linalg.svd(near, full_matrices=False)[2][:2].T


def _angle(first, second):
    return math.degrees(float(np.max(subspace_angles(first, second))))


def overlap_distance(family, sampled, alpha0, densify=DENSIFY):
    """
    Largest configuration-space Hausdorff distance between geodesics of
    ``family`` and the section orbits of the same class and energy.

    :param sampled: mapping of PeriodicOrbit to its sampled states

    :raises AssemblyError: no energy is shared
    """
    distances = []
    for energy, geodesic in zip(family.energies, family.geodesics):
        relative = energy - alpha0
        for orbit, states in sampled.items():
            if tuple(orbit.winding) == tuple(family.h) and abs(orbit.energy - relative) <= ENERGY_MATCH * max(1.0, abs(energy)):
                distances.append(hausdorff(geodesic.curve.dense(densify), states[:, :2]))
    if not distances:
        raise AssemblyError("the geodesic family and the orbits share no energy", witness={"h": list(family.h)})
    return float(max(distances))


def kissing_cylinder_assemble(H, orbits, family=None, samples=SAMPLES):
    """
    Chain the plus orbits, γ+, the center orbits, γ- and the minus orbits.

    :param orbits: SaddleOrbits of a simple saddle
    :param family: optional GeodesicFamily of the plus class for the overlap check
    :raises AssemblyError: one of the three orbit families is empty; the
        witness names the energy window that is missing
    """
    plus, center, minus = (orbits.of_kind(kind) for kind in ("plus", "center", "minus"))
    positive = [o.energy for o in plus + minus]
    negative = [o.energy for o in center]
    windows = {
        "plus": (0.0, max(positive, default=0.0)),
        "center": (min(negative, default=-max(positive, default=0.0)), 0.0),
        "minus": (0.0, max(positive, default=0.0)),
    }
    for name, group in (("plus", plus), ("center", center), ("minus", minus)):
        if not group:
            raise AssemblyError(f"no {name} orbits in the window {windows[name]}", witness={"missing": name, "window": list(windows[name])})

    gamma_plus, gamma_minus = (g.states for g in orbits.sections.homoclinics)
    sampled = {orbit: orbit.sample(H, samples) for orbit in plus + center + minus}
    pieces = (
        [Piece("plus", o.energy, sampled[o]) for o in reversed(plus)]
        + [Piece("gamma_plus", 0.0, gamma_plus)]
        + [Piece("center", o.energy, sampled[o]) for o in reversed(center)]
        + [Piece("gamma_minus", 0.0, gamma_minus)]
        + [Piece("minus", o.energy, sampled[o]) for o in minus]
    )

    junctions = {
        "plus": hausdorff(sampled[plus[0]], gamma_plus),
        "minus": hausdorff(sampled[minus[0]], gamma_minus),
        # the center orbit shadows both homoclinics
        "center": float(
            max(
                np.max(np.minimum(polyline_distances(sampled[center[-1]], gamma_plus), polyline_distances(sampled[center[-1]], gamma_minus))),
                np.max(polyline_distances(np.concatenate([gamma_plus, gamma_minus]), sampled[center[-1]])),
            )
        ),
    }
    adjacent = tuple(
        (label, group[i].energy, group[i + 1].energy, hausdorff(sampled[group[i]], sampled[group[i + 1]]))
        for label, group in (("plus", plus), ("center", center), ("minus", minus))
        for i in range(len(group) - 1)
    )

    frame, radius = orbits.sections.frame, orbits.sections.radius
    plus_plane = _plane(frame, radius, [gamma_plus, sampled[plus[0]]])
    minus_plane = _plane(frame, radius, [gamma_minus, sampled[minus[0]]])
    center_plane = _plane(frame, radius, [sampled[center[-1]]])
    tangency = _angle(plus_plane, minus_plane)
    center_angle = _angle(plus_plane, center_plane)

    overlap = None
    if family is not None:
        overlap = overlap_distance(family, {o: sampled[o] for o in plus + minus}, orbits.sections.crit.alpha0)
    logger.info(
        "kissing cylinder of %d pieces: junctions %s, tangency %.3g°", len(pieces), junctions, tangency
    )
    return KissingCylinder(tuple(pieces), junctions, adjacent, tangency, center_angle, overlap, windows)
