"""Closed polylines on the universal cover of the torus."""
from dataclasses import dataclass

import numpy as np

from diffusion_core.maupertuis.two_dof import TWO_PI


def normal_vector(h):
    """Unit normal n̂ = (-h2, h1)/|h| of a homology class."""
    h = np.asarray(h, dtype=float)
    return np.array([-h[1], h[0]]) / np.linalg.norm(h)


@dataclass(frozen=True, eq=False)
class ClosedCurve:
    """
    M nodes x_0 .. x_{M-1} on the lift; the last segment closes onto
    x_0 + 2πh, so the winding h is fixed by construction.

    Usage:
        curve = ClosedCurve.line((0, 1), offset=np.pi)
        midpoints, chords = curve.segments()
    """

    nodes: np.ndarray
    winding: tuple

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 2 or len(nodes) < 3:
            raise ValueError(f"a closed curve needs at least 3 nodes of shape (M, 2), got {nodes.shape}")
        winding = tuple(int(w) for w in self.winding)
        if len(winding) != 2:
            raise ValueError(f"winding must have 2 components, got {winding}")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "winding", winding)

    @classmethod
    def graph(cls, h, offsets):
        """x_i = (i/M) 2πh + u_i n̂ for normal offsets u (M,)."""
        offsets = np.asarray(offsets, dtype=float)
        s = np.arange(len(offsets)) / len(offsets)
        nodes = TWO_PI * s[:, None] * np.asarray(h, dtype=float) + offsets[:, None] * normal_vector(h)
        return cls(nodes, h)

    @classmethod
    def line(cls, h, offset=0.0, nodes=128):
        return cls.graph(h, np.full(nodes, float(offset)))

    @property
    def size(self):
        return len(self.nodes)

    @property
    def shift(self):
        return TWO_PI * np.asarray(self.winding, dtype=float)

    def segments(self):
        """Midpoints and chords (M, 2) of the M segments."""
        following = np.vstack([self.nodes[1:], self.nodes[:1] + self.shift])
        return 0.5 * (self.nodes + following), following - self.nodes

    def normal_offsets(self):
        return self.nodes @ normal_vector(self.winding)

    @property
    def offset(self):
        """Circular mean of the normal offsets, modulo the lattice period 2π/|h|."""
        norm = float(np.linalg.norm(self.winding))
        mean = np.angle(np.mean(np.exp(1j * norm * self.normal_offsets()))) / norm
        return float(np.mod(mean, TWO_PI / norm))

    def dense(self, factor=8):
        """factor points per segment, starting at each node."""
        _, chords = self.segments()
        fractions = np.arange(factor) / factor
        points = self.nodes[:, None, :] + fractions[None, :, None] * chords[:, None, :]
        return points.reshape(-1, 2)

    def rows(self):
        return [{"index": i, "psi1": float(x[0]), "psi2": float(x[1])} for i, x in enumerate(self.nodes)]

    def as_dict(self):
        return {"winding": list(self.winding), "nodes": self.nodes.tolist()}


def offset_distance(a, b, h):
    """Distance between normal offsets on the circle of length 2π/|h|."""
    period = TWO_PI / float(np.linalg.norm(h))
    d = np.mod(a - b, period)
    return float(min(d, period - d))
