"""
Normally hyperbolic cylinder as a graph over (ψ^f, J^f, t).

The cylinder is the set {x = X(ψ^f, J^f, t), y = Y(ψ^f, J^f, t)} in the
straightened block coordinates.  The graph transform pushes the y-graph
forward and the x-graph backward by the time-2π map, so every t-slice is
mapped to itself and is interpolated on its own.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import RectBivariateSpline

from diffusion_core.errors.exceptions import DivergenceError
from diffusion_core.hamiltonian.integrator import flow_ensemble
from diffusion_core.nhic.saddle import TWO_PI, wrap

logger = logging.getLogger(__name__)

DEFAULT_GRID = (64, 64, 16)
CENTER_ITERATIONS = 6
CENTER_TOL = 1e-10
PAD = 3
GROWTH_LIMIT = 2
RESIDUAL_POINTS = 100
RESIDUAL_TIME = 1.0
TUBE_SAMPLES = 201


class SliceSplines:
    """Bicubic splines in (ψ^f, J^f) per t-slice, periodic in ψ^f and clamped in J^f."""

    def __init__(self, values, psi, jf):
        padded_psi = np.concatenate([psi[-PAD:] - TWO_PI, psi, psi[:PAD] + TWO_PI])
        padded = np.concatenate([values[-PAD:], values, values[:PAD]], axis=0)
        ky = min(3, len(jf) - 1)
        self.bounds = (float(jf[0]), float(jf[-1]))
        self.splines = [RectBivariateSpline(padded_psi, jf, padded[..., k], kx=3, ky=ky) for k in range(values.shape[-1])]

    def __len__(self):
        return len(self.splines)

    def __call__(self, psi, jf, index):
        psi, jf = np.broadcast_arrays(np.mod(np.asarray(psi, dtype=float), TWO_PI), np.asarray(jf, dtype=float))
        values = self.splines[index].ev(psi.ravel(), np.clip(jf.ravel(), *self.bounds))
        return values.reshape(psi.shape)

    def stacked(self, psi, jf):
        """All slices at the same points: (n_t,) + shape."""
        return np.stack([self(psi, jf, index) for index in range(len(self))])


def trigonometric_eval(slices, t):
    """
    Periodic interpolation of uniform t-slices ``(n_t, m)`` at times ``t`` (m,).
    """
    count = slices.shape[0]
    spectrum = np.fft.rfft(slices, axis=0) / count
    harmonics = np.arange(spectrum.shape[0])
    weights = np.full(len(harmonics), 2.0)
    weights[0] = 1.0
    if count % 2 == 0:
        weights[-1] = 1.0
    phases = np.exp(1j * np.outer(harmonics, np.asarray(t, dtype=float)))
    return np.real(np.sum(weights[:, None] * spectrum * phases, axis=0))


@dataclass(frozen=True, eq=False)
class CylinderGraph:
    """
    Usage:
        graph = cylinder_graph(block, full, grid=(32, 16, 8))
        x, y = graph(psi_f, jf, t)
        graph.lipschitz()["psi_s_by_jf"]
    """

    block: object
    psi: np.ndarray
    jf: np.ndarray
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    iterations: int
    converged: bool
    differences: tuple
    tol: float
    residual: float = float("nan")
    _splines: tuple = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_splines", (SliceSplines(self.x, self.psi, self.jf), SliceSplines(self.y, self.psi, self.jf)))

    @property
    def contraction(self):
        d = np.asarray(self.differences)
        if len(d) < 2:
            return ()
        with np.errstate(divide="ignore", invalid="ignore"):
            return tuple(float(r) for r in d[1:] / d[:-1])

    def __call__(self, psi_f, jf, t):
        psi_f, jf, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (psi_f, jf, t)))
        shape = psi_f.shape
        flat = [v.reshape(-1) for v in (psi_f, jf, np.mod(t, TWO_PI))]
        values = [trigonometric_eval(splines.stacked(flat[0], flat[1]), flat[2]) for splines in self._splines]
        return values[0].reshape(shape), values[1].reshape(shape)

    def points(self, psi_f, jf, t):
        """Extended points of the cylinder over (ψ^f, J^f, t)."""
        x, y = self(psi_f, jf, t)
        return self.block.point(x, y, psi_f, jf, t)

    def slow_coordinates(self, psi_f, jf, t):
        """(Ψ^s, 𝒥^s) of the cylinder."""
        z = self.points(psi_f, jf, t)
        return z[..., 0], z[..., 2]

    def _grid_offsets(self):
        P, J, T = np.meshgrid(self.psi, self.jf, self.t, indexing="ij")
        z = self.block.point(self.x, self.y, P, J, T)
        center, _, _, _ = self.block.branch.frame(J)
        return wrap(z[..., 0] - center[..., 0]), z[..., 2] - center[..., 1]

    def deviation(self):
        """sup |Ψ^s - ψ*| and sup |𝒥^s - J*| on the grid."""
        d_psi, d_js = self._grid_offsets()
        return float(np.max(np.abs(d_psi))), float(np.max(np.abs(d_js)))

    def lipschitz(self):
        """Finite-difference Lipschitz constants of (Ψ^s, 𝒥^s) in ψ^f and J^f."""
        d_psi, d_js = self._grid_offsets()
        step = self.psi[1] - self.psi[0]
        result = {}
        for name, values in (("psi_s", d_psi), ("j_s", d_js)):
            by_psi = (np.roll(values, -1, axis=0) - np.roll(values, 1, axis=0)) / (2 * step)
            by_jf = np.gradient(values, self.jf, axis=1)
            result[f"{name}_by_psi_f"] = float(np.max(np.abs(by_psi)))
            result[f"{name}_by_jf"] = float(np.max(np.abs(by_jf)))
        return result

    def rows(self):
        P, J, T = np.meshgrid(self.psi, self.jf, self.t, indexing="ij")
        return [
            {"psi_f": float(p), "jf": float(j), "t": float(s), "x": float(x), "y": float(y)}
            for p, j, s, x, y in zip(P.ravel(), J.ravel(), T.ravel(), self.x.ravel(), self.y.ravel())
        ]

    def as_dict(self):
        psi_dev, js_dev = self.deviation()
        return {
            "grid": [len(self.psi), len(self.jf), len(self.t)],
            "jf_range": [float(self.jf[0]), float(self.jf[-1])],
            "iterations": self.iterations,
            "converged": self.converged,
            "differences": list(self.differences),
            "tol": self.tol,
            "residual": self.residual,
            "deviation": {"psi_s": psi_dev, "j_s": js_dev},
            "lipschitz": self.lipschitz(),
        }


def _extended_jf(branch, count):
    """Branch nodes widened by one grid cell on each side."""
    lo, hi = branch.interval
    inner = np.linspace(lo, hi, count - 2)
    cell = inner[1] - inner[0]
    return np.concatenate([[lo - cell], inner, [hi + cell]])


def _transport(block, full, splines, targets, period):
    """
    Straightened coordinates after ``period`` of the graph points whose
    images land on the target (ψ^f, J^f) grid.
    """
    psi_target, jf_target, t = targets
    base_psi, base_jf = psi_target.copy(), jf_target.copy()
    n_t = t.shape[-1]
    for _ in range(CENTER_ITERATIONS):
        x = np.stack([splines[0](base_psi[..., k], base_jf[..., k], k) for k in range(n_t)], axis=-1)
        y = np.stack([splines[1](base_psi[..., k], base_jf[..., k], k) for k in range(n_t)], axis=-1)
        z = block.point(x, y, base_psi, base_jf, t)
        q = flow_ensemble(full, z.reshape(-1, 5), period).reshape(z.shape)
        error_psi = wrap(q[..., 1] - psi_target)
        error_jf = q[..., 3] - jf_target
        if max(np.max(np.abs(error_psi)), np.max(np.abs(error_jf))) <= CENTER_TOL:
            break
        base_psi = base_psi - error_psi
        base_jf = base_jf - error_jf
    return block.coordinates(q)


def cylinder_graph(block, full=None, iterations=50, tol=1e-10, grid=DEFAULT_GRID, period=TWO_PI, residual_points=RESIDUAL_POINTS, seed=0):
    """
    Graph transform for the cylinder of an isolating block.

    Starts from the flat graph x = y = 0 and alternates the forward update of
    Y and the backward update of X until the sup difference drops to ``tol``.

    :param grid: (ψ^f points, J^f points, t slices); J^f is widened by one cell
    :raises DivergenceError: the difference grew on consecutive iterations
    """
    full = full if full is not None else block.hamiltonian
    n_psi, n_jf, n_t = grid
    if n_jf < 4 or n_psi < 4 or n_t < 1:
        raise ValueError(f"grid needs at least 4 ψ^f and 4 J^f points, got {grid}")
    psi = np.arange(n_psi) * TWO_PI / n_psi
    jf = _extended_jf(block.branch, n_jf)
    t = np.arange(n_t) * TWO_PI / n_t
    targets = np.meshgrid(psi, jf, t, indexing="ij")
    x = np.zeros(targets[0].shape)
    y = np.zeros(targets[0].shape)

    differences = []
    growth = 0
    converged = False
    for iteration in range(1, iterations + 1):
        splines = (SliceSplines(x, psi, jf), SliceSplines(y, psi, jf))
        _, y_new = _transport(block, full, splines, targets, period)
        x_new, _ = _transport(block, full, splines, targets, -period)
        difference = float(max(np.max(np.abs(x_new - x)), np.max(np.abs(y_new - y))))
        x, y = x_new, y_new
        logger.debug("graph transform iteration %d: difference %.3e", iteration, difference)
        growth = growth + 1 if differences and difference > differences[-1] else 0
        differences.append(difference)
        if difference <= tol:
            converged = True
            break
        if growth >= GROWTH_LIMIT:
            raise DivergenceError(witness={"iteration": iteration, "differences": differences})

    graph = CylinderGraph(block, psi, jf, t, x, y, iteration, converged, tuple(differences), tol)
    if not converged:
        logger.warning("graph transform stopped after %d iterations at %.3e", iteration, differences[-1])
    residual = invariance_residual(graph, full, points=residual_points, seed=seed) if residual_points else float("nan")
    graph = replace(graph, residual=residual)
    logger.info("cylinder graph after %d iterations, residual %.3e", iteration, residual)
    return graph


def _sample(seed, count, bounds, eta=None):
    rng = np.random.Generator(np.random.Philox(seed))
    psi_f = rng.uniform(0.0, TWO_PI, count)
    jf = rng.uniform(*bounds, count)
    t = rng.uniform(0.0, TWO_PI, count)
    if eta is None:
        return psi_f, jf, t
    return rng.uniform(-eta, eta, count), rng.uniform(-eta, eta, count), psi_f, jf, t


def invariance_residual(graph, full, points=RESIDUAL_POINTS, time=RESIDUAL_TIME, seed=0):
    """Sup distance to the graph of cylinder points flowed for ``time``."""
    psi_f, jf, t = _sample(seed, points, graph.block.branch.interval)
    q = flow_ensemble(full, graph.points(psi_f, jf, t), time)
    x, y = graph.block.coordinates(q)
    gx, gy = graph(q[:, 1], q[:, 3], q[:, 4])
    return float(max(np.max(np.abs(x - gx)), np.max(np.abs(y - gy))))


@dataclass(frozen=True)
class TubeReport:
    orbits: int
    stayed: int
    time: float
    max_distance: float
    bound: float

    @property
    def passed(self):
        return self.max_distance <= self.bound

    def as_dict(self):
        return {
            "orbits": self.orbits,
            "stayed": self.stayed,
            "time": self.time,
            "max_distance": self.max_distance,
            "bound": self.bound,
            "passed": self.passed,
        }


def tube_check(graph, full=None, orbits=100, time=50.0, seed=0, samples=TUBE_SAMPLES):
    """
    Orbits started in the block either leave it or stay near the cylinder.

    Orbits that stay for the whole ``time`` are compared with the graph at
    half time, where both the expanding and the contracting direction have
    had ``time/2`` to act.
    """
    full = full if full is not None else graph.block.hamiltonian
    block = graph.block
    x, y, psi_f, jf, t = _sample(seed, orbits, block.branch.interval, eta=block.eta)
    start = block.point(x, y, psi_f, jf, t)
    states = flow_ensemble(full, start, time, t_eval=np.linspace(0.0, time, samples))
    inside = block.contains(states)
    stayed = np.all(inside, axis=0)

    max_distance = 0.0
    if np.any(stayed):
        middle = states[samples // 2, stayed]
        mx, my = block.coordinates(middle)
        gx, gy = graph(middle[:, 1], middle[:, 3], middle[:, 4])
        max_distance = float(max(np.max(np.abs(mx - gx)), np.max(np.abs(my - gy))))
    alpha = float(np.min(block.alpha))
    bound = 2 * block.eta * np.exp(-alpha * time / 2) + 10 * graph.tol
    report = TubeReport(orbits, int(np.sum(stayed)), time, max_distance, float(bound))
    logger.info("%d of %d orbits stayed in the block; max distance %.3e", report.stayed, orbits, max_distance)
    return report
