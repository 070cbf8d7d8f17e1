"""
Shortest closed geodesics of the Jacobi–Finsler metric and their energy families.

Curves are graphs over the class direction, x_i = (i/M) 2πh + u_i n̂, and ℓ_E
is minimized over the normal offsets u by L-BFGS.  Each minimizer is the
configuration trace of a periodic orbit on the energy level; its period is
Σ μ over the segments and equals dℓ_E/dE.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize
from scipy.stats import qmc

from diffusion_core.errors.exceptions import MetricError, OptimizationError
from diffusion_core.maupertuis.curves import ClosedCurve, normal_vector, offset_distance
from diffusion_core.maupertuis.finsler import FinslerMetric
from diffusion_core.maupertuis.flows import floquet_multipliers, is_hyperbolic
from diffusion_core.maupertuis.two_dof import TWO_PI

logger = logging.getLogger(__name__)

NODES = 128
RESTARTS = 8
PERTURBATION = 0.3
DISTINCT_OFFSET = 0.05
UNIQUE_TOL = 1e-7
SLOPE_FLOOR = 1e-6
GRADIENT_TOL = 1e-6
STORM_FACTOR = 4
LBFGS_OPTIONS = {"maxiter": 2000, "ftol": 1e-15, "gtol": 1e-10, "maxcor": 20}


@dataclass(frozen=True, eq=False)
class Geodesic:
    """A closed geodesic with the data of its periodic orbit."""

    curve: ClosedCurve
    energy: float
    length: float
    period: float
    state: np.ndarray
    channel: np.ndarray

    @property
    def offset(self):
        return self.curve.offset

    @property
    def rotation_scale(self):
        return 1.0 / self.period

    def as_dict(self):
        return {
            "energy": self.energy,
            "length": self.length,
            "period": self.period,
            "rotation_scale": self.rotation_scale,
            "offset": self.offset,
            "state": self.state.tolist(),
            "channel": self.channel.tolist(),
        }


def _geodesic(metric, curve):
    midpoints, chords = curve.segments()
    point = metric.support(midpoints, chords)
    period = float(np.sum(point.mu))
    channel = np.sum(point.J * point.mu[:, None], axis=0) / period
    state = np.concatenate([midpoints[0], point.J[0]])
    return Geodesic(curve, metric.energy, float(np.sum(point.delta)), period, state, channel)


def _descend(metric, h, offsets):
    """Local minimization from ``offsets``; None when the line search fails."""
    normal = normal_vector(h)

    def objective(u):
        length, grad = metric.length_and_gradient(ClosedCurve.graph(h, u))
        return length, grad @ normal

    try:
        result = minimize(objective, offsets, jac=True, method="L-BFGS-B", options=LBFGS_OPTIONS)
    except MetricError as error:
        logger.debug("descent left the admissible region: %s", error.message)
        return None
    if not result.success and np.max(np.abs(result.jac)) > GRADIENT_TOL:
        logger.debug("descent failed: %s (|∇|=%.2e)", result.message, np.max(np.abs(result.jac)))
        return None
    return ClosedCurve.graph(h, result.x)


def _initial_offsets(h, restarts, seed, nodes):
    """Low-discrepancy offsets and one-harmonic perturbations."""
    period = TWO_PI / float(np.linalg.norm(h))
    samples = qmc.Halton(d=3, scramble=True, seed=seed).random(restarts)
    s = np.arange(nodes) / nodes
    return [
        period * q[0] + PERTURBATION * (q[1] - 0.5) * np.sin(TWO_PI * (s + q[2]))
        for q in samples
    ]


def _check_class(h):
    h = tuple(int(v) for v in h)
    if len(h) != 2 or h == (0, 0):
        raise ValueError(f"homology class must be a non-zero integer pair, got {h}")
    return h


@dataclass(frozen=True, eq=False)
class GeodesicResult:
    """
    Usage:
        result = shortest_geodesic(H, E, (1, 0))
        result.length, result.period, result.unique
        result.minima        # distinct local minimizers, shortest first
    """

    h: tuple
    energy: float
    minima: tuple
    unique: bool
    restarts: int
    failures: int

    @property
    def best(self):
        return self.minima[0]

    @property
    def curve(self):
        return self.best.curve

    @property
    def length(self):
        return self.best.length

    @property
    def period(self):
        return self.best.period

    def as_dict(self):
        return {
            "h": list(self.h),
            "energy": self.energy,
            "unique": self.unique,
            "restarts": self.restarts,
            "failures": self.failures,
            "minima": [g.as_dict() for g in self.minima],
        }


def _distinct(geodesics, h):
    kept = []
    for geodesic in sorted(geodesics, key=lambda g: g.length):
        if all(offset_distance(geodesic.offset, other.offset, h) > DISTINCT_OFFSET for other in kept):
            kept.append(geodesic)
    return kept


def shortest_geodesic(H, E, h, restarts=RESTARTS, seed=0, nodes=NODES, warm=(), tol=UNIQUE_TOL):
    """
    Minimize ℓ_E over closed curves of class h from low-discrepancy restarts.

    :param warm: curves of the same class and node count used as extra starts
    :param tol: the best is unique when the next distinct minimizer is longer by more
    :raises OptimizationError: every start failed
    """
    h = _check_class(h)
    metric = FinslerMetric(H, E)
    starts = [curve.normal_offsets() for curve in warm] + _initial_offsets(h, restarts, seed, nodes)
    found, failures = [], 0
    for offsets in starts:
        curve = _descend(metric, h, offsets)
        if curve is None:
            failures += 1
            continue
        found.append(_geodesic(metric, curve))
    if not found:
        raise OptimizationError(
            "every restart failed the line search",
            witness={"h": list(h), "energy": E, "restarts": len(starts)},
        )
    minima = _distinct(found, h)
    unique = len(minima) == 1 or minima[1].length - minima[0].length > tol * max(1.0, minima[0].length)
    logger.info(
        "shortest geodesic of class %s at E=%.8g: ℓ=%.10g, T=%.6g, %d distinct minima (%s)",
        h, E, minima[0].length, minima[0].period, len(minima), "unique" if unique else "not unique",
    )
    return GeodesicResult(h, float(E), tuple(minima), bool(unique), len(starts), failures)


@dataclass(frozen=True)
class Bifurcation:
    energy: float
    offsets: tuple
    length: float
    slopes: tuple
    channel_jump: float

    @property
    def slope_gap(self):
        return abs(self.slopes[0] - self.slopes[1])

    def as_dict(self):
        return {
            "energy": self.energy,
            "offsets": list(self.offsets),
            "length": self.length,
            "slopes": list(self.slopes),
            "slope_gap": self.slope_gap,
            "channel_jump": self.channel_jump,
        }


@dataclass(eq=False)
class _Branch:
    offset: float
    records: dict = field(default_factory=dict)
    lost: bool = False


@dataclass(frozen=True, eq=False)
class GeodesicFamily:
    """
    Usage:
        family = energy_scan(H, (0, 1), np.linspace(2.05, 2.85, 5))
        family.lengths, family.periods, family.channel
        family.bifurcations     # energies where two minimizers exchange
    """

    h: tuple
    energies: np.ndarray
    geodesics: tuple
    multipliers: np.ndarray
    bifurcations: tuple
    branches: int

    @property
    def lengths(self):
        return np.array([g.length for g in self.geodesics])

    @property
    def periods(self):
        return np.array([g.period for g in self.geodesics])

    @property
    def rotation_scale(self):
        return 1.0 / self.periods

    @property
    def channel(self):
        return np.array([g.channel for g in self.geodesics])

    @property
    def hyperbolic(self):
        return np.array([is_hyperbolic(m) for m in self.multipliers])

    def rows(self):
        return [
            {
                "energy": float(E),
                "length": g.length,
                "period": g.period,
                "rotation_scale": g.rotation_scale,
                "offset": g.offset,
                "channel_1": float(g.channel[0]),
                "channel_2": float(g.channel[1]),
                "hyperbolic": bool(hyperbolic),
            }
            for E, g, hyperbolic in zip(self.energies, self.geodesics, self.hyperbolic)
        ]

    def as_dict(self):
        return {
            "h": list(self.h),
            "branches": self.branches,
            "records": self.rows(),
            "multipliers": [[[m.real, m.imag] for m in row] for row in self.multipliers],
            "bifurcations": [b.as_dict() for b in self.bifurcations],
        }


def _continue(metric, h, branch):
    previous = branch.records[max(branch.records)]
    curve = _descend(metric, h, previous.curve.normal_offsets())
    if curve is None or offset_distance(curve.offset, branch.offset, h) > DISTINCT_OFFSET:
        return None
    return _geodesic(metric, curve)


def _match(branches, geodesic, h):
    for branch in branches:
        if not branch.lost and offset_distance(geodesic.offset, branch.offset, h) <= DISTINCT_OFFSET:
            return branch
    return None


def _best(branches, index, previous, tol):
    candidates = [i for i, b in enumerate(branches) if index in b.records]
    shortest = min(branches[i].records[index].length for i in candidates)
    tied = [i for i in candidates if branches[i].records[index].length <= shortest + tol * max(1.0, shortest)]
    return previous if previous in tied else min(tied, key=lambda i: branches[i].records[index].length)


def _locate(H, h, first, second, index, lower, upper, tol, floor):
    def local(branch, E):
        geodesic = _continue(FinslerMetric(H, E), h, _Branch(branch.records[index].offset, {index: branch.records[index]}))
        if geodesic is None:
            raise OptimizationError("branch lost while locating a bifurcation", witness={"energy": E})
        return geodesic

    def difference(E):
        return local(first, E).length - local(second, E).length

    at_lower, at_upper = difference(lower), difference(upper)
    if max(abs(at_lower), abs(at_upper)) <= tol * max(1.0, first.records[index].length) or at_lower * at_upper > 0:
        logger.debug("no sign change of the length difference on [%.8g, %.8g]", lower, upper)
        return None
    energy = brentq(difference, lower, upper, xtol=1e-12 * max(1.0, abs(lower)))
    a, b = local(first, energy), local(second, energy)
    bifurcation = Bifurcation(
        float(energy), (a.offset, b.offset), a.length, (a.period, b.period), float(np.linalg.norm(a.channel - b.channel))
    )
    if bifurcation.slope_gap <= floor:
        logger.warning("tie at E=%.10g has slope gap %.2e below the detection floor", energy, bifurcation.slope_gap)
        return None
    logger.info("bifurcation at E=%.10g between offsets %.4f and %.4f", energy, a.offset, b.offset)
    return bifurcation


def energy_scan(H, h, energies, restarts=4, seed=0, nodes=NODES, tol=UNIQUE_TOL, floor=SLOPE_FLOOR, multipliers=True):
    """
    Continue every minimizing branch of class h along increasing energies.

    Each node warm-starts the known branches and adds fresh restarts; a lost
    branch triggers a larger batch of restarts.  Where the shortest branch
    changes, the crossing energy is located by root finding on the length
    difference of the two warm-started branches.

    :raises ValueError: energies are not increasing
    """
    h = _check_class(h)
    energies = np.asarray(energies, dtype=float)
    if len(energies) < 1 or np.any(np.diff(energies) <= 0):
        raise ValueError("energies must be increasing")
    branches, best = [], []
    for index, E in enumerate(energies):
        metric = FinslerMetric(H, E)
        storm = False
        for branch in branches:
            if branch.lost:
                continue
            geodesic = _continue(metric, h, branch)
            if geodesic is None:
                logger.warning("continuation lost the branch at offset %.4f at E=%.8g", branch.offset, E)
                branch.lost = storm = True
                continue
            branch.records[index] = geodesic
            branch.offset = geodesic.offset
        count = restarts * (STORM_FACTOR if storm else 1)
        for geodesic in shortest_geodesic(H, E, h, count, seed + index, nodes, tol=tol).minima:
            branch = _match(branches, geodesic, h)
            if branch is None:
                branches.append(_Branch(geodesic.offset, {index: geodesic}))
            elif index not in branch.records or geodesic.length < branch.records[index].length:
                branch.records[index] = geodesic
        best.append(_best(branches, index, best[-1] if best else None, tol))

    bifurcations = []
    for index in range(len(energies) - 1):
        a, b = best[index], best[index + 1]
        if a == b:
            continue
        first, second = branches[a], branches[b]
        if not all(i in branch.records for branch in (first, second) for i in (index, index + 1)):
            logger.warning("branch gap between E=%.8g and E=%.8g", energies[index], energies[index + 1])
            continue
        try:
            found = _locate(H, h, first, second, index, energies[index], energies[index + 1], tol, floor)
        except OptimizationError as error:
            logger.warning("bifurcation between E=%.8g and E=%.8g not located: %s", energies[index], energies[index + 1], error.message)
            continue
        if found is not None:
            bifurcations.append(found)

    geodesics = tuple(branches[b].records[i] for i, b in enumerate(best))
    if multipliers:
        values = np.array([floquet_multipliers(H, g.state, g.period) for g in geodesics])
    else:
        values = np.full((len(geodesics), 4), np.nan, dtype=complex)
    return GeodesicFamily(h, energies, geodesics, values, tuple(bifurcations), len(branches))
