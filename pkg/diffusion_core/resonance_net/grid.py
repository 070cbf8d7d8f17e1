import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import qmc

from diffusion_core.diophantine.approximation import is_diophantine
from diffusion_core.errors.exceptions import CoverageError

logger = logging.getLogger(__name__)

SEPARATION = 2.0
COVERING = 3.0
BATCH_SIZE = 512
SAMPLE_BUDGET = 2**16
UNCOVERED_BATCHES = 4


def halton_stream(domain, seed, batch_size=BATCH_SIZE):
    """Scrambled Halton points in ``domain``, one batch at a time, reproducible from ``seed``."""
    sampler = qmc.Halton(d=2, scramble=True, seed=np.random.Generator(np.random.Philox(seed)))
    lower = [lo for lo, _ in domain]
    upper = [hi for _, hi in domain]
    while True:
        yield qmc.scale(sampler.random(batch_size), lower, upper)


def certified(samples, params):
    """Samples passing the finite-cutoff Diophantine test."""
    if params is None:
        return samples
    mask = np.array([bool(is_diophantine(omega, params)) for omega in samples], dtype=bool)
    return samples[mask]


@dataclass(frozen=True, eq=False)
class VoronoiGrid:
    """
    ρ-separated centers with nearest-center lookup.

    Centers are pairwise at least 2ρ apart so the ρ-balls are disjoint; a
    complete grid covers every certified sample of its domain by 3ρ-balls.
    ``complete`` is False when the greedy selection was capped.
    """

    generation: int
    rho: float
    centers: np.ndarray
    domain: tuple
    complete: bool = True
    samples_used: int = 0
    _lookup: cKDTree = field(init=False, repr=False)

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float).reshape(-1, 2)
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "domain", tuple(tuple(float(x) for x in axis) for axis in self.domain))
        object.__setattr__(self, "_lookup", cKDTree(centers) if len(centers) else None)

    def __len__(self):
        return len(self.centers)

    def nearest(self, points):
        """Index of the Voronoi cell and distance to its center."""
        distance, index = self._lookup.query(np.asarray(points, dtype=float))
        return index, distance

    def multiplicity(self, points, factor=COVERING):
        """Number of (factor·ρ)-balls containing each point."""
        neighbours = self._lookup.query_ball_point(np.atleast_2d(points), factor * self.rho)
        return np.array([len(items) for items in neighbours], dtype=int)

    def min_separation(self):
        if len(self.centers) < 2:
            return np.inf
        distance, _ = self._lookup.query(self.centers, k=2)
        return float(np.min(distance[:, 1]))

    def uncovered(self, points, factor=COVERING):
        _, distance = self.nearest(np.atleast_2d(points))
        return np.atleast_2d(points)[distance > factor * self.rho]

    def as_dict(self):
        return {
            "generation": self.generation,
            "rho": self.rho,
            "domain": [list(axis) for axis in self.domain],
            "complete": self.complete,
            "centers": self.centers.tolist(),
        }


def _farthest_sample(stream, centers, params, rho):
    """
    The fresh sample farthest from ``centers``, drawn until one lies outside
    every 3ρ-ball or ``UNCOVERED_BATCHES`` batches are spent.
    """
    if not centers:
        return next(stream)[0], None
    lookup = cKDTree(np.asarray(centers))
    best_point, best_distance = None, -1.0
    for _ in range(UNCOVERED_BATCHES):
        batch = next(stream)
        candidates = certified(batch, params)
        if not len(candidates):
            candidates = batch
        distance, _ = lookup.query(candidates)
        index = int(np.argmax(distance))
        if distance[index] > best_distance:
            best_point, best_distance = candidates[index], float(distance[index])
        if best_distance > COVERING * rho:
            break
    return best_point, best_distance


def build_grid(domain, n, ladder, params, seed, max_centers=None, sample_budget=SAMPLE_BUDGET, rho=None):
    """
    Greedy Vitali selection over a Halton stream of certified Diophantine frequencies.

    A sample becomes a center iff it is at least 2ρ_n from every accepted
    center. Selection stops after a full batch adds no center, at which point
    every sample drawn lies within 2ρ_n of a center.

    :param max_centers: stop after this many centers (the grid is then marked incomplete)
    :param rho: overrides ``ladder.rho(n)``
    :raises CoverageError: the sample budget ran out while batches still added centers
    """
    rho = ladder.rho(n) if rho is None else rho
    centers = []
    drawn = 0
    complete = True
    stream = halton_stream(domain, seed)
    for batch in stream:
        drawn += len(batch)
        added = 0
        for omega in certified(batch, params):
            if centers and np.min(np.hypot(*(np.asarray(centers) - omega).T)) < SEPARATION * rho:
                continue
            centers.append(omega)
            added += 1
            if max_centers is not None and len(centers) >= max_centers:
                complete = False
                break
        if not complete or (added == 0 and centers):
            break
        if drawn >= sample_budget:
            point, distance = _farthest_sample(stream, centers, params, rho)
            raise CoverageError(
                f"sample budget {sample_budget} exhausted before the 3ρ-balls covered the domain",
                witness={"uncovered": point.tolist(), "distance": distance, "centers": len(centers), "rho": rho},
            )

    grid = VoronoiGrid(generation=n, rho=rho, centers=np.array(centers), domain=domain, complete=complete, samples_used=drawn)
    logger.info("generation %d grid: %d centers at rho=%.3e (%d samples)", n, len(grid), rho, drawn)
    return grid
