"""
Limits of shortest geodesics as the energy decreases to the critical value.

A limit curve either avoids the minimal critical point ψ*, passes through it
once, or passes through it several times and splits there into loops of two
classes h1, h2 with h = n1 h1 + n2 h2.
"""
import enum
import logging
from dataclasses import dataclass, replace

import numpy as np

from diffusion_core.maupertuis.flows import floquet_multipliers, is_hyperbolic
from diffusion_core.maupertuis.geodesics import NODES, shortest_geodesic
from diffusion_core.maupertuis.two_dof import TWO_PI, wrap

logger = logging.getLogger(__name__)

PASSAGE_TOL = 0.05
DENSIFY = 8
ENERGY_OFFSETS = (1e-1, 1e-2, 1e-3)


class LimitKind(enum.Enum):
    SIMPLE_NONCRITICAL = "simple_noncritical"
    SIMPLE_CRITICAL = "simple_critical"
    NONSIMPLE = "nonsimple"
    UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class Classification:
    kind: LimitKind
    h: tuple
    distance: float
    passages: int
    loops: tuple = ()
    counts: tuple = ()
    word: tuple = ()
    energy: float | None = None
    hyperbolic: bool | None = None

    def as_dict(self):
        return {
            "kind": self.kind.value,
            "h": list(self.h),
            "distance": self.distance,
            "passages": self.passages,
            "loops": [list(loop) for loop in self.loops],
            "counts": list(self.counts),
            "word": list(self.word),
            "energy": self.energy,
            "hyperbolic": self.hyperbolic,
        }


def _clusters(near):
    """Runs of True in a cyclic boolean array, as lists of indices."""
    if np.all(near):
        return [list(range(len(near)))]
    start = int(np.argmin(near))
    runs, current = [], []
    for i in range(start, start + len(near)):
        index = i % len(near)
        if near[index]:
            current.append(index)
        elif current:
            runs.append(current)
            current = []
    if current:
        runs.append(current)
    return runs


def minimal_rotation(word):
    """Lexicographically smallest cyclic rotation."""
    word = tuple(word)
    return min((word[i:] + word[:i] for i in range(len(word))), default=())


def _classify(points, h, psi_star, tol):
    distance = np.linalg.norm(wrap(points - psi_star), axis=-1)
    runs = _clusters(distance < tol)
    closest = float(np.min(distance))
    if not runs:
        return Classification(LimitKind.SIMPLE_NONCRITICAL, h, closest, 0)
    if len(runs) == 1:
        return Classification(LimitKind.SIMPLE_CRITICAL, h, closest, 1)

    passages = sorted(run[int(np.argmin(distance[run]))] for run in runs)
    shift = TWO_PI * np.asarray(h, dtype=float)
    following = passages[1:] + [passages[0]]
    windings = []
    for a, b in zip(passages, following):
        displacement = points[b] - points[a] + (shift if b <= a else 0.0)
        windings.append(tuple(int(w) for w in np.rint(displacement / TWO_PI)))
    loops = list(dict.fromkeys(windings))
    counts = tuple(windings.count(loop) for loop in loops)
    total = tuple(int(v) for v in np.sum([np.multiply(n, loop) for n, loop in zip(counts, loops)], axis=0))
    if total != tuple(h) or (0, 0) in loops:
        logger.warning("loop decomposition %s does not add up to %s", windings, h)
        return Classification(LimitKind.UNRESOLVED, h, closest, len(passages))
    word = minimal_rotation(loops.index(w) + 1 for w in windings)
    return Classification(LimitKind.NONSIMPLE, h, closest, len(passages), tuple(loops), counts, word)


def classify_limit_curve(curve, psi_star, tol=PASSAGE_TOL, densify=DENSIFY):
    """
    Classify a closed curve by its passages through ψ*.

    The classification is repeated at tol/2; a disagreement gives UNRESOLVED.
    """
    points = curve.dense(densify)
    psi_star = np.asarray(psi_star, dtype=float)
    result = _classify(points, curve.winding, psi_star, tol)
    halved = _classify(points, curve.winding, psi_star, 0.5 * tol)
    if (result.kind, result.passages, result.loops) != (halved.kind, halved.passages, halved.loops):
        logger.warning("classification changes under tolerance halving: %s vs %s", result.kind, halved.kind)
        return Classification(LimitKind.UNRESOLVED, curve.winding, result.distance, result.passages)
    return result


def classify_homology(H, h, crit, offsets=ENERGY_OFFSETS, scale=None, restarts=8, seed=0, nodes=NODES, tol=PASSAGE_TOL):
    """
    Follow the shortest geodesic of class h down to α₀ and classify the limit.

    :param offsets: energies above α₀ in units of ``scale``, decreasing
    :param scale: defaults to max(|α₀|, λ1²)
    """
    if scale is None:
        lambdas = crit.lambdas
        scale = max(abs(crit.alpha0), lambdas[0] ** 2 if lambdas else 0.0, np.finfo(float).tiny)
    warm, result = (), None
    for offset in sorted(offsets, reverse=True):
        E = crit.alpha0 + offset * scale
        result = shortest_geodesic(H, E, h, restarts, seed, nodes, warm=warm)
        warm = (result.curve,)
    classification = classify_limit_curve(result.curve, crit.psi, tol)
    hyperbolic = None
    if classification.kind is LimitKind.SIMPLE_NONCRITICAL:
        hyperbolic = is_hyperbolic(floquet_multipliers(H, result.best.state, result.period))
    classification = replace(classification, energy=result.energy, hyperbolic=hyperbolic)
    logger.info("class %s limits to %s at E=%.10g", tuple(h), classification.kind.value, result.energy)
    return classification
