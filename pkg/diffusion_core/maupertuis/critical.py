"""
Critical points of ℋ and the critical value α₀ = α_ℋ(0).

For ℋ convex in J every critical point sits at the fibre minimum J(ψ) over a
critical point of m(ψ) = min_J ℋ(ψ, J), and α₀ is the largest of their
values: the energy of the minimal critical point.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, root

from diffusion_core.errors.exceptions import MorseViolationError
from diffusion_core.maupertuis.two_dof import OMEGA, TWO_PI, wrap

logger = logging.getLogger(__name__)

SEED_GRID = 12
ROOT_TOL = 1e-13
GRADIENT_TOL = 1e-10
MERGE_TOL = 1e-6
DEGENERACY_TOL = 1e-8
VALUE_TOL = 1e-10
IMAGINARY_TOL = 1e-9
POTENTIAL_GRID = 64


@dataclass(frozen=True)
class CriticalPoint:
    psi: tuple
    J: tuple
    value: float
    eigenvalues: tuple
    hessian_singular_values: tuple

    @property
    def state(self):
        return np.array(self.psi + self.J)

    @property
    def hyperbolic(self):
        eigenvalues = np.asarray(self.eigenvalues)
        return bool(np.all(np.abs(eigenvalues.imag) <= IMAGINARY_TOL) and np.all(np.abs(eigenvalues.real) > IMAGINARY_TOL))

    def as_dict(self):
        return {
            "psi": list(self.psi),
            "J": list(self.J),
            "value": self.value,
            "eigenvalues": [[complex(e).real, complex(e).imag] for e in self.eigenvalues],
            "hyperbolic": self.hyperbolic,
        }


@dataclass(frozen=True, eq=False)
class CriticalValue:
    """
    Usage:
        crit = mane_critical_value(H)
        crit.alpha0, crit.lambdas     # α₀ and (λ1, λ2)
        crit.state                    # (ψ*, J*)
    """

    point: CriticalPoint
    points: tuple = field(default_factory=tuple)
    potential_max: float | None = None

    @property
    def alpha0(self):
        return self.point.value

    @property
    def psi(self):
        return np.array(self.point.psi)

    @property
    def J(self):
        return np.array(self.point.J)

    @property
    def state(self):
        return self.point.state

    @property
    def eigenvalues(self):
        return np.asarray(self.point.eigenvalues)

    @property
    def hyperbolic(self):
        return self.point.hyperbolic

    @property
    def lambdas(self):
        """(λ1, λ2) with λ1 >= λ2, the positive eigenvalues of a saddle."""
        if not self.hyperbolic:
            return None
        positive = np.sort(self.eigenvalues.real[self.eigenvalues.real > 0])[::-1]
        return float(positive[0]), float(positive[1])

    @property
    def gap(self):
        lambdas = self.lambdas
        return None if lambdas is None else lambdas[0] - lambdas[1]

    def as_dict(self):
        return {
            "alpha0": self.alpha0,
            "point": self.point.as_dict(),
            "lambdas": None if self.lambdas is None else list(self.lambdas),
            "gap": self.gap,
            "potential_max": self.potential_max,
            "critical_points": [p.as_dict() for p in self.points],
        }


def _ordered_eigenvalues(matrix):
    eigenvalues = np.linalg.eigvals(matrix)
    eigenvalues = np.where(np.abs(eigenvalues.imag) <= IMAGINARY_TOL, eigenvalues.real, eigenvalues)
    return tuple(complex(e) for e in eigenvalues[np.lexsort((eigenvalues.imag, eigenvalues.real))])


def _critical_point(H, x):
    hessian = H.hessian(x)
    singular = np.linalg.svd(hessian, compute_uv=False)
    if singular[-1] <= DEGENERACY_TOL * max(singular[0], 1.0):
        raise MorseViolationError(
            "degenerate critical point; add a small generic potential perturbation",
            witness={"psi": x[:2].tolist(), "J": x[2:].tolist(), "singular_values": singular.tolist()},
        )
    return CriticalPoint(
        psi=tuple(float(v) for v in wrap(x[:2])),
        J=tuple(float(v) for v in x[2:]),
        value=float(H.value(x)),
        eigenvalues=_ordered_eigenvalues(OMEGA @ hessian),
        hessian_singular_values=tuple(float(s) for s in singular),
    )


def critical_points(H, seed_grid=SEED_GRID):
    """
    Zeros of the full gradient, by Newton from a ψ grid seeded at the fibre minima.

    :raises MorseViolationError: a located critical point is degenerate
    """
    axis = np.arange(seed_grid) * TWO_PI / seed_grid
    psi = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    _, J = H.fibre_minimum(psi)
    found = []
    for seed in np.concatenate([psi, J], axis=-1):
        solution = root(H.gradient, seed, jac=H.hessian, method="hybr", tol=ROOT_TOL)
        x = solution.x
        if np.max(np.abs(H.gradient(x))) > GRADIENT_TOL:
            continue
        x = np.concatenate([wrap(x[:2]), x[2:]])
        if any(np.max(np.abs(np.concatenate([wrap(x[:2] - y[:2]), x[2:] - y[2:]]))) < MERGE_TOL for y in found):
            continue
        found.append(x)
    points = tuple(sorted((_critical_point(H, x) for x in found), key=lambda p: -p.value))
    logger.info("located %d critical points from a %dx%d seed grid", len(points), seed_grid, seed_grid)
    return points


def _potential_max(H):
    axis = np.arange(POTENTIAL_GRID) * TWO_PI / POTENTIAL_GRID
    grid = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    start = grid[np.argmax(H.potential(grid))]
    solution = minimize(lambda psi: -H.potential(psi), start, method="BFGS", options={"gtol": 1e-12})
    return float(-solution.fun)


def mane_critical_value(H, seed_grid=SEED_GRID):
    """
    α₀ and the minimal critical point with its flow-linearization eigenvalues.

    :raises MorseViolationError: a degenerate critical point, a tie at the top
        value, or (for mechanical ℋ) a top value different from max V
    """
    points = critical_points(H, seed_grid)
    if not points:
        raise MorseViolationError("no critical point found", witness={"seed_grid": seed_grid})
    top = points[0]
    if len(points) > 1 and top.value - points[1].value <= VALUE_TOL * max(1.0, abs(top.value)):
        raise MorseViolationError(
            "the minimal critical point is not unique",
            witness={"values": [top.value, points[1].value], "psi": [list(top.psi), list(points[1].psi)]},
        )
    potential_max = None
    if H.is_mechanical:
        fibre_value, _ = H.fibre_minimum(np.zeros(2))
        potential_max = _potential_max(H) + float(fibre_value - H.potential(np.zeros(2)))
        if abs(potential_max - top.value) > 1e-8 * max(1.0, abs(top.value)):
            raise MorseViolationError(
                "critical point search missed the potential maximum",
                witness={"alpha0": top.value, "potential_max": potential_max},
            )
    crit = CriticalValue(top, points, potential_max)
    if crit.hyperbolic:
        logger.info("α₀=%.10g at ψ*=%s with λ1=%.6g, λ2=%.6g", crit.alpha0, top.psi, *crit.lambdas)
    else:
        logger.warning("minimal critical point at ψ*=%s is not of saddle type", top.psi)
    return crit
