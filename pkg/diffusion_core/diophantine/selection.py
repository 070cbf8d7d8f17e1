import logging
import math

import numpy as np

from diffusion_core.diophantine.approximation import (
    TIE_TOL,
    best_approx_oracle,
    homogeneous_gap,
    inhomogeneous_dirichlet,
)
from diffusion_core.diophantine.params import ResonanceVector
from diffusion_core.errors.exceptions import DiffusionCoreError, SelectionError

logger = logging.getLogger(__name__)

MIN_ANGLE = math.pi / 6


def _first_generation(omega, R_next, params):
    oracle = best_approx_oracle(omega, int(math.floor(R_next)), 0.0)
    x1, x2 = oracle.x
    k0 = -int(np.rint(omega[0] * x1 + omega[1] * x2))
    vector = ResonanceVector((x1, x2, k0))
    divisor = abs(vector.small_divisor(omega))
    if divisor < params.threshold(vector.norm):
        raise SelectionError(
            "Dirichlet vector violates the Diophantine lower bound",
            witness={"k": list(vector.k), "divisor": divisor, "clause": "lower"},
        )
    certificate = {
        "method": "dirichlet",
        "divisor": divisor,
        "dirichlet_bound": vector.norm**-2.0,
        "tie_break": "lexicographic",
    }
    logger.info("first-generation resonance k=%s with |k·(ω,1)|=%.3e", vector.k, divisor)
    return ResonanceVector(vector.k, certificate=certificate)


def anchor_point(omega, R_next, k_prev):
    """
    Point of the plane T_ω = {x : x·(ω, 1) = 0} with sup norm R/2, orthogonal
    to the projection of k_prev onto T_ω.
    """
    normal = np.array([omega[0], omega[1], 1.0])
    normal /= np.linalg.norm(normal)
    direction = np.cross(normal, k_prev.as_array())
    size = np.max(np.abs(direction))
    if size == 0:
        raise SelectionError("k_prev is normal to the resonance plane", witness={"k_prev": list(k_prev.k)})
    return direction * (0.5 * R_next / size)


def _certify_ball(omega, alpha, radius):
    """Transference certificate for the ball search, or None when it does not fit."""
    X = max(1, int(radius // 2))
    A = homogeneous_gap(omega, X) * (1 - 1e-9)
    try:
        solution = inhomogeneous_dirichlet(omega, alpha, A, X)
    except DiffusionCoreError as exc:
        logger.debug("no transference certificate for the ball: %s", exc)
        return None
    return solution.certificate.as_dict()


def select_resonance_vector(omega_star, R_next, k_prev, params):
    """
    Next resonance vector of the net around ω*.

    Without ``k_prev`` the classical Dirichlet approximant with |k| <= R is
    returned. Otherwise the lattice ball of radius R/4 around the anchor is
    searched for primitive k with

    * R/4 <= |k| <= R,
    * η R^-(2+τ) <= |k·(ω*, 1)| <= 16 η⁻² R^-(2-2τ),
    * angle(k, k_prev) >= π/6,

    and the admissible k with the smallest |k·(ω*, 1)| is kept (ties
    lexicographic). The inhomogeneous transference certificate of the search
    is attached to the result when it applies.

    :raises SelectionError: no admissible vector; the witness names the
        failed clause and the best candidate
    """
    omega = np.asarray(omega_star, dtype=float)
    if k_prev is None:
        return _first_generation(omega, R_next, params)

    anchor = anchor_point(omega, R_next, k_prev)
    radius = R_next / 4
    center = np.rint(anchor[:2]).astype(np.int64)
    span = int(math.floor(radius))
    offsets = np.arange(-span, span + 1)
    grid = np.stack(np.meshgrid(center[0] + offsets, center[1] + offsets, indexing="ij"), axis=-1).reshape(-1, 2)
    k0 = -np.rint(grid @ omega).astype(np.int64)
    candidates = np.column_stack([grid, k0])
    candidates = candidates[np.max(np.abs(candidates[:, :2] - anchor[:2]), axis=1) <= radius]

    divisors = np.abs(candidates[:, :2] @ omega + candidates[:, 2])
    norms = np.max(np.abs(candidates), axis=1)
    previous = k_prev.as_array()
    cosines = np.abs(candidates @ previous) / (np.linalg.norm(candidates, axis=1) * np.linalg.norm(previous))
    angles = np.arccos(np.clip(cosines, 0.0, 1.0))
    primitive = np.gcd.reduce(np.abs(candidates), axis=1) == 1

    clauses = {
        "primitive": primitive,
        "annulus": (norms >= R_next / 4) & (norms <= R_next),
        "lower": divisors >= params.eta * R_next ** (-(2 + params.tau)),
        "angle": angles >= MIN_ANGLE - 1e-12,
    }
    admissible = np.logical_and.reduce(list(clauses.values()))
    if not np.any(admissible):
        failed = max(clauses, key=lambda name: int(np.sum(~clauses[name])))
        best = int(np.argmin(divisors))
        raise SelectionError(
            f"no admissible resonance vector in the ball of radius {radius:.3g}",
            witness={"clause": failed, "best_candidate": candidates[best].tolist(), "divisor": float(divisors[best])},
        )

    pool = candidates[admissible]
    pool_divisors = divisors[admissible]
    best = float(np.min(pool_divisors))
    ties = pool[pool_divisors <= best + TIE_TOL]
    chosen = ties[np.lexsort((ties[:, 2], ties[:, 1], ties[:, 0]))[0]]

    upper = 16 * params.eta**-2 * R_next ** (-(2 - 2 * params.tau))
    if best > upper:
        raise SelectionError(
            "best admissible vector violates the upper divisor bound",
            witness={"clause": "upper", "best_candidate": chosen.tolist(), "divisor": best, "upper": upper},
        )

    alpha = -float(center @ omega)
    certificate = {
        "method": "ball_search",
        "divisor": best,
        "lower": params.eta * R_next ** (-(2 + params.tau)),
        "upper": upper,
        "angle": float(ResonanceVector(tuple(chosen)).angle_with(k_prev)),
        "anchor": anchor.tolist(),
        "ties": int(len(ties)),
        "tie_break": "lexicographic",
        "transference": _certify_ball(omega, alpha, radius),
    }
    vector = ResonanceVector(tuple(chosen), certificate=certificate)
    logger.info("selected k=%s at R=%.4g with |k·(ω,1)|=%.3e", vector.k, R_next, best)
    return vector
