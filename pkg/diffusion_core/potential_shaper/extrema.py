"""
Global extrema of an averaged potential along J^f and their nondegeneracy.

Everything is written for maxima; minima are the maxima of -Z, so an
``orientation`` flag flips the sign once at the entry points.
"""
import logging
from collections import Counter
from dataclasses import dataclass

import numpy as np

from diffusion_core.potential_shaper.averaged import series

logger = logging.getLogger(__name__)

MIN_GRID = 64
NEWTON_ITERATIONS = 60
BISECTION_ITERATIONS = 100
BISECTION_TOL = 1e-13
MERGE_TOL = 1e-7
TIE_TOL = 1e-12
GAP_EXPONENT = 1.75
ORIENTATIONS = {"max": 1.0, "min": -1.0}


def orientation_sign(orientation):
    try:
        return ORIENTATIONS[orientation]
    except KeyError:
        raise ValueError(f"orientation must be one of {sorted(ORIENTATIONS)}, got {orientation!r}") from None


def circular_distance(a, b, period):
    d = np.mod(np.asarray(a) - np.asarray(b), period)
    return np.minimum(d, period - d)


def newton_refine(coefficients, phi, w, sign, tol, spacing, iterations=NEWTON_ITERATIONS):
    """
    Newton on (sign Z)' = 0 toward maxima of sign·Z, one start per row.

    Steps are capped at one grid spacing; where the curvature has the wrong
    sign the iterate climbs by half a spacing instead.

    :return: (positions, converged mask)
    """
    coefficients = np.atleast_2d(coefficients)
    phi = np.array(phi, dtype=float)
    for iteration in range(iterations + 1):
        d1 = sign * series(coefficients, phi, w, 1)
        converged = np.abs(d1) <= tol
        if np.all(converged) or iteration == iterations:
            break
        d2 = sign * series(coefficients, phi, w, 2)
        concave = d2 < 0
        step = np.where(concave, -d1 / np.where(concave, d2, -1.0), 0.5 * spacing * np.sign(d1))
        phi = np.where(converged, phi, phi + np.clip(step, -spacing, spacing))
    return phi, converged


def local_maxima(coefficients, w, period, sign, grid, tol):
    """
    Local maxima of sign·Z for every coefficient row.

    :return: per row a tuple (positions, oriented values, converged), sorted by
        decreasing value
    """
    coefficients = np.atleast_2d(coefficients)
    spacing = period / grid
    phi_grid = np.arange(grid) * spacing
    values = sign * series(coefficients[:, None, :], phi_grid[None, :], w)
    peaks = (values > np.roll(values, 1, axis=1)) & (values >= np.roll(values, -1, axis=1))
    peaks[np.arange(len(values)), np.argmax(values, axis=1)] = True

    rows, columns = np.nonzero(peaks)
    positions, converged = newton_refine(coefficients[rows], phi_grid[columns], w, sign, tol, spacing)
    positions = np.mod(positions, period)
    refined = sign * series(coefficients[rows], positions, w)

    found = []
    for row in range(len(coefficients)):
        mine = np.flatnonzero(rows == row)
        order = mine[np.argsort(-refined[mine], kind="stable")]
        kept = []
        for index in order:
            if all(circular_distance(positions[index], positions[other], period) > MERGE_TOL * period for other in kept):
                kept.append(index)
        found.append((positions[kept], refined[kept], converged[kept]))
    return found


@dataclass(frozen=True)
class Bifurcation:
    """Two global extrema of equal value at J^f."""

    jf: float
    positions: tuple
    value: float
    slope_gap: float
    third_gap: float
    nodes: tuple

    def as_dict(self):
        return {
            "jf": self.jf,
            "positions": list(self.positions),
            "value": self.value,
            "slope_gap": self.slope_gap,
            "third_gap": None if np.isinf(self.third_gap) else self.third_gap,
            "nodes": list(self.nodes),
        }


@dataclass(frozen=True, eq=False)
class ExtremumBranch:
    """
    The branch ψ*(J^f) of global extrema at the nodes of ``potential``.

    ``extrema`` holds, per node, the local extrema as rows (position, oriented
    value) sorted by decreasing oriented value.
    """

    potential: object
    orientation: str
    positions: np.ndarray
    values: np.ndarray
    curvature: np.ndarray
    third: np.ndarray
    extrema: tuple
    flagged: tuple
    bifurcations: tuple
    grid: int
    newton_tol: float

    @property
    def nodes(self):
        return self.potential.nodes

    @property
    def sign(self):
        return ORIENTATIONS[self.orientation]

    def intervals(self):
        """J^f intervals between consecutive bifurcations."""
        cuts = [self.nodes[0]] + [b.jf for b in self.bifurcations] + [self.nodes[-1]]
        return [(float(lo), float(hi)) for lo, hi in zip(cuts[:-1], cuts[1:])]

    def rows(self):
        return [
            {"jf": float(j), "position": float(p), "value": float(v), "curvature": float(c), "flagged": i in self.flagged}
            for i, (j, p, v, c) in enumerate(zip(self.nodes, self.positions, self.values, self.curvature))
        ]

    def as_dict(self):
        return {
            "orientation": self.orientation,
            "grid": self.grid,
            "nodes": len(self.nodes),
            "flagged": list(self.flagged),
            "intervals": [list(interval) for interval in self.intervals()],
            "bifurcations": [b.as_dict() for b in self.bifurcations],
        }


def _refine_crossing(Z, sign, lo, hi, old, new, tol):
    """Bisection on the value difference of two continued maxima between nodes lo < hi."""
    spacing = Z.period / MIN_GRID
    for _ in range(BISECTION_ITERATIONS):
        if hi - lo <= BISECTION_TOL * max(1.0, abs(lo) + abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        row = Z.coefficients_at(mid)[None]
        (old_mid,), _ = newton_refine(row, [old], Z.w, sign, tol, spacing)
        (new_mid,), _ = newton_refine(row, [new], Z.w, sign, tol, spacing)
        gap = sign * (series(row, old_mid, Z.w) - series(row, new_mid, Z.w))[0]
        if gap > 0:
            lo = mid
        else:
            hi = mid
        old, new = old_mid, new_mid
    return 0.5 * (lo + hi), float(np.mod(old, Z.period)), float(np.mod(new, Z.period))


def _bifurcation(Z, sign, jf, old, new, nodes, grid, tol):
    row = Z.coefficients_at(jf)[None]
    slopes = Z.derivative(np.array([old, new]), jf, jf_order=1)
    _, values, _ = local_maxima(row, Z.w, Z.period, sign, grid, tol)[0]
    third_gap = float(values[0] - values[2]) if len(values) > 2 else float("inf")
    return Bifurcation(
        jf=float(jf),
        positions=(old, new),
        value=float(series(row, old, Z.w)[0]),
        slope_gap=float(abs(slopes[0] - slopes[1])),
        third_gap=third_gap,
        nodes=nodes,
    )


def track_extrema(Z, grid=MIN_GRID, newton_tol=1e-12, orientation="max"):
    """
    Dense scan in ψ^s per J^f node, Newton refinement and continuation of the
    global extremum.

    Between adjacent nodes the branch is continued to the nearest local
    extremum.  When another extremum overtakes it by more than a rounding
    tie, the crossing is refined by bisection and recorded as a bifurcation.

    :raises ValueError: grid below 64 or unknown orientation
    """
    if grid < MIN_GRID:
        raise ValueError(f"grid must be at least {MIN_GRID}, got {grid}")
    sign = orientation_sign(orientation)
    tol = newton_tol * max(1.0, Z.derivative_bound(1))
    tie = TIE_TOL * max(1.0, Z.derivative_bound(0))
    found = local_maxima(Z.coefficients, Z.w, Z.period, sign, grid, tol)

    n = len(Z.nodes)
    chosen = np.zeros(n, dtype=int)
    extrema, bifurcations = [], []
    for j in range(n):
        positions, values, _ = found[j]
        if j:
            previous = found[j - 1][0][chosen[j - 1]]
            follow = int(np.argmin(circular_distance(positions, previous, Z.period)))
            if values[follow] >= values[0] - tie:
                chosen[j] = follow
            else:
                jf, old, new = _refine_crossing(Z, sign, Z.nodes[j - 1], Z.nodes[j], previous, positions[0], tol)
                bifurcations.append(_bifurcation(Z, sign, jf, old, new, (j - 1, j), grid, tol))
        extrema.append(np.column_stack([positions, values]))

    branch = np.array([found[j][0][chosen[j]] for j in range(n)])
    converged = np.array([found[j][2][chosen[j]] for j in range(n)])
    flagged = tuple(int(j) for j in np.flatnonzero(~converged))
    if flagged:
        logger.warning("Newton did not converge at %d of %d J^f nodes: %s", len(flagged), n, list(flagged))
        if converged.any():
            branch[~converged] = np.interp(Z.nodes[~converged], Z.nodes[converged], branch[converged])

    coefficients = Z.coefficients
    return ExtremumBranch(
        potential=Z,
        orientation=orientation,
        positions=branch,
        values=series(coefficients, branch, Z.w),
        curvature=series(coefficients, branch, Z.w, 2),
        third=series(coefficients, branch, Z.w, 3),
        extrema=tuple(extrema),
        flagged=flagged,
        bifurcations=tuple(bifurcations),
        grid=grid,
        newton_tol=newton_tol,
    )


@dataclass(frozen=True)
class NondegeneracyCertificate:
    passed: bool
    lambda_star: float
    gap_tolerance: float
    value_tolerance: float
    min_curvature: float
    min_slope_gap: float
    bifurcations: tuple
    failures: tuple
    c4: float

    def clauses(self):
        return Counter(failure["clause"] for failure in self.failures)

    def as_dict(self):
        return {
            "passed": self.passed,
            "lambda_star": self.lambda_star,
            "gap_tolerance": self.gap_tolerance,
            "value_tolerance": self.value_tolerance,
            "min_curvature": self.min_curvature,
            "min_slope_gap": None if np.isinf(self.min_slope_gap) else self.min_slope_gap,
            "bifurcations": list(self.bifurcations),
            "clauses": dict(self.clauses()),
            "failures": list(self.failures),
            "c4": self.c4,
        }


def third_derivative_bound(c4, lam):
    """|g'''| at a local minimum with 0 <= g'' <= λ and |g|_C4 <= C."""
    return 3.0 * (c4 + 2.0) * np.sqrt(lam)


def nondegeneracy_check(branch, lambda_star, value_tolerance=None, c3=None, c4=None):
    """
    Certificate for a tracked branch; never raises.

    Clauses failing the certificate: ``curvature`` (|Z''| < λ* or wrong sign),
    ``slope_gap`` (gap below λ*^(7/4) at a bifurcation), ``third_extremum``
    (a third extremum within λ*^(7/4) of the global value), ``coexisting``
    (two global extrema away from any detected bifurcation) and
    ``third_derivative`` (the bound 3(C+2)√λ* broken where |Z''| <= λ*).

    :param value_tolerance: equality tolerance for coexisting extrema, λ*²/C₃ by default
    """
    Z = branch.potential
    sign = branch.sign
    c3 = c3 if c3 is not None else max(1.0, Z.derivative_bound(3))
    c4 = c4 if c4 is not None else max(1.0, Z.derivative_bound(4))
    value_tolerance = value_tolerance if value_tolerance is not None else lambda_star**2 / c3
    gap_tolerance = lambda_star**GAP_EXPONENT
    failures = []

    definite = -sign * branch.curvature
    for j in np.flatnonzero(definite < lambda_star):
        failures.append({"clause": "curvature", "jf": float(Z.nodes[j]), "curvature": float(branch.curvature[j])})

    near = set()
    for bifurcation in branch.bifurcations:
        near.update(bifurcation.nodes)
        if bifurcation.slope_gap < gap_tolerance:
            failures.append({"clause": "slope_gap", "jf": bifurcation.jf, "slope_gap": bifurcation.slope_gap})
        if bifurcation.third_gap <= gap_tolerance:
            failures.append({"clause": "third_extremum", "jf": bifurcation.jf, "gap": bifurcation.third_gap})

    for j, rows in enumerate(branch.extrema):
        gaps = rows[0, 1] - rows[:, 1]
        if np.count_nonzero(gaps <= gap_tolerance) >= 3:
            failures.append({"clause": "third_extremum", "jf": float(Z.nodes[j]), "gap": float(gaps[2])})
        elif j not in near and np.count_nonzero(gaps <= value_tolerance) >= 2:
            failures.append({"clause": "coexisting", "jf": float(Z.nodes[j]), "gap": float(gaps[1])})

    bound = third_derivative_bound(c4, lambda_star)
    for j in np.flatnonzero(np.abs(branch.curvature) <= lambda_star):
        if abs(branch.third[j]) > bound:
            failures.append({"clause": "third_derivative", "jf": float(Z.nodes[j]), "third": float(branch.third[j])})

    gaps = [b.slope_gap for b in branch.bifurcations]
    certificate = NondegeneracyCertificate(
        passed=not failures,
        lambda_star=lambda_star,
        gap_tolerance=gap_tolerance,
        value_tolerance=value_tolerance,
        min_curvature=float(np.min(definite)),
        min_slope_gap=float(min(gaps)) if gaps else float("inf"),
        bifurcations=tuple(b.jf for b in branch.bifurcations),
        failures=tuple(failures),
        c4=c4,
    )
    if failures:
        logger.debug("nondegeneracy failed: %s", dict(certificate.clauses()))
    return certificate
