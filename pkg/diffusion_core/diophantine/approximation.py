"""
Diophantine classification and integer approximation for two frequencies.

All searches are exhaustive over lattice boxes and resolve residual ties
(within ``TIE_TOL``) by lexicographic order of the integer vector.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from diffusion_core.diophantine.params import ResonanceVector
from diffusion_core.errors.exceptions import BudgetError, HypothesisViolationError

logger = logging.getLogger(__name__)

TIE_TOL = 1e-12
ENUMERATION_LIMIT = 10**4


def distance_to_integers(x):
    """‖x‖ elementwise; the result has the shape of ``x``."""
    x = np.asarray(x, dtype=float)
    return np.abs(x - np.rint(x))


@dataclass(frozen=True)
class DiophantineVerdict:
    passed: bool
    cutoff_K: int
    witness: ResonanceVector | None = None
    margin: float = math.inf

    def __bool__(self):
        return self.passed

    def as_dict(self):
        return {
            "verdict": self.passed,
            "cutoff_K": self.cutoff_K,
            "witness": list(self.witness.k) if self.witness is not None else None,
            "margin": self.margin,
        }


def _half_plane(K):
    """(k1, k2) != 0 with canonical sign and |k_i| <= K, lexicographically sorted."""
    k1, k2 = np.meshgrid(np.arange(0, K + 1), np.arange(-K, K + 1), indexing="ij")
    planar = np.stack([k1.ravel(), k2.ravel()], axis=-1)
    return planar[(planar[:, 0] > 0) | (planar[:, 1] > 0)]


def is_diophantine(omega, params):
    """
    Check |k·(ω, 1)| >= η|k|^-(2+τ) for every 0 < |k| <= K.

    Only the two integers k0 nearest to -(k1 ω1 + k2 ω2) can violate the
    inequality since η <= 1, so the scan is over (k1, k2) only.

    :return: DiophantineVerdict; on failure the witness is the violating k of
        smallest sup norm, ties broken lexicographically
    """
    omega = np.asarray(omega, dtype=float)
    K = params.cutoff_K
    planar = _half_plane(K)
    values = planar @ omega
    candidates = []
    for k0 in (np.floor(-values), np.ceil(-values)):
        k = np.column_stack([planar, k0.astype(np.int64)])
        candidates.append(k)
    k = np.unique(np.concatenate(candidates), axis=0)
    k = k[np.abs(k[:, 2]) <= K]
    divisors = np.abs(k[:, :2] @ omega + k[:, 2])
    norms = np.max(np.abs(k), axis=1)
    ratios = divisors / params.threshold(norms)
    margin = float(np.min(ratios)) if len(ratios) else math.inf
    violating = ratios < 1.0
    if not np.any(violating):
        logger.debug("omega=%s is (%g, %g)-Diophantine up to K=%d", omega, params.eta, params.tau, K)
        return DiophantineVerdict(passed=True, cutoff_K=K, margin=margin)

    bad, bad_norms = k[violating], norms[violating]
    order = np.lexsort((bad[:, 2], bad[:, 1], bad[:, 0], bad_norms))
    witness = ResonanceVector(tuple(bad[order[0]]), normalized=False)
    logger.debug("omega=%s fails the Diophantine condition at k=%s", omega, witness.k)
    return DiophantineVerdict(passed=False, cutoff_K=K, witness=witness, margin=margin)


@dataclass(frozen=True)
class OracleResult:
    x: tuple
    residual: float
    X: int
    alpha: float
    homogeneous: bool

    def as_dict(self):
        return {
            "x": list(self.x),
            "residual": self.residual,
            "X": self.X,
            "alpha": self.alpha,
            "homogeneous": self.homogeneous,
        }


def _slabs(X, half_lattice):
    """Yield (x1, x2 array) for 0 < |x|_∞ <= X in lexicographic order."""
    full = np.arange(-X, X + 1)
    for x1 in range(0 if half_lattice else -X, X + 1):
        if x1 == 0:
            yield x1, np.arange(1, X + 1) if half_lattice else full[full != 0]
        else:
            yield x1, full


def _box_size(X):
    X = int(math.floor(X))
    if X < 1:
        raise ValueError(f"box size must be at least 1, got {X}")
    if X > ENUMERATION_LIMIT:
        raise BudgetError(
            f"box size {X} exceeds the enumeration limit {ENUMERATION_LIMIT}",
            witness={"X": X, "limit": ENUMERATION_LIMIT},
        )
    return X


def best_approx_oracle(omega, X, alpha=0.0):
    """
    Exhaustive minimizer of ‖ω·x - α‖ over 0 < |x_i| <= X.

    For α ≡ 0 the problem is symmetric under x -> -x and only the canonical
    half-lattice is searched. The minimum is reduced first and the
    lexicographic tie-break applied in a second pass, so the answer does not
    depend on slab order.

    Usage:
        best_approx_oracle((0.5, 0.25), 4).x == (0, 4)
    """
    omega = np.asarray(omega, dtype=float)
    X = _box_size(X)
    homogeneous = bool(distance_to_integers(alpha) == 0.0)
    shift = 0.0 if homogeneous else float(alpha)

    def residuals(x1, x2):
        return distance_to_integers(omega[0] * x1 + omega[1] * x2 - shift)

    best = min(float(np.min(residuals(x1, x2))) for x1, x2 in _slabs(X, homogeneous))
    for x1, x2 in _slabs(X, homogeneous):
        values = residuals(x1, x2)
        hits = np.flatnonzero(values <= best + TIE_TOL)
        if len(hits):
            x = (int(x1), int(x2[hits[0]]))
            residual = float(values[hits[0]])
            break
    logger.debug("oracle over |x|<=%d: x=%s residual=%.3e", X, x, residual)
    return OracleResult(x=x, residual=residual, X=X, alpha=float(alpha), homogeneous=homogeneous)


def homogeneous_gap(omega, X):
    """min ‖ω·x‖ over 0 < |x_i| <= X."""
    return best_approx_oracle(omega, X, 0.0).residual


@dataclass(frozen=True)
class DirichletCertificate:
    h: float
    A: float
    X: float
    A1: float
    X1: float
    residual: float
    shell: int
    homogeneous: bool = False

    def as_dict(self):
        return {
            "h": self.h,
            "A": self.A,
            "X": self.X,
            "A1": self.A1,
            "X1": self.X1,
            "residual": self.residual,
            "shell": self.shell,
            "homogeneous": self.homogeneous,
        }


@dataclass(frozen=True)
class DirichletSolution:
    x: tuple
    certificate: DirichletCertificate

    @property
    def residual(self):
        return self.certificate.residual

    def as_dict(self):
        return {"x": list(self.x), "certificate": self.certificate.as_dict()}


def _shell(s):
    """Integer points with |x|_∞ = s, lexicographically sorted."""
    side = np.arange(-s, s + 1)
    inner = np.arange(-s + 1, s)
    points = np.concatenate(
        [
            np.column_stack([side, np.full_like(side, s)]),
            np.column_stack([side, np.full_like(side, -s)]),
            np.column_stack([np.full_like(inner, s), inner]),
            np.column_stack([np.full_like(inner, -s), inner]),
        ]
    )
    return points[np.lexsort((points[:, 1], points[:, 0]))]


def inhomogeneous_dirichlet(omega, alpha, A, X):
    """
    Integer x with ‖ω·x - α‖ <= A1 and |x_i| <= X1 under a homogeneous gap.

    If ‖ω·x‖ > A for every 0 < |x_i| <= X, transference guarantees a solution
    with A1 = ½(h+1)A and X1 = ½(h+1)X where h = X⁻²A⁻¹. The gap is verified
    by exhaustive search; the solution is found shell by shell in |x|_∞ and
    is the smallest residual in the first shell that has one below A1.

    :raises HypothesisViolationError: when the homogeneous problem has a
        solution of size A inside the box
    """
    omega = np.asarray(omega, dtype=float)
    if A <= 0:
        raise ValueError(f"A must be positive, got {A}")
    gap = best_approx_oracle(omega, X, 0.0)
    if gap.residual <= A:
        raise HypothesisViolationError(
            f"homogeneous problem has a solution with residual {gap.residual:.3e} <= A={A:.3e}",
            witness={"x": list(gap.x), "residual": gap.residual, "A": A, "X": X},
        )
    h = X**-2 / A
    A1 = 0.5 * (h + 1) * A
    X1 = 0.5 * (h + 1) * X

    if distance_to_integers(alpha) == 0.0:
        oracle = best_approx_oracle(omega, X1, 0.0)
        logger.info("alpha is an integer; returning the best homogeneous approximant %s", oracle.x)
        certificate = DirichletCertificate(h, A, X, A1, X1, oracle.residual, max(map(abs, oracle.x)), True)
        return DirichletSolution(x=oracle.x, certificate=certificate)

    for s in range(1, _box_size(X1) + 1):
        points = _shell(s)
        residuals = distance_to_integers(points @ omega - alpha)
        admissible = np.flatnonzero(residuals <= A1 + TIE_TOL)
        if not len(admissible):
            continue
        best = float(np.min(residuals[admissible]))
        index = admissible[np.argmax(residuals[admissible] <= best + TIE_TOL)]
        x = tuple(int(v) for v in points[index])
        logger.debug("inhomogeneous solution x=%s on shell %d, residual %.3e <= A1=%.3e", x, s, residuals[index], A1)
        return DirichletSolution(x=x, certificate=DirichletCertificate(h, A, X, A1, X1, float(residuals[index]), s))

    raise HypothesisViolationError(
        "no solution inside the transference box",
        witness={"A1": A1, "X1": X1, "alpha": float(alpha)},
    )


@dataclass(frozen=True)
class DistanceBounds:
    distance: float
    lower: float
    upper_scale: float
    xi: float

    @property
    def holds(self):
        return self.distance >= self.lower

    def as_dict(self):
        return {
            "distance": self.distance,
            "lower": self.lower,
            "upper_scale": self.upper_scale,
            "xi": self.xi,
            "holds": self.holds,
        }


def distance_bounds(omega_star, k, params, R):
    """
    Distance from ω* to the resonant line Γ_k against η R^(-3-τ) from below;
    ``xi`` is the measured constant in front of η^(-7/2) R^-(3-4τ).
    """
    vector = k if isinstance(k, ResonanceVector) else ResonanceVector(k, normalized=False)
    distance = abs(vector.small_divisor(omega_star)) / float(np.linalg.norm(vector.planar))
    lower = params.eta * R ** (-3 - params.tau)
    upper_scale = params.eta**-3.5 * R ** (-(3 - 4 * params.tau))
    return DistanceBounds(distance=distance, lower=lower, upper_scale=upper_scale, xi=distance / upper_scale)
