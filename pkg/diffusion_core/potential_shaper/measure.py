"""
Monte Carlo estimate of the parameters σ ∈ D_ν for which a one-parameter
family f_t(θ), θ ∈ ℝ/ℤ, t ∈ [a-, a+], deformed by σ still has a degenerate
global minimum, a flat bifurcation or a near-third minimum for some t.
"""
import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from diffusion_core.errors.exceptions import DeformationError
from diffusion_core.potential_shaper.deformation import DeformationParams, deform_potential
from diffusion_core.potential_shaper.extrema import MIN_GRID, nondegeneracy_check, track_extrema

logger = logging.getLogger(__name__)

MIN_SAMPLES = 1000
MAX_THETA_GRID = 256
MAX_T_NODES = 33
THETA_SAMPLES = 128
CONFIDENCE = 0.95
BAD_CLAUSES = frozenset({"curvature", "slope_gap", "third_extremum", "coexisting"})


def family_c3(family, nu, samples=THETA_SAMPLES):
    """
    C₃ of F_t(θ, σ) over σ ∈ D_ν: the largest derivative of order 1 to 3 in (σ, t).

    F is linear in σ, so the σ-derivatives are bounded by max(1, |t|) and the
    t-derivatives are those of f_t plus at most ν in first order.
    """
    theta = np.linspace(0.0, family.period, samples, endpoint=False)
    jf = family.nodes
    derivatives = [np.max(np.abs(family.derivative(theta[None, :], jf[:, None], jf_order=j))) for j in (1, 2, 3)]
    derivatives[0] += nu
    return float(max(1.0, np.max(np.abs(jf)), *derivatives))


def measure_bound(c3, interval, lambda_star, nu):
    """(3C₃ + 7)(1 + |a+ - a-|) C₃² √λ* / (8π⁵ν³)."""
    a_lo, a_hi = interval
    return (3 * c3 + 7) * (1 + abs(a_hi - a_lo)) * c3**2 * math.sqrt(lambda_star) / (8 * math.pi**5 * nu**3)


def sample_sigma(seed, index, nu):
    """σ uniform in the product of three ν-disks; a counter-based stream per sample."""
    rng = np.random.Generator(np.random.Philox(key=seed, counter=[0, index, 0, 0]))
    radius = nu * np.sqrt(rng.random(3))
    angle = 2.0 * np.pi * rng.random(3)
    return tuple(float(x) for x in np.column_stack([radius * np.cos(angle), radius * np.sin(angle)]).reshape(-1))


@dataclass(frozen=True)
class Discretization:
    family: object
    c3: float
    lambda_sharp: float
    theta_grid: int
    capped: bool

    def as_dict(self):
        return {
            "c3": self.c3,
            "lambda_sharp": self.lambda_sharp,
            "theta_grid": self.theta_grid,
            "t_nodes": len(self.family.nodes),
            "capped": self.capped,
        }


def discretize(family, nu, lambda_star, max_theta_grid=MAX_THETA_GRID, max_t_nodes=MAX_T_NODES):
    """
    Grids of spacing λ# = λ*/C₃ in θ and t, capped; Newton refinement and
    bisection take over below the cap.
    """
    c3 = family_c3(family, nu)
    lambda_sharp = lambda_star / c3
    theta_wanted = math.ceil(family.period / lambda_sharp)
    a_lo, a_hi = family.interval
    t_wanted = math.ceil((a_hi - a_lo) / lambda_sharp) + 1
    theta_grid = int(np.clip(theta_wanted, MIN_GRID, max_theta_grid))
    t_nodes = int(np.clip(t_wanted, len(family.nodes), max(max_t_nodes, len(family.nodes))))
    capped = theta_wanted > max_theta_grid or t_wanted > t_nodes
    if capped:
        logger.info(
            "λ#=%.2e grid capped at %d θ points and %d t nodes (wanted %d, %d)",
            lambda_sharp,
            theta_grid,
            t_nodes,
            theta_wanted,
            t_wanted,
        )
    if t_nodes != len(family.nodes):
        family = family.resampled(np.linspace(a_lo, a_hi, t_nodes))
    return Discretization(family, c3, lambda_sharp, theta_grid, capped)


def classify_sigma(grid, params, orientation="min"):
    """(branch, certificate) of the family deformed by σ."""
    deformed = deform_potential(grid.family, params)
    branch = track_extrema(deformed, grid=grid.theta_grid, orientation=orientation)
    certificate = nondegeneracy_check(branch, params.lambda_star, value_tolerance=params.lambda_star**2 / grid.c3)
    return branch, certificate


def is_bad(certificate):
    return any(failure["clause"] in BAD_CLAUSES for failure in certificate.failures)


@dataclass(frozen=True)
class MeasureEstimate:
    fraction: float
    lower: float
    upper: float
    confidence: float
    samples: int
    bad: int
    bound: float
    seed: int
    nu: float
    lambda_star: float
    discretization: Discretization
    clauses: dict = field(default_factory=dict)

    @property
    def below_bound(self):
        """The upper confidence limit does not exceed the analytic bound."""
        return self.upper <= self.bound

    def as_dict(self):
        return {
            "fraction": self.fraction,
            "interval": [self.lower, self.upper],
            "confidence": self.confidence,
            "samples": self.samples,
            "bad": self.bad,
            "bound": self.bound,
            "below_bound": self.below_bound,
            "seed": self.seed,
            "nu": self.nu,
            "lambda_star": self.lambda_star,
            "discretization": self.discretization.as_dict(),
            "clauses": self.clauses,
        }


def measure_bad_set(family, nu, lambda_star, samples=10_000, seed=0, confidence=CONFIDENCE, orientation="min"):
    """
    Fraction of bad σ with a Wilson interval, next to the analytic bound.

    :param family: AveragedPotential in θ (period 1) over t ∈ [a-, a+]
    :raises ValueError: fewer than 1000 samples
    """
    if samples < MIN_SAMPLES:
        raise ValueError(f"at least {MIN_SAMPLES} samples are needed, got {samples}")
    grid = discretize(family, nu, lambda_star)
    clauses = Counter()
    bad = 0
    for index in range(samples):
        params = DeformationParams(sample_sigma(seed, index, nu), nu, lambda_star, grid.c3)
        _, certificate = classify_sigma(grid, params, orientation)
        if is_bad(certificate):
            bad += 1
            clauses.update({clause for clause in certificate.clauses() if clause in BAD_CLAUSES})

    interval = binomtest(bad, samples).proportion_ci(confidence_level=confidence, method="wilson")
    estimate = MeasureEstimate(
        fraction=bad / samples,
        lower=float(interval.low),
        upper=float(interval.high),
        confidence=confidence,
        samples=samples,
        bad=bad,
        bound=measure_bound(grid.c3, family.interval, lambda_star, nu),
        seed=seed,
        nu=nu,
        lambda_star=lambda_star,
        discretization=grid,
        clauses=dict(clauses),
    )
    logger.info(
        "bad fraction %.4f [%.4f, %.4f] over %d samples; bound %.3e",
        estimate.fraction,
        estimate.lower,
        estimate.upper,
        samples,
        estimate.bound,
    )
    return estimate


@dataclass(frozen=True)
class GoodSigma:
    params: DeformationParams
    certificate: object
    branch: object
    tries: int

    def as_dict(self):
        return {"params": self.params.as_dict(), "tries": self.tries, "certificate": self.certificate.as_dict()}


def find_good_sigma(family, nu, lambda_star, max_tries=100, seed=0, orientation="min"):
    """
    Rejection sampling in D_ν; σ = 0 is the first candidate.

    :raises DeformationError: no candidate passes within ``max_tries``; the
        witness holds the candidate with the fewest violations
    """
    grid = discretize(family, nu, lambda_star)
    best = None
    for index in range(max_tries):
        sigma = (0.0,) * 6 if index == 0 else sample_sigma(seed, index, nu)
        params = DeformationParams(sigma, nu, lambda_star, grid.c3)
        branch, certificate = classify_sigma(grid, params, orientation)
        if not is_bad(certificate):
            logger.info("accepted sigma after %d tries", index + 1)
            return GoodSigma(params, certificate, branch, index + 1)
        if best is None or len(certificate.failures) < len(best[1].failures):
            best = (params, certificate)

    params, certificate = best
    raise DeformationError(
        f"No sigma in the {nu}-disks passed within {max_tries} tries",
        witness={"sigma": list(params.sigma), "violations": list(certificate.failures), "tries": max_tries},
    )
