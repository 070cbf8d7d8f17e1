"""
Normal form near a double resonance Γ_k ∩ Γ_k'.

At the double resonance the frequency ω# is rational and the linear flow of
ℓ(J) + E = ω#·J + E is periodic.  Averaging over that flow keeps the modes m
with m·(ω#, 1) = 0 and removes the others with generators of constant
divisors, so the scheme needs no polynomial fit.  What survives after the
iterations is split off as ΔH^dr, leaving an autonomous Hamiltonian in the
two slow angles.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from diffusion_core.averaging.homological import unperturbed_bracket, zone_box
from diffusion_core.averaging.normal_form import rescale_zone
from diffusion_core.averaging.projections import measure_norms
from diffusion_core.averaging.slow_fast import slow_fast_change
from diffusion_core.errors.exceptions import ConvexityError, SingularityError
from diffusion_core.hamiltonian import bracket, polynomials
from diffusion_core.hamiltonian.fourier import FourierHamiltonian, IntegrablePart
from diffusion_core.hamiltonian.frequency import convexity_certificate
from diffusion_core.hamiltonian.scales import PaperConstants
from diffusion_core.maupertuis.two_dof import TwoDofHamiltonian

logger = logging.getLogger(__name__)

DR_TOLERANCE = 1e-12
DR_MAX_ITERATIONS = 10
CONVEXITY_GRID = 5


@dataclass(frozen=True)
class DoubleResonanceFrequency:
    """ω# solving k·(ω, 1) = k'·(ω, 1) = 0 and the least T > 0 with T(ω#, 1) ∈ ℤ³."""

    omega: tuple
    period: int
    k: tuple
    k_prime: tuple

    def as_array(self):
        return np.array([float(x) for x in self.omega])

    def divisor(self, m):
        """m·(ω#, 1) as an exact fraction."""
        return m[0] * self.omega[0] + m[1] * self.omega[1] + m[2]

    def is_resonant(self, m):
        return self.divisor(m) == 0

    def as_dict(self):
        return {
            "omega": [str(x) for x in self.omega],
            "period": self.period,
            "k": list(self.k),
            "k_prime": list(self.k_prime),
        }


def double_resonance_frequency(k, k_prime):
    """
    Exact ω# by Cramer's rule over the rationals.

    :raises ValueError: the planar parts of k and k' are parallel
    """
    k = tuple(int(x) for x in getattr(k, "k", k))
    k_prime = tuple(int(x) for x in getattr(k_prime, "k", k_prime))
    determinant = k[0] * k_prime[1] - k[1] * k_prime[0]
    if determinant == 0:
        raise ValueError(f"{k} and {k_prime} do not cross")
    omega = (
        Fraction(-k[2] * k_prime[1] + k[1] * k_prime[2], determinant),
        Fraction(-k[0] * k_prime[2] + k_prime[0] * k[2], determinant),
    )
    period = math.lcm(omega[0].denominator, omega[1].denominator)
    return DoubleResonanceFrequency(omega, period, k, k_prime)


@dataclass(frozen=True)
class DoubleResonanceNormalForm:
    hamiltonian: FourierHamiltonian
    removed: FourierHamiltonian
    removed_norm: float
    iterations: int
    converged: bool
    frequency: DoubleResonanceFrequency
    change: object
    convexity: float | None
    zone: tuple
    scale: float = 1.0
    center: tuple = (0.0, 0.0)
    generators: tuple = ()
    norms: tuple = field(default_factory=tuple)

    @property
    def slow_only(self):
        return self.change.slow_only(self.hamiltonian.modes)

    def slow_modes(self):
        """
        Resonant modes in the slow angles ψ = (k·θ, k'·θ).

        :raises SingularityError: a mode is not an integer combination of k and k'
        """
        rows = []
        for m in self.hamiltonian.modes:
            slow = self.change.transform_mode(m)
            if slow[2] != 0 or any(Fraction(x).denominator != 1 for x in slow):
                raise SingularityError(
                    "resonant mode has no integer slow form",
                    witness={"mode": [int(x) for x in m], "slow": [str(x) for x in slow]},
                )
            rows.append([int(x) for x in slow])
        return np.array(rows, dtype=np.int64).reshape(-1, 3)

    def slow_box(self):
        """Bounding box of the core in the slow actions J = I Ã[:2, :2]⁻¹."""
        corners = np.array(list(itertools.product(*self.zone)), dtype=float)
        J = corners @ np.linalg.inv(self.change.integer_matrix[:2, :2].astype(float))
        return tuple((float(lo), float(hi)) for lo, hi in zip(J.min(axis=0), J.max(axis=0)))

    def slow_system(self, box=None):
        """
        The autonomous two degree of freedom Hamiltonian in (ψ1, ψ2, J1, J2).

        :raises SingularityError: see ``slow_modes``
        :raises ConvexityError: the slow ℋ₀ is not convex on ``box``
        """
        H = self.change.compose(self.hamiltonian, self.slow_modes())
        return TwoDofHamiltonian.from_fourier(H, box=box or self.slow_box())

    def as_dict(self):
        return {
            "frequency": self.frequency.as_dict(),
            "iterations": self.iterations,
            "converged": self.converged,
            "removed_norm": self.removed_norm,
            "convexity": self.convexity,
            "zone": [list(axis) for axis in self.zone],
            "scale": self.scale,
            "center": list(self.center),
            "modes": self.hamiltonian.modes.tolist(),
            "slow_modes": [[str(x) for x in self.change.transform_mode(m)] for m in self.hamiltonian.modes],
            "change": self.change.as_dict(),
            "norms": list(self.norms),
        }


def _linear_part(omega):
    coefficients = np.zeros((2, 2))
    coefficients[1, 0], coefficients[0, 1] = omega
    return IntegrablePart(coefficients)


def _split(mode_map, frequency):
    resonant, fast = {}, {}
    for m, amplitude in mode_map.items():
        (resonant if frequency.is_resonant(m) else fast)[m] = amplitude
    return resonant, fast


def dr_normal_form(
    H,
    k,
    k_prime,
    core,
    constants=None,
    rho=None,
    tolerance=DR_TOLERANCE,
    max_iterations=DR_MAX_ITERATIONS,
    grid=32,
):
    """
    Periodic averaging over the linear flow of ω#·J + E on a core.

    The nonlinear part H0 - ℓ and ε H1 form the perturbation.  Each iteration
    takes the fast part F (modes with m·(ω#, 1) != 0), the generator
    χ_m = -i F_m / (m·(ω#, 1)) and the second-order Lie transform.  When
    ``max_iterations`` is exhausted above ``tolerance`` the best split is
    returned with a warning.

    :param core: action box ((lo1, hi1), (lo2, hi2)) around the double resonance
    """
    constants = constants or PaperConstants()
    frequency = double_resonance_frequency(k, k_prime)
    change = slow_fast_change(frequency.k, frequency.k_prime)
    scale = rho ** constants.m_eff if rho is not None else 1.0
    current, box, center = rescale_zone(H, zone_box(core), scale)

    linear = _linear_part(frequency.as_array())
    perturbation = bracket.scaled_mode_map(current, include_h0=True)
    perturbation = bracket.add_maps(perturbation, {(0, 0, 0): linear.coefficients}, weights=[1.0, -1.0])

    generators, norms = [], []
    resonant, fast = _split(perturbation, frequency)
    fast_norm = measure_norms(bracket.from_scaled_map(fast), box, grid).c0 if fast else 0.0
    iterations = 0
    while fast_norm > tolerance and iterations < max_iterations:
        generator = {m: -1j * np.asarray(a) / float(frequency.divisor(m)) for m, a in fast.items()}
        unperturbed = unperturbed_bracket(linear, generator)
        second = bracket.add_maps(
            bracket.bracket_maps(perturbation, generator),
            bracket.bracket_maps(unperturbed, generator),
            weights=[1.0, 0.5],
        )
        perturbation = bracket.add_maps(perturbation, unperturbed, second)
        generators.append(bracket.from_scaled_map(generator))
        iterations += 1
        resonant, fast = _split(perturbation, frequency)
        fast_norm = measure_norms(bracket.from_scaled_map(fast), box, grid).c0 if fast else 0.0
        norms.append({"iteration": iterations, "fast_c0": fast_norm, "modes": len(perturbation)})
        logger.info("double resonance averaging %d: fast C0 %.3e", iterations, fast_norm)

    converged = fast_norm <= tolerance
    if not converged:
        logger.warning(
            "double resonance remainder %.3e above tolerance %.1e after %d iterations",
            fast_norm,
            tolerance,
            iterations,
        )

    average = np.real(resonant.pop((0, 0, 0), np.zeros((1, 1))))
    size = max(average.shape[-1], linear.coefficients.shape[-1])
    h0 = IntegrablePart(polynomials.pad_square(average, size) + polynomials.pad_square(linear.coefficients, size))
    hamiltonian = bracket.from_scaled_map(resonant, h0=h0, regularity_r=H.regularity_r)

    try:
        convexity = convexity_certificate(hamiltonian, box, CONVEXITY_GRID)
    except ConvexityError as error:
        logger.warning("double resonance H0 is not convex on the core: %s", error.witness)
        convexity = None

    return DoubleResonanceNormalForm(
        hamiltonian=hamiltonian,
        removed=bracket.from_scaled_map(fast, regularity_r=H.regularity_r),
        removed_norm=fast_norm,
        iterations=iterations,
        converged=converged,
        frequency=frequency,
        change=change,
        convexity=convexity,
        zone=box,
        scale=scale,
        center=tuple(float(x) for x in center),
        generators=tuple(generators),
        norms=tuple(norms),
    )
