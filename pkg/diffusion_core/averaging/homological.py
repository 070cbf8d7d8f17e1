"""
One step of resonant averaging in the extended phase space (φ, t; I, E).

The generator Γ solves {H0 + E, Γ} = -R_low mode by mode,

    γ_k(J) = -i R_k(J) / (k·(∂H0(J), 1)),

fitted by a polynomial in the actions over the zone.  The transformed
Hamiltonian H∘Φ_Γ¹ is kept to second order in Γ:

    H0 + P + B0 + {P, Γ} + ½{B0, Γ},   B0 = {H0 + E, Γ},

where B0 is computed exactly from the fitted Γ, so the fit residual stays in
the new perturbation instead of being lost.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from diffusion_core.averaging.projections import ModeClass, ModeClassifier, measure_norms
from diffusion_core.errors.exceptions import DivisorError
from diffusion_core.hamiltonian import bracket, norms, polynomials

logger = logging.getLogger(__name__)

GENERATOR_DEGREE = 6
DIVISOR_GRID = 33


def zone_box(zone):
    box = tuple((float(lo), float(hi)) for lo, hi in zone)
    if any(hi <= lo for lo, hi in box):
        raise ValueError(f"zone {box} has an empty side")
    return box


def small_divisors(h0, modes, actions):
    """k·(∂H0(J), 1) for every mode (rows of ``modes``) at every action, shape (m, n)."""
    omega = h0.gradient(np.asarray(actions, dtype=float))
    modes = np.asarray(modes, dtype=float).reshape(-1, 3)
    return omega @ modes[:, :2].T + modes[:, 2]


@dataclass(frozen=True)
class DivisorCertificate:
    """Minimum of |k·(∂H0, 1)| over a uniform grid of the zone, per LOW mode and overall."""

    min_divisor: float
    mode: tuple | None
    action: tuple | None
    floor: float
    grid: int
    per_mode: dict = field(default_factory=dict)
    fit_residual: float = 0.0

    def as_dict(self):
        return {
            "min_divisor": self.min_divisor,
            "mode": None if self.mode is None else list(self.mode),
            "action": None if self.action is None else list(self.action),
            "floor": self.floor,
            "grid": self.grid,
            "per_mode": [{"k": list(k), "min_divisor": value} for k, value in self.per_mode.items()],
            "fit_residual": self.fit_residual,
        }


def divisor_certificate(h0, modes, zone, floor=0.0, grid=DIVISOR_GRID):
    """
    :raises DivisorError: a divisor changes sign on the grid or drops to ``floor``
    """
    box = zone_box(zone)
    modes = [tuple(int(x) for x in k) for k in np.asarray(modes, dtype=np.int64).reshape(-1, 3)]
    if not modes:
        return DivisorCertificate(float("inf"), None, None, floor, grid)
    axes = [np.linspace(lo, hi, grid) for lo, hi in box]
    actions = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2)
    divisors = small_divisors(h0, modes, actions)

    per_mode = {}
    for column, k in enumerate(modes):
        values = divisors[:, column]
        index = int(np.argmin(np.abs(values)))
        if np.min(values) < 0 < np.max(values) or abs(values[index]) <= floor:
            raise DivisorError(
                f"Small divisor of {k} vanishes or drops below {floor:.3e} in the zone",
                witness={"k": list(k), "action": actions[index].tolist(), "divisor": float(values[index]), "floor": floor},
            )
        per_mode[k] = float(abs(values[index]))

    worst = min(per_mode, key=lambda k: (per_mode[k], k))
    index = int(np.argmin(np.abs(divisors[:, modes.index(worst)])))
    return DivisorCertificate(
        min_divisor=per_mode[worst],
        mode=worst,
        action=tuple(float(x) for x in actions[index]),
        floor=floor,
        grid=grid,
        per_mode=per_mode,
    )


def _chebyshev_grid(box, count):
    axes = [polynomials.chebyshev_nodes(lo, hi, count) for lo, hi in box]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2)


def solve_homological(low_map, h0, zone, degree=GENERATOR_DEGREE):
    """
    Generator mode map {k: γ_k} for a LOW mode map {k: ε ĥ_k}.

    Each γ_k is fitted on a Chebyshev grid in the local variable
    u = (J - c)/h of the zone and expanded back to the actions.  Only one of
    ±k is fitted; the partner is its conjugate.

    :return: (generator map, maximal fit residual)
    """
    box = zone_box(zone)
    center = np.array([0.5 * (lo + hi) for lo, hi in box])
    half = np.array([0.5 * (hi - lo) for lo, hi in box])
    actions = _chebyshev_grid(box, degree + 3)
    local = (actions - center) / half

    keys = [k for k in sorted(low_map) if k > tuple(-x for x in k)]
    if not keys:
        return {}, 0.0
    amplitudes = polynomials.evaluate(np.stack(_padded([low_map[k] for k in keys])), actions)
    targets = -1j * amplitudes / small_divisors(h0, keys, actions)
    stack, residual = polynomials.fit(targets, local, degree)
    stack = polynomials.affine_compose_stack(stack, np.diag(1.0 / half), -center / half)

    generator = {}
    for k, gamma in zip(keys, stack):
        generator[k] = gamma
        generator[tuple(-x for x in k)] = np.conj(gamma)
    return generator, residual


def _padded(matrices):
    size = max(np.shape(matrix)[-1] for matrix in matrices)
    return [polynomials.pad_square(np.asarray(matrix, dtype=complex), size) for matrix in matrices]


def time_bracket(generator_map):
    """{E, Γ} = -∂_t Γ."""
    return {k: -1j * k[2] * np.asarray(gamma, dtype=complex) for k, gamma in generator_map.items() if k[2]}


def unperturbed_bracket(h0, generator_map):
    """B0 = {H0 + E, Γ}."""
    h0_map = {(0, 0, 0): np.asarray(h0.coefficients, dtype=complex)}
    return bracket.add_maps(bracket.bracket_maps(h0_map, generator_map), time_bracket(generator_map))


@dataclass(frozen=True)
class HomologicalStep:
    generator: object
    hamiltonian: object
    certificate: DivisorCertificate
    second_order: object
    remainder_estimate: float

    @property
    def is_identity(self):
        return self.generator.n_modes == 0

    def as_dict(self):
        return {
            "generator_modes": [list(k) for k in self.generator.modes.tolist()],
            "certificate": self.certificate.as_dict(),
            "remainder_estimate": self.remainder_estimate,
        }


def homological_step(H, k_n, zone, h0=None, cutoff=None, divisor_floor=0.0, degree=GENERATOR_DEGREE, grid=32):
    """
    Remove the LOW harmonics of H to first order.

    :param H: FourierHamiltonian whose perturbation is the current split Z + R
    :param h0: integrable part defining the divisors, H.h0 by default
    :param zone: action box ((lo1, hi1), (lo2, hi2))
    :param divisor_floor: declared lower bound for the divisors (ρ^m surrogate)
    :return: HomologicalStep; an identity step when there are no LOW modes
    :raises DivisorError: a LOW divisor vanishes in the zone
    """
    h0 = h0 if h0 is not None else H.h0
    classifier = k_n if isinstance(k_n, ModeClassifier) else ModeClassifier.for_resonance(k_n, cutoff)
    perturbation = bracket.scaled_mode_map(H)
    low_map = {k: amplitude for k, amplitude in perturbation.items() if classifier.classify(k) is ModeClass.LOW}
    empty = bracket.from_scaled_map({}, h0=bracket.zero_integrable())

    if not low_map:
        certificate = DivisorCertificate(float("inf"), None, None, divisor_floor, DIVISOR_GRID)
        return HomologicalStep(empty, H, certificate, empty, 0.0)

    certificate = divisor_certificate(h0, list(low_map), zone, floor=divisor_floor)
    generator_map, residual = solve_homological(low_map, h0, zone, degree)
    certificate = replace(certificate, fit_residual=residual)

    unperturbed = unperturbed_bracket(h0, generator_map)
    second = bracket.add_maps(
        bracket.bracket_maps(perturbation, generator_map),
        bracket.bracket_maps(unperturbed, generator_map),
        weights=[1.0, 0.5],
    )
    new_map = bracket.add_maps(perturbation, unperturbed, second)

    generator = bracket.from_scaled_map(generator_map, regularity_r=H.regularity_r)
    second_order = bracket.from_scaled_map(second, regularity_r=H.regularity_r)
    transformed = bracket.from_scaled_map(new_map, h0=H.h0, regularity_r=H.regularity_r, domain=H.domain)

    # third-order terms are of size |Γ|_C1 times the second-order correction
    remainder = norms.fourier_norm_bound(generator, 1, box=zone).bound * measure_norms(second_order, zone, grid).c0
    logger.info(
        "homological step: %d LOW modes, min divisor %.3e at %s, fit residual %.2e, remainder %.2e",
        len(low_map),
        certificate.min_divisor,
        certificate.mode,
        residual,
        remainder,
    )
    return HomologicalStep(generator, transformed, certificate, second_order, float(remainder))
