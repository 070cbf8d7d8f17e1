import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from diffusion_core.averaging.homological import GENERATOR_DEGREE, homological_step, zone_box
from diffusion_core.averaging.projections import ModeClassifier, measure_norms, project_modes, resonant_purity
from diffusion_core.hamiltonian import bracket
from diffusion_core.hamiltonian.frequency import inverse_frequency
from diffusion_core.hamiltonian.scales import PaperConstants

logger = logging.getLogger(__name__)

FLOW_RTOL = 1e-12
FLOW_ATOL = 1e-14
STAGNATION_STEPS = 2
TUBE_SAMPLES = 9


@dataclass(frozen=True)
class StepRecord:
    index: int
    resonant: object
    remainder: object
    low_c0: float
    min_divisor: float
    fit_residual: float
    remainder_estimate: float

    def as_dict(self):
        return {
            "step": self.index,
            "Z_c0": self.resonant.c0,
            "Z_c2": self.resonant.c2,
            "R_c0": self.remainder.c0,
            "R_c2": self.remainder.c2,
            "low_c0": self.low_c0,
            "min_divisor": self.min_divisor,
            "fit_residual": self.fit_residual,
            "remainder_estimate": self.remainder_estimate,
        }


@dataclass(frozen=True)
class NormalFormResult:
    """
    H0 + Z + R after N averaging steps in rescaled actions J = (I - center)/scale.

    ``generators`` are the Γ^j in application order; the input Hamiltonian,
    rescaled, equals ``transformed`` pulled back through them up to the
    third-order Lie remainder (see ``lie_conjugacy_defect``).
    """

    h0: object
    resonant: object
    remainder: object
    transformed: object
    initial: object
    generators: tuple
    steps: tuple
    classifier: ModeClassifier
    zone: tuple
    scale: float = 1.0
    center: tuple = (0.0, 0.0)
    paper_steps: int | None = None
    stagnated: bool = False
    initial_norms: dict = field(default_factory=dict)

    @property
    def n_steps(self):
        return len(self.generators)

    @property
    def is_pure(self):
        return resonant_purity(self.resonant, self.classifier.k_n)

    def hamiltonian(self):
        return self.transformed

    def norm_table(self):
        return [self.initial_norms] + [step.as_dict() for step in self.steps]

    def as_dict(self):
        return {
            "k_n": list(self.classifier.k_n),
            "cutoff": self.classifier.cutoff,
            "zone": [list(axis) for axis in self.zone],
            "scale": self.scale,
            "center": list(self.center),
            "steps": self.n_steps,
            "paper_steps": self.paper_steps,
            "stagnated": self.stagnated,
            "resonant_modes": self.resonant.modes.tolist(),
            "remainder_modes": len(self.remainder.modes),
            "norms": self.norm_table(),
        }


def zone_action_box(H, segment, zone, samples=TUBE_SAMPLES):
    """
    Bounding box in the actions of a single-resonance tube: its boundary in
    frequency space is sampled and pulled back through Ω⁻¹.
    """
    start, end = segment.point(np.array([zone.start, zone.end]) / segment.length)
    direction = (end - start) / np.linalg.norm(end - start)
    normal = np.array([-direction[1], direction[0]]) * zone.half_width
    along = np.linspace(0.0, 1.0, samples)[:, None]
    boundary = np.concatenate(
        [start + along * (end - start) + normal, start + along * (end - start) - normal]
    )
    actions = inverse_frequency(H, boundary)
    return tuple((float(lo), float(hi)) for lo, hi in zip(actions.min(axis=0), actions.max(axis=0)))


def rescale_zone(H, box, scale):
    """(Ĥ, box, center) for the action rescaling J = (I - center)/scale around the box center."""
    center = np.array([0.5 * (lo + hi) for lo, hi in box])
    if scale == 1.0:
        return H, box, center
    scaled_box = tuple(((lo - c) / scale, (hi - c) / scale) for (lo, hi), c in zip(box, center))
    return bracket.rescale_actions(H, center, scale), scaled_box, center


def single_res_normal_form(
    H,
    k_n,
    zone,
    steps_N,
    constants=None,
    rho=None,
    cutoff=None,
    tolerance=0.0,
    divisor_floor=0.0,
    degree=GENERATOR_DEGREE,
    grid=32,
    tau=None,
):
    """
    Iterated resonant averaging on a single-resonance zone.

    With ``rho`` the actions are first rescaled J -> ρ^m_eff J around the zone
    center.  Iteration stops after ``steps_N`` steps or once the LOW part's C⁰
    norm is at most ``tolerance``; two consecutive non-decreasing steps log a
    stagnation warning and end the iteration.

    :param zone: action box ((lo1, hi1), (lo2, hi2))
    :raises DivisorError: propagated from a step
    """
    if steps_N < 1:
        raise ValueError(f"steps_N must be at least 1, got {steps_N}")
    constants = constants or PaperConstants()
    scale = rho ** constants.m_eff if rho is not None else 1.0
    current, box, center = rescale_zone(H, zone_box(zone), scale)
    initial = current
    classifier = ModeClassifier.for_resonance(k_n, cutoff)

    parts = project_modes(current, classifier)
    low_c0 = measure_norms(parts.low, box, grid).c0
    initial_norms = {
        "step": 0,
        "Z_c0": measure_norms(parts.resonant, box, grid).c0,
        "R_c0": measure_norms(parts.remainder, box, grid).c0,
        "low_c0": low_c0,
    }
    generators, steps = [], []
    stagnant, stagnated = 0, False
    for index in range(1, steps_N + 1):
        if low_c0 <= tolerance:
            break
        step = homological_step(
            current, classifier, box, divisor_floor=divisor_floor, degree=degree, grid=grid
        )
        if step.is_identity:
            break
        current = step.hamiltonian
        generators.append(step.generator)
        parts = project_modes(current, classifier)
        previous, low_c0 = low_c0, measure_norms(parts.low, box, grid).c0
        steps.append(
            StepRecord(
                index=index,
                resonant=measure_norms(parts.resonant, box, grid),
                remainder=measure_norms(parts.remainder, box, grid),
                low_c0=low_c0,
                min_divisor=step.certificate.min_divisor,
                fit_residual=step.certificate.fit_residual,
                remainder_estimate=step.remainder_estimate,
            )
        )
        logger.info("averaging step %d: LOW C0 %.3e -> %.3e", index, previous, low_c0)
        stagnant = stagnant + 1 if low_c0 >= previous else 0
        if stagnant >= STAGNATION_STEPS:
            logger.warning("averaging stagnated at step %d with LOW C0 %.3e", index, low_c0)
            stagnated = True
            break

    parts = project_modes(current, classifier)
    return NormalFormResult(
        h0=current.h0,
        resonant=parts.resonant,
        remainder=parts.remainder,
        transformed=current,
        initial=initial,
        generators=tuple(generators),
        steps=tuple(steps),
        classifier=classifier,
        zone=box,
        scale=scale,
        center=tuple(float(x) for x in center),
        paper_steps=constants.step_count(constants.r_min, tau) if tau is not None else None,
        stagnated=stagnated,
        initial_norms=initial_norms,
    )


def generator_flow(generator, z):
    """
    Time-one map of the generator in extended phase space; time is frozen and
    the energy variable moves by -∫∂_t Γ.

    :return: (image point, energy shift)
    """
    t = z[4]

    def rhs(_, y):
        grad = generator.gradient(np.append(y[:4], t))
        return np.concatenate([grad[2:4], -grad[0:2], [-grad[4]]])

    solution = solve_ivp(
        rhs, (0.0, 1.0), np.append(z[:4], 0.0), method="DOP853", rtol=FLOW_RTOL, atol=FLOW_ATOL
    )
    end = solution.y[:, -1]
    return np.append(end[:4], t), float(end[4])


def lie_conjugacy_defect(before, result, points):
    """
    H_N(x) - H(Φ(x)) - ΔE(x) at every point, with Φ = Φ_Γ1 ∘ … ∘ Φ_ΓN.

    ``before`` is the input Hamiltonian in the original actions; points are
    in the result's (rescaled) coordinates.  The defect is the third-order
    Lie remainder plus the integration error.
    """
    reference = before
    if result.scale != 1.0:
        reference = bracket.rescale_actions(before, np.array(result.center), result.scale)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    defects = np.empty(len(points))
    for row, x in enumerate(points):
        y, shift = x, 0.0
        for generator in reversed(result.generators):
            y, delta = generator_flow(generator, y)
            shift += delta
        defects[row] = float(result.transformed.value(x)) - float(reference.value(y)) - shift
    return defects
