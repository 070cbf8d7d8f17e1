from __future__ import annotations

import math

import numpy as np
import pytest

from diffusion_core.diophantine.approximation import (
    best_approx_oracle,
    distance_to_integers,
    homogeneous_gap,
    inhomogeneous_dirichlet,
    is_diophantine,
)
from diffusion_core.diophantine.params import DiophantineParams, ResonanceVector
from diffusion_core.errors.exceptions import BudgetError, HypothesisViolationError

SQRT_PAIR = (math.sqrt(2) - 1, math.sqrt(3) - 1)


def test_exact_resonance_is_not_diophantine():
    verdict = is_diophantine((0.5, 1 / 3), DiophantineParams(eta=1e-6, tau=0.2, cutoff_K=10))
    assert not verdict
    assert verdict.witness.k == (2, 0, -1)


def test_quadratic_irrational_pair_is_diophantine():
    verdict = is_diophantine(SQRT_PAIR, DiophantineParams(eta=1e-3, tau=0.2, cutoff_K=200))
    assert verdict
    assert verdict.witness is None
    assert verdict.margin >= 1.0
    assert verdict.as_dict()["cutoff_K"] == 200


def test_verdict_is_monotone_in_eta():
    omega = (0.3819660112501051, 0.2360679774997897)
    verdicts = [bool(is_diophantine(omega, DiophantineParams(eta=eta, tau=0.5, cutoff_K=40))) for eta in (1.0, 0.1, 1e-2, 1e-3, 1e-4)]
    first_pass = verdicts.index(True) if True in verdicts else len(verdicts)
    assert all(verdicts[first_pass:])


def test_resonance_vector_is_normalized():
    assert ResonanceVector((4, -2, 6)).k == (2, -1, 3)
    assert ResonanceVector((-2, 1, -3)).k == (2, -1, 3)
    assert ResonanceVector((0, -3, 1)).k == (0, 3, -1)
    assert ResonanceVector((4, -2, 6), normalized=False).norm == 6
    with pytest.raises(ValueError):
        ResonanceVector((0, 0, 1))


def test_angle_between_resonance_lines():
    assert ResonanceVector((1, 0, 0)).angle_with((0, 1, 0)) == pytest.approx(math.pi / 2)
    assert ResonanceVector((1, 0, 0)).angle_with((-1, 0, 0)) == pytest.approx(0.0)
    assert ResonanceVector((1, 2, 0)).is_parallel((-2, -4, 0))


def test_oracle_breaks_exact_ties_lexicographically():
    result = best_approx_oracle((0.5, 0.25), 4)
    assert result.x == (0, 4)
    assert result.residual == 0.0
    assert result.homogeneous


def test_oracle_in_unit_box_matches_direct_minimum():
    omega, alpha = np.array(SQRT_PAIR), 0.3
    neighbours = [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1) if (a, b) != (0, 0)]
    expected = min(neighbours, key=lambda x: (distance_to_integers(omega @ x - alpha), x))
    result = best_approx_oracle(omega, 1, alpha)
    assert result.x == expected
    assert not result.homogeneous


def test_oracle_residual_is_nonincreasing_in_box_size():
    residuals = [best_approx_oracle(SQRT_PAIR, X, 0.37).residual for X in range(1, 21)]
    assert all(later <= earlier for earlier, later in zip(residuals, residuals[1:]))


def test_oracle_enforces_enumeration_budget():
    with pytest.raises(BudgetError):
        best_approx_oracle(SQRT_PAIR, 10**4 + 1)


def test_inhomogeneous_solution_respects_transference_bounds():
    A = homogeneous_gap(SQRT_PAIR, 30) * (1 - 1e-9)
    solution = inhomogeneous_dirichlet(SQRT_PAIR, 0.37, A, 30)
    certificate = solution.certificate
    assert certificate.h == pytest.approx(30**-2 / A)
    assert certificate.A1 == pytest.approx(0.5 * (certificate.h + 1) * A)
    assert solution.residual <= certificate.A1
    assert max(abs(v) for v in solution.x) <= certificate.X1
    assert distance_to_integers(np.dot(SQRT_PAIR, solution.x) - 0.37) == pytest.approx(solution.residual)
    oracle = best_approx_oracle(SQRT_PAIR, math.floor(certificate.X1), 0.37)
    assert oracle.residual <= solution.residual


def test_integer_target_falls_back_to_homogeneous_approximant():
    A = homogeneous_gap(SQRT_PAIR, 10) * 0.5
    solution = inhomogeneous_dirichlet(SQRT_PAIR, 0.0, A, 10)
    assert solution.certificate.homogeneous
    assert solution.x != (0, 0)


def test_small_homogeneous_solution_violates_hypothesis():
    gap = homogeneous_gap(SQRT_PAIR, 10)
    with pytest.raises(HypothesisViolationError) as info:
        inhomogeneous_dirichlet(SQRT_PAIR, 0.37, 2 * gap, 10)
    assert info.value.witness["residual"] == pytest.approx(gap)


def test_oracle_dominates_inhomogeneous_solver(rng):
    checked = 0
    for _ in range(50):
        omega = rng.uniform(0, 1, size=2)
        alpha = float(rng.uniform(0.05, 0.95))
        gap = homogeneous_gap(omega, 8)
        if 8**-2 / gap > 40:
            continue
        solution = inhomogeneous_dirichlet(omega, alpha, gap * (1 - 1e-9), 8)
        oracle = best_approx_oracle(omega, math.floor(solution.certificate.X1), alpha)
        assert oracle.residual <= solution.residual + 1e-15
        assert solution.residual <= solution.certificate.A1
        checked += 1
    assert checked >= 25


def test_distance_to_integers_is_elementwise():
    values = 0.5 * 3 + 0.25 * np.arange(-4, 5)
    distances = distance_to_integers(values)
    assert distances.shape == values.shape
    np.testing.assert_allclose(distances, [0.5, 0.25, 0.0, 0.25, 0.5, 0.25, 0.0, 0.25, 0.5])
    assert distance_to_integers(2.75) == pytest.approx(0.25)


def test_homogeneous_gap_of_quadratic_pair_is_positive():
    gap = homogeneous_gap(SQRT_PAIR, 5)
    omega = np.array(SQRT_PAIR)
    brute = min(
        distance_to_integers(omega @ (a, b))
        for a in range(-5, 6)
        for b in range(-5, 6)
        if (a, b) != (0, 0)
    )
    assert gap == pytest.approx(brute, abs=1e-15)
    assert gap > 0
