from __future__ import annotations

import math

import numpy as np
import pytest

from diffusion_core.diophantine.approximation import distance_bounds, is_diophantine
from diffusion_core.diophantine.params import DiophantineParams, ResonanceVector
from diffusion_core.diophantine.selection import anchor_point, select_resonance_vector
from diffusion_core.errors.exceptions import SelectionError

# θ³ = θ + 1
PLASTIC = 1.3247179572447460
CUBIC_OMEGA = (PLASTIC - 1, PLASTIC**2 - 2)
PARAMS = DiophantineParams(eta=1e-3, tau=0.2, cutoff_K=60)


def test_cubic_frequency_is_diophantine():
    assert is_diophantine(CUBIC_OMEGA, PARAMS)


def test_first_generation_is_a_dirichlet_approximant():
    omega = (math.sqrt(2) - 1, math.sqrt(5) - 2)
    k = select_resonance_vector(omega, 40, None, PARAMS)
    assert k.norm <= 40
    assert abs(k.small_divisor(omega)) <= k.norm**-2.0
    assert k.certificate["method"] == "dirichlet"


def test_anchor_lies_in_resonance_plane_orthogonal_to_previous():
    k_prev = ResonanceVector((1, 2, -1))
    anchor = anchor_point(np.array(CUBIC_OMEGA), 40, k_prev)
    assert anchor @ np.array([*CUBIC_OMEGA, 1.0]) == pytest.approx(0.0, abs=1e-12)
    assert anchor @ k_prev.as_array() == pytest.approx(0.0, abs=1e-12)
    assert np.max(np.abs(anchor)) == pytest.approx(20.0)


def test_next_generation_satisfies_all_clauses():
    R = 40
    k_prev = select_resonance_vector(CUBIC_OMEGA, 10, None, PARAMS)
    k = select_resonance_vector(CUBIC_OMEGA, R, k_prev, PARAMS)
    divisor = abs(k.small_divisor(CUBIC_OMEGA))
    assert R / 4 <= k.norm <= R
    assert PARAMS.eta * R ** -(2 + PARAMS.tau) <= divisor <= 16 * PARAMS.eta**-2 * R ** -(2 - 2 * PARAMS.tau)
    assert divisor >= PARAMS.threshold(k.norm)
    assert k.angle_with(k_prev) >= math.pi / 6 - 1e-12
    assert not k.is_parallel(k_prev)
    assert k.is_primitive
    assert k.certificate["tie_break"] == "lexicographic"
    assert distance_bounds(CUBIC_OMEGA, k, PARAMS, R).holds


def test_rational_frequency_has_no_admissible_vector():
    params = DiophantineParams(eta=1.0, tau=0.05, cutoff_K=10)
    with pytest.raises(SelectionError) as info:
        select_resonance_vector((0.5, 0.25), 400, ResonanceVector((1, 0, 0)), params)
    assert info.value.witness["clause"] in ("upper", "lower")
