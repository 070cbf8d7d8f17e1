from __future__ import annotations

import math

import numpy as np
import pytest

from diffusion_core.hamiltonian.norms import fourier_norm_bound
from diffusion_core.hamiltonian.scales import PaperConstants, ScaleLadder
from diffusion_core.potential_shaper.averaged import AveragedPotential, Bump
from diffusion_core.potential_shaper.deformation import (
    DeformationParams,
    deform_potential,
    deformation_term,
    implied_nu,
    shift_parameters,
)

SIGMA = (0.03, -0.04, 0.01, 0.02, -0.05, 0.0)
NU = 0.05


def _explicit(sigma, theta, t):
    s1, s2, s3, s4, s5, s6 = sigma
    c, s = np.cos(2 * np.pi * theta), np.sin(2 * np.pi * theta)
    return s1 * c + s2 * s + s3 * np.cos(4 * np.pi * theta) + s4 * np.sin(4 * np.pi * theta) + t * (s5 * c + s6 * s)


def _family(nodes=np.linspace(0.0, 1.0, 9)):
    rng = np.random.Generator(np.random.Philox(7))
    cosines = rng.normal(size=(len(nodes), 5))
    sines = rng.normal(size=(len(nodes), 5))
    sines[:, 0] = 0
    return AveragedPotential.from_cosine_sine(nodes, cosines, sines, period=1.0)


def test_zero_sigma_is_identity():
    Z = _family()
    deformed = deform_potential(Z, DeformationParams.zero(NU, 0.1))
    np.testing.assert_array_equal(deformed.coefficients, Z.coefficients)


def test_only_first_two_harmonics_change():
    Z = _family()
    deformed = deform_potential(Z, DeformationParams(SIGMA, NU, 0.1))
    difference = deformed.coefficients - Z.coefficients
    np.testing.assert_array_equal(difference[:, [0, 3, 4]], 0)
    t = Z.nodes
    np.testing.assert_allclose(difference[:, 1], 0.5 * ((0.03 - 0.05 * t) + 0.04j), atol=1e-15)
    np.testing.assert_allclose(difference[:, 2], 0.5 * (0.01 - 0.02j), atol=1e-15)


def test_deformed_values_match_the_family_formula():
    Z = _family()
    deformed = deform_potential(Z, DeformationParams(SIGMA, NU, 0.1))
    theta = np.linspace(0, 1, 17)
    for t in Z.nodes[[0, 4, 8]]:
        np.testing.assert_allclose(deformed.value(theta, t) - Z.value(theta, t), _explicit(SIGMA, theta, t), atol=1e-14)


def test_short_potential_is_padded():
    Z = AveragedPotential.from_cosine_sine([0.0, 1.0], [[0.0, -1.0]] * 2, [[0.0, 0.0]] * 2, period=1.0)
    deformed = deform_potential(Z, DeformationParams(SIGMA, NU, 0.1))
    assert deformed.max_harmonic == 2
    assert deformed.value(0.3, 0.0) == pytest.approx(-np.cos(0.6 * np.pi) + _explicit(SIGMA, 0.3, 0.0), abs=1e-14)


def test_bump_localizes_the_deformation():
    nodes = np.linspace(0.0, 1.0, 11)
    Z = _family(nodes)
    deformed = deform_potential(Z, DeformationParams(SIGMA, NU, 0.1), bump=Bump(0.4, 0.6, 0.2))
    difference = np.abs(deformed.coefficients - Z.coefficients).sum(axis=1)
    np.testing.assert_array_equal(difference[[0, 1, 9, 10]], 0)
    assert np.all(difference[4:7] > 0)
    expected = 0.5 * ((0.03 - 0.05 * 0.5) + 0.04j)
    assert deformed.coefficients[5, 1] - Z.coefficients[5, 1] == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("shift", [0.0, 0.13, 0.5, 0.87])
def test_shift_rotates_pairs(shift):
    rotated = shift_parameters(SIGMA, shift)
    for index in range(3):
        assert math.hypot(*rotated[2 * index : 2 * index + 2]) == pytest.approx(
            math.hypot(*SIGMA[2 * index : 2 * index + 2]), abs=1e-15
        )
    theta = np.linspace(0, 1, 23)
    for t in (0.0, 0.7):
        np.testing.assert_allclose(_explicit(SIGMA, theta + shift, t), _explicit(rotated, theta, t), atol=1e-15)


def test_pairs_must_lie_in_disks():
    with pytest.raises(ValueError, match="disk"):
        DeformationParams((0.06, 0, 0, 0, 0, 0), NU, 0.1)
    with pytest.raises(ValueError, match="6 components"):
        DeformationParams((0.0,) * 5, NU, 0.1)
    params = DeformationParams((0.03, 0.04, 0, 0, 0, 0), NU, 0.1, c3=4.0)
    assert params.lambda_sharp == pytest.approx(0.025)


@pytest.mark.parametrize("ell", [0, 1, 2, 3])
@pytest.mark.parametrize("t", [0.0, 0.5, 1.0])
def test_deformation_norm_is_proportional_to_nu(ell, t):
    bound = fourier_norm_bound(deformation_term(SIGMA, t), ell).bound
    assert 0 < bound <= (1 + abs(t) + 2**ell) * NU
    pair = math.hypot(0.03 - 0.05 * t, -0.04)
    assert bound == pytest.approx(pair + 2**ell * math.hypot(0.01, 0.02), rel=1e-12)


def test_zero_deformation_term_is_empty():
    assert deformation_term((0.0,) * 6, 0.5).n_modes == 0


def test_implied_nu_from_the_ladder():
    ladder = ScaleLadder(R0=20, tau=0.2, generations=2)
    small = implied_nu(ladder, PaperConstants(), n=0, r=2)
    assert small.nu == pytest.approx(20.0**-9, rel=1e-10)
    structural = implied_nu(ladder, PaperConstants(), n=1)
    assert structural.r == PaperConstants().r_min
    assert structural.log10_nu < -1000
    assert structural.nu == 0.0
