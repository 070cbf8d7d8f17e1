from __future__ import annotations

import numpy as np
import pytest

from diffusion_core.hamiltonian.fourier import FourierHamiltonian, IntegrablePart
from diffusion_core.hamiltonian.norms import angular_derivative_sup, fourier_norm_bound


def geometric_spectrum(cutoff=3):
    mode_map = {}
    for k1 in range(-cutoff, cutoff + 1):
        for k2 in range(-cutoff, cutoff + 1):
            if (k1, k2) != (0, 0):
                mode_map[(k1, k2, 0)] = 2.0 ** (-max(abs(k1), abs(k2)))
    return FourierHamiltonian.from_mode_map(IntegrablePart.free(), mode_map, regularity_r=8)


def test_single_mode_bound_is_bracket_power():
    H = FourierHamiltonian.from_cosines(IntegrablePart.free(), [((3, 1, 0), 1.0)])
    assert fourier_norm_bound(H, 2).bound == pytest.approx(9.0)


def test_empty_perturbation_has_zero_norm():
    H = FourierHamiltonian.from_cosines(IntegrablePart.free(), [])
    assert fourier_norm_bound(H, 3).bound == 0.0


@pytest.mark.parametrize(
    "ell, derivatives",
    [(0, [(0, 0, 0)]), (2, [(2, 0, 0), (0, 2, 0), (1, 1, 0)])],
)
def test_bound_against_grid_maximization(ell, derivatives):
    H = geometric_spectrum()
    bound = fourier_norm_bound(H, ell).bound
    measured = max(angular_derivative_sup(H, alpha, np.zeros((1, 2))) for alpha in derivatives)
    assert measured <= bound * (1 + 1e-12)
    assert bound <= 3 * measured


def test_bound_is_monotone_in_ell_and_under_truncation():
    H = geometric_spectrum()
    bounds = [fourier_norm_bound(H, ell).bound for ell in range(5)]
    assert bounds == sorted(bounds)
    assert fourier_norm_bound(H.truncate(2), 2).bound <= fourier_norm_bound(H, 2).bound


def test_tail_bound_and_truncation_agree():
    H = geometric_spectrum()
    result = fourier_norm_bound(H, 1, K=2)
    remaining = fourier_norm_bound(H.truncate(2), 1).bound
    assert result.tail == pytest.approx(result.bound - remaining)
    assert result.tail_constant == pytest.approx(result.tail / 2.0 ** result.tail_exponent)


def test_ell_above_regularity_is_rejected():
    with pytest.raises(ValueError):
        fourier_norm_bound(geometric_spectrum(), 9)
