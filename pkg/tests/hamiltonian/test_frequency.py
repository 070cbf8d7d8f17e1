from __future__ import annotations

import numpy as np
import pytest

from diffusion_core.errors.exceptions import ConvexityError, InversionError
from diffusion_core.hamiltonian.fourier import FourierHamiltonian, IntegrablePart
from diffusion_core.hamiltonian.frequency import convexity_certificate, frequency_map, inverse_frequency


def hamiltonian(h0):
    return FourierHamiltonian.from_cosines(h0, [], epsilon=0.0)


def test_frequency_map_of_free_rotor_is_identity():
    np.testing.assert_allclose(frequency_map(hamiltonian(IntegrablePart.free()), [0.3, 0.7]), [0.3, 0.7])


def test_frequency_map_of_diagonal_quadratic():
    H = hamiltonian(IntegrablePart.quadratic(np.diag([2.0, 1.0])))
    np.testing.assert_allclose(frequency_map(H, [1.0, 1.0]), [2.0, 1.0])


def test_inverse_frequency_round_trip_on_convex_quartic(quartic_h0, rng):
    H = hamiltonian(quartic_h0)
    actions = rng.uniform(-1, 1, size=(100, 2))
    recovered = inverse_frequency(H, frequency_map(H, actions))
    np.testing.assert_allclose(recovered, actions, atol=1e-10)


def test_inverse_frequency_reports_non_convergence(quartic_h0):
    with pytest.raises(InversionError) as info:
        inverse_frequency(hamiltonian(quartic_h0), [50.0, 0.0], max_steps=2)
    assert "omega" in info.value.witness


def test_convexity_of_free_rotor_is_one():
    assert convexity_certificate(hamiltonian(IntegrablePart.free()), ((-1, 1), (-1, 1)), 5) == pytest.approx(1.0)


def test_convexity_of_diagonal_quadratic_is_two():
    H = hamiltonian(IntegrablePart.quadratic(np.diag([2.0, 1.0])))
    assert convexity_certificate(H, ((-1, 1), (-1, 1)), 5) == pytest.approx(2.0)


def test_convexity_matches_dense_sampling(quartic_h0):
    H = hamiltonian(quartic_h0)
    coarse = convexity_certificate(H, ((-1, 1), (-1, 1)), 11)
    axis = np.linspace(-1, 1, 110)
    points = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    eigenvalues = np.linalg.eigvalsh(quartic_h0.hessian(points))
    dense = max(eigenvalues.max(), 1 / eigenvalues.min())
    assert coarse == pytest.approx(dense, rel=0.01)


def test_non_convex_h0_raises_with_witness():
    H = hamiltonian(IntegrablePart.quadratic(np.diag([1.0, -1.0])))
    with pytest.raises(ConvexityError) as info:
        convexity_certificate(H, ((-1, 1), (-1, 1)), 3)
    assert info.value.witness["action"] == [-1.0, -1.0]


def test_grid_must_have_two_points():
    with pytest.raises(ValueError):
        convexity_certificate(hamiltonian(IntegrablePart.free()), ((0, 1), (0, 1)), 1)


def test_frequency_map_at_one_point_returns_a_two_vector(quartic_h0):
    assert frequency_map(hamiltonian(quartic_h0), [0.3, 0.7]).shape == (2,)
    assert frequency_map(hamiltonian(quartic_h0), np.zeros((4, 3, 2))).shape == (4, 3, 2)
