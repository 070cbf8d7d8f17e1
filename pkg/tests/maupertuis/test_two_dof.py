from __future__ import annotations

import numpy as np
import pytest

from diffusion_core.errors.exceptions import ConvexityError
from diffusion_core.hamiltonian.fourier import FourierHamiltonian, IntegrablePart
from diffusion_core.maupertuis.two_dof import TwoDofHamiltonian, wrap

from tests.maupertuis.conftest import EPSILON, separable


def test_value_of_the_separable_model(saddle, rng):
    x = np.column_stack([rng.uniform(0, 2 * np.pi, size=(50, 2)), rng.uniform(-1, 1, size=(50, 2))])
    expected = 0.5 * np.sum(x[:, 2:] ** 2, axis=1) + EPSILON * (np.cos(x[:, 0]) + 0.5 * np.cos(x[:, 1]))
    np.testing.assert_allclose(saddle.value(x), expected, atol=1e-14)
    np.testing.assert_allclose(saddle.potential(x[:, :2]), expected - 0.5 * np.sum(x[:, 2:] ** 2, axis=1), atol=1e-14)


def test_vector_field_and_linearization(saddle):
    x = np.array([0.3, -0.2, 0.1, 0.05])
    field = saddle.vector_field(x)
    np.testing.assert_allclose(field, [0.1, 0.05, EPSILON * np.sin(0.3), 0.5 * EPSILON * np.sin(-0.2)], atol=1e-15)
    step = 1e-6
    numeric = np.column_stack(
        [(saddle.vector_field(x + step * e) - saddle.vector_field(x - step * e)) / (2 * step) for e in np.eye(4)]
    )
    np.testing.assert_allclose(saddle.linearization(x), numeric, atol=1e-9)


def test_time_dependent_modes_are_rejected():
    H = FourierHamiltonian.from_cosines(IntegrablePart.free(), [((1, 0, 1), 1.0)], epsilon=0.1)
    with pytest.raises(ValueError):
        TwoDofHamiltonian.from_fourier(H)


def test_certificate_of_an_anisotropic_kinetic_energy():
    H = separable(h0=IntegrablePart.quadratic(np.diag([2.0, 1.0])))
    assert H.certificate == pytest.approx(2.0)
    assert H.is_mechanical


def test_non_convex_kinetic_energy_is_rejected():
    with pytest.raises(ConvexityError):
        separable(h0=IntegrablePart.quadratic(np.diag([1.0, -1.0])))


def test_action_dependent_amplitude_is_not_mechanical():
    H = TwoDofHamiltonian.from_terms([((1, 0), [[1.0, 0.2], [0.1, 0.0]])], epsilon=0.05)
    assert not H.is_mechanical
    value, J = H.fibre_minimum(np.array([[0.4, 1.0], [2.0, 3.0]]))
    gradient = H.gradient(np.concatenate([[[0.4, 1.0], [2.0, 3.0]], J], axis=-1))
    np.testing.assert_allclose(gradient[:, 2:], 0, atol=1e-12)
    assert value.shape == (2,)


def test_wrap_reduces_to_a_half_open_turn():
    np.testing.assert_allclose(wrap([0.0, 2 * np.pi, 3 * np.pi, -0.5]), [0.0, 0.0, np.pi, -0.5], atol=1e-15)
    assert np.all(np.abs(wrap(np.linspace(-20, 20, 101))) <= np.pi)
