from __future__ import annotations

import json

import numpy as np
import pytest

from diffusion_core.errors.exceptions import DomainError
from diffusion_core.hamiltonian.bracket import poisson_bracket, rescale_actions
from diffusion_core.hamiltonian.fourier import FourierHamiltonian, IntegrablePart, PhaseState, eval_and_grad
from diffusion_core.serializers.hamiltonian_serializer import hamiltonian_document, load_hamiltonian
from tests.helpers import central_gradient, random_states


def test_integrable_value_and_gradient():
    H = FourierHamiltonian.from_cosines(IntegrablePart.free(), [], epsilon=0.0)
    value, grad = eval_and_grad(H, PhaseState(phi=(0, 0), action=(0.3, 0.7), time=0))
    assert value == pytest.approx(0.29)
    np.testing.assert_allclose(grad, [0, 0, 0.3, 0.7, 0], atol=1e-15)


def test_single_cosine_adds_epsilon_at_zero():
    H = FourierHamiltonian.from_mode_map(
        IntegrablePart.free(), {(1, 0, 0): 0.5, (-1, 0, 0): 0.5}, epsilon=0.1
    )
    value, _ = eval_and_grad(H, PhaseState(phi=(0, 0), action=(0.0, 0.0)))
    assert value == pytest.approx(0.1, abs=1e-15)


def test_gradient_matches_central_differences(random_hamiltonian, rng):
    for z in random_states(rng, 100):
        analytic = random_hamiltonian.gradient(z)
        numeric = central_gradient(random_hamiltonian.value, z)
        assert np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))) <= 1e-6


def test_hessian_matches_gradient_differences(random_hamiltonian, rng):
    for z in random_states(rng, 20):
        hess = random_hamiltonian.hessian(z)
        for axis in range(5):
            numeric = central_gradient(lambda w: random_hamiltonian.gradient(w)[axis], z)
            np.testing.assert_allclose(hess[axis], numeric, atol=1e-6)


def test_evaluation_matches_direct_fourier_sum(random_hamiltonian, rng):
    z = random_states(rng, 1)[0]
    direct = random_hamiltonian.h0.value(z[2:4])
    for k, amplitude in random_hamiltonian.mode_map().items():
        coefficient = np.polynomial.polynomial.polyval2d(z[2], z[3], amplitude)
        direct += random_hamiltonian.epsilon * np.real(coefficient * np.exp(1j * np.dot(k, z[[0, 1, 4]])))
    assert random_hamiltonian.value(z) == pytest.approx(direct, abs=1e-13)


def test_missing_conjugate_partner_is_rejected():
    with pytest.raises(ValueError, match="conjugate"):
        FourierHamiltonian.from_mode_map(IntegrablePart.free(), {(1, 0, 0): 0.5})


def test_non_conjugate_amplitude_is_rejected():
    with pytest.raises(ValueError, match="conjugate"):
        FourierHamiltonian.from_mode_map(IntegrablePart.free(), {(1, 0, 0): 0.5j, (-1, 0, 0): 0.5j})


def test_negligible_modes_are_pruned():
    H = FourierHamiltonian.from_cosines(IntegrablePart.free(), [((1, 0, 0), 1.0), ((0, 1, 0), 1e-17)])
    assert {tuple(k) for k in H.modes} == {(1, 0, 0), (-1, 0, 0)}


def test_action_outside_domain_raises():
    H = FourierHamiltonian.from_cosines(IntegrablePart.free(), [((1, 0, 0), 1.0)], domain=((-1, 1), (-1, 1)))
    with pytest.raises(DomainError) as info:
        H.value(np.array([0, 0, 2.0, 0, 0]))
    assert info.value.witness["action"] == [2.0, 0.0]


def test_bracket_matches_closed_form(rng):
    F = FourierHamiltonian.from_cosines(IntegrablePart(np.zeros((1, 1))), [((1, 0, 0), [[0, 0, 1]])])
    G = FourierHamiltonian.from_cosines(IntegrablePart(np.zeros((1, 1))), [((0, 1, 0), [[0], [1]], -np.pi / 2)])
    bracket = poisson_bracket(F, G)
    for z in random_states(rng, 20):
        phi1, phi2, J1, J2 = z[:4]
        expected = -(J2**2) * np.sin(phi1) * np.sin(phi2) - 2 * J1 * J2 * np.cos(phi1) * np.cos(phi2)
        assert bracket.value(z) == pytest.approx(expected, abs=1e-12)


def test_rescaled_actions_reproduce_values(random_hamiltonian, rng):
    center, scale = np.array([0.4, -0.2]), 0.05
    rescaled = rescale_actions(random_hamiltonian, center, scale)
    for z in random_states(rng, 10):
        original = z.copy()
        original[2:4] = center + scale * z[2:4]
        assert rescaled.value(z) == pytest.approx(random_hamiltonian.value(original) / scale, rel=1e-9)


def test_document_round_trip_is_exact(random_hamiltonian, rng):
    document = json.loads(json.dumps(hamiltonian_document(random_hamiltonian)))
    restored = load_hamiltonian(document)
    np.testing.assert_array_equal(restored.modes, random_hamiltonian.modes)
    np.testing.assert_array_equal(restored.amplitudes, random_hamiltonian.amplitudes)
    np.testing.assert_array_equal(restored.h0.coefficients, random_hamiltonian.h0.coefficients)
    z = random_states(rng, 5)
    np.testing.assert_array_equal(restored.value(z), random_hamiltonian.value(z))


def test_document_rejects_unknown_schema_version(random_hamiltonian):
    document = hamiltonian_document(random_hamiltonian)
    document["schema_version"] = 99
    with pytest.raises(ValueError, match="schema version"):
        load_hamiltonian(document)


def test_selected_fields_are_not_loadable(random_hamiltonian):
    document = hamiltonian_document(random_hamiltonian, fields=["modes", "epsilon"])
    assert set(document) == {"schema", "schema_version", "modes", "epsilon"}
    with pytest.raises(ValueError, match="missing"):
        load_hamiltonian(document)
    with pytest.raises(ValueError, match="fourier_hamiltonian"):
        load_hamiltonian({**document, "schema": "resonance_tree"})


def test_integrable_part_at_one_point_keeps_point_shape(quartic_h0):
    action = np.array([0.3, 0.7])
    assert np.shape(quartic_h0.value(action)) == ()
    assert quartic_h0.gradient(action).shape == (2,)
    assert quartic_h0.hessian(action).shape == (2, 2)
    batch = np.stack([action, -action])
    assert quartic_h0.value(batch).shape == (2,)
    np.testing.assert_allclose(quartic_h0.hessian(batch)[0], quartic_h0.hessian(action))


def test_single_state_gradient_and_hessian_shapes(random_hamiltonian):
    z = np.array([0.1, 0.2, 0.3, -0.2, 0.4])
    assert np.shape(random_hamiltonian.value(z)) == ()
    assert random_hamiltonian.gradient(z).shape == (5,)
    assert random_hamiltonian.hessian(z).shape == (5, 5)
    assert random_hamiltonian.gradient(np.zeros(5)).shape == (5,)
