from __future__ import annotations

import numpy as np
import pytest

from diffusion_core.averaging.slow_fast import slow_fast_change
from diffusion_core.errors.exceptions import EllipticPointError, SingularityError
from diffusion_core.hamiltonian.fourier import FourierHamiltonian, IntegrablePart
from diffusion_core.nhic.saddle import (
    bifurcation_handoff,
    eigen_data,
    reduced_system,
    slow_truncation,
    truncated_saddle,
)

from tests.nhic.conftest import JF_NODES, LAMBDA, SADDLE_EPSILON


def test_reduced_system_matches_the_extended_hamiltonian(rng, random_hamiltonian):
    change = slow_fast_change((0, 1, 3))
    assert change.determinant == -1
    reduced = reduced_system(random_hamiltonian, change)
    psi = rng.uniform(0, 2 * np.pi, size=(200, 3))
    J = rng.uniform(-1, 1, size=(200, 3))
    z = np.column_stack([psi[:, :2], J[:, :2], psi[:, 2]])
    np.testing.assert_allclose(reduced.value(z) + J[:, 2], change.evaluate(random_hamiltonian, psi, J), atol=1e-10)


def test_resonant_mode_becomes_slow():
    H = FourierHamiltonian.from_cosines(IntegrablePart.free(), [((0, 1, 3), 1.0), ((1, 0, 0), 1.0)], epsilon=0.1)
    reduced = reduced_system(H, slow_fast_change((0, 1, 3)))
    assert {tuple(k) for k in reduced.modes} == {(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)}
    assert reduced.h0.coefficients[1, 0] == 3
    truncated = slow_truncation(reduced)
    assert {tuple(k) for k in truncated.modes} == {(1, 0, 0), (-1, 0, 0)}


def test_non_unimodular_change_is_rejected(pendulum):
    with pytest.raises(SingularityError):
        reduced_system(pendulum, slow_fast_change((2, 1, 0)))


def test_eigen_data_against_numpy(rng):
    a, b, c = rng.normal(size=(3, 400))
    hyperbolic = a * a + b * c > 0
    a, b, c = a[hyperbolic][:100], b[hyperbolic][:100], c[hyperbolic][:100]
    lam, S = eigen_data(a, b, c)
    M = np.stack([np.stack([a, b], -1), np.stack([c, -a], -1)], -2)
    eigenvalues = np.sort(np.real(np.linalg.eigvals(M)), axis=-1)
    np.testing.assert_allclose(eigenvalues[:, 1], lam, atol=1e-10)
    np.testing.assert_allclose(eigenvalues[:, 0], -lam, atol=1e-10)
    D = np.linalg.solve(S, M @ S)
    np.testing.assert_allclose(D[:, 0, 1], 0, atol=1e-8)
    np.testing.assert_allclose(D[:, 1, 0], 0, atol=1e-8)
    np.testing.assert_allclose(D[:, 0, 0], lam, atol=1e-8)
    np.testing.assert_allclose(np.linalg.norm(S, axis=-2), 1.0, rtol=1e-12)


def test_eigen_data_with_a_vanishing_first_candidate():
    lam, S = eigen_data(-1.0, 0.0, 2.0)
    assert lam == pytest.approx(1.0)
    assert abs(np.linalg.det(S)) > 0.1


def test_pendulum_saddle_branch(pendulum_branch):
    np.testing.assert_allclose(np.mod(pendulum_branch.psi + 1, 2 * np.pi) - 1, 0, atol=1e-12)
    np.testing.assert_allclose(pendulum_branch.js, 0, atol=1e-12)
    np.testing.assert_allclose(pendulum_branch.a, 0, atol=1e-14)
    np.testing.assert_allclose(pendulum_branch.b, 1, atol=1e-14)
    np.testing.assert_allclose(pendulum_branch.c, SADDLE_EPSILON, atol=1e-14)
    np.testing.assert_allclose(pendulum_branch.lam, LAMBDA, atol=1e-10)
    assert pendulum_branch.eigen_defect() < 1e-10
    assert pendulum_branch.diagonal_defect() < 1e-8
    assert len(pendulum_branch.rows()) == len(JF_NODES)


def test_frame_is_frozen_outside_the_branch(pendulum_branch):
    center, P, d_center, d_P = pendulum_branch.frame(np.array([0.1, 0.3, 0.5]))
    np.testing.assert_allclose(center, 0, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(P, axis=-2), 1.0, rtol=1e-12)
    np.testing.assert_array_equal(d_center[[0, 2]], 0)
    np.testing.assert_array_equal(d_P[[0, 2]], 0)


def test_minimum_of_the_potential_is_elliptic():
    H = FourierHamiltonian.from_cosines(IntegrablePart.free(), [((1, 0, 0), 1.0)], epsilon=0.01)
    with pytest.raises(EllipticPointError) as excinfo:
        truncated_saddle(H, slow_fast_change((1, 0, 0)), JF_NODES, seeds=np.pi)
    witness = excinfo.value.witness
    assert witness["a"] ** 2 + witness["b"] * witness["c"] < 0
    assert witness["jf"] == pytest.approx(0.2)


def test_grid_must_be_increasing(pendulum):
    with pytest.raises(ValueError):
        truncated_saddle(pendulum, slow_fast_change((1, 0, 0)), [0.3])
    with pytest.raises(ValueError):
        truncated_saddle(pendulum, slow_fast_change((1, 0, 0)), [0.3, 0.2])


def test_two_branches_at_a_bifurcation_are_disjoint():
    # Z = ε(cos 2ψ + (J^f - 0.3) cos ψ): maxima at 0 and π swap at J^f = 0.3
    drift = np.array([[-0.3, 1.0], [0.0, 0.0]])
    H = FourierHamiltonian.from_cosines(IntegrablePart.free(), [((2, 0, 0), 1.0), ((1, 0, 0), drift)], epsilon=0.01)
    change = slow_fast_change((1, 0, 0))
    first = truncated_saddle(H, change, JF_NODES, seeds=0.0)
    second = truncated_saddle(H, change, JF_NODES, seeds=np.pi)
    np.testing.assert_allclose(second.psi, np.pi, atol=1e-10)
    np.testing.assert_allclose(first.lam, np.sqrt(0.01 * (4 + JF_NODES - 0.3)), rtol=1e-9)

    report = bifurcation_handoff(first, second, 0.3, lambda_star=0.5)
    assert report.separation == pytest.approx(np.pi, abs=1e-10)
    assert report.disjoint
    assert report.as_dict()["scale"] == 0.5
    with pytest.raises(ValueError):
        bifurcation_handoff(first, second, 0.45, lambda_star=0.5)


def test_unnormalized_diagonalizer_determinant(pendulum_branch):
    np.testing.assert_allclose(pendulum_branch.det_s, LAMBDA**2 + SADDLE_EPSILON, rtol=1e-12)
    assert pendulum_branch.as_dict()["min_det_s"] == pytest.approx(2 * SADDLE_EPSILON)


def test_s_matrix_diagonalizes_the_linearization(pendulum_branch):
    S = pendulum_branch.s_matrix()
    np.testing.assert_allclose(S[0], [[LAMBDA, -1.0], [SADDLE_EPSILON, LAMBDA]], atol=1e-10)
    np.testing.assert_allclose(np.linalg.det(S), pendulum_branch.det_s, rtol=1e-10)
    D = np.linalg.solve(S, pendulum_branch.linearization() @ S)
    np.testing.assert_allclose(D[:, 0, 0], LAMBDA, atol=1e-10)
    np.testing.assert_allclose(D[:, 1, 1], -LAMBDA, atol=1e-10)
    np.testing.assert_allclose(D[:, 0, 1], 0, atol=1e-10)
    np.testing.assert_allclose(D[:, 1, 0], 0, atol=1e-10)
