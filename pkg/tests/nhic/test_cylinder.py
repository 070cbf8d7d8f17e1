from __future__ import annotations

import numpy as np
import pytest

from diffusion_core.nhic.cylinder import cylinder_graph, trigonometric_eval, tube_check

from tests.nhic.conftest import LAMBDA

WEAK_TOL = 1e-6


@pytest.fixture(scope="module")
def coupled_graph(coupled_block, weakly_coupled):
    return cylinder_graph(coupled_block, weakly_coupled, grid=(16, 5, 8), tol=WEAK_TOL)


def test_trigonometric_interpolation_is_exact_for_low_harmonics():
    t = np.arange(8) * 2 * np.pi / 8
    slices = np.column_stack([np.cos(t), np.sin(2 * t) + 0.5, np.cos(4 * t)])
    at = np.array([0.3, 1.7, 0.0])
    expected = [np.cos(0.3), np.sin(3.4) + 0.5, 1.0]
    np.testing.assert_allclose(trigonometric_eval(slices, at), expected, atol=1e-13)


def test_decoupled_cylinder_converges_in_one_step(decoupled_block):
    graph = cylinder_graph(decoupled_block, grid=(8, 4, 4), residual_points=20)
    assert graph.converged
    assert graph.iterations == 1
    assert np.max(np.abs(graph.x)) < 1e-12
    assert np.max(np.abs(graph.y)) < 1e-12
    assert graph.residual < 1e-9
    assert len(graph.jf) == 4 and graph.jf[0] < 0.2 and graph.jf[-1] > 0.4


def test_weakly_coupled_cylinder_stays_near_the_saddle(coupled_graph):
    assert coupled_graph.converged
    assert coupled_graph.differences[-1] <= WEAK_TOL
    assert all(ratio < 1 for ratio in coupled_graph.contraction)
    coupling = LAMBDA**2 / 100
    psi_deviation, js_deviation = coupled_graph.deviation()
    assert 0 < psi_deviation <= 2 * coupling / LAMBDA
    assert 0 < js_deviation <= 2 * coupling / LAMBDA


def test_weakly_coupled_cylinder_is_invariant(coupled_graph):
    assert coupled_graph.residual <= 10 * WEAK_TOL


def test_graph_is_lipschitz_and_exports(coupled_graph):
    constants = coupled_graph.lipschitz()
    assert set(constants) == {"psi_s_by_psi_f", "psi_s_by_jf", "j_s_by_psi_f", "j_s_by_jf"}
    assert all(0 <= value < 1 for value in constants.values())
    summary = coupled_graph.as_dict()
    assert summary["grid"] == [16, 5, 8]
    assert len(coupled_graph.rows()) == 16 * 5 * 8


def test_graph_interpolates_its_nodes(coupled_graph):
    P, J, T = np.meshgrid(coupled_graph.psi, coupled_graph.jf, coupled_graph.t, indexing="ij")
    x, y = coupled_graph(P, J, T)
    np.testing.assert_allclose(x, coupled_graph.x, atol=1e-12)
    np.testing.assert_allclose(y, coupled_graph.y, atol=1e-12)


def test_orbits_that_stay_in_the_block_approach_the_cylinder(coupled_graph, weakly_coupled):
    report = tube_check(coupled_graph, weakly_coupled, orbits=100, time=10.0)
    assert report.stayed > 0
    assert report.passed, report.as_dict()
