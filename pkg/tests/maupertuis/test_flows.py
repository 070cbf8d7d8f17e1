from __future__ import annotations

import numpy as np

from diffusion_core.maupertuis.flows import flow, floquet_multipliers, involution, is_hyperbolic, monodromy

from tests.maupertuis.conftest import EPSILON


def test_flow_conserves_energy(saddle):
    x = np.array([0.5, 1.0, 0.1, -0.05])
    solution = flow(saddle, x, 200.0, t_eval=np.linspace(0, 200, 50))
    np.testing.assert_allclose(saddle.value(solution.y.T), saddle.value(x), atol=1e-9)


def test_monodromy_at_the_saddle(saddle, saddle_crit):
    final, M = monodromy(saddle, saddle_crit.state, 1.0)
    np.testing.assert_allclose(final, saddle_crit.state, atol=1e-14)
    rates = np.sqrt([EPSILON, EPSILON / 2])
    expected = np.sort(np.exp(np.concatenate([rates, -rates])))
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(M).real), expected, rtol=1e-9)
    assert is_hyperbolic(floquet_multipliers(saddle, saddle_crit.state, 1.0))


def test_free_flow_has_unit_multipliers(free):
    multipliers = floquet_multipliers(free, np.array([0.0, 0.0, 1.0, 0.0]), 2 * np.pi)
    np.testing.assert_allclose(np.abs(multipliers), 1.0, atol=1e-5)


def test_elliptic_multipliers_are_not_hyperbolic():
    assert not is_hyperbolic(np.exp(1j * np.array([-0.3, 0.0, 0.0, 0.3])))
    assert not is_hyperbolic([1.0, 1.0, 1.0, 1.0])
    assert is_hyperbolic([0.5, 1.0, 1.0, 2.0])


def test_involution_reverses_orbits(saddle):
    times = np.linspace(0, 30, 31)
    states = flow(saddle, np.array([0.5, 1.0, 0.1, -0.05]), 30.0, t_eval=times).y.T
    image, image_times = involution(states, times)
    np.testing.assert_allclose(image_times, -times[::-1])
    again = flow(saddle, image[0], 30.0, t_eval=image_times - image_times[0]).y.T
    np.testing.assert_allclose(again, image, atol=1e-9)


def test_involution_of_a_single_state():
    np.testing.assert_array_equal(involution([1.0, 2.0, 3.0, -4.0]), [1.0, 2.0, -3.0, 4.0])