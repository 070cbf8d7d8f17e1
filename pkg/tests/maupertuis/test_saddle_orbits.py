from __future__ import annotations

import numpy as np
import pytest

from diffusion_core.errors.exceptions import AssumptionViolationError
from diffusion_core.maupertuis.critical import CriticalValue, critical_points
from diffusion_core.maupertuis.flows import involution
from diffusion_core.maupertuis.saddle_orbits import SaddleFrame, bezout, saddle_maps_periodic_orbits
from diffusion_core.maupertuis.two_dof import wrap

from tests.maupertuis.conftest import EPSILON


def test_bezout():
    for a, b in ((1, 0), (-1, 0), (0, 1), (2, 3), (-3, 5)):
        x, y = bezout(a, b)
        assert a * x + b * y == 1
    with pytest.raises(ValueError):
        bezout(2, 4)


def test_frame_diagonalizes_the_linearization(saddle, saddle_crit):
    frame = SaddleFrame.at(saddle, saddle_crit)
    np.testing.assert_allclose(frame.rates, [0.1, np.sqrt(0.005), -0.1, -np.sqrt(0.005)], rtol=1e-10)
    D = frame.inverse @ saddle.linearization(saddle_crit.state) @ frame.basis
    np.testing.assert_allclose(D, np.diag(frame.rates), atol=1e-12)
    xi = np.array([0.01, -0.02, 0.03, 0.0])
    np.testing.assert_allclose(frame.to_saddle(frame.from_saddle(xi)), xi, atol=1e-14)


def test_homoclinics_of_the_separable_saddle(saddle_orbits):
    sections = saddle_orbits.sections
    plus, minus = sections.homoclinics
    assert sections.simple
    assert plus.winding == (1, 0)
    assert minus.winding == (-1, 0)
    np.testing.assert_allclose(plus.anchor, [np.pi, 0.0, 2 * np.sqrt(EPSILON), 0.0], atol=1e-8)
    np.testing.assert_allclose(minus.anchor, [-np.pi, 0.0, -2 * np.sqrt(EPSILON), 0.0], atol=1e-8)
    assert sections.delta < sections.radius


def test_assumption_angles_are_right_angles(saddle_orbits):
    checks = saddle_orbits.checks
    assert checks["case"] == "simple"
    assert checks["worst"] > 80.0


def test_local_and_global_maps(saddle_orbits):
    sections = saddle_orbits.sections
    plus = sections.homoclinics[0]
    entry, _ = sections.global_map(plus.exit)
    np.testing.assert_allclose(entry, plus.entry, atol=1e-8)

    u = 1e-3 * sections.delta
    exit, time = sections.local_map(np.array([u, 0.0, sections.delta, 0.0]))
    assert exit[0] == pytest.approx(sections.delta)
    assert exit[2] == pytest.approx(u, rel=0.05)
    assert time == pytest.approx(np.log(sections.delta / u) / 0.1, rel=0.05)


def test_orbits_stay_on_their_energy_level(saddle, saddle_crit, saddle_orbits):
    assert {o.kind for o in saddle_orbits.orbits} == {"plus", "minus", "center"}
    for orbit in saddle_orbits.orbits:
        assert orbit.residual < 1e-9
        states = orbit.sample(saddle, 64)
        np.testing.assert_allclose(saddle.value(states), saddle_crit.alpha0 + orbit.energy, atol=1e-8)


def test_plus_orbits_rotate_forward(saddle, saddle_orbits):
    for orbit in saddle_orbits.of_kind("plus"):
        states = orbit.sample(saddle, 8)
        assert orbit.winding == (1, 0)
        assert np.all(saddle.vector_field(states)[:, 0] > 0)
        assert orbit.hyperbolic


def test_period_grows_like_the_log_of_the_energy(saddle_orbits):
    plus = saddle_orbits.of_kind("plus")
    energies = np.array([o.energy for o in plus])
    periods = np.array([o.period for o in plus])
    slope = np.polyfit(np.log(1 / energies), periods, 1)[0]
    assert slope == pytest.approx(1 / np.sqrt(EPSILON), rel=0.1)


def test_center_orbit_passes_the_saddle_twice(saddle_orbits):
    plus = {round(o.energy / EPSILON, 8): o for o in saddle_orbits.of_kind("plus")}
    for orbit in saddle_orbits.of_kind("center"):
        assert orbit.winding == (0, 0)
        assert orbit.period == pytest.approx(2 * plus[round(-orbit.energy / EPSILON, 8)].period, rel=0.05)


def test_minus_orbit_is_the_reversed_plus_orbit(saddle_orbits):
    minus = {o.energy: o for o in saddle_orbits.of_kind("minus")}
    for orbit in saddle_orbits.of_kind("plus"):
        image = involution(orbit.state)
        other = minus[orbit.energy]
        np.testing.assert_allclose(wrap(image[:2] - other.state[:2]), 0, atol=1e-7)
        np.testing.assert_allclose(image[2:], other.state[2:], atol=1e-7)
        assert other.period == pytest.approx(orbit.period, rel=1e-7)


def test_critical_level_is_rejected(saddle, saddle_crit):
    with pytest.raises(ValueError):
        saddle_maps_periodic_orbits(saddle, saddle_crit, [0.0])


def test_elliptic_critical_point_is_rejected(saddle):
    bottom = critical_points(saddle)[-1]
    with pytest.raises(AssumptionViolationError):
        SaddleFrame.at(saddle, CriticalValue(bottom))
