from __future__ import annotations

import numpy as np
import pytest

from diffusion_core.errors.exceptions import AssemblyError
from diffusion_core.maupertuis.geodesics import energy_scan
from diffusion_core.maupertuis.kissing import hausdorff, kissing_cylinder_assemble, polyline_distances
from diffusion_core.maupertuis.saddle_orbits import SaddleOrbits

from tests.maupertuis.conftest import EPSILON


@pytest.fixture(scope="module")
def cylinder(saddle, saddle_crit, saddle_orbits):
    family = energy_scan(saddle, (1, 0), [saddle_crit.alpha0 + 1e-3 * EPSILON], restarts=2, nodes=64, multipliers=False)
    return kissing_cylinder_assemble(saddle, saddle_orbits, family=family, samples=128)


def test_polyline_distances_wrap_angles():
    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    np.testing.assert_allclose(polyline_distances(np.array([[0.5, 0.5], [2.0, 0.0]]), square), [0.5, 1.0])
    line = np.column_stack([np.linspace(0, 2 * np.pi, 9)[:-1], np.zeros(8)])
    assert polyline_distances(np.array([[2 * np.pi - 0.1, 0.2]]), line)[0] == pytest.approx(0.2)
    assert hausdorff(line, line + [0.0, 0.3]) == pytest.approx(0.3)


def test_pieces_are_chained_through_the_homoclinics(cylinder):
    labels = [piece.label for piece in cylinder.pieces]
    assert labels == ["plus"] * 3 + ["gamma_plus"] + ["center"] * 2 + ["gamma_minus"] + ["minus"] * 3
    plus = [piece.energy for piece in cylinder.pieces if piece.label == "plus"]
    center = [piece.energy for piece in cylinder.pieces if piece.label == "center"]
    assert plus == sorted(plus, reverse=True)
    assert center == sorted(center, reverse=True)
    assert len(cylinder.rows()) == sum(len(piece.states) for piece in cylinder.pieces)


def test_orbits_close_up_on_the_homoclinics(cylinder):
    assert cylinder.closes(5e-3)
    assert set(cylinder.junctions) == {"plus", "minus", "center"}
    # adjacent orbits draw together towards the critical level
    plus = [a for a in cylinder.adjacent if a[0] == "plus"]
    assert plus[0][3] < plus[-1][3]


def test_cylinders_share_their_tangent_plane_at_the_saddle(cylinder):
    assert cylinder.tangency_angle < 1.0
    assert cylinder.center_angle < 1.0


def test_orbits_project_onto_the_geodesic(cylinder):
    assert cylinder.overlap < 1e-3
    assert cylinder.as_dict()["overlap"] == cylinder.overlap


def test_missing_center_window(saddle, saddle_orbits):
    positive = SaddleOrbits(
        saddle_orbits.sections, tuple(o for o in saddle_orbits.orbits if o.kind != "center"), saddle_orbits.checks
    )
    with pytest.raises(AssemblyError) as excinfo:
        kissing_cylinder_assemble(saddle, positive)
    assert excinfo.value.witness["missing"] == "center"
    assert excinfo.value.witness["window"][1] == 0.0
