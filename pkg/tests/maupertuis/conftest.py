from __future__ import annotations

import numpy as np
import pytest

from diffusion_core.maupertuis.critical import mane_critical_value
from diffusion_core.maupertuis.saddle_orbits import saddle_maps_periodic_orbits
from diffusion_core.maupertuis.two_dof import TwoDofHamiltonian

EPSILON = 0.01
ORBIT_ENERGIES = EPSILON * np.array([1e-3, 1e-4, 1e-5, -1e-3, -1e-4])

# V = cos 2ψ1 - 0.05 cos ψ1 + 0.5 cos ψ2 + 0.5 cos ψ1 cos ψ2: the lines ψ1 = 0 and
# ψ1 = π are both ridges and exchange as the shortest (0, 1) loop near E = 2.33
BIFURCATION_TERMS = [
    ((2, 0), 1.0),
    ((1, 0), -0.05),
    ((0, 1), 0.5),
    ((1, 1), 0.25),
    ((1, -1), 0.25),
]

# α₀ = 0.775 at the origin; the shortest (1, 0) loop follows ψ2 = π
NONCRITICAL_TERMS = [
    ((1, 0), 0.525),
    ((0, 1), -0.375),
    ((1, 1), 0.3125),
    ((1, -1), 0.3125),
]


def separable(epsilon=EPSILON, **kwargs):
    """½|J|² + ε(cos ψ1 + ½ cos ψ2)."""
    return TwoDofHamiltonian.from_terms([((1, 0), 1.0), ((0, 1), 0.5)], epsilon=epsilon, **kwargs)


@pytest.fixture(scope="module")
def free():
    return TwoDofHamiltonian.from_terms([])


@pytest.fixture(scope="module")
def saddle():
    return separable()


@pytest.fixture(scope="module")
def saddle_crit(saddle):
    return mane_critical_value(saddle)


@pytest.fixture(scope="module")
def saddle_orbits(saddle, saddle_crit):
    return saddle_maps_periodic_orbits(saddle, saddle_crit, ORBIT_ENERGIES)
