from __future__ import annotations

import pytest

from diffusion_core.diophantine.params import DiophantineParams
from diffusion_core.hamiltonian.scales import PaperConstants, ScaleLadder
from diffusion_core.resonance_net.tree import build_tree

from tests.helpers import NET_DOMAIN


@pytest.fixture(scope="session")
def ladder():
    return ScaleLadder(R0=20, tau=0.2, generations=2)


@pytest.fixture(scope="session")
def net_params():
    return DiophantineParams(eta=0.05, tau=0.2, cutoff_K=30)


@pytest.fixture(scope="session")
def two_generation_tree(ladder, net_params):
    return build_tree(NET_DOMAIN, ladder, net_params, 2, PaperConstants(), seed=7)
