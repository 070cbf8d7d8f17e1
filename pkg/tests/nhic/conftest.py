from __future__ import annotations

import numpy as np
import pytest

from diffusion_core.averaging.slow_fast import slow_fast_change
from diffusion_core.hamiltonian.fourier import FourierHamiltonian, IntegrablePart
from diffusion_core.nhic.block import straighten_and_block
from diffusion_core.nhic.saddle import truncated_saddle

SADDLE_EPSILON = 0.04
LAMBDA = 0.2
JF_NODES = np.linspace(0.2, 0.4, 5)


def coupled_pendulum(coupling):
    """½|J|² + 0.04 cos ψ^s + coupling·cos(ψ^s + ψ^f + t); the saddle has λ = 0.2."""
    terms = [((1, 0, 0), SADDLE_EPSILON)]
    if coupling:
        terms.append(((1, 1, 1), coupling))
    return FourierHamiltonian.from_cosines(IntegrablePart.free(), terms, epsilon=1.0)


@pytest.fixture(scope="module")
def decoupled():
    return coupled_pendulum(0.0)


@pytest.fixture(scope="module")
def weakly_coupled():
    return coupled_pendulum(LAMBDA**2 / 100)


@pytest.fixture(scope="module")
def pendulum_branch(decoupled):
    return truncated_saddle(decoupled, slow_fast_change((1, 0, 0)), JF_NODES)


@pytest.fixture(scope="module")
def decoupled_block(pendulum_branch, decoupled):
    return straighten_and_block(pendulum_branch, decoupled)


@pytest.fixture(scope="module")
def coupled_block(pendulum_branch, weakly_coupled):
    return straighten_and_block(pendulum_branch, weakly_coupled)
