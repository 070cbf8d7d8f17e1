from __future__ import annotations

import numpy as np
import pytest

from diffusion_core.hamiltonian.fourier import FourierHamiltonian, IntegrablePart


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(12345))


@pytest.fixture
def pendulum():
    """½I1² + ½I2² + 0.01 cos φ1."""
    return FourierHamiltonian.from_cosines(IntegrablePart.free(), [((1, 0, 0), 1.0)], epsilon=0.01)


@pytest.fixture
def quartic_h0():
    """½|I|² + 0.01 I1⁴."""
    coefficients = np.zeros((5, 5))
    coefficients[2, 0] = coefficients[0, 2] = 0.5
    coefficients[4, 0] = 0.01
    return IntegrablePart(coefficients)


@pytest.fixture
def random_hamiltonian(rng, quartic_h0):
    """Ten cosine modes with random degree-2 amplitudes over a convex quartic H0."""
    terms = []
    for _ in range(10):
        k = tuple(int(x) for x in rng.integers(-3, 4, size=3))
        if k[:2] == (0, 0):
            k = (1, k[1], k[2])
        terms.append((k, rng.normal(size=(3, 3)) * 0.3, float(rng.uniform(0, 2 * np.pi))))
    return FourierHamiltonian.from_cosines(quartic_h0, terms, epsilon=0.1)
