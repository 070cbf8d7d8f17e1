"""
Autonomous two degree of freedom Hamiltonians ℋ(ψ, J) = ℋ₀(J) + 𝒵(ψ, J).

States are (..., 4) arrays ordered (ψ1, ψ2, J1, J2).  The model wraps a
FourierHamiltonian whose modes do not involve time, so every evaluation is
the extended one at t = 0.
"""
import logging
from dataclasses import dataclass

import numpy as np

from diffusion_core.errors.exceptions import InversionError
from diffusion_core.hamiltonian.fourier import FourierHamiltonian, IntegrablePart
from diffusion_core.hamiltonian.frequency import convexity_certificate

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
NEWTON_TOL = 1e-13
NEWTON_MAX_STEPS = 50
CERTIFICATE_BOX = ((-2.0, 2.0), (-2.0, 2.0))
CERTIFICATE_GRID = 9

# Hamilton's equations ẋ = Ω ∂ℋ in the (ψ, J) ordering
OMEGA = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])


def wrap(angle):
    """Reduce to (-π, π]."""
    return np.pi - np.mod(np.pi - np.asarray(angle, dtype=float), TWO_PI)


@dataclass(frozen=True, eq=False)
class TwoDofHamiltonian:
    """
    Usage:
        H = TwoDofHamiltonian.from_terms([((1, 0), 1.0), ((0, 1), 0.5)], epsilon=0.01)
        H.value([0.0, 0.0, 0.0, 0.0])   # 1.5ε
        H.certificate                   # D of the convexity sandwich
    """

    hamiltonian: FourierHamiltonian
    certificate: float

    @classmethod
    def from_fourier(cls, H, box=CERTIFICATE_BOX, grid_n=CERTIFICATE_GRID):
        """
        :raises ValueError: a mode depends on time
        :raises ConvexityError: ℋ₀ is not strictly convex on ``box``
        """
        if H.n_modes and np.any(H.modes[:, 2] != 0):
            raise ValueError("a two degree of freedom Hamiltonian cannot depend on time")
        return cls(H, convexity_certificate(H, box, grid_n))

    @classmethod
    def from_terms(cls, terms, h0=None, epsilon=1.0, **kwargs):
        """
        ℋ₀ (default ½|J|²) plus ε Σ a(J) cos(k·ψ + phase).

        :param terms: iterable of (k, a) or (k, a, phase) with k = (k1, k2);
            ``a`` is a number or a coefficient matrix in the actions
        """
        lifted = [((int(term[0][0]), int(term[0][1]), 0),) + tuple(term[1:]) for term in terms]
        H = FourierHamiltonian.from_cosines(h0 or IntegrablePart.free(), lifted, epsilon=epsilon)
        return cls.from_fourier(H, **kwargs)

    @property
    def epsilon(self):
        return self.hamiltonian.epsilon

    @property
    def is_mechanical(self):
        """𝒵 does not depend on the actions."""
        H = self.hamiltonian
        if not H.n_modes:
            return True
        return bool(np.all(H.amplitudes.reshape(H.n_modes, -1)[:, 1:] == 0))

    @staticmethod
    def _extended(x):
        x = np.asarray(x, dtype=float)
        return np.concatenate([x, np.zeros(x.shape[:-1] + (1,))], axis=-1)

    def value(self, x):
        return self.hamiltonian.value(self._extended(x))

    def gradient(self, x):
        return self.hamiltonian.gradient(self._extended(x))[..., :4]

    def hessian(self, x):
        return self.hamiltonian.hessian(self._extended(x))[..., :4, :4]

    def vector_field(self, x):
        return self.hamiltonian.vector_field(self._extended(x))

    def linearization(self, x):
        """Ω ∂²ℋ, the matrix of the linearized flow."""
        return OMEGA @ self.hessian(x)

    def potential(self, psi):
        """𝒵 at J = 0, i.e. V(ψ) for a mechanical ℋ."""
        psi = np.asarray(psi, dtype=float)
        x = np.concatenate([psi, np.zeros(psi.shape)], axis=-1)
        return self.epsilon * self.hamiltonian.perturbation_value(self._extended(x))

    def fibre_minimum(self, psi, guess=None, tol=NEWTON_TOL, max_steps=NEWTON_MAX_STEPS):
        """
        The minimizer J of ℋ(ψ, ·) and the minimum value, by Newton on ∂_J ℋ = 0.

        :return: (value, J) with shapes (...,) and (..., 2)
        :raises InversionError: Newton does not settle
        """
        psi = np.asarray(psi, dtype=float)
        J = np.zeros(psi.shape) if guess is None else np.array(np.broadcast_to(guess, psi.shape), dtype=float)
        for _ in range(max_steps):
            x = np.concatenate([psi, J], axis=-1)
            grad = self.gradient(x)[..., 2:]
            step = np.linalg.solve(self.hessian(x)[..., 2:, 2:], grad[..., None])[..., 0]
            J = J - step
            if np.max(np.abs(step), initial=0.0) <= tol * (1.0 + np.max(np.abs(J), initial=0.0)):
                x = np.concatenate([psi, J], axis=-1)
                return self.value(x), J
        worst = np.unravel_index(np.argmax(np.abs(step).sum(axis=-1)), step.shape[:-1]) if step.ndim > 1 else ()
        raise InversionError(
            "fibre minimum did not converge",
            witness={"psi": np.asarray(psi[worst]).tolist(), "last_action": np.asarray(J[worst]).tolist()},
        )

    def as_dict(self):
        H = self.hamiltonian
        return {
            "epsilon": H.epsilon,
            "n_modes": H.n_modes,
            "modes": H.modes[:, :2].tolist(),
            "mechanical": self.is_mechanical,
            "certificate": self.certificate,
        }
