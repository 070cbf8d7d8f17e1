"""
Fourier-polynomial Hamiltonians H(φ, I, t) = H0(I) + ε H1(φ, I, t).

Conventions used throughout the package:

* phase-space points are arrays ``(..., 5)`` ordered ``(φ1, φ2, I1, I2, t)``;
* angles and time are 2π-periodic, i.e. the unit-period time of the
  literature is ``t / 2π``; a mode ``k = (k1, k2, k0)`` has phase
  ``k1 φ1 + k2 φ2 + k0 t``;
* amplitudes ĥ_k(I) are polynomials in the actions (``polynomials`` module).
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from diffusion_core.errors.exceptions import DomainError
from diffusion_core.hamiltonian import polynomials

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
PRUNE_RELATIVE = 1e-15
SYMMETRY_TOL = 1e-12

ANGLES = (0, 1, 4)
ACTIONS = (2, 3)


@dataclass(frozen=True, eq=False)
class IntegrablePart:
    """H0(I) as a bivariate polynomial coefficient matrix."""

    coefficients: np.ndarray
    _gradient: tuple = field(init=False, repr=False)
    _hessian: tuple = field(init=False, repr=False)

    def __post_init__(self):
        coefficients = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        size = max(coefficients.shape)
        coefficients = polynomials.pad_square(coefficients, size)
        coefficients.setflags(write=False)
        object.__setattr__(self, "coefficients", coefficients)
        first = tuple(polynomials.derivative(coefficients, axis) for axis in (0, 1))
        second = tuple(
            tuple(polynomials.derivative(first[a], b) for b in (0, 1)) for a in (0, 1)
        )
        object.__setattr__(self, "_gradient", first)
        object.__setattr__(self, "_hessian", second)

    @classmethod
    def quadratic(cls, matrix, linear=(0.0, 0.0), constant=0.0):
        """½ Iᵀ Q I + b·I + c for a symmetric 2x2 matrix Q."""
        matrix = np.asarray(matrix, dtype=float)
        coefficients = np.zeros((3, 3))
        coefficients[0, 0] = constant
        coefficients[1, 0], coefficients[0, 1] = linear
        coefficients[2, 0] = 0.5 * matrix[0, 0]
        coefficients[0, 2] = 0.5 * matrix[1, 1]
        coefficients[1, 1] = 0.5 * (matrix[0, 1] + matrix[1, 0])
        return cls(coefficients)

    @classmethod
    def free(cls):
        return cls.quadratic(np.eye(2))

    @property
    def degree(self):
        return self.coefficients.shape[0] - 1

    def value(self, actions):
        actions = np.asarray(actions, dtype=float)
        return polynomials.evaluate(self.coefficients, actions)[..., 0]

    def gradient(self, actions):
        actions = np.asarray(actions, dtype=float)
        return np.stack([polynomials.evaluate(c, actions)[..., 0] for c in self._gradient], axis=-1)

    def hessian(self, actions):
        actions = np.asarray(actions, dtype=float)
        rows = [
            np.stack([polynomials.evaluate(c, actions)[..., 0] for c in row], axis=-1)
            for row in self._hessian
        ]
        return np.stack(rows, axis=-2)


@dataclass(frozen=True)
class PhaseState:
    """A point (φ, I, t); angles and time are reduced to [0, 2π)."""

    phi: tuple
    action: tuple
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "phi", tuple(float(np.mod(x, TWO_PI)) for x in self.phi))
        object.__setattr__(self, "action", tuple(float(x) for x in self.action))
        object.__setattr__(self, "time", float(np.mod(self.time, TWO_PI)))

    def as_array(self):
        return np.array([self.phi[0], self.phi[1], self.action[0], self.action[1], self.time])

    @classmethod
    def from_array(cls, z):
        z = np.asarray(z, dtype=float)
        return cls(phi=(z[0], z[1]), action=(z[2], z[3]), time=z[4])


def canonical_modes(modes, amplitudes):
    """Merge duplicate mode vectors and sort lexicographically."""
    merged = {}
    for k, amplitude in zip(map(tuple, modes), amplitudes):
        merged[k] = merged.get(k, 0) + amplitude
    keys = sorted(merged)
    if not keys:
        return np.zeros((0, 3), dtype=np.int64), np.zeros((0, 1, 1), dtype=complex)
    size = max(max(np.atleast_2d(merged[k]).shape[-2:]) for k in keys)
    stack = np.stack([polynomials.pad_square(np.atleast_2d(np.asarray(merged[k], dtype=complex)), size) for k in keys])
    return np.array(keys, dtype=np.int64).reshape(-1, 3), stack


@dataclass(frozen=True, eq=False)
class FourierHamiltonian:
    """
    H0(I) + ε Re Σ_k ĥ_k(I) exp(i k·(φ, t)).

    The mode map is stored as an integer array ``modes`` (n, 3) and a complex
    coefficient stack ``amplitudes`` (n, d+1, d+1).  It must be closed under
    k -> -k with conjugate amplitudes, so the sum itself is real.
    """

    h0: IntegrablePart
    modes: np.ndarray
    amplitudes: np.ndarray
    epsilon: float = 1.0
    regularity_r: float = 8.0
    domain: tuple | None = None
    _derivatives: dict = field(init=False, repr=False)

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}")
        if self.regularity_r <= 0:
            raise ValueError(f"regularity_r must be positive, got {self.regularity_r}")
        modes, amplitudes = canonical_modes(
            np.asarray(self.modes, dtype=np.int64).reshape(-1, 3),
            list(polynomials.as_stack(self.amplitudes)) if len(self.modes) else [],
        )
        modes, amplitudes = self._pruned(modes, amplitudes)
        self._check_symmetry(modes, amplitudes)
        modes.setflags(write=False)
        amplitudes.setflags(write=False)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "amplitudes", amplitudes)
        if self.domain is not None:
            object.__setattr__(self, "domain", tuple(tuple(float(x) for x in axis) for axis in self.domain))
        object.__setattr__(
            self,
            "_derivatives",
            {
                "d1": tuple(polynomials.derivative(amplitudes, axis) for axis in (0, 1)),
                "d2": tuple(
                    tuple(polynomials.derivative(polynomials.derivative(amplitudes, a), b) for b in (0, 1))
                    for a in (0, 1)
                ),
            },
        )

    @staticmethod
    def _pruned(modes, amplitudes):
        if len(modes) == 0:
            return modes, amplitudes
        scale = np.max(np.abs(amplitudes), axis=(-2, -1))
        keep = scale > PRUNE_RELATIVE * max(float(np.max(scale)), np.finfo(float).tiny)
        if not np.all(keep):
            logger.debug("pruned %d negligible modes", int(np.sum(~keep)))
        return modes[keep], amplitudes[keep]

    @staticmethod
    def _check_symmetry(modes, amplitudes):
        index = {tuple(k): i for i, k in enumerate(modes)}
        scale = float(np.max(np.abs(amplitudes))) if len(modes) else 0.0
        for i, k in enumerate(modes):
            j = index.get(tuple(-k))
            if j is None:
                raise ValueError(f"Mode {tuple(k)} has no conjugate partner {tuple(-k)}")
            if np.max(np.abs(amplitudes[j] - np.conj(amplitudes[i]))) > SYMMETRY_TOL * max(scale, 1.0):
                raise ValueError(f"Amplitude of {tuple(-k)} is not the conjugate of {tuple(k)}")

    # construction helpers

    @classmethod
    def from_mode_map(cls, h0, mode_map, epsilon=1.0, regularity_r=8.0, domain=None):
        keys = list(mode_map)
        amplitudes = [np.atleast_2d(np.asarray(mode_map[k], dtype=complex)) for k in keys]
        if not keys:
            return cls(h0, np.zeros((0, 3), dtype=np.int64), np.zeros((0, 1, 1), complex), epsilon, regularity_r, domain)
        size = max(max(a.shape[-2:]) for a in amplitudes)
        stack = np.stack([polynomials.pad_square(a, size) for a in amplitudes])
        return cls(h0, np.array(keys, dtype=np.int64), stack, epsilon, regularity_r, domain)

    @classmethod
    def from_cosines(cls, h0, terms, epsilon=1.0, regularity_r=8.0, domain=None):
        """
        Build H1 = Σ a(I) cos(k·(φ, t) + phase).

        :param terms: iterable of (k, a) or (k, a, phase); ``a`` is a number or
            a real coefficient matrix in the actions.
        """
        mode_map = {}
        for term in terms:
            k, amplitude = tuple(int(x) for x in term[0]), term[1]
            phase = term[2] if len(term) > 2 else 0.0
            amplitude = np.atleast_2d(np.asarray(amplitude, dtype=complex))
            for key, value in (
                (k, 0.5 * amplitude * np.exp(1j * phase)),
                (tuple(-x for x in k), 0.5 * amplitude * np.exp(-1j * phase)),
            ):
                previous = mode_map.get(key)
                if previous is not None:
                    size = max(*previous.shape[-2:], *value.shape[-2:])
                    value = polynomials.pad_square(previous, size) + polynomials.pad_square(value, size)
                mode_map[key] = value
        return cls.from_mode_map(h0, mode_map, epsilon, regularity_r, domain)

    def replace(self, **changes):
        data = {
            "h0": self.h0,
            "modes": self.modes,
            "amplitudes": self.amplitudes,
            "epsilon": self.epsilon,
            "regularity_r": self.regularity_r,
            "domain": self.domain,
        }
        data.update(changes)
        return type(self)(**data)

    def with_modes(self, modes, amplitudes):
        return self.replace(modes=modes, amplitudes=amplitudes)

    def select(self, mask):
        mask = np.asarray(mask, dtype=bool)
        return self.with_modes(self.modes[mask], self.amplitudes[mask])

    def truncate(self, K):
        """Keep |k|_∞ <= K; the complement is the Fourier tail used as mollification surrogate."""
        return self.select(np.max(np.abs(self.modes), axis=1) <= K) if len(self.modes) else self

    def mode_map(self):
        return {tuple(int(x) for x in k): self.amplitudes[i] for i, k in enumerate(self.modes)}

    @property
    def degree(self):
        return self.amplitudes.shape[-1] - 1

    @property
    def n_modes(self):
        return len(self.modes)

    # evaluation

    def check_domain(self, actions):
        if self.domain is None:
            return
        actions = np.asarray(actions, dtype=float).reshape(-1, 2)
        lower = np.array([axis[0] for axis in self.domain])
        upper = np.array([axis[1] for axis in self.domain])
        outside = np.any((actions < lower) | (actions > upper), axis=1)
        if np.any(outside):
            witness = actions[np.argmax(outside)]
            raise DomainError(
                "Action outside the domain box",
                witness={"action": witness.tolist(), "domain": [list(axis) for axis in self.domain]},
            )

    def _phase_factors(self, z):
        phases = z[..., ANGLES] @ self.modes.T.astype(float)
        return np.exp(1j * phases)

    def _terms(self, z, stack):
        return polynomials.evaluate(stack, z[..., ACTIONS]) * self._phase_factors(z)

    def value(self, z):
        z = np.asarray(z, dtype=float)
        self.check_domain(z[..., ACTIONS])
        result = self.h0.value(z[..., ACTIONS])
        if self.n_modes and self.epsilon:
            result = result + self.epsilon * np.real(np.sum(self._terms(z, self.amplitudes), axis=-1))
        return result

    def perturbation_value(self, z):
        z = np.asarray(z, dtype=float)
        if not self.n_modes:
            return np.zeros(z.shape[:-1])
        return np.real(np.sum(self._terms(z, self.amplitudes), axis=-1))

    def gradient(self, z):
        """∂H with respect to (φ1, φ2, I1, I2, t)."""
        z = np.asarray(z, dtype=float)
        self.check_domain(z[..., ACTIONS])
        grad = np.zeros(z.shape)
        grad[..., ACTIONS] = self.h0.gradient(z[..., ACTIONS])
        if self.n_modes and self.epsilon:
            factors = self._phase_factors(z)
            amplitude = polynomials.evaluate(self.amplitudes, z[..., ACTIONS]) * factors
            for column, axis in zip(ANGLES, range(3)):
                grad[..., column] += self.epsilon * np.real(np.sum(1j * self.modes[:, axis] * amplitude, axis=-1))
            for column, stack in zip(ACTIONS, self._derivatives["d1"]):
                grad[..., column] += self.epsilon * np.real(
                    np.sum(polynomials.evaluate(stack, z[..., ACTIONS]) * factors, axis=-1)
                )
        return grad

    def hessian(self, z):
        """5x5 second derivatives in the (φ1, φ2, I1, I2, t) ordering."""
        z = np.asarray(z, dtype=float)
        self.check_domain(z[..., ACTIONS])
        hess = np.zeros(z.shape + (5,))
        hess[..., 2:4, 2:4] = self.h0.hessian(z[..., ACTIONS])
        if not (self.n_modes and self.epsilon):
            return hess
        factors = self._phase_factors(z)
        actions = z[..., ACTIONS]
        amplitude = polynomials.evaluate(self.amplitudes, actions) * factors
        first = [polynomials.evaluate(stack, actions) * factors for stack in self._derivatives["d1"]]
        k = self.modes.astype(float)
        eps = self.epsilon
        for a, column_a in enumerate(ANGLES):
            for b, column_b in enumerate(ANGLES):
                hess[..., column_a, column_b] = -eps * np.real(np.sum(k[:, a] * k[:, b] * amplitude, axis=-1))
            for b, column_b in enumerate(ACTIONS):
                mixed = eps * np.real(np.sum(1j * k[:, a] * first[b], axis=-1))
                hess[..., column_a, column_b] = mixed
                hess[..., column_b, column_a] = mixed
        for a, column_a in enumerate(ACTIONS):
            for b, column_b in enumerate(ACTIONS):
                second = polynomials.evaluate(self._derivatives["d2"][a][b], actions) * factors
                hess[..., column_a, column_b] += eps * np.real(np.sum(second, axis=-1))
        return hess

    def vector_field(self, z):
        """Hamilton's equations (φ̇, İ) = (∂_I H, -∂_φ H) at extended points."""
        grad = self.gradient(z)
        return np.concatenate([grad[..., 2:4], -grad[..., 0:2]], axis=-1)


def eval_and_grad(H: FourierHamiltonian, s: PhaseState):
    """Value and 5-gradient ∂_{φ1, φ2, I1, I2, t} H at one phase state."""
    z = s.as_array()
    return float(H.value(z)), H.gradient(z)
