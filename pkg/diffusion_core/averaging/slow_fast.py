"""
Linear symplectic changes to slow and fast angles.

Angles θ = (φ1, φ2, t) map to ψ = Ã θ and extended actions (I1, I2, E) to
J = Ã^-T (I, E).  For a single resonance the rows of à are (k_n, e2, e3),
with e2 replaced by e1 when (k_n)_1 = 0; for a double resonance they are
(k, k', e3).  The inverse is assembled from integer cofactors so every
matrix identity below holds exactly in rational arithmetic.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from diffusion_core.diophantine.params import ResonanceVector
from diffusion_core.errors.exceptions import SingularityError
from diffusion_core.hamiltonian import polynomials
from diffusion_core.hamiltonian.fourier import IntegrablePart

logger = logging.getLogger(__name__)

UNIT_ROWS = ((1, 0, 0), (0, 1, 0), (0, 0, 1))


def _cofactor_inverse(matrix):
    """(adjugate, determinant) of an integer 3x3 matrix."""
    rows = np.asarray(matrix, dtype=np.int64)
    columns = np.stack([np.cross(rows[1], rows[2]), np.cross(rows[2], rows[0]), np.cross(rows[0], rows[1])], axis=1)
    return columns, int(rows[0] @ np.cross(rows[1], rows[2]))


def _rational(matrix, denominator=1):
    return np.array([[Fraction(int(x), denominator) for x in row] for row in np.asarray(matrix)], dtype=object)


@dataclass(frozen=True)
class SlowFastChange:
    """
    Usage:
        change = slow_fast_change((2, 1, 0))
        psi = change.angles(theta)
        change.is_symplectic()  # exact
    """

    matrix: tuple
    determinant: int
    slow: int
    substituted: tuple = ()

    @property
    def integer_matrix(self):
        return np.array(self.matrix, dtype=np.int64)

    @property
    def rational_inverse(self):
        adjugate, determinant = _cofactor_inverse(self.matrix)
        return _rational(adjugate, determinant)

    @property
    def inverse(self):
        adjugate, determinant = _cofactor_inverse(self.matrix)
        return adjugate / float(determinant)

    @property
    def norms(self):
        return float(np.linalg.norm(self.integer_matrix, 2)), float(np.linalg.norm(self.inverse, 2))

    def angles(self, theta):
        return np.asarray(theta, dtype=float) @ self.integer_matrix.T

    def inverse_angles(self, psi):
        return np.asarray(psi, dtype=float) @ self.inverse.T

    def actions(self, extended_actions):
        """J = Ã^-T (I1, I2, E)."""
        return np.asarray(extended_actions, dtype=float) @ self.inverse

    def inverse_actions(self, J):
        return np.asarray(J, dtype=float) @ self.integer_matrix

    def transform_mode(self, k):
        """k̃ = k Ã⁻¹ so that k·θ = k̃·ψ; rational in general."""
        row = np.array([Fraction(int(x)) for x in k], dtype=object)
        return tuple(row @ self.rational_inverse)

    def slow_only(self, modes):
        """Every transformed mode has zero fast components."""
        for k in np.asarray(modes, dtype=np.int64).reshape(-1, 3):
            if any(component != 0 for component in self.transform_mode(k)[self.slow :]):
                return False
        return True

    def compose(self, H, modes):
        """
        ℋ with ℋ(ψ, J) + J3 = H + E.

        Amplitudes are composed with I = Ã[:2, :2]ᵀ J and E adds the linear
        term Ã[:2, 2]·J; ``modes`` are the integer modes already in the ψ basis.
        """
        matrix = self.integer_matrix
        linear = matrix[:2, :2].T.astype(float)
        origin = np.zeros(2)
        h0 = polynomials.affine_compose(H.h0.coefficients, linear, origin)
        h0 = polynomials.pad_square(h0, max(2, h0.shape[-1]))
        h0[1, 0] += matrix[0, 2]
        h0[0, 1] += matrix[1, 2]
        amplitudes = polynomials.affine_compose_stack(H.amplitudes, linear, origin)
        return H.replace(
            h0=IntegrablePart(np.real(h0)),
            modes=np.asarray(modes, dtype=np.int64).reshape(-1, 3),
            amplitudes=amplitudes,
            domain=None,
        )

    def evaluate(self, H, psi, J):
        """H + E at the point with new coordinates (ψ, J)."""
        theta = self.inverse_angles(psi)
        extended = self.inverse_actions(J)
        z = np.concatenate([theta[..., :2], extended[..., :2], theta[..., 2:]], axis=-1)
        return H.value(z) + extended[..., 2]

    def is_symplectic(self):
        """Mᵀ Ω M = Ω for M = diag(Ã, Ã^-T), checked in exact rational arithmetic."""
        forward = _rational(self.matrix)
        inverse_transpose = self.rational_inverse.T
        zero = _rational(np.zeros((3, 3), dtype=np.int64))
        identity = _rational(np.eye(3, dtype=np.int64))
        M = np.block([[forward, zero], [zero, inverse_transpose]])
        omega = np.block([[zero, identity], [-identity, zero]])
        return bool(np.all(M.T @ omega @ M == omega))

    def as_dict(self):
        forward_norm, inverse_norm = self.norms
        return {
            "matrix": [list(row) for row in self.matrix],
            "determinant": self.determinant,
            "slow": self.slow,
            "substituted": list(self.substituted),
            "norm": forward_norm,
            "inverse_norm": inverse_norm,
        }


def slow_fast_change(k_n, k_prime=None):
    """
    :param k_n: resonance vector, or the first of a double-resonance pair
    :param k_prime: second vector of a double resonance
    :raises SingularityError: the double-resonance rows are dependent
    """
    first = ResonanceVector(k_n).k
    if k_prime is None:
        for substituted, rows in (((), UNIT_ROWS[1:]), (("e2 -> e1",), (UNIT_ROWS[0], UNIT_ROWS[2]))):
            matrix = (first,) + tuple(rows)
            determinant = _cofactor_inverse(matrix)[1]
            if determinant:
                if substituted:
                    logger.debug("slow-fast change for %s uses substituted rows %s", first, substituted)
                return SlowFastChange(matrix, determinant, slow=1, substituted=substituted)
        raise SingularityError(f"No coordinate rows complete {first}", witness={"k": list(first)})

    second = ResonanceVector(k_prime).k
    matrix = (first, second, UNIT_ROWS[2])
    determinant = _cofactor_inverse(matrix)[1]
    if not determinant:
        raise SingularityError(
            f"{first} and {second} have parallel planar parts",
            witness={"k": list(first), "k_prime": list(second)},
        )
    return SlowFastChange(matrix, determinant, slow=2)
