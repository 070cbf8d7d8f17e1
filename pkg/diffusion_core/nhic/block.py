"""
Straightened saddle coordinates and the isolating block around a branch.

In the straightened frame (ψ^s, J^s) = c(J^f) + P(J^f)(x, y) the truncated
linearization is diag(λ, -λ).  The block V = {|x|, |y| <= η} is isolating
when x expands across the x-faces and y contracts across the y-faces at the
rate α = λ/2; m̂ then bounds the nonlinear and coupling derivatives and gives
the cone constant K = m̂ / (α - 2m̂).
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from diffusion_core.errors.exceptions import BlockFailureError
from diffusion_core.hamiltonian import polynomials
from diffusion_core.hamiltonian.norms import action_radius, fourier_norm_bound
from diffusion_core.nhic.saddle import TWO_PI, wrap

logger = logging.getLogger(__name__)

FACE_POINTS = 64
ANGLE_SAMPLES = 8
INTERIOR_POINTS = 5
INTERIOR_ANGLES = 4
JACOBIAN_STEP = 1e-6
CONE_LIMIT = 1.0 / np.sqrt(2.0)


def cubic_bound(H, box=None):
    """Sup bound of the third derivatives of H on the action box."""
    radius = action_radius(H, box)
    h0 = 0.0
    for order in range(4):
        stack = polynomials.derivative(polynomials.derivative(H.h0.coefficients, 0, order), 1, 3 - order)
        h0 = max(h0, float(np.max(polynomials.sup_bound(stack, radius))))
    perturbation = H.epsilon * fourier_norm_bound(H, 3, box=box).bound if H.n_modes else 0.0
    return h0 + perturbation


def extended_point(branch, x, y, psi_f, jf, t):
    """(ψ^s, ψ^f, J^s, J^f, t) of straightened coordinates."""
    center, P, _, _ = branch.frame(jf)
    w = np.stack(np.broadcast_arrays(x, y), axis=-1)
    slow = center + np.einsum("...ij,...j->...i", P, w)
    return np.stack(np.broadcast_arrays(slow[..., 0], psi_f, slow[..., 1], jf, t), axis=-1)


def straight_coordinates(branch, z):
    """(x, y) of extended points ``z`` (..., 5)."""
    z = np.asarray(z, dtype=float)
    center, P, _, _ = branch.frame(z[..., 3])
    offset = np.stack([wrap(z[..., 0] - center[..., 0]), z[..., 2] - center[..., 1]], axis=-1)
    xy = np.linalg.solve(P, offset[..., None])[..., 0]
    return xy[..., 0], xy[..., 1]


def straight_velocity(branch, H, x, y, psi_f, jf, t):
    """
    (ẋ, ẏ, ψ̇^f, J̇^f) in the moving straightened frame.

    ẇ = c' J̇^f + P' (x, y) J̇^f + P (ẋ, ẏ) for the slow pair w = (ψ^s, J^s).
    """
    x, y, psi_f, jf, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, psi_f, jf, t)))
    center, P, d_center, d_P = branch.frame(jf)
    w = np.stack([x, y], axis=-1)
    slow = center + np.einsum("...ij,...j->...i", P, w)
    z = np.stack([slow[..., 0], psi_f, slow[..., 1], jf, t], axis=-1)
    v = H.vector_field(z)
    jf_dot = v[..., 3]
    drift = d_center + np.einsum("...ij,...j->...i", d_P, w)
    rhs = v[..., [0, 2]] - jf_dot[..., None] * drift
    xy_dot = np.linalg.solve(P, rhs[..., None])[..., 0]
    return xy_dot[..., 0], xy_dot[..., 1], v[..., 1], jf_dot


@dataclass(frozen=True, eq=False)
class IsolatingBlock:
    """
    Usage:
        block = straighten_and_block(branch, full)
        block.verified          # K <= 1/√2
        block.margins["x+"]     # worst ẋx - αx² on that face
    """

    branch: object
    hamiltonian: object
    eta: float
    nu: float
    gamma: float
    m_hat: float
    K: float
    margins: dict = field(default_factory=dict)
    face_points: int = FACE_POINTS

    @property
    def alpha(self):
        return 0.5 * self.branch.lam

    @property
    def verified(self):
        return bool(self.K <= CONE_LIMIT)

    def coordinates(self, z):
        return straight_coordinates(self.branch, z)

    def point(self, x, y, psi_f, jf, t):
        return extended_point(self.branch, x, y, psi_f, jf, t)

    def velocity(self, x, y, psi_f, jf, t):
        return straight_velocity(self.branch, self.hamiltonian, x, y, psi_f, jf, t)

    def contains(self, z):
        x, y = self.coordinates(z)
        lo, hi = self.branch.interval
        jf = np.asarray(z)[..., 3]
        return (np.abs(x) <= self.eta) & (np.abs(y) <= self.eta) & (jf >= lo) & (jf <= hi)

    def as_dict(self):
        return {
            "eta": self.eta,
            "nu": self.nu,
            "gamma": self.gamma,
            "alpha_min": float(np.min(self.alpha)),
            "m_hat": self.m_hat,
            "K": self.K,
            "verified": self.verified,
            "margins": dict(self.margins),
            "face_points": self.face_points,
        }


def _face_samples(eta, face_points, angle_samples):
    s = np.linspace(-eta, eta, face_points)
    return {
        "x+": (np.full_like(s, eta), s),
        "x-": (np.full_like(s, -eta), s),
        "y+": (s, np.full_like(s, eta)),
        "y-": (s, np.full_like(s, -eta)),
    }, np.arange(angle_samples) * TWO_PI / angle_samples


def _check_faces(branch, H, eta, face_points, angle_samples):
    faces, angles = _face_samples(eta, face_points, angle_samples)
    alpha = 0.5 * branch.lam
    margins = {}
    for name, (x, y) in faces.items():
        # axes: node, face point, ψ^f, t
        shape = (len(branch.jf), face_points, angle_samples, angle_samples)
        X = np.broadcast_to(x[None, :, None, None], shape)
        Y = np.broadcast_to(y[None, :, None, None], shape)
        psi_f = np.broadcast_to(angles[None, None, :, None], shape)
        t = np.broadcast_to(angles[None, None, None, :], shape)
        jf = np.broadcast_to(branch.jf[:, None, None, None], shape)
        a = np.broadcast_to(alpha[:, None, None, None], shape)
        x_dot, y_dot, _, _ = straight_velocity(branch, H, X, Y, psi_f, jf, t)
        if name[0] == "x":
            margin = x_dot * X - a * X**2
        else:
            margin = -a * Y**2 - y_dot * Y
        worst = np.unravel_index(np.argmin(margin), shape)
        margins[name] = float(margin[worst] / eta**2)
        if margin[worst] < 0:
            point = [float(v[worst]) for v in (X, Y, psi_f, jf, t)]
            raise BlockFailureError(
                witness={
                    "face": name,
                    "point": dict(zip(("x", "y", "psi_f", "jf", "t"), point)),
                    "rate": float((x_dot * X if name[0] == "x" else y_dot * Y)[worst]),
                    "required": float((a * X**2 if name[0] == "x" else -a * Y**2)[worst]),
                }
            )
    return margins


def _coupling_bound(branch, H, eta, nu, gamma):
    """
    m̂: largest entry of ∂N/∂(x, y, Θ, I) and ∂(Θ̇, İ)/∂(x, y), with
    N = (ẋ - λx, ẏ + λy), Θ = γψ^f and I = ν⁻¹(J^f - J^f_node).
    """
    s = np.linspace(-eta, eta, INTERIOR_POINTS)
    angles = np.arange(INTERIOR_ANGLES) * TWO_PI / INTERIOR_ANGLES
    X, Y, Psi, Jf, T = np.meshgrid(s, s, angles, branch.jf, angles, indexing="ij")

    def coupled(x, y, theta, action):
        jf = Jf + nu * action
        lam = branch.rate(jf)
        x_dot, y_dot, psi_dot, jf_dot = straight_velocity(branch, H, x, y, theta / gamma, jf, T)
        return np.stack([x_dot - lam * x, y_dot + lam * y, gamma * psi_dot, jf_dot / nu])

    base = [X, Y, gamma * Psi, np.zeros_like(X)]
    h = JACOBIAN_STEP
    m_hat = 0.0
    for variable in range(4):
        plus, minus = list(base), list(base)
        plus[variable] = base[variable] + h
        minus[variable] = base[variable] - h
        derivative = (coupled(*plus) - coupled(*minus)) / (2 * h)
        m_hat = max(m_hat, float(np.max(np.abs(derivative[:2]))))
        if variable < 2:
            m_hat = max(m_hat, float(np.max(np.abs(derivative[2:]))))
    return m_hat


def straighten_and_block(branch, full, eta=None, nu=None, gamma=None, face_points=FACE_POINTS, angle_samples=ANGLE_SAMPLES):
    """
    Verify the isolating block of half-width η around ``branch`` for the full system.

    :param full: the reduced Hamiltonian including the non-truncated modes
    :param eta: defaults to λ_min² / (4 ‖∂³ℋ‖) of the truncation
    :param nu: I-scaling, defaults to min(1, λ_min)
    :param gamma: Θ-scaling, defaults to min(1, λ_min)
    :raises BlockFailureError: a cone condition fails on the boundary; the
        witness holds the face and the point
    """
    if face_points < FACE_POINTS:
        raise ValueError(f"face_points must be at least {FACE_POINTS}, got {face_points}")
    lam_min = float(np.min(branch.lam))
    if eta is None:
        eta = lam_min**2 / (4 * max(cubic_bound(branch.hamiltonian), np.finfo(float).tiny))
    nu = min(1.0, lam_min) if nu is None else nu
    gamma = min(1.0, lam_min) if gamma is None else gamma

    margins = _check_faces(branch, full, eta, face_points, angle_samples)
    m_hat = _coupling_bound(branch, full, eta, nu, gamma)
    alpha_min = 0.5 * lam_min
    K = m_hat / (alpha_min - 2 * m_hat) if alpha_min > 2 * m_hat else float("inf")
    block = IsolatingBlock(branch, full, float(eta), float(nu), float(gamma), m_hat, K, margins, face_points)
    if block.verified:
        logger.info("isolating block η=%.3e verified with m̂=%.3e, K=%.3f", eta, m_hat, K)
    else:
        logger.warning("isolating block η=%.3e has K=%.3f above 1/√2", eta, K)
    return block
