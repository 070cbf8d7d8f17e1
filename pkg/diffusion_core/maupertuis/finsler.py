"""
The Jacobi–Finsler metric of an energy level.

δ_E(x, v) = max {⟨J, v⟩ : ℋ(x, J) <= E} is the support function of the
sublevel set in the fibre over x.  At the maximizer J* the gradient ∂_J ℋ
is parallel to v, v = μ ∂_J ℋ(x, J*), and the multiplier μ is the time the
Hamiltonian flow spends on the chord v; it is also dδ_E/dE.
"""
import logging
from dataclasses import dataclass

import numpy as np

from diffusion_core.errors.exceptions import MetricError

logger = logging.getLogger(__name__)

SUPPORT_TOL = 1e-13
SUPPORT_MAX_STEPS = 60
ENERGY_MARGIN = 1e-14


@dataclass(frozen=True)
class SupportPoint:
    """δ_E(x, v), its maximizer J* and multiplier μ, all with the batch shape of x."""

    delta: np.ndarray
    J: np.ndarray
    mu: np.ndarray


def _newton_system(H, x, J, mu, v, E):
    z = np.concatenate([x, J], axis=-1)
    grad = H.gradient(z)[..., 2:]
    hess = H.hessian(z)[..., 2:, 2:]
    residual = np.concatenate([mu[..., None] * grad - v, (H.value(z) - E)[..., None]], axis=-1)
    jacobian = np.zeros(x.shape[:-1] + (3, 3))
    jacobian[..., :2, :2] = mu[..., None, None] * hess
    jacobian[..., :2, 2] = grad
    jacobian[..., 2, :2] = grad
    return residual, jacobian


def support(H, E, x, v, tol=SUPPORT_TOL, max_steps=SUPPORT_MAX_STEPS):
    """
    Maximize ⟨J, v⟩ on {ℋ(x, ·) <= E} by Newton on the boundary equations
    μ ∂_J ℋ = v, ℋ = E, started from the quadratic model at the fibre minimum.

    :raises MetricError: E does not exceed the fibre minimum at some x, or
        Newton does not settle; the witness holds the node
    """
    x, v = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(v, dtype=float))
    shape = x.shape[:-1]
    x, v = x.reshape(-1, 2), v.reshape(-1, 2)
    floor, J_min = H.fibre_minimum(x)
    below = E - floor <= ENERGY_MARGIN * max(1.0, abs(E))
    if np.any(below):
        index = int(np.argmax(below))
        raise MetricError(
            "energy does not exceed the fibre minimum",
            witness={"x": x[index].tolist(), "energy": E, "fibre_minimum": float(floor[index])},
        )
    moving = np.linalg.norm(v, axis=-1) > 0
    Q = H.hessian(np.concatenate([x, J_min], axis=-1))[..., 2:, 2:]
    direction = np.linalg.solve(Q, v[..., None])[..., 0]
    curvature = np.maximum(np.einsum("...i,...i->...", v, direction), np.finfo(float).tiny)
    scale = np.sqrt(2 * (E - floor) / curvature)
    J = J_min + scale[:, None] * direction
    mu = np.where(moving, 1.0 / scale, 0.0)

    active = moving.copy()
    for _ in range(max_steps):
        if not np.any(active):
            break
        residual, jacobian = _newton_system(H, x[active], J[active], mu[active], v[active], E)
        step = np.linalg.solve(jacobian, residual[..., None])[..., 0]
        J[active] -= step[:, :2]
        mu[active] -= step[:, 2]
        size = np.linalg.norm(step, axis=-1)
        done = size <= tol * (1.0 + np.linalg.norm(J[active], axis=-1) + mu[active])
        active[np.flatnonzero(active)[done]] = False
    if np.any(active):
        index = int(np.argmax(active))
        raise MetricError(
            "support function maximization did not converge",
            witness={"x": x[index].tolist(), "v": v[index].tolist(), "energy": E},
        )
    J = np.where(moving[:, None], J, J_min)
    delta = np.einsum("...i,...i->...", J, v)
    return SupportPoint(delta.reshape(shape), J.reshape(shape + (2,)), mu.reshape(shape))


@dataclass(frozen=True, eq=False)
class FinslerMetric:
    """
    Usage:
        metric = FinslerMetric(H, E)
        metric(x, v)              # δ_E(x, v)
        metric.length(curve)      # ℓ_E by midpoint quadrature
    """

    hamiltonian: object
    energy: float

    def __call__(self, x, v):
        return self.support(x, v).delta

    def support(self, x, v):
        return support(self.hamiltonian, self.energy, x, v)

    def gradient(self, x, v):
        """(∂_x δ, ∂_v δ, μ) by the envelope theorem: -μ ∂_ψ ℋ(x, J*) and J*."""
        point = self.support(x, v)
        z = np.concatenate([np.broadcast_to(x, point.J.shape), point.J], axis=-1)
        d_x = -point.mu[..., None] * self.hamiltonian.gradient(z)[..., :2]
        return point, d_x, point.J

    def length(self, curve):
        midpoints, chords = curve.segments()
        return float(np.sum(self(midpoints, chords)))

    def length_and_gradient(self, curve):
        """ℓ_E and its derivative with respect to the curve nodes (M, 2)."""
        midpoints, chords = curve.segments()
        point, d_x, d_v = self.gradient(midpoints, chords)
        # segment i joins node i to node i + 1
        grad = 0.5 * (d_x + np.roll(d_x, 1, axis=0)) - d_v + np.roll(d_v, 1, axis=0)
        return float(np.sum(point.delta)), grad

    def period(self, curve):
        """Σ μ over segments: the Euler–Lagrange time along the curve, and dℓ_E/dE."""
        midpoints, chords = curve.segments()
        return float(np.sum(self.support(midpoints, chords).mu))

    def sample_checks(self, rng, count=100, scale=2.0):
        """
        Worst violations of homogeneity and midpoint convexity on random samples.

        :return: {"homogeneity": max |δ(x, s v) - s δ(x, v)|, "convexity": max of
            δ(x, (v + w)/2) - (δ(x, v) + δ(x, w))/2, clipped below at 0}
        """
        x = rng.uniform(0, 2 * np.pi, size=(count, 2))
        v = rng.normal(size=(count, 2))
        w = rng.normal(size=(count, 2))
        s = rng.uniform(0.1, scale, size=count)
        base = self(x, v)
        homogeneity = np.max(np.abs(self(x, s[:, None] * v) - s * base))
        convexity = np.max(self(x, 0.5 * (v + w)) - 0.5 * (base + self(x, w)))
        return {"homogeneity": float(homogeneity), "convexity": float(max(convexity, 0.0))}


def finsler_length(H, E, curve):
    return FinslerMetric(H, E).length(curve)


def legendre_lagrangian(H, x, velocity, tol=SUPPORT_TOL, max_steps=SUPPORT_MAX_STEPS):
    """
    L(x, q̇) = max_J ⟨J, q̇⟩ - ℋ(x, J), by Newton on ∂_J ℋ(x, J) = q̇.

    :raises MetricError: Newton does not settle
    """
    x, velocity = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(velocity, dtype=float))
    _, J = H.fibre_minimum(x)
    for _ in range(max_steps):
        z = np.concatenate([x, J], axis=-1)
        residual = H.gradient(z)[..., 2:] - velocity
        step = np.linalg.solve(H.hessian(z)[..., 2:, 2:], residual[..., None])[..., 0]
        J = J - step
        if np.max(np.abs(step), initial=0.0) <= tol * (1.0 + np.max(np.abs(J), initial=0.0)):
            z = np.concatenate([x, J], axis=-1)
            return np.einsum("...i,...i->...", J, velocity) - H.value(z)
    raise MetricError("Legendre transform did not converge", witness={"velocity": np.asarray(velocity).tolist()})


def maupertuis_action(H, E, curve):
    """
    Σ (L + E) dt along the curve traversed with the Euler–Lagrange timing,
    computed from the Lagrangian side.  Equals ℓ_E(curve).
    """
    midpoints, chords = curve.segments()
    dt = support(H, E, midpoints, chords).mu
    lagrangian = legendre_lagrangian(H, midpoints, chords / dt[:, None])
    return float(np.sum((lagrangian + E) * dt))
