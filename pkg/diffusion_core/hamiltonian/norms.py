import logging
from dataclasses import dataclass

import numpy as np

from diffusion_core.hamiltonian import polynomials
from diffusion_core.hamiltonian.fourier import TWO_PI

logger = logging.getLogger(__name__)

# number of angles (φ1, φ2, t) entering the tail scaling K^(m - r + ell + 1)
ANGLE_COUNT = 3


@dataclass(frozen=True)
class NormBound:
    bound: float
    ell: int
    cutoff: int | None = None
    tail: float = 0.0
    tail_exponent: float | None = None
    tail_constant: float | None = None

    def __float__(self):
        return self.bound

    def as_dict(self):
        return {
            "bound": self.bound,
            "ell": self.ell,
            "cutoff": self.cutoff,
            "tail": self.tail,
            "tail_exponent": self.tail_exponent,
            "tail_constant": self.tail_constant,
        }


def action_radius(H, box=None):
    box = box if box is not None else H.domain
    if box is None:
        return np.ones(2)
    return np.array([max(abs(lo), abs(hi)) for lo, hi in box])


def mode_weights(H, ell, box=None):
    """|ĥ_k|·[k]^ell per mode with [k] = max(1, |k|_∞) and |ĥ_k| a sup bound over the box."""
    if not H.n_modes:
        return np.zeros(0)
    sizes = np.maximum(1, np.max(np.abs(H.modes), axis=1)).astype(float)
    return polynomials.sup_bound(H.amplitudes, action_radius(H, box)) * sizes**ell


def fourier_norm_bound(H, ell, K=None, box=None):
    """
    C^ell bound Σ_k |ĥ_k| [k]^ell of the perturbation H1 (without ε).

    With a cutoff K the tail Σ_{|k|>K} is reported together with the measured
    constant of the K^(m - r + ell + 1) law; ``H.truncate(K)`` removes it.

    Usage:
        fourier_norm_bound(H, 2).bound
        fourier_norm_bound(H, 0, K=8).tail_constant
    """
    if ell > H.regularity_r:
        raise ValueError(f"ell={ell} exceeds the declared regularity r={H.regularity_r}")
    weights = mode_weights(H, ell, box)
    total = float(np.sum(weights))
    if K is None:
        return NormBound(bound=total, ell=ell)

    sizes = np.max(np.abs(H.modes), axis=1) if H.n_modes else np.zeros(0)
    tail = float(np.sum(weights[sizes > K]))
    exponent = ANGLE_COUNT - H.regularity_r + ell + 1
    constant = tail / float(K) ** exponent if K > 0 else None
    logger.debug("tail beyond K=%d: %.3e (constant %.3e)", K, tail, constant or 0.0)
    return NormBound(
        bound=total,
        ell=ell,
        cutoff=K,
        tail=tail,
        tail_exponent=exponent,
        tail_constant=constant,
    )


def angular_derivative_sup(H, alpha, actions, grid=32):
    """
    Grid maximum of |∂^alpha H1| over the angle torus at fixed actions.

    :param alpha: derivative orders along (φ1, φ2, t)
    :param actions: (m, 2) action samples
    """
    if not H.n_modes:
        return 0.0
    nodes = np.arange(grid) * TWO_PI / grid
    angles = np.stack(np.meshgrid(nodes, nodes, nodes, indexing="ij"), axis=-1).reshape(-1, 3)
    factor = np.ones(H.n_modes, dtype=complex)
    for axis, order in enumerate(alpha):
        if order:
            factor = factor * (1j * H.modes[:, axis]) ** order
    best = 0.0
    for action in np.atleast_2d(actions):
        amplitude = polynomials.evaluate(H.amplitudes, action[None])[0] * factor
        values = np.real(np.exp(1j * angles @ H.modes.T.astype(float)) @ amplitude)
        best = max(best, float(np.max(np.abs(values))))
    return best


def grid_sup_norm(H, box, grid=32, action_nodes=5, include_epsilon=True):
    """
    C⁰ norm surrogate of the perturbation: maximum over a grid^3 angle grid
    times an action_nodes^2 grid of the box.
    """
    axes = [np.linspace(lo, hi, action_nodes) for lo, hi in box]
    actions = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2)
    value = angular_derivative_sup(H, (0, 0, 0), actions, grid)
    return value * (H.epsilon if include_epsilon else 1.0)
