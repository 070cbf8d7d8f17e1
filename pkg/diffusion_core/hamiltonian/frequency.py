import logging

import numpy as np

from diffusion_core.errors.exceptions import ConvexityError, InversionError

logger = logging.getLogger(__name__)

NEWTON_TOL = 1e-12
NEWTON_MAX_STEPS = 50


def frequency_map(H, I):
    """Ω(I) = ∂_I H0(I); vectorized over leading axes."""
    return H.h0.gradient(np.asarray(I, dtype=float))


def inverse_frequency(H, omega, guess=None, tol=NEWTON_TOL, max_steps=NEWTON_MAX_STEPS):
    """
    Ω⁻¹(ω) by Newton iteration on ∂_I H0(I) = ω.

    :param omega: frequency or array of frequencies (..., 2)
    :param guess: starting actions; defaults to the quadratic model at I = 0
    :return: actions with the shape of ``omega``
    """
    omega = np.asarray(omega, dtype=float)
    if guess is None:
        origin = np.zeros(2)
        hessian0 = H.h0.hessian(origin)
        actions = np.linalg.solve(hessian0, (omega - H.h0.gradient(origin))[..., None])[..., 0]
    else:
        actions = np.array(np.broadcast_to(guess, omega.shape), dtype=float)

    for step in range(max_steps):
        residual = H.h0.gradient(actions) - omega
        delta = np.linalg.solve(H.h0.hessian(actions), residual[..., None])[..., 0]
        actions = actions - delta
        if np.all(np.abs(delta) <= tol * (1.0 + np.abs(actions))):
            logger.debug("frequency inversion converged in %d steps", step + 1)
            return actions

    worst = np.unravel_index(np.argmax(np.abs(delta)), delta.shape)[:-1] if delta.ndim > 1 else ()
    raise InversionError(
        f"Newton inversion did not converge in {max_steps} steps",
        witness={
            "omega": np.asarray(omega[worst]).tolist(),
            "last_action": np.asarray(actions[worst]).tolist(),
        },
    )


def convexity_certificate(H, box, grid_n):
    """
    Smallest D with D⁻¹|v|² <= <∂²H0(I) v, v> <= D|v|² on a grid over ``box``.

    :param box: ((lo1, hi1), (lo2, hi2))
    :param grid_n: points per axis (>= 2)
    :raises ConvexityError: at the first grid point with a non-positive eigenvalue
    """
    if grid_n < 2:
        raise ValueError(f"grid_n must be at least 2, got {grid_n}")
    axes = [np.linspace(lo, hi, grid_n) for lo, hi in box]
    points = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2)
    eigenvalues = np.linalg.eigvalsh(H.h0.hessian(points))
    smallest = eigenvalues[:, 0]
    if np.any(smallest <= 0):
        index = int(np.argmax(smallest <= 0))
        raise ConvexityError(
            "Hessian of H0 has a non-positive eigenvalue",
            witness={"action": points[index].tolist(), "eigenvalues": eigenvalues[index].tolist()},
        )
    bound = max(float(np.max(eigenvalues[:, -1])), 1.0 / float(np.min(smallest)))
    logger.info("convexity certificate D=%.6g on %d grid points", bound, len(points))
    return bound
