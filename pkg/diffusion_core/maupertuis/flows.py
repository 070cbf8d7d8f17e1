"""Trajectories, monodromy matrices and the time-reversing involution."""
import logging

import numpy as np
from scipy.integrate import solve_ivp

from diffusion_core.errors.exceptions import StepError
from diffusion_core.hamiltonian.integrator import ENSEMBLE_ATOL, ENSEMBLE_RTOL
from diffusion_core.maupertuis.two_dof import OMEGA

logger = logging.getLogger(__name__)


def flow(H, state, T, t_eval=None, events=None, dense_output=False, rtol=ENSEMBLE_RTOL, atol=ENSEMBLE_ATOL):
    """
    Integrate Hamilton's equations of a TwoDofHamiltonian from ``state``.

    Angles are integrated on the lift, so displacements keep their winding.

    :return: the scipy OdeResult
    :raises StepError: the integrator gives up
    """
    state = np.asarray(state, dtype=float)
    solution = solve_ivp(
        lambda _, x: H.vector_field(x),
        (0.0, T),
        state,
        method="DOP853",
        t_eval=t_eval,
        events=events,
        dense_output=dense_output,
        rtol=rtol,
        atol=atol,
    )
    if solution.status < 0:
        raise StepError(f"flow failed: {solution.message}", witness={"state": state.tolist(), "T": T})
    return solution


def monodromy(H, state, T, rtol=ENSEMBLE_RTOL, atol=ENSEMBLE_ATOL):
    """
    Final state and the 4x4 derivative of the time-T map at ``state``.

    The variational equation Ẏ = Ω ∂²ℋ(x) Y is integrated alongside the orbit.
    """

    def rhs(_, y):
        x, Y = y[:4], y[4:].reshape(4, 4)
        return np.concatenate([H.vector_field(x), (OMEGA @ H.hessian(x) @ Y).ravel()])

    y0 = np.concatenate([np.asarray(state, dtype=float), np.eye(4).ravel()])
    solution = solve_ivp(rhs, (0.0, T), y0, method="DOP853", rtol=rtol, atol=atol)
    if not solution.success:
        raise StepError(f"variational flow failed: {solution.message}", witness={"state": list(state), "T": T})
    final = solution.y[:, -1]
    logger.debug("monodromy over T=%.6g in %d steps", T, solution.t.size)
    return final[:4], final[4:].reshape(4, 4)


def floquet_multipliers(H, state, T):
    """Eigenvalues of the monodromy matrix, ordered by modulus."""
    _, M = monodromy(H, state, T)
    multipliers = np.linalg.eigvals(M)
    return multipliers[np.argsort(np.abs(multipliers))]


def is_hyperbolic(multipliers, tol=1e-6):
    """Real multipliers with the extreme pair off the unit circle."""
    multipliers = np.asarray(multipliers)
    if np.max(np.abs(multipliers.imag)) > tol * max(1.0, float(np.max(np.abs(multipliers)))):
        return False
    modulus = np.abs(multipliers.real)
    return bool(np.log(np.max(modulus)) > tol and np.log(np.min(modulus)) < -tol)


def involution(states, times=None):
    """
    Image under (ψ, J, t) -> (ψ, -J, -t).

    For a sampled orbit the order is reversed so the image is again traversed
    forward in time.
    """
    states = np.array(states, dtype=float)
    states[..., 2:4] *= -1
    if times is None:
        return states
    return states[::-1], -np.asarray(times, dtype=float)[::-1]
