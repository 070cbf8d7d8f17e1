import numpy as np


def random_states(rng, count, action_scale=1.0):
    """Extended points (φ1, φ2, I1, I2, t) with uniform angles and actions in a box."""
    states = np.empty((count, 5))
    states[:, [0, 1, 4]] = rng.uniform(0, 2 * np.pi, size=(count, 3))
    states[:, 2:4] = rng.uniform(-action_scale, action_scale, size=(count, 2))
    return states


def central_gradient(function, z, step=1e-5):
    grad = np.zeros(5)
    for axis in range(5):
        shift = np.zeros(5)
        shift[axis] = step
        grad[axis] = (function(z + shift) - function(z - shift)) / (2 * step)
    return grad


NET_DOMAIN = ((0.3, 0.5), (0.3, 0.5))

# pipeline documents without the resonance net, or with the Hamiltonian alone
WITHOUT_TREE = {"tree": None}
HAMILTONIAN_ONLY = {"tree": None, "normal_form": None, "potential": None}
