"""
Helpers for bivariate polynomials in the actions, stored as coefficient
matrices ``c[i, j]`` of ``I1**i * I2**j`` (numpy.polynomial convention), or as
stacks ``c[n, i, j]`` with one matrix per Fourier mode.
"""
import numpy as np
from numpy.polynomial import polynomial as P
from scipy import signal


def as_stack(coefficients, dtype=complex):
    stack = np.asarray(coefficients, dtype=dtype)
    if stack.ndim == 2:
        stack = stack[None, :, :]
    return stack


def pad_square(coefficients, size):
    """Zero-pad the trailing two axes of a coefficient array to ``size x size``."""
    coefficients = np.asarray(coefficients)
    rows, cols = coefficients.shape[-2:]
    if rows > size or cols > size:
        if np.any(coefficients[..., size:, :]) or np.any(coefficients[..., :, size:]):
            raise ValueError(f"Cannot shrink polynomial of degree {max(rows, cols) - 1} to {size - 1}")
        return coefficients[..., :size, :size]
    widths = [(0, 0)] * (coefficients.ndim - 2) + [(0, size - rows), (0, size - cols)]
    return np.pad(coefficients, widths)


def trim_degree(stack, tol=0.0):
    """Drop trailing all-zero rows/columns shared by every matrix in the stack."""
    stack = np.asarray(stack)
    size = stack.shape[-1]
    while size > 1:
        edge = np.concatenate(
            [stack[..., size - 1, :size].ravel(), stack[..., :size, size - 1].ravel()]
        )
        if np.any(np.abs(edge) > tol):
            break
        size -= 1
    return stack[..., :size, :size]


def derivative(stack, axis, order=1):
    """d/dI_axis of every matrix in the stack, keeping the matrix shape."""
    stack = np.asarray(stack)
    if stack.size == 0:
        return stack.copy()
    size = stack.shape[-1]
    result = P.polyder(stack, m=order, axis=stack.ndim - 2 + axis)
    return pad_square(result, size)


def evaluate(stack, actions):
    """Evaluate a stack ``(n, d+1, d+1)`` at actions ``(..., 2)`` -> ``(..., n)``."""
    stack = as_stack(stack, dtype=np.result_type(stack, float))
    degree = stack.shape[-1] - 1
    actions = np.asarray(actions, dtype=float)
    if stack.shape[0] == 0:
        return np.zeros(actions.shape[:-1] + (0,), dtype=stack.dtype)
    vander = P.polyvander2d(actions[..., 0], actions[..., 1], [degree, degree])
    # polyvander2d promotes 0-d inputs to shape (1,)
    vander = vander.reshape(actions.shape[:-1] + (-1,))
    return vander @ stack.reshape(stack.shape[0], -1).T


def product(left, right):
    """Product of two coefficient matrices via 2-D convolution."""
    return signal.convolve2d(np.atleast_2d(left), np.atleast_2d(right))


def affine_compose(coefficients, matrix, offset):
    """
    Coefficients of ``p(M @ x + b)`` for a single matrix ``p``.

    :param coefficients: (d+1, d+1) coefficient matrix of p
    :param matrix: 2x2 real matrix M
    :param offset: 2-vector b
    :return: coefficient matrix in x, trimmed to its actual degree
    """
    coefficients = np.atleast_2d(coefficients)
    degree = coefficients.shape[-1] - 1
    matrix = np.asarray(matrix, dtype=float)
    offset = np.asarray(offset, dtype=float)
    # linear forms b_r + M_r0 x1 + M_r1 x2
    powers = []
    for row in range(2):
        form = np.zeros((2, 2))
        form[0, 0] = offset[row]
        form[1, 0] = matrix[row, 0]
        form[0, 1] = matrix[row, 1]
        table = [np.ones((1, 1))]
        for _ in range(degree):
            table.append(product(table[-1], form))
        powers.append(table)

    size = 2 * degree + 1
    result = np.zeros((size, size), dtype=np.result_type(coefficients, float))
    for i in range(degree + 1):
        for j in range(degree + 1):
            if coefficients[i, j] == 0:
                continue
            term = product(powers[0][i], powers[1][j])
            result[: term.shape[0], : term.shape[1]] += coefficients[i, j] * term
    return trim_degree(result)


def affine_compose_stack(stack, matrix, offset):
    stack = np.asarray(stack)
    if stack.shape[0] == 0:
        return stack
    composed = [affine_compose(coefficients, matrix, offset) for coefficients in stack]
    size = max(item.shape[-1] for item in composed)
    return np.stack([pad_square(item, size) for item in composed])


def sup_bound(stack, radius):
    """Upper bound of |p(I)| for |I1| <= r1, |I2| <= r2 from absolute coefficients."""
    stack = as_stack(stack)
    degree = stack.shape[-1] - 1
    radius = np.broadcast_to(np.asarray(radius, dtype=float), (2,))
    weights = np.outer(radius[0] ** np.arange(degree + 1), radius[1] ** np.arange(degree + 1))
    return np.sum(np.abs(stack) * weights, axis=(-2, -1))


def chebyshev_nodes(lower, upper, count):
    nodes = np.cos(np.pi * (np.arange(count) + 0.5) / count)
    return 0.5 * (lower + upper) + 0.5 * (upper - lower) * nodes


def fit(values, actions, degree):
    """
    Least-squares fit of samples ``values[m, n]`` at ``actions[m, 2]``
    by one degree-``degree`` polynomial per column; returns (stack, max residual).
    """
    vander = P.polyvander2d(actions[:, 0], actions[:, 1], [degree, degree])
    solution, *_ = np.linalg.lstsq(vander, values, rcond=None)
    stack = solution.T.reshape(values.shape[1], degree + 1, degree + 1)
    residual = float(np.max(np.abs(vander @ solution - values))) if values.size else 0.0
    return stack, residual
