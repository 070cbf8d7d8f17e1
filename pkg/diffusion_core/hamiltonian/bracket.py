"""Exact algebra on Fourier-polynomial Hamiltonians."""
import numpy as np

from diffusion_core.hamiltonian import polynomials
from diffusion_core.hamiltonian.fourier import FourierHamiltonian, IntegrablePart


def zero_integrable():
    return IntegrablePart(np.zeros((1, 1)))


def scaled_mode_map(H, include_h0=False):
    """{k: ε ĥ_k} with the optional H0 folded into the k = 0 entry."""
    mode_map = {k: H.epsilon * amplitude for k, amplitude in H.mode_map().items()}
    if include_h0:
        h0 = H.h0.coefficients.astype(complex)
        current = mode_map.get((0, 0, 0))
        if current is not None:
            size = max(current.shape[-1], h0.shape[-1])
            h0 = polynomials.pad_square(h0, size) + polynomials.pad_square(current, size)
        mode_map[(0, 0, 0)] = h0
    return mode_map


def from_scaled_map(mode_map, h0=None, regularity_r=8.0, domain=None):
    return FourierHamiltonian.from_mode_map(
        h0 if h0 is not None else zero_integrable(),
        mode_map,
        epsilon=1.0,
        regularity_r=regularity_r,
        domain=domain,
    )


def add_maps(*mode_maps, weights=None):
    weights = weights or [1.0] * len(mode_maps)
    merged = {}
    for weight, mode_map in zip(weights, mode_maps):
        for k, amplitude in mode_map.items():
            amplitude = weight * np.asarray(amplitude, dtype=complex)
            if k in merged:
                size = max(merged[k].shape[-1], amplitude.shape[-1])
                merged[k] = polynomials.pad_square(merged[k], size) + polynomials.pad_square(amplitude, size)
            else:
                merged[k] = amplitude
    return merged


def bracket_maps(left, right):
    """
    {F, G} = Σ_a ∂_{φa} F ∂_{Ia} G - ∂_{Ia} F ∂_{φa} G on mode maps.

    Time is a parameter here; the extended-phase-space term belongs to the caller.
    """
    result = {}
    right_items = [
        (np.array(l), g, [polynomials.derivative(g, axis) for axis in (0, 1)]) for l, g in right.items()
    ]
    for k, f in left.items():
        k = np.array(k)
        df = [polynomials.derivative(f, axis) for axis in (0, 1)]
        for l, g, dg in right_items:
            term = None
            for axis in (0, 1):
                pieces = []
                if k[axis]:
                    pieces.append(1j * k[axis] * polynomials.product(f, dg[axis]))
                if l[axis]:
                    pieces.append(-1j * l[axis] * polynomials.product(df[axis], g))
                for piece in pieces:
                    term = piece if term is None else _sum(term, piece)
            if term is None or not np.any(term):
                continue
            key = tuple(int(x) for x in k + l)
            result[key] = term if key not in result else _sum(result[key], term)
    return {key: polynomials.trim_degree(value) for key, value in result.items()}


def _sum(left, right):
    size = max(left.shape[-1], right.shape[-1])
    return polynomials.pad_square(left, size) + polynomials.pad_square(right, size)


def poisson_bracket(F, G, include_h0=True):
    """{F, G} of two Hamiltonians in (φ, I) as a FourierHamiltonian with zero H0 and ε = 1."""
    return from_scaled_map(
        bracket_maps(scaled_mode_map(F, include_h0), scaled_mode_map(G, include_h0)),
        regularity_r=min(F.regularity_r, G.regularity_r),
    )


def rescale_actions(H, center, scale):
    """
    Ĥ(φ, Ĵ, t) = H(φ, center + scale·Ĵ, t) / scale.

    Frequencies ∂_Ĵ Ĥ0 equal ∂_I H0 at the corresponding point, so the time
    variable is untouched.
    """
    center = np.asarray(center, dtype=float)
    matrix = scale * np.eye(2)
    h0 = IntegrablePart(polynomials.affine_compose(H.h0.coefficients, matrix, center) / scale)
    amplitudes = polynomials.affine_compose_stack(H.amplitudes, matrix, center) / scale if H.n_modes else H.amplitudes
    domain = None
    if H.domain is not None:
        domain = tuple(
            ((lo - center[axis]) / scale, (hi - center[axis]) / scale) for axis, (lo, hi) in enumerate(H.domain)
        )
    return FourierHamiltonian(h0, H.modes, amplitudes, H.epsilon, H.regularity_r, domain)
