"""
{"h0": {"coefficients": [[...]]},
 "modes": [{"k": [k1, k2, k0], "re": [[...]], "im": [[...]], "poly": [d1, d2]}, ...],
 "epsilon": ..., "r": ..., "domain": ...}

``re``/``im`` hold the polynomial coefficient matrix of ĥ_k(I); ``poly``
records its shape so that empty or constant amplitudes survive a round trip.
"""
import numpy as np

from diffusion_core.hamiltonian.fourier import FourierHamiltonian, IntegrablePart
from diffusion_core.serializers.documents import check_document, dump_document

SCHEMA_NAME = "fourier_hamiltonian"


def _modes(H):
    return [
        {
            "k": [int(x) for x in k],
            "re": np.real(amplitude),
            "im": np.imag(amplitude),
            "poly": list(amplitude.shape),
        }
        for k, amplitude in zip(H.modes, H.amplitudes)
    ]


FIELDS = {
    "h0": lambda H: {"basis": "monomial", "coefficients": H.h0.coefficients},
    "modes": _modes,
    "epsilon": lambda H: float(H.epsilon),
    "r": lambda H: float(H.regularity_r),
    "domain": lambda H: None if H.domain is None else [list(axis) for axis in H.domain],
}


def hamiltonian_document(H, fields=None):
    return dump_document(SCHEMA_NAME, FIELDS, H, fields)


def load_hamiltonian(document):
    """
    :raises ValueError: not a complete fourier_hamiltonian document of this version
    """
    document = check_document(document, SCHEMA_NAME, FIELDS)
    h0 = IntegrablePart(np.array(document["h0"]["coefficients"], dtype=float))
    mode_map = {}
    for mode in document["modes"]:
        shape = tuple(mode["poly"])
        real = np.array(mode["re"], dtype=float).reshape(shape)
        imaginary = np.array(mode["im"], dtype=float).reshape(shape)
        mode_map[tuple(mode["k"])] = real + 1j * imaginary
    domain = document["domain"]
    return FourierHamiltonian.from_mode_map(
        h0,
        mode_map,
        epsilon=document["epsilon"],
        regularity_r=document["r"],
        domain=None if domain is None else tuple(tuple(axis) for axis in domain),
    )
