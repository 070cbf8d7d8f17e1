import logging
import math
from dataclasses import dataclass

import numpy as np

from diffusion_core.hamiltonian import bracket
from diffusion_core.hamiltonian.fourier import FourierHamiltonian
from diffusion_core.hamiltonian.scales import PaperConstants

logger = logging.getLogger(__name__)

DISK_RTOL = 1e-12
DEFORMED_HARMONICS = 2


@dataclass(frozen=True)
class DeformationParams:
    """
    σ = (σ1, …, σ6) of the family

        σ1 cos 2πθ + σ2 sin 2πθ + σ3 cos 4πθ + σ4 sin 4πθ + t (σ5 cos 2πθ + σ6 sin 2πθ)

    with every pair in the ν-disk.  ``c3`` is the measured C³ bound of the
    deformed family in (σ, t), which sets the discretization λ# = λ*/C₃.
    """

    sigma: tuple
    nu: float
    lambda_star: float
    c3: float | None = None

    def __post_init__(self):
        sigma = tuple(float(x) for x in np.asarray(self.sigma, dtype=float).reshape(-1))
        if len(sigma) != 6:
            raise ValueError(f"sigma needs 6 components, got {len(sigma)}")
        if self.nu <= 0 or self.lambda_star <= 0:
            raise ValueError("nu and lambda_star must be positive")
        object.__setattr__(self, "sigma", sigma)
        for index, pair in enumerate(self.pairs):
            if math.hypot(*pair) > self.nu * (1 + DISK_RTOL):
                raise ValueError(f"sigma pair {index + 1} = {pair} leaves the disk of radius {self.nu}")

    @classmethod
    def zero(cls, nu, lambda_star, c3=None):
        return cls((0.0,) * 6, nu, lambda_star, c3)

    @property
    def pairs(self):
        return self.sigma[0:2], self.sigma[2:4], self.sigma[4:6]

    @property
    def lambda_sharp(self):
        return self.lambda_star / self.c3 if self.c3 else None

    def as_dict(self):
        return {
            "sigma": list(self.sigma),
            "nu": self.nu,
            "lambda_star": self.lambda_star,
            "c3": self.c3,
            "lambda_sharp": self.lambda_sharp,
        }


def shift_parameters(sigma, shift, period=1.0):
    """
    σ(θ*) with deformation(σ)(θ + θ*) = deformation(σ(θ*))(θ).

    Each pair is rotated by its harmonic's phase, so the disk radii are kept.
    """
    sigma = np.asarray(getattr(sigma, "sigma", sigma), dtype=float)
    angle = 2.0 * np.pi * shift / period
    rotated = []
    for (a, b), harmonic in zip(sigma.reshape(3, 2), (1, 2, 1)):
        c, s = np.cos(harmonic * angle), np.sin(harmonic * angle)
        rotated.extend([a * c + b * s, b * c - a * s])
    return tuple(float(x) for x in rotated)


def deformation_coefficients(sigma, t):
    """(c1, c2) added to the first two harmonics at t, in the c_m convention of AveragedPotential."""
    s1, s2, s3, s4, s5, s6 = getattr(sigma, "sigma", sigma)
    t = np.asarray(t, dtype=float)
    return 0.5 * ((s1 + t * s5) - 1j * (s2 + t * s6)), np.full(t.shape, 0.5 * (s3 - 1j * s4))


def deformation_term(sigma, t, k=(1, 0, 0), regularity_r=8.0):
    """The added harmonics at a fixed t as a Fourier Hamiltonian in the direction k."""
    c1, c2 = deformation_coefficients(sigma, t)
    k = np.array(k, dtype=np.int64)
    mode_map = {}
    for m, c in ((1, complex(c1)), (2, complex(c2))):
        if c:
            mode_map[tuple(int(x) for x in m * k)] = c
            mode_map[tuple(int(x) for x in -m * k)] = np.conj(c)
    return FourierHamiltonian.from_mode_map(bracket.zero_integrable(), mode_map, regularity_r=regularity_r)


def deform_potential(Z, params, bump=None):
    """
    Z + χ·deformation(σ) with t = J^f; only harmonics 1 and 2 change.

    :param bump: plateau χ on the J^f axis, Z.bump by default; none means χ = 1
    """
    bump = bump if bump is not None else Z.bump
    size = max(Z.coefficients.shape[1], DEFORMED_HARMONICS + 1)
    coefficients = np.zeros((len(Z.nodes), size), dtype=complex)
    coefficients[:, : Z.coefficients.shape[1]] = Z.coefficients
    chi = bump(Z.nodes) if bump is not None else 1.0
    c1, c2 = deformation_coefficients(params, Z.nodes)
    coefficients[:, 1] += chi * c1
    coefficients[:, 2] += chi * c2
    return Z.with_coefficients(coefficients)


@dataclass(frozen=True)
class ImpliedNu:
    n: int
    r: int
    log10_nu: float

    @property
    def nu(self):
        return 10.0**self.log10_nu

    def as_dict(self):
        return {"n": self.n, "r": self.r, "log10_nu": self.log10_nu, "nu": self.nu}


def implied_nu(ladder, constants=None, n=0, r=None):
    """
    l_n = R_n^(-r-1) ρ_n^(r+1) for the configured ladder, kept in log10 since
    it underflows for the structural r.
    """
    constants = constants or PaperConstants()
    r = r if r is not None else constants.r_min
    log10_nu = (r + 1) * (math.log10(ladder.rho(n)) - math.log10(ladder.radius(n)))
    logger.debug("implied nu at generation %d with r=%d: 1e%.1f", n, r, log10_nu)
    return ImpliedNu(n, r, log10_nu)
