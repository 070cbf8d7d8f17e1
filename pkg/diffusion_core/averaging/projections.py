"""
Low, high and resonant harmonics of a perturbation relative to a resonance k_n.

A mode k is RESONANT when it is an integer multiple ℓ·k_n with |ℓ k_n| <= cutoff,
HIGH when |k| > cutoff and LOW otherwise.  The zero mode (ℓ = 0) counts as
resonant: it is part of the averaged Hamiltonian.
"""
import enum
from dataclasses import dataclass

import numpy as np

from diffusion_core.diophantine.params import ResonanceVector
from diffusion_core.hamiltonian import norms

DEFAULT_CUTOFF_FACTOR = 8


class ModeClass(enum.Enum):
    LOW = "low"
    HIGH = "high"
    RESONANT = "resonant"


@dataclass(frozen=True)
class ModeClassifier:
    """
    Usage:
        classifier = ModeClassifier.for_resonance((1, 0, 0))
        classifier.classify((0, 1, 0))  # ModeClass.LOW
    """

    k_n: tuple
    cutoff: int

    def __post_init__(self):
        k_n = ResonanceVector(self.k_n).k
        object.__setattr__(self, "k_n", k_n)
        if self.cutoff < max(abs(x) for x in k_n):
            raise ValueError(f"cutoff={self.cutoff} is smaller than |k_n|={max(abs(x) for x in k_n)}")

    @classmethod
    def for_resonance(cls, k_n, cutoff=None):
        norm = ResonanceVector(k_n).norm
        return cls(k_n, cutoff if cutoff is not None else DEFAULT_CUTOFF_FACTOR * norm)

    def classify(self, k):
        k = np.asarray(k, dtype=np.int64)
        if np.max(np.abs(k)) > self.cutoff:
            return ModeClass.HIGH
        if np.any(np.cross(k, np.asarray(self.k_n, dtype=np.int64))):
            return ModeClass.LOW
        return ModeClass.RESONANT

    def labels(self, modes):
        return [self.classify(k) for k in np.asarray(modes, dtype=np.int64).reshape(-1, 3)]

    def mask(self, modes, mode_class):
        return np.array([label is mode_class for label in self.labels(modes)], dtype=bool)

    def as_dict(self):
        return {"k_n": list(self.k_n), "cutoff": self.cutoff}


@dataclass(frozen=True)
class ModeProjection:
    low: object
    high: object
    resonant: object
    remainder: object

    def __iter__(self):
        return iter((self.low, self.high, self.resonant))


def project_modes(H, k_n, cutoff=None):
    """
    Exact partition of the modes of H into (low, high, resonant) parts, each a
    FourierHamiltonian sharing H0 and ε with H.

    :raises ValueError: cutoff < |k_n|
    """
    classifier = k_n if isinstance(k_n, ModeClassifier) else ModeClassifier.for_resonance(k_n, cutoff)
    labels = classifier.labels(H.modes)
    masks = {kind: np.array([label is kind for label in labels], dtype=bool) for kind in ModeClass}
    return ModeProjection(
        low=H.select(masks[ModeClass.LOW]),
        high=H.select(masks[ModeClass.HIGH]),
        resonant=H.select(masks[ModeClass.RESONANT]),
        remainder=H.select(~masks[ModeClass.RESONANT]),
    )


def resonant_purity(H, k_n):
    """True when every mode of H is a multiple of k_n."""
    if not H.n_modes:
        return True
    return not np.any(np.cross(H.modes, np.asarray(ResonanceVector(k_n).k, dtype=np.int64)))


@dataclass(frozen=True)
class NormMeasurement:
    c0: float
    c2: float
    grid: int
    action_nodes: int

    def as_dict(self):
        return {"c0": self.c0, "c2": self.c2, "grid": self.grid, "action_nodes": self.action_nodes}


def measure_norms(H, zone, grid=32, action_nodes=5):
    """
    C⁰ grid maximum of ε H1 on grid³ angles times the action zone, and the C²
    Fourier surrogate ε Σ |ĥ_k| [k]².
    """
    if not H.n_modes:
        return NormMeasurement(0.0, 0.0, grid, action_nodes)
    c0 = norms.grid_sup_norm(H, zone, grid=grid, action_nodes=action_nodes)
    c2 = H.epsilon * norms.fourier_norm_bound(H, 2, box=zone).bound
    return NormMeasurement(float(c0), float(c2), grid, action_nodes)
