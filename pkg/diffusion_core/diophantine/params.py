import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class DiophantineParams:
    """
    (η, τ) of the Diophantine condition |k·(ω, 1)| >= η|k|^-(2+τ), certified up to |k| <= cutoff_K.

    Usage:
        params = DiophantineParams(eta=1e-3, tau=0.2, cutoff_K=200)
    """

    eta: float
    tau: float
    cutoff_K: int = 200

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if not 0 < self.tau < 1:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if int(self.cutoff_K) != self.cutoff_K or self.cutoff_K < 1:
            raise ValueError(f"cutoff_K must be a positive integer, got {self.cutoff_K}")
        object.__setattr__(self, "cutoff_K", int(self.cutoff_K))

    def threshold(self, norm):
        return self.eta * np.asarray(norm, dtype=float) ** (-(2 + self.tau))

    def as_dict(self):
        return {"eta": self.eta, "tau": self.tau, "cutoff_K": self.cutoff_K}


def canonical_sign(k):
    """Representative of ±k whose first nonzero entry of (k1, k2) is positive."""
    k = tuple(int(x) for x in k)
    leading = k[0] if k[0] else k[1]
    return tuple(-x for x in k) if leading < 0 else k


@dataclass(frozen=True)
class ResonanceVector:
    """
    Integer vector k = (k1, k2, k0) with (k1, k2) != 0; the resonance is k·(ω, 1) = 0.

    Stored primitive and with the canonical sign unless ``normalized=False``.
    ``certificate`` carries selection metadata and does not take part in equality.
    """

    k: tuple
    normalized: bool = True
    certificate: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        k = tuple(int(x) for x in self.k)
        if len(k) != 3:
            raise ValueError(f"resonance vectors have three components, got {k}")
        if k[0] == 0 and k[1] == 0:
            raise ValueError(f"(k1, k2) must be nonzero, got {k}")
        if self.normalized:
            divisor = math.gcd(*k)
            k = canonical_sign(tuple(x // divisor for x in k))
        object.__setattr__(self, "k", k)

    @property
    def norm(self):
        return max(abs(x) for x in self.k)

    @property
    def is_primitive(self):
        return math.gcd(*self.k) == 1

    @property
    def planar(self):
        return np.array(self.k[:2], dtype=float)

    def as_array(self):
        return np.array(self.k, dtype=float)

    def small_divisor(self, omega):
        """k·(ω, 1)."""
        omega = np.asarray(omega, dtype=float)
        return float(self.k[0] * omega[0] + self.k[1] * omega[1] + self.k[2])

    def angle_with(self, other):
        """Angle in [0, π/2] between the lines spanned by the two vectors in ℝ³."""
        a, b = self.as_array(), np.asarray(getattr(other, "k", other), dtype=float)
        cosine = abs(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))
        return float(np.arccos(min(1.0, cosine)))

    def is_parallel(self, other):
        return not np.any(np.cross(self.as_array(), np.asarray(getattr(other, "k", other), dtype=float)))

    def as_dict(self):
        data = {"k": list(self.k), "norm": self.norm, "normalized": self.normalized}
        if self.certificate is not None:
            data["certificate"] = self.certificate
        return data
