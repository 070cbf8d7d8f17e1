"""
Averaged potentials Z_k(ψ^s, J^f) = Σ_m c_m(J^f) e^{i m w ψ^s} along a resonance.

Only c_0, …, c_M are stored; c_{-m} = conj(c_m), so Z = Re[c_0 + 2 Σ_{m>=1} c_m e^{imwψ}]
with w = 2π/period.  Coefficients are known exactly at the nodes J^f and
interpolated by cubic splines in between.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from diffusion_core.averaging.slow_fast import slow_fast_change
from diffusion_core.diophantine.params import ResonanceVector
from diffusion_core.hamiltonian import polynomials
from diffusion_core.hamiltonian.frequency import inverse_frequency

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


def series(coefficients, phi, w, order=0):
    """Re Σ_m weight_m c_m (i m w)^order e^{i m w φ} for coefficient rows (..., M+1)."""
    coefficients = np.asarray(coefficients)
    harmonics = np.arange(coefficients.shape[-1])
    weights = np.where(harmonics == 0, 1.0, 2.0) * (1j * harmonics * w) ** order
    phases = np.exp(1j * w * np.asarray(phi, dtype=float)[..., None] * harmonics)
    return np.real(np.sum(weights * coefficients * phases, axis=-1))


@dataclass(frozen=True)
class Bump:
    """C∞ plateau: 1 on [lower, upper], 0 outside [lower - margin, upper + margin]."""

    lower: float
    upper: float
    margin: float

    def __post_init__(self):
        if self.margin <= 0 or self.upper < self.lower:
            raise ValueError(f"invalid bump support [{self.lower}, {self.upper}] with margin {self.margin}")

    @staticmethod
    def _step(u):
        u = np.clip(u, 0.0, 1.0)
        with np.errstate(divide="ignore"):
            rise = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
            fall = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
        return rise / (rise + fall)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        left = self._step((x - self.lower + self.margin) / self.margin)
        right = self._step((self.upper + self.margin - x) / self.margin)
        return left * right

    @property
    def support(self):
        return self.lower - self.margin, self.upper + self.margin

    def as_dict(self):
        return {"lower": self.lower, "upper": self.upper, "margin": self.margin, "support": list(self.support)}


@dataclass(frozen=True, eq=False)
class AveragedPotential:
    """
    Usage:
        Z = AveragedPotential.from_cosine_sine([0.0, 1.0], [[0, 1], [0, 1]], [[0, 0], [0, 0]])
        Z.value(0.0, 0.5)  # cos ψ at J^f = 0.5
    """

    nodes: np.ndarray
    coefficients: np.ndarray
    k: tuple | None = None
    period: float = TWO_PI
    bump: Bump | None = None
    _spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float).reshape(-1)
        coefficients = np.asarray(self.coefficients, dtype=complex).reshape(len(nodes), -1)
        if len(nodes) < 2 or np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing with at least two entries")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "coefficients", coefficients)
        stacked = np.concatenate([coefficients.real, coefficients.imag], axis=1)
        object.__setattr__(self, "_spline", CubicSpline(nodes, stacked, axis=0))

    @classmethod
    def from_cosine_sine(cls, nodes, cosines, sines, **kwargs):
        """Z = Σ_m a_m cos(m w ψ) + b_m sin(m w ψ), with a_0 the constant term."""
        a = np.asarray(cosines, dtype=float)
        b = np.asarray(sines, dtype=float)
        coefficients = 0.5 * (a - 1j * b)
        coefficients[..., 0] = a[..., 0]
        return cls(nodes, coefficients, **kwargs)

    @property
    def w(self):
        return TWO_PI / self.period

    @property
    def max_harmonic(self):
        return self.coefficients.shape[1] - 1

    @property
    def interval(self):
        return float(self.nodes[0]), float(self.nodes[-1])

    def coefficients_at(self, jf, jf_order=0):
        jf = np.asarray(jf, dtype=float)
        stacked = self._spline(jf, nu=jf_order)
        half = self.coefficients.shape[1]
        return stacked[..., :half] + 1j * stacked[..., half:]

    def value(self, phi, jf):
        return self.derivative(phi, jf)

    def derivative(self, phi, jf, order=0, jf_order=0):
        """∂^order_ψ ∂^jf_order_{J^f} Z at (ψ, J^f)."""
        return series(self.coefficients_at(jf, jf_order), phi, self.w, order)

    def at_node(self, index, phi, order=0):
        return series(self.coefficients[index], phi, self.w, order)

    def derivative_bound(self, order):
        """max over nodes and 0 <= j <= order of Σ_m weight_m |c_m| (m w)^j, a C^order bound."""
        harmonics = np.arange(self.coefficients.shape[1])
        weights = np.where(harmonics == 0, 1.0, 2.0)
        magnitudes = np.abs(self.coefficients) * weights
        return float(max(np.max(magnitudes @ (harmonics * self.w) ** j) for j in range(order + 1)))

    def with_coefficients(self, coefficients):
        return AveragedPotential(self.nodes, coefficients, self.k, self.period, self.bump)

    def resampled(self, nodes):
        nodes = np.asarray(nodes, dtype=float)
        return AveragedPotential(nodes, self.coefficients_at(nodes), self.k, self.period, self.bump)

    def as_dict(self):
        return {
            "k": None if self.k is None else list(self.k),
            "period": self.period,
            "interval": list(self.interval),
            "nodes": self.nodes.tolist(),
            "coefficients": [[[c.real, c.imag] for c in row] for row in self.coefficients],
            "bump": None if self.bump is None else self.bump.as_dict(),
        }


@dataclass(frozen=True)
class ResonanceCurve:
    """Actions J(J^f) along a resonance, sampled at increasing J^f."""

    jf: np.ndarray
    actions: np.ndarray

    def __post_init__(self):
        jf = np.asarray(self.jf, dtype=float)
        actions = np.asarray(self.actions, dtype=float).reshape(len(jf), 2)
        if np.any(np.diff(jf) <= 0):
            raise ValueError("J^f must increase strictly along the curve")
        object.__setattr__(self, "jf", jf)
        object.__setattr__(self, "actions", actions)


def resonance_curve(H, segment, nodes=64):
    """
    The action curve of a segment parameterized by the fast action
    J^f = (Ã^-T (I, 0))_2 of its slow-fast change.
    """
    actions = segment.action_polyline
    if actions is None or len(actions) != nodes:
        actions = inverse_frequency(H, segment.polyline(nodes))
    change = slow_fast_change(segment.k.k)
    jf = change.actions(np.column_stack([actions, np.zeros(len(actions))]))[:, 1]
    if jf[-1] < jf[0]:
        jf, actions = jf[::-1], actions[::-1]
    return ResonanceCurve(jf, actions)


def averaged_potential(H, k, curve, max_harmonic=None, bump=None):
    """
    Exact extraction of the harmonics m·k (m >= 0) of εH1 along the curve.

    A Hamiltonian without multiples of k gives the zero potential.
    """
    k = ResonanceVector(k).k
    base = np.array(k, dtype=np.int64)
    harmonics = {}
    for mode, amplitude in H.mode_map().items():
        mode = np.array(mode, dtype=np.int64)
        if np.any(np.cross(mode, base)):
            continue
        m = int(mode @ base) // int(base @ base)
        if m >= 0 and (max_harmonic is None or m <= max_harmonic):
            harmonics[m] = amplitude

    size = max(harmonics, default=0) + 1
    coefficients = np.zeros((len(curve.jf), size), dtype=complex)
    for m, amplitude in harmonics.items():
        coefficients[:, m] = H.epsilon * polynomials.evaluate(amplitude, curve.actions)[:, 0]
    if not harmonics:
        logger.info("no multiples of %s in the Hamiltonian; averaged potential is zero", k)
    return AveragedPotential(curve.jf, coefficients, k=k, bump=bump)
