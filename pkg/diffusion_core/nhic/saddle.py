"""
Hyperbolic saddles of the truncated slow system along the fast action.

After the slow-fast change the Hamiltonian reads ℋ(ψ^s, ψ^f, J^s, J^f, t);
its truncation keeps the modes with zero fast components and is therefore a
one degree of freedom system in (ψ^s, J^s) for every frozen J^f.  The
branch of its saddle points and their linearizations seed the isolating
block.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.optimize import root, root_scalar

from diffusion_core.errors.exceptions import EllipticPointError, SingularityError
from diffusion_core.hamiltonian.fourier import FourierHamiltonian
from diffusion_core.potential_shaper.extrema import circular_distance

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
ROOT_TOL = 1e-13
RESIDUAL_TOL = 1e-9
SCAN_POINTS = 256


def wrap(angle):
    """Reduce to (-π, π]."""
    return np.pi - np.mod(np.pi - np.asarray(angle, dtype=float), TWO_PI)


def reduced_system(nf, change):
    """
    ℋ in the coordinates (ψ, J) of a unimodular slow-fast change.

    Modes become k̃ = k Ã⁻¹, amplitudes are composed with I = Ã[:2, :2]ᵀ J
    and the extended action E contributes the linear term Ã[:2, 2]·J, so that
    ℋ(ψ1, ψ2, J1, J2, ψ3) + J3 equals H + E at the corresponding point.

    :param nf: NormalFormResult or a FourierHamiltonian
    :raises SingularityError: |det Ã| != 1
    """
    H = getattr(nf, "transformed", nf)
    if abs(change.determinant) != 1:
        raise SingularityError(
            "Reduction needs a unimodular change",
            witness={"matrix": [list(row) for row in change.matrix], "determinant": change.determinant},
        )
    inverse = np.rint(change.inverse).astype(np.int64)
    modes = H.modes @ inverse if H.n_modes else H.modes
    logger.debug("reduced %d modes with change %s", H.n_modes, change.matrix)
    return change.compose(H, modes)


def slow_truncation(reduced):
    """Keep the modes k̃ with k̃2 = k̃3 = 0."""
    if not reduced.n_modes:
        return reduced
    return reduced.select(np.all(reduced.modes[:, 1:] == 0, axis=1))


def eigen_data(a, b, c):
    """
    λ = √(a² + bc) and eigenvector columns S of M = [[a, b], [c, -a]].

    Of the two candidate eigenvectors for each of ±λ the longer one is kept,
    and the columns are normalized, so S stays invertible whenever λ > 0.

    :return: (λ, S) with S⁻¹ M S = diag(λ, -λ)
    """
    a, b, c = (np.asarray(v, dtype=float) for v in (a, b, c))
    lam = np.sqrt(np.maximum(a * a + b * c, 0.0))
    unstable = (np.stack([a + lam, c], -1), np.stack([b, lam - a], -1))
    stable = (np.stack([-b, a + lam], -1), np.stack([lam - a, -c], -1))
    columns = []
    for first, second in (unstable, stable):
        n1, n2 = np.linalg.norm(first, axis=-1), np.linalg.norm(second, axis=-1)
        chosen = np.where(np.asarray(n1 >= n2)[..., None], first, second)
        length = np.asarray(np.maximum(np.maximum(n1, n2), np.finfo(float).tiny))
        columns.append(chosen / length[..., None])
    return lam, np.stack(columns, axis=-1)


@dataclass(frozen=True, eq=False)
class SaddleBranch:
    """
    Saddle points (ψ*, J*) of the truncated system at the J^f nodes.

    ``psi`` is continued without 2π jumps; ``a, b, c`` are the entries
    ∂²ℋ/∂ψ∂J, ∂²ℋ/∂J², -∂²ℋ/∂ψ² of the truncation.
    """

    jf: np.ndarray
    psi: np.ndarray
    js: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    hamiltonian: FourierHamiltonian
    change: object = None
    _profile: object = field(init=False, repr=False)

    def __post_init__(self):
        lam, S = eigen_data(self.a, self.b, self.c)
        columns = np.column_stack([self.psi, self.js, S.reshape(-1, 4), lam])
        spline = make_interp_spline(self.jf, columns, k=min(3, len(self.jf) - 1))
        object.__setattr__(self, "_profile", (spline, spline.derivative()))

    @property
    def lam(self):
        return eigen_data(self.a, self.b, self.c)[0]

    @property
    def interval(self):
        return float(self.jf[0]), float(self.jf[-1])

    def linearization(self):
        return np.stack([np.stack([self.a, self.b], -1), np.stack([self.c, -self.a], -1)], -2)

    def diagonalizer(self):
        """Column-normalized eigenvectors from ``eigen_data``; the block frame is built on these."""
        return eigen_data(self.a, self.b, self.c)[1]

    def s_matrix(self):
        """
        S = [[a+λ, -b], [c, a+λ]] at every node, with S⁻¹ M S = diag(λ, -λ)
        wherever det S != 0. Degenerates where a = -λ and bc = 0, which is
        where ``diagonalizer`` switches to the other candidate column.
        """
        diagonal = self.a + self.lam
        return np.stack([np.stack([diagonal, -self.b], -1), np.stack([self.c, diagonal], -1)], -2)

    @property
    def det_s(self):
        """det S = (a+λ)² + bc."""
        return (self.a + self.lam) ** 2 + self.b * self.c

    def eigen_defect(self):
        """Largest gap between the eigenvalues of M and ±λ."""
        eigenvalues = np.sort(np.real(np.linalg.eigvals(self.linearization())), axis=-1)
        return float(np.max(np.abs(eigenvalues - np.stack([-self.lam, self.lam], -1))))

    def diagonal_defect(self):
        S = self.diagonalizer()
        D = np.linalg.solve(S, self.linearization() @ S)
        target = np.zeros_like(D)
        target[:, 0, 0], target[:, 1, 1] = self.lam, -self.lam
        return float(np.max(np.abs(D - target)))

    def frame(self, jf):
        """
        Center, straightening matrix and their J^f derivatives at ``jf``.

        Outside the node range the frame is frozen at the end values.
        """
        jf = np.asarray(jf, dtype=float)
        lo, hi = self.interval
        clipped = np.clip(jf, lo, hi)
        spline, derivative = self._profile
        values = spline(clipped)
        inside = np.asarray((jf >= lo) & (jf <= hi))
        slopes = np.where(inside[..., None], derivative(clipped), 0.0)
        shape = jf.shape
        return (
            values[..., :2],
            values[..., 2:6].reshape(shape + (2, 2)),
            slopes[..., :2],
            slopes[..., 2:6].reshape(shape + (2, 2)),
        )

    def rate(self, jf):
        """λ interpolated in J^f."""
        lo, hi = self.interval
        return self._profile[0](np.clip(np.asarray(jf, dtype=float), lo, hi))[..., 6]

    def rows(self):
        lam = self.lam
        return [
            {
                "jf": float(self.jf[i]),
                "psi_s": float(np.mod(self.psi[i], TWO_PI)),
                "j_s": float(self.js[i]),
                "a": float(self.a[i]),
                "b": float(self.b[i]),
                "c": float(self.c[i]),
                "lambda": float(lam[i]),
            }
            for i in range(len(self.jf))
        ]

    def as_dict(self):
        return {
            "nodes": self.rows(),
            "min_lambda": float(np.min(self.lam)),
            "min_det_s": float(np.min(np.abs(self.det_s))),
            "s_matrix": self.s_matrix().tolist(),
            "eigen_defect": self.eigen_defect(),
            "change": self.change.as_dict() if self.change is not None else None,
        }


def _point(psi_s, js, jf):
    return np.array([psi_s, 0.0, js, jf, 0.0])


def _seed_positions(seeds, jf):
    if seeds is None:
        return None
    if hasattr(seeds, "positions"):
        return np.interp(jf, seeds.nodes, np.unwrap(seeds.positions))
    seeds = np.asarray(seeds, dtype=float)
    if seeds.ndim == 0:
        return np.concatenate([[float(seeds)], np.full(len(jf) - 1, np.nan)])
    if seeds.shape != jf.shape:
        raise ValueError(f"seeds must be a scalar or one per node, got shape {seeds.shape}")
    return seeds


def _cold_start(H, jf, psi_seed):
    """Slow action from ∂ℋ0/∂J^s = 0, angle from a scan of the potential."""
    h0 = H.h0
    try:
        solution = root_scalar(
            lambda js: h0.gradient([js, jf])[0], x0=0.0, fprime=lambda js: h0.hessian([js, jf])[0, 0], method="newton"
        )
        js = solution.root if solution.converged else 0.0
    except (RuntimeError, ZeroDivisionError):
        js = 0.0
    if psi_seed is not None and np.isfinite(psi_seed):
        return np.array([psi_seed, js])
    grid = np.linspace(0.0, TWO_PI, SCAN_POINTS, endpoint=False)
    z = np.zeros((SCAN_POINTS, 5))
    z[:, 0], z[:, 2], z[:, 3] = grid, js, jf
    potential = H.value(z)
    # a saddle of ½bJ² + Z sits at a maximum of Z when b > 0
    index = np.argmax(potential) if h0.hessian([js, jf])[0, 0] > 0 else np.argmin(potential)
    return np.array([grid[index], js])


def _critical_point(H, jf, guess, tol):
    def residual(x):
        g = H.gradient(_point(x[0], x[1], jf))
        return np.array([g[0], g[2]])

    def jacobian(x):
        h = H.hessian(_point(x[0], x[1], jf))
        return np.array([[h[0, 0], h[0, 2]], [h[2, 0], h[2, 2]]])

    solution = root(residual, guess, jac=jacobian, method="hybr", options={"xtol": tol})
    return solution.x, float(np.max(np.abs(residual(solution.x))))


def truncated_saddle(nf, change, jf_grid, seeds=None, tol=ROOT_TOL):
    """
    Continue the saddle of the truncated slow system over ``jf_grid``.

    :param nf: NormalFormResult or FourierHamiltonian in the original coordinates
    :param change: SlowFastChange, or None when ``nf`` is already reduced
    :param seeds: ψ^s seeds: an ExtremumBranch, one value per node or a
        single value for the first node; later nodes continue from the
        previous solution
    :raises EllipticPointError: no critical point, or a^2 + bc <= 0
    """
    jf = np.asarray(jf_grid, dtype=float)
    if jf.ndim != 1 or len(jf) < 2 or np.any(np.diff(jf) <= 0):
        raise ValueError("jf_grid must hold at least two increasing nodes")
    reduced = reduced_system(nf, change) if change is not None else getattr(nf, "transformed", nf)
    truncated = slow_truncation(reduced)
    seed_psi = _seed_positions(seeds, jf)

    solutions, hessians = [], []
    for index, value in enumerate(jf):
        psi_seed = seed_psi[index] if seed_psi is not None else None
        if solutions and (psi_seed is None or not np.isfinite(psi_seed)):
            guess = solutions[-1]
        else:
            guess = _cold_start(truncated, value, psi_seed)
        x, residual = _critical_point(truncated, value, guess, tol)
        if residual > RESIDUAL_TOL:
            raise EllipticPointError(
                "No critical point of the truncated system near the seed",
                witness={"jf": float(value), "guess": guess.tolist(), "residual": residual},
            )
        if solutions:
            x[0] = solutions[-1][0] + wrap(x[0] - solutions[-1][0])
        h = truncated.hessian(_point(x[0], x[1], value))
        a, b, c = h[0, 2], h[2, 2], -h[0, 0]
        if a * a + b * c <= 0:
            raise EllipticPointError(
                witness={"jf": float(value), "psi_s": float(x[0]), "j_s": float(x[1]), "a": a, "b": b, "c": c}
            )
        solutions.append(x)
        hessians.append((a, b, c))

    solutions = np.array(solutions)
    a, b, c = np.array(hessians).T
    branch = SaddleBranch(jf, solutions[:, 0], solutions[:, 1], a, b, c, truncated, change)
    logger.info("saddle branch over [%.4g, %.4g] with min λ=%.3e", jf[0], jf[-1], float(np.min(branch.lam)))
    return branch


@dataclass(frozen=True)
class HandoffReport:
    jf: float
    positions: tuple
    separation: float
    scale: float

    @property
    def disjoint(self):
        return self.separation >= self.scale

    def as_dict(self):
        return {
            "jf": self.jf,
            "positions": list(self.positions),
            "separation": self.separation,
            "scale": self.scale,
            "disjoint": self.disjoint,
        }


def bifurcation_handoff(branch_a, branch_b, jf, lambda_star, c3=1.0):
    """
    Compare two saddle branches at a bifurcation value J^f_i.

    The cylinders of the two branches are disjoint near J^f_i when their
    saddles are separated on the scale λ*/C₃.
    """
    for branch in (branch_a, branch_b):
        lo, hi = branch.interval
        if not lo <= jf <= hi:
            raise ValueError(f"jf={jf} lies outside the branch interval [{lo}, {hi}]")
    positions = tuple(float(np.mod(branch.frame(jf)[0][0], TWO_PI)) for branch in (branch_a, branch_b))
    separation = float(circular_distance(positions[0], positions[1], TWO_PI))
    report = HandoffReport(float(jf), positions, separation, lambda_star / c3)
    if not report.disjoint:
        logger.warning("saddles at jf=%.6g are %.3e apart, below %.3e", jf, separation, report.scale)
    return report
