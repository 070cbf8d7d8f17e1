"""
Periodic orbits near the minimal saddle from section maps.

In straightened coordinates ξ = (u1, u2, s1, s2) at the saddle the sections
Σ^u = {|u1| = δ} and Σ^s = {|s1| = δ} inside the ball B_d cut the two
homoclinics γ±.  The local map runs Σ^s -> Σ^u past the saddle, the global
map runs Σ^u -> Σ^s along a homoclinic.  Periodic orbits of energy α₀ + E
are fixed points of the return map to the transversal {w·ψ ≡ c} through
the middle of a homoclinic, which composes those maps.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar, root

from diffusion_core.errors.exceptions import AssumptionViolationError, OrbitNotFoundError
from diffusion_core.maupertuis.flows import floquet_multipliers, flow, is_hyperbolic
from diffusion_core.maupertuis.two_dof import TWO_PI, wrap

logger = logging.getLogger(__name__)

RADIUS_START = 1.0
RADIUS_HALVINGS = 40
LINEAR_FRACTION = 0.1
SECTION_FRACTION = 0.05
SHOOT_FRACTION = 1e-4
ANGLE_FLOOR = 5.0
DIFFERENCE_STEP = 1e-7
TIME_FLOOR = 50.0
ORBIT_RESIDUAL = 1e-9
SKIP_TIME = 1e-6
HOMOCLINIC_SAMPLES = 512
BRACKET_DOUBLINGS = 60

_DIRECTIONS = np.vstack(
    [np.eye(4), -np.eye(4), 0.5 * np.array(np.meshgrid(*[[-1.0, 1.0]] * 4, indexing="ij")).reshape(4, -1).T]
)


def bezout(a, b):
    """(x, y) with a x + b y = 1 for a primitive class (a, b)."""
    old_r, r = int(a), int(b)
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if abs(old_r) != 1:
        raise ValueError(f"class ({a}, {b}) is not primitive")
    return old_s * old_r, old_t * old_r


@dataclass(frozen=True, eq=False)
class SaddleFrame:
    """Eigenbasis of the linearized flow, columns ordered (u1, u2, s1, s2)."""

    state: np.ndarray
    basis: np.ndarray
    inverse: np.ndarray
    rates: np.ndarray

    @classmethod
    def at(cls, H, crit):
        """
        :raises AssumptionViolationError: the critical point is not a saddle
            with distinct eigenvalues
        """
        if not crit.hyperbolic:
            raise AssumptionViolationError(
                "the minimal critical point is not of saddle type",
                witness={"eigenvalues": [[e.real, e.imag] for e in crit.eigenvalues]},
            )
        lam1, lam2 = crit.lambdas
        eigenvalues, vectors = np.linalg.eig(H.linearization(crit.state))
        rates = np.array([lam1, lam2, -lam1, -lam2])
        order = [int(np.argmin(np.abs(eigenvalues - rate))) for rate in rates]
        if len(set(order)) != 4:
            raise AssumptionViolationError("saddle eigenvalues are not distinct", witness={"rates": rates.tolist()})
        basis = vectors[:, order].real
        basis = basis / np.linalg.norm(basis, axis=0)
        # the largest component of each column is positive
        basis = basis * np.sign(basis[np.argmax(np.abs(basis), axis=0), np.arange(4)])
        return cls(crit.state, basis, np.linalg.inv(basis), rates)

    def to_saddle(self, x):
        d = np.asarray(x, dtype=float) - self.state
        d[..., :2] = wrap(d[..., :2])
        return d @ self.inverse.T

    def from_saddle(self, xi):
        return self.state + np.asarray(xi, dtype=float) @ self.basis.T


def linear_radius(H, frame, start=RADIUS_START):
    """
    Largest d = start / 2^k with the linearization error on the sphere |ξ| = d
    below a tenth of λ2.
    """
    target = np.diag(frame.rates)
    d = start
    for _ in range(RADIUS_HALVINGS):
        x = frame.from_saddle(d * _DIRECTIONS)
        error = float(np.max(np.abs(frame.inverse @ H.linearization(x) @ frame.basis - target)))
        if error < LINEAR_FRACTION * frame.rates[1]:
            return d
        d *= 0.5
    raise AssumptionViolationError("no ball with a small linearization error", witness={"radius": d, "error": error})


@dataclass(frozen=True, eq=False)
class Homoclinic:
    """
    A homoclinic of the saddle leaving along ±u1.

    ``anchor`` is the state where w·ψ is half a turn from the saddle, w being
    the integer covector with w·winding = 1.
    """

    sign: int
    winding: tuple
    exit: np.ndarray
    entry: np.ndarray
    anchor: np.ndarray
    transit: float
    times: np.ndarray
    states: np.ndarray

    @property
    def covector(self):
        return np.array(bezout(*self.winding), dtype=float)

    def as_dict(self):
        return {
            "sign": self.sign,
            "winding": list(self.winding),
            "exit": self.exit.tolist(),
            "entry": self.entry.tolist(),
            "anchor": self.anchor.tolist(),
            "transit": self.transit,
        }


@dataclass(frozen=True, eq=False)
class PeriodicOrbit:
    kind: str
    energy: float
    state: np.ndarray
    period: float
    winding: tuple
    multipliers: np.ndarray
    residual: float

    @property
    def hyperbolic(self):
        return is_hyperbolic(self.multipliers)

    def sample(self, H, count=256):
        """States at ``count`` equally spaced times over one period, on the lift."""
        times = np.linspace(0.0, self.period, count, endpoint=False)
        return flow(H, self.state, self.period, t_eval=times).y.T

    def as_dict(self):
        return {
            "kind": self.kind,
            "energy": self.energy,
            "state": self.state.tolist(),
            "period": self.period,
            "winding": list(self.winding),
            "multipliers": [[m.real, m.imag] for m in self.multipliers],
            "hyperbolic": self.hyperbolic,
            "residual": self.residual,
        }


@dataclass(frozen=True, eq=False)
class SaddleSections:
    """
    Usage:
        sections = SaddleSections.build(H, crit)
        xi, time = sections.global_map(sections.homoclinics[0].exit)
        orbit = sections.periodic_orbit("plus", 1e-4 * eps)
    """

    hamiltonian: object
    crit: object
    frame: SaddleFrame
    radius: float
    delta: float
    homoclinics: tuple = field(default_factory=tuple)

    @classmethod
    def build(cls, H, crit, radius=None, delta=None):
        frame = SaddleFrame.at(H, crit)
        radius = linear_radius(H, frame) if radius is None else float(radius)
        delta = SECTION_FRACTION * radius if delta is None else float(delta)
        sections = cls(H, crit, frame, radius, delta)
        homoclinics = tuple(sections._homoclinic(sign) for sign in (1, -1))
        logger.info(
            "saddle sections with d=%.4g, δ=%.4g; homoclinic classes %s and %s",
            radius, delta, homoclinics[0].winding, homoclinics[1].winding,
        )
        return cls(H, crit, frame, radius, delta, homoclinics)

    @property
    def simple(self):
        plus, minus = (np.asarray(g.winding) for g in self.homoclinics)
        return bool(np.all(plus == -minus))

    def time_limit(self, energy=None):
        lam1, lam2 = self.frame.rates[:2]
        logs = math.log(max(math.e, lam1**2 / abs(energy))) if energy else 0.0
        return (TIME_FLOOR + 4.0 * logs) / lam2

    def _until(self, state, g, direction, t_max, what):
        def event(_, x):
            return g(x)

        event.terminal = True
        event.direction = direction
        solution = flow(self.hamiltonian, state, t_max, events=event, dense_output=True)
        if not len(solution.t_events[0]):
            raise OrbitNotFoundError(f"{what} not reached", witness={"state": np.asarray(state).tolist(), "time_limit": t_max})
        return solution.y_events[0][0], float(solution.t_events[0][0]), solution

    def _ball(self, x):
        return np.linalg.norm(self.frame.to_saddle(x)) - self.radius

    def local_map(self, xi):
        """Φ_loc: a point of Σ^s to Σ^u past the saddle; returns (ξ', time)."""
        end, time, _ = self._until(
            self.frame.from_saddle(xi),
            lambda x: abs(self.frame.to_saddle(x)[0]) - self.delta,
            1,
            self.time_limit(),
            "unstable section",
        )
        return self.frame.to_saddle(end), time

    def _excursion(self, state):
        limit = self.time_limit()
        left, t_out, _ = self._until(state, self._ball, 1, limit, "exit from the saddle ball")
        back, t_away, away = self._until(left, self._ball, -1, limit, "return to the saddle ball")
        end, t_in, _ = self._until(
            back, lambda x: abs(self.frame.to_saddle(x)[2]) - self.delta, -1, limit, "stable section"
        )
        return end, (t_out, t_away, t_in), away

    def global_map(self, xi):
        """Φ_glob: a point of Σ^u along a homoclinic to Σ^s; returns (ξ', time)."""
        end, times, _ = self._excursion(self.frame.from_saddle(xi))
        return self.frame.to_saddle(end), float(sum(times))

    def _homoclinic(self, sign):
        a = SHOOT_FRACTION * self.delta
        start = self.frame.from_saddle(sign * a * np.eye(4)[0])
        exit_state, t_exit, _ = self._until(
            start, lambda x: abs(self.frame.to_saddle(x)[0]) - self.delta, 1, self.time_limit(), "unstable section"
        )
        end, (t_out, t_away, t_in), away = self._excursion(exit_state)
        winding = tuple(int(w) for w in np.rint((end[:2] - start[:2]) / TWO_PI))
        try:
            w = np.array(bezout(*winding), dtype=float)
        except ValueError as error:
            raise AssumptionViolationError(str(error), witness={"sign": sign, "winding": list(winding)}) from error

        # the anchor lies on the excursion away from the ball
        target = w @ self.frame.state[:2] + np.pi
        grid = np.linspace(0.0, t_away, HOMOCLINIC_SAMPLES)
        theta = w @ away.sol(grid)[:2] - target
        crossing = np.flatnonzero(np.sign(theta[:-1]) != np.sign(theta[1:]))
        if not len(crossing):
            raise AssumptionViolationError("homoclinic does not cross its mid section", witness={"sign": sign})
        lo, hi = grid[crossing[0]], grid[crossing[0] + 1]
        anchor = away.sol(brentq(lambda t: w @ away.sol(t)[:2] - target, lo, hi, xtol=1e-14))

        total = t_exit + t_out + t_away + t_in
        times = np.linspace(0.0, total, HOMOCLINIC_SAMPLES)
        states = flow(self.hamiltonian, start, total, t_eval=times).y.T
        return Homoclinic(
            sign,
            winding,
            self.frame.to_saddle(exit_state),
            self.frame.to_saddle(end),
            anchor,
            t_out + t_away + t_in,
            times,
            states,
        )

    def check_assumptions(self, angle_floor=ANGLE_FLOOR):
        """
        Measured angles in degrees: departure from the u2 axis on Σ^u,
        approach to Σ^s away from the s2 axis, and the image of the weak
        unstable direction under DΦ_glob against the weak stable axis.

        :raises AssumptionViolationError: an angle is below ``angle_floor``
        """
        measured = {"case": "simple" if self.simple else "nonsimple", "homoclinics": []}
        worst = 90.0
        for homoclinic in self.homoclinics:
            departure = math.degrees(math.atan2(abs(homoclinic.exit[0]), abs(homoclinic.exit[1])))
            approach = math.degrees(math.atan2(abs(homoclinic.entry[2]), abs(homoclinic.entry[3])))
            shifted, _ = self.global_map(homoclinic.exit + DIFFERENCE_STEP * np.eye(4)[1])
            image = (shifted - homoclinic.entry) / DIFFERENCE_STEP
            transversality = math.degrees(math.atan2(abs(image[1]), abs(image[3])))
            measured["homoclinics"].append(
                {
                    "sign": homoclinic.sign,
                    "departure": departure,
                    "approach": approach,
                    "transversality": transversality,
                }
            )
            worst = min(worst, departure, approach, transversality)
        measured["worst"] = worst
        if worst < angle_floor:
            raise AssumptionViolationError(
                f"homoclinic angle {worst:.3g}° below the floor {angle_floor}°", witness=measured
            )
        logger.info("saddle assumptions hold with worst angle %.3g°", worst)
        return measured

    def _target(self, kind):
        plus, minus = self.homoclinics
        if kind == "plus":
            return plus, np.asarray(plus.winding)
        if kind == "minus":
            return minus, np.asarray(minus.winding)
        if kind in ("center", "sigma"):
            return plus, np.asarray(plus.winding) + np.asarray(minus.winding)
        raise ValueError(f"unknown orbit kind {kind!r}")

    def section_point(self, homoclinic, q, energy):
        """
        The state of energy α₀ + E at section coordinates q = (τ, j):
        ψ = anchor + τ v and J = anchor + j v̂ + κ ŵ with κ on the branch
        crossing the section forward.
        """
        w = homoclinic.covector
        v = np.array([-w[1], w[0]])
        psi = homoclinic.anchor[:2] + q[0] * v
        base = homoclinic.anchor[2:] + q[1] * v / np.linalg.norm(v)
        w_hat = w / np.linalg.norm(w)
        target = self.crit.alpha0 + energy

        def excess(kappa):
            return float(self.hamiltonian.value(np.concatenate([psi, base + kappa * w_hat]))) - target

        lowest = minimize_scalar(excess)
        if lowest.fun > 0:
            raise OrbitNotFoundError(
                "energy level misses the section",
                witness={"energy": energy, "psi": psi.tolist(), "excess": float(lowest.fun)},
            )
        step = 1.0
        for _ in range(BRACKET_DOUBLINGS):
            if excess(lowest.x + step) > 0:
                break
            step *= 2.0
        kappa = brentq(excess, lowest.x, lowest.x + step, xtol=1e-15)
        return np.concatenate([psi, base + kappa * w_hat])

    def _return(self, homoclinic, state, shift, energy):
        w = homoclinic.covector
        target = w @ state[:2] + TWO_PI * shift
        skip = 0.0
        if shift == 0:
            skip = SKIP_TIME / self.frame.rates[0]
            state = flow(self.hamiltonian, state, skip).y[:, -1]
        end, time, _ = self._until(state, lambda x: w @ x[:2] - target, 1, self.time_limit(energy), "section return")
        return end, time + skip

    def periodic_orbit(self, kind, energy):
        """
        Fixed point of the section return map at energy α₀ + E by Newton.

        :param kind: "plus", "minus", "center" or "sigma"
        :raises OrbitNotFoundError: the return map has no fixed point near the homoclinic
        """
        homoclinic, winding = self._target(kind)
        w = homoclinic.covector
        shift = int(round(w @ winding))
        v = np.array([-w[1], w[0]])
        anchor = homoclinic.anchor

        def residual(q):
            start = self.section_point(homoclinic, q, energy)
            end, _ = self._return(homoclinic, start, shift, energy)
            offset = end[:2] - anchor[:2] - TWO_PI * winding
            return np.array([offset @ v / (v @ v) - q[0], (end[2:] - anchor[2:]) @ v / np.linalg.norm(v) - q[1]])

        q = np.zeros(2)
        value = float(np.max(np.abs(residual(q))))
        if value > ORBIT_RESIDUAL:
            q = root(residual, q, method="hybr", options={"xtol": 1e-13}).x
            value = float(np.max(np.abs(residual(q))))
        if value > ORBIT_RESIDUAL:
            raise OrbitNotFoundError(
                f"no {kind} orbit at E={energy:.6g}", witness={"kind": kind, "energy": energy, "residual": value}
            )
        state = self.section_point(homoclinic, q, energy)
        _, period = self._return(homoclinic, state, shift, energy)
        multipliers = floquet_multipliers(self.hamiltonian, state, period)
        logger.debug("%s orbit at E=%.6g with period %.6g", kind, energy, period)
        return PeriodicOrbit(kind, float(energy), state, period, tuple(int(x) for x in winding), multipliers, value)

    def as_dict(self):
        return {
            "radius": self.radius,
            "delta": self.delta,
            "rates": self.frame.rates.tolist(),
            "simple": self.simple,
            "homoclinics": [g.as_dict() for g in self.homoclinics],
        }


@dataclass(frozen=True, eq=False)
class SaddleOrbits:
    sections: SaddleSections
    orbits: tuple
    checks: dict

    def of_kind(self, kind):
        return tuple(sorted((o for o in self.orbits if o.kind == kind), key=lambda o: o.energy))

    def as_dict(self):
        return {
            "sections": self.sections.as_dict(),
            "checks": self.checks,
            "orbits": [o.as_dict() for o in self.orbits],
        }


def saddle_maps_periodic_orbits(H, crit, energies, radius=None, delta=None, angle_floor=ANGLE_FLOOR):
    """
    Periodic orbits of energies α₀ + E near the homoclinics of the minimal saddle.

    E > 0 gives the orbits of both homoclinic classes, and in the nonsimple
    case the one shadowing both; E < 0 gives the orbit shadowing γ+ and then
    γ-, which exists in the simple case.

    :raises AssumptionViolationError: a measured angle is below the floor
    :raises OrbitNotFoundError: Newton on the section fails at some E
    """
    sections = SaddleSections.build(H, crit, radius, delta)
    checks = sections.check_assumptions(angle_floor)
    orbits = []
    for energy in energies:
        if energy == 0:
            raise ValueError("the critical level E = 0 carries the homoclinics, not periodic orbits")
        if energy > 0:
            kinds = ("plus", "minus") if sections.simple else ("plus", "minus", "sigma")
        else:
            kinds = ("center",) if sections.simple else ()
        orbits.extend(sections.periodic_orbit(kind, float(energy)) for kind in kinds)
    logger.info("found %d periodic orbits at %d energies", len(orbits), len(energies))
    return SaddleOrbits(sections, tuple(orbits), checks)
