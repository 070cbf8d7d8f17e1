import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class ScaleLadder:
    """
    Radii R_{n+1} = R_n^(1+2τ) and scales ρ_n = R_n^-(3-5τ).

    Usage:
        ladder = ScaleLadder(R0=20, tau=0.2, generations=3)
        n, R_n, rho_n = ladder.entries[1]
    """

    R0: float
    tau: float
    generations: int = 4
    entries: tuple = field(init=False)

    def __post_init__(self):
        if self.R0 <= 1:
            raise ValueError(f"R0 must exceed 1, got {self.R0}")
        if not 0 < self.tau < 0.6:
            raise ValueError(f"tau must lie in (0, 3/5), got {self.tau}")
        entries = []
        log_radius = math.log(self.R0)
        for n in range(self.generations + 1):
            entries.append((n, math.exp(log_radius), math.exp(-(3 - 5 * self.tau) * log_radius)))
            log_radius *= 1 + 2 * self.tau
        object.__setattr__(self, "entries", tuple(entries))

    def radius(self, n):
        return self.entries[n][1]

    def rho(self, n):
        return self.entries[n][2]

    def check(self, rtol=1e-12):
        """ρ_{n+1} = ρ_n^(1+2τ) and strict monotonicity; returns the worst relative error."""
        worst = 0.0
        for (_, r_prev, rho_prev), (_, r_next, rho_next) in zip(self.entries, self.entries[1:]):
            if not (r_next > r_prev and rho_next < rho_prev):
                raise ValueError("scale sequences are not strictly monotone")
            expected = rho_prev ** (1 + 2 * self.tau)
            worst = max(worst, abs(rho_next - expected) / expected)
        if worst > rtol:
            raise ValueError(f"ρ recursion violated, relative error {worst:.3e}")
        return worst

    def as_dict(self):
        return {"R0": self.R0, "tau": self.tau, "entries": [list(entry) for entry in self.entries]}


@dataclass(frozen=True)
class PaperConstants:
    """
    Structural exponents: q = 18d, θ = 3q + 1, m = θ + 1, r >= m + 5q.

    Desk-scale runs keep these for bookkeeping and use effective exponents
    (theta_eff, m_eff) with the same relation m_eff = theta_eff + 1.
    """

    d: int = 14
    q: int | None = None
    theta: int | None = None
    m: int | None = None
    r_min: int | None = None
    theta_eff: int = 3
    m_eff: int | None = None

    def __post_init__(self):
        q = self.q if self.q is not None else 18 * self.d
        theta = self.theta if self.theta is not None else 3 * q + 1
        m = self.m if self.m is not None else theta + 1
        r_min = self.r_min if self.r_min is not None else m + 5 * q
        m_eff = self.m_eff if self.m_eff is not None else self.theta_eff + 1
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "r_min", r_min)
        object.__setattr__(self, "m_eff", m_eff)
        if m_eff != self.theta_eff + 1:
            raise ValueError(f"m_eff={m_eff} must equal theta_eff + 1")

    @property
    def is_default_structure(self):
        return self.q == 18 * self.d and self.theta == 3 * self.q + 1 and self.m == self.theta + 1

    def violations(self):
        """Names of structural relations that do not hold."""
        failed = []
        if self.q != 18 * self.d:
            failed.append("q = 18d")
        if self.theta != 3 * self.q + 1:
            failed.append("theta = 3q + 1")
        if self.m != self.theta + 1:
            failed.append("m = theta + 1")
        if self.r_min < self.m + 5 * self.q:
            failed.append("r >= m + 5q")
        return failed

    def required_r(self):
        return self.m + 5 * self.q

    def step_count(self, r, tau):
        """N = floor((r - m/2 - 2τ)/5) averaging steps."""
        return max(0, math.floor((r - self.m / 2 - 2 * tau) / 5))

    def as_dict(self):
        return {
            "d": self.d,
            "q": self.q,
            "theta": self.theta,
            "m": self.m,
            "r_min": self.r_min,
            "theta_eff": self.theta_eff,
            "m_eff": self.m_eff,
        }
