"""The universal dominating walk: a D/M/1 workload sampled at arrivals.

On the log scale U = log(Y / reflection_level) the dominating process is a
reflected random walk U' = max(0, U + E - d) with unit-exponential service
jumps E and deterministic inter-arrival gap d = log(1/alpha).  It is
positive-recurrent iff d > 1 (alpha < 1/e), its stationary law is the
classic G/M/1 geometric-exponential mix, and its exact time reversal is
available by Bayes inversion of the kernel against that stationary law,
which is what backward-in-equilibrium simulation needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DepthCapError, PerfectSimError, SupercriticalError
from .measures import ExpPiece, Prob1D, fixed_point_sigma
from .streams import ROLE_EQUILIBRIUM, ROLE_REVERSED, StreamKit, uniform_open


@dataclass(frozen=True)
class QueueParams:
    """Inter-arrival gap d > 1, cached fixed point sigma, and the Y-scale
    reflection level (c + b/alpha for certificate-derived walks)."""

    d: float
    sigma: float
    reflection_level: float = 1.0

    def __post_init__(self):
        if not (self.d > 1.0):
            raise SupercriticalError("supercritical dominating walk; sub-sample first")
        if abs(self.sigma - math.exp(-self.d * (1.0 - self.sigma))) > 1e-12:
            raise PerfectSimError(f"sigma={self.sigma} is not the fixed point for d={self.d}")

    @classmethod
    def from_gap(cls, d: float, reflection_level: float = 1.0) -> "QueueParams":
        return cls(d, fixed_point_sigma(d), reflection_level)

    @classmethod
    def from_alpha(cls, alpha: float, reflection_level: float = 1.0) -> "QueueParams":
        if not (0.0 < alpha < 1.0):
            raise SupercriticalError(f"alpha must be in (0,1), got {alpha}")
        return cls.from_gap(math.log(1.0 / alpha), reflection_level)

    def y_of(self, u: float) -> float:
        return self.reflection_level * math.exp(u)


def forward_step_u(u: float, params: QueueParams, rng: np.random.Generator) -> float:
    """One forward transition U' = max(0, U + E - d), E ~ Exp(1)."""
    if u < 0.0:
        raise PerfectSimError(f"workload must be nonnegative, got {u}")
    return max(0.0, u + rng.exponential(1.0) - params.d)


def equilibrium_u(params: QueueParams) -> Prob1D:
    """Stationary workload law: atom 1-sigma at 0 plus Exp(1-sigma) with
    mass sigma, i.e. P(U > t) = sigma * exp(-(1-sigma) t)."""
    s = params.sigma
    return Prob1D(0.0, atoms=[(0.0, 1.0 - s)], pieces=[ExpPiece(0.0, 1.0 - s, s)])


def _reversed_from_atom(params: QueueParams, rng: np.random.Generator) -> float:
    """Draw U_{t-1} given U_t = 0.

    Stays at 0 with probability 1 - e^{-d}; otherwise the previous workload
    has density sigma*(e^{-(1-s)v} - e^{s v - d}) on (0, d) (total mass
    e^{-d}), inverted by safeguarded Newton on its closed-form CDF.
    """
    d, s = params.d, params.sigma
    if uniform_open(rng) < 1.0 - math.exp(-d):
        return 0.0
    target = uniform_open(rng) * math.exp(-d)

    def cdf(v: float) -> float:
        return s / (1.0 - s) * (1.0 - math.exp(-(1.0 - s) * v)) - math.exp(-d) * (
            math.exp(s * v) - 1.0
        )

    def dens(v: float) -> float:
        return s * (math.exp(-(1.0 - s) * v) - math.exp(s * v - d))

    lo, hi = 0.0, d
    v = 0.5 * d
    for _ in range(100):
        g = cdf(v) - target
        if g > 0.0:
            hi = v
        else:
            lo = v
        f = dens(v)
        step = g / f if f > 1e-300 else 0.0
        v_new = v - step
        if not (lo < v_new < hi):
            v_new = 0.5 * (lo + hi)
        if abs(v_new - v) < 1e-15 * max(1.0, v):
            v = v_new
            break
        v = v_new
    return v


def _reversed_from_density(u: float, params: QueueParams, rng: np.random.Generator) -> float:
    """Draw U_{t-1} given U_t = u > 0.

    Previous workload is 0 with probability e^{-s u - d}/sigma, else has the
    rising-exponential density e^{s(v-u)-d} on (0, u + d], inverted in
    closed form (log-sum-exp stable for large u).
    """
    d, s = params.d, params.sigma
    if uniform_open(rng) < math.exp(-s * u - d) / s:
        return 0.0
    p = uniform_open(rng)
    return u + d + math.log(p + (1.0 - p) * math.exp(-s * (u + d))) / s


def reversed_step_u(u: float, params: QueueParams, rng: np.random.Generator) -> float:
    """One exact time-reversed transition: a draw of U_{t-1} given U_t = u
    under the stationary chain, q(u, dv) = pi(dv) p(v, du) / pi(du)."""
    if u < 0.0:
        raise PerfectSimError(f"workload must be nonnegative, got {u}")
    if u == 0.0:
        return _reversed_from_atom(params, rng)
    return _reversed_from_density(u, params, rng)


class DominatingPath:
    """Lazily backward-extended stationary trajectory of the dominating walk
    on nonpositive times.  Time 0 is seeded from the stationary law; each
    older value is generated once, by the reversed kernel, on the substream
    keyed by (seed, generated time), and never resampled.

    Single-owner mutable state: one CFTP run owns one path.
    """

    def __init__(self, seed: int, params: QueueParams, depth_cap: int = 1_000_000):
        self.seed = seed
        self.params = params
        self.depth_cap = depth_cap
        self._streams = StreamKit(seed)
        self._equilibrium = equilibrium_u(params)
        u0 = self._equilibrium.quantile(
            uniform_open(self._streams.at(0, ROLE_EQUILIBRIUM))
        )
        self.values: dict[int, float] = {0: u0}
        self.frontier = 0

    def u_at(self, t: int) -> float:
        if t > 0:
            raise PerfectSimError("dominating path lives on nonpositive times")
        self.ensure_back_to(t)
        return self.values[t]

    def y_at(self, t: int) -> float:
        return self.params.y_of(self.u_at(t))

    def ensure_back_to(self, t: int) -> None:
        while self.frontier > t:
            new_time = self.frontier - 1
            if -new_time > self.depth_cap:
                raise DepthCapError(
                    f"backward search exceeded depth cap {self.depth_cap}"
                )
            rng = self._streams.at(new_time, ROLE_REVERSED)
            self.values[new_time] = reversed_step_u(
                self.values[self.frontier], self.params, rng
            )
            self.frontier = new_time


def extend_back_to_subthreshold(path: DominatingPath, h: float, strictly_before: int = 0) -> int:
    """Most recent time T < strictly_before with Y_T <= h, extending the
    path as needed.  Requires h at or above the reflection level so the walk
    can sink below it; termination is a.s., and the path's hard depth cap
    turns misconfiguration into a loud error."""
    r = path.params.reflection_level
    if h < r:
        raise PerfectSimError(f"threshold {h} below reflection level {r}")
    u_h = math.log(h / r)
    t = strictly_before - 1
    while True:
        if path.u_at(t) <= u_h:
            return t
        t -= 1


def path_rows(path: DominatingPath, back_to: int) -> list[tuple[int, float, float]]:
    """(time, U, Y) rows from time `back_to` up to 0, for diagnostics."""
    path.ensure_back_to(back_to)
    return [(t, path.values[t], path.params.y_of(path.values[t])) for t in range(back_to, 1)]
