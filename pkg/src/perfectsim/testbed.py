"""Target chains with known ground truth, plus simulation oracles.

AtomChain is the workhorse for exactness testing: a chain on [1, inf) with
identity scale whose kernel has closed-form jump laws, a hand-checked drift
certificate, and a point-mass regeneration measure.

CounterexampleChain has a drift certificate but provably admits no
positive-recurrent dominating process on its scale: its kernel spreads
two-point jumps over a partition whose classes meet every open interval, so
the minimal dominating kernel is forced up to the Markov bound, whose
log-increments have positive drift once the contraction rate exceeds 1/e.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .certificates import FLCertificate, MinorizationCertificate, threshold_h
from .errors import CertificateError, PerfectSimError
from .measures import ExpPiece, Prob1D, UniformPiece

# ---------------------------------------------------------------------------
# AtomChain
# ---------------------------------------------------------------------------


class AtomChain:
    """Chain on [1, inf), scale L(x) = x.

    Kernel: from x <= 6.25 jump to 1 with probability 1/2, else to
    1 + Exp(1); from x > 6.25 jump to max(1, 0.32*U*x) with U ~ Uniform(0,1).

    Drift certificate (0.2, 2, 6.25): below c the mean jump is 1.5; above c
    it is 0.16 x + 1/(0.64 x) <= 0.2 x exactly for x >= 6.25.  The derived
    threshold is h = 28.125 and every state below h hits 1 with probability
    at least 1/(0.32 h) = 1/9, giving the order-1 point-mass regeneration.
    """

    LOW_CUT = 6.25
    FACTOR = 0.32

    def __init__(self, alpha: float = 0.2, b: float = 2.0, c: float = 6.25):
        self._cert = FLCertificate(alpha, b, c)

    def scale(self, state: float) -> float:
        return state

    def step(self, state: float, rng: np.random.Generator) -> float:
        if state <= self.LOW_CUT:
            if rng.random() < 0.5:
                return 1.0
            return 1.0 + rng.exponential(1.0)
        return max(1.0, self.FACTOR * rng.random() * state)

    def step_many(self, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        xs = np.asarray(states, dtype=float)
        out = np.empty_like(xs)
        low = xs <= self.LOW_CUT
        n_low = int(low.sum())
        if n_low:
            go_bottom = rng.random(n_low) < 0.5
            jumps = 1.0 + rng.exponential(1.0, n_low)
            out[low] = np.where(go_bottom, 1.0, jumps)
        n_high = int((~low).sum())
        if n_high:
            out[~low] = np.maximum(1.0, self.FACTOR * rng.random(n_high) * xs[~low])
        return out

    def scale_jump_law(self, state: float) -> Prob1D:
        if state <= self.LOW_CUT:
            return Prob1D(1.0, atoms=[(1.0, 0.5)], pieces=[ExpPiece(1.0, 1.0, 0.5)])
        top = self.FACTOR * state
        bottom = 1.0 / top
        return Prob1D(1.0, atoms=[(1.0, bottom)], pieces=[UniformPiece(1.0, top, 1.0 - bottom)])

    def state_given_scale(self, state: float, scale_value: float, rng: np.random.Generator) -> float:
        return scale_value

    def fl_certificate(self) -> FLCertificate:
        return self._cert

    def minorization_at(self, h: float) -> MinorizationCertificate:
        if h < 1.0:
            raise CertificateError(f"threshold must be >= 1, got {h}")
        beta = 0.5 if h <= self.LOW_CUT else min(0.5, 1.0 / (self.FACTOR * h))
        nu = Prob1D.point_mass(1.0)
        return MinorizationCertificate(beta, nu, lambda u, rng: 1.0, order=1)


# ---------------------------------------------------------------------------
# finite-state kernels (for classic CFTP and linear-solve oracles)
# ---------------------------------------------------------------------------


class FiniteChain:
    """Row-stochastic kernel on states {0..n-1}."""

    def __init__(self, kernel):
        p = np.asarray(kernel, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise PerfectSimError("kernel must be a square matrix")
        if np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-12):
            raise PerfectSimError("kernel rows must be probability vectors")
        self.kernel = p
        self.n = p.shape[0]
        self._cum = np.cumsum(p, axis=1)

    def step(self, state: int, rng: np.random.Generator) -> int:
        return int(np.searchsorted(self._cum[state], rng.random(), side="right"))

    def stationary(self) -> np.ndarray:
        """Stationary vector by linear solve of pi P = pi, sum(pi) = 1."""
        a = np.vstack([self.kernel.T - np.eye(self.n), np.ones(self.n)])
        b = np.concatenate([np.zeros(self.n), [1.0]])
        pi, *_ = np.linalg.lstsq(a, b, rcond=None)
        return pi

    def min_mass_minorization(self) -> tuple[float, np.ndarray]:
        """Whole-space minorization from column minima: beta = sum_j min_i P(i,j)."""
        mins = self.kernel.min(axis=0)
        beta = float(mins.sum())
        if beta <= 0.0:
            raise PerfectSimError("kernel has no common component across rows")
        return beta, mins / beta


# ---------------------------------------------------------------------------
# rational enumerations and the everywhere-dense partition
# ---------------------------------------------------------------------------


def unit_rationals(n: int) -> list[Fraction]:
    """First n rationals of [0,1): 0, 1/2, 1/3, 2/3, 1/4, 3/4, ... (by
    denominator, then numerator, reduced)."""
    out: list[Fraction] = [Fraction(0)]
    den = 2
    while len(out) < n:
        for num in range(1, den):
            if math.gcd(num, den) == 1:
                out.append(Fraction(num, den))
                if len(out) == n:
                    break
        den += 1
    return out[:n]


def rationals_ge_one(n: int) -> list[Fraction]:
    """First n rationals of [1, inf) along diagonals of increasing
    numerator + denominator, reduced."""
    out: list[Fraction] = []
    s = 2
    while len(out) < n:
        for den in range(1, s):
            num = s - den
            if num >= den and math.gcd(num, den) == 1:
                out.append(Fraction(num, den))
                if len(out) == n:
                    break
        s += 1
    return out[:n]


@dataclass(frozen=True)
class CounterexampleParams:
    """Contraction rate alpha (supercritical by default) and the truncation
    of the dense-partition construction."""

    alpha: float = 0.5
    n_rationals: int = 40
    r_max: int = 12
    n_classes: int = 8
    alpha_partition: float = 0.25

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise PerfectSimError(f"alpha must be in (0,1), got {self.alpha}")
        if not (0.0 < self.alpha_partition < 0.5):
            raise PerfectSimError("partition constant must lie in (0, 1/2)")
        if self.n_rationals < 1 or self.r_max < 0 or self.n_classes < 1:
            raise PerfectSimError("truncations must be positive")

    @property
    def small_set_top(self) -> float:
        return 1.0 / self.alpha


def _in_level_set(x: float, r: int, qs: list[float], a_part: float) -> bool:
    """Membership of x in the r-th nested union of shrunken rational
    intervals: 2^r x in [q + k, q + k + a_part 2^(-r-n)] for some enumerated
    rational q (index n) and integer k >= 1."""
    t = math.ldexp(x, r)  # 2^r * x
    k0 = math.floor(t)
    for n, q in enumerate(qs):
        width = a_part * math.ldexp(1.0, -(r + n))
        for k in (k0, k0 - 1):
            if k >= 1 and q + k <= t <= q + k + width:
                return True
    return False


@lru_cache(maxsize=16)
def _unit_rationals_float(n: int) -> tuple[float, ...]:
    return tuple(float(q) for q in unit_rationals(n))


def partition_class(x: float, params: CounterexampleParams) -> int:
    """Deterministic class index in {1..n_classes}: the depth r(x) of the
    deepest truncated level set containing x (0 if none), reduced mod the
    class count.  Every class meets every open interval in the untruncated
    construction; truncation keeps that down to a resolution set by the
    retained intervals."""
    if x < 1.0:
        raise PerfectSimError(f"state must be >= 1, got {x}")
    qs = _unit_rationals_float(params.n_rationals)
    depth = 0
    for r in range(params.r_max, -1, -1):
        if _in_level_set(x, r, qs, params.alpha_partition):
            depth = r
            break
    return (depth % params.n_classes) + 1


class CounterexampleChain:
    """Chain on [1, inf), identity scale.

    From x <= 1/alpha: jump to 1 + Exp(1).  From x > 1/alpha in class i:
    jump to q_i * x with probability alpha/q_i, else regenerate to the
    bottom state 1 (the conditional mean is alpha*x + (1 - alpha/q_i)).
    The drift certificate below shrinks toward the bottom even though no
    dominating process on this scale can be positive-recurrent when
    alpha > 1/e.
    """

    def __init__(self, params: CounterexampleParams | None = None):
        self.params = params or CounterexampleParams()
        self._q = [float(q) for q in rationals_ge_one(self.params.n_classes)]

    def scale(self, state: float) -> float:
        return state

    def class_jump(self, state: float) -> tuple[float, float]:
        """(q_i, probability of the multiplicative jump) for state > 1/alpha."""
        q = self._q[partition_class(state, self.params) - 1]
        return q, self.params.alpha / q

    def step(self, state: float, rng: np.random.Generator) -> float:
        if state <= self.params.small_set_top:
            return 1.0 + rng.exponential(1.0)
        q, p_up = self.class_jump(state)
        if rng.random() < p_up:
            return q * state
        return 1.0

    def scale_jump_law(self, state: float) -> Prob1D:
        if state <= self.params.small_set_top:
            return Prob1D(1.0, pieces=[ExpPiece(1.0, 1.0, 1.0)])
        q, p_up = self.class_jump(state)
        return Prob1D(1.0, atoms=[(1.0, 1.0 - p_up), (q * state, p_up)])

    def state_given_scale(self, state: float, scale_value: float, rng: np.random.Generator) -> float:
        return scale_value

    def fl_certificate(self) -> FLCertificate:
        # E[X'|x] = alpha*x + (1 - alpha/q_i) <= alpha*x + 1 off the small
        # set; absorbing the +1 needs a slightly larger rate and small set.
        a = self.params.alpha
        a_cert = min(0.95, a + 0.25)
        c = max(self.params.small_set_top, 1.0 / (a_cert - a))
        b = max(1.0, 2.0 - a_cert, (2.0 + a) - a_cert)  # covers E = 2 inside C
        return FLCertificate(a_cert, b, c)

    def minorization_at(self, h: float) -> MinorizationCertificate:
        if h <= self.params.small_set_top:
            # inside the bottom set the kernel is one fixed law: a
            # regenerative atom, beta = 1
            nu = Prob1D(1.0, pieces=[ExpPiece(1.0, 1.0, 1.0)])
            return MinorizationCertificate(
                1.0, nu, lambda u, rng: nu.quantile(u), order=1
            )
        raise CertificateError(
            "no order-1 minorization above the bottom set: the exponential "
            "and two-point rows are mutually singular; sub-sampling is "
            "required, which is exactly the obstruction this chain exists "
            "to demonstrate"
        )


def minimal_dominator_drift(alpha: float, n: int, rng: np.random.Generator) -> float:
    """Empirical mean log-increment Exp(1) + log(alpha) of the minimal
    dominating walk forced by the Markov bound; expectation 1 + log(alpha),
    positive (transient) iff alpha > 1/e."""
    if n < 10_000:
        raise PerfectSimError(f"need n >= 1e4 increments, got {n}")
    if not (0.0 < alpha < 1.0):
        raise PerfectSimError(f"alpha must be in (0,1), got {alpha}")
    return float(np.mean(rng.exponential(1.0, n) + math.log(alpha)))


# ---------------------------------------------------------------------------
# simulation oracles
# ---------------------------------------------------------------------------


def longrun_oracle(chain, burnin: int, n: int, seed: int, thin: int = 20, x0=None) -> list:
    """Ground-truth equilibrium draws from one long trajectory: burn in,
    then record every `thin`-th state."""
    if burnin < 10_000:
        raise PerfectSimError(f"need burn-in >= 1e4, got {burnin}")
    rng = np.random.default_rng(seed)
    x = 1.0 if x0 is None else x0
    for _ in range(burnin):
        x = chain.step(x, rng)
    out = []
    for _ in range(n):
        for _ in range(thin):
            x = chain.step(x, rng)
        out.append(x)
    return out


def atom_chain_default() -> AtomChain:
    return AtomChain()


def atom_chain_threshold(chain: AtomChain) -> float:
    return threshold_h(chain.fl_certificate())
