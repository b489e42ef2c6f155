"""Drift and regeneration certificates, and the target-chain interface.

A geometric drift certificate (alpha, b, c) asserts, for the chain's scale
function L >= 1,

    E[L(X') | X = x]  <=  alpha * L(x) + b * 1{L(x) <= c},

with alpha in (0,1).  Sub-level sets of L are small; the engine consumes the
regeneration structure through an order-1 minorization certificate at the
threshold level h derived below.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import CertificateError
from .measures import ParetoPiece, Prob1D

E_INV = math.exp(-1.0)


@dataclass(frozen=True)
class FLCertificate:
    """Witness (alpha, b, c) of the geometric drift condition; the small set
    is the sub-level set {L <= c}."""

    alpha: float
    b: float
    c: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise CertificateError(f"alpha must be in (0,1), got {self.alpha}")
        if not (self.b > 0.0):
            raise CertificateError(f"b must be positive, got {self.b}")
        if self.alpha + self.b < 1.0:
            # with L >= 1 the drift bound at the minimum forces alpha + b >= 1
            raise CertificateError(f"alpha + b must be >= 1, got {self.alpha + self.b}")
        if not (self.c >= 1.0):
            raise CertificateError(f"c must be >= 1, got {self.c}")

    @property
    def reflection_level(self) -> float:
        return self.c + self.b / self.alpha

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "b": self.b, "c": self.c}

    @classmethod
    def from_dict(cls, d: dict) -> "FLCertificate":
        return cls(d["alpha"], d["b"], d["c"])


@dataclass(frozen=True)
class MinorizationCertificate:
    """Order-k regeneration witness: from every state in the small set the
    k-step kernel contains the common component beta * nu.

    ``state_sampler(u, rng)`` draws the post-regeneration state; its scale
    value must equal ``nu.quantile(u)`` so that regeneration draws stay
    monotone in the shared coupling ticket (auxiliary randomness, if any,
    comes from ``rng``).
    """

    beta: float
    nu: Prob1D
    state_sampler: Callable[[float, np.random.Generator], object] = field(repr=False)
    order: int = 1

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0):
            raise CertificateError(f"beta must be in (0,1], got {self.beta}")
        if self.order < 1:
            raise CertificateError(f"order must be >= 1, got {self.order}")

    def to_dict(self) -> dict:
        return {"beta": self.beta, "order": self.order, "nu": self.nu.to_dict()}


@runtime_checkable
class ChainModel(Protocol):
    """Capabilities a target chain exposes to the sampler.

    ``scale`` is the drift scale function L (values >= 1); ``scale_jump_law``
    is the exact law of L(X') given the current state; ``state_given_scale``
    is a regular conditional draw of X' given L(X').  Implementations must be
    pure given explicit randomness.
    """

    def scale(self, state) -> float: ...

    def step(self, state, rng: np.random.Generator): ...

    def scale_jump_law(self, state) -> Prob1D: ...

    def state_given_scale(self, state, scale_value: float, rng: np.random.Generator): ...

    def fl_certificate(self) -> FLCertificate: ...

    def minorization_at(self, h: float) -> MinorizationCertificate: ...


class SubsamplingVariant(enum.Enum):
    RATE = "rate"           # alpha -> alpha^(k-1), constants free of c
    CONSTANTS = "constants"  # alpha unchanged, constants free of c and k


def subsample_certificate(cert: FLCertificate, k: int, variant: SubsamplingVariant) -> FLCertificate:
    """Drift certificate for the k-step kernel.

    RATE:      (alpha^(k-1), b/(1-a), b/(a^(k-1) (1-a)^2))
    CONSTANTS: (alpha,        b/(1-a), b/(a (1-a)^2)), requires k >= 2
    """
    if k < 1:
        raise CertificateError(f"k must be >= 1, got {k}")
    if k == 1:
        if variant is SubsamplingVariant.CONSTANTS:
            raise CertificateError("CONSTANTS sub-sampling requires k >= 2")
        return cert
    a, b = cert.alpha, cert.b
    if variant is SubsamplingVariant.RATE:
        return FLCertificate(a ** (k - 1), b / (1 - a), b / (a ** (k - 1) * (1 - a) ** 2))
    return FLCertificate(a, b / (1 - a), b / (a * (1 - a) ** 2))


def choose_subsampling_k(cert: FLCertificate) -> int:
    """Smallest k with alpha^(k-1) < 1/e; 1 when alpha is already subcritical."""
    if cert.alpha < E_INV:
        return 1
    k = 2
    while cert.alpha ** (k - 1) >= E_INV:
        k += 1
    return k


def threshold_h(cert: FLCertificate) -> float:
    """Stable sub-sampling-proof threshold

        h = max{ c + b/a,  (b/(a(1-a))) * (1 + 1/(1-a)) }.

    The second branch equals c'' + b''/a for the CONSTANTS-sub-sampled
    constants, i.e. the reflection level of the transformed certificate, so
    the dominating walk can still sink below h after further sub-sampling.
    """
    a, b, c = cert.alpha, cert.b, cert.c
    return max(c + b / a, (b / (a * (1 - a))) * (1 + 1 / (1 - a)))


def dominating_jump_law(cert: FLCertificate, z: float) -> Prob1D:
    """Law of the dominating jump Y' = max(R, alpha*z*exp(E)), E ~ Exp(1),
    from level z >= R = c + b/a: an atom at R plus a unit-exponent Pareto
    tail with survival min(1, alpha*z/t)."""
    r = cert.reflection_level
    if z < r - 1e-12:
        raise CertificateError(f"dominating level z={z} below reflection level {r}")
    az = cert.alpha * z
    if az >= r:
        return Prob1D(1.0, pieces=[ParetoPiece(az, 1.0)])
    tail = az / r
    return Prob1D(1.0, atoms=[(r, 1.0 - tail)], pieces=[ParetoPiece(r, tail)])


def dominating_jump_survival(cert: FLCertificate, z: float, t: float) -> float:
    """P(Y' > t | Y = z): min(1, alpha*z/t) at and above the reflection
    level, 1 below it."""
    r = cert.reflection_level
    if z < r - 1e-12:
        raise CertificateError(f"dominating level z={z} below reflection level {r}")
    if t < r:
        return 1.0
    return min(1.0, cert.alpha * z / t)


@dataclass
class DriftProbeResult:
    state: object
    scale_value: float
    estimate: float
    std_error: float
    bound: float
    margin: float  # bound + tol - (estimate + 4*se); negative flags a violation

    @property
    def ok(self) -> bool:
        return self.margin >= 0.0


@dataclass
class DriftReport:
    cert: FLCertificate
    n: int
    tol: float
    probes: list[DriftProbeResult]

    @property
    def ok(self) -> bool:
        return all(p.ok for p in self.probes)

    def to_text(self) -> str:
        lines = [
            f"drift check: alpha={self.cert.alpha} b={self.cert.b} c={self.cert.c} "
            f"n={self.n} tol={self.tol}"
        ]
        for p in self.probes:
            status = "ok " if p.ok else "VIOLATION"
            lines.append(
                f"  {status} L(x)={p.scale_value:<10.6g} estimate={p.estimate:.6g} "
                f"(se {p.std_error:.3g}) bound={p.bound:.6g} margin={p.margin:.4g}"
            )
        return "\n".join(lines)


def verify_fl_monte_carlo(
    chain: ChainModel,
    cert: FLCertificate,
    probe_states: Sequence,
    n: int,
    tol: float = 0.0,
    rng: np.random.Generator | None = None,
) -> DriftReport:
    """Monte Carlo drift diagnostic: for each probe state, the estimate of
    E[L(X')|x] plus a 4-standard-error guard band must not exceed
    alpha*L(x) + b*1{L(x) <= c} + tol.  Violations are reported, not raised.
    """
    if n < 1000:
        raise CertificateError(f"need n >= 1000 Monte Carlo samples, got {n}")
    if rng is None:
        rng = np.random.default_rng(0)
    probes = []
    for x in probe_states:
        lam = chain.scale(x)
        draws = _scale_draws(chain, x, n, rng)
        est = float(np.mean(draws))
        se = float(np.std(draws, ddof=1) / math.sqrt(n))
        bound = cert.alpha * lam + (cert.b if lam <= cert.c else 0.0)
        margin = bound + tol - (est + 4.0 * se)
        probes.append(DriftProbeResult(x, lam, est, se, bound, margin))
    return DriftReport(cert, n, tol, probes)


def _scale_draws(chain: ChainModel, x, n: int, rng: np.random.Generator) -> np.ndarray:
    step_many = getattr(chain, "step_many", None)
    if step_many is not None:
        states = step_many(np.full(n, x, dtype=float), rng)
        return np.asarray([chain.scale(s) for s in states], dtype=float)
    return np.asarray([chain.scale(chain.step(x, rng)) for _ in range(n)], dtype=float)


class ComposedChain:
    """k-step composition of a chain's kernel; enough surface for drift
    verification of sub-sampled certificates (no closed-form jump laws:
    convolving the kernel is exactly the hard part sub-sampling introduces).
    """

    def __init__(self, base: ChainModel, k: int):
        if k < 1:
            raise CertificateError("composition order must be >= 1")
        self.base = base
        self.k = k

    def scale(self, state) -> float:
        return self.base.scale(state)

    def step(self, state, rng: np.random.Generator):
        x = state
        for _ in range(self.k):
            x = self.base.step(x, rng)
        return x

    def step_many(self, states, rng: np.random.Generator):
        xs = states
        step_many = getattr(self.base, "step_many", None)
        if step_many is not None:
            for _ in range(self.k):
                xs = step_many(xs, rng)
            return xs
        return np.asarray([self.step(x, rng) for x in xs], dtype=float)
