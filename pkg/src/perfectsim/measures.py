"""One-dimensional probability laws with exact survival/quantile machinery.

Laws are built from point atoms plus closed-form density pieces (uniform,
exponential, Pareto with unit tail exponent).  Every piece family is closed
under truncation to an interval, so constructions that carve mass out of a
law (regeneration splits, running-minimum couplings) stay exactly
representable.

Conventions, used consistently everywhere downstream:

* ``survival(t)`` is P(T > t), right-continuous; ``survival_left(t)`` is the
  left limit P(T >= t).
* ``quantile(p)`` is the generalized inverse CDF: the smallest t with
  CDF(t) >= p.  Sampling by quantile on a shared uniform is what makes the
  monotone couplings work.
* atoms may sit at piece endpoints but never strictly inside a density
  piece's span; split the piece instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from scipy.optimize import brentq

from .errors import InvalidLawError, SupercriticalError

_MASS_TOL = 1e-12
_EPS = 1e-12
INF = math.inf


# ---------------------------------------------------------------------------
# density pieces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformPiece:
    lo: float
    hi: float
    mass: float

    kind = "uniform"

    def __post_init__(self):
        if not (self.hi > self.lo):
            raise InvalidLawError(f"uniform piece needs hi > lo, got [{self.lo}, {self.hi}]")
        if not (self.mass > 0.0 and math.isfinite(self.mass)):
            raise InvalidLawError(f"piece mass must be positive, got {self.mass}")

    @property
    def span(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def surv_contrib(self, t: float) -> float:
        if t <= self.lo:
            return self.mass
        if t >= self.hi:
            return 0.0
        return self.mass * (self.hi - t) / (self.hi - self.lo)

    def quantile_in(self, q: float) -> float:
        return self.lo + (q / self.mass) * (self.hi - self.lo)

    def density(self, t: float) -> float:
        if self.lo <= t < self.hi:
            return self.mass / (self.hi - self.lo)
        return 0.0

    def restricted(self, a: float, b: float) -> "UniformPiece | None":
        lo, hi = max(self.lo, a), min(self.hi, b)
        if hi <= lo:
            return None
        m = self.surv_contrib(lo) - self.surv_contrib(hi)
        if m <= 1e-15:
            return None
        return UniformPiece(lo, hi, m)

    def with_mass(self, m: float):
        return UniformPiece(self.lo, self.hi, m)

    def params(self) -> dict:
        return {"lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class ExpPiece:
    start: float
    rate: float
    mass: float
    hi: float = INF

    kind = "exp"

    def __post_init__(self):
        if not (self.rate > 0.0):
            raise InvalidLawError(f"exp piece needs rate > 0, got {self.rate}")
        if not (self.hi > self.start):
            raise InvalidLawError(f"exp piece needs hi > start")
        if not (self.mass > 0.0 and math.isfinite(self.mass)):
            raise InvalidLawError(f"piece mass must be positive, got {self.mass}")

    @property
    def span(self) -> tuple[float, float]:
        return (self.start, self.hi)

    def _tail_at_hi(self) -> float:
        return 0.0 if math.isinf(self.hi) else math.exp(-self.rate * (self.hi - self.start))

    def surv_contrib(self, t: float) -> float:
        if t <= self.start:
            return self.mass
        if t >= self.hi:
            return 0.0
        e_hi = self._tail_at_hi()
        z = 1.0 - e_hi
        return self.mass * (math.exp(-self.rate * (t - self.start)) - e_hi) / z

    def quantile_in(self, q: float) -> float:
        z = 1.0 - self._tail_at_hi()
        arg = 1.0 - (q / self.mass) * z
        if arg <= 0.0:
            return self.hi
        return self.start - math.log(arg) / self.rate

    def density(self, t: float) -> float:
        if self.start <= t < self.hi:
            z = 1.0 - self._tail_at_hi()
            return self.mass * self.rate * math.exp(-self.rate * (t - self.start)) / z
        return 0.0

    def restricted(self, a: float, b: float) -> "ExpPiece | None":
        lo, hi = max(self.start, a), min(self.hi, b)
        if hi <= lo:
            return None
        m = self.surv_contrib(lo) - self.surv_contrib(hi)
        if m <= 1e-15:
            return None
        return ExpPiece(lo, self.rate, m, hi)

    def with_mass(self, m: float):
        return ExpPiece(self.start, self.rate, m, self.hi)

    def params(self) -> dict:
        p = {"start": self.start, "rate": self.rate}
        if math.isfinite(self.hi):
            p["hi"] = self.hi
        return p


@dataclass(frozen=True)
class ParetoPiece:
    """Pareto tail with exponent 1: survival shape start/t on [start, hi]."""

    start: float
    mass: float
    hi: float = INF

    kind = "pareto"

    def __post_init__(self):
        if not (self.start > 0.0):
            raise InvalidLawError(f"pareto piece needs start > 0, got {self.start}")
        if not (self.hi > self.start):
            raise InvalidLawError("pareto piece needs hi > start")
        if not (self.mass > 0.0 and math.isfinite(self.mass)):
            raise InvalidLawError(f"piece mass must be positive, got {self.mass}")

    @property
    def span(self) -> tuple[float, float]:
        return (self.start, self.hi)

    def _tail_at_hi(self) -> float:
        return 0.0 if math.isinf(self.hi) else self.start / self.hi

    def surv_contrib(self, t: float) -> float:
        if t <= self.start:
            return self.mass
        if t >= self.hi:
            return 0.0
        e_hi = self._tail_at_hi()
        return self.mass * (self.start / t - e_hi) / (1.0 - e_hi)

    def quantile_in(self, q: float) -> float:
        z = 1.0 - self._tail_at_hi()
        arg = 1.0 - (q / self.mass) * z
        if arg <= 0.0:
            return self.hi
        return self.start / arg

    def density(self, t: float) -> float:
        if self.start <= t < self.hi:
            z = 1.0 - self._tail_at_hi()
            return self.mass * (self.start / (t * t)) / z
        return 0.0

    def restricted(self, a: float, b: float) -> "ParetoPiece | None":
        lo, hi = max(self.start, a), min(self.hi, b)
        if hi <= lo:
            return None
        m = self.surv_contrib(lo) - self.surv_contrib(hi)
        if m <= 1e-15:
            return None
        return ParetoPiece(lo, m, hi)

    def with_mass(self, m: float):
        return ParetoPiece(self.start, m, self.hi)

    def params(self) -> dict:
        p = {"start": self.start}
        if math.isfinite(self.hi):
            p["hi"] = self.hi
        return p


Piece = Union[UniformPiece, ExpPiece, ParetoPiece]

_PIECE_KINDS = {"uniform": UniformPiece, "exp": ExpPiece, "pareto": ParetoPiece}


def piece_from_dict(d: dict) -> Piece:
    kind = d["kind"]
    if kind not in _PIECE_KINDS:
        raise InvalidLawError(f"unknown piece kind {kind!r}")
    params = dict(d["params"])
    params["mass"] = d["mass"]
    if kind == "uniform":
        return UniformPiece(params["lo"], params["hi"], params["mass"])
    if kind == "exp":
        return ExpPiece(params["start"], params["rate"], params["mass"], params.get("hi", INF))
    return ParetoPiece(params["start"], params["mass"], params.get("hi", INF))


# ---------------------------------------------------------------------------
# coupling ticket
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CouplingTicket:
    """A shared uniform variate consumed by one monotone coupling step."""

    u: float

    def __post_init__(self):
        if not (0.0 < self.u < 1.0):
            raise InvalidLawError(f"ticket must lie strictly inside (0,1), got {self.u}")


# ---------------------------------------------------------------------------
# Prob1D
# ---------------------------------------------------------------------------


class Prob1D:
    """A probability law on [lower_bound, inf) built from atoms plus pieces."""

    __slots__ = ("lower_bound", "atoms", "pieces")

    def __init__(
        self,
        lower_bound: float,
        atoms: Iterable[tuple[float, float]] = (),
        pieces: Iterable[Piece] = (),
    ):
        atoms = tuple(sorted(((float(l), float(m)) for l, m in atoms), key=lambda a: a[0]))
        pieces = tuple(sorted(pieces, key=lambda p: p.span[0]))
        self.lower_bound = float(lower_bound)
        self.atoms = atoms
        self.pieces = pieces
        self._validate()

    def _validate(self):
        total = 0.0
        last_loc = None
        for loc, m in self.atoms:
            if m <= 0.0:
                raise InvalidLawError(f"atom mass must be positive, got {m} at {loc}")
            if loc < self.lower_bound - 1e-12:
                raise InvalidLawError(f"atom at {loc} below lower bound {self.lower_bound}")
            if last_loc is not None and loc <= last_loc:
                raise InvalidLawError("atoms must be strictly increasing in location")
            last_loc = loc
            total += m
        prev_hi = None
        for p in self.pieces:
            lo, hi = p.span
            if lo < self.lower_bound - 1e-12:
                raise InvalidLawError(f"piece starting at {lo} below lower bound")
            if prev_hi is not None and lo < prev_hi - 1e-12:
                raise InvalidLawError("pieces must be non-overlapping and sorted")
            prev_hi = hi
            total += p.mass
        for loc, _ in self.atoms:
            for p in self.pieces:
                lo, hi = p.span
                if lo + 1e-15 < loc < hi - 1e-15 and not math.isinf(hi):
                    raise InvalidLawError(
                        f"atom at {loc} lies inside piece span ({lo}, {hi}); split the piece"
                    )
                if math.isinf(hi) and loc > lo + 1e-15:
                    raise InvalidLawError(
                        f"atom at {loc} lies inside unbounded piece starting at {lo}"
                    )
        if abs(total - 1.0) > _MASS_TOL:
            raise InvalidLawError(f"total mass {total!r} differs from 1 by more than {_MASS_TOL}")

    # -- evaluation -----------------------------------------------------

    def survival(self, t: float) -> float:
        s = 0.0
        for loc, m in self.atoms:
            if loc > t:
                s += m
        for p in self.pieces:
            s += p.surv_contrib(t)
        return min(1.0, s)

    def survival_left(self, t: float) -> float:
        s = 0.0
        for loc, m in self.atoms:
            if loc >= t:
                s += m
        for p in self.pieces:
            s += p.surv_contrib(t)
        return min(1.0, s)

    def cdf(self, t: float) -> float:
        return 1.0 - self.survival(t)

    def atom_mass(self, t: float) -> float:
        for loc, m in self.atoms:
            if loc == t:
                return m
        return 0.0

    def density(self, t: float) -> float:
        return sum(p.density(t) for p in self.pieces)

    def quantile(self, p: float) -> float:
        if not (0.0 < p < 1.0):
            raise InvalidLawError(f"quantile requires p in (0,1), got {p}")
        cum = 0.0
        for kind, obj in self._ordered_components():
            if kind == "atom":
                loc, m = obj
                cum += m
                if p <= cum + 1e-15:
                    return loc
            else:
                nxt = cum + obj.mass
                if p <= nxt + 1e-15:
                    q = min(max(p - cum, 1e-300), obj.mass)
                    return obj.quantile_in(q)
                cum = nxt
        # p ~ 1 within tolerance of accumulated mass
        return self._support_top()

    def sample(self, ticket: CouplingTicket) -> float:
        return self.quantile(ticket.u)

    # -- structure ------------------------------------------------------

    def _ordered_components(self):
        comps = [((loc, 0), ("atom", a)) for a in self.atoms for loc in (a[0],)]
        comps += [((p.span[0], 1), ("piece", p)) for p in self.pieces]
        comps.sort(key=lambda c: c[0])
        return [c[1] for c in comps]

    def _support_top(self) -> float:
        top = self.lower_bound
        if self.atoms:
            top = max(top, self.atoms[-1][0])
        for p in self.pieces:
            top = max(top, p.span[1])
        return top

    def breakpoints(self) -> list[float]:
        pts = {self.lower_bound}
        for loc, _ in self.atoms:
            pts.add(loc)
        for p in self.pieces:
            lo, hi = p.span
            pts.add(lo)
            if math.isfinite(hi):
                pts.add(hi)
        return sorted(pts)

    def far_quantile(self, p: float) -> float:
        """Upper quantile, finite even for p close to 1 (support top if bounded)."""
        top = self._support_top()
        if math.isfinite(top):
            return top
        return self.quantile(p)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "lower_bound": self.lower_bound,
            "atoms": [{"loc": l, "mass": m} for l, m in self.atoms],
            "pieces": [{"kind": p.kind, "params": p.params(), "mass": p.mass} for p in self.pieces],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Prob1D":
        return cls(
            d["lower_bound"],
            [(a["loc"], a["mass"]) for a in d["atoms"]],
            [piece_from_dict(p) for p in d["pieces"]],
        )

    def __repr__(self):
        return f"Prob1D(lb={self.lower_bound}, atoms={self.atoms}, pieces={self.pieces})"

    @staticmethod
    def point_mass(loc: float, lower_bound: float | None = None) -> "Prob1D":
        lb = loc if lower_bound is None else lower_bound
        return Prob1D(lb, atoms=[(loc, 1.0)])


# ---------------------------------------------------------------------------
# lazy difference law: (top - coef*sub) / (1 - coef)
# ---------------------------------------------------------------------------


class ResidualLaw:
    """Exact lazy (top - coef*sub)/(1-coef), for differences of distinct
    density families that leave the closed-form piece set.  Survival and
    atom masses are exact linear combinations; quantiles invert the survival
    by bracketed root-finding inside smooth segments."""

    __slots__ = ("top", "sub", "coef", "lower_bound")

    def __init__(self, top: Prob1D, sub: Prob1D, coef: float):
        if not (0.0 < coef < 1.0):
            raise InvalidLawError(f"residual coefficient must be in (0,1), got {coef}")
        self.top = top
        self.sub = sub
        self.coef = coef
        self.lower_bound = top.lower_bound

    def survival(self, t: float) -> float:
        s = (self.top.survival(t) - self.coef * self.sub.survival(t)) / (1.0 - self.coef)
        return min(1.0, max(0.0, s))

    def survival_left(self, t: float) -> float:
        s = (self.top.survival_left(t) - self.coef * self.sub.survival_left(t)) / (1.0 - self.coef)
        return min(1.0, max(0.0, s))

    def cdf(self, t: float) -> float:
        return 1.0 - self.survival(t)

    def atom_mass(self, t: float) -> float:
        m = (self.top.atom_mass(t) - self.coef * self.sub.atom_mass(t)) / (1.0 - self.coef)
        return max(0.0, m)

    def density(self, t: float) -> float:
        f = (self.top.density(t) - self.coef * self.sub.density(t)) / (1.0 - self.coef)
        return max(0.0, f)

    def breakpoints(self) -> list[float]:
        return sorted(set(self.top.breakpoints()) | set(self.sub.breakpoints()))

    def far_quantile(self, p: float) -> float:
        return max(self.top.far_quantile(p), self.sub.far_quantile(p))

    def quantile(self, p: float) -> float:
        if not (0.0 < p < 1.0):
            raise InvalidLawError(f"quantile requires p in (0,1), got {p}")
        target = 1.0 - p  # survival level to hit
        pts = self.breakpoints()
        prev = pts[0]
        if self.survival_left(prev) <= target + 1e-15:
            return prev
        for t in pts:
            # atom at t can jump the survival past the target
            if self.survival(t) <= target:
                if self.survival_left(t) > target:
                    return t
                # target crossed inside (prev, t)
                f = lambda x: self.survival(x) - target
                if f(prev) <= 0.0:
                    return prev
                return brentq(f, prev, t, xtol=1e-14, rtol=8.9e-16)
            prev = t
        # crossing lies beyond the last breakpoint: expand a bracket
        lo = prev
        hi = max(2.0 * abs(lo), lo + 1.0)
        while self.survival(hi) > target:
            hi *= 2.0
            if hi > 1e300:
                return lo
        f = lambda x: self.survival(x) - target
        return brentq(f, lo, hi, xtol=1e-14, rtol=8.9e-16)

    def sample(self, ticket: CouplingTicket) -> float:
        return self.quantile(ticket.u)


Law1D = Union[Prob1D, ResidualLaw]


# ---------------------------------------------------------------------------
# stochastic dominance and monotone coupling
# ---------------------------------------------------------------------------


def _segment_stationary_points(a: Law1D, b: Law1D, coef_b: float, lo: float, hi: float) -> list[float]:
    """Roots of coef_b*f_b - f_a inside (lo, hi): stationary points of
    S_a - coef_b*S_b.  Densities are single-family within a merged segment,
    so the difference has at most two sign changes; a sign scan plus brentq
    finds them all."""
    if not math.isfinite(hi) or hi <= lo:
        return []
    g = lambda t: coef_b * b.density(t) - a.density(t)
    n = 33
    xs = [lo + (hi - lo) * (i + 0.5) / n for i in range(n)]
    roots = []
    prev_x, prev_s = xs[0], g(xs[0])
    for x in xs[1:]:
        s = g(x)
        if prev_s == 0.0:
            roots.append(prev_x)
        elif s * prev_s < 0.0:
            roots.append(brentq(g, prev_x, x, xtol=1e-13, rtol=8.9e-16))
        prev_x, prev_s = x, s
    return roots


def merged_breakpoints(a: Law1D, b: Law1D) -> list[float]:
    return sorted(set(a.breakpoints()) | set(b.breakpoints()))


def dominates(a: Law1D, b: Law1D, grid_resolution: float = 1e-3) -> bool:
    """True iff survival(a, t) <= survival(b, t) everywhere: b stochastically
    dominates a.  Checked at breakpoints, stationary points of the survival
    difference, and a safety grid."""
    if abs(a.lower_bound - b.lower_bound) > 1e-9:
        raise InvalidLawError("dominance check requires laws on a common lower bound")
    pts = merged_breakpoints(a, b)
    t_top = max(a.far_quantile(1.0 - 1e-9), b.far_quantile(1.0 - 1e-9))
    span = max(t_top - pts[0], 1e-9)
    extrema: list[float] = []
    bounded = [p for p in pts if p <= t_top] + [t_top]
    for lo, hi in zip(bounded[:-1], bounded[1:]):
        extrema += _segment_stationary_points(a, b, 1.0, lo, hi)
    n_grid = max(8, int(round(1.0 / grid_resolution)))
    grid = [pts[0] + span * i / n_grid for i in range(n_grid + 1)]
    for t in sorted(set(pts) | set(extrema) | set(grid)):
        if a.survival(t) > b.survival(t) + 1e-12:
            return False
        if a.survival_left(t) > b.survival_left(t) + 1e-12:
            return False
    return True


def monotone_coupled_pair(a: Law1D, b: Law1D, ticket: CouplingTicket) -> tuple[float, float]:
    """Inverse-CDF coupling on a shared ticket.  When ``dominates(a, b)``
    holds the first component never exceeds the second; if the caller skips
    that precondition the outputs are still correct marginally."""
    return a.quantile(ticket.u), b.quantile(ticket.u)


def ticket_for_value(law: Law1D, y: float, r: float) -> float:
    """The ticket u with quantile(law, u) = y, uniformized over the preimage
    interval when y carries an atom (r supplies the uniform position)."""
    c_left = 1.0 - law.survival_left(y)
    c_right = 1.0 - law.survival(y)
    if c_right > c_left:
        u = c_left + r * (c_right - c_left)
    else:
        u = c_right
    return min(max(u, 1e-300), 1.0 - 1e-16)


# ---------------------------------------------------------------------------
# G/M/1 fixed point
# ---------------------------------------------------------------------------


def fixed_point_sigma(d: float) -> float:
    """Unique root in (0,1) of sigma = exp(-d*(1-sigma)) for inter-arrival
    gap d > 1, by bracketing bisection; residual below 1e-12."""
    if not (d > 1.0):
        raise SupercriticalError("supercritical dominating walk; sub-sample first")
    f = lambda s: s - math.exp(-d * (1.0 - s))
    lo, hi = 1e-300, 1.0 - 1e-15
    if f(lo) >= 0.0:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    sigma = 0.5 * (lo + hi)
    if abs(f(sigma)) > 1e-12:
        raise SupercriticalError(f"fixed point residual too large at d={d}")
    return sigma


# ---------------------------------------------------------------------------
# canonical merging (adjacent same-shape pieces)
# ---------------------------------------------------------------------------


def merge_adjacent_pieces(pieces: Sequence[Piece]) -> list[Piece]:
    """Merge runs of adjacent pieces that continue the same density curve.
    Makes constructed laws canonical: two representations of the same
    measure merge to identical structure."""
    out: list[Piece] = []
    for p in pieces:
        if out:
            q = out[-1]
            if _mergeable(q, p):
                out[-1] = _merged(q, p)
                continue
        out.append(p)
    return out


def _mergeable(q: Piece, p: Piece) -> bool:
    if q.kind != p.kind:
        return False
    q_hi, p_lo = q.span[1], p.span[0]
    if not math.isfinite(q_hi) or abs(q_hi - p_lo) > 1e-12 * max(1.0, abs(p_lo)):
        return False
    if q.kind == "exp" and abs(q.rate - p.rate) > 1e-12 * q.rate:
        return False
    fq = q.density(q_hi - 1e-9 * max(1.0, abs(q_hi)))
    fp = p.density(p_lo)
    if fq <= 0.0 or fp <= 0.0:
        return False
    return abs(fq - fp) <= 1e-6 * max(fq, fp)


def _merged(q: Piece, p: Piece) -> Piece:
    m = q.mass + p.mass
    if q.kind == "uniform":
        return UniformPiece(q.lo, p.hi, m)
    if q.kind == "exp":
        return ExpPiece(q.start, q.rate, m, p.hi)
    return ParetoPiece(q.start, m, p.hi)
