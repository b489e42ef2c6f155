"""Regeneration-compatible domination couplings.

``build_mu`` is the running-minimum construction: given beta*nu minorizing a
law that is stochastically dominated by Law V, it produces the unique
measure mu, depending only on (beta*nu, Law V), with

    * mu a probability law stochastically dominating nu,
    * beta*mu minorized by Law V on every interval.

Writing D(u) = P(V > u) - beta*P(nu > u) and M(u) for the running infimum
of D (seeded with 1 - beta below the support), the tail formula is

    beta * P(mu > u) = P(V > u) - M(u).

Everything follows from walking D left to right: wherever D sits strictly
above its running minimum, mu absorbs V's local mass scaled by 1/beta;
wherever D slides along the minimum, mu tracks nu's local mass; atoms get
the difference rule.  The tail formula (not the CDF form, which disagrees
at atoms) is authoritative: it reproduces mu({bottom}) = nu({bottom}) and
total mass 1 on atom instances.

``coupled_step`` advances a dominated pair one transition on a shared
ticket, with an independent Bernoulli(beta) regeneration flag below the
threshold.  On regeneration every dominated trajectory jumps to the same
state, drawn monotonically in the ticket so domination is preserved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .certificates import ChainModel, FLCertificate, MinorizationCertificate, dominating_jump_law
from .errors import IncompatibleMinorizationError, InvalidLawError, PerfectSimError
from .measures import (
    Law1D,
    Prob1D,
    ResidualLaw,
    _segment_stationary_points,
    dominates,
    merge_adjacent_pieces,
    merged_breakpoints,
    ticket_for_value,
)

_EPS = 1e-13


# ---------------------------------------------------------------------------
# Lemma-style mu construction
# ---------------------------------------------------------------------------


def _check_tail_compatibility(beta: float, nu: Prob1D, law_v: Prob1D, pts: list[float]) -> None:
    probes = set(pts)
    t_hi = max(nu.far_quantile(1 - 1e-12), law_v.far_quantile(1 - 1e-12))
    lo = pts[0]
    for i in range(64):
        probes.add(lo + (t_hi - lo) * i / 63.0)
    for t in sorted(probes):
        if beta * nu.survival(t) > law_v.survival(t) + 1e-12:
            raise IncompatibleMinorizationError(
                f"beta*P(nu>t) exceeds P(V>t) first at t={t}: "
                f"{beta * nu.survival(t)} > {law_v.survival(t)}"
            )
        if beta * nu.survival_left(t) > law_v.survival_left(t) + 1e-12:
            raise IncompatibleMinorizationError(
                f"beta*P(nu>=t) exceeds P(V>=t) first at t={t}"
            )


def _active_piece(law: Prob1D, lo: float, hi: float):
    mid = lo + 0.5 * (min(hi, lo + 1.0) - lo) if math.isinf(hi) else 0.5 * (lo + hi)
    for p in law.pieces:
        a, b = p.span
        if a <= mid < b:
            return p
    return None


class _MuBuilder:
    def __init__(self, beta: float, nu: Prob1D, law_v: Prob1D):
        self.beta = beta
        self.nu = nu
        self.law_v = law_v
        self.atoms: list[tuple[float, float]] = []
        self.pieces: list = []
        self.min_level = 1.0 - beta

    def d_at(self, t: float) -> float:
        return self.law_v.survival(t) - self.beta * self.nu.survival(t)

    def d_left(self, t: float) -> float:
        return self.law_v.survival_left(t) - self.beta * self.nu.survival_left(t)

    def emit_shadow(self, lo: float, hi: float) -> None:
        piece = _active_piece(self.law_v, lo, hi)
        if piece is None:
            return
        r = piece.restricted(lo, hi)
        if r is not None:
            self.pieces.append(r.with_mass(r.mass / self.beta))

    def emit_follow(self, lo: float, hi: float) -> None:
        piece = _active_piece(self.nu, lo, hi)
        if piece is None:
            return
        r = piece.restricted(lo, hi)
        if r is not None:
            self.pieces.append(r)

    def process_atom(self, t: float) -> None:
        v_atom = self.law_v.atom_mass(t)
        d_right = self.d_at(t)
        drop = max(0.0, self.min_level - d_right)
        mass = (v_atom - drop) / self.beta
        if mass > 1e-14:
            self.atoms.append((t, mass))
        self.min_level = min(self.min_level, d_right)

    def process_stretch(self, a: float, b: float) -> None:
        """Monotone stretch of D on (a, b), no atoms inside."""
        d_a = self.d_at(a)
        d_b = self.d_left(b) if math.isfinite(b) else 0.0
        m = self.min_level
        if d_a <= m + _EPS and d_b < d_a:
            # decreasing along the running minimum: mu tracks nu
            self.emit_follow(a, b)
            self.min_level = min(m, d_b)
        elif d_b >= m - _EPS:
            # never dips below the minimum: mu absorbs V's mass
            self.emit_shadow(a, b)
            self.min_level = min(m, min(d_a, d_b))
        else:
            # decreasing from above the minimum: crossing splits the stretch
            t_star = self._crossing(a, b, m)
            self.emit_shadow(a, t_star)
            self.emit_follow(t_star, b)
            self.min_level = d_b

    def _crossing(self, a: float, b: float, level: float) -> float:
        f = lambda t: self.d_at(t) - level
        hi = b
        if math.isinf(b):
            hi = max(2.0 * abs(a), a + 1.0)
            while f(hi) > 0.0:
                hi *= 2.0
                if hi > 1e300:
                    return a
        return brentq(f, a, hi, xtol=1e-14, rtol=8.9e-16)

    def build(self) -> Prob1D:
        nu, law_v, beta = self.nu, self.law_v, self.beta
        pts = merged_breakpoints(nu, law_v)
        _check_tail_compatibility(beta, nu, law_v, pts)

        t_scan = max(nu.far_quantile(1 - 1e-14), law_v.far_quantile(1 - 1e-14)) + 1.0
        events = [p for p in pts if p <= t_scan]
        segments = list(zip(events[:-1], events[1:])) + [(events[-1], math.inf)]

        first = events[0]
        self.process_atom(first)
        for lo, hi in segments:
            scan_hi = min(hi, t_scan)
            splits = (
                _segment_stationary_points(law_v, nu, beta, lo, scan_hi)
                if scan_hi > lo
                else []
            )
            knots = [lo] + sorted(splits) + [hi]
            for sa, sb in zip(knots[:-1], knots[1:]):
                if sb > sa:
                    self.process_stretch(sa, sb)
            if math.isfinite(hi):
                self.process_atom(hi)

        pieces = merge_adjacent_pieces(self.pieces)
        total = sum(m for _, m in self.atoms) + sum(p.mass for p in pieces)
        if abs(total - 1.0) > 1e-10:
            raise InvalidLawError(f"mu mass accounting failed: total {total!r}")
        if abs(total - 1.0) > 5e-13:
            scale = 1.0 / total
            self.atoms = [(l, m * scale) for l, m in self.atoms]
            pieces = [p.with_mass(p.mass * scale) for p in pieces]
        return Prob1D(nu.lower_bound, self.atoms, pieces)


def build_mu(beta: float, nu: Prob1D, law_v: Prob1D) -> Prob1D:
    """The measure mu with nu <= mu stochastically and beta*mu <= Law V as
    measures; depends only on (beta*nu, Law V).  Rejects incompatible
    inputs, naming the first tail violation."""
    if not (0.0 < beta <= 1.0):
        raise IncompatibleMinorizationError(f"beta must be in (0,1], got {beta}")
    if abs(nu.lower_bound - law_v.lower_bound) > 1e-9:
        raise IncompatibleMinorizationError("nu and Law V must share a lower bound")
    return _MuBuilder(beta, nu, law_v).build()


# ---------------------------------------------------------------------------
# residual laws and the regeneration split
# ---------------------------------------------------------------------------


def subtract_rescale(top: Prob1D, sub: Prob1D, beta: float) -> Law1D:
    """(top - beta*sub) / (1-beta), exactly.  Returns a concrete law when
    every component of sub matches a same-shape component of top; otherwise
    an exact lazy difference law."""
    if not (0.0 < beta < 1.0):
        raise InvalidLawError(f"residual requires beta in (0,1), got {beta}")
    scale = 1.0 / (1.0 - beta)
    atoms: dict[float, float] = {loc: m for loc, m in top.atoms}
    for loc, m in sub.atoms:
        if loc not in atoms or atoms[loc] < beta * m - 1e-12:
            return ResidualLaw(top, sub, beta)
        atoms[loc] -= beta * m
    pieces = list(top.pieces)
    new_pieces = []
    used = [False] * len(pieces)
    for sp in sub.pieces:
        match = None
        for i, tp in enumerate(pieces):
            if used[i] or tp.kind != sp.kind:
                continue
            (a1, b1), (a2, b2) = tp.span, sp.span
            same_span = abs(a1 - a2) <= 1e-12 * max(1.0, abs(a1)) and (
                (math.isinf(b1) and math.isinf(b2))
                or abs(b1 - b2) <= 1e-12 * max(1.0, abs(b1))
            )
            if not same_span:
                continue
            if tp.kind == "exp" and abs(tp.rate - sp.rate) > 1e-12 * tp.rate:
                continue
            match = i
            break
        if match is None or pieces[match].mass < beta * sp.mass - 1e-12:
            return ResidualLaw(top, sub, beta)
        used[match] = True
        m = pieces[match].mass - beta * sp.mass
        if m > 1e-14:
            new_pieces.append(pieces[match].with_mass(m * scale))
    for i, tp in enumerate(pieces):
        if not used[i]:
            new_pieces.append(tp.with_mass(tp.mass * scale))
    new_atoms = [(loc, m * scale) for loc, m in sorted(atoms.items()) if m * scale > 1e-14]
    return Prob1D(top.lower_bound, new_atoms, sorted(new_pieces, key=lambda p: p.span[0]))


@dataclass(frozen=True)
class RegenSplit:
    """Split of a dominated jump pair into regeneration and residual parts:
    Law X = beta*nu + (1-beta)*residual_x and Law Y = beta*mu + (1-beta)*
    residual_y, with nu <= mu and residual_x <= residual_y stochastically."""

    beta: float
    nu: Prob1D
    mu: Prob1D
    residual_x: Law1D | None
    residual_y: Law1D | None

    @property
    def degenerate(self) -> bool:
        return self.residual_x is None


def regen_split(beta: float, nu: Prob1D, law_x: Prob1D, law_y: Prob1D) -> RegenSplit:
    """Build the full regeneration split for one dominated transition."""
    if not (0.0 < beta <= 1.0):
        raise IncompatibleMinorizationError(f"beta must be in (0,1], got {beta}")
    _check_minorized(law_x, nu, beta)
    if not dominates(law_x, law_y):
        raise IncompatibleMinorizationError("Law X is not dominated by Law Y")
    mu = build_mu(beta, nu, law_y)
    if beta == 1.0:
        return RegenSplit(beta, nu, mu, None, None)
    if 1.0 - beta < 1e-12:
        raise IncompatibleMinorizationError("minorization exhausts the law")
    res_x = subtract_rescale(law_x, nu, beta)
    res_y = subtract_rescale(law_y, mu, beta)
    _check_reassembly(law_x, nu, res_x, beta)
    _check_reassembly(law_y, mu, res_y, beta)
    if not dominates(nu, mu):
        raise IncompatibleMinorizationError("constructed mu fails to dominate nu")
    if not dominates(res_x, res_y):
        raise IncompatibleMinorizationError("residual ordering failed")
    return RegenSplit(beta, nu, mu, res_x, res_y)


def _check_minorized(law: Prob1D, nu: Prob1D, beta: float) -> None:
    """law >= beta*nu as measures: atoms directly, densities on a scan."""
    for loc, m in nu.atoms:
        if law.atom_mass(loc) < beta * m - 1e-12:
            raise IncompatibleMinorizationError(
                f"minorization fails at atom {loc}: {law.atom_mass(loc)} < {beta * m}"
            )
    pts = merged_breakpoints(law, nu)
    t_hi = max(law.far_quantile(1 - 1e-12), nu.far_quantile(1 - 1e-12))
    bounded = [p for p in pts if p < t_hi] + [t_hi]
    for lo, hi in zip(bounded[:-1], bounded[1:]):
        for t in _scan_points(lo, hi, 17):
            if beta * nu.density(t) > law.density(t) + 1e-9 * max(1.0, law.density(t)):
                raise IncompatibleMinorizationError(
                    f"minorization fails in density at t={t}"
                )


def _scan_points(lo: float, hi: float, n: int) -> list[float]:
    return [lo + (hi - lo) * (i + 0.5) / n for i in range(n)]


def _check_reassembly(law: Prob1D, part: Prob1D, residual: Law1D, beta: float) -> None:
    pts = merged_breakpoints(law, part)
    for t in pts:
        lhs = beta * part.survival(t) + (1 - beta) * residual.survival(t)
        if abs(lhs - law.survival(t)) > 1e-10:
            raise InvalidLawError(f"regeneration split fails to reassemble at t={t}")


# ---------------------------------------------------------------------------
# the coupled transition
# ---------------------------------------------------------------------------


@dataclass
class StepRandomness:
    """Fixed per-time randomness layout: one regeneration uniform, one
    coupling-ticket uniform, one conditional-draw stream."""

    regen_u: float
    ticket_u: float
    cond: np.random.Generator


def coupled_step(
    chain: ChainModel,
    x,
    z: float,
    h: float,
    cert: FLCertificate,
    minor: MinorizationCertificate,
    rand: StepRandomness,
    forced_next_z: float | None = None,
):
    """One transition of the dominated pair (X, Y) on shared randomness.

    Returns ``(x_next, z_next, regenerated)``.  The dominating side moves by
    the inverse-CDF of its jump law on the shared ticket; with
    ``forced_next_z`` the already-revealed value is used instead and the
    ticket is recovered from its conditional law, so replays are exact.

    Below the threshold h an independent Bernoulli(beta) flag fires
    regeneration: the target side then jumps to the common post-regeneration
    state, drawn monotonically in the same ticket (every trajectory stepped
    with this randomness lands on the same state).  Otherwise the target
    side moves by the residual law (below h) or its full jump law (above h)
    on the same ticket, and the new scale value never exceeds the new
    dominating level.
    """
    law_w = dominating_jump_law(cert, z)
    if forced_next_z is None:
        z_next = law_w.quantile(rand.ticket_u)
        u = rand.ticket_u
    else:
        z_next = forced_next_z
        u = ticket_for_value(law_w, z_next, rand.ticket_u)

    regenerated = z <= h and rand.regen_u < minor.beta

    if x is None:
        return None, z_next, regenerated

    lam_cur = chain.scale(x)
    if lam_cur > z + 1e-9:
        raise PerfectSimError(f"caller bug: scale {lam_cur} exceeds dominating level {z}")

    if regenerated:
        lam_next = minor.nu.quantile(u)
        x_next = minor.state_sampler(u, rand.cond)
        got = chain.scale(x_next)
        if abs(got - lam_next) > 1e-9 * max(1.0, lam_next):
            raise PerfectSimError(
                "state sampler is not monotone in the ticket: "
                f"scale {got} != nu quantile {lam_next}"
            )
    else:
        law_x = chain.scale_jump_law(x)
        law = subtract_rescale(law_x, minor.nu, minor.beta) if z <= h else law_x
        lam_next = law.quantile(u)
        x_next = chain.state_given_scale(x, lam_next, rand.cond)

    if lam_next > z_next:
        raise PerfectSimError(
            f"domination violated: scale {lam_next} > dominating level {z_next}"
        )
    return x_next, z_next, regenerated
