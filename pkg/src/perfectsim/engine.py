"""Dominated coupling-from-the-past, end to end.

One run: reveal the dominating walk backwards in exact stationarity, scan
its sub-threshold times from the most recent one downwards, fire an
independent Bernoulli(beta) coalescence flag at each candidate, and on
success reconstruct the target chain forward to time 0 against the already
fixed dominating values.  All randomness is a pure function of
(seed, time, role), so re-examined steps are identical across attempts and
the whole run replays bit-identically from its seed.

The classic constant-dominator special case (whole space small) is exposed
separately for finite kernels.
"""

from __future__ import annotations

import json
import math
import time as _time
from dataclasses import dataclass, field

import numpy as np

from .certificates import (
    ChainModel,
    E_INV,
    FLCertificate,
    MinorizationCertificate,
    dominating_jump_law,
    threshold_h,
)
from .coupling import StepRandomness, coupled_step
from .errors import CertificateError, PerfectSimError
from .measures import dominates, ticket_for_value
from .streams import (
    ROLE_CONDITIONAL,
    ROLE_REGEN,
    ROLE_TICKET,
    StreamKit,
)
from .workload import DominatingPath, QueueParams, extend_back_to_subthreshold


@dataclass(frozen=True)
class CftpRun:
    """Result of one perfect-sampling run.  Wall time is excluded from
    equality: a run is its deterministic content."""

    seed: int
    t_final: int          # coalescence time (negative)
    attempts: int         # sub-threshold candidates examined
    sample: object        # the returned X_0
    lambda_sample: float  # scale value of X_0
    backoff_depth: int    # how far the dominating path was extended
    subthreshold_visits: int
    wall_ms: float = field(compare=False)

    def to_record(self, timings: bool = False) -> dict:
        rec = {
            "seed": self.seed,
            "T_final": self.t_final,
            "attempts": self.attempts,
            "sample": self.sample,
            "lambda_sample": self.lambda_sample,
        }
        if timings:
            rec["wall_ms"] = self.wall_ms
        return rec

    def to_jsonl(self, timings: bool = False) -> str:
        return json.dumps(self.to_record(timings=timings), sort_keys=True)


class Sampler:
    """Prepared dominated-CFTP sampler for one chain.

    Certificate work (threshold, minorization order, stochastic-ordering
    checks between the regeneration measure and the dominating kernel) runs
    once at construction; each ``run(seed)`` is then a pure function of the
    seed.
    """

    def __init__(self, chain: ChainModel, depth_cap: int = 1_000_000):
        self.chain = chain
        self.depth_cap = depth_cap
        self.cert = chain.fl_certificate()
        if self.cert.alpha >= E_INV:
            raise CertificateError(
                f"alpha={self.cert.alpha} >= 1/e: the dominating walk is not "
                "positive-recurrent; sub-sample first"
            )
        self.h = threshold_h(self.cert)
        self.minor = chain.minorization_at(self.h)
        if self.minor.order != 1:
            raise CertificateError(
                f"engine needs an order-1 minorization at h={self.h}, "
                f"got order {self.minor.order}"
            )
        # the regeneration measure must sit below the dominating jump law so
        # the shared-ticket coupling keeps coalesced states dominated
        r = self.cert.reflection_level
        for z in (r, 0.5 * (r + self.h), self.h):
            if not dominates(self.minor.nu, dominating_jump_law(self.cert, z)):
                raise CertificateError(
                    "regeneration measure is not stochastically below the "
                    f"dominating jump law at level z={z}"
                )
        self.params = QueueParams.from_alpha(self.cert.alpha, r)

    def run(self, seed: int) -> CftpRun:
        t0 = _time.perf_counter()
        path = DominatingPath(seed, self.params, depth_cap=self.depth_cap)
        streams = StreamKit(seed)

        attempts = 0
        t_candidate = extend_back_to_subthreshold(path, self.h, strictly_before=0)
        while True:
            attempts += 1
            if streams.uniform(t_candidate, ROLE_REGEN) < self.minor.beta:
                break
            t_candidate = extend_back_to_subthreshold(
                path, self.h, strictly_before=t_candidate
            )

        x = self._forward(path, t_candidate, streams)
        lam = self.chain.scale(x)
        if lam > path.y_at(0):
            raise PerfectSimError("domination violated at time 0")
        wall_ms = (_time.perf_counter() - t0) * 1e3
        return CftpRun(
            seed=seed,
            t_final=t_candidate,
            attempts=attempts,
            sample=x,
            lambda_sample=lam,
            backoff_depth=-path.frontier,
            subthreshold_visits=attempts,
            wall_ms=wall_ms,
        )

    def _forward(self, path: DominatingPath, t_coalesce: int, streams: StreamKit):
        """Replay the coupled chain from the coalescence at time T to time
        0 against the fixed dominating values."""
        law_w = dominating_jump_law(self.cert, path.y_at(t_coalesce))
        u = ticket_for_value(
            law_w, path.y_at(t_coalesce + 1), streams.uniform(t_coalesce, ROLE_TICKET)
        )
        x = self.minor.state_sampler(u, streams.at(t_coalesce, ROLE_CONDITIONAL))
        if self.chain.scale(x) > path.y_at(t_coalesce + 1):
            raise PerfectSimError("coalesced state exceeds the dominating level")
        for s in range(t_coalesce + 1, 0):
            rand = StepRandomness(
                regen_u=streams.uniform(s, ROLE_REGEN),
                ticket_u=streams.uniform(s, ROLE_TICKET),
                cond=streams.at(s, ROLE_CONDITIONAL),
            )
            x, _, _ = coupled_step(
                self.chain,
                x,
                path.y_at(s),
                self.h,
                self.cert,
                self.minor,
                rand,
                forced_next_z=path.y_at(s + 1),
            )
        return x


def perfect_sample(chain: ChainModel, seed: int, depth_cap: int = 1_000_000) -> CftpRun:
    """One exact draw from the chain's stationary law.

    Requires the chain's drift certificate to be subcritical (alpha < 1/e)
    and an order-1 regeneration certificate at the derived threshold h;
    otherwise fails before any sampling.
    """
    return Sampler(chain, depth_cap=depth_cap).run(seed)


def sample_many(chain: ChainModel, n: int, seed: int, depth_cap: int = 1_000_000) -> list[CftpRun]:
    """Independent runs on seeds seed, seed+1, ..., seed+n-1."""
    sampler = Sampler(chain, depth_cap=depth_cap)
    return [sampler.run(seed + i) for i in range(n)]


# ---------------------------------------------------------------------------
# classic CFTP: constant dominating level, whole space small
# ---------------------------------------------------------------------------


def classic_cftp(kernel, beta: float, nu, seed: int, depth_cap: int = 1_000_000) -> int:
    """Exact stationary draw from a finite kernel via the constant-dominator
    special case: the whole state space is small, the dominating process
    sits at the threshold, and every time step is a coalescence candidate.

    Requires kernel(i, j) >= beta * nu(j) for all i, j.
    """
    p = np.asarray(kernel, dtype=float)
    nu = np.asarray(nu, dtype=float)
    n = p.shape[0]
    if p.ndim != 2 or p.shape[1] != n or nu.shape != (n,):
        raise CertificateError("kernel must be square and nu must match its size")
    if np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-12) or abs(nu.sum() - 1.0) > 1e-12:
        raise CertificateError("kernel rows and nu must be probability vectors")
    if not (0.0 < beta <= 1.0):
        raise CertificateError(f"beta must be in (0,1], got {beta}")
    bad = np.argwhere(p < beta * nu[None, :] - 1e-12)
    if bad.size:
        i, j = bad[0]
        raise CertificateError(
            f"minorization fails at kernel({i},{j})={p[i, j]} < beta*nu({j})={beta * nu[j]}"
        )
    if beta == 1.0:
        residual = np.full_like(p, 1.0 / n)
    else:
        residual = (p - beta * nu[None, :]) / (1.0 - beta)
    cum_nu = np.cumsum(nu)
    cum_res = np.cumsum(residual, axis=1)
    streams = StreamKit(seed)

    # most recent flagged time
    t = -1
    while streams.uniform(t, ROLE_REGEN) >= beta:
        t -= 1
        if -t > depth_cap:
            raise CertificateError("no regeneration within the depth cap")
    x = int(np.searchsorted(cum_nu, streams.uniform(t, ROLE_TICKET), side="right"))
    for s in range(t + 1, 0):
        u = streams.uniform(s, ROLE_TICKET)
        if streams.uniform(s, ROLE_REGEN) < beta:
            x = int(np.searchsorted(cum_nu, u, side="right"))
        else:
            x = int(np.searchsorted(cum_res[x], u, side="right"))
    return x


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


@dataclass
class DiagnosticsReport:
    n_runs: int
    mean_attempts: float
    attempts_hist: dict[int, int]
    depth_quantiles: dict[str, float]
    wall_ms_quantiles: dict[str, float]
    coalescence_frequency: float
    coalescence_target: float
    coalescence_band: float  # 3 standard errors

    @property
    def coalescence_ok(self) -> bool:
        return abs(self.coalescence_frequency - self.coalescence_target) <= self.coalescence_band

    def to_text(self) -> str:
        lines = [
            f"runs: {self.n_runs}",
            f"attempts: mean {self.mean_attempts:.3f}, histogram "
            + ", ".join(f"{k}:{v}" for k, v in sorted(self.attempts_hist.items())[:12]),
            "backoff depth quantiles: "
            + ", ".join(f"{k}={v:.0f}" for k, v in self.depth_quantiles.items()),
            "wall ms quantiles: "
            + ", ".join(f"{k}={v:.2f}" for k, v in self.wall_ms_quantiles.items()),
            f"coalescence frequency at sub-threshold times: "
            f"{self.coalescence_frequency:.5f} vs target {self.coalescence_target:.5f} "
            f"(+-{self.coalescence_band:.5f}, {'ok' if self.coalescence_ok else 'OFF'})",
        ]
        return "\n".join(lines)


def diagnostics_summary(runs: list[CftpRun], beta: float | None = None) -> DiagnosticsReport:
    """Aggregate run statistics: attempts distribution, backoff depths,
    wall-time quantiles, and the empirical coalescence frequency at
    sub-threshold candidate times against its target beta."""
    if not runs:
        raise PerfectSimError("diagnostics need at least one run")
    attempts = np.asarray([r.attempts for r in runs], dtype=float)
    depths = np.asarray([r.backoff_depth for r in runs], dtype=float)
    walls = np.asarray([r.wall_ms for r in runs], dtype=float)
    hist: dict[int, int] = {}
    for r in runs:
        hist[r.attempts] = hist.get(r.attempts, 0) + 1
    examined = float(attempts.sum())
    freq = len(runs) / examined
    target = freq if beta is None else beta
    band = 3.0 * math.sqrt(target * (1.0 - target) / examined)
    q = lambda a: {p: float(np.quantile(a, float(p[1:]) / 100.0)) for p in ("q50", "q90", "q99")}
    return DiagnosticsReport(
        n_runs=len(runs),
        mean_attempts=float(attempts.mean()),
        attempts_hist=hist,
        depth_quantiles=q(depths),
        wall_ms_quantiles=q(walls),
        coalescence_frequency=freq,
        coalescence_target=target,
        coalescence_band=band,
    )
