"""Pass/fail validation rows backing the `validate` command.

Each check mirrors one acceptance-style criterion for the chosen chain:
exactness against a long-run oracle, drift verification, regeneration rate,
dominating-walk stationarity and reversibility, and the regeneration-split
sandwich.  Sizes scale down with the `scale` knob for quick runs; the
statistical thresholds themselves never change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .certificates import (
    ComposedChain,
    SubsamplingVariant,
    dominating_jump_law,
    subsample_certificate,
    threshold_h,
    verify_fl_monte_carlo,
)
from .coupling import build_mu, regen_split
from .engine import Sampler, classic_cftp, diagnostics_summary
from .measures import dominates, fixed_point_sigma
from .stats import chi_square_gof, ks_one_sample, ks_two_sample, pearson_with_se
from .testbed import AtomChain, FiniteChain, longrun_oracle
from .workload import QueueParams, equilibrium_u, forward_step_u, reversed_step_u

ATOM_PROBES = (1.0, 3.0, 6.25, 10.0, 28.125, 100.0)


@dataclass
class ValidationRow:
    name: str
    passed: bool
    detail: str


def _row(name: str, passed: bool, detail: str) -> ValidationRow:
    return ValidationRow(name, bool(passed), detail)


def validate_atom_chain(chain: AtomChain, seed: int, scale: float = 1.0) -> list[ValidationRow]:
    rows: list[ValidationRow] = []
    cert = chain.fl_certificate()
    h = threshold_h(cert)
    n_runs = max(200, int(10_000 * scale))
    n_mc = max(2_000, int(100_000 * scale))
    rng = np.random.default_rng(seed)

    rep = verify_fl_monte_carlo(chain, cert, ATOM_PROBES, n=n_mc, rng=rng)
    rows.append(_row("fl-drift-certificate", rep.ok,
                     f"min margin {min(p.margin for p in rep.probes):.4g} over {len(rep.probes)} probes"))

    sub = subsample_certificate(cert, 3, SubsamplingVariant.RATE)
    rep3 = verify_fl_monte_carlo(ComposedChain(chain, 3), sub, ATOM_PROBES, n=n_mc, rng=rng)
    rows.append(_row("fl-drift-3-step-subsampled", rep3.ok,
                     f"min margin {min(p.margin for p in rep3.probes):.4g}"))

    minor = chain.minorization_at(h)
    probes = [x for x in ATOM_PROBES if x <= h]
    worst = ""
    ok = True
    for x in probes:
        hits = int(np.sum(chain.step_many(np.full(n_mc, x), rng) == 1.0))
        p_hat = hits / n_mc
        band = 3.0 * math.sqrt(minor.beta * (1 - minor.beta) / n_mc)
        if p_hat < minor.beta - band:
            ok = False
            worst = f"state {x}: {p_hat:.4f} < beta - 3se"
    rows.append(_row("minorization-rate", ok, worst or f"P(hit bottom) >= beta at {len(probes)} probes"))

    sampler = Sampler(chain)
    runs = [sampler.run(seed + i) for i in range(n_runs)]
    samples = [r.sample for r in runs]
    oracle = longrun_oracle(chain, burnin=10_000, n=n_runs, seed=seed + 777_000)
    stat, ks_ok = ks_two_sample(samples, oracle)
    crit = 1.628 * math.sqrt(2.0 / n_runs)
    rows.append(_row("exactness-ks-vs-oracle", ks_ok, f"D={stat:.4f} crit={crit:.4f} n={n_runs}"))

    rep_d = diagnostics_summary(runs, beta=minor.beta)
    rows.append(_row("coalescence-rate", rep_d.coalescence_ok,
                     f"freq {rep_d.coalescence_frequency:.4f} vs beta {minor.beta:.4f}"))
    return rows


def validate_queue(alpha: float, seed: int, scale: float = 1.0) -> list[ValidationRow]:
    rows: list[ValidationRow] = []
    n = max(5_000, int(100_000 * scale))
    rng = np.random.default_rng(seed)

    ok = True
    detail = []
    for d in (1.2, math.log(5.0), 3.0, 10.0):
        s = fixed_point_sigma(d)
        res = abs(s - math.exp(-d * (1 - s)))
        ok &= res < 1e-12
        detail.append(f"d={d:.4g}: {res:.2g}")
    rows.append(_row("sigma-fixed-point", ok, "; ".join(detail)))

    params = QueueParams.from_alpha(alpha)
    pi = equilibrium_u(params)
    draws = np.array([pi.quantile(u) for u in rng.random(n) * (1 - 2e-12) + 1e-12])
    pushed = np.maximum(0.0, draws + rng.exponential(1.0, n) - params.d)
    stat, ks_ok = ks_one_sample(pushed, pi.cdf, lambda t: 1.0 - pi.survival_left(t))
    rows.append(_row("equilibrium-invariance-ks", ks_ok, f"D={stat:.5f} n={n}"))

    fwd_pairs = np.column_stack([draws, pushed])
    rev0 = np.array([pi.quantile(u) for u in rng.random(n) * (1 - 2e-12) + 1e-12])
    rev_prev = np.array([reversed_step_u(u, params, rng) for u in rev0])
    s1, ok1 = ks_two_sample(fwd_pairs[:, 0], rev_prev)
    s2, ok2 = ks_two_sample(fwd_pairs[:, 1], rev0)
    r_f, se_f = pearson_with_se(fwd_pairs[:, 0], fwd_pairs[:, 1])
    r_r, se_r = pearson_with_se(rev_prev, rev0)
    corr_ok = abs(r_f - r_r) <= 3.0 * math.hypot(se_f, se_r)
    rows.append(_row("reversed-kernel-pair-test", ok1 and ok2 and corr_ok,
                     f"KS ({s1:.4f},{s2:.4f}) corr {r_f:.4f} vs {r_r:.4f}"))
    return rows


def validate_finite(kernel, seed: int, scale: float = 1.0,
                    beta: float | None = None, nu=None) -> list[ValidationRow]:
    rows: list[ValidationRow] = []
    fc = FiniteChain(kernel)
    if beta is None or nu is None:
        beta, nu = fc.min_mass_minorization()
    nu = np.asarray(nu, dtype=float)
    n = max(2_000, int(10_000 * scale))
    draws = [classic_cftp(fc.kernel, beta, nu, seed + i) for i in range(n)]
    counts = np.bincount(draws, minlength=fc.n)
    pi = fc.stationary()
    stat, pval, ok = chi_square_gof(counts, pi)
    rows.append(_row("classic-cftp-chi-square", ok,
                     f"chi2={stat:.3f} p={pval:.4f} n={n} states={fc.n}"))
    return rows


def validate_split(seed: int, scale: float = 1.0) -> list[ValidationRow]:
    """Randomized regeneration-split sandwich checks on the atom-chain
    dominating geometry."""
    chain = AtomChain()
    cert = chain.fl_certificate()
    h = threshold_h(cert)
    minor = chain.minorization_at(h)
    rng = np.random.default_rng(seed)
    n = max(20, int(200 * scale))
    ok = True
    detail = ""
    for _ in range(n):
        z = cert.reflection_level + rng.random() * (h - cert.reflection_level)
        x = 1.0 + rng.random() * (h - 1.0)
        law_y = dominating_jump_law(cert, z)
        split = regen_split(minor.beta, minor.nu, chain.scale_jump_law(x), law_y)
        mu = build_mu(minor.beta, minor.nu, law_y)
        if not dominates(split.nu, split.mu) or mu.to_dict() != split.mu.to_dict():
            ok = False
            detail = f"failure at z={z}, x={x}"
            break
    rows = [_row("regeneration-split-sandwich", ok, detail or f"{n} randomized instances")]
    return rows


def run_validation(chain_config: dict, seed: int, scale: float = 1.0) -> list[ValidationRow]:
    kind = chain_config.get("type", "atom")
    rows: list[ValidationRow] = []
    if kind == "atom":
        chain = AtomChain(
            alpha=chain_config.get("alpha", 0.2),
            b=chain_config.get("b", 2.0),
            c=chain_config.get("c", 6.25),
        )
        rows += validate_atom_chain(chain, seed, scale)
        rows += validate_queue(chain.fl_certificate().alpha, seed + 1, scale)
        rows += validate_split(seed + 2, scale)
        rows += validate_finite([[0.5, 0.5], [0.25, 0.75]], seed + 3, scale,
                                beta=0.5, nu=[0.5, 0.5])
    elif kind == "finite":
        rows += validate_finite(chain_config["kernel"], seed, scale,
                                beta=chain_config.get("beta"), nu=chain_config.get("nu"))
    else:
        raise ValueError(f"no validation suite for chain type {kind!r}")
    return rows


def rows_to_text(rows: list[ValidationRow]) -> str:
    width = max(len(r.name) for r in rows)
    lines = []
    for r in rows:
        mark = "PASS" if r.passed else "FAIL"
        lines.append(f"{mark}  {r.name.ljust(width)}  {r.detail}")
    return "\n".join(lines)
