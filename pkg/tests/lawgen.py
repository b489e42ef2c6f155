"""Randomized law instances and brute-force oracles shared across tests."""

from __future__ import annotations

import math

import numpy as np

from perfectsim.measures import ExpPiece, ParetoPiece, Prob1D, UniformPiece


def survival_many(law: Prob1D, ts: np.ndarray) -> np.ndarray:
    """Vectorized survival evaluation (atoms + pieces)."""
    ts = np.asarray(ts, dtype=float)
    s = np.zeros_like(ts)
    for loc, m in law.atoms:
        s += m * (ts < loc)
    for p in law.pieces:
        if p.kind == "uniform":
            inside = np.clip((p.hi - ts) / (p.hi - p.lo), 0.0, 1.0)
            s += p.mass * inside
        elif p.kind == "exp":
            e_hi = 0.0 if math.isinf(p.hi) else math.exp(-p.rate * (p.hi - p.start))
            z = 1.0 - e_hi
            raw = (np.exp(-p.rate * np.clip(ts - p.start, 0.0, None)) - e_hi) / z
            s += p.mass * np.clip(raw, 0.0, 1.0) * (ts < p.hi)
        else:
            e_hi = 0.0 if math.isinf(p.hi) else p.start / p.hi
            z = 1.0 - e_hi
            raw = (p.start / np.maximum(ts, p.start) - e_hi) / z
            s += p.mass * np.clip(raw, 0.0, 1.0) * (ts < p.hi)
    return np.minimum(1.0, s)


def _random_skeleton(rng: np.random.Generator, lb: float, n_cells: int) -> list[float]:
    nodes = [lb]
    for _ in range(n_cells):
        nodes.append(nodes[-1] + float(rng.uniform(0.2, 2.5)))
    return nodes


def _random_piece(rng, lo: float, hi: float, kind: str | None = None):
    kind = kind or rng.choice(["uniform", "exp", "pareto"])
    if kind == "uniform":
        return UniformPiece(lo, hi, 1.0)
    if kind == "exp":
        return ExpPiece(lo, float(rng.uniform(0.3, 3.0)), 1.0, hi)
    return ParetoPiece(max(lo, 1e-6), 1.0, hi)


def random_law(
    rng: np.random.Generator,
    lb: float = 1.0,
    n_cells: int = 4,
    p_atom: float = 0.4,
    p_piece: float = 0.7,
    allow_tail: bool = True,
) -> Prob1D:
    """A random atoms-plus-pieces law on a fresh skeleton."""
    nodes = _random_skeleton(rng, lb, n_cells)
    atoms, pieces = [], []
    for i, x in enumerate(nodes):
        if rng.random() < p_atom:
            atoms.append((x, float(rng.uniform(0.1, 1.0))))
        if i + 1 < len(nodes) and rng.random() < p_piece:
            pieces.append(_random_piece(rng, x, nodes[i + 1]))
    if allow_tail and rng.random() < 0.6:
        kind = rng.choice(["exp", "pareto"])
        if kind == "exp":
            pieces.append(ExpPiece(nodes[-1], float(rng.uniform(0.3, 3.0)), 1.0))
        else:
            pieces.append(ParetoPiece(nodes[-1], 1.0))
    if not atoms and not pieces:
        atoms = [(nodes[0], 1.0)]
    total = sum(m for _, m in atoms) + sum(p.mass for p in pieces)
    atoms = [(x, m / total) for x, m in atoms]
    pieces = [p.with_mass(p.mass / total) for p in pieces]
    return Prob1D(lb, atoms, pieces)


def random_minorized_pair(
    rng: np.random.Generator, lb: float = 1.0
) -> tuple[float, Prob1D, Prob1D]:
    """(beta, nu, law_v) with law_v >= beta*nu as measures: law_v reuses
    nu's component shapes with enlarged masses plus extra components, so the
    mixture stays in the closed-form families."""
    beta = float(rng.uniform(0.05, 0.9))
    nodes = _random_skeleton(rng, lb, 4)
    nu_atoms, nu_pieces = [], []
    v_atoms, v_pieces = [], []
    for i, x in enumerate(nodes):
        has_cell = i + 1 < len(nodes)
        if rng.random() < 0.4:
            m = float(rng.uniform(0.1, 1.0))
            nu_atoms.append((x, m))
            v_atoms.append((x, beta * m + float(rng.uniform(0.0, 0.8))))
        elif rng.random() < 0.3:
            v_atoms.append((x, float(rng.uniform(0.1, 0.8))))
        if has_cell and rng.random() < 0.7:
            piece = _random_piece(rng, x, nodes[i + 1])
            m = float(rng.uniform(0.1, 1.0))
            nu_pieces.append(piece.with_mass(m))
            v_pieces.append(piece.with_mass(beta * m + float(rng.uniform(0.0, 0.8))))
        elif has_cell and rng.random() < 0.3:
            v_pieces.append(_random_piece(rng, x, nodes[i + 1]).with_mass(float(rng.uniform(0.1, 0.8))))
    if rng.random() < 0.6:
        rate = float(rng.uniform(0.3, 2.0))
        m = float(rng.uniform(0.1, 1.0))
        nu_pieces.append(ExpPiece(nodes[-1], rate, m))
        v_pieces.append(ExpPiece(nodes[-1], rate, beta * m + float(rng.uniform(0.0, 0.8))))
    elif rng.random() < 0.5:
        v_pieces.append(ParetoPiece(nodes[-1], float(rng.uniform(0.2, 1.0))))
    if not nu_atoms and not nu_pieces:
        nu_atoms = [(nodes[0], 1.0)]
        v_atoms = v_atoms or [(nodes[0], beta)]
        if v_atoms[0][0] == nodes[0]:
            v_atoms[0] = (nodes[0], max(v_atoms[0][1], beta))
        else:
            v_atoms.insert(0, (nodes[0], beta))
    if not v_atoms and not v_pieces:
        v_atoms = [(nodes[0], 1.0)]

    def normalize(atoms, pieces):
        total = sum(m for _, m in atoms) + sum(p.mass for p in pieces)
        return (
            [(x, m / total) for x, m in atoms],
            [p.with_mass(p.mass / total) for p in pieces],
            total,
        )

    nu_atoms, nu_pieces, _ = normalize(nu_atoms, nu_pieces)
    v_atoms, v_pieces, v_total = normalize(v_atoms, v_pieces)
    # rescaling V shrinks its components; shrink beta in step so
    # law_v >= beta*nu stays true
    beta_eff = beta / v_total
    nu = Prob1D(lb, nu_atoms, nu_pieces)
    law_v = Prob1D(lb, v_atoms, v_pieces)
    return beta_eff, nu, law_v


def random_compatible_pair(
    rng: np.random.Generator, lb: float = 1.0, max_tries: int = 200
) -> tuple[float, Prob1D, Prob1D]:
    """(beta, nu, law_v) satisfying only the tail condition
    beta*P(nu>t) <= P(V>t): general-position instances by rejection."""
    for _ in range(max_tries):
        beta = float(rng.uniform(0.05, 0.5))
        nu = random_law(rng, lb, n_cells=3, allow_tail=False)
        law_v = random_law(rng, lb, n_cells=3, allow_tail=True)
        ts = np.linspace(lb, max(nu.far_quantile(1 - 1e-9), law_v.far_quantile(1 - 1e-9)), 2000)
        s_nu = survival_many(nu, ts)
        s_v = survival_many(law_v, ts)
        margin = np.min(s_v - beta * s_nu)
        if margin > 1e-9:
            # margin on a fine grid; shrink beta to absorb off-grid dips
            return 0.98 * beta, nu, law_v
    raise RuntimeError("could not generate a compatible pair")


def brute_mu_tail(beta: float, nu: Prob1D, law_v: Prob1D, n_cells: int = 10_000):
    """Discretized running-minimum oracle for the tail formula
    beta*P(mu>t) = P(V>t) - min(1-beta, inf_{w<=t} D(w)).

    Pure pointwise evaluation plus local refinement of interior dips:
    independent of the closed-form segment walk.
    """
    lb = nu.lower_bound
    t_top = max(nu.far_quantile(1 - 1e-10), law_v.far_quantile(1 - 1e-10)) + 1.0
    grid = np.linspace(lb, t_top, n_cells)
    extra = [loc for loc, _ in nu.atoms] + [loc for loc, _ in law_v.atoms]
    ts = np.unique(np.concatenate([grid, np.asarray(extra, dtype=float)]))
    d = survival_many(law_v, ts) - beta * survival_many(nu, ts)

    # refine interior local minima by ternary search on D
    def d_scalar(t):
        return law_v.survival(t) - beta * nu.survival(t)

    refined: list[tuple[float, float]] = []
    interior = np.where((d[1:-1] < d[:-2]) & (d[1:-1] <= d[2:]))[0] + 1
    for i in interior:
        lo, hi = ts[i - 1], ts[i + 1]
        for _ in range(80):
            m1 = lo + (hi - lo) / 3
            m2 = hi - (hi - lo) / 3
            if d_scalar(m1) <= d_scalar(m2):
                hi = m2
            else:
                lo = m1
        tm = 0.5 * (lo + hi)
        refined.append((tm, d_scalar(tm)))

    # running minimum over the merged stream
    all_ts = np.concatenate([ts, np.asarray([t for t, _ in refined])])
    all_d = np.concatenate([d, np.asarray([v for _, v in refined])])
    order = np.argsort(all_ts, kind="mergesort")
    all_ts, all_d = all_ts[order], all_d[order]
    m = np.minimum.accumulate(np.minimum(1.0 - beta, all_d))
    back = np.searchsorted(all_ts, ts, side="right") - 1
    mu_tail = survival_many(law_v, ts) - m[back]
    return ts, mu_tail
