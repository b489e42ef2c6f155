"""Statistical test helpers used by the validation suites."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy.stats import chi2

KS_C01 = 1.628  # Kolmogorov critical coefficient at level 0.01


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> tuple[float, bool]:
    """Two-sample KS statistic; passes at the 0.01 level iff

        D < 1.628 * sqrt((n + m) / (n * m)).
    """
    xa = np.sort(np.asarray(a, dtype=float))
    xb = np.sort(np.asarray(b, dtype=float))
    if xa.size == 0 or xb.size == 0:
        raise ValueError("ks_two_sample requires nonempty samples")
    pooled = np.concatenate([xa, xb])
    pooled.sort(kind="mergesort")
    fa = np.searchsorted(xa, pooled, side="right") / xa.size
    fb = np.searchsorted(xb, pooled, side="right") / xb.size
    stat = float(np.max(np.abs(fa - fb)))
    crit = KS_C01 * math.sqrt((xa.size + xb.size) / (xa.size * xb.size))
    return stat, stat < crit


def ks_one_sample(
    samples: Sequence[float],
    cdf: Callable[[float], float],
    cdf_left: Callable[[float], float] | None = None,
) -> tuple[float, bool]:
    """One-sample KS statistic against an exact CDF; passes at 0.01 iff
    D < 1.628/sqrt(n).  For laws with atoms supply ``cdf_left`` (the left
    limit of the CDF) so both flanks compare like against like."""
    xs = np.sort(np.asarray(samples, dtype=float))
    n = xs.size
    if n == 0:
        raise ValueError("ks_one_sample requires a nonempty sample")
    uniq, first = np.unique(xs, return_index=True)
    count_le = np.append(first[1:], n)
    f_right = np.asarray([cdf(x) for x in uniq])
    f_left = f_right if cdf_left is None else np.asarray([cdf_left(x) for x in uniq])
    stat = float(
        max(np.max(np.abs(count_le / n - f_right)), np.max(np.abs(first / n - f_left)))
    )
    return stat, stat < KS_C01 / math.sqrt(n)


def chi_square_gof(counts: Sequence[int], probs: Sequence[float]) -> tuple[float, float, bool]:
    """Pearson chi-square against expected frequencies; (stat, p, pass at 0.01)."""
    cnt = np.asarray(counts, dtype=float)
    p = np.asarray(probs, dtype=float)
    if cnt.shape != p.shape:
        raise ValueError("counts and probs must align")
    n = cnt.sum()
    expected = n * p
    if np.any(expected <= 0):
        raise ValueError("all expected counts must be positive")
    stat = float(np.sum((cnt - expected) ** 2 / expected))
    pval = float(chi2.sf(stat, df=len(cnt) - 1))
    return stat, pval, pval > 0.01


def pearson_with_se(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Sample correlation and its large-sample standard error (1-r^2)/sqrt(n)."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    r = float(np.corrcoef(xa, ya)[0, 1])
    se = (1.0 - r * r) / math.sqrt(xa.size)
    return r, se
