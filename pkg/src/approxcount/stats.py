"""Chi-square goodness-of-fit helpers for comparing simulated histograms."""

from __future__ import annotations

from collections import Counter

import numpy as np
from scipy import stats

MIN_EXPECTED = 5.0


def _pool(keys, expected, observed):
    # merge cells in key order until each pooled cell expects >= MIN_EXPECTED
    exp_out, obs_out = [], []
    e_acc = o_acc = 0.0
    for k in keys:
        e_acc += expected[k]
        o_acc += observed[k]
        if e_acc >= MIN_EXPECTED:
            exp_out.append(e_acc)
            obs_out.append(o_acc)
            e_acc = o_acc = 0.0
    if exp_out:
        exp_out[-1] += e_acc
        obs_out[-1] += o_acc
    else:
        exp_out, obs_out = [e_acc], [o_acc]
    return np.array(exp_out), np.array(obs_out)


def chi_square_gof(samples, probs: dict) -> tuple[float, int, float]:
    """Test samples against an exact pmf; returns ``(statistic, dof, p_value)``.

    Samples that fall outside the support of ``probs`` give p = 0.
    """
    observed = Counter(samples)
    n = sum(observed.values())
    if any(k not in probs or probs[k] == 0 for k in observed):
        return float("inf"), 0, 0.0
    keys = sorted(probs)
    expected = {k: float(probs[k]) * n for k in keys}
    e, o = _pool(keys, expected, Counter({k: observed.get(k, 0) for k in keys}))
    if len(e) < 2:
        return 0.0, 0, 1.0
    stat = float(((o - e) ** 2 / e).sum())
    dof = len(e) - 1
    return stat, dof, float(stats.chi2.sf(stat, dof))


def chi_square_two_sample(a, b) -> tuple[float, int, float]:
    """Homogeneity test of two samples over a shared discrete support."""
    ca, cb = Counter(a), Counter(b)
    keys = sorted(set(ca) | set(cb))
    na, nb = sum(ca.values()), sum(cb.values())
    pooled = {k: (ca[k] + cb[k]) / (na + nb) for k in keys}
    cols, col = [], [0, 0, 0.0]
    for k in keys:
        col[0] += ca[k]
        col[1] += cb[k]
        col[2] += pooled[k] * min(na, nb)
        if col[2] >= MIN_EXPECTED:
            cols.append(col[:2])
            col = [0, 0, 0.0]
    if cols:
        cols[-1][0] += col[0]
        cols[-1][1] += col[1]
    if len(cols) < 2:
        return 0.0, 0, 1.0
    table = np.array(cols, dtype=float).T
    stat, p, dof, _ = stats.chi2_contingency(table, correction=False)
    return float(stat), int(dof), float(p)


def binomial_upper(p: float, trials: int, k: float = 3.0) -> float:
    """p plus ``k`` binomial standard errors of a frequency over ``trials``."""
    return p + k * (p * (1 - p) / trials) ** 0.5
