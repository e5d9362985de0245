"""Rank statistics for the sensitivity analyses: Spearman rho and Kendall tau-b.

Both coefficients use the average-rank tie convention. P-values are two-sided.
Spearman switches between an exact permutation distribution (n <= 9) and the
t approximation (n > 9); Kendall uses the normal approximation with the
tie-adjusted variance. Constant inputs are rejected rather than reported as
zero correlation, so degenerate cells stay visible downstream.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import stats as scipy_stats

from .errors import DegenerateInput, InsufficientData, LengthMismatch, NonFiniteInput

SIGNIFICANCE_LEVEL = 0.05
EXACT_PERMUTATION_MAX_N = 9


@dataclass(frozen=True)
class CorrelationResult:
    coefficient: float
    p_value: float
    n: int
    method: str  # "spearman" or "kendall"

    @property
    def significant(self) -> bool:
        return self.p_value < SIGNIFICANCE_LEVEL


def rank_with_ties(x) -> np.ndarray:
    """Average (fractional) 1-based ranks; ties share the mean of their slots."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) < 1:
        raise ValueError("expected a non-empty 1-D vector")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("cannot rank non-finite values")
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x))
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _check_pair(x, y, min_n: int = 3):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("expected 1-D vectors")
    if len(x) != len(y):
        raise LengthMismatch(f"lengths differ: {len(x)} vs {len(y)}")
    if len(x) < min_n:
        raise InsufficientData(f"need at least {min_n} observations, got {len(x)}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise NonFiniteInput("correlation inputs must be finite")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise DegenerateInput("correlation is undefined for a constant vector")
    return x, y


def _pearson(u: np.ndarray, v: np.ndarray) -> float:
    uc = u - u.mean()
    vc = v - v.mean()
    denom = np.sqrt(np.sum(uc * uc) * np.sum(vc * vc))
    return float(np.dot(uc, vc) / denom)


@lru_cache(maxsize=8)
def _permutation_matrix(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.int64)


def _spearman_exact_p(rx: np.ndarray, ry: np.ndarray, observed: float) -> float:
    """Two-sided tail probability over all n! pairings of the given ranks."""
    n = len(rx)
    perms = _permutation_matrix(n)
    rxc = rx - rx.mean()
    ryc = ry - ry.mean()
    denom = np.sqrt(np.sum(rxc * rxc) * np.sum(ryc * ryc))
    stats = (ryc[perms] @ rxc) / denom
    count = int(np.sum(np.abs(stats) >= abs(observed) - 1e-12))
    return count / len(perms)


def spearman(x, y) -> CorrelationResult:
    """Spearman rank correlation with a two-sided p-value.

    n <= 9 uses the exact permutation distribution conditioned on the
    observed tie pattern; larger n uses t = rho * sqrt((n-2)/(1-rho^2)) with
    n-2 degrees of freedom (|rho| = 1 then reports p = 0).
    """
    x, y = _check_pair(x, y)
    n = len(x)
    rx = rank_with_ties(x)
    ry = rank_with_ties(y)
    rho = _pearson(rx, ry)
    rho = float(np.clip(rho, -1.0, 1.0))
    if n <= EXACT_PERMUTATION_MAX_N:
        p = _spearman_exact_p(rx, ry, rho)
    elif 1.0 - rho * rho <= 0:
        p = 0.0
    else:
        t = rho * np.sqrt((n - 2) / (1.0 - rho * rho))
        p = float(2.0 * scipy_stats.t.sf(abs(t), df=n - 2))
    return CorrelationResult(coefficient=rho, p_value=min(p, 1.0), n=n, method="spearman")


def _tie_sizes(v: np.ndarray) -> np.ndarray:
    _, counts = np.unique(v, return_counts=True)
    return counts[counts > 1].astype(float)


def kendall_tau_b(x, y) -> CorrelationResult:
    """Kendall tau-b with tie corrections and the normal-approximation p-value."""
    x, y = _check_pair(x, y)
    n = len(x)
    sx = np.sign(x[:, None] - x[None, :])
    sy = np.sign(y[:, None] - y[None, :])
    iu = np.triu_indices(n, k=1)
    prod = sx[iu] * sy[iu]
    concordant = int(np.sum(prod > 0))
    discordant = int(np.sum(prod < 0))
    n0 = n * (n - 1) / 2.0
    tx = _tie_sizes(x)
    ty = _tie_sizes(y)
    n1 = float(np.sum(tx * (tx - 1) / 2.0))
    n2 = float(np.sum(ty * (ty - 1) / 2.0))
    denom = np.sqrt((n0 - n1) * (n0 - n2))
    tau = (concordant - discordant) / denom
    tau = float(np.clip(tau, -1.0, 1.0))

    # tie-adjusted variance of (C - D)
    v0 = n * (n - 1) * (2 * n + 5)
    vt = float(np.sum(tx * (tx - 1) * (2 * tx + 5)))
    vu = float(np.sum(ty * (ty - 1) * (2 * ty + 5)))
    v1 = float(np.sum(tx * (tx - 1)) * np.sum(ty * (ty - 1))) / (2.0 * n * (n - 1))
    v2 = (
        float(np.sum(tx * (tx - 1) * (tx - 2)) * np.sum(ty * (ty - 1) * (ty - 2)))
        / (9.0 * n * (n - 1) * (n - 2))
    )
    var = (v0 - vt - vu) / 18.0 + v1 + v2
    if var <= 0:
        p = 1.0
    else:
        z = (concordant - discordant) / np.sqrt(var)
        p = float(2.0 * scipy_stats.norm.sf(abs(z)))
    return CorrelationResult(coefficient=tau, p_value=min(p, 1.0), n=n, method="kendall")


_METHODS = {"spearman": spearman, "kendall": kendall_tau_b}


def correlate(x, y, method: str) -> CorrelationResult:
    try:
        fn = _METHODS[method]
    except KeyError:
        raise ValueError(f"unknown correlation method {method!r}") from None
    return fn(x, y)


def correlation_matrix(values: dict[str, np.ndarray], method: str
                       ) -> dict[tuple[str, str], CorrelationResult]:
    """All off-diagonal pairwise correlations among named value vectors.

    Entries are present for both (a, b) and (b, a); the diagonal is omitted.
    """
    names = list(values)
    lengths = {len(np.asarray(values[k])) for k in names}
    if len(lengths) > 1:
        raise LengthMismatch("all value vectors must share one length")
    out: dict[tuple[str, str], CorrelationResult] = {}
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            res = correlate(values[a], values[b], method)
            out[(a, b)] = res
            out[(b, a)] = res
    return out
