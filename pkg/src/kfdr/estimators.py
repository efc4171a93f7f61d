"""Null-proportion estimators, k-FDR point estimates at a fixed threshold,
and the data-driven rejection thresholds they induce."""

from __future__ import annotations

import numpy as np

from .binomtail import g_tilde
from .stepup import as_pvalue_set

__all__ = [
    "pi0_hat",
    "pi0_hat_star",
    "kfdr_hat",
    "kfdr_hat_star",
    "threshold_t_alpha",
]


def _pvalues(pvals) -> np.ndarray:
    return as_pvalue_set(pvals).p


def _count_at_most(p: np.ndarray, t: float) -> int:
    return int(np.count_nonzero(p <= t))


def pi0_hat(pvals, lam) -> float:
    """Null-proportion estimate (n - R(lam)) / (n (1 - lam)).

    R(lam) counts p-values at or below lam; lam = 0 gives 1 for continuous
    p-values. The value lies in [0, 1/(1 - lam)].
    """
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"lam must lie in [0, 1), got {lam!r}")
    p = _pvalues(pvals)
    n = len(p)
    return (n - _count_at_most(p, lam)) / (n * (1.0 - lam))


def pi0_hat_star(pvals, lam) -> float:
    """Shifted null-proportion estimate (n - R(lam) + 1) / (n (1 - lam)).

    Exceeds :func:`pi0_hat` by exactly 1 / (n (1 - lam)), which is the
    safety margin that makes the adaptive two-stage procedure provably
    conservative.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lam must lie in (0, 1), got {lam!r}")
    p = _pvalues(pvals)
    n = len(p)
    return (n - _count_at_most(p, lam) + 1) / (n * (1.0 - lam))


def kfdr_hat(pvals, t, k, lam=0.0) -> float:
    """Point estimate of the k-FDR of the fixed-threshold test p <= t.

    Computes n * pi0_hat(lam) * t * binom_tail(k-1, n-1, t) / max(R(t), 1).
    The value is not truncated at 1.
    """
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t!r}")
    p = _pvalues(pvals)
    n = len(p)
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    r_t = _count_at_most(p, t)
    return n * pi0_hat(p, lam) * g_tilde(k, n, t) / max(r_t, 1)


def kfdr_hat_star(pvals, t, k, lam) -> float:
    """Capped variant of :func:`kfdr_hat` built on pi0_hat_star.

    Defined piecewise: the plain formula with the shifted null-proportion
    estimate for t <= lam, and 1 for t > lam.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lam must lie in (0, 1), got {lam!r}")
    if not 0.0 < t <= 1.0:
        raise ValueError(f"t must lie in (0, 1], got {t!r}")
    if t > lam:
        return 1.0
    p = _pvalues(pvals)
    n = len(p)
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    r_t = _count_at_most(p, t)
    return n * pi0_hat_star(p, lam) * g_tilde(k, n, t) / max(r_t, 1)


def _estimate_at(p_sorted, candidates, k, pi0_value):
    """Vectorized k-FDR estimate over candidate thresholds (shared pi0)."""
    n = len(p_sorted)
    counts = np.searchsorted(p_sorted, candidates, side="right")
    gt = g_tilde(k, n, candidates)
    return n * pi0_value * gt / np.maximum(counts, 1)


def threshold_t_alpha(pvals, k, alpha, lam=0.0, which="plain") -> float:
    """Largest rejection threshold whose estimated k-FDR stays at or below alpha.

    The estimate only changes where the rejection count does, so the
    supremum is attained on the finite candidate set of observed p-values
    (plus lam itself for the capped ``star`` form, whose candidates are
    restricted to p <= lam). Returns 0.0 when no candidate qualifies,
    meaning nothing is rejected.

    Rejecting p <= threshold reproduces the step-up procedures exactly:
    the ``plain`` form with lam = 0 matches ``proc1``, and the ``star``
    form matches the ``direct`` variant of ``proc2``.
    """
    pv = as_pvalue_set(pvals)
    p = pv.sorted_p
    n = len(p)
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if which == "plain":
        if not 0.0 <= lam < 1.0:
            raise ValueError(f"lam must lie in [0, 1), got {lam!r}")
        candidates = p
        estimates = _estimate_at(p, candidates, k, pi0_hat(pv, lam))
    elif which == "star":
        if not 0.0 < lam < 1.0:
            raise ValueError(f"lam must lie in (0, 1), got {lam!r}")
        candidates = np.append(p[p <= lam], lam)
        estimates = _estimate_at(p, candidates, k, pi0_hat_star(pv, lam))
    else:
        raise ValueError(f"which must be 'plain' or 'star', got {which!r}")
    qualifying = candidates[estimates <= alpha]
    return float(qualifying.max()) if qualifying.size else 0.0
