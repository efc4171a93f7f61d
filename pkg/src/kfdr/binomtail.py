"""Upper binomial tail probabilities and the order-k rejection transform.

``binom_tail(k, n, u)`` is ``Pr{Bin(n, u) >= k}``, which also equals the
distribution function of the k-th smallest of n iid Uniform(0, 1) draws.
That order-statistic identity lets the tail be computed as a regularized
incomplete beta function, which stays accurate for trial counts far beyond
what term-by-term summation can handle. The transform
``g_tilde(k, n, t) = t * binom_tail(k - 1, n - 1, t)`` and its inverse are
the calibration machinery behind the step-up critical values in
:mod:`kfdr.critvals`.

All three functions accept a scalar or array for the real argument and are
pure, so they are safe to call concurrently.
"""

from __future__ import annotations

import numpy as np
from scipy import special

__all__ = ["binom_tail", "g_tilde", "g_tilde_inv"]

# Term-by-term summation below this trial count, incomplete beta above.
_SUM_MAX_N = 64
# Bisection steps; the bracket narrows to ~1e-16 well before this.
_BISECT_ITERS = 80


def _as_count(value, name: str) -> int:
    iv = int(value)
    if iv != value:
        raise ValueError(f"{name} must be an integer, got {value!r}")
    return iv


def _check_unit(u: np.ndarray, name: str) -> None:
    if np.any(np.isnan(u)):
        raise ValueError(f"{name} must not contain NaN")
    if np.any((u < 0.0) | (u > 1.0)):
        raise ValueError(f"{name} must lie in [0, 1]")


def _tail_sum(k: int, n: int, u: np.ndarray) -> np.ndarray:
    """Log-space summation of C(n,j) u^j (1-u)^(n-j) over j = k..n."""
    out = np.empty_like(u)
    out[u <= 0.0] = 0.0
    out[u >= 1.0] = 1.0
    inside = (u > 0.0) & (u < 1.0)
    if np.any(inside):
        ui = u[inside][:, None]
        j = np.arange(k, n + 1, dtype=float)
        logc = (
            special.gammaln(n + 1.0)
            - special.gammaln(j + 1.0)
            - special.gammaln(n - j + 1.0)
        )
        logt = logc + j * np.log(ui) + (n - j) * np.log1p(-ui)
        peak = logt.max(axis=1, keepdims=True)
        out[inside] = np.exp(peak[:, 0]) * np.exp(logt - peak).sum(axis=1)
    return out


def _tail(k: int, n: int, u: np.ndarray) -> np.ndarray:
    """Unvalidated core of binom_tail; k, n already checked, u an ndarray."""
    if k == 0:
        return np.ones_like(u)
    if n <= _SUM_MAX_N:
        return _tail_sum(k, n, u)
    return special.betainc(k, n - k + 1, u)


def binom_tail(k, n, u):
    """Upper binomial tail ``Pr{Bin(n, u) >= k}``.

    Parameters
    ----------
    k : int
        Order, ``0 <= k <= n``; ``k = 0`` returns 1 identically.
    n : int
        Trial count, ``n >= 0``.
    u : float or array_like
        Success probability in ``[0, 1]``.

    Returns
    -------
    float or ndarray
        Tail probability, nondecreasing in both ``u`` and ``n`` for fixed
        ``k``; by convention 0 at ``u = 0`` (for ``k >= 1``) and 1 at
        ``u = 1``.
    """
    k = _as_count(k, "k")
    n = _as_count(n, "n")
    if k < 0 or n < 0 or k > n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    u_arr = np.asarray(u, dtype=float)
    _check_unit(u_arr, "u")
    out = _tail(k, n, u_arr)
    return float(out) if np.ndim(u) == 0 else out


def g_tilde(k, n, t):
    """The transform ``t * binom_tail(k - 1, n - 1, t)``.

    Strictly increasing on [0, 1], never exceeds ``t``, and reduces to the
    identity at ``k = 1``. Requires ``1 <= k <= n``.
    """
    k = _as_count(k, "k")
    n = _as_count(n, "n")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    t_arr = np.asarray(t, dtype=float)
    _check_unit(t_arr, "t")
    out = t_arr * _tail(k - 1, n - 1, t_arr)
    return float(out) if np.ndim(t) == 0 else out


def g_tilde_inv(k, n, y):
    """Inverse of ``g_tilde(k, n, .)`` on [0, 1], by bisection.

    For ``y`` in [0, 1] returns the unique ``t`` with
    ``g_tilde(k, n, t) = y``; arguments above 1 clamp to 1 and arguments at
    or below 0 return 0. Because ``g_tilde(k, n, t) <= t``, the result is
    always ``>= y``. Accepts a scalar or array ``y``; NaN is rejected.
    """
    k = _as_count(k, "k")
    n = _as_count(n, "n")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    y_arr = np.asarray(y, dtype=float)
    if np.any(np.isnan(y_arr)):
        raise ValueError("y must not contain NaN")
    if k == 1:
        out = np.clip(y_arr, 0.0, 1.0)
    else:
        target = np.clip(y_arr, 0.0, 1.0)
        lo = np.zeros_like(target)
        hi = np.ones_like(target)
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            below = mid * _tail(k - 1, n - 1, mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        # hi is the low end of the subinterval where g_tilde >= y, so the
        # dominance g_tilde_inv(y) >= y is preserved exactly.
        out = np.where(y_arr <= 0.0, 0.0, np.where(y_arr >= 1.0, 1.0, hi))
    return float(out) if np.ndim(y) == 0 else out
