"""Exact error rates of fixed-threshold tests under a two-group p-value mixture.

Hypotheses are iid: null with probability pi0 (p uniform on [0, 1]), false
null otherwise (p with cdf F1). For the single-step test rejecting at
p <= t, a hypothesis falls in one of three cells with probabilities
pi0*t, (1 - pi0)*F1(t) and 1 - F(t), where F(t) = pi0*t + (1 - pi0)*F1(t).
The joint law of (false rejections V, rejections R) over n - 1 draws is
therefore trinomial, and every quantity here reduces to an exact O(n^2)
sum over that lattice:

    k-FDR(t)  =  n * pi0 * t * E[ 1{V >= k-1} / (R + 1) ]        (V, R over n-1 draws)
    FDR(t)    =  n * pi0 * t * E[ 1 / (R + 1) ]
              =  (pi0 * t / F(t)) * (1 - (1 - F(t))^n)

The second FDR form is the classical closed-form identity; both are
implemented and must agree, which the test suite checks to 1e-10.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .binomtail import binom_tail

__all__ = [
    "NormalShiftAlternative",
    "TableAlternative",
    "MixtureModel",
    "JointVRDistribution",
    "joint_vr",
    "exact_kfdr_single_step",
    "exact_fdr_single_step",
    "expected_inv_r_plus1",
    "kfwer_prev",
    "marginal_kfdr_quantity",
    "check_scaled_fdr_bound",
]

_SQRT2 = np.sqrt(2.0)


class NormalShiftAlternative:
    """Alternative p-value law when the statistic is N(mu, 1), tested two-sided.

    With p = 2 * (1 - Phi(|Z|)) and Z ~ N(mu, 1), the cdf is
    F1(u) = Phi(mu - c) + Phi(-mu - c) at c = Phi^{-1}(1 - u/2).
    """

    def __init__(self, mu):
        self.mu = float(mu)

    def cdf(self, u):
        u_arr = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            c = special.ndtri(1.0 - u_arr / 2.0)
        out = special.ndtr(self.mu - c) + special.ndtr(-self.mu - c)
        return float(out) if np.ndim(u) == 0 else out

    def sample(self, rng, size):
        z = rng.standard_normal(size) + self.mu
        return special.erfc(np.abs(z) / _SQRT2)

    def __repr__(self) -> str:
        return f"NormalShiftAlternative(mu={self.mu})"


class TableAlternative:
    """Piecewise-linear cdf through monotone (u, F1(u)) points.

    The table must start at (0, 0), end at (1, 1) and be nondecreasing in
    both coordinates.
    """

    def __init__(self, us, values):
        us = np.asarray(us, dtype=float)
        values = np.asarray(values, dtype=float)
        if us.ndim != 1 or us.shape != values.shape or us.size < 2:
            raise ValueError("need matching 1-d arrays with at least two points")
        if us[0] != 0.0 or us[-1] != 1.0 or values[0] != 0.0 or values[-1] != 1.0:
            raise ValueError("table must run from (0, 0) to (1, 1)")
        if np.any(np.diff(us) < 0.0) or np.any(np.diff(values) < 0.0):
            raise ValueError("table must be nondecreasing in both coordinates")
        self.us = us
        self.values = values

    def cdf(self, u):
        out = np.interp(np.asarray(u, dtype=float), self.us, self.values)
        return float(out) if np.ndim(u) == 0 else out

    def sample(self, rng, size):
        return np.interp(rng.random(size), self.values, self.us)

    def __repr__(self) -> str:
        return f"TableAlternative({len(self.us)} points)"


@dataclass(frozen=True)
class MixtureModel:
    """Null proportion pi0 plus the alternative p-value law f1.

    f1 may be omitted only when pi0 = 1 (no alternatives exist).
    """

    pi0: float
    f1: object | None = None

    def __post_init__(self):
        if not 0.0 <= self.pi0 <= 1.0:
            raise ValueError(f"pi0 must lie in [0, 1], got {self.pi0!r}")
        if self.f1 is None and self.pi0 != 1.0:
            raise ValueError("an alternative law f1 is required when pi0 < 1")

    def f1_cdf(self, u):
        return self.f1.cdf(u) if self.f1 is not None else np.asarray(u, dtype=float) * 1.0

    def cdf(self, u):
        """Marginal p-value cdf pi0 * u + (1 - pi0) * F1(u)."""
        return self.pi0 * np.asarray(u, dtype=float) + (1.0 - self.pi0) * self.f1_cdf(u)


@dataclass(frozen=True)
class JointVRDistribution:
    """Exact probabilities over (false rejections v, rejections r), v <= r.

    ``weights[v, r]`` covers n - 1 draws; cells with v > r are zero.
    """

    n_minus_1: int
    weights: np.ndarray

    def marginal_r(self) -> np.ndarray:
        return self.weights.sum(axis=0)


def joint_vr(n, model: MixtureModel, t) -> JointVRDistribution:
    """Trinomial law of (V, R) over n - 1 draws at rejection threshold t.

    weight(v, r) = multinomial(n-1; v, r-v, n-1-r) a^v b^(r-v) c^(n-1-r)
    with cell probabilities a = pi0*t, b = (1-pi0)*F1(t), c = 1 - F(t),
    assembled in log space.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t!r}")
    m = n - 1
    a = model.pi0 * t
    b = (1.0 - model.pi0) * float(model.f1_cdf(t))
    c = max(1.0 - (a + b), 0.0)
    v = np.arange(m + 1, dtype=float)[:, None]
    r = np.arange(m + 1, dtype=float)[None, :]
    w = r - v
    u = m - r
    valid = w >= 0.0
    logw = (
        special.gammaln(m + 1.0)
        - special.gammaln(v + 1.0)
        - special.gammaln(np.where(valid, w, 0.0) + 1.0)
        - special.gammaln(u + 1.0)
        + special.xlogy(v, a)
        + special.xlogy(np.where(valid, w, 0.0), b)
        + special.xlogy(u, c)
    )
    weights = np.where(valid, np.exp(logw), 0.0)
    weights.setflags(write=False)
    return JointVRDistribution(n_minus_1=m, weights=weights)


def exact_kfdr_single_step(n, k, model: MixtureModel, t) -> float:
    """Exact k-FDR of the test rejecting at p <= t.

    Evaluates n * pi0 * t * sum_{v >= k-1} weight(v, r) / (r + 1), which
    equals the defining expectation E[V 1{V >= k} / max(R, 1)] over the
    full n draws.
    """
    n = int(n)
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    dist = joint_vr(n, model, t)
    inv_r1 = 1.0 / np.arange(1.0, dist.n_minus_1 + 2.0)
    tail = dist.weights[k - 1 :, :].sum(axis=0)
    return n * model.pi0 * t * float(tail @ inv_r1)


def exact_fdr_single_step(n, model: MixtureModel, t, form="expectation") -> float:
    """Exact FDR of the test rejecting at p <= t, by either identity.

    ``expectation`` evaluates n * pi0 * t * E[1 / (R + 1)] on the exact
    (V, R) lattice; ``closed`` evaluates
    (pi0 * t / F(t)) * (1 - (1 - F(t))^n). The two agree to roundoff.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t!r}")
    if form == "expectation":
        dist = joint_vr(n, model, t)
        inv_r1 = 1.0 / np.arange(1.0, dist.n_minus_1 + 2.0)
        return n * model.pi0 * t * float(dist.marginal_r() @ inv_r1)
    if form == "closed":
        f_t = float(model.cdf(t))
        if f_t == 0.0:
            return 0.0
        prob_any = float(-np.expm1(n * np.log1p(-f_t))) if f_t < 1.0 else 1.0
        return model.pi0 * t / f_t * prob_any
    raise ValueError(f"form must be 'expectation' or 'closed', got {form!r}")


def expected_inv_r_plus1(n, f_t) -> float:
    """Closed form (1 - (1 - F)^n) / (n F) for E[1 / (R + 1)], R ~ Bin(n-1, F).

    Returns the limit value 1 at F = 0.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 <= f_t <= 1.0:
        raise ValueError(f"F must lie in [0, 1], got {f_t!r}")
    if f_t == 0.0:
        return 1.0
    if f_t == 1.0:
        return 1.0 / n
    return float(-np.expm1(n * np.log1p(-f_t)) / (n * f_t))


def kfwer_prev(n, k, pi0, t) -> float:
    """Probability of at least k - 1 false rejections among n - 1 hypotheses.

    Equals binom_tail(k - 1, n - 1, pi0 * t); this is the scale factor that
    turns the FDR into an upper bound for the k-FDR.
    """
    n = int(n)
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if not 0.0 <= pi0 <= 1.0 or not 0.0 <= t <= 1.0:
        raise ValueError("pi0 and t must lie in [0, 1]")
    return binom_tail(k - 1, n - 1, pi0 * t)


def marginal_kfdr_quantity(n, k, model: MixtureModel, t) -> float:
    """The ratio-of-expectations quantity (pi0 t / F(t)) * binom_tail(k-1, n-1, pi0 t).

    Identical to E[V 1{V >= k}] / E[R 1{R >= 1}], the marginal analogue of
    the k-FDR.
    """
    n = int(n)
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    f_t = float(model.cdf(t))
    if f_t == 0.0:
        raise ValueError("F(t) = 0: the marginal quantity is undefined")
    return model.pi0 * t / f_t * binom_tail(k - 1, n - 1, model.pi0 * t)


def check_scaled_fdr_bound(n, k, model: MixtureModel, t) -> tuple[float, float]:
    """Both sides of the bound k-FDR(t) <= Pr{V >= k-1 over n-1 draws} * FDR(t).

    Returns (lhs, rhs), each computed exactly; lhs <= rhs always holds, with
    equality at k = 1.
    """
    lhs = exact_kfdr_single_step(n, k, model, t)
    rhs = kfwer_prev(n, k, model.pi0, t) * exact_fdr_single_step(n, model, t, "expectation")
    return lhs, rhs
