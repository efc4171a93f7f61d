"""Critical-value families for step-up multiple testing procedures.

Every generator returns a nondecreasing sequence of n constants wrapped in
:class:`CriticalValues`. The k-FDR families (``proc1``, ``oracle``,
``sarkar-kfdr``) hold their first k-1 entries at the k-th one via the
``max(i, k)`` index, since rejections below the k-th cannot contribute to
the error rate anyway.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binomtail import g_tilde_inv

__all__ = [
    "CriticalValues",
    "ProcedureSpec",
    "FAMILIES",
    "PROC2_VARIANTS",
    "cv_bh",
    "cv_proc1",
    "cv_gen_hochberg",
    "cv_sarkar_kfwer",
    "cv_sarkar_kfdr",
    "cv_oracle",
    "cv_proc2_stage2",
    "critical_values",
]

FAMILIES = (
    "bh",
    "proc1",
    "proc2",
    "gen-hochberg",
    "sarkar-kfwer",
    "sarkar-kfdr",
    "oracle",
)

PROC2_VARIANTS = ("conservative", "direct")


@dataclass(frozen=True)
class CriticalValues:
    """Step-up constants plus the family metadata they came from."""

    values: np.ndarray
    k: int
    family: str
    note: str | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("values must be a nonempty 1-d sequence")
        if np.any(np.isnan(v)) or np.any((v < 0.0) | (v > 1.0)):
            raise ValueError("critical values must lie in [0, 1]")
        if np.any(np.diff(v) < 0.0):
            raise ValueError("critical values must be nondecreasing")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ProcedureSpec:
    """Which step-up family to run, and with what parameters.

    ``lam`` is required for ``proc2`` (its first-stage cutoff), ``n0`` for
    ``oracle`` (the known true-null count), and ``variant`` selects between
    the provably controlling ``conservative`` second-stage constants of
    proc2 and the slightly larger ``direct`` ones.  ``bh`` is the k = 1
    special case of ``proc1``.
    """

    family: str
    k: int = 1
    alpha: float = 0.05
    lam: float | None = None
    n0: int | None = None
    variant: str = "conservative"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be an integer >= 1, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.family == "bh" and self.k != 1:
            raise ValueError("bh takes k = 1; use proc1 for larger orders")
        if self.family == "proc2":
            if self.lam is None or not 0.0 < self.lam < 1.0:
                raise ValueError("proc2 needs lam in (0, 1)")
            if self.variant not in PROC2_VARIANTS:
                raise ValueError(f"variant must be one of {PROC2_VARIANTS}")
        if self.family == "oracle":
            if self.n0 is None or int(self.n0) != self.n0 or self.n0 < self.k:
                raise ValueError("oracle needs an integer n0 >= k")
            object.__setattr__(self, "n0", int(self.n0))

    def label(self) -> str:
        if self.family == "proc2" and self.variant == "direct":
            return "proc2-direct"
        return self.family


def _check_nka(n, k, alpha) -> tuple[int, int, float]:
    n = int(n)
    k = int(k)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    return n, k, float(alpha)


def cv_bh(n, alpha) -> CriticalValues:
    """The linear step-up grid i * alpha / n."""
    n, _, alpha = _check_nka(n, 1, alpha)
    i = np.arange(1, n + 1)
    return CriticalValues(i * alpha / n, k=1, family="bh")


def cv_proc1(n, k, alpha) -> CriticalValues:
    """k-FDR step-up constants: entry i solves g_tilde(k, n, a) = max(i, k) * alpha / n.

    Since g_tilde(k, n, t) <= t, every entry dominates the matching linear
    grid value, so this family rejects a superset of ``bh``.
    """
    n, k, alpha = _check_nka(n, k, alpha)
    i = np.arange(1, n + 1)
    vals = g_tilde_inv(k, n, np.maximum(i, k) * alpha / n)
    return CriticalValues(vals, k=k, family="proc1")


def cv_gen_hochberg(n, k, alpha) -> CriticalValues:
    """k-FWER step-up constants k * alpha / (n - max(i, k) + k).

    Reduces to Hochberg's alpha / (n - i + 1) at k = 1.
    """
    n, k, alpha = _check_nka(n, k, alpha)
    i = np.arange(1, n + 1)
    vals = k * alpha / (n - np.maximum(i, k) + k)
    return CriticalValues(vals, k=k, family="gen-hochberg")


def cv_sarkar_kfwer(n, k, alpha) -> CriticalValues:
    """k-FWER step-up constants (alpha * prod_{j<=k} j / (n - max(i, k) + j))^(1/k)."""
    n, k, alpha = _check_nka(n, k, alpha)
    iv = np.maximum(np.arange(1, n + 1), k)
    j = np.arange(1, k + 1, dtype=float)
    prod = np.prod(j / (n - iv[:, None] + j), axis=1)
    return CriticalValues((alpha * prod) ** (1.0 / k), k=k, family="sarkar-kfwer")


def cv_sarkar_kfdr(n, k, alpha) -> CriticalValues:
    """k-FDR step-up constants ((max(i,k)/n) alpha prod_{j<k} j / (n - max(i,k) + j))^(1/k).

    The empty product at k = 1 makes this the ``bh`` grid.
    """
    n, k, alpha = _check_nka(n, k, alpha)
    iv = np.maximum(np.arange(1, n + 1), k)
    if k == 1:
        prod = np.ones(n)
    else:
        j = np.arange(1, k, dtype=float)
        prod = np.prod(j / (n - iv[:, None] + j), axis=1)
    vals = ((iv / n) * alpha * prod) ** (1.0 / k)
    return CriticalValues(vals, k=k, family="sarkar-kfdr")


def cv_oracle(n, k, alpha, n0) -> CriticalValues:
    """Step-up constants using the true null count n0 in place of n.

    Entry i is g_tilde_inv(k, n0, max(i, k) * alpha / n0); arguments above 1
    clamp to a critical value of 1. n0 may be smaller or larger than n but
    must be at least k.
    """
    n, k, alpha = _check_nka(n, k, alpha)
    n0 = int(n0)
    if n0 < k:
        raise ValueError(f"need n0 >= k, got n0={n0}, k={k}")
    i = np.arange(1, n + 1)
    vals = g_tilde_inv(k, n0, np.maximum(i, k) * alpha / n0)
    return CriticalValues(vals, k=k, family="oracle")


def cv_proc2_stage2(n, k, alpha, lam, j, variant="conservative") -> CriticalValues:
    """Second-stage constants of the two-stage adaptive procedure, length j.

    Given j first-stage survivors (p-values at or below ``lam``), the
    conservative variant uses
    ``lam * min(g_tilde_inv(k, n, i * alpha * (1 - lam) / (lam * (n - j + 1))), 1)``
    and the direct variant
    ``min(g_tilde_inv(k, n, i * alpha * (1 - lam) / (n - j + 1)), lam)``.
    Each conservative entry is bounded by the matching direct one.
    """
    n, k, alpha = _check_nka(n, k, alpha)
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lam must lie in (0, 1), got {lam!r}")
    j = int(j)
    if not 1 <= j <= n:
        raise ValueError(f"need 1 <= j <= n, got j={j}, n={n}")
    if variant not in PROC2_VARIANTS:
        raise ValueError(f"variant must be one of {PROC2_VARIANTS}")
    i = np.arange(1, j + 1)
    if variant == "conservative":
        arg = i * alpha * (1.0 - lam) / (lam * (n - j + 1))
        vals = lam * np.minimum(g_tilde_inv(k, n, arg), 1.0)
        note = None
    else:
        arg = i * alpha * (1.0 - lam) / (n - j + 1)
        vals = np.minimum(g_tilde_inv(k, n, arg), lam)
        note = "control unproven for k > 1"
    return CriticalValues(vals, k=k, family="proc2", note=note)


def critical_values(spec: ProcedureSpec, n) -> CriticalValues:
    """Fixed-length-n constants for a data-independent family."""
    if spec.family == "bh":
        return cv_bh(n, spec.alpha)
    if spec.family == "proc1":
        return cv_proc1(n, spec.k, spec.alpha)
    if spec.family == "gen-hochberg":
        return cv_gen_hochberg(n, spec.k, spec.alpha)
    if spec.family == "sarkar-kfwer":
        return cv_sarkar_kfwer(n, spec.k, spec.alpha)
    if spec.family == "sarkar-kfdr":
        return cv_sarkar_kfdr(n, spec.k, spec.alpha)
    if spec.family == "oracle":
        return cv_oracle(n, spec.k, spec.alpha, spec.n0)
    raise ValueError("proc2 constants depend on the data; use run_procedure")
