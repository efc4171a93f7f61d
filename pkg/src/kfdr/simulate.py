"""Seeded Monte Carlo engine for power and error-rate studies.

Each replicate draws n test statistics Z_i = mu_i + sqrt(rho) W +
sqrt(1 - rho) eps_i with W, eps_i iid N(0, 1), so any two statistics share
correlation rho (rho = 0 gives independence). The first n1 means equal mu
(the false nulls), the rest are 0, and two-sided p-values are
p_i = 2 (1 - Phi(|Z_i|)). Replicate rep draws from its own random stream
keyed by (seed, rep), so runs are reproducible at any level of parallelism
and any single replicate can be regenerated in isolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .binomtail import g_tilde
from .critvals import ProcedureSpec, critical_values, cv_proc2_stage2
from .mixture import MixtureModel, NormalShiftAlternative
from .stepup import PValueSet

__all__ = [
    "SimulationSpec",
    "ProcedureStats",
    "ErrorRateReport",
    "REPORT_FIELDS",
    "gen_replicate",
    "run_simulation",
    "sweep",
    "mc_single_step_kfdr",
    "mc_kfdr_hat",
]

REPORT_FIELDS = (
    "procedure",
    "n",
    "n1",
    "k",
    "alpha",
    "lambda",
    "rho",
    "reps",
    "avg_power",
    "se_power",
    "kfdr",
    "se_kfdr",
    "kfwer",
    "se_kfwer",
    "seed",
)

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SimulationSpec:
    """One simulation design: data model, error-metric order, procedures."""

    n: int
    n1: int
    k: int
    alpha: float
    procedures: tuple[ProcedureSpec, ...]
    reps: int = 1000
    seed: int = 0
    mu: float = 2.0
    rho: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "procedures", tuple(self.procedures))
        if not self.procedures:
            raise ValueError("at least one procedure is required")
        if not all(isinstance(p, ProcedureSpec) for p in self.procedures):
            raise ValueError("procedures must be ProcedureSpec instances")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 <= self.n1 <= self.n:
            raise ValueError(f"need 0 <= n1 <= n, got n1={self.n1}, n={self.n}")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must lie in [0, 1), got {self.rho!r}")
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")


@dataclass(frozen=True)
class ProcedureStats:
    """Estimated average power, k-FDR and k-FWER for one procedure."""

    procedure: str
    lam: float | None
    avg_power: float
    se_power: float
    kfdr: float
    se_kfdr: float
    kfwer: float
    se_kfwer: float


@dataclass(frozen=True)
class ErrorRateReport:
    spec: SimulationSpec
    stats: tuple[ProcedureStats, ...]

    def rows(self) -> list[dict]:
        """One CSV-ready dict per procedure, fields per REPORT_FIELDS."""
        out = []
        for st in self.stats:
            out.append(
                {
                    "procedure": st.procedure,
                    "n": self.spec.n,
                    "n1": self.spec.n1,
                    "k": self.spec.k,
                    "alpha": self.spec.alpha,
                    "lambda": "" if st.lam is None else st.lam,
                    "rho": self.spec.rho,
                    "reps": self.spec.reps,
                    "avg_power": st.avg_power,
                    "se_power": st.se_power,
                    "kfdr": st.kfdr,
                    "se_kfdr": st.se_kfdr,
                    "kfwer": st.kfwer,
                    "se_kfwer": st.se_kfwer,
                    "seed": self.spec.seed,
                }
            )
        return out


def _replicate_rng(seed: int, rep_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep_index,)))


def _replicate_arrays(spec: SimulationSpec, rep_index: int):
    rng = _replicate_rng(spec.seed, rep_index)
    w = rng.standard_normal()
    eps = rng.standard_normal(spec.n)
    z = math.sqrt(spec.rho) * w + math.sqrt(1.0 - spec.rho) * eps
    false_null = np.zeros(spec.n, dtype=bool)
    false_null[: spec.n1] = True
    z[false_null] += spec.mu
    pvals = special.erfc(np.abs(z) / _SQRT2)
    return pvals, false_null


def gen_replicate(spec: SimulationSpec, rep_index: int):
    """Generate replicate ``rep_index``: a PValueSet plus false-null labels.

    Deterministic in (spec.seed, rep_index); ids are the positions 0..n-1
    and the label array marks the false nulls (mean mu).
    """
    pvals, false_null = _replicate_arrays(spec, rep_index)
    return PValueSet(pvals), false_null


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    reps = len(x)
    mean = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    return mean, se


def run_simulation(spec: SimulationSpec) -> ErrorRateReport:
    """Run every procedure on every replicate and aggregate the error rates.

    Per replicate and procedure this records the rejected-false-null
    fraction (power; 0 when n1 = 0), the realized k-FDP
    V 1{V >= k} / max(R, 1), and the indicator of at least k false
    rejections, all at the spec's metric order k. Aggregation is a fixed
    serial reduction, so results are bit-identical for a fixed seed.
    """
    n = spec.n
    fixed = [
        None if ps.family == "proc2" else critical_values(ps, n).values
        for ps in spec.procedures
    ]
    stage2_cache: dict[tuple[int, int], np.ndarray] = {}
    nproc = len(spec.procedures)
    power = np.zeros((spec.reps, nproc))
    kfdp = np.zeros((spec.reps, nproc))
    exceed = np.zeros((spec.reps, nproc))

    for rep in range(spec.reps):
        pvals, false_null = _replicate_arrays(spec, rep)
        order = np.argsort(pvals, kind="stable")
        sp = pvals[order]
        null_sorted = ~false_null[order]
        cum_null = np.cumsum(null_sorted)
        for idx, ps in enumerate(spec.procedures):
            if ps.family == "proc2":
                j = int(np.searchsorted(sp, ps.lam, side="right"))
                if j == 0:
                    l_hat = 0
                else:
                    key = (idx, j)
                    cv2 = stage2_cache.get(key)
                    if cv2 is None:
                        cv2 = cv_proc2_stage2(n, ps.k, ps.alpha, ps.lam, j, ps.variant).values
                        stage2_cache[key] = cv2
                    hits = np.nonzero(sp[:j] <= cv2)[0]
                    l_hat = int(hits[-1]) + 1 if hits.size else 0
            else:
                hits = np.nonzero(sp <= fixed[idx])[0]
                l_hat = int(hits[-1]) + 1 if hits.size else 0
            v = int(cum_null[l_hat - 1]) if l_hat else 0
            power[rep, idx] = (l_hat - v) / spec.n1 if spec.n1 else 0.0
            if v >= spec.k:
                kfdp[rep, idx] = v / max(l_hat, 1)
                exceed[rep, idx] = 1.0

    stats = []
    for idx, ps in enumerate(spec.procedures):
        avg_power, se_power = _mean_se(power[:, idx])
        kfdr, se_kfdr = _mean_se(kfdp[:, idx])
        kfwer, se_kfwer = _mean_se(exceed[:, idx])
        stats.append(
            ProcedureStats(
                procedure=ps.label(),
                lam=ps.lam,
                avg_power=avg_power,
                se_power=se_power,
                kfdr=kfdr,
                se_kfdr=se_kfdr,
                kfwer=kfwer,
                se_kfwer=se_kfwer,
            )
        )
    return ErrorRateReport(spec=spec, stats=tuple(stats))


def sweep(specs) -> list[dict]:
    """Run several simulation specs and collect their CSV rows."""
    specs = list(specs)
    if not specs:
        raise ValueError("no simulation specs given")
    rows: list[dict] = []
    for spec in specs:
        rows.extend(run_simulation(spec).rows())
    return rows


def _chunk_reps(n: int, requested: int | None) -> int:
    if requested is not None:
        return max(1, int(requested))
    return max(1, (1 << 22) // max(n, 1))


def mc_single_step_kfdr(n, k, model: MixtureModel, t, reps, seed, chunk=None):
    """Monte Carlo mean and standard error of the k-FDP of the test p <= t.

    Hypotheses are sampled iid from the mixture model. For a normal-shift
    alternative the event p <= t is evaluated in statistic space as
    |Z| >= Phi^{-1}(1 - t/2), avoiding a p-value transform per draw; other
    alternatives are sampled through their cdf. Separate streams drive the
    truth labels and the statistics, so on the normal-shift path the draws
    do not depend on the chunk size (the accumulated mean can differ by
    summation order at the 1e-16 level).
    """
    n = int(n)
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t!r}")
    reps = int(reps)
    if reps < 2:
        raise ValueError("need reps >= 2 for a standard error")
    chunk = _chunk_reps(n, chunk)
    seq_h, seq_z = np.random.SeedSequence(seed).spawn(2)
    rng_h = np.random.default_rng(seq_h)
    rng_z = np.random.default_rng(seq_z)

    normal_path = model.f1 is None or isinstance(model.f1, NormalShiftAlternative)
    if normal_path:
        cutoff = special.ndtri(1.0 - t / 2.0)
        mu = model.f1.mu if model.f1 is not None else 0.0

    total = 0.0
    total_sq = 0.0
    done = 0
    while done < reps:
        m = min(chunk, reps - done)
        alt = rng_h.random((m, n)) < (1.0 - model.pi0)
        if normal_path:
            z = rng_z.standard_normal((m, n))
            z[alt] += mu
            rejected = np.abs(z) >= cutoff
        else:
            p = rng_z.random((m, n))
            n_alt = int(alt.sum())
            if n_alt:
                p[alt] = model.f1.sample(rng_z, n_alt)
            rejected = p <= t
        v = (rejected & ~alt).sum(axis=1)
        r = rejected.sum(axis=1)
        vals = np.where(v >= k, v / np.maximum(r, 1), 0.0)
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += m
    mean = total / reps
    var = max(total_sq - reps * mean * mean, 0.0) / (reps - 1)
    return mean, math.sqrt(var / reps)


def mc_kfdr_hat(n, k, model: MixtureModel, t, lam, reps, seed, chunk=None):
    """Monte Carlo mean and standard error of the k-FDR point estimate.

    Evaluates n * pi0_hat(lam) * t * binom_tail(k-1, n-1, t) / max(R(t), 1)
    on each mixture-model replicate, vectorized over replicates. Agrees
    replicate-for-replicate with :func:`kfdr.estimators.kfdr_hat`.
    """
    n = int(n)
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0, 1), got {t!r}")
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"lam must lie in [0, 1), got {lam!r}")
    reps = int(reps)
    if reps < 2:
        raise ValueError("need reps >= 2 for a standard error")
    chunk = _chunk_reps(n, chunk)
    seq_h, seq_z = np.random.SeedSequence(seed).spawn(2)
    rng_h = np.random.default_rng(seq_h)
    rng_z = np.random.default_rng(seq_z)

    gt = g_tilde(k, n, t)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < reps:
        m = min(chunk, reps - done)
        alt = rng_h.random((m, n)) < (1.0 - model.pi0)
        if model.f1 is None or isinstance(model.f1, NormalShiftAlternative):
            mu = model.f1.mu if model.f1 is not None else 0.0
            z = rng_z.standard_normal((m, n))
            z[alt] += mu
            p = special.erfc(np.abs(z) / _SQRT2)
        else:
            p = rng_z.random((m, n))
            n_alt = int(alt.sum())
            if n_alt:
                p[alt] = model.f1.sample(rng_z, n_alt)
        r_t = (p <= t).sum(axis=1)
        r_lam = (p <= lam).sum(axis=1)
        pi0h = (n - r_lam) / (n * (1.0 - lam))
        vals = n * pi0h * gt / np.maximum(r_t, 1)
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += m
    mean = total / reps
    var = max(total_sq - reps * mean * mean, 0.0) / (reps - 1)
    return mean, math.sqrt(var / reps)
