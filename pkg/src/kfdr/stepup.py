"""The generic step-up rejection rule and the two-stage adaptive variant.

A step-up procedure with nondecreasing constants a_1 <= ... <= a_n rejects
the hypotheses carrying the l smallest p-values, where
l = max{i : p_(i) <= a_i} (and nothing when no index qualifies). All
comparisons are closed: a p-value equal to its constant is rejected, and
tied p-values are never split because the constants are nondecreasing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .critvals import CriticalValues, ProcedureSpec, critical_values, cv_proc2_stage2

__all__ = ["PValueSet", "RejectionResult", "as_pvalue_set", "stepup", "run_procedure", "proc2"]


class PValueSet:
    """Immutable p-values paired with stable hypothesis identifiers.

    Entries are sorted by (p, input position), so shuffling the input can
    only permute bookkeeping among exactly tied values, never the rejection
    set. NaN anywhere is a hard error.
    """

    __slots__ = ("p", "ids", "order")

    def __init__(self, values, ids=None):
        p = np.asarray(values, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("p-values must form a nonempty 1-d sequence")
        if np.any(np.isnan(p)):
            raise ValueError("NaN p-values are not allowed")
        if np.any((p < 0.0) | (p > 1.0)):
            raise ValueError("p-values must lie in [0, 1]")
        p = p.copy()
        p.setflags(write=False)
        self.p = p
        if ids is None:
            ids = tuple(range(len(p)))
        else:
            ids = tuple(ids)
            if len(ids) != len(p):
                raise ValueError("ids and p-values differ in length")
            if len(set(ids)) != len(ids):
                raise ValueError("hypothesis ids must be unique")
        self.ids = ids
        order = np.argsort(p, kind="stable")
        order.setflags(write=False)
        self.order = order

    def __len__(self) -> int:
        return len(self.p)

    @property
    def sorted_p(self) -> np.ndarray:
        return self.p[self.order]

    def __repr__(self) -> str:
        return f"PValueSet(n={len(self)})"


def as_pvalue_set(pvals) -> PValueSet:
    """Coerce an array of p-values (or pass through a PValueSet)."""
    return pvals if isinstance(pvals, PValueSet) else PValueSet(pvals)


@dataclass(frozen=True)
class RejectionResult:
    """Outcome of one procedure run.

    ``rejected_ids`` lists the l_hat rejected hypotheses in increasing
    p-value order; ``threshold`` is the critical value at index l_hat (0.0
    when nothing is rejected). ``stage1_j`` is the first-stage survivor
    count of the two-stage procedure, None otherwise.
    """

    l_hat: int
    rejected_ids: tuple
    threshold: float
    stage1_j: int | None = None
    spec: ProcedureSpec | None = None

    def __post_init__(self):
        if len(self.rejected_ids) != self.l_hat:
            raise ValueError("rejected_ids must have exactly l_hat entries")


def _stepup_count(sorted_p: np.ndarray, values: np.ndarray) -> int:
    hits = np.nonzero(sorted_p <= values)[0]
    return int(hits[-1]) + 1 if hits.size else 0


def stepup(pvals, cv) -> RejectionResult:
    """Run the step-up rule for an arbitrary set of critical values."""
    pv = as_pvalue_set(pvals)
    values = cv.values if isinstance(cv, CriticalValues) else np.asarray(cv, dtype=float)
    if len(values) != len(pv):
        raise ValueError(
            f"need one critical value per p-value, got {len(values)} for {len(pv)}"
        )
    l_hat = _stepup_count(pv.sorted_p, values)
    ids = tuple(pv.ids[i] for i in pv.order[:l_hat])
    threshold = float(values[l_hat - 1]) if l_hat else 0.0
    return RejectionResult(l_hat=l_hat, rejected_ids=ids, threshold=threshold)


def proc2(pvals, k, alpha, lam, variant="conservative") -> RejectionResult:
    """Two-stage adaptive step-up rule.

    Stage one counts j = #{p <= lam}; if no p-value survives, nothing is
    rejected. Stage two steps up over the j survivors against second-stage
    constants that shrink with n - j + 1, the implied null-count estimate.
    """
    pv = as_pvalue_set(pvals)
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lam must lie in (0, 1), got {lam!r}")
    sp = pv.sorted_p
    j = int(np.searchsorted(sp, lam, side="right"))
    if j == 0:
        return RejectionResult(l_hat=0, rejected_ids=(), threshold=0.0, stage1_j=0)
    cv2 = cv_proc2_stage2(len(pv), k, alpha, lam, j, variant)
    l_hat = _stepup_count(sp[:j], cv2.values)
    ids = tuple(pv.ids[i] for i in pv.order[:l_hat])
    threshold = float(cv2.values[l_hat - 1]) if l_hat else 0.0
    return RejectionResult(l_hat=l_hat, rejected_ids=ids, threshold=threshold, stage1_j=j)


def run_procedure(pvals, spec: ProcedureSpec) -> RejectionResult:
    """Dispatch a ProcedureSpec against a p-value set."""
    pv = as_pvalue_set(pvals)
    if spec.family == "proc2":
        result = proc2(pv, spec.k, spec.alpha, spec.lam, spec.variant)
    else:
        result = stepup(pv, critical_values(spec, len(pv)))
    return replace(result, spec=spec)
