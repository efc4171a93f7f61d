"""Two-group differential-expression workflow.

Ingests an intensity-ratio matrix, drops genes with any included-sample
ratio above a cap, log-transforms the rest, computes per-gene two-sample
t statistics, turns them into permutation p-values (pooled across genes by
default), and tabulates rejection counts across procedures and error
orders k.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .critvals import ProcedureSpec
from .stepup import PValueSet, run_procedure

__all__ = [
    "ExpressionMatrix",
    "GeneTestResult",
    "AnalysisResult",
    "GROUP_LABELS",
    "read_expression_matrix",
    "preprocess",
    "two_sample_t",
    "permutation_pvalues",
    "analyze",
]

GROUP_LABELS = ("A", "B", "excluded")


@dataclass(frozen=True)
class ExpressionMatrix:
    """Gene-by-sample matrix of positive intensity ratios with group labels."""

    gene_ids: tuple[str, ...]
    sample_ids: tuple[str, ...]
    groups: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.gene_ids), len(self.sample_ids)):
            raise ValueError("matrix shape must be (genes, samples)")
        if len(self.groups) != len(self.sample_ids):
            raise ValueError("one group label per sample is required")
        bad = set(self.groups) - set(GROUP_LABELS)
        if bad:
            raise ValueError(f"unknown group labels {sorted(bad)}; use {GROUP_LABELS}")
        for label in ("A", "B"):
            if sum(g == label for g in self.groups) < 2:
                raise ValueError(f"group {label} needs at least 2 samples")
        if np.any(np.isnan(vals)):
            raise ValueError("missing values are not supported")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "gene_ids", tuple(self.gene_ids))
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))
        object.__setattr__(self, "groups", tuple(self.groups))

    @property
    def n_genes(self) -> int:
        return len(self.gene_ids)

    def group_columns(self, label: str) -> np.ndarray:
        return np.array([g == label for g in self.groups])


@dataclass(frozen=True)
class GeneTestResult:
    gene_id: str
    t_stat: float
    p_perm: float

    def __post_init__(self):
        if not 0.0 <= self.p_perm <= 1.0:
            raise ValueError(f"p_perm must lie in [0, 1], got {self.p_perm!r}")


def read_expression_matrix(path, delimiter=None, group_map=None) -> ExpressionMatrix:
    """Parse a matrix file: sample-id header, group-label row, gene rows.

    ``group_map`` renames raw labels to A/B (anything unmapped becomes
    excluded); without it labels must already be A/B/excluded. The
    delimiter defaults to a comma for .csv files and a tab otherwise.
    Parse failures raise ValueError naming the offending line.
    """
    path = str(path)
    if delimiter is None:
        delimiter = "," if path.endswith(".csv") else "\t"
    with open(path, newline="") as handle:
        reader = csv.reader(handle, delimiter=delimiter)
        rows = [row for row in reader]
    rows = [row for row in rows if row and any(cell.strip() for cell in row)]
    if len(rows) < 3:
        raise ValueError("expected a header row, a group row, and at least one gene row")
    sample_ids = [cell.strip() for cell in rows[0][1:]]
    raw_groups = [cell.strip() for cell in rows[1][1:]]
    if len(raw_groups) != len(sample_ids):
        raise ValueError("line 2: group row length does not match the header")
    if group_map is not None:
        groups = [group_map.get(g, "excluded") for g in raw_groups]
    else:
        groups = raw_groups
    gene_ids = []
    values = []
    for lineno, row in enumerate(rows[2:], start=3):
        if len(row) != len(sample_ids) + 1:
            raise ValueError(f"line {lineno}: expected {len(sample_ids) + 1} fields, got {len(row)}")
        gene_ids.append(row[0].strip())
        try:
            values.append([float(cell) for cell in row[1:]])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return ExpressionMatrix(
        gene_ids=tuple(gene_ids),
        sample_ids=tuple(sample_ids),
        groups=tuple(groups),
        values=np.asarray(values, dtype=float),
    )


def preprocess(matrix: ExpressionMatrix, ratio_cap=20.0, log_base=2.0) -> ExpressionMatrix:
    """Filter extreme genes, then log-transform.

    A gene is dropped when any of its included-sample ratios strictly
    exceeds ``ratio_cap`` (a value exactly at the cap survives). Surviving
    values must be positive for the log; excluded samples are discarded
    here since nothing downstream uses them. The dropped count is
    len(matrix.gene_ids) - len(result.gene_ids).
    """
    if ratio_cap <= 0.0:
        raise ValueError(f"ratio_cap must be positive, got {ratio_cap!r}")
    if log_base <= 1.0:
        raise ValueError(f"log_base must exceed 1, got {log_base!r}")
    included = np.array([g != "excluded" for g in matrix.groups])
    vals = matrix.values[:, included]
    keep = ~(vals > ratio_cap).any(axis=1)
    kept_vals = vals[keep]
    if np.any(kept_vals <= 0.0):
        gene = np.asarray(matrix.gene_ids)[keep][np.any(kept_vals <= 0.0, axis=1)][0]
        raise ValueError(f"gene {gene!r} has a nonpositive ratio; cannot log-transform")
    return ExpressionMatrix(
        gene_ids=tuple(np.asarray(matrix.gene_ids)[keep]),
        sample_ids=tuple(np.asarray(matrix.sample_ids)[included]),
        groups=tuple(np.asarray(matrix.groups)[included]),
        values=np.log(kept_vals) / np.log(log_base),
    )


def _t_statistics(values: np.ndarray, a_cols: np.ndarray, b_cols: np.ndarray, equal_var: bool):
    """Two-sample t per row of ``values`` for column masks a_cols/b_cols."""
    a = values[:, a_cols]
    b = values[:, b_cols]
    na, nb = a.shape[1], b.shape[1]
    mean_diff = a.mean(axis=1) - b.mean(axis=1)
    var_a = a.var(axis=1, ddof=1)
    var_b = b.var(axis=1, ddof=1)
    if equal_var:
        pooled = ((na - 1) * var_a + (nb - 1) * var_b) / (na + nb - 2)
        se = np.sqrt(pooled * (1.0 / na + 1.0 / nb))
    else:
        se = np.sqrt(var_a / na + var_b / nb)
    degenerate = se == 0.0
    if np.any(degenerate):
        warnings.warn(
            f"{int(degenerate.sum())} gene(s) with zero variance; their t is set to 0",
            stacklevel=3,
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(degenerate, 0.0, mean_diff / np.where(degenerate, 1.0, se))
    return t


def two_sample_t(matrix: ExpressionMatrix, equal_var=True) -> np.ndarray:
    """Per-gene two-sample t statistics, group A minus group B.

    Pooled variance by default; ``equal_var=False`` switches to the
    unequal-variance form. Genes with zero variance get t = 0 and a
    warning.
    """
    a_cols = matrix.group_columns("A")
    b_cols = matrix.group_columns("B")
    if a_cols.sum() < 2 or b_cols.sum() < 2:
        raise ValueError("both groups need at least 2 samples")
    return _t_statistics(matrix.values, a_cols, b_cols, equal_var)


def _relabelings(matrix: ExpressionMatrix, B, seed, exhaustive):
    """Column-mask pairs (a_cols, b_cols) over the included samples."""
    included = np.flatnonzero(np.array([g != "excluded" for g in matrix.groups]))
    n_a = int(matrix.group_columns("A").sum())
    masks = []
    if exhaustive:
        for combo in combinations(range(len(included)), n_a):
            a_cols = np.zeros(len(matrix.groups), dtype=bool)
            a_cols[included[list(combo)]] = True
            b_cols = np.zeros(len(matrix.groups), dtype=bool)
            b_cols[np.setdiff1d(included, included[list(combo)])] = True
            masks.append((a_cols, b_cols))
    else:
        if B < 1:
            raise ValueError(f"B must be >= 1, got {B}")
        rng = np.random.default_rng(seed)
        for _ in range(int(B)):
            perm = rng.permutation(len(included))
            a_cols = np.zeros(len(matrix.groups), dtype=bool)
            a_cols[included[perm[:n_a]]] = True
            b_cols = np.zeros(len(matrix.groups), dtype=bool)
            b_cols[included[perm[n_a:]]] = True
            masks.append((a_cols, b_cols))
    return masks


def permutation_pvalues(
    matrix: ExpressionMatrix,
    B=1000,
    seed=0,
    mode="pooled",
    exhaustive=False,
    equal_var=True,
) -> list[GeneTestResult]:
    """Permutation p-values for the per-gene two-sample t statistics.

    Group labels are reassigned uniformly at random (sizes fixed) B times,
    or once per distinct relabeling with ``exhaustive=True``. With
    ``mode="pooled"`` the null statistics of all genes form one reference
    distribution, p_i = #{(j, b): |t*_jb| >= |t_i|} / (n_genes * B);
    ``mode="per-gene"`` compares each gene only to its own null draws. The
    >= convention guarantees p > 0 whenever the observed labeling is drawn.
    """
    if mode not in ("pooled", "per-gene"):
        raise ValueError(f"mode must be 'pooled' or 'per-gene', got {mode!r}")
    observed = two_sample_t(matrix, equal_var=equal_var)
    masks = _relabelings(matrix, B, seed, exhaustive)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        null_stats = np.abs(
            np.stack(
                [_t_statistics(matrix.values, a, b, equal_var) for a, b in masks],
                axis=1,
            )
        )
    abs_obs = np.abs(observed)
    n_rounds = null_stats.shape[1]
    if mode == "pooled":
        pool = np.sort(null_stats.ravel())
        exceed = pool.size - np.searchsorted(pool, abs_obs, side="left")
        pvals = exceed / pool.size
    else:
        pvals = (null_stats >= abs_obs[:, None]).sum(axis=1) / n_rounds
    return [
        GeneTestResult(gene_id=g, t_stat=float(t), p_perm=float(p))
        for g, t, p in zip(matrix.gene_ids, observed, pvals)
    ]


@dataclass(frozen=True)
class AnalysisResult:
    """Rejection counts per (procedure, k), plus the per-gene test results.

    ``rejected[procedure][k]`` holds row indices into ``genes`` (gene ids
    may repeat in real matrices, so identity is positional).
    """

    counts: dict
    rejected: dict
    genes: tuple[GeneTestResult, ...]
    n_genes_dropped: int
    k_list: tuple[int, ...]
    procedures: tuple[str, ...]

    def count_rows(self) -> list[dict]:
        """CSV-ready rows: one per procedure, one column per k."""
        rows = []
        for proc in self.procedures:
            row = {"procedure": proc}
            for k in self.k_list:
                row[str(k)] = self.counts[proc][k]
            rows.append(row)
        return rows


def analyze(
    matrix: ExpressionMatrix,
    k_list,
    alpha=0.05,
    lam=0.9,
    procedures=("proc1", "proc2", "sarkar-kfdr", "sarkar-kfwer", "gen-hochberg"),
    ratio_cap=20.0,
    B=1000,
    seed=0,
    mode="pooled",
    exhaustive=False,
) -> AnalysisResult:
    """Full pipeline: preprocess, permutation p-values, rejection counts.

    ``procedures`` are family names (lam applies to proc2, k from k_list);
    the result carries a procedure-by-k count grid together with the
    rejected row-index sets behind it.
    """
    k_list = tuple(int(k) for k in k_list)
    if not k_list:
        raise ValueError("k_list must not be empty")
    if any(k < 1 for k in k_list):
        raise ValueError("every k must be >= 1")
    procedures = tuple(procedures)
    if not procedures:
        raise ValueError("procedures must not be empty")
    clean = preprocess(matrix, ratio_cap=ratio_cap)
    genes = permutation_pvalues(clean, B=B, seed=seed, mode=mode, exhaustive=exhaustive)
    pvals = PValueSet([g.p_perm for g in genes])  # positional ids: gene ids may repeat
    counts: dict = {}
    rejected: dict = {}
    for family in procedures:
        counts[family] = {}
        rejected[family] = {}
        for k in k_list:
            spec_kwargs = {"family": family, "k": k, "alpha": alpha}
            if family == "proc2":
                spec_kwargs["lam"] = lam
            if family == "bh" and k != 1:
                raise ValueError("bh runs at k = 1 only; use proc1 for larger k")
            result = run_procedure(pvals, ProcedureSpec(**spec_kwargs))
            counts[family][k] = result.l_hat
            rejected[family][k] = frozenset(result.rejected_ids)
    return AnalysisResult(
        counts=counts,
        rejected=rejected,
        genes=tuple(genes),
        n_genes_dropped=matrix.n_genes - clean.n_genes,
        k_list=k_list,
        procedures=procedures,
    )
