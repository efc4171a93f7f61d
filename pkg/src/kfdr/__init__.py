"""Generalized false discovery rate (k-FDR) and k-FWER multiple testing.

Step-up procedures that control the expected fraction of k-or-more false
rejections, the k-FWER families they compete with, an exact mixture-model
oracle for fixed-threshold tests, a seeded Monte Carlo harness, and a
permutation pipeline for two-group expression data.
"""

from .binomtail import binom_tail, g_tilde, g_tilde_inv
from .critvals import (
    FAMILIES,
    PROC2_VARIANTS,
    CriticalValues,
    ProcedureSpec,
    critical_values,
    cv_bh,
    cv_gen_hochberg,
    cv_oracle,
    cv_proc1,
    cv_proc2_stage2,
    cv_sarkar_kfdr,
    cv_sarkar_kfwer,
)
from .estimators import kfdr_hat, kfdr_hat_star, pi0_hat, pi0_hat_star, threshold_t_alpha
from .mixture import (
    JointVRDistribution,
    MixtureModel,
    NormalShiftAlternative,
    TableAlternative,
    check_scaled_fdr_bound,
    exact_fdr_single_step,
    exact_kfdr_single_step,
    expected_inv_r_plus1,
    joint_vr,
    kfwer_prev,
    marginal_kfdr_quantity,
)
from .pipeline import (
    AnalysisResult,
    ExpressionMatrix,
    GeneTestResult,
    analyze,
    permutation_pvalues,
    preprocess,
    read_expression_matrix,
    two_sample_t,
)
from .simulate import (
    ErrorRateReport,
    ProcedureStats,
    SimulationSpec,
    gen_replicate,
    mc_kfdr_hat,
    mc_single_step_kfdr,
    run_simulation,
    sweep,
)
from .stepup import PValueSet, RejectionResult, proc2, run_procedure, stepup

__version__ = "0.1.0"

__all__ = [
    "binom_tail",
    "g_tilde",
    "g_tilde_inv",
    "CriticalValues",
    "ProcedureSpec",
    "FAMILIES",
    "PROC2_VARIANTS",
    "critical_values",
    "cv_bh",
    "cv_proc1",
    "cv_gen_hochberg",
    "cv_sarkar_kfwer",
    "cv_sarkar_kfdr",
    "cv_oracle",
    "cv_proc2_stage2",
    "PValueSet",
    "RejectionResult",
    "stepup",
    "run_procedure",
    "proc2",
    "pi0_hat",
    "pi0_hat_star",
    "kfdr_hat",
    "kfdr_hat_star",
    "threshold_t_alpha",
    "MixtureModel",
    "NormalShiftAlternative",
    "TableAlternative",
    "JointVRDistribution",
    "joint_vr",
    "exact_kfdr_single_step",
    "exact_fdr_single_step",
    "expected_inv_r_plus1",
    "kfwer_prev",
    "marginal_kfdr_quantity",
    "check_scaled_fdr_bound",
    "SimulationSpec",
    "ProcedureStats",
    "ErrorRateReport",
    "gen_replicate",
    "run_simulation",
    "sweep",
    "mc_single_step_kfdr",
    "mc_kfdr_hat",
    "ExpressionMatrix",
    "GeneTestResult",
    "AnalysisResult",
    "read_expression_matrix",
    "preprocess",
    "two_sample_t",
    "permutation_pvalues",
    "analyze",
]
