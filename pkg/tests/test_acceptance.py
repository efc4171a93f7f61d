"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete. Criterion 9 is report-only and prints a table
instead of asserting an ordering; criterion 11's real-data half runs only
when KFDR_HEDENFALK points at a local expression matrix.
"""

import math
import os
import warnings
from itertools import product

import numpy as np
import pytest

from kfdr import (
    MixtureModel,
    NormalShiftAlternative,
    ProcedureSpec,
    SimulationSpec,
    analyze,
    binom_tail,
    check_scaled_fdr_bound,
    cv_bh,
    cv_gen_hochberg,
    cv_proc1,
    cv_sarkar_kfdr,
    cv_sarkar_kfwer,
    exact_fdr_single_step,
    exact_kfdr_single_step,
    expected_inv_r_plus1,
    g_tilde,
    g_tilde_inv,
    joint_vr,
    marginal_kfdr_quantity,
    mc_kfdr_hat,
    mc_single_step_kfdr,
    permutation_pvalues,
    preprocess,
    read_expression_matrix,
    run_procedure,
    run_simulation,
)
from oracles import kfdp_expectation_bruteforce, permutation_pvalues_enumerate, tail_rational

DATA = os.path.join(os.path.dirname(__file__), "data")


def passed(num, text):
    print(f"ACCEPTANCE {num:>2} PASS — {text}")


def se_diff(a, b):
    return math.sqrt(a[1] ** 2 + b[1] ** 2)


def test_criterion_01_numerics():
    y = np.linspace(0.0, 1.0, 1000)
    worst = 0.0
    for n in (10, 100, 1000, 5000):
        for k in range(1, 21):
            if k > n:
                continue
            back = g_tilde(k, n, g_tilde_inv(k, n, y))
            worst = max(worst, float(np.max(np.abs(back - y))))
    assert worst <= 1e-10

    worst_rel = 0.0
    for n in (1, 2, 3, 5, 10, 25, 50, 100, 150, 200):
        for k in sorted({1, 2, max(n // 2, 1), n}):
            for u in (1e-8, 1e-3, 0.1, 0.3, 0.5, 0.7, 0.9, 0.999):
                expected = tail_rational(k, n, u)
                if expected == 0.0:
                    continue
                rel = abs(binom_tail(k, n, u) - expected) / expected
                worst_rel = max(worst_rel, rel)
    assert worst_rel <= 1e-12
    passed(1, f"roundtrip error {worst:.2e} <= 1e-10; tail vs summation rel {worst_rel:.2e} <= 1e-12")


def test_criterion_02_reductions():
    rng = np.random.default_rng(20260809)
    n = 100
    for _ in range(1000):
        p = rng.random(n)
        bh = run_procedure(p, ProcedureSpec(family="bh"))
        proc1 = run_procedure(p, ProcedureSpec(family="proc1", k=1))
        skfdr = run_procedure(p, ProcedureSpec(family="sarkar-kfdr", k=1))
        assert proc1.rejected_ids == bh.rejected_ids
        assert skfdr.rejected_ids == bh.rejected_ids

    hochberg = 0.05 / (n - np.arange(1, n + 1) + 1)
    gap_gh = np.max(np.abs(cv_gen_hochberg(n, 1, 0.05).values - hochberg))
    gap_sk = np.max(np.abs(cv_sarkar_kfwer(n, 1, 0.05).values - hochberg))
    assert gap_gh <= 1e-12 and gap_sk <= 1e-12
    passed(2, "k=1 rejection sets equal bh on 1000 draws; k=1 constants equal Hochberg to 1e-12")


MC_CONFIGS = [
    (10, 1, 1.0, 0.0, 0.05),
    (10, 2, 0.8, 2.0, 0.1),
    (10, 3, 0.5, 2.0, 0.3),
    (10, 2, 0.6, 1.0, 0.2),
    (25, 3, 0.9, 2.0, 0.05),
    (25, 2, 0.5, 1.0, 0.2),
    (25, 1, 0.7, 2.0, 0.1),
    (25, 4, 0.8, 2.0, 0.15),
    (50, 5, 0.8, 2.0, 0.05),
    (50, 3, 0.6, 2.0, 0.02),
    (50, 2, 1.0, 0.0, 0.05),
    (50, 4, 0.9, 2.5, 0.08),
    (100, 3, 0.8, 2.0, 0.05),
    (100, 8, 0.95, 2.0, 0.1),
    (100, 1, 0.5, 3.0, 0.01),
    (150, 4, 0.7, 2.0, 0.04),
    (200, 5, 0.9, 2.0, 0.03),
    (350, 6, 0.9, 2.5, 0.05),
    (500, 8, 0.8, 2.0, 0.05),
    (500, 3, 0.95, 2.0, 0.01),
]


def test_criterion_03_single_step_oracle():
    worst_z = 0.0
    for i, (n, k, pi0, mu, t) in enumerate(MC_CONFIGS):
        model = MixtureModel(pi0, NormalShiftAlternative(mu) if pi0 < 1.0 else None)
        exact = exact_kfdr_single_step(n, k, model, t)
        est, se = mc_single_step_kfdr(n, k, model, t, reps=1_000_000, seed=9000 + i)
        assert se > 0.0
        z = abs(est - exact) / se
        worst_z = max(worst_z, z)
        assert z <= 3.0, f"config {(n, k, pi0, mu, t)}: |z| = {z:.2f}"

    enum_cases = [
        (5, 2, 0.8, 2.0, 0.1),
        (8, 3, 0.5, 2.0, 0.2),
        (12, 2, 0.9, 2.0, 0.05),
    ]
    worst_gap = 0.0
    for n, k, pi0, mu, t in enum_cases:
        model = MixtureModel(pi0, NormalShiftAlternative(mu))
        expected = kfdp_expectation_bruteforce(n, k, pi0, float(model.f1_cdf(t)), t)
        worst_gap = max(worst_gap, abs(exact_kfdr_single_step(n, k, model, t) - expected))
    assert worst_gap <= 1e-10
    passed(3, f"20 configs within 3 SE of 1e6-rep MC (worst |z| {worst_z:.2f}); enumeration gap {worst_gap:.1e}")


def test_criterion_04_identities_and_bounds():
    shift = NormalShiftAlternative(2.0)
    points = 0
    worst_fdr = worst_marginal = worst_inv = 0.0
    for n in (1, 2, 3, 5, 8, 13, 21, 34, 55):
        for k in (1, 2, 3, 5, 8):
            if k > n:
                continue
            for pi0 in (0.0, 0.3, 0.7, 1.0):
                model = MixtureModel(pi0, shift if pi0 < 1.0 else None)
                for t in (0.01, 0.2, 0.5, 0.9):
                    points += 1
                    fdr_exp = exact_fdr_single_step(n, model, t, "expectation")
                    fdr_closed = exact_fdr_single_step(n, model, t, "closed")
                    worst_fdr = max(worst_fdr, abs(fdr_exp - fdr_closed))

                    f_t = float(model.cdf(t))
                    pi0t = pi0 * t
                    pmf = [
                        tail_rational(v, n, pi0t) - tail_rational(v + 1, n, pi0t)
                        for v in range(n + 1)
                    ]
                    ratio = sum(v * pmf[v] for v in range(k, n + 1)) / (n * f_t)
                    worst_marginal = max(
                        worst_marginal, abs(marginal_kfdr_quantity(n, k, model, t) - ratio)
                    )

                    lhs, rhs = check_scaled_fdr_bound(n, k, model, t)
                    assert lhs <= rhs + 1e-12

                    dist = joint_vr(n, model, t)
                    inv = 1.0 / np.arange(1.0, dist.n_minus_1 + 2.0)
                    lattice = float(dist.marginal_r() @ inv)
                    worst_inv = max(worst_inv, abs(expected_inv_r_plus1(n, f_t) - lattice))
    assert points >= 500
    assert worst_fdr <= 1e-10
    assert worst_marginal <= 1e-10
    assert worst_inv <= 1e-10
    passed(
        4,
        f"{points} grid points: fdr-form gap {worst_fdr:.1e}, marginal-identity gap "
        f"{worst_marginal:.1e}, bound never violated, inverse-moment gap {worst_inv:.1e}",
    )


def test_criterion_05_estimator_conservative():
    n, k = 100, 3
    shift = NormalShiftAlternative(2.0)
    failures = []
    for i, (pi0, t, lam) in enumerate(product((0.5, 0.8, 1.0), (0.01, 0.05, 0.1), (0.25, 0.5, 0.75))):
        model = MixtureModel(pi0, shift if pi0 < 1.0 else None)
        exact = exact_kfdr_single_step(n, k, model, t)
        est, se = mc_kfdr_hat(n, k, model, t, lam, reps=100_000, seed=5000 + i)
        if est < exact - 2 * se:
            failures.append((pi0, t, lam, est, exact, se))
    assert not failures, failures
    passed(5, "mean point estimate >= exact k-FDR - 2 SE on the 27-point (pi0, t, lam) grid")


def test_criterion_06_error_rate_control():
    worst = []
    for n, n1, k in ((100, 20, 3), (200, 100, 5)):
        procs = (
            ProcedureSpec(family="proc1", k=k),
            ProcedureSpec(family="proc2", k=k, lam=0.25),
            ProcedureSpec(family="proc2", k=k, lam=0.5),
            ProcedureSpec(family="proc2", k=k, lam=0.75),
            ProcedureSpec(family="gen-hochberg", k=k),
            ProcedureSpec(family="sarkar-kfwer", k=k),
        )
        spec = SimulationSpec(
            n=n, n1=n1, k=k, alpha=0.05, procedures=procs, reps=10_000, seed=77_000 + n
        )
        report = run_simulation(spec)
        for st in report.stats:
            if st.procedure in ("gen-hochberg", "sarkar-kfwer"):
                assert st.kfwer <= 0.05 + 3 * st.se_kfwer, (n, st)
                worst.append(st.kfwer)
            else:
                assert st.kfdr <= 0.05 + 3 * st.se_kfdr, (n, st)
                worst.append(st.kfdr)
    passed(6, f"k-FDR/k-FWER controlled at 0.05 in both designs (max estimate {max(worst):.4f})")


def _power_table(n, k, n1, reps, seed, lam=0.5):
    procs = (
        ProcedureSpec(family="proc1", k=k),
        ProcedureSpec(family="gen-hochberg", k=k),
        ProcedureSpec(family="sarkar-kfwer", k=k),
        ProcedureSpec(family="proc2", k=k, lam=lam),
        ProcedureSpec(family="oracle", k=k, n0=n - n1),
    )
    spec = SimulationSpec(n=n, n1=n1, k=k, alpha=0.05, procedures=procs, reps=reps, seed=seed)
    report = run_simulation(spec)
    return {st.procedure: (st.avg_power, st.se_power) for st in report.stats}


def test_criterion_07_power_ordering_vs_kfwer():
    for n1 in (20, 50, 80):
        table = _power_table(100, 3, n1, reps=1000, seed=31_000 + n1)
        proc1 = table["proc1"]
        for rival in ("gen-hochberg", "sarkar-kfwer"):
            other = table[rival]
            margin = proc1[0] - other[0]
            assert margin >= 2 * se_diff(proc1, other), (n1, rival, margin)
    passed(7, "proc1 beats gen-hochberg and sarkar-kfwer by >= 2 SE at n1 in {20, 50, 80}")


def test_criterion_08_power_ordering_vs_oracle():
    tables = {}
    for n1 in (20, 50, 80):
        tables[n1] = _power_table(100, 3, n1, reps=1000, seed=32_000 + n1)
        oracle = tables[n1]["oracle"]
        proc1 = tables[n1]["proc1"]
        assert oracle[0] >= proc1[0] - 2 * se_diff(oracle, proc1), (n1, oracle, proc1)
    proc2 = tables[80]["proc2"]
    proc1 = tables[80]["proc1"]
    assert proc2[0] - proc1[0] >= 2 * se_diff(proc2, proc1)
    passed(8, "oracle >= proc1 - 2 SE at every n1; proc2 beats proc1 by >= 2 SE at n1 = 80")


def test_criterion_09_dependence_report():
    print()
    print("ACCEPTANCE  9 REPORT — simulated k-FDR under equicorrelation "
          "(n=500, n1=250, k=8, alpha=0.05, 1000 reps):")
    header = f"  {'rho':>4} {'proc1':>8} {'proc2':>8} {'oracle':>8} {'bh':>8}"
    print(header)
    for rho in (0.0, 0.1, 0.2, 0.3):
        procs = (
            ProcedureSpec(family="proc1", k=8),
            ProcedureSpec(family="proc2", k=8, lam=0.5),
            ProcedureSpec(family="oracle", k=8, n0=250),
            ProcedureSpec(family="bh", k=1),
        )
        spec = SimulationSpec(
            n=500, n1=250, k=8, alpha=0.05, procedures=procs, reps=1000,
            seed=int(40_000 + 10 * rho), rho=rho,
        )
        report = run_simulation(spec)
        rates = {st.procedure: st.kfdr for st in report.stats}
        for value in rates.values():
            assert 0.0 <= value <= 1.0
        print(
            f"  {rho:>4.1f} {rates['proc1']:>8.4f} {rates['proc2']:>8.4f} "
            f"{rates['oracle']:>8.4f} {rates['bh']:>8.4f}"
        )
    print("ACCEPTANCE  9 REPORTED — inspection only, no ordering asserted")


def test_criterion_10_constant_dominance():
    for n, k in ((500, 8), (1000, 10), (2000, 15), (5000, 20)):
        proc1 = cv_proc1(n, k, 0.05).values
        assert np.all(proc1 >= cv_bh(n, 0.05).values)
        gh = cv_gen_hochberg(n, k, 0.05).values
        assert np.all(proc1[k - 1 :] >= gh[k - 1 :])
    for n in (500, 5000):
        prev = cv_proc1(n, 1, 0.05).values
        for k in range(2, 21):
            cur = cv_proc1(n, k, 0.05).values
            assert np.all(cur >= prev - 1e-14), (n, k)
            prev = cur
    passed(10, "proc1 >= bh everywhere, >= gen-hochberg from index k, and nondecreasing in k")


def test_criterion_11_fixture_pipeline():
    matrix = read_expression_matrix(os.path.join(DATA, "expression_fixture.tsv"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        clean = preprocess(matrix)
        genes = permutation_pvalues(clean, exhaustive=True, mode="pooled")
        _, oracle_p = permutation_pvalues_enumerate(clean.values, 3, "pooled")
    assert [g.p_perm for g in genes] == oracle_p

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = analyze(matrix, k_list=(1, 2), alpha=0.25, lam=0.5, exhaustive=True)
    golden_path = os.path.join(DATA, "expression_fixture_counts.csv")
    with open(golden_path) as handle:
        lines = handle.read().splitlines()
    k_cols = lines[0].split(",")[1:]
    for line in lines[1:]:
        cells = line.split(",")
        for k_str, cell in zip(k_cols, cells[1:]):
            assert result.counts[cells[0]][int(k_str)] == int(cell), (cells[0], k_str)
    passed(11, "synthetic fixture matches the enumeration oracle and the checked-in golden counts")


# Published rejection counts for the 3170-gene matrix at alpha=0.05, lam=0.9.
REFERENCE_COUNTS = {
    "proc1": {1: 74, 3: 75, 5: 81, 8: 103, 10: 124, 15: 157, 20: 173, 30: 229},
    "proc2": {1: 129, 3: 129, 5: 129, 8: 135, 10: 137, 15: 162, 20: 176, 30: 229},
    "sarkar-kfdr": {1: 74, 3: 33, 5: 50, 8: 73, 10: 76, 15: 94, 20: 114, 30: 145},
    "sarkar-kfwer": {1: 2, 3: 19, 5: 33, 8: 56, 10: 73, 15: 87, 20: 107, 30: 138},
    "gen-hochberg": {1: 2, 3: 5, 5: 8, 8: 11, 10: 17, 15: 21, 20: 24, 30: 33},
}


@pytest.mark.skipif(
    "KFDR_HEDENFALK" not in os.environ,
    reason="set KFDR_HEDENFALK to the expression matrix path to run the real-data check",
)
def test_criterion_11_real_data():
    matrix = read_expression_matrix(os.environ["KFDR_HEDENFALK"])
    assert matrix.n_genes == 3226
    clean = preprocess(matrix)
    assert clean.n_genes == 3170
    result = analyze(
        matrix,
        k_list=(1, 3, 5, 8, 10, 15, 20, 30),
        alpha=0.05,
        lam=0.9,
        B=1000,
        seed=int(os.environ.get("KFDR_HEDENFALK_SEED", "1")),
    )
    for proc, row in REFERENCE_COUNTS.items():
        for k, published in row.items():
            got = result.counts[proc][k]
            assert abs(got - published) <= max(0.15 * published, 3), (proc, k, got, published)
    counts = result.counts
    assert counts["proc2"][1] >= counts["proc1"][1] >= counts["sarkar-kfdr"][1] >= counts["gen-hochberg"][1]
    for proc in ("proc1", "proc2"):
        ordered = [counts[proc][k] for k in (1, 3, 5, 8, 10, 15, 20, 30)]
        assert ordered == sorted(ordered)
    passed(11, "real-data counts within 15% of the published table with orderings preserved")
