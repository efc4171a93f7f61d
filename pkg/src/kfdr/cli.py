"""Command-line front end.

Subcommands: adjust (run one procedure on a p-value file), constants
(critical-value tables), mixture (exact error-rate sweeps), simulate
(Monte Carlo studies from a JSON spec), analyze (the expression pipeline).
Single results print as JSON, sweeps as CSV. Exit codes: 0 success, 2
input or usage error, 1 internal failure. Output files are written to a
temp file and renamed, so a failing run never leaves partial output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from itertools import product

import numpy as np

from .critvals import FAMILIES, PROC2_VARIANTS, ProcedureSpec, critical_values
from .mixture import (
    MixtureModel,
    NormalShiftAlternative,
    TableAlternative,
    check_scaled_fdr_bound,
    exact_fdr_single_step,
)
from .binomtail import binom_tail
from .pipeline import analyze, read_expression_matrix
from .simulate import REPORT_FIELDS, SimulationSpec, sweep
from .stepup import PValueSet, run_procedure

__all__ = ["main", "entrypoint"]

MIXTURE_FIELDS = ("n", "k", "pi0", "t", "kfdr_exact", "fdr_exp", "fdr_closed", "bound_rhs", "kfwer")


class InputError(Exception):
    """Bad user input: maps to exit code 2."""


def _write_output(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".kfdr-")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(fieldnames, rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(fieldnames), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _read_pvalue_file(path: str, column: str | None):
    """Parse p-values; bare one-per-line, or CSV with a named/indexed column."""
    try:
        with open(path, newline="") as handle:
            lines = handle.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    values: list[float] = []
    ids: list = []
    if column is None:
        for lineno, line in enumerate(lines, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                value = float(text)
            except ValueError:
                raise InputError(f"{path}, line {lineno}: not a number: {text!r}") from None
            if not 0.0 <= value <= 1.0:  # also catches NaN
                raise InputError(f"{path}, line {lineno}: p-value {text!r} outside [0, 1]")
            values.append(value)
            ids.append(lineno)
    else:
        reader = csv.reader(io.StringIO("\n".join(lines)))
        rows = list(reader)
        if not rows:
            raise InputError(f"{path}: empty file")
        header = [cell.strip() for cell in rows[0]]
        if column in header:
            col = header.index(column)
            data_rows = rows[1:]
            offset = 2
        else:
            try:
                col = int(column)
            except ValueError:
                raise InputError(f"{path}: no column named {column!r}") from None
            data_rows = rows[1:] if any(not _is_float(c) for c in rows[0]) else rows
            offset = 1 + (len(rows) - len(data_rows))
        for lineno, row in enumerate(data_rows, start=offset):
            if not row or not any(cell.strip() for cell in row):
                continue
            if col >= len(row):
                raise InputError(f"{path}, line {lineno}: missing column {column!r}")
            text = row[col].strip()
            try:
                value = float(text)
            except ValueError:
                raise InputError(f"{path}, line {lineno}: not a number: {text!r}") from None
            if not 0.0 <= value <= 1.0:  # also catches NaN
                raise InputError(f"{path}, line {lineno}: p-value {text!r} outside [0, 1]")
            values.append(value)
            ids.append(lineno)
    if not values:
        raise InputError(f"{path}: no p-values found")
    return values, ids


def _is_float(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def _procedure_spec(args, n: int) -> ProcedureSpec:
    method = args.method
    if method == "bh":  # alias: identical constants, identical output
        if args.k != 1:
            raise InputError("--method bh takes --k 1; use proc1 for larger orders")
        method = "proc1"
    kwargs = {"family": method, "k": args.k, "alpha": args.alpha}
    if args.method == "proc2":
        if args.lam is None:
            raise InputError("--method proc2 requires --lambda")
        kwargs["lam"] = args.lam
        kwargs["variant"] = args.variant
    if args.method == "oracle":
        if args.n0 is None:
            raise InputError("--method oracle requires --n0")
        kwargs["n0"] = args.n0
    try:
        return ProcedureSpec(**kwargs)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _cmd_adjust(args) -> int:
    values, ids = _read_pvalue_file(args.pvalue_file, args.column)
    spec = _procedure_spec(args, len(values))
    try:
        result = run_procedure(PValueSet(values, ids=ids), spec)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    payload = {
        "method": spec.label(),
        "k": spec.k,
        "alpha": spec.alpha,
        "lambda": spec.lam,
        "l_hat": result.l_hat,
        "threshold": result.threshold,
        "rejected_ids": list(result.rejected_ids),
    }
    if result.stage1_j is not None:
        payload["stage1_j"] = result.stage1_j
    if spec.family == "oracle":
        payload["n0"] = spec.n0
    if args.format == "json":
        _write_output(json.dumps(payload, indent=2) + "\n", args.output)
    else:
        rejected = set(result.rejected_ids)
        rows = [
            {"id": i, "p": v, "rejected": int(i in rejected)}
            for i, v in zip(ids, values)
        ]
        _write_output(_csv_text(("id", "p", "rejected"), rows), args.output)
    return 0


def _cmd_constants(args) -> int:
    if args.n < 1:
        raise InputError(f"--n must be >= 1, got {args.n}")
    families = [f.strip() for f in args.families.split(",") if f.strip()]
    if not families:
        raise InputError("--families must name at least one family")
    columns = {}
    for family in families:
        if family not in FAMILIES or family == "proc2":
            raise InputError(f"unknown constant family {family!r}")
        kwargs = {"family": family, "k": 1 if family == "bh" else args.k, "alpha": args.alpha}
        if family == "oracle":
            if args.n0 is None:
                raise InputError("family oracle requires --n0")
            kwargs["n0"] = args.n0
        try:
            columns[family] = critical_values(ProcedureSpec(**kwargs), args.n).values
        except ValueError as exc:
            raise InputError(str(exc)) from None
    rows = []
    for i in range(args.n):
        row = {"i": i + 1}
        for family in families:
            row[family] = repr(float(columns[family][i]))
        rows.append(row)
    _write_output(_csv_text(["i", *families], rows), args.output)
    return 0


def _parse_list(text: str, cast, flag: str):
    try:
        items = [cast(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InputError(f"{flag}: could not parse {text!r}") from None
    if not items:
        raise InputError(f"{flag}: empty list")
    return items


def _cmd_mixture(args) -> int:
    ns = _parse_list(args.n, int, "--n")
    ks = _parse_list(args.k, int, "--k")
    pi0s = _parse_list(args.pi0, float, "--pi0")
    ts = _parse_list(args.t, float, "--t")
    if args.f1_table is not None:
        table = np.loadtxt(args.f1_table, delimiter=",")
        f1 = TableAlternative(table[:, 0], table[:, 1])
    else:
        f1 = NormalShiftAlternative(args.mu)
    rows = []
    try:
        for n, k, pi0, t in product(ns, ks, pi0s, ts):
            model = MixtureModel(pi0=pi0, f1=f1)
            lhs, rhs = check_scaled_fdr_bound(n, k, model, t)
            rows.append(
                {
                    "n": n,
                    "k": k,
                    "pi0": pi0,
                    "t": t,
                    "kfdr_exact": repr(lhs),
                    "fdr_exp": repr(exact_fdr_single_step(n, model, t, "expectation")),
                    "fdr_closed": repr(exact_fdr_single_step(n, model, t, "closed")),
                    "bound_rhs": repr(rhs),
                    "kfwer": repr(binom_tail(k, n, pi0 * t)),
                }
            )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _write_output(_csv_text(MIXTURE_FIELDS, rows), args.output)
    return 0


def _spec_from_json(obj: dict, seed: int) -> SimulationSpec:
    if not isinstance(obj, dict):
        raise InputError("each simulation spec must be a JSON object")
    known = {"n", "n1", "k", "alpha", "mu", "rho", "reps", "seed", "procedures"}
    unknown = set(obj) - known
    if unknown:
        raise InputError(f"unknown simulation spec keys: {sorted(unknown)}")
    try:
        procedures = []
        for proc in obj.get("procedures", []):
            proc = dict(proc)
            proc_unknown = set(proc) - {"family", "k", "alpha", "lambda", "n0", "variant"}
            if proc_unknown:
                raise InputError(f"unknown procedure keys: {sorted(proc_unknown)}")
            procedures.append(
                ProcedureSpec(
                    family=proc["family"],
                    k=proc.get("k", obj.get("k", 1)),
                    alpha=proc.get("alpha", obj.get("alpha", 0.05)),
                    lam=proc.get("lambda"),
                    n0=proc.get("n0"),
                    variant=proc.get("variant", "conservative"),
                )
            )
        return SimulationSpec(
            n=obj["n"],
            n1=obj["n1"],
            k=obj.get("k", 1),
            alpha=obj.get("alpha", 0.05),
            procedures=tuple(procedures),
            reps=obj.get("reps", 1000),
            seed=seed,
            mu=obj.get("mu", 2.0),
            rho=obj.get("rho", 0.0),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad simulation spec: {exc}") from None


def _cmd_simulate(args) -> int:
    try:
        with open(args.spec_file) as handle:
            payload = json.load(handle)
    except OSError as exc:
        raise InputError(f"cannot read {args.spec_file}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.spec_file}: invalid JSON: {exc}") from None
    specs_json = payload if isinstance(payload, list) else [payload]
    specs = [_spec_from_json(obj, args.seed) for obj in specs_json]
    rows = sweep(specs)
    for row in rows:
        for key, value in row.items():
            if isinstance(value, float):
                row[key] = repr(value)
    _write_output(_csv_text(REPORT_FIELDS, rows), args.output)
    return 0


def _parse_group_map(text: str | None):
    if text is None:
        return None
    mapping = {}
    for part in text.split(","):
        if not part.strip():
            continue
        if "=" not in part:
            raise InputError(f"--groups entries look like LABEL=A, got {part!r}")
        raw, target = part.split("=", 1)
        target = target.strip()
        if target not in ("A", "B", "excluded"):
            raise InputError(f"--groups target must be A, B or excluded, got {target!r}")
        mapping[raw.strip()] = target
    if not mapping:
        raise InputError("--groups produced an empty mapping")
    return mapping


def _cmd_analyze(args) -> int:
    if not args.exhaustive and args.seed is None:
        raise InputError("--seed is required unless --exhaustive is given")
    k_list = _parse_list(args.k, int, "--k")
    procedures = [p.strip() for p in args.procedures.split(",") if p.strip()]
    try:
        matrix = read_expression_matrix(
            args.matrix_file, group_map=_parse_group_map(args.groups)
        )
        result = analyze(
            matrix,
            k_list=k_list,
            alpha=args.alpha,
            lam=args.lam,
            procedures=procedures,
            ratio_cap=args.ratio_cap,
            B=args.B,
            seed=0 if args.seed is None else args.seed,
            mode=args.mode,
            exhaustive=args.exhaustive,
        )
    except (ValueError, OSError) as exc:
        raise InputError(str(exc)) from None
    fields = ["procedure", *[str(k) for k in k_list]]
    _write_output(_csv_text(fields, result.count_rows()), args.output)
    if args.per_gene is not None:
        payload = []
        for index, gene in enumerate(result.genes):
            flags = {
                proc: {str(k): index in result.rejected[proc][k] for k in k_list}
                for proc in result.procedures
            }
            payload.append(
                {"id": gene.gene_id, "t": gene.t_stat, "p": gene.p_perm, "rejected": flags}
            )
        _write_output(json.dumps(payload, indent=2) + "\n", args.per_gene)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kfdr",
        description="Generalized false discovery rate (k-FDR) multiple-testing toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_spec_flags(p):
        p.add_argument("--method", default="proc1", choices=[f for f in FAMILIES])
        p.add_argument("--k", type=int, default=1)
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--lambda", dest="lam", type=float, default=None)
        p.add_argument("--n0", type=int, default=None)
        p.add_argument("--variant", default="conservative", choices=list(PROC2_VARIANTS))

    p_adjust = sub.add_parser("adjust", help="run one procedure on a p-value file")
    p_adjust.add_argument("pvalue_file")
    add_spec_flags(p_adjust)
    p_adjust.add_argument("--column", default=None, help="CSV column name or index")
    p_adjust.add_argument("--format", default="json", choices=["json", "csv"])
    p_adjust.add_argument("--output", default=None)
    p_adjust.set_defaults(func=_cmd_adjust)

    p_const = sub.add_parser("constants", help="emit critical-value tables as CSV")
    p_const.add_argument("--n", type=int, required=True)
    p_const.add_argument("--k", type=int, default=1)
    p_const.add_argument("--alpha", type=float, default=0.05)
    p_const.add_argument("--n0", type=int, default=None)
    p_const.add_argument(
        "--families",
        default="proc1,gen-hochberg,sarkar-kfwer",
        help="comma-separated family names",
    )
    p_const.add_argument("--output", default=None)
    p_const.set_defaults(func=_cmd_constants)

    p_mix = sub.add_parser("mixture", help="exact single-step error rates over a grid")
    p_mix.add_argument("--n", required=True, help="comma-separated counts")
    p_mix.add_argument("--k", required=True, help="comma-separated orders")
    p_mix.add_argument("--pi0", required=True, help="comma-separated null proportions")
    p_mix.add_argument("--t", required=True, help="comma-separated thresholds")
    p_mix.add_argument("--mu", type=float, default=2.0)
    p_mix.add_argument("--f1-table", default=None, help="CSV of (u, F1(u)) points")
    p_mix.add_argument("--output", default=None)
    p_mix.set_defaults(func=_cmd_mixture)

    p_sim = sub.add_parser("simulate", help="Monte Carlo study from a JSON spec file")
    p_sim.add_argument("spec_file")
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--output", default=None)
    p_sim.set_defaults(func=_cmd_simulate)

    p_an = sub.add_parser("analyze", help="expression-matrix pipeline")
    p_an.add_argument("matrix_file")
    p_an.add_argument("--groups", default=None, help="raw-label mapping, e.g. BRCA1=A,BRCA2=B")
    p_an.add_argument("--B", type=int, default=1000)
    p_an.add_argument("--seed", type=int, default=None)
    p_an.add_argument("--mode", default="pooled", choices=["pooled", "per-gene"])
    p_an.add_argument("--exhaustive", action="store_true", help="enumerate all relabelings")
    p_an.add_argument("--ratio-cap", type=float, default=20.0)
    p_an.add_argument("--alpha", type=float, default=0.05)
    p_an.add_argument("--lambda", dest="lam", type=float, default=0.9)
    p_an.add_argument("--k", default="1,3,5,8,10,15,20,30", help="comma-separated k values")
    p_an.add_argument(
        "--procedures",
        default="proc1,proc2,sarkar-kfdr,sarkar-kfwer,gen-hochberg",
    )
    p_an.add_argument("--per-gene", default=None, help="also write per-gene JSON here")
    p_an.add_argument("--output", default=None)
    p_an.set_defaults(func=_cmd_analyze)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 1
    except Exception as exc:  # internal failure
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
