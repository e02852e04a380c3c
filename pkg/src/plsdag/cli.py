"""Command-line front end.

Exit codes: 0 success, 2 invalid arguments or inputs, 1 computational error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import jsonio
from .ci import all_permutations, union_ci_over_permutations
from .diagnostics import condition_report
from .equivalence import class_summary, dag_to_json, min_trace_permutation
from .linalg import Permutation, read_matrix_csv
from .penalties import FAMILIES, PenaltySpec
from .search import exhaustive_global, global_minimizer_dp, restricted_minimizer
from .sim import SimConfig, run_experiment


class ValidationError(Exception):
    pass


def _shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None, help="output path (stdout when omitted)")


def _penalty_flags(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--penalty", choices=FAMILIES, default="mcp")
    p.add_argument("--lambda", dest="lam", type=float, required=required)
    p.add_argument("--gamma", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plsdag", description="Penalized least squares DAG estimation")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a DAG to a data matrix")
    p.add_argument("--data", required=True)
    _penalty_flags(p, required=True)
    p.add_argument("--mode", choices=("dp", "restricted", "exhaustive"), default="dp")
    p.add_argument("--permutation", default=None, help="comma-separated ordering for --mode restricted")
    p.add_argument("--solver", choices=("exact", "cd"), default="exact")
    _shared(p)

    p = sub.add_parser("enumerate-class", help="list the distinct DAGs in the equivalence class")
    p.add_argument("--sigma", required=True)
    p.add_argument("--samples", type=int, default=None, help="sampled orderings when p exceeds the cap")
    _shared(p)

    p = sub.add_parser("mintrace", help="minimum-trace ordering of a covariance")
    p.add_argument("--sigma", required=True)
    p.add_argument("--samples", type=int, default=None)
    _shared(p)

    p = sub.add_parser("ci-scan", help="union of DAG-implied CI relations over orderings")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--sigma")
    src.add_argument("--data")
    p.add_argument("--permutations", default="all", help="'all' or orderings separated by ';'")
    _penalty_flags(p, required=False)
    p.add_argument("--solver", choices=("exact", "cd"), default="exact")
    _shared(p)

    p = sub.add_parser("simulate", help="run a Monte Carlo experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--csv", default=None, help="per-replicate CSV output")
    _shared(p)

    p = sub.add_parser("diagnose", help="condition ratios for a covariance")
    p.add_argument("--sigma", required=True)
    _penalty_flags(p, required=True)
    p.add_argument("--n", type=int, required=True)
    _shared(p)
    return ap


def _matrix(path: str, flag: str) -> np.ndarray:
    if not Path(path).is_file():
        raise ValidationError(f"{flag}: no such file {path!r}")
    try:
        data, _ = read_matrix_csv(path)
    except ValueError as e:
        raise ValidationError(f"{flag}: {e}") from None
    if data.ndim != 2 or data.size == 0:
        raise ValidationError(f"{flag}: expected a nonempty matrix")
    return data


def _square(path: str, flag: str) -> np.ndarray:
    S = _matrix(path, flag)
    if S.shape[0] != S.shape[1]:
        raise ValidationError(f"{flag}: matrix must be square, got {S.shape}")
    return S


def _penalty(args) -> PenaltySpec:
    if args.lam is None:
        raise ValidationError("--lambda is required")
    try:
        return PenaltySpec(args.penalty, args.lam, args.gamma)
    except ValueError as e:
        raise ValidationError(f"--lambda/--gamma: {e}") from None


def _permutation(text: str, p: int, flag: str) -> Permutation:
    try:
        pi = Permutation(tuple(int(k) for k in text.split(",")))
    except ValueError as e:
        raise ValidationError(f"{flag}: {e}") from None
    if pi.p != p:
        raise ValidationError(f"{flag}: ordering has {pi.p} entries, expected {p}")
    return pi


def cmd_fit(args):
    X = _matrix(args.data, "--data")
    pen = _penalty(args)
    if args.mode == "restricted":
        if args.permutation is None:
            raise ValidationError("--permutation is required with --mode restricted")
        pi = _permutation(args.permutation, X.shape[1], "--permutation")
        res = restricted_minimizer(X, pi, pen, args.solver, seed=args.seed)
    elif args.mode == "exhaustive":
        res = exhaustive_global(X, pen, seed=args.seed)
    else:
        res = global_minimizer_dp(X, pen, seed=args.seed)
    return res.to_json()


def cmd_enumerate(args):
    S = _square(args.sigma, "--sigma")
    summ = class_summary(S, n_samples=args.samples, seed=args.seed)
    return {
        "p": S.shape[0],
        "n_members": len(summ.members),
        "d_sigma": summ.d_sigma,
        "betamin_sigma": summ.betamin_sigma,
        "sigma_max_sq": summ.sigma_max_sq,
        "sampled": summ.sampled,
        "permutations_examined": summ.permutations_examined,
        "members": [{**dag_to_json(m.B, m.omega, m.permutation), "count": m.count} for m in summ.members],
    }


def cmd_mintrace(args):
    S = _square(args.sigma, "--sigma")
    res = min_trace_permutation(S, n_samples=args.samples, seed=args.seed)
    return {
        "permutation": list(res.permutation.mapping),
        "trace": res.trace,
        "unique": res.unique,
        "n_optimal_dags": res.n_optimal_dags,
        "sampled": res.sampled,
        "dag": dag_to_json(res.B, res.omega, res.permutation),
    }


def cmd_ci_scan(args):
    if args.sigma is not None:
        source, mode, pen = _square(args.sigma, "--sigma"), "population", None
    else:
        source, mode = _matrix(args.data, "--data"), "sample"
        pen = _penalty(args)
    p = source.shape[1]
    if args.permutations == "all":
        perms = list(all_permutations(p))
    else:
        perms = [_permutation(t, p, "--permutations") for t in args.permutations.split(";") if t.strip()]
    rel = union_ci_over_permutations(source, perms, pen, mode, args.solver, seed=args.seed)
    rows = sorted(rel, key=lambda r: (r.i, r.j, len(r.cond), sorted(r.cond)))
    return [r.to_json() for r in rows]


def cmd_simulate(args):
    if not Path(args.config).is_file():
        raise ValidationError(f"--config: no such file {args.config!r}")
    try:
        cfg = SimConfig.from_json(args.config)
    except (ValueError, TypeError, KeyError) as e:
        raise ValidationError(f"--config: {e}") from None
    report = run_experiment(cfg, args.threads)
    if args.csv:
        report.write_csv(args.csv)
    return report.to_json()


def cmd_diagnose(args):
    S = _square(args.sigma, "--sigma")
    if args.n < 1:
        raise ValidationError("--n must be positive")
    return condition_report(S, _penalty(args), args.n, seed=args.seed).to_json()


COMMANDS = {
    "fit": cmd_fit,
    "enumerate-class": cmd_enumerate,
    "mintrace": cmd_mintrace,
    "ci-scan": cmd_ci_scan,
    "simulate": cmd_simulate,
    "diagnose": cmd_diagnose,
}


def _emit(command: str, result, out) -> None:
    if command == "ci-scan":
        text = "".join(jsonio.dumps(r, indent=None) + "\n" for r in result)
    else:
        text = jsonio.dumps(result) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        result = COMMANDS[args.command](args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    _emit(args.command, result, args.out)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
