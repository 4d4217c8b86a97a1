"""Command-line front end: ``opframe gen | bounds | verify | check | douglas``.

Results go to stdout as JSON, diagnostics to stderr. Exit codes are shared by
all commands: 0 pass, 1 mathematical failure, 2 usage or parse error,
3 hypothesis or Hermiticity violation.
"""
import argparse
import os
import sys

from . import theorems
from .algebra import DEFAULT_RANK_TOL, DEFAULT_TOL
from .douglas import equivalence_report
from .errors import (
    Inconclusive,
    InfeasibleSpec,
    NonCommutingControllers,
    NonHermitianMiddle,
    NotPositive,
    OpFrameError,
    ParseError,
)
from .frames import lift_from_controlled_k_frame, middle_operator, optimal_bounds, verify_bounds
from .lab import MODES, GenSpec, VectorFrameInstance, format_table, generate, run_suite
from .serialize import dumps, encode_system, encode_value, loads_operator, loads_system

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_HYPOTHESIS = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _emit(doc):
    sys.stdout.write(dumps(encode_value(doc)) + "\n")


def _say(msg):
    print(f"opframe: {msg}", file=sys.stderr)


def _read(path):
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc


def _load_system(path):
    return loads_system(_read(path))


def default_seed():
    raw = os.environ.get("OPFRAME_SEED")
    if raw is None:
        return 0
    try:
        return int(raw, 0)
    except ValueError:
        raise UsageError(f"OPFRAME_SEED must be an integer, got {raw!r}") from None


def cmd_gen(args):
    spec = GenSpec(
        n=args.n, d=args.d, m=args.m, mode=args.mode, seed=args.seed, eps=args.eps,
        lam=args.lam, rank=args.rank, k_kind=args.k,
    )
    inst = generate(spec)
    if isinstance(inst, VectorFrameInstance):
        lifted = lift_from_controlled_k_frame(inst.vectors, inst.C, inst.K)
        doc = encode_system(lifted, inst.vectors)
    else:
        doc = encode_system(inst)
    sys.stdout.write(dumps(doc) + "\n")
    return EXIT_PASS


def cmd_bounds(args):
    system, _ = _load_system(args.file)
    b = optimal_bounds(system, args.rank_tol, args.tol, args.symmetrize)
    _emit({"A_opt": b.lower, "B_opt": b.upper, "hermitian_defect": middle_operator(system).hermitian_defect})
    return EXIT_PASS


def cmd_verify(args):
    if args.A is None and args.B is None:
        raise UsageError("verify needs --A, --B or both")
    system, _ = _load_system(args.file)
    verdict = verify_bounds(system, args.A, args.B, args.tol, args.symmetrize)
    _emit({"A": args.A, "B": args.B, "lower": verdict.lower, "upper": verdict.upper, "ok": verdict.ok})
    return EXIT_PASS if verdict.ok else EXIT_FAIL


def _single_check(theorem_id, system, args):
    tol = args.tol
    if theorem_id in ("compose_Q", "perturbation"):
        if args.q is None:
            raise UsageError(f"{theorem_id} on a file instance needs --q OPERATOR_FILE")
        Q = loads_operator(_read(args.q), "Q")
        fn = theorems.thm_compose_Q if theorem_id == "compose_Q" else theorems.thm_perturbation
        return fn(system, Q, tol)
    if theorem_id == "opframe_is_kframe":
        return theorems.prop_opframe_is_kframe(system, tol)
    if theorem_id == "surjective_upgrade":
        return theorems.prop_surjective_upgrade(system, tol)
    if theorem_id == "commuting_upgrade":
        return theorems.prop_commuting_upgrade(system.family, system.K, system.C, system.Cp, tol)
    if theorem_id == "frame_iff_S_iff_factor":
        return theorems.thm_frame_iff_S_iff_factor(system, tol)
    if theorem_id == "tight_iff":
        A1, _ = theorems.tight_constant(system)
        A2 = optimal_bounds(system, tol=tol).upper
        return theorems.thm_tight_iff(system, A1, A2, tol)
    return theorems.cor_power_shift(system, args.power, tol)


def cmd_check(args):
    ids = theorems.THEOREM_IDS if args.theorem == "all" else (args.theorem,)
    if args.theorem != "all" and args.theorem not in theorems.THEOREM_IDS:
        raise UsageError(f"unknown theorem {args.theorem!r}; known: all, {', '.join(theorems.THEOREM_IDS)}")
    if args.file is not None:
        system, _ = _load_system(args.file)
        results, status = [], EXIT_PASS
        for tid in ids:
            if args.theorem == "all" and tid in ("compose_Q", "perturbation") and args.q is None:
                results.append({"theorem_id": tid, "skipped": "needs --q"})
                continue
            try:
                verdict = _single_check(tid, system, args)
            except Inconclusive as exc:
                results.append({"theorem_id": tid, "inconclusive": str(exc)})
                status = max(status, EXIT_FAIL)
                continue
            results.append(verdict.to_dict())
            if not verdict.hypothesis_ok:
                status = max(status, EXIT_HYPOTHESIS)
            elif not verdict.conclusion_ok:
                status = max(status, EXIT_FAIL)
        _emit({"results": results, "ok": status == EXIT_PASS})
        return status
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    summary = run_suite(ids, args.trials, args.seed, args.tol, args.n, args.d, args.m, args.mode)
    print(format_table(summary), file=sys.stderr)
    _emit(summary)
    return EXIT_PASS if summary["ok"] else EXIT_FAIL


def cmd_douglas(args):
    Tp = loads_operator(_read(args.tprime), "Tprime")
    T = loads_operator(_read(args.t), "T")
    rep = equivalence_report(Tp, T, args.tol, args.rank_tol)
    _emit({
        "majorization_lambda": rep.majorization_lambda,
        "mu": rep.mu,
        "solution_D": None if rep.solution_D is None else rep.solution_D.rep,
        "range_included": rep.range_included,
        "consistent": rep.consistent,
        "residual": rep.residual,
        "range_residual": rep.range_residual,
    })
    return EXIT_PASS if rep.consistent else EXIT_FAIL


def build_parser():
    p = _Parser(prog="opframe", description="Controlled K-operator frames on Hilbert C*-modules over M_n(C).")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def tolerances(sp):
        sp.add_argument("--tol", type=float, default=DEFAULT_TOL, help="relative Loewner/Hermiticity tolerance")
        sp.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL, help="relative numerical-rank cutoff")

    g = sub.add_parser("gen", help="generate a seeded instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--mode", choices=MODES, default="general")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--eps", type=float, default=0.1)
    g.add_argument("--lam", type=float, default=1.0, help="tight constant for --mode tight")
    g.add_argument("--rank", type=int, default=None, help="rank of K for --mode rank_deficient_K")
    g.add_argument("--k", choices=("random", "identity", "unitary"), default="random")
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("bounds", help="optimal frame bounds of an instance")
    b.add_argument("file")
    tolerances(b)
    b.add_argument("--symmetrize", action="store_true", help="use the Hermitian part of a non-Hermitian middle")
    b.set_defaults(func=cmd_bounds)

    v = sub.add_parser("verify", help="certify given frame bounds")
    v.add_argument("file")
    v.add_argument("--A", type=float, default=None)
    v.add_argument("--B", type=float, default=None)
    tolerances(v)
    v.add_argument("--symmetrize", action="store_true")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("check", help="run theorem checkers")
    c.add_argument("--theorem", required=True, help="theorem id or 'all'")
    c.add_argument("--file", default=None, help="check one instance file instead of a random suite")
    c.add_argument("--q", default=None, help="operator file for Q (compose_Q, perturbation with --file)")
    c.add_argument("--power", type=int, default=1, help="n for power_shift with --file")
    c.add_argument("--trials", type=int, default=10)
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--n", type=int, default=None)
    c.add_argument("--d", type=int, default=None)
    c.add_argument("--m", type=int, default=None)
    c.add_argument("--mode", choices=MODES[:-1], default=None, help="force one generator mode")
    tolerances(c)
    c.set_defaults(func=cmd_check)

    dg = sub.add_parser("douglas", help="Douglas equivalence report for T' against T")
    dg.add_argument("tprime", help="operator file for T'")
    dg.add_argument("t", help="operator file for T")
    tolerances(dg)
    dg.set_defaults(func=cmd_douglas)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "seed", "absent") is None:
            args.seed = default_seed()
        return args.func(args)
    except UsageError as exc:
        _say(str(exc))
        return EXIT_USAGE
    except (ParseError, InfeasibleSpec) as exc:
        _say(str(exc))
        return EXIT_USAGE
    except (NonHermitianMiddle, NotPositive, NonCommutingControllers) as exc:
        _say(str(exc))
        _emit({"error": type(exc).__name__, "detail": str(exc), "defect": getattr(exc, "defect", None)})
        return EXIT_HYPOTHESIS
    except OpFrameError as exc:
        _say(f"{type(exc).__name__}: {exc}")
        return EXIT_FAIL


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
