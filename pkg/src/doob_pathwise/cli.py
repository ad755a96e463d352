"""Command-line front end.

Exit codes: 0 all checks hold, 1 an inequality violation was found,
2 usage error, 3 input validation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
from typing import Iterable, Optional

import numpy as np

from . import derivation, montecarlo, path_core, pathwise_ineq, prob_tree
from .errors import DomainError, DoobPathwiseError
from .pathwise_ineq import REL_TOL, Which

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 3
TOL_ENV = "DOOB_PATHWISE_TOL"

GRIDS = {
    # name: (n, entries, levels)
    "small": (4, (-2, -1, 0, 1, 2), tuple(x / 2 for x in range(-5, 6))),
    "large": (6, (-2, -1, 0, 1, 2), tuple(x / 2 for x in range(-5, 6))),
}

FUZZ_KINDS = (
    {"kind": "SymmetricWalk", "x0": 0.0},
    {"kind": "DriftWalk", "x0": 0.0, "param": -0.2},
    {"kind": "DriftWalk", "x0": 0.0, "param": 0.2},
    {"kind": "MultiplicativePositive", "x0": 1.0, "step_scale": 0.2},
    {"kind": "AbsWalk", "x0": 0.0},
)


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "(" + ",".join(_fmt(x) for x in v) + ")"
    return str(v)


class Emitter:
    """Writes records as JSON lines, CSV rows, or text lines."""

    def __init__(self, fmt: str, out):
        self.fmt = fmt
        self.out = out
        self._header: Optional[list] = None

    def emit(self, rec: dict) -> None:
        if self.fmt == "json":
            self.out.write(json.dumps(rec) + "\n")
        elif self.fmt == "csv":
            flat = {k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in rec.items()}
            keys = list(flat)
            w = csv.writer(self.out, lineterminator="\n")
            if keys != self._header:
                w.writerow(keys)
                self._header = keys
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v)
                        for v in flat.values()])
        else:
            parts = [rec.get("eq", "")]
            parts += [f"{k}={_fmt(v)}" for k, v in rec.items() if k != "eq" and v is not None]
            self.out.write(" ".join(parts) + "\n")

    def text(self, line: str) -> None:
        if self.fmt == "text":
            self.out.write(line + "\n")


def resolve_tol(arg: Optional[float]) -> float:
    tol = arg
    if tol is None:
        env = os.environ.get(TOL_ENV)
        if env:
            try:
                tol = float(env)
            except ValueError:
                raise UsageError(f"{TOL_ENV}={env!r} is not a number") from None
    if tol is None:
        tol = REL_TOL
    if not (tol > 0 and math.isfinite(tol)):
        raise UsageError("tolerance must be a positive finite number")
    return tol


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"{args.command} requires --{name.replace('_', '-')}")


def _ineq_record(rep: pathwise_ineq.IneqReport, tol: float) -> dict:
    d = rep.to_dict()
    d["holds"] = rep.holds(tol)
    return d


# -- commands ----------------------------------------------------------------


def cmd_check(args, em: Emitter, tol: float) -> int:
    _need(args, "path")
    path = path_core.read_path_file(args.path)
    ok = True
    reports = []
    if args.lam is not None:
        reports += [pathwise_ineq.eval_ineq1(path, args.lam), pathwise_ineq.eval_ineq2(path, args.lam)]
    if args.p is not None:
        if not isinstance(path, path_core.NonnegPath):
            raise DomainError("eq5 needs a nonnegative path")
        reports.append(pathwise_ineq.eval_lp(path, args.p))
    if isinstance(path, path_core.PositiveStartPath):
        reports += list(pathwise_ineq.eval_llogl(path))
    if not reports:
        raise UsageError("check needs --lambda and/or --p (or a positive-start path)")
    for rep in reports:
        em.emit(_ineq_record(rep, tol))
        ok &= rep.holds(tol)
    if args.lam is not None:
        for which in Which:
            em.emit(pathwise_ineq.hedge_decompose(path, args.lam, which).to_dict())
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_sweep(args, em: Emitter, tol: float) -> int:
    _need(args, "path")
    path = path_core.read_path_file(args.path)
    if args.points < 2:
        raise UsageError("--points must be >= 2")
    lo, hi = min(path) - 1.0, max(path) + 1.0
    ok = True
    for lam in np.linspace(lo, hi, args.points):
        lam = float(lam)
        r1 = pathwise_ineq.eval_ineq1(path, lam)
        r2 = pathwise_ineq.eval_ineq2(path, lam)
        ok &= r1.holds(tol) and r2.holds(tol)
        case = r1.case.value + (f"({r1.crossing_index})" if r1.crossing_index is not None else "")
        em.emit({"eq": "eq1+eq2", "lambda": lam, "lhs": r1.lhs, "rhs1": r1.rhs,
                 "rhs2": r2.rhs, "gap": r1.gap, "case": case})
    return EXIT_OK if ok else EXIT_VIOLATION


def exhaustive_grid(grid: str, tol: float):
    """Yield every (path, level) of a grid that violates eq1/eq2 or the gap identity."""
    n, entries, levels = GRIDS[grid]
    for vals in itertools.product(entries, repeat=n + 1):
        xs = path_core.Path(vals)
        for lam in levels:
            r1 = pathwise_ineq.eval_ineq1(xs, lam)
            r2 = pathwise_ineq.eval_ineq2(xs, lam)
            g = pathwise_ineq.gap_oracle(xs, lam)
            if not (r1.holds(tol) and r2.holds(tol) and r1.gap == g and r2.gap == g):
                yield xs, lam


def cmd_fuzz(args, em: Emitter, tol: float) -> int:
    n, entries, levels = GRIDS[args.grid]
    n_paths = len(entries) ** (n + 1)
    bad = list(exhaustive_grid(args.grid, tol))
    for xs, lam in bad:
        em.emit({"eq": "eq1+eq2", "violation": "exhaustive", "lambda": lam, "path": list(xs.values)})
    em.emit({"eq": "eq1+eq2", "campaign": f"exhaustive-{args.grid}", "paths": n_paths,
             "levels": len(levels), "violations": len(bad)})
    em.text(f"{len(bad)} violations / {n_paths} paths × {len(levels)} levels")
    total = len(bad)
    if args.trials > 0:
        for extra in FUZZ_KINDS:
            spec = montecarlo.GeneratorSpec(n=args.n, seed=args.seed, **extra)
            rand_levels = [spec.x0 + k * 0.5 for k in range(-6, 7)]
            res = montecarlo.pathwise_fuzz(spec, args.trials, rand_levels, rel=tol)
            rec = {"eq": "eq1+eq2", "campaign": f"random-{spec.kind.value}", "paths": res.paths,
                   "levels": res.levels, "violations": res.violations}
            if res.first_violation is not None:
                idx, lam, vals = res.first_violation
                rec.update(trial=idx, **{"lambda": lam}, path=list(vals))
            em.emit(rec)
            total += res.violations
    return EXIT_OK if total == 0 else EXIT_VIOLATION


def cmd_tree(args, em: Emitter, tol: float) -> int:
    _need(args, "tree")
    t = prob_tree.load_tree(args.tree)
    cls = prob_tree.classify(t)
    em.emit({"eq": "class", "kind": cls.kind.value, "max_defect": cls.max_defect,
             "depth": t.depth, "nodes": t.node_count})
    if args.lam is not None:
        levels = [args.lam]
    else:
        levels = sorted({nd.value for nd in t.nodes()})
    reports = []
    for lam in levels:
        if cls.is_supermartingale:
            reports.append(prob_tree.verify_ineq3(t, lam))
        if cls.is_submartingale:
            reports.append(prob_tree.verify_ineq4(t, lam))
    nonneg = t.min_value >= 0
    if cls.is_martingale and nonneg and t.root.value > 0:
        reports.append(prob_tree.verify_ineq8(t))
    if cls.is_submartingale and nonneg:
        reports.append(prob_tree.verify_ineq9(t))
    ok = True
    for rep in reports:
        rec = rep.to_dict()
        rec["holds"] = rep.holds(tol)
        ok &= rep.holds(tol)
        em.emit(rec)
    return EXIT_OK if ok else EXIT_VIOLATION


def _mc_spec(args) -> montecarlo.GeneratorSpec:
    if args.spec is not None:
        with open(args.spec, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DomainError(f"invalid spec JSON: {exc}") from None
        return montecarlo.GeneratorSpec.from_dict(doc)
    _need(args, "kind", "n")
    return montecarlo.GeneratorSpec(
        kind=args.kind, n=args.n, x0=args.x0, step_scale=args.step_scale,
        seed=args.seed, param=args.param,
    )


def cmd_mc(args, em: Emitter, tol: float) -> int:
    spec = _mc_spec(args)
    wanted = args.ineq or []
    if not wanted:
        wanted = [tag for tag, ok in (
            ("eq3", spec.is_supermartingale),
            ("eq4", spec.is_submartingale),
            ("eq8", spec.is_martingale and spec.nonnegative),
            ("eq9", spec.is_submartingale and spec.nonnegative),
        ) if ok] + ["transform1", "transform2"]
    ok = True
    for tag in wanted:
        if tag.startswith("transform"):
            _need(args, "lam")
            which = Which.INEQ1 if tag == "transform1" else Which.INEQ2
            est = montecarlo.estimate_transform(spec, args.lam, which, args.trials, args.workers)
            em.emit({"kind": spec.kind.value, "n": spec.n, "lambda": args.lam,
                     "ineq": "eq1-transform" if which is Which.INEQ1 else "eq2-transform",
                     "mean": est.mean, "se": est.std_err, "trials": est.trials,
                     "zero_variance": est.zero_variance})
            continue
        lam = args.lam if tag in ("eq3", "eq4") else None
        if lam is None and tag in ("eq3", "eq4"):
            _need(args, "lam")
        res = montecarlo.estimate_sides(spec, tag, lam, args.trials, args.workers)
        ok &= res.passed
        em.emit(res.to_row(spec))
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_derive(args, em: Emitter, tol: float) -> int:
    _need(args, "path")
    path = path_core.read_path_file(args.path)
    p = 2.0 if args.p is None else args.p
    chains = []
    if isinstance(path, path_core.NonnegPath):
        chains.append(derivation.chain_lp(path, p, tol))
    if isinstance(path, path_core.PositiveStartPath):
        chains.append(derivation.chain_llogl(path, tol))
    if not chains:
        raise DomainError("derive needs a nonnegative path")
    ok = True
    for ch in chains:
        ok &= ch.all_ordered
        if em.fmt == "csv":
            em.out.write(f"# {ch.eq}\n" + ch.to_csv())
        else:
            em.emit(ch.to_dict())
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_counterexample(args, em: Emitter, tol: float) -> int:
    eps = 0.01 if args.epsilon is None else args.epsilon
    ce = prob_tree.counterexample_eq8(eps)
    threshold = prob_tree.counterexample_threshold()
    rep9 = prob_tree.verify_ineq9(prob_tree.chain([eps, 1.0]))
    em.emit(ce.to_dict())
    em.emit({"eq": "eq8-threshold", "epsilon_star": threshold})
    rec9 = rep9.to_dict()
    rec9["holds"] = rep9.holds(tol)
    em.emit(rec9)
    verdict = "violated" if ce.violated else "holds"
    rel = "<" if ce.violated else ">="
    em.text(
        f"Eq.(8) form {verdict}: {ce.rhs:.3g} {rel} {ce.lhs:.4g}; "
        f"Eq.(9) {'holds' if rep9.holds(tol) else 'FAILS'}: {rep9.lhs:.4g} ≤ {rep9.rhs:.4g}"
    )
    return EXIT_OK if rep9.holds(tol) else EXIT_VIOLATION


COMMANDS = {
    "check": cmd_check,
    "sweep": cmd_sweep,
    "fuzz": cmd_fuzz,
    "tree": cmd_tree,
    "mc": cmd_mc,
    "derive": cmd_derive,
    "counterexample": cmd_counterexample,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv", "text"), default="text")
    common.add_argument(
        "--tol", type=float, default=None,
        help=f"relative tolerance r; checks pass when rhs - lhs >= -r(1+|lhs|+|rhs|). "
             f"Falls back to ${TOL_ENV}, then {REL_TOL:g} (suits double-precision sums "
             f"of up to ~1e4 terms)",
    )
    parser = argparse.ArgumentParser(
        prog="doob-pathwise",
        description="Evaluate pathwise maximal inequalities on paths, trees and simulations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="evaluate bounds on one path")
    p.add_argument("--path", metavar="FILE")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--p", type=float)

    p = sub.add_parser("sweep", parents=[common], help="level sweep over one path")
    p.add_argument("--path", metavar="FILE")
    p.add_argument("--points", type=int, default=101)

    p = sub.add_parser("fuzz", parents=[common], help="exhaustive and random pathwise campaign")
    p.add_argument("--grid", choices=sorted(GRIDS), default="small")
    p.add_argument("--trials", type=int, default=0, help="random paths per generator kind")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("tree", parents=[common], help="verify expectation bounds on a tree")
    p.add_argument("--tree", metavar="FILE")
    p.add_argument("--lambda", dest="lam", type=float)

    p = sub.add_parser("mc", parents=[common], help="Monte Carlo checks")
    p.add_argument("--spec", metavar="FILE", help="generator spec as JSON")
    p.add_argument("--kind", choices=[k.value for k in montecarlo.GenKind])
    p.add_argument("--n", type=int)
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--step-scale", type=float, default=1.0)
    p.add_argument("--param", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--ineq", action="append",
                   choices=("eq3", "eq4", "eq8", "eq9", "transform1", "transform2"))

    p = sub.add_parser("derive", parents=[common], help="replay the L^p and L log L chains")
    p.add_argument("--path", metavar="FILE")
    p.add_argument("--p", type=float)

    p = sub.add_parser("counterexample", parents=[common], help="submartingale counterexample")
    p.add_argument("--epsilon", type=float)
    return parser


def main(argv: Optional[Iterable[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(None if argv is None else list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        tol = resolve_tol(args.tol)
        buf = io.StringIO()
        status = COMMANDS[args.command](args, Emitter(args.format, buf), tol)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DoobPathwiseError, OSError) as exc:
        print(f"input error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out.write(buf.getvalue())
    return status


if __name__ == "__main__":
    sys.exit(main())
