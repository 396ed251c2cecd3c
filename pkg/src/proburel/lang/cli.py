"""Command line interface.

Exit status: 0 on success, 1 when a verification fails or the model cannot be
evaluated, 2 on usage and parse errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
from pathlib import Path

from .. import kernel as K
from ..config import DEFAULT_GAP_TOL, DEFAULT_MAX_ITER, Config
from ..constructs import ConstructError, elaborate, live_in, loops
from ..expr import EvalError, ExprError, names
from ..fixpoint import LoopError, LoopSpec, verify_unique_fp
from ..numerics import default_precision, format_decimal, format_rational, parse_rational
from ..query import expect, prob_of
from ..state import OutOfDomain, StateError, format_value
from .parser import ParseError, parse_expr, parse_program

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


class UsageError(Exception):
    pass


def bundled_programs() -> list:
    return sorted(p.name for p in PROGRAMS.iterdir() if p.suffix in (".ppl", ".expr"))


def resolve(path: str) -> Path:
    """A file path, falling back to the bundled program of the same name."""
    p = Path(path)
    if p.exists():
        return p
    alt = PROGRAMS / p.name
    if alt.exists():
        return alt
    raise UsageError(f"no such file: {path}")


def read_text(path: str) -> str:
    return resolve(path).read_text(encoding="utf-8")


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        for part in item.split(","):
            if not part.strip():
                continue
            if "=" not in part:
                raise UsageError(f"--param expects name=a/b, got {part!r}")
            k, v = part.split("=", 1)
            try:
                out[k.strip()] = parse_rational(v)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
    return out


def _parse_value(space, name, text):
    dom = space.domain(name)
    text = text.strip()
    if dom.kind == "bool":
        if text not in ("true", "false"):
            raise UsageError(f"{name} is boolean; use true or false")
        return text == "true"
    if dom.kind == "int":
        try:
            v = int(text)
        except ValueError:
            raise UsageError(f"{name} expects an integer, got {text!r}") from None
    else:
        v = text
    if v not in dom:
        raise UsageError(f"{text} is outside the domain of {name} ({dom.describe()})")
    return v


def _parse_initial(space, text) -> dict:
    out = {}
    if not text:
        return out
    for part in text.split(","):
        if not part.strip():
            continue
        if "=" not in part:
            raise UsageError(f"--initial expects name=value pairs, got {part!r}")
        k, v = part.split("=", 1)
        k = k.strip()
        if k not in space:
            raise UsageError(f"--initial names an undeclared variable {k!r}")
        out[k] = _parse_value(space, k, v)
    return out


class Loaded:
    def __init__(self, args):
        self.args = args
        self.src = parse_program(read_text(args.file))
        self.params = self.src.param_values(_parse_params(args.param))
        self.space = self.src.space(args.tmax)
        clocks = self.space.clock_vars()
        if clocks:
            window = min(self.space.domain(c).hi - self.space.domain(c).lo for c in clocks)
            depth = getattr(args, "iters", None)
            if args.max_iter is not None and args.max_iter >= window:
                raise UsageError(f"--max-iter {args.max_iter} must be below the time window "
                                 f"of {window} steps (raise --tmax)")
            if depth is not None and depth >= window:
                raise UsageError(f"--iters {depth} must be below the time window of {window} "
                                 f"steps (raise --tmax)")
        self.config = Config(max_iter=args.max_iter or DEFAULT_MAX_ITER,
                             gap_tol=args.gap_tol if args.gap_tol is not None else DEFAULT_GAP_TOL)

    def kernel(self):
        return elaborate(self.src.body, self.space, self.config, self.params)

    def initial_classes(self, out_vars) -> tuple:
        """Initial states that can give different answers, plus the variables that tell them apart."""
        fixed = _parse_initial(self.space, getattr(self.args, "initial", None))
        live = live_in(self.src.body, set(out_vars), self.space)
        shown = [n for n in self.space.names if n in live or n in fixed]
        free = [n for n in self.space.names if n in live and n not in fixed]
        choices = []
        for n in self.space.names:
            if n in fixed:
                choices.append([fixed[n]])
            elif n in free:
                choices.append(list(self.space.domain(n).values))
            else:
                choices.append([self.space.domain(n).values[0]])
        return list(itertools.product(*choices)), shown


def _label(space, s, shown) -> str:
    if not shown:
        return "(any)"
    return ", ".join(f"{n}={format_value(s[space.index(n)])}" for n in shown)


def _residual_text(r) -> str:
    if r is None:
        return "unbounded"
    if r == 0:
        return "0"
    return f"{format_rational(r)} (~{float(r):.3e})"


def _precision(args) -> int:
    return args.precision if args.precision is not None else default_precision()


def _emit_values(args, loaded, query, result, states, shown, out) -> None:
    space = loaded.space
    prec = _precision(args)
    rows = []
    for s in states:
        v = result.values[s]
        r = None if result.residual is None else result.residual[s]
        has_res = result.residual is not None
        rows.append((s, v, r, has_res))
    if args.format == "json":
        data = {"query": query, "results": []}
        for s, v, r, has_res in rows:
            entry = {"initial": {n: s[space.index(n)] for n in shown}, "value": format_rational(v),
                     "decimal": format_decimal(v, prec)}
            if has_res:
                entry["residual"] = "unbounded" if r is None else format_rational(r)
            data["results"].append(entry)
        out.write(json.dumps(data, indent=2) + "\n")
        return
    if args.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["initial", "value", "decimal", "residual"])
        for s, v, r, has_res in rows:
            w.writerow([_label(space, s, shown), format_rational(v), format_decimal(v, prec),
                        ("unbounded" if r is None else format_rational(r)) if has_res else ""])
        return
    single = len(rows) == 1 and not shown
    for s, v, r, has_res in rows:
        line = f"{format_rational(v)}\t{format_decimal(v, prec)}"
        if not single:
            line = f"{_label(space, s, shown)}\t{line}"
        if has_res and r != 0:
            line += f"\tresidual {_residual_text(r)}"
        out.write(line + "\n")


def cmd_run(args, out) -> int:
    loaded = Loaded(args)
    k = loaded.kernel()
    states, shown = loaded.initial_classes(loaded.space.names)
    space = loaded.space
    prec = _precision(args)
    if args.format == "json":
        data = K.to_json(k, states)
        if k.has_tails:
            for row, s in zip(data["rows"], states):
                t = k.tail(s)
                row["pending_mass"] = format_rational(t.mass) if t else "0"
        out.write(json.dumps(data, indent=2) + "\n")
        return 0
    if args.format == "csv":
        out.write(K.to_csv(k, states))
        return 0
    for i, s in enumerate(states):
        if i:
            out.write("\n")
        out.write(f"initial: {_label(space, s, shown)}\n")
        r = k.row(s)
        for t in K.sorted_states(space, r):
            out.write(f"  {space.format_state(t)}\t{format_rational(r[t])}\t{format_decimal(r[t], prec)}\n")
        tail = k.tail(s) if k.has_tails else None
        if tail is not None:
            out.write(f"  (not yet terminated)\t{format_rational(tail.mass)}\t{format_decimal(tail.mass, prec)}\n")
    return 0


def _query(args, out, text, as_event) -> int:
    loaded = Loaded(args)
    e = parse_expr(text, loaded.src, final=True)
    out_vars = {n for n, _ in names(e) if n in loaded.space}
    k = loaded.kernel()
    states, shown = loaded.initial_classes(out_vars)
    fn = prob_of if as_event else expect
    result = fn(k, e, loaded.params, states)
    _emit_values(args, loaded, text, result, states, shown, out)
    return 0


def cmd_prob(args, out) -> int:
    return _query(args, out, args.event, True)


def cmd_expect(args, out) -> int:
    return _query(args, out, args.expr, False)


def cmd_verify(args, out) -> int:
    loaded = Loaded(args)
    found = loops(loaded.src.body)
    if len(found) != 1:
        raise UsageError(f"fixpoint-verify needs a program with exactly one loop, found {len(found)}")
    loop = found[0]
    body = elaborate(loop.body, loaded.space, loaded.config, loaded.params)
    spec = LoopSpec(loop.guard, body, loaded.space, loaded.params)
    cand_expr = parse_expr(read_text(args.candidate), loaded.src)
    cand = K.tabulate(loaded.space, cand_expr, loaded.params, kind=K.PRFUN)
    cert = verify_unique_fp(spec, cand, N=args.iters, ratio_check=args.ratio_check)
    if args.format == "json":
        out.write(json.dumps(cert.to_json(), indent=2) + "\n")
    else:
        out.write(f"verdict: {cert.label}\n")
        for c in cert.checks:
            status = "ok" if c["ok"] else "FAILED"
            extra = f"  ({c['detail']})" if c.get("detail") else ""
            out.write(f"  {c['name']}: {status}{extra}\n")
        out.write(f"ratio: {'none' if cert.ratio is None else format_rational(cert.ratio)}\n")
        out.write(f"N: {cert.N}\n")
        if cert.boundary_rows:
            out.write(f"boundary rows: {len(cert.boundary_rows)}\n")
        if cert.verdict == "UniqueFixedPoint" and not all(c.get("empirical") is False for c in cert.checks
                                                           if c["name"] == "iterdiff_decay"):
            out.write("note: decay is certified by an observed ratio over n=1..N-1, not proved\n")
    return 0 if cert.verdict == "UniqueFixedPoint" else 1


def cmd_laws(args, out) -> int:
    from .. import laws
    ids = args.law or None
    try:
        results = laws.run_suite(cases=args.cases, seed=args.seed, ids=ids)
    except laws.UnknownLaw as exc:
        raise UsageError(f"unknown law {exc.args[0]!r}; known laws: {', '.join(laws.CATALOG)}") from None
    ok = True
    for r in results:
        ok = ok and r.passed
        out.write(r.line() + "\n")
    if not ids:
        caught = laws.mutant_self_test(cases=args.cases, seed=args.seed)
        ok = ok and caught.detected
        out.write(caught.line() + "\n")
    return 0 if ok else 1


def cmd_programs(args, out) -> int:
    for name in bundled_programs():
        out.write(name + "\n")
    return 0


def _rational_arg(text):
    try:
        return parse_rational(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--param", action="append", metavar="NAME=A/B", help="set a program parameter")
    common.add_argument("--tmax", type=int, help="upper bound for nat variables")
    common.add_argument("--gap-tol", type=_rational_arg, metavar="A/B",
                        help="stop a loop once its unabsorbed mass is at most this (default 2^-64)")
    common.add_argument("--max-iter", type=int, help="iteration cap per loop")
    common.add_argument("--format", choices=("table", "json", "csv"), default="table")
    common.add_argument("--precision", type=int, help="decimal places (default $PROBUREL_PRECISION or 6)")

    ap = argparse.ArgumentParser(prog="proburel", description="Exact inference for discrete probabilistic programs.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="print the final distribution")
    p.add_argument("file")
    p.add_argument("--initial", metavar="K=V,...")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("prob", parents=[common], help="probability of an event on the final state")
    p.add_argument("file")
    p.add_argument("--event", required=True)
    p.add_argument("--initial", metavar="K=V,...")
    p.set_defaults(fn=cmd_prob)

    p = sub.add_parser("expect", parents=[common], help="expected value of an expression on the final state")
    p.add_argument("file")
    p.add_argument("--expr", required=True)
    p.add_argument("--initial", metavar="K=V,...")
    p.set_defaults(fn=cmd_expect)

    p = sub.add_parser("fixpoint-verify", parents=[common], help="certify a candidate loop semantics")
    p.add_argument("file")
    p.add_argument("--candidate", required=True)
    p.add_argument("--iters", type=int, default=12, help="iteration differences to compute (N)")
    p.add_argument("--ratio-check", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("laws", parents=[common], help="run the algebraic law catalog")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--cases", type=int, default=100)
    p.add_argument("--law", action="append", help="run only this law (repeatable)")
    p.set_defaults(fn=cmd_laws)

    p = sub.add_parser("programs", help="list the bundled example programs")
    p.set_defaults(fn=cmd_programs)
    return ap


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args, out)
    except (UsageError, ParseError, ExprError) as exc:
        err.write(f"error: {exc}\n")
        return 2
    except StateError as exc:
        if isinstance(exc, OutOfDomain):
            err.write(f"error: {exc}\n")
            return 1
        err.write(f"error: {exc}\n")
        return 2
    except (LoopError, ConstructError, K.KernelError, EvalError) as exc:
        err.write(f"error: {exc}\n")
        return 1


def run_cli(argv) -> tuple:
    """Run the CLI in-process and return ``(status, stdout, stderr)``."""
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out, err)
    return code, out.getvalue(), err.getvalue()


__all__ = ["main", "run_cli", "build_parser"]
