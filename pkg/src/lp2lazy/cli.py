"""Command-line front end.

Exit codes: 0 success, 1 rejection / Fail / mismatch, 2 evaluation error,
64 usage error, 65 malformed input program or query, 66 unreadable file.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .compare import BridgeError, bridge, compare, parse_queries, prepare
from .lazyeval import DEFAULT_BUDGET, eval_call
from .modes import InconsistentInput, analyze, check_consistent, make_plain
from .oracle import (
    DerivationLimits,
    Floundered,
    ld_solve,
    monitor_double_matching,
    monitor_groundness,
    monitor_input_discriminative,
    monitor_partition_correctness,
    monitor_persistence,
)
from .syntax import Kind, ModeError, ParseError, Program, parse_program, parse_query, print_program
from .terms import print_goal, print_term
from .translate import TranslationError, emit_haskell, ir_to_json

EX_OK, EX_REJECT, EX_EVAL, EX_USAGE, EX_DATAERR, EX_NOINPUT = 0, 1, 2, 64, 65, 66

MONITORS = {
    "groundness": monitor_groundness,
    "persistence": monitor_persistence,
    "double_matching": monitor_double_matching,
    "input_discriminative": monitor_input_discriminative,
    "partition_correctness": monitor_partition_correctness,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EX_USAGE)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FileNotFoundError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _kinds(program: Program, overrides: list[str]) -> Program:
    if not overrides:
        return program
    table = {}
    for item in overrides:
        name, sep, kind = item.partition("=")
        if not sep or kind not in ("test", "nontest"):
            raise UsageError(f"--kind expects NAME=test|nontest or NAME/ARITY=..., got {item!r}")
        pname, _, arity = name.partition("/")
        hits = [p for p in program.predicates() if p[0] == pname and (not arity or str(p[1]) == arity)]
        if not hits:
            raise UsageError(f"--kind: no predicate {name}")
        for p in hits:
            table[p] = Kind(kind)
    return program.with_kinds(table)


def _load(args) -> Program:
    program = parse_program(_read(args.file))
    return _kinds(program, getattr(args, "kind", None) or [])


def _emit(text: str, out: str | None) -> None:
    if out and out != "-":
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- subcommands --------------------------------------------------------------------


def cmd_check(args) -> int:
    program = _load(args)
    analysis = analyze(program)
    if args.json:
        sys.stdout.write(_dump(analysis.to_json()))
    else:
        sys.stdout.write(analysis.text())
    return EX_OK if analysis.translatable else EX_REJECT


def cmd_plainify(args) -> int:
    program = _load(args)
    try:
        plain = make_plain(program)
    except InconsistentInput as exc:
        print(f"not consistent: {exc}", file=sys.stderr)
        return EX_REJECT
    _emit(print_program(plain), args.output)
    return EX_OK


def _translated(program: Program):
    if not check_consistent(program).ok:
        raise InconsistentInput(analyze(program).text())
    return prepare(program)


def cmd_translate(args) -> int:
    program = _load(args)
    try:
        _, fp = _translated(program)
    except (InconsistentInput, TranslationError) as exc:
        print(f"cannot translate:\n{exc}", file=sys.stderr)
        return EX_REJECT
    if args.dump_ir:
        _emit(_dump(ir_to_json(fp)), args.dump_ir)
    _emit(emit_haskell(fp), args.output)
    return EX_OK


def cmd_run(args) -> int:
    program = _load(args)
    query = parse_query(args.query)
    try:
        _, fp = _translated(program)
    except (InconsistentInput, TranslationError) as exc:
        print(f"cannot translate:\n{exc}", file=sys.stderr)
        return EX_REJECT
    try:
        br = bridge(program, query)
    except BridgeError as exc:
        print(f"cannot run query: {exc}", file=sys.stderr)
        return EX_USAGE
    res = eval_call(fp, br.function, br.args, args.budget)
    names = [v.name for v in br.outputs]
    if args.json:
        sys.stdout.write(
            _dump(
                {
                    "query": args.query,
                    "function": br.function,
                    "kind": res.kind.value,
                    "status": res.status,
                    "bindings": None if res.value is None else dict(zip(names, map(print_term, res.value))),
                    "message": res.message,
                    "stats": res.stats.to_json(),
                }
            )
        )
    else:
        if res.status == "value":
            if res.kind is Kind.TEST:
                print("Suc" if names else "Suc ()")
            elif not names:
                print("= ()")
            for n, t in zip(names, res.value):
                print(f"{n} = {print_term(t)}")
        elif res.status == "fail":
            print("Fail")
        else:
            print(f"error: {res.status}: {res.message}")
        if args.stats:
            s = res.stats
            print(
                f"% steps={s.steps} calls={s.calls} builtins={s.builtins} "
                f"abandoned={s.abandoned} black_hole={'yes' if s.black_hole else 'no'}"
            )
    return {"value": EX_OK, "fail": EX_REJECT}.get(res.status, EX_EVAL)


def cmd_solve(args) -> int:
    program = _load(args)
    query = parse_query(args.query)
    try:
        limits = DerivationLimits.parse(args.limits) if args.limits else DerivationLimits()
    except (ValueError, TypeError) as exc:
        raise UsageError(f"--limits: {exc}") from exc
    if args.monitor:
        reports = [MONITORS[m](program, query, limits) for m in args.monitor]
        if args.json:
            sys.stdout.write(_dump({"query": args.query, "monitors": [r.to_json() for r in reports]}))
        else:
            for r in reports:
                status = f"refused ({r.refused})" if r.refused else ("ok" if r.ok else "VIOLATIONS")
                print(f"{r.monitor}: {status}, {r.checked} checked")
                for v in r.violations:
                    print(f"  {v}")
        return EX_OK if all(r.refused is None and r.ok for r in reports) else EX_REJECT
    try:
        res = ld_solve(program, query, limits, occurs_check=not args.no_occurs)
    except Floundered as exc:
        if args.json:
            sys.stdout.write(
                _dump(
                    {
                        "query": args.query,
                        "answers": [_answer_json(a) for a in exc.answers],
                        "floundered": print_goal(exc.atom),
                    }
                )
            )
        else:
            for a in exc.answers:
                print(a)
                print(";")
            print(f"floundered: {print_goal(exc.atom)}")
        return EX_EVAL
    if args.json:
        sys.stdout.write(
            _dump(
                {
                    "query": args.query,
                    "answers": [_answer_json(a) for a in res.answers],
                    "exhausted": res.exhausted,
                    "limit_hit": res.limit_hit,
                    "steps": res.steps,
                    "failed_branches": res.failed_branches,
                }
            )
        )
    else:
        for i, a in enumerate(res.answers):
            if i:
                print(";")
            print(a)
        if not res.answers:
            print("no")
        if res.limit_hit:
            print(f"% limit hit: {res.limit_hit}")
    return EX_OK if res.answers else EX_REJECT


def _answer_json(a) -> dict:
    return {"bindings": {n: print_term(t) for n, t in a.bindings}, "length": a.length}


def cmd_compare(args) -> int:
    program = _load(args)
    specs = parse_queries(_read(args.queries))
    try:
        limits = DerivationLimits.parse(args.limits) if args.limits else None
    except (ValueError, TypeError) as exc:
        raise UsageError(f"--limits: {exc}") from exc
    if not check_consistent(program).ok:
        print("cannot translate:\n" + analyze(program).text(), file=sys.stderr)
        return EX_REJECT
    report = compare(program, specs, budget=args.budget, limits=limits)
    sys.stdout.write(_dump(report.to_json()) if args.json else report.table())
    return EX_OK if report.ok else EX_REJECT


# -- argument parsing ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lp2lazy", description="Translate moded logic programs to a lazy functional IR and cross-check them.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, kinds=True):
        p.add_argument("file", help="logic program (.lp)")
        if kinds:
            p.add_argument("--kind", action="append", metavar="NAME=KIND", help="override a partition (test|nontest)")
        return p

    p = common(sub.add_parser("check", help="mode analyses"))
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_check)

    p = common(sub.add_parser("plainify", help="print the plain form of a program"))
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_plainify)

    p = common(sub.add_parser("translate", help="emit the functional translation"))
    p.add_argument("-o", "--output")
    p.add_argument("--dump-ir", nargs="?", const="-", metavar="PATH", help="write the IR as JSON (stdout by default)")
    p.set_defaults(func=cmd_translate)

    p = common(sub.add_parser("run", help="evaluate a query with the lazy evaluator"))
    p.add_argument("query")
    p.add_argument("--stats", action="store_true")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_run)

    p = common(sub.add_parser("solve", help="answer a query by LD resolution"), kinds=True)
    p.add_argument("query")
    p.add_argument("--limits", metavar="steps=N,depth=D,answers=K")
    p.add_argument("--no-occurs", action="store_true", help="unify without the occurs check")
    p.add_argument("--monitor", action="append", choices=sorted(MONITORS))
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = common(sub.add_parser("compare", help="cross-check both semantics on a query file"))
    p.add_argument("queries")
    p.add_argument("--json", action="store_true")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--limits", metavar="steps=N,depth=D,answers=K")
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code in (0, None) else EX_USAGE
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"lp2lazy: {exc}", file=sys.stderr)
        return EX_NOINPUT
    except UsageError as exc:
        print(f"lp2lazy: {exc}", file=sys.stderr)
        return EX_USAGE
    except ParseError as exc:
        print(f"lp2lazy: {exc}", file=sys.stderr)
        return EX_DATAERR
    except ModeError as exc:
        print(f"lp2lazy: mode error: {exc}", file=sys.stderr)
        return EX_DATAERR
    except ValueError as exc:
        print(f"lp2lazy: {exc}", file=sys.stderr)
        return EX_DATAERR


if __name__ == "__main__":
    sys.exit(main())
