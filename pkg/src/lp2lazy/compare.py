"""Run queries through both semantics and classify the outcome."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .lazyeval import DEFAULT_BUDGET, EvalResult, eval_call
from .modes import check_plain, make_plain
from .oracle import DerivationLimits, Floundered, ld_solve
from .syntax import Program, Query, parse_query
from .terms import Var, functor_of, is_ground, print_goal, print_term, variant
from .translate import FunProgram, translate

EQUIVALENT = "Equivalent"
LAZY_FAIL = "LazyFailOracleSucceeds"
MULTI = "MultiAnswerDivergence"
FLOUNDER = "OracleFlounderLazySucceeds"
BOTH_FAIL = "BothFail"
ERROR = "Error"
VERDICTS = (EQUIVALENT, LAZY_FAIL, MULTI, FLOUNDER, BOTH_FAIL, ERROR)

_EXPECT = re.compile(r"#\s*expect:\s*(\w+)")


class BridgeError(ValueError):
    """The query cannot be turned into a function call."""


@dataclass(frozen=True)
class QuerySpec:
    text: str
    expect: str | None = None
    line: int = 0


def parse_queries(text: str) -> list[QuerySpec]:
    """One query per line; ``# expect: Verdict`` may follow; ``#`` lines are comments."""
    out = []
    for n, raw in enumerate(text.splitlines(), start=1):
        body, _, comment = raw.partition("#")
        body = body.strip()
        if not body:
            continue
        m = _EXPECT.search("#" + comment) if comment else None
        expect = m.group(1) if m else None
        if expect is not None and expect not in VERDICTS:
            raise ValueError(f"line {n}: unknown verdict {expect!r}")
        out.append(QuerySpec(body, expect, n))
    return out


@dataclass(frozen=True)
class Bridge:
    function: str
    args: tuple
    outputs: tuple  # query variables receiving the result tuple


def bridge(program: Program, query: Query) -> Bridge:
    """Map a single-atom query onto a call: ground inputs in, fresh variables out."""
    if len(query.atoms) != 1:
        raise BridgeError("only single-atom queries can be run as a function call")
    atom = query.atoms[0]
    pred = functor_of(atom)
    if not program.defines(pred):
        raise BridgeError(f"no clauses for {pred[0]}/{pred[1]}")
    mode = program.mode(pred)
    args = atom.args if hasattr(atom, "args") else ()
    ins = tuple(args[i] for i in mode.inputs)
    outs = tuple(args[i] for i in mode.outputs)
    for t in ins:
        if not is_ground(t):
            raise BridgeError(f"input argument {print_term(t)} is not ground")
    if not all(isinstance(t, Var) for t in outs) or len(set(outs)) != len(outs):
        raise BridgeError("output arguments must be distinct variables")
    return Bridge(pred[0], ins, outs)


@dataclass
class CompareRow:
    query: str
    verdict: str
    lazy_status: str
    lazy_value: list | None
    lazy_stats: dict
    oracle_status: str  # answers | floundered | limit
    oracle_first: list | None
    oracle_count: int
    expect: str | None = None
    note: str = ""

    @property
    def matches(self) -> bool:
        if self.expect is not None:
            return self.verdict == self.expect
        return self.verdict in (EQUIVALENT, BOTH_FAIL)

    def to_json(self) -> dict:
        return {
            "query": self.query,
            "verdict": self.verdict,
            "expect": self.expect,
            "matches": self.matches,
            "lazy": {"status": self.lazy_status, "value": self.lazy_value, "stats": self.lazy_stats},
            "oracle": {"status": self.oracle_status, "first": self.oracle_first, "count": self.oracle_count},
            "note": self.note,
        }


@dataclass
class CompareReport:
    rows: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.matches for r in self.rows)

    def to_json(self) -> dict:
        return {"ok": self.ok, "rows": [r.to_json() for r in self.rows]}

    def table(self) -> str:
        head = ("query", "lazy", "oracle", "verdict", "")
        body = []
        for r in self.rows:
            lazy = r.lazy_status if r.lazy_value is None else _show(r.lazy_value)
            if r.oracle_status == "floundered":
                orc = "floundered"
            elif r.oracle_first is None:
                orc = "no" if r.oracle_status == "answers" else r.oracle_status
            else:
                orc = f"{_show(r.oracle_first)} ({r.oracle_count})"
            mark = "ok" if r.matches else f"MISMATCH (expected {r.expect or 'Equivalent/BothFail'})"
            body.append((r.query, lazy, orc, r.verdict, mark))
        widths = [max(len(row[i]) for row in [head, *body]) for i in range(len(head))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in [head, *body]]
        return "\n".join(lines) + "\n"


def _show(values: list) -> str:
    return "(" + ", ".join(values) + ")" if len(values) != 1 else values[0]


def prepare(program: Program) -> tuple[Program, FunProgram]:
    """Plainify when needed, then translate."""
    plain = program if check_plain(program).ok else make_plain(program)
    return plain, translate(plain)


def compare_query(
    program: Program,
    fp: FunProgram,
    query: Query,
    *,
    budget: int = DEFAULT_BUDGET,
    limits: DerivationLimits | None = None,
    expect: str | None = None,
    label: str | None = None,
) -> CompareRow:
    """Evaluate ``query`` lazily on ``fp`` and by LD resolution on ``program``."""
    label = label or ", ".join(print_goal(a) for a in query.atoms)
    br = bridge(program, query)
    lazy: EvalResult = eval_call(fp, br.function, br.args, budget)
    lazy_terms = lazy.value if lazy.ok else None

    first_terms = None
    count = 0
    try:
        res = ld_solve(program, query, limits or DerivationLimits())
        count = len(res.answers)
        oracle_status = "answers" if res.exhausted or res.answers else "limit"
        if res.answers:
            first = res.answers[0].as_dict()
            first_terms = tuple(first[v.name] for v in br.outputs)
    except Floundered as exc:
        oracle_status = "floundered"
        count = len(exc.answers)

    note = ""
    if lazy.status not in ("value", "fail"):
        verdict, note = ERROR, f"lazy {lazy.status}: {lazy.message}"
    elif oracle_status == "floundered":
        verdict = FLOUNDER if lazy.ok else ERROR
    elif lazy.ok and first_terms is not None and variant(tuple(lazy_terms), first_terms):
        verdict = EQUIVALENT
    elif count > 1:
        verdict = MULTI
    elif lazy.failed and count >= 1:
        verdict = LAZY_FAIL
    elif lazy.failed and oracle_status == "answers":
        verdict = BOTH_FAIL
    else:
        verdict = ERROR
        note = "oracle gave no answer within limits" if oracle_status == "limit" else "results differ"

    return CompareRow(
        query=label,
        verdict=verdict,
        lazy_status=lazy.status,
        lazy_value=None if lazy_terms is None else [print_term(t) for t in lazy_terms],
        lazy_stats=lazy.stats.to_json(),
        oracle_status=oracle_status,
        oracle_first=None if first_terms is None else [print_term(t) for t in first_terms],
        oracle_count=count,
        expect=expect,
        note=note,
    )


def compare(
    program: Program,
    queries: list[QuerySpec],
    *,
    budget: int = DEFAULT_BUDGET,
    limits: DerivationLimits | None = None,
) -> CompareReport:
    _, fp = prepare(program)
    report = CompareReport()
    for spec in queries:
        query = parse_query(spec.text)
        try:
            row = compare_query(program, fp, query, budget=budget, limits=limits, expect=spec.expect, label=spec.text)
        except BridgeError as exc:
            row = CompareRow(spec.text, ERROR, "rejected", None, {}, "skipped", None, 0, spec.expect, str(exc))
        report.rows.append(row)
    return report


__all__ = [
    "BOTH_FAIL",
    "Bridge",
    "BridgeError",
    "CompareReport",
    "CompareRow",
    "EQUIVALENT",
    "ERROR",
    "FLOUNDER",
    "LAZY_FAIL",
    "MULTI",
    "QuerySpec",
    "VERDICTS",
    "bridge",
    "compare",
    "compare_query",
    "parse_queries",
    "prepare",
]
