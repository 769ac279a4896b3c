"""Mode-based static analyses and the plain-form transformation.

Every check works clause by clause on the input/output split given by
the mode declarations; queries are checked as clauses with a dummy
zero-arity head.  Checks never raise on a negative verdict: they return
an :class:`AnalysisReport` listing every offending variable.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .syntax import BUILTINS, Clause, Kind, Mode, Program, Query
from .terms import (
    Atom,
    Compound,
    Term,
    Var,
    args_of,
    fresh_id,
    functor_of,
    iter_vars,
    make_atom,
    print_term,
    rename,
    substitute,
    term_vars,
)

PATTERN_MATCH = ("=", 2)


class InconsistentInput(Exception):
    pass


# -- positions ----------------------------------------------------------------


@dataclass(frozen=True)
class Position:
    atom: int  # 0 is the head, 1..n the body atoms
    arg: int  # 1-based argument index
    producing: bool


@dataclass(frozen=True)
class PositionClassification:
    producing: tuple
    consuming: tuple

    def all(self) -> tuple:
        return self.producing + self.consuming


def split_args(atom: Term, program: Program) -> tuple[list, list]:
    """Return (input terms, output terms) of ``atom`` under its mode."""
    mode = program.mode(functor_of(atom))
    args = args_of(atom)
    return [args[i] for i in mode.inputs], [args[i] for i in mode.outputs]


def classify_positions(clause: Clause, program: Program) -> PositionClassification:
    """Producing = head inputs and body outputs; every other position consumes."""
    producing, consuming = [], []
    for k, atom in enumerate((clause.head, *clause.body)):
        mode = program.mode(functor_of(atom))
        for i, m in enumerate(mode.modes):
            is_prod = (m is Mode.IN) == (k == 0)
            (producing if is_prod else consuming).append(Position(k, i + 1, is_prod))
    return PositionClassification(tuple(producing), tuple(consuming))


# -- reports --------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    check: str
    clause: int  # index into Program.all_clauses(); queries follow after the clauses
    where: str  # printed clause or query
    variable: str
    reason: str


@dataclass
class AnalysisReport:
    check: str
    ok: bool
    clause_flags: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    subflags: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "check": self.check,
            "ok": self.ok,
            "clause_flags": list(self.clause_flags),
            "subflags": dict(self.subflags),
            "violations": [asdict(v) for v in self.violations],
        }

    def lines(self) -> list[str]:
        mark = "yes" if self.ok else "NO"
        out = [f"{self.check}: {mark}"]
        for name, flag in self.subflags.items():
            out.append(f"  {name}: {'yes' if flag else 'NO'}")
        for v in self.violations:
            out.append(f"  clause {v.clause}: {v.variable}: {v.reason}  [{v.where}]")
        return out


def _units(program: Program):
    """Clauses, then queries as headless clauses, each with a printable label."""
    for c in program.all_clauses():
        yield c, str(c)
    for q in program.queries:
        yield Clause(Atom("$query"), q.atoms), f"?- {q}"


def _clause_io(clause: Clause, program: Program):
    """(head inputs, head outputs, [(body inputs, body outputs)])."""
    if clause.head == Atom("$query"):
        hin, hout = [], []
    else:
        hin, hout = split_args(clause.head, program)
    return hin, hout, [split_args(b, program) for b in clause.body]


def _vars(terms) -> list[Var]:
    return term_vars(*terms)


def _occurrences(terms) -> list[Var]:
    return [v for t in terms for v in iter_vars(t)]


def _report(check: str, program: Program, per_clause) -> AnalysisReport:
    rep = AnalysisReport(check, True)
    for idx, (clause, label) in enumerate(_units(program)):
        bad = per_clause(clause)
        rep.clause_flags.append(not bad)
        for var, reason in bad:
            rep.violations.append(Violation(check, idx, label, var, reason))
    rep.ok = all(rep.clause_flags)
    return rep


def check_consistent(program: Program) -> AnalysisReport:
    def clause_check(clause: Clause):
        hin, _, body = _clause_io(clause, program)
        produced = set(_vars(hin))
        for _, outs in body:
            produced.update(_vars(outs))
        return [
            (v.name, "occurs in no producing position")
            for v in clause.variables()
            if v not in produced
        ]

    return _report("consistent", program, clause_check)


def _body_output_problems(clause: Clause, program: Program) -> list:
    """Condition (i) of plainness: body outputs form a linear family of variables.

    The outputs of ``pattern = value`` are the variables of its pattern, which
    must themselves be linear.
    """
    bad = []
    seen: set = set()
    for atom in clause.body:
        _, outs = split_args(atom, program)
        matching = functor_of(atom) == PATTERN_MATCH
        for t in outs:
            if not isinstance(t, Var) and not matching:
                bad.append((print_term(t), "body output is not a variable"))
                continue
            for v in iter_vars(t):
                if v in seen:
                    bad.append((v.name, "variable repeated among body outputs"))
                seen.add(v)
    return bad


def _head_input_problems(clause: Clause, program: Program) -> list:
    hin, _, _ = _clause_io(clause, program)
    bad, seen = [], set()
    for v in _occurrences(hin):
        if v in seen:
            bad.append((v.name, "variable repeated in head inputs"))
        seen.add(v)
    return bad


def check_plain(program: Program) -> AnalysisReport:
    outs = _report("body_outputs_linear", program, lambda c: _body_output_problems(c, program))
    ins = _report("head_inputs_linear", program, lambda c: _head_input_problems(c, program))
    rep = AnalysisReport("plain", outs.ok and ins.ok)
    rep.clause_flags = [a and b for a, b in zip(outs.clause_flags, ins.clause_flags)]
    rep.violations = [
        Violation("plain", v.clause, v.where, v.variable, v.reason)
        for v in sorted(outs.violations + ins.violations, key=lambda v: v.clause)
    ]
    rep.subflags = {"body_outputs_linear": outs.ok, "head_inputs_linear": ins.ok}
    return rep


def check_well_moded(program: Program) -> AnalysisReport:
    """Each input is covered by head inputs or outputs of atoms to its left."""

    def clause_check(clause: Clause):
        hin, hout, body = _clause_io(clause, program)
        known = set(_vars(hin))
        bad = []
        for k, (ins, outs) in enumerate(body, start=1):
            for v in _vars(ins):
                if v not in known:
                    bad.append((v.name, f"input of body atom {k} not produced to its left"))
            known.update(_vars(outs))
        for v in _vars(hout):
            if v not in known:
                bad.append((v.name, "head output not produced by the body"))
        return bad

    return _report("well_moded", program, clause_check)


def check_simply_moded(program: Program) -> AnalysisReport:
    """Body outputs are distinct fresh variables, unseen in earlier inputs."""

    def clause_check(clause: Clause):
        hin, _, body = _clause_io(clause, program)
        bad = list(_body_output_problems(clause, program))
        seen_inputs = set(_vars(hin))
        for k, (ins, outs) in enumerate(body, start=1):
            seen_inputs.update(_vars(ins))
            for v in _vars(outs):
                if v in seen_inputs:
                    bad.append((v.name, f"output of body atom {k} occurs in an input at or before it"))
        return bad

    return _report("simply_moded", program, clause_check)


# -- input discriminative, static sufficient condition ---------------------------

_FLIP = {">": "<", ">=": "=<"}


@dataclass
class DiscriminativeReport:
    verdict: str  # "Yes" or "Unknown"
    undecided: list = field(default_factory=list)  # (pred name/arity, clause j, clause k)

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "undecided": [list(p) for p in self.undecided]}


def _normal_test(g: Term):
    """Normalise a comparison to one of ==, \\==, <, =< with argument order fixed."""
    op = g.functor
    a, b = g.args
    if op in _FLIP:
        op, a, b = _FLIP[op], b, a
    if op in ("==", "\\==") and repr(b) < repr(a):
        a, b = b, a
    return op, a, b


def _complementary(g1: Term, g2: Term) -> bool:
    if not (isinstance(g1, Compound) and isinstance(g2, Compound)):
        return False
    if functor_of(g1) not in BUILTINS or functor_of(g2) not in BUILTINS:
        return False
    if functor_of(g1) == PATTERN_MATCH or functor_of(g2) == PATTERN_MATCH:
        return False
    o1, a1, b1 = _normal_test(g1)
    o2, a2, b2 = _normal_test(g2)
    if {o1, o2} == {"==", "\\=="}:
        return (a1, b1) == (a2, b2)
    if {o1, o2} == {"<", "=<"}:
        # a < b  is the negation of  b =< a
        return (a1, b1) == (b2, a2)
    return False


def _never_holds(g: Term) -> bool:
    """A comparison that is false for every instance: a false ground test, or
    an irreflexive one (``\\==``, ``<``, ``>``) between identical terms."""
    from .oracle import eval_builtin, Floundered

    if not (isinstance(g, Compound) and functor_of(g) in BUILTINS) or functor_of(g) == PATTERN_MATCH:
        return False
    if g.functor in ("\\==", "<", ">") and g.args[0] == g.args[1]:
        return True
    try:
        return not eval_builtin(g)
    except Floundered:
        return False
    except TypeError:
        return True


def check_input_discriminative_static(program: Program) -> DiscriminativeReport:
    """Decidable sufficient condition: every same-predicate clause pair either has
    non-unifiable inputs or complementary tests once the inputs are unified."""
    from .oracle import unify

    undecided = []
    for pred, group in program.clauses.items():
        for j in range(len(group)):
            for k in range(j + 1, len(group)):
                cj = _rename_clause(group[j])
                ck = _rename_clause(group[k])
                ij, _ = split_args(cj.head, program)
                ik, _ = split_args(ck.head, program)
                mgu = unify(make_atom("in", ij), make_atom("in", ik))
                if mgu is None:
                    continue
                tj = [substitute(g, mgu) for g in cj.body if program.kind(functor_of(g)) is Kind.TEST]
                tk = [substitute(g, mgu) for g in ck.body if program.kind(functor_of(g)) is Kind.TEST]
                if any(_never_holds(g) for g in tj + tk):
                    continue
                if any(_complementary(a, b) for a in tj for b in tk):
                    continue
                undecided.append((f"{pred[0]}/{pred[1]}", j + 1, k + 1))
    return DiscriminativeReport("Unknown" if undecided else "Yes", undecided)


def _rename_clause(c: Clause) -> Clause:
    m: dict = {}
    return Clause(rename(c.head, m), tuple(rename(g, m) for g in c.body))


# -- plain-form transformation ----------------------------------------------------


class _Namer:
    def __init__(self, clause: Clause):
        self.used = {v.name for v in clause.variables()}

    def fresh(self, base: str) -> Var:
        base = base.rstrip("'").rstrip("0123456789") or "V"
        if base == "_":
            base = "V"
        k = 1
        while f"{base}{k}" in self.used:
            k += 1
        name = f"{base}{k}"
        self.used.add(name)
        return Var(name, fresh_id())


def _linearise(t: Term, seen: set, namer: _Namer, tests: list, test_op: str) -> Term:
    """Replace every already-seen variable in ``t`` by a fresh one plus a test goal."""
    if isinstance(t, Var):
        if t in seen:
            v = namer.fresh(t.name)
            tests.append(Compound(test_op, (t, v)))
            seen.add(v)
            return v
        seen.add(t)
        return t
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(_linearise(a, seen, namer, tests, test_op) for a in t.args))
    return t


def make_plain_clause(clause: Clause, program: Program) -> Clause:
    namer = _Namer(clause)
    head = clause.head
    head_tests: list = []
    if head != Atom("$query"):
        mode = program.mode(functor_of(head))
        args = list(args_of(head))
        seen: set = set()
        for i in mode.inputs:
            args[i] = _linearise(args[i], seen, namer, head_tests, "==")
        head = make_atom(functor_of(head)[0], args)
    body = []
    outs: set = set()  # body-output variables seen so far
    for atom in clause.body:
        pred = functor_of(atom)
        mode = program.mode(pred)
        args = list(args_of(atom))
        after: list = []
        if pred == PATTERN_MATCH:
            args[0] = _linearise(args[0], outs, namer, after, "==")
        else:
            for i in mode.outputs:
                t = args[i]
                if isinstance(t, Var) and t not in outs:
                    outs.add(t)
                    continue
                v = namer.fresh(t.name if isinstance(t, Var) else "V")
                args[i] = v
                outs.add(v)
                if isinstance(t, Var):
                    after.append(Compound("==", (t, v)))
                else:
                    tests: list = []
                    pattern = _linearise(t, outs, namer, tests, "==")
                    after.append(Compound("=", (pattern, v)))
                    after.extend(tests)
        body.append(make_atom(pred[0], args))
        body.extend(after)
    return Clause(head, tuple(body) + tuple(head_tests))


def make_plain(program: Program) -> Program:
    """Rewrite a consistent program into an equivalent plain one.

    Repeated head-input variables become fresh variables checked with ``==``
    at the end of the body.  A body output that is not a fresh variable is
    replaced by one, followed right after the atom by ``==`` (for a repeated
    variable) or by a ``pattern = V`` match (for a compound output).
    Clauses that are already plain come back unchanged.
    """
    rep = check_consistent(program)
    if not rep.ok:
        raise InconsistentInput("; ".join(f"{v.variable}: {v.reason} in {v.where}" for v in rep.violations))
    plain = check_plain(program)
    flags = iter(plain.clause_flags)
    new_clauses: dict = {}
    for pred, group in program.clauses.items():
        new_clauses[pred] = [c if next(flags) else make_plain_clause(c, program) for c in group]
    queries = []
    for q in program.queries:
        if next(flags):
            queries.append(q)
        else:
            c = make_plain_clause(Clause(Atom("$query"), q.atoms), program)
            queries.append(Query(c.body, q.variables))
    return Program(new_clauses, dict(program.modes), dict(program.kinds), queries, list(program.delays))


# -- combined report ------------------------------------------------------------


@dataclass
class ProgramAnalysis:
    consistent: AnalysisReport
    plain: AnalysisReport
    well_moded: AnalysisReport
    simply_moded: AnalysisReport
    input_discriminative: DiscriminativeReport

    @property
    def translatable(self) -> bool:
        return self.consistent.ok and self.plain.ok

    def to_json(self) -> dict:
        return {
            "flags": {
                "consistent": self.consistent.ok,
                "plain": self.plain.ok,
                "body_outputs_linear": self.plain.subflags["body_outputs_linear"],
                "head_inputs_linear": self.plain.subflags["head_inputs_linear"],
                "well_moded": self.well_moded.ok,
                "simply_moded": self.simply_moded.ok,
                "input_discriminative": self.input_discriminative.verdict,
            },
            "reports": [
                r.to_json() for r in (self.consistent, self.plain, self.well_moded, self.simply_moded)
            ],
            "input_discriminative": self.input_discriminative.to_json(),
        }

    def text(self) -> str:
        out = []
        for r in (self.consistent, self.plain, self.well_moded, self.simply_moded):
            out.extend(r.lines())
        idr = self.input_discriminative
        out.append(f"input_discriminative: {idr.verdict}")
        for pred, j, k in idr.undecided:
            out.append(f"  {pred}: clauses {j} and {k} undecided")
        return "\n".join(out) + "\n"


def analyze(program: Program) -> ProgramAnalysis:
    return ProgramAnalysis(
        check_consistent(program),
        check_plain(program),
        check_well_moded(program),
        check_simply_moded(program),
        check_input_discriminative_static(program),
    )


def dumps(analysis: ProgramAnalysis) -> str:
    return json.dumps(analysis.to_json(), indent=2, sort_keys=True)


__all__ = [
    "AnalysisReport",
    "DiscriminativeReport",
    "InconsistentInput",
    "Position",
    "PositionClassification",
    "ProgramAnalysis",
    "Violation",
    "analyze",
    "check_consistent",
    "check_input_discriminative_static",
    "check_plain",
    "check_simply_moded",
    "check_well_moded",
    "classify_positions",
    "make_plain",
    "split_args",
]
