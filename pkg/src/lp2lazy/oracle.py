"""Reference LD-resolution interpreter and the dynamic monitors built on it.

The interpreter is the usual Prolog strategy: leftmost selection, clauses
tried in source order, depth-first, with explicit limits.  It keeps each
resolvent as an explicit goal tuple so that callers (and the monitors)
can inspect every intermediate query.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .syntax import BUILTINS, Clause, Kind, Program, Query
from .terms import (
    Compound,
    Int,
    Term,
    Var,
    functor_of,
    is_ground,
    iter_vars,
    make_atom,
    print_goal,
    print_term,
    rename,
    substitute,
    variant,
)

log = logging.getLogger(__name__)
_warned: set = set()

Substitution = dict  # Var -> Term, idempotent


class Floundered(Exception):
    """A builtin was selected before its arguments were ground."""

    def __init__(self, atom: Term, answers=()):
        super().__init__(f"floundered on {print_goal(atom)}")
        self.atom = atom
        self.answers = list(answers)


class BuiltinTypeError(TypeError):
    pass


# -- unification ---------------------------------------------------------------


def _walk(t: Term, s: Mapping) -> Term:
    while isinstance(t, Var) and t in s:
        t = s[t]
    return t


def _occurs(v: Var, t: Term, s: Mapping) -> bool:
    stack = [t]
    while stack:
        t = _walk(stack.pop(), s)
        if t == v:
            return True
        if isinstance(t, Compound):
            stack.extend(t.args)
    return False


def _resolve(s: dict) -> Substitution:
    """Turn a triangular binding set into an idempotent substitution."""
    out: dict = {}

    def full(t: Term) -> Term:
        while True:
            t2 = substitute(t, s)
            if t2 == t:
                return t
            t = t2

    for v in s:
        out[v] = full(v)
    return out


def unify(a: Term, b: Term, occurs_check: bool = True) -> Substitution | None:
    """Most general unifier of ``a`` and ``b``, or ``None`` when there is none.

    Without the occurs check, ``X = f(X)`` yields a cyclic binding that is
    returned in triangular form; this mode is unsound and only there for
    experiments.
    """
    s: dict = {}
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x = _walk(x, s)
        y = _walk(y, s)
        if x is y:
            continue
        if isinstance(x, Var):
            if x == y:
                continue
            if occurs_check and _occurs(x, y, s):
                return None
            s[x] = y
        elif isinstance(y, Var):
            if occurs_check and _occurs(y, x, s):
                return None
            s[y] = x
        elif isinstance(x, Compound) and isinstance(y, Compound):
            if x.functor != y.functor or len(x.args) != len(y.args):
                return None
            stack.extend(zip(x.args, y.args))
        elif x != y:
            return None
    return _resolve(s) if occurs_check else s


def match(pattern: Term, target: Term) -> Substitution | None:
    """One-way matching: bind only variables of ``pattern`` so it equals ``target``."""
    s: dict = {}
    stack = [(pattern, target)]
    while stack:
        p, t = stack.pop()
        if isinstance(p, Var):
            if p in s:
                if s[p] != t:
                    return None
            else:
                s[p] = t
        elif isinstance(p, Compound):
            if not (isinstance(t, Compound) and t.functor == p.functor and len(t.args) == len(p.args)):
                return None
            stack.extend(zip(p.args, t.args))
        elif p != t:
            return None
    return s


# -- builtins --------------------------------------------------------------------


def eval_builtin(goal: Term) -> bool:
    """Evaluate a ground comparison.  Raises :class:`Floundered` when not ground."""
    op = goal.functor
    a, b = goal.args
    if not (is_ground(a) and is_ground(b)):
        raise Floundered(goal)
    if op == "==":
        return a == b
    if op == "\\==":
        return a != b
    if not (isinstance(a, Int) and isinstance(b, Int)):
        raise BuiltinTypeError(f"{op} needs integers: {print_goal(goal)}")
    x, y = a.value, b.value
    return {"<": x < y, "=<": x <= y, ">": x > y, ">=": x >= y}[op]


# -- resolution ----------------------------------------------------------------


def rename_clause(c: Clause) -> Clause:
    m: dict = {}
    return Clause(rename(c.head, m), tuple(rename(g, m) for g in c.body))


def resolve_step(query, clause: Clause, occurs_check: bool = True):
    """Resolve the leftmost atom of ``query`` with an already renamed ``clause``.

    Returns ``(resolvent, mgu)`` or ``None`` when the head does not unify.
    """
    query = tuple(query)
    if not query:
        raise ValueError("empty query")
    mgu = unify(query[0], clause.head, occurs_check)
    if mgu is None:
        return None
    resolvent = tuple(substitute(g, mgu) for g in clause.body + query[1:])
    return resolvent, mgu


@dataclass(frozen=True)
class DerivationLimits:
    max_steps: int = 100_000
    max_depth: int = 10_000
    max_answers: int = 100

    def __post_init__(self):
        if min(self.max_steps, self.max_depth, self.max_answers) <= 0:
            raise ValueError("derivation limits must be positive")

    @classmethod
    def parse(cls, spec: str) -> "DerivationLimits":
        """Parse ``steps=N,depth=D,answers=K`` (any subset)."""
        names = {"steps": "max_steps", "depth": "max_depth", "answers": "max_answers"}
        kw = {}
        for part in filter(None, (p.strip() for p in spec.split(","))):
            key, _, val = part.partition("=")
            if key not in names:
                raise ValueError(f"unknown limit {key!r}")
            kw[names[key]] = int(val)
        return cls(**kw)


@dataclass(frozen=True)
class Answer:
    bindings: tuple  # ((name, term), ...) in query-variable order
    length: int

    def as_dict(self) -> dict:
        return dict(self.bindings)

    def __str__(self) -> str:
        if not self.bindings:
            return "yes"
        return "\n".join(f"{n} = {print_term(t)}" for n, t in _readable(self.bindings))


def _readable(bindings):
    """Give unbound variables in answers stable names ``_G1``, ``_G2``, ..."""
    names: dict = {}
    out = []
    for n, t in bindings:
        for v in iter_vars(t):
            names.setdefault(v, Var(f"_G{len(names) + 1}", v.id))
        out.append((n, substitute(t, names)))
    return out


@dataclass
class SolveResult:
    answers: list = field(default_factory=list)
    exhausted: bool = False
    limit_hit: str | None = None
    steps: int = 0
    failed_branches: int = 0


SelectHook = Callable[[Term, tuple], None]
ResolveHook = Callable[[Term, Clause, Substitution, tuple], None]


class _StepLimit(Exception):
    pass


def ld_solve(
    program: Program,
    query,
    limits: DerivationLimits | None = None,
    *,
    occurs_check: bool = True,
    on_select: SelectHook | None = None,
    on_resolve: ResolveHook | None = None,
) -> SolveResult:
    """Enumerate LD answers depth-first in clause order, within ``limits``.

    ``query`` is a :class:`Query` or a sequence of atoms.  Raises
    :class:`Floundered` when a comparison is selected with non-ground
    arguments; the exception carries the answers found before that point.
    """
    limits = limits or DerivationLimits()
    if isinstance(query, Query):
        atoms, qvars = tuple(query.atoms), tuple(query.variables)
    else:
        atoms = tuple(query)
        qvars = tuple(v for v in _vars_in(atoms) if v.name != "_")
    if program.delays and id(program) not in _warned:
        _warned.add(id(program))
        log.warning("delay declarations are ignored; the leftmost selection rule is used")
    result = SolveResult()
    # each frame: (goals, instantiated query variables, derivation length)
    stack = [(atoms, tuple(qvars), 0)]
    while stack:
        goals, inst, depth = stack.pop()
        if not goals:
            result.answers.append(Answer(tuple((v.name, t) for v, t in zip(qvars, inst)), depth))
            if len(result.answers) >= limits.max_answers:
                result.limit_hit = "answers"
                return result
            continue
        if depth >= limits.max_depth:
            result.limit_hit = "depth"
            continue
        if result.steps >= limits.max_steps:
            result.limit_hit = "steps"
            return result
        atom = goals[0]
        if on_select is not None:
            on_select(atom, goals)
        pred = functor_of(atom)
        result.steps += 1
        if pred in BUILTINS:
            if pred == ("=", 2):
                mgu = unify(atom.args[0], atom.args[1], occurs_check)
            else:
                try:
                    ok = eval_builtin(atom)
                except Floundered as exc:
                    raise Floundered(exc.atom, result.answers) from None
                mgu = {} if ok else None
            if mgu is None:
                result.failed_branches += 1
                continue
            stack.append(
                (tuple(substitute(g, mgu) for g in goals[1:]), tuple(substitute(t, mgu) for t in inst), depth + 1)
            )
            continue
        children = []
        for clause in program.clauses.get(pred, ()):
            renamed = rename_clause(clause)
            step = resolve_step(goals, renamed, occurs_check)
            if step is None:
                continue
            resolvent, mgu = step
            if on_resolve is not None:
                on_resolve(atom, renamed, mgu, resolvent)
            children.append((resolvent, tuple(substitute(t, mgu) for t in inst), depth + 1))
        if not children:
            result.failed_branches += 1
        stack.extend(reversed(children))
    result.exhausted = result.limit_hit is None
    return result


def _vars_in(atoms):
    seen: dict = {}
    for a in atoms:
        for v in iter_vars(a):
            seen.setdefault(v, None)
    return list(seen)


# -- monitors ------------------------------------------------------------------


def _well_moded_query(program: Program, atoms) -> bool:
    from .modes import check_well_moded

    probe = Program({}, program.modes, program.kinds, [Query(tuple(atoms))])
    return check_well_moded(probe).ok


def _simply_moded_query(program: Program, atoms) -> bool:
    from .modes import check_simply_moded

    probe = Program({}, program.modes, program.kinds, [Query(tuple(atoms))])
    return check_simply_moded(probe).ok


def _io(atom: Term, program: Program):
    from .modes import split_args

    return split_args(atom, program)


@dataclass
class MonitorReport:
    monitor: str
    refused: str | None = None
    checked: int = 0
    violations: list = field(default_factory=list)
    answers: int = 0
    limit_hit: str | None = None
    floundered: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.refused is None and not self.violations

    def to_json(self) -> dict:
        return {
            "monitor": self.monitor,
            "refused": self.refused,
            "checked": self.checked,
            "violations": list(self.violations),
            "answers": self.answers,
            "limit_hit": self.limit_hit,
            "floundered": self.floundered,
            **self.extra,
        }


def _run(program, query, limits, report: MonitorReport, **hooks) -> SolveResult | None:
    try:
        res = ld_solve(program, query, limits, **hooks)
    except Floundered as exc:
        report.floundered = print_goal(exc.atom)
        report.answers = len(exc.answers)
        return None
    report.answers = len(res.answers)
    report.limit_hit = res.limit_hit
    return res


def _atoms(query) -> tuple:
    return tuple(query.atoms) if isinstance(query, Query) else tuple(query)


def monitor_groundness(program: Program, query, limits=None, *, require_well_moded: bool = True) -> MonitorReport:
    """Check that every selected atom is ground in its input positions."""
    from .modes import check_well_moded

    rep = MonitorReport("groundness")
    if require_well_moded and not (check_well_moded(program).ok and _well_moded_query(program, _atoms(query))):
        rep.refused = "program or query is not well-moded"
        return rep

    def on_select(atom, goals):
        rep.checked += 1
        ins, _ = _io(atom, program)
        for t in ins:
            if not is_ground(t):
                rep.violations.append(f"non-ground input {print_term(t)} in {print_goal(atom)}")

    _run(program, query, limits, rep, on_select=on_select)
    return rep


def monitor_persistence(program: Program, query, limits=None) -> MonitorReport:
    """Re-check well- (and, if applicable, simply-) modedness of every resolvent."""
    from .modes import check_simply_moded, check_well_moded

    rep = MonitorReport("persistence")
    atoms = _atoms(query)
    if not (check_well_moded(program).ok and _well_moded_query(program, atoms)):
        rep.refused = "program or query is not well-moded"
        return rep
    simply = check_simply_moded(program).ok and _simply_moded_query(program, atoms)
    rep.extra["simply_moded"] = simply

    def on_select(atom, goals):
        rep.checked += 1
        if not _well_moded_query(program, goals):
            rep.violations.append(f"resolvent not well-moded: {', '.join(map(print_goal, goals))}")
        if simply and not _simply_moded_query(program, goals):
            rep.violations.append(f"resolvent not simply moded: {', '.join(map(print_goal, goals))}")

    _run(program, query, limits, rep, on_select=on_select)
    return rep


def double_match(atom: Term, head: Term, program: Program) -> Substitution | None:
    """Input match from head to atom, then output match from atom to head."""
    a_in, a_out = _io(atom, program)
    h_in, h_out = _io(head, program)
    s1 = match(make_atom("in", h_in), make_atom("in", a_in)) if h_in else {}
    if s1 is None:
        return None
    target = [substitute(t, s1) for t in h_out]
    s2 = match(make_atom("out", a_out), make_atom("out", target)) if a_out else {}
    if s2 is None:
        return None
    return {**s1, **s2}


def monitor_double_matching(program: Program, query, limits=None) -> MonitorReport:
    """Compare the double matching against the mgu at every resolution step."""
    from .modes import check_simply_moded, check_well_moded

    rep = MonitorReport("double_matching")
    atoms = _atoms(query)
    if not (check_well_moded(program).ok and _well_moded_query(program, atoms)):
        rep.refused = "program or query is not well-moded"
        return rep
    if not (check_simply_moded(program).ok and _simply_moded_query(program, atoms)):
        rep.refused = "program or query is not simply moded"
        return rep

    def on_resolve(atom, clause, mgu, resolvent):
        rep.checked += 1
        dm = double_match(atom, clause.head, program)
        if dm is None:
            rep.violations.append(f"double matching failed where unification succeeded: {print_goal(atom)}")
            return
        ctx = (atom, clause.head, *clause.body)
        via_dm = tuple(substitute(t, dm) for t in ctx)
        via_mgu = tuple(substitute(t, mgu) for t in ctx)
        if via_dm[0] != via_dm[1] or not variant(via_dm, via_mgu):
            rep.violations.append(f"double matching differs from the mgu at {print_goal(atom)}")

    _run(program, query, limits, rep, on_resolve=on_resolve)
    return rep


def _test_prefix_succeeds(program: Program, clause: Clause, atom: Term, limits) -> bool | None:
    """Can ``clause`` complete its test atoms for the inputs of ``atom``?

    Returns None when the side search floundered or ran out of budget.
    """
    c = rename_clause(clause)
    a_in, _ = _io(atom, program)
    h_in, _ = _io(c.head, program)
    mgu = unify(make_atom("in", a_in), make_atom("in", h_in))
    if mgu is None:
        return False
    tests = [substitute(g, mgu) for g in c.body if program.kind(functor_of(g)) is Kind.TEST]
    if not tests:
        return True
    try:
        res = ld_solve(program, tests, DerivationLimits(limits.max_steps, limits.max_depth, 1))
    except Floundered:
        return None
    if res.answers:
        return True
    return False if res.exhausted else None


def monitor_input_discriminative(program: Program, query, limits=None) -> MonitorReport:
    """Bounded dynamic check that at most one clause's tests pass per input tuple."""
    limits = limits or DerivationLimits()
    rep = MonitorReport("input_discriminative")
    seen: set = set()
    inconclusive = []

    def on_select(atom, goals):
        pred = functor_of(atom)
        if pred in BUILTINS:
            return
        ins, _ = _io(atom, program)
        if not all(is_ground(t) for t in ins):
            return
        key = (pred, tuple(ins))
        if key in seen:
            return
        seen.add(key)
        rep.checked += 1
        group = program.clauses.get(pred, ())
        passing = []
        for i, clause in enumerate(group, start=1):
            ok = _test_prefix_succeeds(program, clause, atom, limits)
            if ok is None:
                inconclusive.append(f"{pred[0]}/{pred[1]} clause {i}")
            elif ok:
                passing.append(i)
        if len(passing) > 1:
            rep.violations.append(
                {
                    "predicate": f"{pred[0]}/{pred[1]}",
                    "inputs": [print_term(t) for t in ins],
                    "clauses": passing,
                }
            )

    res = _run(program, query, limits, rep, on_select=on_select)
    bounded = rep.limit_hit is not None or bool(inconclusive) or res is None
    if rep.violations:
        verdict = "ViolationWitness"
    else:
        verdict = "Discriminative-on-run (bounded)" if bounded else "Discriminative-on-run"
    rep.extra["verdict"] = verdict
    rep.extra["inconclusive"] = inconclusive
    rep.extra["under_reports"] = rep.answers > 1
    return rep


def monitor_partition_correctness(program: Program, query, limits=None) -> MonitorReport:
    """Every selected non-test atom should have at least one successful derivation."""
    limits = limits or DerivationLimits()
    side = DerivationLimits(limits.max_steps * 10, limits.max_depth * 10, 1)
    rep = MonitorReport("partition_correctness")
    cache: list = []
    inconclusive = []

    def on_select(atom, goals):
        pred = functor_of(atom)
        if pred in BUILTINS or program.kind(pred) is not Kind.NONTEST:
            return
        rep.checked += 1
        for seen_atom, verdict in cache:
            if variant((seen_atom,), (atom,)):
                break
        else:
            try:
                res = ld_solve(program, (atom,), side)
                verdict = True if res.answers else (False if res.exhausted else None)
            except Floundered:
                verdict = None
            cache.append((atom, verdict))
        if verdict is False:
            rep.violations.append(f"non-test atom has no successful derivation: {print_goal(atom)}")
        elif verdict is None:
            inconclusive.append(print_goal(atom))

    _run(program, query, limits, rep, on_select=on_select)
    rep.extra["inconclusive"] = inconclusive
    return rep


__all__ = [
    "Answer",
    "BuiltinTypeError",
    "DerivationLimits",
    "Floundered",
    "MonitorReport",
    "SolveResult",
    "double_match",
    "eval_builtin",
    "ld_solve",
    "match",
    "monitor_double_matching",
    "monitor_groundness",
    "monitor_input_discriminative",
    "monitor_partition_correctness",
    "monitor_persistence",
    "rename_clause",
    "resolve_step",
    "unify",
]

