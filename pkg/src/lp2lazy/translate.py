"""Literal translation of a consistent, plain, partitioned program into FunIR.

Each predicate becomes one function whose guard alternatives are its
clauses in source order.  An alternative first matches the head input
terms against the parameter tuple, then has one qualifier per body atom,
in body order:

* a test call becomes ``Suc (outs) <- p (ins)``,
* a non-test call becomes ``let (outs) = q (ins)``,
* a comparison becomes a boolean test and ``pat = t`` becomes ``pat <- t``,

and finally returns the head output terms (wrapped in ``Suc`` for test
predicates, which also get a trailing ``otherwise = Fail``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .modes import check_consistent, check_plain, split_args
from .syntax import BUILTINS, Clause, Kind, Program
from .terms import NIL, Atom, Int, Term, Var, functor_of, is_cons, list_items

# -- IR ------------------------------------------------------------------------


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class AtomLit:
    name: str


@dataclass(frozen=True)
class Construct:
    constructor: str
    args: tuple


@dataclass(frozen=True)
class TupleExpr:
    items: tuple


@dataclass(frozen=True)
class Call:
    function: str
    args: tuple


@dataclass(frozen=True)
class SucWrap:
    expr: "FunExpr"


@dataclass(frozen=True)
class FailLit:
    pass


@dataclass(frozen=True)
class BuiltinCall:
    op: str
    args: tuple


FunExpr = Union[VarRef, IntLit, AtomLit, Construct, TupleExpr, Call, SucWrap, FailLit, BuiltinCall]

UNIT = TupleExpr(())
WILDCARD = "_"


@dataclass(frozen=True)
class PatternMatch:
    pattern: FunExpr
    scrutinee: FunExpr


@dataclass(frozen=True)
class LetBind:
    pattern: FunExpr  # VarRef or TupleExpr of VarRefs
    bound: FunExpr


@dataclass(frozen=True)
class BoolTest:
    call: BuiltinCall


Qualifier = Union[PatternMatch, LetBind, BoolTest]


@dataclass(frozen=True)
class Alternative:
    qualifiers: tuple
    result: FunExpr


@dataclass(frozen=True)
class Function:
    name: str
    kind: Kind
    params: tuple
    alternatives: tuple
    input_arity: int
    output_arity: int

    @property
    def otherwise_fail(self) -> bool:
        return self.kind is Kind.TEST


@dataclass
class FunProgram:
    functions: dict = field(default_factory=dict)  # name -> Function, predicate order

    def __getitem__(self, name: str) -> Function:
        return self.functions[name]


class TranslationError(Exception):
    pass


class NotPlain(TranslationError):
    pass


class NotConsistent(TranslationError):
    pass


class UnknownPredicate(TranslationError):
    pass


BUILTIN_OPS = {"==": "eq", "\\==": "neq", "<": "lt", "=<": "leq", ">": "gt", ">=": "geq"}
HASKELL_OPS = {"eq": "==", "neq": "/=", "lt": "<", "leq": "<=", "gt": ">", "geq": ">="}

_KEYWORDS = frozenset(
    "case class data default deriving do else foreign if import in infix infixl infixr "
    "instance let module newtype of then type where otherwise".split()
)


# -- naming --------------------------------------------------------------------


def function_name(pred) -> str:
    """Predicates are distinguished by name and arity; arity only shows when needed."""
    return pred[0]


def _fun_names(program: Program) -> dict:
    names = {}
    by_name: dict = {}
    for pred in program.predicates():
        by_name.setdefault(pred[0], []).append(pred)
    for name, preds in by_name.items():
        for pred in preds:
            names[pred] = name if len(preds) == 1 else f"{name}_{pred[1]}"
    return names


class _Scope:
    """Maps clause variables to distinct lowercase identifiers."""

    def __init__(self, reserved: set):
        self.reserved = set(reserved)
        self.names: dict = {}

    def name(self, v: Var) -> str:
        if v.name == "_":
            return WILDCARD
        got = self.names.get(v)
        if got is None:
            base = v.name[0].lower() + v.name[1:]
            got = base
            while got in self.reserved or got in _KEYWORDS:
                got += "'"
            self.reserved.add(got)
            self.names[v] = got
        return got


# -- the translation ------------------------------------------------------------


def translate_term(t: Term, scope: _Scope) -> FunExpr:
    if isinstance(t, Var):
        return VarRef(scope.name(t))
    if isinstance(t, Int):
        return IntLit(t.value)
    if isinstance(t, Atom):
        return Construct("[]", ()) if t == NIL else AtomLit(t.name)
    if is_cons(t):
        items, tail = list_items(t)
        out = translate_term(tail, scope)
        for item in reversed(items):
            out = Construct(":", (translate_term(item, scope), out))
        return out
    return Construct(t.functor, tuple(translate_term(a, scope) for a in t.args))


def _tuple(items: list) -> FunExpr:
    return items[0] if len(items) == 1 else TupleExpr(tuple(items))


def translate_builtin(op: str, args: tuple, scope: _Scope | None = None):
    """Turn a builtin goal into a qualifier.

    ``args`` may be terms (translated with ``scope``) or FunExprs already.
    Comparisons give a :class:`BoolTest`; ``pat = t`` gives a pattern match.
    """
    if scope is not None:
        args = tuple(translate_term(a, scope) for a in args)
    if op == "=":
        return PatternMatch(args[0], args[1])
    if op not in BUILTIN_OPS:
        raise TranslationError(f"unknown builtin {op}")
    return BoolTest(BuiltinCall(BUILTIN_OPS[op], tuple(args)))


def _clause_alternative(clause: Clause, program: Program, params: tuple, names: dict, kind: Kind) -> Alternative:
    scope = _Scope(set(params) | set(names.values()))
    hin, hout = split_args(clause.head, program)
    quals: list = []
    if hin:
        pattern = _tuple([translate_term(t, scope) for t in hin])
        quals.append(PatternMatch(pattern, _tuple([VarRef(p) for p in params])))
    for atom in clause.body:
        pred = functor_of(atom)
        if pred in BUILTINS:
            quals.append(translate_builtin(pred[0], atom.args, scope))
            continue
        if pred not in names or not program.defines(pred):
            raise UnknownPredicate(f"call to undeclared predicate {pred[0]}/{pred[1]}")
        ins, outs = split_args(atom, program)
        call = Call(names[pred], tuple(translate_term(t, scope) for t in ins))
        out_pat = _tuple([translate_term(t, scope) for t in outs]) if outs else UNIT
        if program.kind(pred) is Kind.TEST:
            quals.append(PatternMatch(SucWrap(out_pat), call))
        else:
            quals.append(LetBind(out_pat, call))
    result = _tuple([translate_term(t, scope) for t in hout]) if hout else UNIT
    if kind is Kind.TEST:
        result = SucWrap(result)
    _check_single_binding(clause, quals)
    return Alternative(tuple(quals), result)


def _bound_names(expr: FunExpr) -> list[str]:
    out = []
    stack = [expr]
    while stack:
        e = stack.pop()
        if isinstance(e, VarRef):
            if e.name != WILDCARD:
                out.append(e.name)
        elif isinstance(e, (Construct,)):
            stack.extend(e.args)
        elif isinstance(e, TupleExpr):
            stack.extend(e.items)
        elif isinstance(e, SucWrap):
            stack.append(e.expr)
    return out


def binders(q: Qualifier) -> list[str]:
    if isinstance(q, (PatternMatch, LetBind)):
        return _bound_names(q.pattern)
    return []


def _check_single_binding(clause: Clause, quals: list) -> None:
    seen: set = set()
    for q in quals:
        for n in binders(q):
            if n in seen:
                raise NotPlain(f"variable {n} is bound twice in: {clause}")
            seen.add(n)


def translate(program: Program, *, check: bool = True) -> FunProgram:
    """Translate every predicate of ``program`` into one function."""
    for clause in program.all_clauses():
        for atom in clause.body:
            pred = functor_of(atom)
            if pred not in BUILTINS and pred not in program.modes:
                raise UnknownPredicate(f"call to undeclared predicate {pred[0]}/{pred[1]} in: {clause}")
    if check:
        rep = check_consistent(program)
        if not rep.ok:
            raise NotConsistent("; ".join(f"{v.variable} in {v.where}" for v in rep.violations))
        rep = check_plain(program)
        if not rep.ok:
            raise NotPlain("; ".join(f"{v.variable}: {v.reason} in {v.where}" for v in rep.violations))
    names = _fun_names(program)
    fp = FunProgram()
    for pred in program.predicates():
        mode = program.mode(pred)
        n_in, n_out = len(mode.inputs), len(mode.outputs)
        params = tuple(f"x{i}" for i in range(1, n_in + 1))
        kind = program.kind(pred)
        alts = tuple(
            _clause_alternative(c, program, params, names, kind) for c in program.clauses.get(pred, ())
        )
        fp.functions[names[pred]] = Function(names[pred], kind, params, alts, n_in, n_out)
    return fp


# -- structural checks ------------------------------------------------------------


def calls_in(expr: FunExpr):
    stack = [expr]
    while stack:
        e = stack.pop()
        if isinstance(e, Call):
            yield e
            stack.extend(e.args)
        elif isinstance(e, (Construct, BuiltinCall)):
            stack.extend(e.args)
        elif isinstance(e, TupleExpr):
            stack.extend(e.items)
        elif isinstance(e, SucWrap):
            stack.append(e.expr)


def kind_discipline_violations(fp: FunProgram) -> list[str]:
    """Test calls may only feed ``Suc`` patterns, non-test calls only lets."""
    bad = []
    for f in fp.functions.values():
        for alt in f.alternatives:
            for q in alt.qualifiers:
                if isinstance(q, LetBind):
                    top, inner = q.bound, []
                elif isinstance(q, PatternMatch):
                    top, inner = q.scrutinee, []
                else:
                    top, inner = None, list(q.call.args)
                if top is not None and isinstance(top, Call):
                    callee = fp.functions[top.function]
                    if isinstance(q, LetBind) and callee.kind is Kind.TEST:
                        bad.append(f"{f.name}: test function {callee.name} bound by let")
                    if isinstance(q, PatternMatch) and not (
                        callee.kind is Kind.TEST and isinstance(q.pattern, SucWrap)
                    ):
                        bad.append(f"{f.name}: {callee.name} matched without Suc")
                    inner = list(top.args)
                elif top is not None:
                    inner = [top]
                for e in inner:
                    for c in calls_in(e):
                        bad.append(f"{f.name}: nested call to {c.function}")
            for c in calls_in(alt.result):
                bad.append(f"{f.name}: call to {c.function} in a result")
    return bad


# -- Haskell emission -----------------------------------------------------------


def _hs_atom(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _hs_constructor(name: str) -> str:
    clean = "".join(ch if ch.isalnum() or ch == "_" else "_" for ch in name)
    return clean[:1].upper() + clean[1:]


def emit_expr(e: FunExpr, nested: bool = False) -> str:
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, IntLit):
        s = str(e.value)
        return f"({s})" if e.value < 0 else s
    if isinstance(e, AtomLit):
        return _hs_atom(e.name)
    if isinstance(e, Construct):
        if e.constructor == "[]":
            return "[]"
        if e.constructor == ":":
            parts = []
            while isinstance(e, Construct) and e.constructor == ":":
                parts.append(emit_expr(e.args[0], True))
                e = e.args[1]
            s = ":".join(parts + [emit_expr(e, True)])
            return f"({s})" if nested else s
        s = " ".join([_hs_constructor(e.constructor)] + [emit_expr(a, True) for a in e.args])
        return f"({s})" if nested else s
    if isinstance(e, TupleExpr):
        return "(" + ", ".join(emit_expr(x) for x in e.items) + ")"
    if isinstance(e, Call):
        if not e.args:
            return e.function
        if len(e.args) == 1:
            s = f"{e.function} {emit_expr(e.args[0], True)}"
        else:
            s = f"{e.function} (" + ", ".join(emit_expr(a) for a in e.args) + ")"
        return f"({s})" if nested else s
    if isinstance(e, SucWrap):
        s = f"Suc {emit_expr(e.expr, True)}"
        return f"({s})" if nested else s
    if isinstance(e, FailLit):
        return "Fail"
    if isinstance(e, BuiltinCall):
        a, b = e.args
        return f"{emit_expr(a, True)} {HASKELL_OPS[e.op]} {emit_expr(b, True)}"
    raise TypeError(e)


def emit_qualifier(q: Qualifier) -> str:
    if isinstance(q, PatternMatch):
        return f"{emit_expr(q.pattern)} <- {emit_expr(q.scrutinee)}"
    if isinstance(q, LetBind):
        return f"let {emit_expr(q.pattern)} = {emit_expr(q.bound)}"
    return emit_expr(q.call)


def emit_function(f: Function) -> str:
    if not f.params:
        head = f.name
    elif len(f.params) == 1:
        head = f"{f.name} {f.params[0]}"
    else:
        head = f"{f.name} (" + ", ".join(f.params) + ")"
    alts = f.alternatives
    if len(alts) == 1 and not alts[0].qualifiers and not f.otherwise_fail:
        return f"{head} = {emit_expr(alts[0].result)}\n"
    lines = [head]
    for alt in alts:
        quals = [emit_qualifier(q) for q in alt.qualifiers] or ["True"]
        lines.append(f"  | {quals[0]}")
        lines.extend(f"  , {q}" for q in quals[1:])
        lines.append(f"  = {emit_expr(alt.result)}")
    if f.otherwise_fail:
        lines.append("  | otherwise = Fail")
    if not alts and not f.otherwise_fail:
        lines.append("  | otherwise = error \"no clauses\"")
    return "\n".join(lines) + "\n"


RESULT_DECL = "data Result a = Suc a | Fail\n"


def emit_haskell(fp: FunProgram) -> str:
    """Render the program in pattern-guard style, one definition per function."""
    parts = [RESULT_DECL]
    parts.extend(emit_function(f) for f in fp.functions.values())
    return "\n".join(parts)


# -- IR dump --------------------------------------------------------------------


def ir_to_json(node):
    """Plain-data rendering of the IR for ``--dump-ir``."""
    if isinstance(node, FunProgram):
        return {"functions": [ir_to_json(f) for f in node.functions.values()]}
    if isinstance(node, Function):
        return {
            "name": node.name,
            "kind": node.kind.value,
            "params": list(node.params),
            "input_arity": node.input_arity,
            "output_arity": node.output_arity,
            "otherwise_fail": node.otherwise_fail,
            "alternatives": [ir_to_json(a) for a in node.alternatives],
        }
    if isinstance(node, Alternative):
        return {"qualifiers": [ir_to_json(q) for q in node.qualifiers], "result": ir_to_json(node.result)}
    if isinstance(node, (tuple, list)):
        return [ir_to_json(x) for x in node]
    if isinstance(node, Kind):
        return node.value
    if hasattr(node, "__dataclass_fields__"):
        out = {"node": type(node).__name__}
        for k in node.__dataclass_fields__:
            out[k] = ir_to_json(getattr(node, k))
        return out
    return node


__all__ = [
    "Alternative",
    "AtomLit",
    "BoolTest",
    "BuiltinCall",
    "Call",
    "Construct",
    "FailLit",
    "FunProgram",
    "Function",
    "IntLit",
    "LetBind",
    "NotConsistent",
    "NotPlain",
    "PatternMatch",
    "SucWrap",
    "TranslationError",
    "TupleExpr",
    "UnknownPredicate",
    "VarRef",
    "emit_haskell",
    "ir_to_json",
    "kind_discipline_violations",
    "translate",
    "translate_builtin",
]

