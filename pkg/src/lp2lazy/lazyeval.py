"""Call-by-need evaluator for FunIR.

Heap bindings are :class:`Thunk` objects.  A thunk starts delayed (a
closure), is marked in progress while it runs, and is overwritten with its
weak-head normal form afterwards, so every binding is computed at most
once.  Demanding a thunk that is still in progress, or a pattern variable
whose match has not happened yet, raises :class:`BlackHole`.

Lets are allocated when an alternative is entered, before any qualifier
runs, so a let may mention its own variables or later ones.  This is what
makes ``let (redwhites, whites) = distribute (t, whites, [])`` work.

Accounting: one step per guard alternative entered and one per builtin
comparison.
"""

from __future__ import annotations

import sys
import threading
from dataclasses import dataclass, field

from .syntax import Kind
from .terms import NIL, Atom, Compound, Int, Term, Var, cons, is_cons
from .translate import (
    AtomLit,
    BoolTest,
    BuiltinCall,
    Call,
    Construct,
    FailLit,
    FunProgram,
    IntLit,
    LetBind,
    PatternMatch,
    SucWrap,
    TupleExpr,
    VarRef,
    WILDCARD,
)

DEFAULT_BUDGET = 1_000_000


class EvalError(Exception):
    status = "error"


class BlackHole(EvalError):
    status = "black_hole"


class BudgetExceeded(EvalError):
    status = "budget_exceeded"


class MatchFailure(EvalError):
    status = "match_failure"


class InstantiationError(EvalError):
    status = "instantiation_error"


class EvalTypeError(EvalError):
    status = "type_error"


class InfiniteTerm(EvalError):
    status = "infinite_term"


# -- values ------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class IntV:
    value: int


@dataclass(frozen=True, slots=True)
class ConV:
    functor: str
    args: tuple  # of Thunk


@dataclass(frozen=True, slots=True)
class TupleV:
    items: tuple  # of Thunk


@dataclass(frozen=True, slots=True)
class SucV:
    payload: "Thunk"


@dataclass(frozen=True, slots=True)
class FailV:
    pass


@dataclass(frozen=True, slots=True)
class VarV:
    """An unbound logic variable that came in with a partially ground argument."""

    var: Var


FAIL = FailV()
UNIT_V = TupleV(())

DELAYED, IN_PROGRESS, EVALUATED, HOLE = "delayed", "in_progress", "evaluated", "hole"


class Thunk:
    __slots__ = ("state", "fn", "value", "ref", "label")

    def __init__(self, fn=None, value=None, label: str = ""):
        self.fn = fn
        self.value = value
        self.ref: Thunk | None = None
        self.label = label
        if value is not None:
            self.state = EVALUATED
        elif fn is not None:
            self.state = DELAYED
        else:
            self.state = HOLE

    @classmethod
    def of(cls, value) -> "Thunk":
        return cls(value=value)

    def resolve(self) -> "Thunk":
        t = self
        while t.ref is not None:
            t = t.ref
        return t

    def fill(self, target: "Thunk") -> None:
        target = target.resolve()
        if target is self:
            return
        self.ref = target
        self.state = EVALUATED if target.state == EVALUATED else self.state

    def __repr__(self) -> str:
        t = self.resolve()
        return f"<Thunk {t.label or ''} {t.state}>"


def force(t: Thunk):
    t = t.resolve()
    if t.state == EVALUATED:
        return t.value
    if t.state == IN_PROGRESS:
        raise BlackHole(f"binding {t.label or '?'} demanded while being evaluated")
    if t.state == HOLE:
        raise BlackHole(f"variable {t.label or '?'} demanded before its pattern was matched")
    fn, t.fn = t.fn, None
    t.state = IN_PROGRESS
    v = fn(t)
    t.value = v
    t.state = EVALUATED
    return v


# -- statistics ---------------------------------------------------------------


@dataclass
class EvalStats:
    steps: int = 0
    calls: int = 0
    builtins: int = 0
    abandoned: int = 0
    black_hole: bool = False

    def to_json(self) -> dict:
        return {
            "steps": self.steps,
            "calls": self.calls,
            "builtins": self.builtins,
            "abandoned_alternatives": self.abandoned,
            "black_hole": self.black_hole,
        }


# -- the machine ----------------------------------------------------------------


class Machine:
    """One evaluation heap over an immutable FunProgram."""

    def __init__(self, fp: FunProgram, budget: int = DEFAULT_BUDGET):
        self.fp = fp
        self.budget = budget
        self.stats = EvalStats()

    def tick(self) -> None:
        if self.stats.steps >= self.budget:
            raise BudgetExceeded(f"step budget {self.budget} exhausted")
        self.stats.steps += 1

    # expressions

    def delay(self, e, env: dict) -> Thunk:
        if isinstance(e, VarRef):
            return env[e.name]
        if isinstance(e, (IntLit, AtomLit, FailLit)):
            return Thunk.of(self.whnf(e, env))
        if isinstance(e, Construct) and not e.args:
            return Thunk.of(self.whnf(e, env))
        return Thunk(lambda _t: self.whnf(e, env))

    def whnf(self, e, env: dict):
        if isinstance(e, VarRef):
            return force(env[e.name])
        if isinstance(e, IntLit):
            return IntV(e.value)
        if isinstance(e, AtomLit):
            return ConV(e.name, ())
        if isinstance(e, Construct):
            return ConV(_functor(e.constructor), tuple(self.delay(a, env) for a in e.args))
        if isinstance(e, TupleExpr):
            return TupleV(tuple(self.delay(a, env) for a in e.items)) if e.items else UNIT_V
        if isinstance(e, Call):
            return self.call(e.function, [self.delay(a, env) for a in e.args])
        if isinstance(e, SucWrap):
            return SucV(self.delay(e.expr, env))
        if isinstance(e, FailLit):
            return FAIL
        if isinstance(e, BuiltinCall):
            return SucV(Thunk.of(UNIT_V)) if self.builtin(e, env) else FAIL
        raise TypeError(f"not an expression: {e!r}")

    def call(self, name: str, args: list):
        fn = self.fp.functions[name]
        if len(args) != fn.input_arity:
            raise EvalTypeError(f"{name} expects {fn.input_arity} arguments, got {len(args)}")
        self.stats.calls += 1
        params = dict(zip(fn.params, args))
        for alt in fn.alternatives:
            self.tick()
            env = self.enter(alt, params)
            if self.guards(alt, env):
                return self.whnf(alt.result, env)
            self.stats.abandoned += 1
        if fn.kind is Kind.TEST:
            return FAIL
        raise MatchFailure(f"no alternative of non-test function {name} applies")

    def enter(self, alt, params: dict) -> dict:
        env = dict(params)
        for q in alt.qualifiers:
            if isinstance(q, PatternMatch):
                for n in _pattern_vars(q.pattern):
                    env[n] = Thunk(label=n)
        for q in alt.qualifiers:
            if isinstance(q, LetBind):
                self.allocate_let(q, env)
        return env

    def allocate_let(self, q: LetBind, env: dict) -> None:
        bound = q.bound
        b = Thunk(lambda _t: self.whnf(bound, env), label=_label(q.pattern))
        pat = q.pattern
        if isinstance(pat, VarRef):
            if pat.name != WILDCARD:
                env[pat.name] = b
        elif isinstance(pat, TupleExpr):
            n = len(pat.items)
            for i, item in enumerate(pat.items):
                if item.name != WILDCARD:
                    env[item.name] = Thunk(_projection(b, i, n), label=item.name)
        else:
            raise TypeError(f"let pattern must be variables: {pat!r}")

    def guards(self, alt, env: dict) -> bool:
        for q in alt.qualifiers:
            if isinstance(q, LetBind):
                continue
            if isinstance(q, BoolTest):
                if not self.builtin(q.call, env):
                    return False
            elif not self.match_qualifier(q, env):
                return False
        return True

    def match_qualifier(self, q: PatternMatch, env: dict) -> bool:
        pat, scr = q.pattern, q.scrutinee
        if isinstance(pat, TupleExpr) and isinstance(scr, TupleExpr) and len(pat.items) == len(scr.items):
            return all(self.match(p, self.delay(s, env), env) for p, s in zip(pat.items, scr.items))
        return self.match(pat, self.delay(scr, env), env)

    def match(self, pat, t: Thunk, env: dict) -> bool:
        if isinstance(pat, VarRef):
            if pat.name != WILDCARD:
                env[pat.name].fill(t)
            return True
        v = force(t)
        if isinstance(v, VarV):
            raise InstantiationError(f"pattern match on unbound variable {v.var.name}")
        if isinstance(pat, IntLit):
            return isinstance(v, IntV) and v.value == pat.value
        if isinstance(pat, AtomLit):
            return isinstance(v, ConV) and v.functor == pat.name and not v.args
        if isinstance(pat, Construct):
            f = _functor(pat.constructor)
            if not (isinstance(v, ConV) and v.functor == f and len(v.args) == len(pat.args)):
                return False
            return all(self.match(p, a, env) for p, a in zip(pat.args, v.args))
        if isinstance(pat, TupleExpr):
            if not (isinstance(v, TupleV) and len(v.items) == len(pat.items)):
                return False
            return all(self.match(p, a, env) for p, a in zip(pat.items, v.items))
        if isinstance(pat, SucWrap):
            if isinstance(v, FailV):
                return False
            if not isinstance(v, SucV):
                raise EvalTypeError("Suc pattern applied to a non-Result value")
            return self.match(pat.expr, v.payload, env)
        raise TypeError(f"not a pattern: {pat!r}")

    def builtin(self, call: BuiltinCall, env: dict) -> bool:
        self.tick()
        self.stats.builtins += 1
        a, b = (self.readback(self.delay(x, env)) for x in call.args)
        for x in (a, b):
            if not _ground(x):
                raise InstantiationError(f"comparison on non-ground operand {x}")
        op = call.op
        if op == "eq":
            return a == b
        if op == "neq":
            return a != b
        if not (isinstance(a, Int) and isinstance(b, Int)):
            raise EvalTypeError(f"{op} needs integer operands")
        return {"lt": a.value < b.value, "leq": a.value <= b.value, "gt": a.value > b.value, "geq": a.value >= b.value}[op]

    # readback

    def readback(self, t: Thunk) -> Term:
        """Deep-force ``t`` into a term.  List spines are walked iteratively."""
        return self._readback(t, frozenset())

    def _readback(self, t: Thunk, path: frozenset) -> Term:
        t = t.resolve()
        if id(t) in path:
            raise InfiniteTerm("value is cyclic")
        v = force(t)
        if isinstance(v, IntV):
            return Int(v.value)
        if isinstance(v, VarV):
            return v.var
        if isinstance(v, ConV) and v.functor == "." and len(v.args) == 2:
            heads = []
            spine: set = set()
            node = t
            while True:
                node = node.resolve()
                if id(node) in spine or id(node) in path:
                    raise InfiniteTerm("list is cyclic")
                spine.add(id(node))
                cell = force(node)
                if not (isinstance(cell, ConV) and cell.functor == "." and len(cell.args) == 2):
                    break
                heads.append(cell.args[0])
                node = cell.args[1]
            inner = path | spine
            out = self._readback(node, path) if not _is_nil(force(node)) else NIL
            for h in reversed(heads):
                out = cons(self._readback(h, inner), out)
            return out
        if isinstance(v, ConV):
            if not v.args:
                return Atom(v.functor)
            inner = path | {id(t)}
            return Compound(v.functor, tuple(self._readback(a, inner) for a in v.args))
        if isinstance(v, TupleV):
            inner = path | {id(t)}
            return Compound("()", tuple(self._readback(a, inner) for a in v.items)) if v.items else Atom("()")
        if isinstance(v, SucV):
            return Compound("Suc", (self._readback(v.payload, path | {id(t)}),))
        if isinstance(v, FailV):
            return Atom("Fail")
        raise TypeError(v)


def _is_nil(v) -> bool:
    return isinstance(v, ConV) and v.functor == "[]" and not v.args


def _functor(ctor: str) -> str:
    return "." if ctor == ":" else ctor


def _label(pat) -> str:
    if isinstance(pat, VarRef):
        return pat.name
    if isinstance(pat, TupleExpr):
        return "(" + ",".join(_label(p) for p in pat.items) + ")"
    return "?"


def _projection(b: Thunk, i: int, n: int):
    def project(t: Thunk):
        v = force(b)
        if not (isinstance(v, TupleV) and len(v.items) == n):
            raise EvalTypeError(f"expected a {n}-tuple")
        target = v.items[i].resolve()
        t.ref = target
        return force(target)

    return project


def _pattern_vars(pat) -> list[str]:
    out = []
    stack = [pat]
    while stack:
        p = stack.pop()
        if isinstance(p, VarRef):
            if p.name != WILDCARD:
                out.append(p.name)
        elif isinstance(p, Construct):
            stack.extend(p.args)
        elif isinstance(p, TupleExpr):
            stack.extend(p.items)
        elif isinstance(p, SucWrap):
            stack.append(p.expr)
    return out


def _ground(t: Term) -> bool:
    stack = [t]
    while stack:
        t = stack.pop()
        if isinstance(t, Var):
            return False
        if isinstance(t, Compound):
            stack.extend(t.args)
    return True


def inject(t: Term) -> Thunk:
    """Turn an argument term into an already-evaluated heap structure."""
    if isinstance(t, Var):
        return Thunk.of(VarV(t))
    if isinstance(t, Int):
        return Thunk.of(IntV(t.value))
    if isinstance(t, Atom):
        return Thunk.of(ConV(t.name, ()))
    if is_cons(t):
        items = []
        while is_cons(t):
            items.append(t.args[0])
            t = t.args[1]
        out = inject(t)
        for item in reversed(items):
            out = Thunk.of(ConV(".", (inject(item), out)))
        return out
    return Thunk.of(ConV(t.functor, tuple(inject(a) for a in t.args)))


# -- running with a deep stack ----------------------------------------------------

_STACK_BYTES = 512 * 1024 * 1024
_stack_lock = threading.Lock()


def run_deep(fn, *args, **kwargs):
    """Run ``fn`` on a thread with a large C stack and a high recursion limit."""
    box: dict = {}

    def target():
        try:
            box["value"] = fn(*args, **kwargs)
        except BaseException as exc:  # re-raised in the caller
            box["error"] = exc

    if sys.getrecursionlimit() < 1_000_000:
        sys.setrecursionlimit(1_000_000)
    with _stack_lock:
        old = threading.stack_size(_STACK_BYTES)
        try:
            th = threading.Thread(target=target, name="lazyeval")
            th.start()
        finally:
            threading.stack_size(old)
    th.join()
    if "error" in box:
        raise box["error"]
    return box.get("value")


# -- entry points ---------------------------------------------------------------


@dataclass
class EvalResult:
    status: str  # value | fail | black_hole | budget_exceeded | match_failure | instantiation_error | ...
    value: object = None  # Term, or tuple of Terms for several outputs
    stats: EvalStats = field(default_factory=EvalStats)
    message: str = ""
    kind: Kind = Kind.NONTEST

    @property
    def ok(self) -> bool:
        return self.status == "value"

    @property
    def failed(self) -> bool:
        return self.status == "fail"


def _outputs(m: Machine, v, arity: int):
    if arity == 0:
        return ()
    if arity == 1:
        return (m._readback(v, frozenset()),)
    t = force(v)
    if not (isinstance(t, TupleV) and len(t.items) == arity):
        raise EvalTypeError(f"expected a {arity}-tuple result")
    return tuple(m.readback(x) for x in t.items)


def _eval(fp: FunProgram, fname: str, args, budget: int) -> EvalResult:
    fn = fp.functions[fname]
    m = Machine(fp, budget)
    try:
        v = m.call(fname, [inject(a) for a in args])
        if fn.kind is Kind.TEST:
            if isinstance(v, FailV):
                return EvalResult("fail", None, m.stats, kind=fn.kind)
            if not isinstance(v, SucV):
                raise EvalTypeError("test function returned a non-Result value")
            outs = _outputs(m, v.payload, fn.output_arity)
        else:
            outs = _outputs(m, Thunk.of(v), fn.output_arity)
        return EvalResult("value", outs, m.stats, kind=fn.kind)
    except EvalError as exc:
        m.stats.black_hole = isinstance(exc, BlackHole)
        return EvalResult(exc.status, None, m.stats, str(exc), kind=fn.kind)


def eval_call(fp: FunProgram, fname: str, args, budget: int = DEFAULT_BUDGET) -> EvalResult:
    """Evaluate ``fname`` on argument terms and read the result back.

    The returned value is the tuple of output terms (empty for no outputs).
    Errors inside the evaluation come back as a status rather than raising.
    """
    if fname not in fp.functions:
        raise KeyError(f"no function {fname}")
    return run_deep(_eval, fp, fname, list(args), budget)


run_with_stats = eval_call


def force_deep(t: Thunk, machine: Machine | None = None) -> Term:
    """Read a heap binding back as a term; may raise BlackHole or InfiniteTerm."""
    machine = machine or Machine(FunProgram())
    return run_deep(machine.readback, t)


__all__ = [
    "BlackHole",
    "BudgetExceeded",
    "EvalError",
    "EvalResult",
    "EvalStats",
    "InfiniteTerm",
    "InstantiationError",
    "Machine",
    "MatchFailure",
    "Thunk",
    "eval_call",
    "force",
    "force_deep",
    "inject",
    "run_deep",
    "run_with_stats",
]
