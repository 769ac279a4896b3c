"""Shared test utilities: fixture loading, term generators, reference solvers."""

from __future__ import annotations

import itertools
import random
from pathlib import Path

from lp2lazy.modes import check_plain, make_plain
from lp2lazy.syntax import Program, parse_program
from lp2lazy.terms import Atom, Compound, Int, Term, Var, fresh_id, print_term, substitute
from lp2lazy.translate import translate

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
GOLDEN = FIXTURES / "golden"
QUERIES = FIXTURES / "queries"

FIXTURE_FILES = sorted(p.name for p in FIXTURES.glob("*.lp"))


def load(name: str) -> Program:
    return parse_program((FIXTURES / name).read_text())


def load_plain(name: str) -> Program:
    p = load(name)
    return p if check_plain(p).ok else make_plain(p)


def load_fun(name: str, kinds: dict | None = None):
    p = load_plain(name)
    if kinds:
        p = p.with_kinds(kinds)
    return translate(p)


def int_list(xs) -> str:
    return "[" + ",".join(str(x) for x in xs) + "]"


# -- the three-symbol signature a/0, f/1, g/2 ----------------------------------------

VAR_NAMES = ("X", "Y", "Z")


def make_vars() -> dict:
    return {n: Var(n, fresh_id()) for n in VAR_NAMES}


def random_term(rng: random.Random, vars_: dict, depth: int) -> Term:
    if depth == 0 or rng.random() < 0.3:
        return rng.choice([Atom("a"), *vars_.values()])
    k = rng.random()
    if k < 0.45:
        return Compound("f", (random_term(rng, vars_, depth - 1),))
    if k < 0.9:
        return Compound("g", (random_term(rng, vars_, depth - 1), random_term(rng, vars_, depth - 1)))
    return Atom("a")


GROUND_UNIVERSE = (
    Atom("a"),
    Compound("f", (Atom("a"),)),
    Compound("g", (Atom("a"), Atom("a"))),
    Compound("f", (Compound("f", (Atom("a"),)),)),
    Compound("g", (Atom("a"), Compound("f", (Atom("a"),)))),
)


def ground_substitutions(vs):
    for combo in itertools.product(GROUND_UNIVERSE, repeat=len(vs)):
        yield dict(zip(vs, combo))


def mm_unify(a: Term, b: Term):
    """Martelli-Montanari rule system on an explicit equation set.

    Deliberately written differently from the library's unifier: it keeps
    a solved-form dictionary and eagerly applies each new binding to all
    remaining equations and to the solved part.
    """
    eqs = [(a, b)]
    solved: dict = {}
    while eqs:
        s, t = eqs.pop()
        if s == t:
            continue
        if isinstance(t, Var) and not isinstance(s, Var):
            s, t = t, s
        if isinstance(s, Var):
            if _occurs_in(s, t):
                return None
            one = {s: t}
            eqs = [(substitute(x, one), substitute(y, one)) for x, y in eqs]
            solved = {v: substitute(u, one) for v, u in solved.items()}
            solved[s] = t
            continue
        if isinstance(s, Compound) and isinstance(t, Compound):
            if s.functor != t.functor or len(s.args) != len(t.args):
                return None
            eqs.extend(zip(s.args, t.args))
            continue
        return None
    return solved


def _occurs_in(v: Var, t: Term) -> bool:
    if t == v:
        return True
    return isinstance(t, Compound) and any(_occurs_in(v, a) for a in t.args)


def apply_all(t: Term, s: dict) -> Term:
    """Apply a possibly non-idempotent substitution to a fixpoint."""
    for _ in range(50):
        u = substitute(t, s)
        if u == t:
            return u
        t = u
    return t


def check_mgu(t1: Term, t2: Term) -> None:
    """Assert that the library unifier returns a most general unifier (or none)."""
    from lp2lazy.oracle import unify
    from lp2lazy.terms import term_vars, variant

    s = unify(t1, t2)
    ref = mm_unify(t1, t2)
    assert (s is None) == (ref is None)
    vs = sorted(set(term_vars(t1, t2)), key=lambda v: v.name)
    if s is None:
        for g in ground_substitutions(vs):
            assert substitute(t1, g) != substitute(t2, g)
        return
    assert substitute(t1, s) == substitute(t2, s)
    # same unifier as the reference up to renaming
    assert variant(tuple(substitute(v, s) for v in vs), tuple(apply_all(v, ref) for v in vs))
    # every ground unifier in the small universe factors through s
    for g in ground_substitutions(vs):
        if substitute(t1, g) == substitute(t2, g):
            for v in vs:
                assert substitute(substitute(v, s), g) == g[v]


# -- random well-moded programs --------------------------------------------------------

_CONSTS = ("a", "b", "0", "1", "[]")


class ProgramGenerator:
    """Stratified random programs that are well-moded by construction.

    Head inputs are linear terms over fresh variables, body inputs are built
    from variables produced to the left, body outputs are fresh distinct
    variables (so the programs are also simply moded and plain) and head
    outputs only use produced variables.  With ``simple=False`` some body
    outputs become compound patterns, which keeps well-modedness but breaks
    simple-modedness.
    """

    def __init__(self, seed: int, simple: bool = True):
        self.rng = random.Random(seed)
        self.simple = simple
        self.counter = 0

    def fresh(self) -> str:
        self.counter += 1
        return f"V{self.counter}"

    def in_pattern(self, depth: int, used: list) -> str:
        r = self.rng.random()
        if depth == 0 or r < 0.5:
            v = self.fresh()
            used.append(v)
            return v
        if r < 0.65:
            return self.rng.choice(_CONSTS)
        if r < 0.85:
            return f"[{self.in_pattern(depth - 1, used)}|{self.in_pattern(depth - 1, used)}]"
        return f"f({self.in_pattern(depth - 1, used)})"

    def build(self, avail: list, depth: int = 2) -> str:
        r = self.rng.random()
        if avail and (depth == 0 or r < 0.55):
            return self.rng.choice(avail)
        if depth == 0 or r < 0.7:
            return self.rng.choice(_CONSTS)
        if r < 0.85:
            return f"[{self.build(avail, depth - 1)}|{self.build(avail, depth - 1)}]"
        return f"f({self.build(avail, depth - 1)})"

    def program(self) -> tuple[str, list[str]]:
        rng = self.rng
        npred = rng.randint(2, 4)
        preds = []
        for i in range(npred):
            arity = rng.randint(1, 3)
            modes = [rng.choice(("in", "out")) for _ in range(arity)]
            preds.append((f"p{i}", modes))
        lines = []
        for name, modes in preds:
            lines.append(f":- mode {name}({','.join(modes)}).")
            lines.append(f":- kind {name}({rng.choice(('test', 'nontest'))}).")
        for i, (name, modes) in enumerate(preds):
            for _ in range(rng.randint(1, 3)):
                lines.append(self.clause(name, modes, preds[:i]))
        queries = [self.query(preds[-1]) for _ in range(3)]
        return "\n".join(lines) + "\n", queries

    def clause(self, name: str, modes: list, lower: list) -> str:
        rng = self.rng
        head = [None] * len(modes)
        avail: list = []
        for i, m in enumerate(modes):
            if m == "in":
                head[i] = self.in_pattern(2, avail)
        body = []
        for _ in range(rng.randint(0, 3) if lower else 0):
            qname, qmodes = rng.choice(lower)
            args = []
            produced = []
            for m in qmodes:
                if m == "in":
                    args.append(self.build(avail))
                elif not self.simple and rng.random() < 0.3:
                    a, b = self.fresh(), self.fresh()
                    produced += [a, b]
                    args.append(f"[{a}|{b}]")
                else:
                    v = self.fresh()
                    produced.append(v)
                    args.append(v)
            body.append(f"{qname}({','.join(args)})")
            avail.extend(produced)
            if avail and rng.random() < 0.2:
                op = rng.choice(("==", "\\=="))
                body.append(f"{rng.choice(avail)} {op} {self.build(avail, 1)}")
        for i, m in enumerate(modes):
            if m == "out":
                head[i] = self.build(avail)
        text = f"{name}({','.join(head)})"
        return text + (" :- " + ", ".join(body) if body else "") + "."

    def query(self, pred) -> str:
        name, modes = pred
        args = []
        for m in modes:
            if m == "in":
                args.append(self.ground(2))
            else:
                args.append(self.fresh())
        return f"{name}({','.join(args)})."

    def ground(self, depth: int) -> str:
        r = self.rng.random()
        if depth == 0 or r < 0.5:
            return self.rng.choice(_CONSTS)
        if r < 0.8:
            return f"[{self.ground(depth - 1)}|{self.ground(depth - 1)}]"
        return f"f({self.ground(depth - 1)})"


def show(t) -> str:
    return print_term(t) if isinstance(t, (Var, Int, Atom, Compound)) else str(t)


# -- IR skeletons ------------------------------------------------------------------------


def skeleton(fp) -> dict:
    """Reduce a FunProgram to the shape recorded in fixtures/golden/shapes.json."""
    from lp2lazy.translate import BoolTest, Call, LetBind, PatternMatch, SucWrap, VarRef, TupleExpr

    def names(pat):
        if isinstance(pat, VarRef):
            return {pat.name}
        if isinstance(pat, TupleExpr):
            return set().union(*(names(p) for p in pat.items)) if pat.items else set()
        return set()

    def mentions(expr, ns):
        if isinstance(expr, VarRef):
            return expr.name in ns
        for child in getattr(expr, "args", ()) or getattr(expr, "items", ()):
            if mentions(child, ns):
                return True
        return False

    out = {}
    for name, f in fp.functions.items():
        alts = []
        for alt in f.alternatives:
            quals = []
            circular = False
            for q in alt.qualifiers:
                if isinstance(q, PatternMatch):
                    if isinstance(q.pattern, SucWrap) and isinstance(q.scrutinee, Call):
                        quals.append(f"suc:{q.scrutinee.function}")
                    else:
                        quals.append("match")
                elif isinstance(q, LetBind):
                    quals.append(f"let:{q.bound.function}" if isinstance(q.bound, Call) else "let")
                    circular = circular or mentions(q.bound, names(q.pattern))
                elif isinstance(q, BoolTest):
                    quals.append(f"test:{q.call.op}")
            entry = {"qualifiers": sorted(quals), "result": "suc" if isinstance(alt.result, SucWrap) else "plain"}
            if circular:
                entry["circular"] = True
            alts.append(entry)
        out[name] = {"kind": f.kind.value, "inputs": f.input_arity, "outputs": f.output_arity, "alternatives": alts}
    return out


def expected_skeleton(spec: dict) -> dict:
    out = {}
    for name, f in spec["functions"].items():
        alts = [dict(a, qualifiers=sorted(a["qualifiers"])) for a in f["alternatives"]]
        out[name] = dict(f, alternatives=alts)
    return out


def normalise_ws(text: str) -> str:
    return "\n".join(" ".join(line.split()) for line in text.splitlines() if line.strip())
