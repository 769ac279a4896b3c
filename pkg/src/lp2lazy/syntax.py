"""Parser and printer for the ``.lp`` source dialect.

The dialect is a small Prolog subset::

    :- mode append(in, in, out).
    :- kind append(nontest).
    append([], L, L).
    append([H|T], L, [H|R]) :- append(T, L, R).
    ?- append([1], [2], X).

``%`` starts a line comment.  Double-quoted strings are atoms.  Variable
names may carry trailing primes (``Tail'``).  ``:- delay ... until ...``
directives are accepted and kept, but nothing executes them.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from .terms import (
    INFIX_BUILTINS,
    NIL,
    Atom,
    Compound,
    Int,
    Term,
    Var,
    args_of,
    cons,
    format_atom,
    fresh_var,
    functor_of,
    make_atom,
    print_goal,
    print_term,
    term_vars,
)

Pred = tuple  # (name, arity)

BUILTINS: frozenset = frozenset((op, 2) for op in INFIX_BUILTINS)


class ParseError(Exception):
    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.message = message


class ModeError(Exception):
    pass


class Mode(enum.Enum):
    IN = "in"
    OUT = "out"


class Kind(enum.Enum):
    TEST = "test"
    NONTEST = "nontest"


@dataclass(frozen=True)
class ModeDecl:
    name: str
    arity: int
    modes: tuple

    def __post_init__(self):
        if len(self.modes) != self.arity:
            raise ModeError(f"mode for {self.name}/{self.arity} has {len(self.modes)} positions")

    @property
    def pred(self) -> Pred:
        return (self.name, self.arity)

    @property
    def inputs(self) -> list[int]:
        return [i for i, m in enumerate(self.modes) if m is Mode.IN]

    @property
    def outputs(self) -> list[int]:
        return [i for i, m in enumerate(self.modes) if m is Mode.OUT]

    def __str__(self) -> str:
        return f"{format_atom(self.name)}({','.join(m.value for m in self.modes)})"


def builtin_mode(pred: Pred) -> ModeDecl | None:
    if pred == ("=", 2):
        # pattern = value: the left side is matched against a ground right side
        return ModeDecl("=", 2, (Mode.OUT, Mode.IN))
    if pred in BUILTINS:
        return ModeDecl(pred[0], 2, (Mode.IN, Mode.IN))
    return None


@dataclass(frozen=True)
class Clause:
    head: Term
    body: tuple = ()

    @property
    def pred(self) -> Pred:
        return functor_of(self.head)

    def variables(self) -> list[Var]:
        return term_vars(self.head, *self.body)

    def __str__(self) -> str:
        if not self.body:
            return f"{print_term(self.head)}."
        return f"{print_term(self.head)} :- {', '.join(print_goal(g) for g in self.body)}."


@dataclass(frozen=True)
class Query:
    atoms: tuple
    variables: tuple = ()

    def __str__(self) -> str:
        return ", ".join(print_goal(g) for g in self.atoms) + "."


@dataclass(frozen=True)
class DelayDecl:
    goal: Term
    condition: tuple


@dataclass
class Program:
    clauses: dict = field(default_factory=dict)  # pred -> list[Clause], source order
    modes: dict = field(default_factory=dict)  # pred -> ModeDecl
    kinds: dict = field(default_factory=dict)  # pred -> Kind, explicit declarations only
    queries: list = field(default_factory=list)
    delays: list = field(default_factory=list)

    def all_clauses(self) -> list[Clause]:
        return [c for group in self.clauses.values() for c in group]

    def predicates(self) -> list[Pred]:
        """Every user predicate that is defined, declared or called, in first-seen order."""
        seen: dict = {}
        for p in self.modes:
            seen.setdefault(p, None)
        for p, group in self.clauses.items():
            seen.setdefault(p, None)
            for c in group:
                for g in c.body:
                    q = functor_of(g)
                    if q not in BUILTINS:
                        seen.setdefault(q, None)
        return list(seen)

    def mode(self, pred: Pred) -> ModeDecl:
        m = self.modes.get(pred) or builtin_mode(pred)
        if m is None:
            raise ModeError(f"no mode declared for {pred[0]}/{pred[1]}")
        return m

    def kind(self, pred: Pred) -> Kind:
        if pred in BUILTINS:
            return Kind.TEST
        return self.kinds.get(pred, Kind.TEST)

    def partition(self) -> dict:
        out = {p: self.kind(p) for p in self.predicates()}
        for c in self.all_clauses():
            for g in c.body:
                q = functor_of(g)
                if q in BUILTINS:
                    out[q] = Kind.TEST
        return out

    def with_kinds(self, kinds: dict) -> "Program":
        """Same clauses and modes under another partitioning."""
        merged = dict(self.kinds)
        merged.update(kinds)
        return Program(dict(self.clauses), dict(self.modes), merged, list(self.queries), list(self.delays))

    def defines(self, pred: Pred) -> bool:
        return pred in self.clauses or pred in self.modes


def print_program(p: Program) -> str:
    lines = []
    for pred in p.predicates():
        if pred in p.modes:
            lines.append(f":- mode {p.modes[pred]}.")
        if pred in p.kinds:
            lines.append(f":- kind {format_atom(pred[0])}/{pred[1]}({p.kinds[pred].value}).")
    for d in p.delays:
        cond = ", ".join(print_goal(g) for g in d.condition)
        lines.append(f":- delay {print_goal(d.goal)} until {cond}.")
    for c in p.all_clauses():
        lines.append(str(c))
    for q in p.queries:
        lines.append(f"?- {q}")
    return "\n".join(lines) + ("\n" if lines else "")


# -- lexer ------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|%[^\n]*)
  | (?P<var>[A-Z_][A-Za-z0-9_]*'*)
  | (?P<atom>[a-z][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<qatom>'(?:[^'\\\n]|\\.)*')
  | (?P<end>\.(?=[\s%]|\Z))
  | (?P<op>:-|\?-|\\==|==|=<|>=|<|>|=|-)
  | (?P<punct>[()\[\],|/])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(line, pos - line_start + 1, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def _unquote(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s[1:-1])


# -- parser -----------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.varmap: dict[str, Var] = {}

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(tok.line, tok.col, msg)

    def take(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "punct", "end")

    def expect(self, text: str) -> Token:
        if not self.at(text):
            shown = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {shown!r}")
        return self.take()

    # terms

    def variable(self, name: str) -> Var:
        if name == "_":
            return fresh_var("_")
        v = self.varmap.get(name)
        if v is None:
            v = self.varmap[name] = fresh_var(name)
        return v

    def term(self) -> Term:
        t = self.tok
        if t.kind == "var":
            self.take()
            return self.variable(t.text)
        if t.kind == "int":
            self.take()
            return Int(int(t.text))
        if t.kind == "op" and t.text == "-" and self.toks[self.i + 1].kind == "int":
            self.take()
            return Int(-int(self.take().text))
        if t.kind == "str":
            self.take()
            return Atom(_unquote(t.text))
        if t.kind in ("atom", "qatom"):
            self.take()
            name = t.text if t.kind == "atom" else _unquote(t.text)
            if self.at("("):
                self.take()
                args = [self.term()]
                while self.at(","):
                    self.take()
                    args.append(self.term())
                self.expect(")")
                return Compound(name, tuple(args))
            return Atom(name)
        if self.at("["):
            return self.list_term()
        raise self.error(f"expected a term, found {t.text or 'end of input'!r}")

    def list_term(self) -> Term:
        self.expect("[")
        if self.at("]"):
            self.take()
            return NIL
        items = [self.term()]
        while self.at(","):
            self.take()
            items.append(self.term())
        tail: Term = NIL
        if self.at("|"):
            self.take()
            tail = self.term()
        self.expect("]")
        for item in reversed(items):
            tail = cons(item, tail)
        return tail

    def goal(self) -> Term:
        start = self.tok
        left = self.term()
        if self.tok.kind == "op" and self.tok.text in INFIX_BUILTINS:
            op = self.take().text
            right = self.term()
            return Compound(op, (left, right))
        if isinstance(left, (Var, Int)):
            raise self.error("a goal must be an atom", start)
        return left

    def goals(self) -> tuple:
        gs = [self.goal()]
        while self.at(","):
            self.take()
            gs.append(self.goal())
        return tuple(gs)

    # top level

    def program(self) -> Program:
        prog = Program()
        mode_list: list[tuple[ModeDecl, Token]] = []
        kind_list: list[tuple[str, int | None, Kind, Token]] = []
        while self.tok.kind != "eof":
            self.varmap = {}
            start = self.tok
            if self.at(":-"):
                self.take()
                self.directive(prog, mode_list, kind_list)
            elif self.at("?-"):
                self.take()
                atoms = self.goals()
                self.expect(".")
                prog.queries.append(_make_query(atoms, self.varmap))
            else:
                head = self.term()
                if isinstance(head, (Var, Int)) or head == NIL:
                    raise self.error("clause head must be an atom", start)
                body: tuple = ()
                if self.at(":-"):
                    self.take()
                    body = self.goals()
                self.expect(".")
                prog.clauses.setdefault(functor_of(head), []).append(Clause(head, body))
        for decl, tok in mode_list:
            if decl.pred in prog.modes:
                raise ModeError(f"line {tok.line}: duplicate mode for {decl.name}/{decl.arity}")
            prog.modes[decl.pred] = decl
        preds = set(prog.predicates())
        for name, arity, kind, tok in kind_list:
            targets = [p for p in preds if p[0] == name and (arity is None or p[1] == arity)]
            if not targets:
                raise ModeError(f"line {tok.line}: kind declared for unknown predicate {name}")
            for p in targets:
                prog.kinds[p] = kind
        _check_modes(prog)
        return prog

    def directive(self, prog: Program, mode_list: list, kind_list: list) -> None:
        word = self.tok
        if word.kind != "atom" or word.text not in ("mode", "kind", "delay"):
            raise self.error("expected 'mode', 'kind' or 'delay' after ':-'")
        self.take()
        if word.text == "delay":
            goal = self.goal()
            if self.tok.text != "until":
                raise self.error("expected 'until'")
            self.take()
            cond = self.goals()
            self.expect(".")
            prog.delays.append(DelayDecl(goal, cond))
            return
        name_tok = self.take()
        if name_tok.kind not in ("atom", "qatom"):
            raise self.error("expected a predicate name", name_tok)
        name = name_tok.text if name_tok.kind == "atom" else _unquote(name_tok.text)
        arity = None
        if self.at("/"):
            self.take()
            n = self.take()
            if n.kind != "int":
                raise self.error("expected an arity", n)
            arity = int(n.text)
        words = []
        if self.at("("):
            self.take()
            if not self.at(")"):
                words.append(self._word())
                while self.at(","):
                    self.take()
                    words.append(self._word())
            self.expect(")")
        self.expect(".")
        if word.text == "mode":
            try:
                modes = tuple(Mode(w.text) for w in words)
            except ValueError:
                raise self.error("mode positions must be 'in' or 'out'", name_tok) from None
            if arity is not None and arity != len(modes):
                raise ModeError(f"line {word.line}: mode for {name}/{arity} has {len(modes)} positions")
            mode_list.append((ModeDecl(name, len(modes), modes), word))
        else:
            if len(words) != 1 or words[0].text not in ("test", "nontest"):
                raise self.error("kind must be 'test' or 'nontest'", name_tok)
            kind_list.append((name, arity, Kind(words[0].text), word))

    def _word(self) -> Token:
        t = self.take()
        if t.kind != "atom":
            raise self.error("expected a word", t)
        return t


def _make_query(atoms: tuple, varmap: dict) -> Query:
    named = [v for v in term_vars(*atoms) if v.name != "_"]
    return Query(atoms, tuple(named))


def _check_modes(prog: Program) -> None:
    for pred in prog.predicates():
        if pred not in prog.modes:
            raise ModeError(f"no mode declared for {pred[0]}/{pred[1]}")
    for pred in prog.modes:
        if pred in BUILTINS:
            raise ModeError(f"cannot redeclare builtin {pred[0]}/2")


def parse_program(text: str) -> Program:
    """Parse ``.lp`` source into a :class:`Program`.

    Raises :class:`ParseError` on malformed syntax and :class:`ModeError`
    when a used predicate has no mode, or a mode is duplicated.
    """
    return _Parser(text).program()


def parse_query(text: str) -> Query:
    p = _Parser(text.strip())
    if p.at("?-"):
        p.take()
    atoms = p.goals()
    p.expect(".")
    if p.tok.kind != "eof":
        raise p.error("unexpected text after query")
    return _make_query(atoms, p.varmap)


def parse_term(text: str) -> Term:
    p = _Parser(text)
    t = p.term()
    if p.tok.kind != "eof":
        raise p.error("unexpected text after term")
    return t


def atom_args(t: Term) -> tuple:
    return args_of(t)


__all__ = [
    "BUILTINS",
    "Clause",
    "DelayDecl",
    "Kind",
    "Mode",
    "ModeDecl",
    "ModeError",
    "ParseError",
    "Program",
    "Query",
    "atom_args",
    "builtin_mode",
    "make_atom",
    "parse_program",
    "parse_query",
    "parse_term",
    "print_program",
    "print_term",
]
