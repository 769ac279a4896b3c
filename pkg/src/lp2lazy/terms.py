"""First-order terms shared by the logic side and the functional side.

Lists use the usual ``'.'/2`` and ``'[]'`` encoding.  Long lists are
common (the polish and del_max benchmarks go to a few thousand cells), so
every traversal here walks list spines iteratively.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Union


@dataclass(frozen=True, slots=True)
class Var:
    name: str
    id: int

    def __repr__(self) -> str:
        return f"Var({self.name}#{self.id})"


@dataclass(frozen=True, slots=True)
class Int:
    value: int


@dataclass(frozen=True, slots=True)
class Atom:
    name: str


@dataclass(frozen=True, slots=True)
class Compound:
    functor: str
    args: tuple

    def __post_init__(self) -> None:
        if not self.args:
            raise ValueError("compound terms need at least one argument")


Term = Union[Var, Int, Atom, Compound]

NIL = Atom("[]")
CONS = "."

_fresh_ids = itertools.count(1)


def fresh_id() -> int:
    return next(_fresh_ids)


def fresh_var(name: str) -> Var:
    return Var(name, fresh_id())


def cons(head: Term, tail: Term) -> Compound:
    return Compound(CONS, (head, tail))


def is_cons(t: Term) -> bool:
    return isinstance(t, Compound) and t.functor == CONS and len(t.args) == 2


def make_list(items, tail: Term = NIL) -> Term:
    out = tail
    for item in reversed(list(items)):
        out = cons(to_term(item), out)
    return out


def list_items(t: Term) -> tuple[list, Term]:
    """Split a (possibly partial) list into its elements and its tail."""
    items = []
    while is_cons(t):
        items.append(t.args[0])
        t = t.args[1]
    return items, t


def to_term(x) -> Term:
    """Lift plain Python data (ints, strings, lists) into terms."""
    if isinstance(x, (Var, Int, Atom, Compound)):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not terms")
    if isinstance(x, int):
        return Int(x)
    if isinstance(x, str):
        return Atom(x)
    if isinstance(x, (list, tuple)):
        return make_list(x)
    raise TypeError(f"cannot convert {x!r} to a term")


def iter_vars(t: Term) -> Iterator[Var]:
    """Yield every variable occurrence, left to right."""
    stack = [t]
    while stack:
        t = stack.pop()
        if isinstance(t, Var):
            yield t
        elif isinstance(t, Compound):
            stack.extend(reversed(t.args))


def term_vars(*terms: Term) -> list[Var]:
    """Distinct variables in order of first occurrence."""
    seen: dict[Var, None] = {}
    for t in terms:
        for v in iter_vars(t):
            seen.setdefault(v, None)
    return list(seen)


def is_ground(t: Term) -> bool:
    return next(iter_vars(t), None) is None


def term_size(t: Term) -> int:
    n = 0
    stack = [t]
    while stack:
        t = stack.pop()
        n += 1
        if isinstance(t, Compound):
            stack.extend(t.args)
    return n


def substitute(t: Term, subst: Mapping[Var, Term]) -> Term:
    """Apply ``subst`` once (no chasing); idempotent substitutions need no more."""
    if not subst:
        return t
    if isinstance(t, Var):
        return subst.get(t, t)
    if not isinstance(t, Compound):
        return t
    # Iterative rebuild so that long lists do not hit the recursion limit.
    # Each frame is (term, rebuilt-args-so-far).
    result: Term | None = None
    stack: list[tuple[Compound, list]] = [(t, [])]
    while stack:
        node, done = stack[-1]
        if result is not None:
            done.append(result)
            result = None
        if len(done) == len(node.args):
            stack.pop()
            if all(a is b for a, b in zip(done, node.args)):
                result = node
            else:
                result = Compound(node.functor, tuple(done))
            continue
        child = node.args[len(done)]
        if isinstance(child, Var):
            done.append(subst.get(child, child))
        elif isinstance(child, Compound):
            stack.append((child, []))
        else:
            done.append(child)
    assert result is not None
    return result


def rename(t: Term, mapping: dict[Var, Var]) -> Term:
    """Rename variables, allocating fresh ones for any not yet in ``mapping``."""
    for v in iter_vars(t):
        if v not in mapping:
            mapping[v] = fresh_var(v.name)
    return substitute(t, mapping)


def canonical(terms, mapping: dict | None = None):
    """Rename variables to ``Var(name, k)`` by order of first occurrence.

    Two term sequences are variants of each other exactly when their
    canonical forms coincide up to variable names, so comparisons should
    use :func:`variant`.
    """
    mapping = {} if mapping is None else mapping
    out = []
    for t in terms:
        for v in iter_vars(t):
            if v not in mapping:
                mapping[v] = Var("_", len(mapping))
        out.append(substitute(t, mapping))
    return tuple(out)


def variant(a, b) -> bool:
    return canonical(a) == canonical(b)


# -- printing ---------------------------------------------------------------

_PLAIN_ATOM = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_SYMBOL_ATOM = re.compile(r"[+\-*/\\^<>=~:.?@#&$]+\Z")
INFIX_BUILTINS = ("==", "\\==", "<", "=<", ">", ">=", "=")


def format_atom(name: str) -> str:
    if name == "[]" or _PLAIN_ATOM.match(name) or _SYMBOL_ATOM.match(name):
        return name
    escaped = name.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def print_term(t: Term) -> str:
    parts: list[str] = []
    _emit(t, parts)
    return "".join(parts)


def _emit(t: Term, out: list[str]) -> None:
    if isinstance(t, Var):
        out.append(t.name)
    elif isinstance(t, Int):
        out.append(str(t.value))
    elif isinstance(t, Atom):
        out.append(format_atom(t.name))
    elif is_cons(t):
        items, tail = list_items(t)
        out.append("[")
        for i, item in enumerate(items):
            if i:
                out.append(",")
            _emit(item, out)
        if tail != NIL:
            out.append("|")
            _emit(tail, out)
        out.append("]")
    else:
        out.append(format_atom(t.functor))
        out.append("(")
        for i, a in enumerate(t.args):
            if i:
                out.append(",")
            _emit(a, out)
        out.append(")")


def print_goal(g: Term) -> str:
    """Body atoms print like terms, except the infix comparison builtins."""
    if isinstance(g, Compound) and g.functor in INFIX_BUILTINS and len(g.args) == 2:
        return f"{print_term(g.args[0])} {g.functor} {print_term(g.args[1])}"
    return print_term(g)


def functor_of(t: Term) -> tuple[str, int]:
    if isinstance(t, Atom):
        return t.name, 0
    if isinstance(t, Compound):
        return t.functor, len(t.args)
    raise TypeError(f"not an atom: {print_term(t)}")


def args_of(t: Term) -> tuple:
    return t.args if isinstance(t, Compound) else ()


def make_atom(name: str, args) -> Term:
    args = tuple(args)
    return Compound(name, args) if args else Atom(name)
