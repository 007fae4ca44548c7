"""Logic terms: the data model shared by beliefs, plan triggers, messages,
and artifact properties.

All term values are immutable and hashable, so they can be shared between
agents, queues, and snapshots without copying.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

ATOM_NAME = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
VAR_NAME = re.compile(r"[A-Z_][A-Za-z0-9_]*\Z")

ARITH_OPS = ("+", "-", "*", "/")
REL_OPS = ("<", "<=", ">", ">=", "==", "\\==")
OPERATORS = frozenset(ARITH_OPS + REL_OPS)


class Term:
    """Base class for the term variants below."""

    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Atom(Term):
    name: str

    def __post_init__(self):
        if not ATOM_NAME.match(self.name):
            raise ValueError(f"invalid atom name: {self.name!r}")


@dataclass(frozen=True, slots=True)
class Number(Term):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True, slots=True)
class Str(Term):
    value: str


@dataclass(frozen=True, slots=True)
class Var(Term):
    name: str

    def __post_init__(self):
        if not VAR_NAME.match(self.name):
            raise ValueError(f"invalid variable name: {self.name!r}")


@dataclass(frozen=True, slots=True)
class Structure(Term):
    functor: str
    args: tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise ValueError("arity-0 structure; use Atom instead")
        if self.functor in OPERATORS:
            # "-" doubles as unary negation; every other operator is binary.
            ok = len(self.args) == 2 or (self.functor == "-" and len(self.args) == 1)
            if not ok:
                raise ValueError(f"operator {self.functor!r} with arity {len(self.args)}")
        elif not ATOM_NAME.match(self.functor):
            raise ValueError(f"invalid functor: {self.functor!r}")


@dataclass(frozen=True, slots=True)
class ListT(Term):
    items: tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))


@dataclass(frozen=True, slots=True)
class Literal:
    """A condition over the belief base: an atom-or-structure term, optionally
    negated (negation only appears in plan contexts, never in the base)."""

    negated: bool
    term: Term

    def __post_init__(self):
        if not is_atom_headed(self.term):
            raise ValueError(f"literal must be atom-headed: {format_term(self.term)}")


def is_atom_headed(t: Term) -> bool:
    if isinstance(t, Atom):
        return True
    return isinstance(t, Structure) and t.functor not in OPERATORS


def term_vars(t: Term) -> set[str]:
    out: set[str] = set()
    _collect_vars(t, out)
    return out


def _collect_vars(t: Term, out: set[str]) -> None:
    if isinstance(t, Var):
        out.add(t.name)
    elif isinstance(t, Structure):
        for a in t.args:
            _collect_vars(a, out)
    elif isinstance(t, ListT):
        for a in t.items:
            _collect_vars(a, out)


def is_ground(t: Term) -> bool:
    if isinstance(t, Var):
        return False
    if isinstance(t, Structure):
        return all(is_ground(a) for a in t.args)
    if isinstance(t, ListT):
        return all(is_ground(a) for a in t.items)
    return True


def rename_vars(t: Term, mapping: dict[str, Term]) -> Term:
    """Replace variables per `mapping`, leaving unmapped variables alone."""
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, Structure):
        return Structure(t.functor, tuple(rename_vars(a, mapping) for a in t.args))
    if isinstance(t, ListT):
        return ListT(tuple(rename_vars(a, mapping) for a in t.items))
    return t


# Canonical printing: atoms bare, strings double-quoted, lists [a,b],
# structures f(a,b), operators fully parenthesised so re-parsing is exact.

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\r": "\\r"}


def format_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def format_term(t: Term) -> str:
    if isinstance(t, Atom):
        return t.name
    if isinstance(t, Number):
        return format_number(t.value)
    if isinstance(t, Str):
        return '"' + "".join(_ESCAPES.get(c, c) for c in t.value) + '"'
    if isinstance(t, Var):
        return t.name
    if isinstance(t, ListT):
        return "[" + ",".join(format_term(a) for a in t.items) + "]"
    if isinstance(t, Structure):
        if t.functor == "-" and len(t.args) == 1:
            return "-(" + format_term(t.args[0]) + ")"
        if t.functor in OPERATORS:
            # Spaces keep '<' followed by unary '-' from reading as '<-'.
            left, right = t.args
            return "(" + format_term(left) + " " + t.functor + " " + format_term(right) + ")"
        return t.functor + "(" + ",".join(format_term(a) for a in t.args) + ")"
    raise TypeError(f"not a term: {t!r}")


def format_literal(lit: Literal) -> str:
    prefix = "not " if lit.negated else ""
    return prefix + format_term(lit.term)
