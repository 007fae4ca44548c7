"""Unification with occurs check, substitution application, and arithmetic /
relational evaluation."""
from __future__ import annotations

from .errors import EvalError
from .terms import (
    ARITH_OPS,
    REL_OPS,
    Atom,
    ListT,
    Number,
    Str,
    Structure,
    Term,
    Var,
    format_term,
)

Subst = dict[str, Term]


def walk(t: Term, s: Subst) -> Term:
    """Chase variable bindings until an unbound variable or a non-variable."""
    while isinstance(t, Var):
        nxt = s.get(t.name)
        if nxt is None:
            return t
        t = nxt
    return t


def unify(a: Term, b: Term, subst: Subst | None = None) -> Subst | None:
    """Most general unifier extending `subst`, or None if there is none.

    The result is fully resolved: every binding has all bound variables
    substituted away, so applying it twice equals applying it once.
    """
    s: Subst = {} if subst is None else dict(subst)
    if not _unify(a, b, s):
        return None
    return {name: apply_subst(s, t) for name, t in s.items()}


def _unify(a: Term, b: Term, s: Subst) -> bool:
    a = walk(a, s)
    b = walk(b, s)
    if isinstance(a, Var) and isinstance(b, Var) and a.name == b.name:
        return True
    if isinstance(a, Var):
        return _bind(a, b, s)
    if isinstance(b, Var):
        return _bind(b, a, s)
    if isinstance(a, Atom) and isinstance(b, Atom):
        return a.name == b.name
    if isinstance(a, Number) and isinstance(b, Number):
        return a.value == b.value
    if isinstance(a, Str) and isinstance(b, Str):
        return a.value == b.value
    if isinstance(a, Structure) and isinstance(b, Structure):
        if a.functor != b.functor or len(a.args) != len(b.args):
            return False
        return all(_unify(x, y, s) for x, y in zip(a.args, b.args))
    if isinstance(a, ListT) and isinstance(b, ListT):
        if len(a.items) != len(b.items):
            return False
        return all(_unify(x, y, s) for x, y in zip(a.items, b.items))
    return False


def _bind(v: Var, t: Term, s: Subst) -> bool:
    if _occurs(v.name, t, s):
        return False
    s[v.name] = t
    return True


def _occurs(name: str, t: Term, s: Subst) -> bool:
    t = walk(t, s)
    if isinstance(t, Var):
        return t.name == name
    if isinstance(t, Structure):
        return any(_occurs(name, a, s) for a in t.args)
    if isinstance(t, ListT):
        return any(_occurs(name, a, s) for a in t.items)
    return False


def apply_subst(s: Subst, t: Term) -> Term:
    """Replace every bound variable, recursively, until fixpoint."""
    if isinstance(t, Var):
        b = s.get(t.name)
        return t if b is None else apply_subst(s, b)
    if isinstance(t, Structure):
        return Structure(t.functor, tuple(apply_subst(s, a) for a in t.args))
    if isinstance(t, ListT):
        return ListT(tuple(apply_subst(s, a) for a in t.items))
    return t


def resolve(t: Term, s: Subst) -> Term:
    """Apply the substitution and fold ground arithmetic subterms to numbers.

    Folding is what lets plan bodies write count(N+1) or send volley(N-1):
    once N is bound, the argument becomes a plain number.
    """
    if isinstance(t, Var):
        b = s.get(t.name)
        return t if b is None else resolve(b, s)
    if isinstance(t, ListT):
        return ListT(tuple(resolve(a, s) for a in t.items))
    if isinstance(t, Structure):
        args = tuple(resolve(a, s) for a in t.args)
        if t.functor in ARITH_OPS:
            if t.functor == "-" and len(args) == 1 and isinstance(args[0], Number):
                return Number(-args[0].value)
            if len(args) == 2 and isinstance(args[0], Number) and isinstance(args[1], Number):
                return Number(_apply_op(t.functor, args[0].value, args[1].value))
        return Structure(t.functor, args)
    return t


def _apply_op(op: str, l: float, r: float) -> float:
    if op == "+":
        return l + r
    if op == "-":
        return l - r
    if op == "*":
        return l * r
    if r == 0:
        raise EvalError("division by zero")
    return l / r


def eval_arith(t: Term, s: Subst) -> float:
    t = walk(t, s)
    if isinstance(t, Var):
        raise EvalError(f"unbound variable {t.name}")
    if isinstance(t, Number):
        return t.value
    if isinstance(t, Structure):
        if t.functor == "-" and len(t.args) == 1:
            return -eval_arith(t.args[0], s)
        if t.functor in ARITH_OPS and len(t.args) == 2:
            return _apply_op(t.functor, eval_arith(t.args[0], s), eval_arith(t.args[1], s))
    raise EvalError(f"not arithmetic: {format_term(t)}")


def eval_test(t: Term, s: Subst) -> tuple[bool, Subst]:
    """Evaluate a relational test under `s`.

    `Var == expr` (either side) binds the unbound variable to the evaluated
    number and succeeds; every other operator requires both sides to evaluate.
    Raises EvalError when evaluation is impossible.
    """
    if not (isinstance(t, Structure) and t.functor in REL_OPS and len(t.args) == 2):
        raise EvalError(f"not a relational test: {format_term(t)}")
    op = t.functor
    left, right = t.args
    if op == "==":
        lw = walk(left, s)
        rw = walk(right, s)
        if isinstance(lw, Var):
            value = eval_arith(rw, s)
            out = dict(s)
            out[lw.name] = Number(value)
            return True, out
        if isinstance(rw, Var):
            value = eval_arith(lw, s)
            out = dict(s)
            out[rw.name] = Number(value)
            return True, out
        return eval_arith(left, s) == eval_arith(right, s), s
    lv = eval_arith(left, s)
    rv = eval_arith(right, s)
    if op == "\\==":
        return lv != rv, s
    if op == "<":
        return lv < rv, s
    if op == "<=":
        return lv <= rv, s
    if op == ">":
        return lv > rv, s
    return lv >= rv, s
