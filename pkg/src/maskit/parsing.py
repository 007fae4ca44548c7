"""Tokenizer and recursive-descent parser for terms, plan libraries, and
plan bodies.

Grammar (informal):

    term      := additive ( RELOP additive )?          RELOP: < <= > >= == \\==
    additive  := multiplicative ( ('+'|'-') multiplicative )*
    mult      := unary ( ('*'|'/') unary )*
    unary     := '-' unary | primary
    primary   := NUMBER | STRING | VAR | ATOM [ '(' term (',' term)* ')' ]
               | '[' [ term (',' term)* ] ']' | '(' term ')'

    library   := plan* EOF
    plan      := ('+'|'-') ['!'] pattern [ ':' context ] [ '<-' body ] '.'
    context   := 'true' | condition ('&' condition)*
    condition := ['not'] pattern | test
    body      := step (';' step)*
    step      := '!' pattern | '+' pattern | '-' pattern
               | '.' NAME [ '(' [ term (',' term)* ] ')' ] | test

A pattern is an atom or structure (belief/goal shaped). `//` starts a line
comment. Clauses end with '.'; a '.' immediately followed by a lowercase
letter is read as an internal-action name instead, so the clause terminator
needs trailing whitespace or end of input (natural in practice). Unary minus
applied to a number literal folds into a negative number.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidSpecError
from .plans import (
    INTERNAL_ACTIONS,
    AddBelief,
    BodyStep,
    Condition,
    DelBelief,
    InternalAction,
    Plan,
    Subgoal,
    Test,
    Trigger,
)
from .terms import (
    ARITH_OPS,
    REL_OPS,
    Atom,
    ListT,
    Literal,
    Number,
    Str,
    Structure,
    Term,
    Var,
    is_atom_headed,
    term_vars,
)


class ParseError(InvalidSpecError):
    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        super().__init__(f"{message} at line {line}, column {col}")
        self.reason = message
        self.line = line
        self.col = col
        self.expected = expected


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


_PUNCT3 = ("\\==",)
_PUNCT2 = ("<-", "<=", ">=", "==")
_PUNCT1 = "()[],.:+-*/<>!;&"
_UNESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t", "r": "\r"}


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(src)

    def err(msg: str, expected: tuple[str, ...] = ()):
        raise ParseError(msg, line, col, expected)

    while i < n:
        c = src[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c in " \t\r":
            i, col = i + 1, col + 1
            continue
        if c == "/" and i + 1 < n and src[i + 1] == "/":
            while i < n and src[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if c.islower():
            j = i + 1
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(Token("atom", src[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if c.isupper() or c == "_":
            j = i + 1
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(Token("var", src[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i + 1
            while j < n and src[j].isdigit():
                j += 1
            if j < n and src[j] == "." and j + 1 < n and src[j + 1].isdigit():
                j += 1
                while j < n and src[j].isdigit():
                    j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    j = k + 1
                    while j < n and src[j].isdigit():
                        j += 1
            toks.append(Token("number", src[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if c == '"':
            j = i + 1
            out: list[str] = []
            while True:
                if j >= n:
                    err("unterminated string", ('"',))
                ch = src[j]
                if ch == '"':
                    j += 1
                    break
                if ch == "\\":
                    if j + 1 >= n:
                        err("unterminated escape", ())
                    esc = src[j + 1]
                    out.append(_UNESCAPES.get(esc, esc))
                    j += 2
                    continue
                if ch == "\n":
                    line += 1
                    col = 0
                out.append(ch)
                j += 1
            toks.append(Token("string", "".join(out), start_line, start_col))
            col += j - i
            i = j
            continue
        if c == "." and i + 1 < n and src[i + 1].islower():
            j = i + 1
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(Token("iaction", src[i + 1 : j], start_line, start_col))
            col += j - i
            i = j
            continue
        three = src[i : i + 3]
        if three in _PUNCT3:
            toks.append(Token(three, three, start_line, start_col))
            i += 3
            col += 3
            continue
        two = src[i : i + 2]
        if two in _PUNCT2:
            toks.append(Token(two, two, start_line, start_col))
            i += 2
            col += 2
            continue
        if c in _PUNCT1:
            toks.append(Token(c, c, start_line, start_col))
            i += 1
            col += 1
            continue
        err(f"unexpected character {c!r}")
    toks.append(Token("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        tok = self.toks[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, message: str, expected: tuple[str, ...] = ()):
        tok = self.peek()
        raise ParseError(message, tok.line, tok.col, expected)

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            self.error(f"expected {kind!r}, found {tok.text or tok.kind!r}", (kind,))
        return self.next()

    # --- expressions ---

    def expr(self) -> Term:
        left = self.additive()
        if self.peek().kind in REL_OPS:
            op = self.next().kind
            right = self.additive()
            return Structure(op, (left, right))
        return left

    def additive(self) -> Term:
        left = self.multiplicative()
        while self.peek().kind in ("+", "-"):
            op = self.next().kind
            left = Structure(op, (left, self.multiplicative()))
        return left

    def multiplicative(self) -> Term:
        left = self.unary()
        while self.peek().kind in ("*", "/"):
            op = self.next().kind
            left = Structure(op, (left, self.unary()))
        return left

    def unary(self) -> Term:
        if self.peek().kind == "-":
            self.next()
            operand = self.unary()
            if isinstance(operand, Number):
                return Number(-operand.value)
            return Structure("-", (operand,))
        return self.primary()

    def primary(self) -> Term:
        tok = self.peek()
        if tok.kind == "number":
            self.next()
            return Number(float(tok.text))
        if tok.kind == "string":
            self.next()
            return Str(tok.text)
        if tok.kind == "var":
            self.next()
            return Var(tok.text)
        if tok.kind == "atom":
            return self.pattern()
        if tok.kind == "[":
            self.next()
            items: list[Term] = []
            if self.peek().kind != "]":
                items.append(self.expr())
                while self.peek().kind == ",":
                    self.next()
                    items.append(self.expr())
            self.expect("]")
            return ListT(tuple(items))
        if tok.kind == "(":
            self.next()
            inner = self.expr()
            self.expect(")")
            return inner
        self.error(
            f"expected a term, found {tok.text or tok.kind!r}",
            ("atom", "variable", "number", "string", "'('", "'['"),
        )

    def pattern(self) -> Term:
        """Atom or structure: the shape of beliefs, goals, and triggers."""
        name = self.expect("atom").text
        if self.peek().kind != "(":
            return Atom(name)
        self.next()
        if self.peek().kind == ")":
            self.error("arity-0 parentheses; write the bare atom instead", ("term",))
        args = [self.expr()]
        while self.peek().kind == ",":
            self.next()
            args.append(self.expr())
        self.expect(")")
        return Structure(name, tuple(args))

    # --- plans ---

    def plan(self) -> Plan:
        start = self.peek()
        if start.kind not in ("+", "-"):
            self.error(f"expected a plan trigger, found {start.text or start.kind!r}", ("+", "-"))
        sign = self.next().kind
        kind = "belief"
        if self.peek().kind == "!":
            self.next()
            kind = "goal"
        trigger = Trigger(sign, kind, self.pattern())
        context: tuple[Condition, ...] = ()
        if self.peek().kind == ":":
            self.next()
            context = self.context()
        body: tuple[BodyStep, ...] = ()
        if self.peek().kind == "<-":
            self.next()
            steps = [self.step()]
            while self.peek().kind == ";":
                self.next()
                steps.append(self.step())
            body = tuple(steps)
        self.expect(".")
        plan = Plan(trigger, context, body)
        self._check_scope(plan, start)
        return plan

    def context(self) -> tuple[Condition, ...]:
        tok = self.peek()
        if tok.kind == "atom" and tok.text == "true" and self.peek(1).kind in ("<-", "."):
            self.next()
            return ()
        conds = [self.condition()]
        while self.peek().kind == "&":
            self.next()
            conds.append(self.condition())
        return tuple(conds)

    def condition(self) -> Condition:
        negated = False
        tok = self.peek()
        if tok.kind == "atom" and tok.text == "not":
            self.next()
            negated = True
        e = self.expr()
        if isinstance(e, Structure) and e.functor in REL_OPS:
            if negated:
                self.error("'not' applies to literals, not relational tests")
            return Test(e)
        if is_atom_headed(e):
            return Literal(negated, e)
        self.error("expected a literal or relational test in context")

    def step(self) -> BodyStep:
        tok = self.peek()
        if tok.kind == "!":
            self.next()
            return Subgoal(self.pattern())
        if tok.kind == "+":
            self.next()
            return AddBelief(self.pattern())
        if tok.kind == "-":
            self.next()
            return DelBelief(self.pattern())
        if tok.kind == "iaction":
            self.next()
            if tok.text not in INTERNAL_ACTIONS:
                raise ParseError(
                    f"unknown internal action .{tok.text}",
                    tok.line,
                    tok.col,
                    tuple(sorted("." + a for a in INTERNAL_ACTIONS)),
                )
            args: list[Term] = []
            if self.peek().kind == "(":
                self.next()
                if self.peek().kind != ")":
                    args.append(self.expr())
                    while self.peek().kind == ",":
                        self.next()
                        args.append(self.expr())
                self.expect(")")
            return InternalAction(tok.text, tuple(args))
        e = self.expr()
        if isinstance(e, Structure) and e.functor in REL_OPS:
            return Test(e)
        self.error(
            "expected a body step ('!goal', '+belief', '-belief', internal action, or test)"
        )

    def _check_scope(self, plan: Plan, at: Token) -> None:
        bound = term_vars(plan.trigger.pattern)
        for c in plan.context:
            bound |= term_vars(c.term if isinstance(c, Literal) else c.expr)
        _check_body_scope(plan.body, bound, at)


def _check_body_scope(body: tuple[BodyStep, ...], bound: set[str], at: Token) -> None:
    """Every body variable must be bound by the trigger, the context, or an
    earlier `==` test output."""
    for step in body:
        if isinstance(step, Test):
            expr = step.expr
            if expr.functor == "==":
                free = {
                    side.name
                    for side in expr.args
                    if isinstance(side, Var) and side.name not in bound
                }
                used = term_vars(expr) - free
                _require_bound(used, bound, at)
                bound |= free
            else:
                _require_bound(term_vars(expr), bound, at)
        elif isinstance(step, InternalAction):
            for a in step.args:
                _require_bound(term_vars(a), bound, at)
        else:
            t = step.goal if isinstance(step, Subgoal) else step.literal
            _require_bound(term_vars(t), bound, at)


def _require_bound(names: set[str], bound: set[str], at: Token) -> None:
    loose = sorted(names - bound)
    if loose:
        raise ParseError(f"unbound variable {loose[0]!r} in plan body", at.line, at.col)


def parse_term(src: str) -> Term:
    p = _Parser(src)
    t = p.expr()
    p.expect("eof")
    return t


def parse_plan_library(src: str) -> list[Plan]:
    p = _Parser(src)
    plans: list[Plan] = []
    while p.peek().kind != "eof":
        plans.append(p.plan())
    return plans


def parse_plan_body(src: str) -> tuple[BodyStep, ...]:
    """Parse a bare plan body (the command payload). A trailing '.' is
    optional; test-output variables may bind, everything else starts unbound."""
    p = _Parser(src)
    start = p.peek()
    steps = [p.step()]
    while p.peek().kind == ";":
        p.next()
        steps.append(p.step())
    if p.peek().kind == ".":
        p.next()
    p.expect("eof")
    body = tuple(steps)
    _check_body_scope(body, set(), start)
    return body
