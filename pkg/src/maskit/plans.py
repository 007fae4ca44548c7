"""Plan library data model: triggers, context conditions, and body steps."""
from __future__ import annotations

from dataclasses import dataclass

from .terms import Literal, Term, format_literal, format_term

# The complete internal action vocabulary available in plan bodies.
INTERNAL_ACTIONS = frozenset(
    {
        "send",
        "print",
        "register",
        "deregister",
        "joinWorkspace",
        "focus",
        "act",
        "adoptRole",
        "commitMission",
        "goalAchieved",
    }
)


@dataclass(frozen=True, slots=True)
class Trigger:
    sign: str  # "+" or "-"
    kind: str  # "belief" or "goal"
    pattern: Term


@dataclass(frozen=True, slots=True)
class Test:
    """Relational test over arithmetic expressions; usable as a context
    condition or a body step."""

    __test__ = False  # keep pytest from collecting this as a test class

    expr: Term


@dataclass(frozen=True, slots=True)
class Subgoal:
    goal: Term


@dataclass(frozen=True, slots=True)
class AddBelief:
    literal: Term


@dataclass(frozen=True, slots=True)
class DelBelief:
    literal: Term


@dataclass(frozen=True, slots=True)
class InternalAction:
    name: str
    args: tuple[Term, ...]


BodyStep = Subgoal | AddBelief | DelBelief | InternalAction | Test
Condition = Literal | Test


@dataclass(frozen=True, slots=True)
class Plan:
    trigger: Trigger
    context: tuple[Condition, ...]
    body: tuple[BodyStep, ...]


def format_step(step: BodyStep) -> str:
    if isinstance(step, Subgoal):
        return "!" + format_term(step.goal)
    if isinstance(step, AddBelief):
        return "+" + format_term(step.literal)
    if isinstance(step, DelBelief):
        return "-" + format_term(step.literal)
    if isinstance(step, InternalAction):
        if step.args:
            return "." + step.name + "(" + ",".join(format_term(a) for a in step.args) + ")"
        return "." + step.name
    if isinstance(step, Test):
        return format_term(step.expr)
    raise TypeError(f"not a body step: {step!r}")


def format_body(body: tuple[BodyStep, ...]) -> str:
    return "; ".join(format_step(s) for s in body)


def format_plan(plan: Plan) -> str:
    trig = plan.trigger
    out = trig.sign + ("!" if trig.kind == "goal" else "") + format_term(trig.pattern)
    if plan.context:
        conds = []
        for c in plan.context:
            conds.append(format_literal(c) if isinstance(c, Literal) else format_term(c.expr))
        out += " : " + " & ".join(conds)
    if plan.body:
        out += " <- " + format_body(plan.body)
    return out + "."


def format_plans(plans: list[Plan] | tuple[Plan, ...]) -> str:
    return "\n".join(format_plan(p) for p in plans)
