"""Agent runtime: belief base, mailbox, intentions, and the reasoning cycle.

One reasoning step does, in order:
  1. ingest all pending percepts / organisation notifications as belief
     add/del events,
  2. dequeue at most one mailbox message and apply its performative,
  3. dequeue at most one pending command into a fresh intention,
  4. dequeue at most one event and select a plan for it,
  5. execute one body step of one runnable intention (round-robin).

All inbound traffic (messages, commands, percepts, plan updates) arrives
through queues drained at these boundaries; the surrounding system
serialises access, so the agent itself is single-threaded by construction.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Protocol

from .errors import EvalError, MasError
from .plans import (
    AddBelief,
    BodyStep,
    DelBelief,
    InternalAction,
    Plan,
    Subgoal,
    Test,
)
from .terms import (
    Atom,
    Literal,
    Str,
    Term,
    Var,
    format_term,
    is_atom_headed,
    is_ground,
    rename_vars,
    term_vars,
)
from .unification import Subst, eval_test, resolve, unify

PERFORMATIVES = ("tell", "untell", "achieve", "signal")

_MESSAGE_ORDER = {"queued": 0, "delivered": 1, "processed": 2, "failed": 2}
_COMMAND_ORDER = {"queued": 0, "running": 1, "done": 2, "failed": 2}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


@dataclass
class MessageRecord:
    id: int
    sender: str
    performative: str
    content: Term
    status: str = "queued"
    reason: str | None = None
    created_at: str = field(default_factory=_now)
    updated_at: str = field(default_factory=_now)

    def advance(self, status: str, reason: str | None = None) -> None:
        if _MESSAGE_ORDER[status] < _MESSAGE_ORDER[self.status]:
            raise ValueError(f"message status cannot go {self.status} -> {status}")
        self.status = status
        self.reason = reason
        self.updated_at = _now()


@dataclass
class CommandRecord:
    id: int
    source: str
    body: tuple[BodyStep, ...]
    status: str = "queued"
    reason: str | None = None
    created_at: str = field(default_factory=_now)
    updated_at: str = field(default_factory=_now)

    def advance(self, status: str, reason: str | None = None) -> None:
        if _COMMAND_ORDER[status] < _COMMAND_ORDER[self.status]:
            raise ValueError(f"command status cannot go {self.status} -> {status}")
        self.status = status
        self.reason = reason
        self.updated_at = _now()


@dataclass
class Event:
    sign: str  # "+" | "-"
    kind: str  # "belief" | "goal"
    content: Term
    origin: tuple  # ("internal",)|("percept",)|("organisation",)|("message",id)|("command",id)
    parent: "Intention | None" = None
    recovery: bool = False


@dataclass
class Frame:
    steps: tuple[BodyStep, ...]
    bindings: Subst
    plan: Plan | None = None
    index: int = 0

    def exhausted(self) -> bool:
        return self.index >= len(self.steps)


@dataclass
class Intention:
    id: int
    frames: list[Frame]
    origin: tuple | None = None
    status: str = "running"
    reason: str | None = None
    waiting: bool = False

    def runnable(self) -> bool:
        return self.status == "running" and not self.waiting and bool(self.frames)


class SystemServices(Protocol):
    """What internal actions need from the surrounding system."""

    def deliver_message(self, to: str, sender: str, performative: str, content: Term) -> int: ...
    def register_service(self, agent: str, service: str) -> None: ...
    def deregister_service(self, agent: str, service: str) -> None: ...
    def join_workspace(self, agent: str, workspace: str) -> None: ...
    def focus(self, agent: str, workspace: str, artifact: str) -> None: ...
    def invoke(self, agent: str, workspace: str, artifact: str, op: Term) -> None: ...
    def adopt_role(self, agent: str, org: str, group: str, role: str) -> None: ...
    def commit_mission(self, agent: str, org: str, scheme: str, mission: str) -> None: ...
    def set_goal_achieved(self, agent: str, org: str, scheme: str, goal: str) -> None: ...


class Agent:
    def __init__(self, name: str, plans: list[Plan], plan_source: str):
        self.name = name
        self.plans: tuple[Plan, ...] = tuple(plans)
        self.plan_source = plan_source
        self.beliefs: dict[Term, None] = {}
        self.events: deque[Event] = deque()
        self.intentions: list[Intention] = []
        self.mailbox: deque[MessageRecord] = deque()
        self.messages: dict[int, MessageRecord] = {}
        self.commands: dict[int, CommandRecord] = {}
        self.pending_commands: deque[CommandRecord] = deque()
        self.inputs: deque[tuple[str, Term, str]] = deque()  # (add|del, term, origin)
        self.observed: set[tuple[str, str]] = set()
        self.roles: set[tuple[str, str, str]] = set()
        self.missions: set[tuple[str, str, str]] = set()
        self.services: set[str] = set()
        self.log: list[str] = []
        self.cycle_count = 0
        self.running = True
        self._pending_plans: tuple[Plan, ...] | None = None
        self._msg_seq = 0
        self._cmd_seq = 0
        self._intent_seq = 0
        self._fresh_seq = 0
        self._next_intent = 0

    # --- inbound queues (called by the system under its lock) ---

    def queue_message(self, sender: str, performative: str, content: Term) -> MessageRecord:
        self._msg_seq += 1
        rec = MessageRecord(self._msg_seq, sender, performative, content)
        self.messages[rec.id] = rec
        self.mailbox.append(rec)
        return rec

    def queue_command(self, source: str, body: tuple[BodyStep, ...]) -> CommandRecord:
        self._cmd_seq += 1
        rec = CommandRecord(self._cmd_seq, source, body)
        self.commands[rec.id] = rec
        self.pending_commands.append(rec)
        return rec

    def queue_percept(self, action: str, term: Term, origin: str) -> None:
        self.inputs.append((action, term, origin))

    def swap_plans(self, plans: list[Plan], source: str) -> None:
        """Takes effect at the next cycle boundary; the resource view updates
        immediately."""
        self.plan_source = source
        self._pending_plans = tuple(plans)

    # --- the reasoning cycle ---

    def step(self, services: SystemServices) -> None:
        if not self.running:
            return
        if self._pending_plans is not None:
            self.plans = self._pending_plans
            self._pending_plans = None
        self._ingest_percepts()
        self._consume_message()
        self._consume_command()
        self._handle_event()
        self._run_intention(services)
        self.cycle_count += 1

    def idle(self) -> bool:
        return not (
            self.inputs
            or self.mailbox
            or self.pending_commands
            or self.events
            or self._pending_plans is not None
            or any(i.runnable() for i in self.intentions)
        )

    def _ingest_percepts(self) -> None:
        while self.inputs:
            action, term, origin = self.inputs.popleft()
            if action == "add":
                if self._add_belief(term):
                    self.events.append(Event("+", "belief", term, (origin,)))
            else:
                if term in self.beliefs:
                    del self.beliefs[term]
                    self.events.append(Event("-", "belief", term, (origin,)))

    def _consume_message(self) -> None:
        if not self.mailbox:
            return
        rec = self.mailbox.popleft()
        rec.advance("delivered")
        content = self._freshen(rec.content)
        origin = ("message", rec.id)
        if rec.performative == "tell":
            if not is_ground(content):
                rec.advance("failed", "non-ground content")
                return
            if self._add_belief(content):
                self.events.append(Event("+", "belief", content, origin))
            rec.advance("processed")
        elif rec.performative == "untell":
            for removed in self._remove_beliefs(content):
                self.events.append(Event("-", "belief", removed, origin))
            rec.advance("processed")
        elif rec.performative == "signal":
            if not is_ground(content):
                rec.advance("failed", "non-ground content")
                return
            # Raises the belief event without persisting the belief.
            self.events.append(Event("+", "belief", content, origin))
            rec.advance("processed")
        elif rec.performative == "achieve":
            # Terminal status is decided when the goal event is handled.
            self.events.append(Event("+", "goal", content, origin))
        else:
            rec.advance("failed", f"unsupported performative {rec.performative}")

    def _consume_command(self) -> None:
        if not self.pending_commands:
            return
        rec = self.pending_commands.popleft()
        rec.advance("running")
        intention = self._new_intention(Frame(rec.body, {}), ("command", rec.id))
        self._settle_intention(intention)

    def _handle_event(self) -> None:
        if not self.events:
            return
        ev = self.events.popleft()
        selection = self.select_applicable_plan(ev)
        if selection is not None:
            plan, bindings = selection
            frame = Frame(plan.body, bindings, plan)
            if ev.parent is not None:
                ev.parent.frames.append(frame)
                ev.parent.waiting = False
                self._settle_intention(ev.parent)
            else:
                intention = self._new_intention(frame, ev.origin)
                if ev.origin[0] == "message":
                    self.messages[ev.origin[1]].advance("processed")
                self._settle_intention(intention)
            return
        # No applicable plan.
        if ev.kind != "goal":
            return  # belief events without relevant plans are simply dropped
        if ev.sign == "+" and ev.parent is not None and not ev.recovery:
            # Give a -!g recovery plan one chance before failing the parent.
            self.events.append(
                Event("-", "goal", ev.content, ("internal",), parent=ev.parent, recovery=True)
            )
            return
        reason = f"no relevant plan for {format_term(ev.content)}"
        if ev.parent is not None:
            self._fail_intention(ev.parent, reason)
        elif ev.origin[0] == "message":
            self.messages[ev.origin[1]].advance("failed", "no relevant plan")

    def _run_intention(self, services: SystemServices) -> None:
        live = self.intentions
        if not live:
            return
        n = len(live)
        for k in range(n):
            idx = (self._next_intent + k) % n
            intention = live[idx]
            if not intention.runnable():
                continue
            # Store unreduced so intentions appended later still get their
            # turn before the pointer wraps.
            self._next_intent = idx + 1
            self._execute_step(intention, services)
            return

    def _execute_step(self, intention: Intention, services: SystemServices) -> None:
        frame = intention.frames[-1]
        step = frame.steps[frame.index]
        frame.index += 1
        try:
            self._dispatch_step(intention, frame, step, services)
        except (MasError, ValueError) as e:
            self._fail_intention(intention, str(e))
            return
        self._settle_intention(intention)

    def _dispatch_step(
        self, intention: Intention, frame: Frame, step: BodyStep, services: SystemServices
    ) -> None:
        if isinstance(step, Subgoal):
            # Standardise apart whatever stayed unbound so it cannot capture
            # variables of the plan selected for the subgoal.
            goal = self._freshen(resolve(step.goal, frame.bindings))
            self.events.append(Event("+", "goal", goal, ("internal",), parent=intention))
            intention.waiting = True
        elif isinstance(step, AddBelief):
            lit = resolve(step.literal, frame.bindings)
            if not is_ground(lit):
                raise EvalError(f"non-ground belief {format_term(lit)}")
            if self._add_belief(lit):
                self.events.append(Event("+", "belief", lit, ("internal",)))
        elif isinstance(step, DelBelief):
            pattern = resolve(step.literal, frame.bindings)
            for removed in self._remove_beliefs(pattern):
                self.events.append(Event("-", "belief", removed, ("internal",)))
        elif isinstance(step, Test):
            ok, bindings = eval_test(step.expr, frame.bindings)
            if not ok:
                raise EvalError(f"test failed: {format_term(step.expr)}")
            frame.bindings = bindings
        elif isinstance(step, InternalAction):
            args = tuple(resolve(a, frame.bindings) for a in step.args)
            self._internal_action(step.name, args, services)
        else:
            raise ValueError(f"unknown body step {step!r}")

    def _internal_action(self, name: str, args: tuple[Term, ...], services: SystemServices) -> None:
        if name == "print":
            self.log.append("".join(_display(a) for a in args))
            return
        if name == "send":
            to, performative, content = _arity(name, args, 3)
            services.deliver_message(_name(to), self.name, _name(performative), content)
            return
        if name == "register":
            (service,) = _arity(name, args, 1)
            services.register_service(self.name, _label(service))
            return
        if name == "deregister":
            (service,) = _arity(name, args, 1)
            services.deregister_service(self.name, _label(service))
            return
        if name == "joinWorkspace":
            (ws,) = _arity(name, args, 1)
            services.join_workspace(self.name, _name(ws))
            return
        if name == "focus":
            ws, art = _arity(name, args, 2)
            services.focus(self.name, _name(ws), _name(art))
            return
        if name == "act":
            ws, art, op = _arity(name, args, 3)
            services.invoke(self.name, _name(ws), _name(art), op)
            return
        if name == "adoptRole":
            org, group, role = _arity(name, args, 3)
            services.adopt_role(self.name, _name(org), _name(group), _name(role))
            return
        if name == "commitMission":
            org, scheme, mission = _arity(name, args, 3)
            services.commit_mission(self.name, _name(org), _name(scheme), _name(mission))
            return
        if name == "goalAchieved":
            org, scheme, goal = _arity(name, args, 3)
            services.set_goal_achieved(self.name, _name(org), _name(scheme), _name(goal))
            return
        raise ValueError(f"unknown internal action .{name}")

    def _settle_intention(self, intention: Intention) -> None:
        while intention.frames and intention.frames[-1].exhausted():
            intention.frames.pop()
        if intention.frames or intention.status != "running" or intention.waiting:
            return
        intention.status = "done"
        if intention.origin and intention.origin[0] == "command":
            self.commands[intention.origin[1]].advance("done")
        self.intentions.remove(intention)

    def _fail_intention(self, intention: Intention, reason: str) -> None:
        intention.status = "failed"
        intention.reason = reason
        if intention.origin and intention.origin[0] == "command":
            self.commands[intention.origin[1]].advance("failed", reason)
        if intention in self.intentions:
            self.intentions.remove(intention)

    def _new_intention(self, frame: Frame, origin: tuple | None) -> Intention:
        self._intent_seq += 1
        intention = Intention(self._intent_seq, [frame], origin)
        self.intentions.append(intention)
        return intention

    # --- plan selection ---

    def select_applicable_plan(self, event: Event) -> tuple[Plan, Subst] | None:
        """First plan (library order) whose trigger unifies with the event and
        whose context holds against the belief base."""
        for plan in self.plans:
            if plan.trigger.sign != event.sign or plan.trigger.kind != event.kind:
                continue
            bindings = unify(plan.trigger.pattern, event.content, {})
            if bindings is None:
                continue
            solved = self._solve_context(plan.context, bindings)
            if solved is not None:
                return plan, solved
        return None

    def _solve_context(self, conditions: tuple, bindings: Subst) -> Subst | None:
        if not conditions:
            return bindings
        beliefs = list(self.beliefs)

        def search(i: int, s: Subst) -> Subst | None:
            if i == len(conditions):
                return s
            cond = conditions[i]
            if isinstance(cond, Test):
                try:
                    ok, s2 = eval_test(cond.expr, s)
                except EvalError:
                    return None
                return search(i + 1, s2) if ok else None
            assert isinstance(cond, Literal)
            if cond.negated:
                if any(unify(cond.term, b, s) is not None for b in beliefs):
                    return None
                return search(i + 1, s)
            for belief in beliefs:
                s2 = unify(cond.term, belief, s)
                if s2 is None:
                    continue
                solved = search(i + 1, s2)
                if solved is not None:
                    return solved
            return None

        return search(0, bindings)

    # --- belief base ---

    def _add_belief(self, term: Term) -> bool:
        """Set semantics: returns False (no event) when already present."""
        if not is_atom_headed(term):
            raise EvalError(f"belief must be atom-headed: {format_term(term)}")
        if term in self.beliefs:
            return False
        self.beliefs[term] = None
        return True

    def _remove_beliefs(self, pattern: Term) -> list[Term]:
        removed = [b for b in self.beliefs if unify(pattern, b, {}) is not None]
        for b in removed:
            del self.beliefs[b]
        return removed

    def _freshen(self, term: Term) -> Term:
        """Standardise apart free variables in inbound content so they cannot
        capture plan variables."""
        names = term_vars(term)
        if not names:
            return term
        mapping = {}
        for n in sorted(names):
            self._fresh_seq += 1
            mapping[n] = Var(f"_E{self._fresh_seq}")
        return rename_vars(term, mapping)

    # --- views ---

    def snapshot(self) -> dict:
        return {
            "name": self.name,
            "cycle": self.cycle_count,
            "beliefs": sorted(format_term(b) for b in self.beliefs),
            "plan_source": self.plan_source,
            "intentions": [
                {
                    "id": i.id,
                    "status": i.status,
                    "waiting": i.waiting,
                    "depth": len(i.frames),
                    "plan": format_term(i.frames[-1].plan.trigger.pattern)
                    if i.frames and i.frames[-1].plan
                    else None,
                }
                for i in self.intentions
            ],
            "observed": [{"workspace": w, "artifact": a} for w, a in sorted(self.observed)],
            "roles": [
                {"organisation": o, "group": g, "role": r} for o, g, r in sorted(self.roles)
            ],
            "missions": [
                {"organisation": o, "scheme": s, "mission": m}
                for o, s, m in sorted(self.missions)
            ],
            "services": sorted(self.services),
        }


def _display(t: Term) -> str:
    return t.value if isinstance(t, Str) else format_term(t)


def _name(t: Term) -> str:
    if isinstance(t, Atom):
        return t.name
    if isinstance(t, Str):
        return t.value
    raise EvalError(f"expected a name, got {format_term(t)}")


def _label(t: Term) -> str:
    return t.value if isinstance(t, Str) else _name(t)


def _arity(name: str, args: tuple[Term, ...], n: int) -> tuple[Term, ...]:
    if len(args) != n:
        raise EvalError(f".{name} expects {n} arguments, got {len(args)}")
    return args
