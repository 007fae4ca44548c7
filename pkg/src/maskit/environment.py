"""Workspaces and artifacts.

An artifact template declares initial observable properties plus named
operations. Each operation is a list of rewrite rules: the first rule whose
match patterns unify with distinct current properties (and whose guard holds)
fires, removing the matched properties and adding the evaluated updates.
Observers get the property delta as percepts.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ConflictError, EvalError, InvalidSpecError, NotFoundError, OpFailure, PreconditionError
from .parsing import ParseError, parse_term
from .terms import (
    ATOM_NAME,
    REL_OPS,
    Atom,
    Structure,
    Term,
    format_term,
    is_atom_headed,
    is_ground,
    term_vars,
)
from .unification import Subst, eval_test, resolve, unify


@dataclass(frozen=True, slots=True)
class RewriteRule:
    match: tuple[Term, ...]
    guard: Term | None
    update: tuple[Term, ...]


@dataclass(frozen=True, slots=True)
class Operation:
    name: str
    params: tuple[str, ...]
    rules: tuple[RewriteRule, ...]


@dataclass(frozen=True, slots=True, eq=False)
class ArtifactTemplate:
    name: str
    properties: tuple[Term, ...]
    operations: dict[str, Operation]
    document: str  # canonical JSON form, the revisioned content


class ArtifactInstance:
    def __init__(self, name: str, template: ArtifactTemplate):
        self.name = name
        self.template = template.name
        # Instances keep the behavior they were created with; template
        # updates only affect future instantiations.
        self.operations = template.operations
        self.properties: dict[Term, None] = dict.fromkeys(template.properties)
        self.observers: set[str] = set()

    def snapshot(self, workspace: str) -> dict:
        return {
            "name": self.name,
            "workspace": workspace,
            "template": self.template,
            "properties": sorted(format_term(p) for p in self.properties),
        }


class Workspace:
    def __init__(self, name: str):
        self.name = name
        self.artifacts: dict[str, ArtifactInstance] = {}
        self.members: set[str] = set()


def parse_template_doc(doc: dict) -> ArtifactTemplate:
    """Validate and compile a template document.

    Document shape:
      {"name": str, "properties": [termsrc],
       "operations": [{"name": str, "params": [varname],
                       "rules": [{"match": [termsrc], "guard": termsrc?,
                                  "update": [termsrc]}]}]}
    """
    if not isinstance(doc, dict):
        raise InvalidSpecError("template document must be an object")
    name = doc.get("name")
    if not isinstance(name, str) or not ATOM_NAME.match(name):
        raise InvalidSpecError(f"invalid template name: {name!r}")
    props = []
    for src in doc.get("properties", []):
        t = _parse_literal_src(src, f"template {name} property")
        if not is_ground(t):
            raise InvalidSpecError(f"template {name}: initial property not ground: {src}")
        props.append(t)
    operations: dict[str, Operation] = {}
    for op_doc in doc.get("operations", []):
        op = _parse_operation(op_doc, name)
        if op.name in operations:
            raise InvalidSpecError(f"template {name}: duplicate operation {op.name}")
        operations[op.name] = op
    document = json.dumps(doc, sort_keys=True, ensure_ascii=False)
    return ArtifactTemplate(name, tuple(props), operations, document)


def _parse_operation(op_doc: dict, tpl: str) -> Operation:
    op_name = op_doc.get("name")
    if not isinstance(op_name, str) or not ATOM_NAME.match(op_name):
        raise InvalidSpecError(f"template {tpl}: invalid operation name: {op_name!r}")
    where = f"template {tpl} operation {op_name}"
    params = tuple(op_doc.get("params", []))
    for p in params:
        if not isinstance(p, str) or not p[:1].isupper():
            raise InvalidSpecError(f"{where}: params must be variable names, got {p!r}")
    rules = []
    for rule_doc in op_doc.get("rules", []):
        match = tuple(_parse_literal_src(s, where) for s in rule_doc.get("match", []))
        update = tuple(_parse_literal_src(s, where) for s in rule_doc.get("update", []))
        guard = None
        if rule_doc.get("guard") is not None:
            guard = _parse_term_src(rule_doc["guard"], where)
            if not (isinstance(guard, Structure) and guard.functor in REL_OPS):
                raise InvalidSpecError(f"{where}: guard must be a relational test")
        scope = set(params)
        for m in match:
            scope |= term_vars(m)
        used = set()
        for u in update:
            used |= term_vars(u)
        if guard is not None:
            used |= term_vars(guard)
        loose = sorted(used - scope)
        if loose:
            raise InvalidSpecError(f"{where}: unbound variable {loose[0]!r} in rule")
        rules.append(RewriteRule(match, guard, update))
    if not rules:
        raise InvalidSpecError(f"{where}: needs at least one rule")
    return Operation(op_name, params, tuple(rules))


def _parse_term_src(src, where: str) -> Term:
    if not isinstance(src, str):
        raise InvalidSpecError(f"{where}: expected a term string, got {src!r}")
    try:
        return parse_term(src)
    except ParseError as e:
        raise InvalidSpecError(f"{where}: {e}") from e


def _parse_literal_src(src, where: str) -> Term:
    t = _parse_term_src(src, where)
    if not is_atom_headed(t):
        raise InvalidSpecError(f"{where}: not a literal: {src}")
    return t


# Percept delta produced by an operation: (agent, "add"/"del", property term).
PerceptBatch = list[tuple[str, str, Term]]


class Environment:
    def __init__(self):
        self.workspaces: dict[str, Workspace] = {}
        self.templates: dict[str, ArtifactTemplate] = {}

    # --- management ---

    def register_template(self, doc: dict) -> tuple[ArtifactTemplate, bool]:
        """Returns (template, replaced_existing)."""
        tpl = parse_template_doc(doc)
        existed = tpl.name in self.templates
        self.templates[tpl.name] = tpl
        return tpl, existed

    def create_workspace(self, name: str) -> Workspace:
        if not ATOM_NAME.match(name or ""):
            raise InvalidSpecError(f"invalid workspace name: {name!r}")
        if name in self.workspaces:
            raise ConflictError(f"workspace {name} already exists")
        ws = Workspace(name)
        self.workspaces[name] = ws
        return ws

    def instantiate(self, workspace: str, artifact_name: str, template: str) -> ArtifactInstance:
        ws = self._workspace(workspace)
        if not ATOM_NAME.match(artifact_name or ""):
            raise InvalidSpecError(f"invalid artifact name: {artifact_name!r}")
        if artifact_name in ws.artifacts:
            raise ConflictError(f"artifact {artifact_name} already exists in {workspace}")
        tpl = self.templates.get(template)
        if tpl is None:
            raise NotFoundError(f"no template {template}")
        art = ArtifactInstance(artifact_name, tpl)
        ws.artifacts[artifact_name] = art
        return art

    # --- agent-facing ---

    def join(self, agent: str, workspace: str) -> None:
        self._workspace(workspace).members.add(agent)

    def leave(self, agent: str, workspace: str) -> None:
        ws = self._workspace(workspace)
        for art in ws.artifacts.values():
            art.observers.discard(agent)
        ws.members.discard(agent)

    def focus(self, agent: str, workspace: str, artifact: str) -> bool:
        """Add the agent to the artifact's observers; True if newly added."""
        ws = self._workspace(workspace)
        art = self._artifact(ws, artifact)
        if agent not in ws.members:
            raise PreconditionError(f"agent {agent} has not joined workspace {workspace}")
        if agent in art.observers:
            return False
        art.observers.add(agent)
        return True

    def unfocus(self, agent: str, workspace: str, artifact: str) -> bool:
        art = self._artifact(self._workspace(workspace), artifact)
        if agent not in art.observers:
            return False
        art.observers.discard(agent)
        return True

    def invoke(self, caller: str, workspace: str, artifact: str, op: Term) -> PerceptBatch:
        """Fire the first applicable rewrite rule; returns observer percepts.

        Raises OpFailure (state untouched) when no rule applies.
        """
        ws = self._workspace(workspace)
        art = self._artifact(ws, artifact)
        if caller not in ws.members:
            raise PreconditionError(f"agent {caller} has not joined workspace {workspace}")
        if isinstance(op, Atom):
            op_name, args = op.name, ()
        elif isinstance(op, Structure) and is_atom_headed(op):
            op_name, args = op.functor, op.args
        else:
            raise OpFailure(f"not an operation term: {format_term(op)}")
        operation = art.operations.get(op_name)
        if operation is None:
            raise NotFoundError(f"artifact {artifact} has no operation {op_name}")
        if len(args) != len(operation.params):
            raise OpFailure(
                f"operation {op_name} expects {len(operation.params)} args, got {len(args)}"
            )
        base: Subst = dict(zip(operation.params, args))
        for rule in operation.rules:
            fired = self._try_rule(art, rule, base)
            if fired is None:
                continue
            matched, updates = fired
            old = set(art.properties)
            for m in matched:
                del art.properties[m]
            for u in updates:
                art.properties.setdefault(u, None)
            new = set(art.properties)
            percepts: PerceptBatch = []
            for observer in sorted(art.observers):
                for p in sorted(old - new, key=format_term):
                    percepts.append((observer, "del", p))
                for p in sorted(new - old, key=format_term):
                    percepts.append((observer, "add", p))
            return percepts
        raise OpFailure(f"no rule applicable for {op_name} on {artifact}")

    def _try_rule(
        self, art: ArtifactInstance, rule: RewriteRule, base: Subst
    ) -> tuple[list[Term], list[Term]] | None:
        props = list(art.properties)

        def search(i: int, s: Subst, used: list[Term]) -> tuple[list[Term], Subst] | None:
            if i == len(rule.match):
                return list(used), s
            for p in props:
                if p in used:
                    continue
                s2 = unify(rule.match[i], p, s)
                if s2 is None:
                    continue
                used.append(p)
                found = search(i + 1, s2, used)
                if found is not None:
                    return found
                used.pop()
            return None

        found = search(0, base, [])
        if found is None:
            return None
        matched, subst = found
        if rule.guard is not None:
            try:
                ok, subst = eval_test(rule.guard, subst)
            except EvalError:
                return None
            if not ok:
                return None
        updates = []
        for u in rule.update:
            value = resolve(u, subst)  # may raise EvalError (e.g. division by zero)
            if not is_ground(value):
                raise OpFailure(f"rule produced non-ground property {format_term(value)}")
            updates.append(value)
        return matched, updates

    # --- queries ---

    def release_agent(self, agent: str) -> None:
        for ws in self.workspaces.values():
            for art in ws.artifacts.values():
                art.observers.discard(agent)
            ws.members.discard(agent)

    def observed_by(self, agent: str) -> list[tuple[str, str]]:
        out = []
        for ws in self.workspaces.values():
            for art in ws.artifacts.values():
                if agent in art.observers:
                    out.append((ws.name, art.name))
        return sorted(out)

    def snapshot_workspace(self, name: str) -> dict:
        ws = self._workspace(name)
        return {
            "name": ws.name,
            "members": sorted(ws.members),
            "artifacts": [self.snapshot_artifact(name, a) for a in sorted(ws.artifacts)],
        }

    def snapshot_artifact(self, workspace: str, artifact: str) -> dict:
        ws = self._workspace(workspace)
        art = self._artifact(ws, artifact)
        snap = art.snapshot(workspace)
        snap["operations"] = [
            {"name": op.name, "params": list(op.params)}
            for op in (art.operations[k] for k in sorted(art.operations))
        ]
        snap["observers"] = sorted(art.observers)
        return snap

    def artifact_summary(self, workspace: str, artifact: str) -> dict:
        """The shared summary form embedded by other renderers."""
        return self._artifact(self._workspace(workspace), artifact).snapshot(workspace)

    def _workspace(self, name: str) -> Workspace:
        ws = self.workspaces.get(name)
        if ws is None:
            raise NotFoundError(f"no workspace {name}")
        return ws

    def _artifact(self, ws: Workspace, name: str) -> ArtifactInstance:
        art = ws.artifacts.get(name)
        if art is None:
            raise NotFoundError(f"no artifact {name} in workspace {ws.name}")
        return art
