"""Organisations: groups with role cardinalities, schemes as AND/OR goal
trees, missions, commitments, and derived obligations.

Scheme semantics: a leaf goal counts as satisfied when achieved; an AND node
when all children are satisfied; an OR node when any child is. A leaf is
*enabled* (actionable) while it is unachieved, every AND ancestor has all
subtrees left of the path fully satisfied, and no OR ancestor is already
satisfied. Norms bind roles to missions: adopting the role commits the agent
to the mission, and each enabled mission goal yields an active obligation,
pushed to the agent as an `obligation(org, scheme, goal)` belief.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ConflictError, InvalidSpecError, NotFoundError, PreconditionError
from .terms import ATOM_NAME, Atom, Structure, Term


@dataclass(frozen=True, slots=True)
class RoleSpec:
    name: str
    min: int
    max: int


@dataclass(frozen=True, slots=True)
class GroupSpec:
    name: str
    roles: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class GoalSpec:
    id: str
    type: str  # "and" | "or" | "leaf"
    children: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class MissionSpec:
    name: str
    goals: tuple[str, ...]


@dataclass(frozen=True, slots=True, eq=False)
class SchemeSpec:
    name: str
    root: str
    goals: dict[str, GoalSpec]
    missions: dict[str, MissionSpec]


@dataclass(frozen=True, slots=True)
class NormSpec:
    role: str
    mission: str


@dataclass(frozen=True, slots=True, eq=False)
class OrgSpec:
    name: str
    roles: dict[str, RoleSpec]
    groups: dict[str, GroupSpec]
    schemes: dict[str, SchemeSpec]
    norms: tuple[NormSpec, ...]
    mission_scheme: dict[str, str]  # mission name -> declaring scheme
    document: str  # canonical JSON, the revisioned content


def _ident(value, what: str) -> str:
    if not isinstance(value, str) or not ATOM_NAME.match(value):
        raise InvalidSpecError(f"invalid {what}: {value!r}")
    return value


def parse_org_doc(doc: dict) -> OrgSpec:
    if not isinstance(doc, dict):
        raise InvalidSpecError("organisation document must be an object")
    name = _ident(doc.get("name"), "organisation name")
    roles: dict[str, RoleSpec] = {}
    for r in doc.get("roles", []):
        rn = _ident(r.get("name"), "role name")
        if rn in roles:
            raise InvalidSpecError(f"duplicate role {rn}")
        rmin, rmax = int(r.get("min", 0)), int(r.get("max", 1))
        if not 0 <= rmin <= rmax:
            raise InvalidSpecError(f"role {rn}: need 0 <= min <= max, got {rmin}..{rmax}")
        roles[rn] = RoleSpec(rn, rmin, rmax)
    groups: dict[str, GroupSpec] = {}
    for g in doc.get("groups", []):
        gn = _ident(g.get("name"), "group name")
        if gn in groups:
            raise InvalidSpecError(f"duplicate group {gn}")
        grs = tuple(g.get("roles", []))
        for rn in grs:
            if rn not in roles:
                raise InvalidSpecError(f"group {gn} references unknown role {rn}")
        groups[gn] = GroupSpec(gn, grs)
    schemes: dict[str, SchemeSpec] = {}
    mission_scheme: dict[str, str] = {}
    for s in doc.get("schemes", []):
        scheme = _parse_scheme(s)
        if scheme.name in schemes:
            raise InvalidSpecError(f"duplicate scheme {scheme.name}")
        schemes[scheme.name] = scheme
        for mn in scheme.missions:
            if mn in mission_scheme:
                raise InvalidSpecError(f"mission {mn} declared in two schemes")
            mission_scheme[mn] = scheme.name
    norms = []
    for nm in doc.get("norms", []):
        role, mission = nm.get("role"), nm.get("mission")
        if role not in roles:
            raise InvalidSpecError(f"norm references unknown role {role!r}")
        if mission not in mission_scheme:
            raise InvalidSpecError(f"norm references unknown mission {mission!r}")
        norms.append(NormSpec(role, mission))
    document = json.dumps(doc, sort_keys=True, ensure_ascii=False)
    return OrgSpec(name, roles, groups, schemes, tuple(norms), mission_scheme, document)


def _parse_scheme(s: dict) -> SchemeSpec:
    name = _ident(s.get("name"), "scheme name")
    goals: dict[str, GoalSpec] = {}
    for g in s.get("goals", []):
        gid = _ident(g.get("id"), "goal id")
        gtype = g.get("type")
        if gtype not in ("and", "or", "leaf"):
            raise InvalidSpecError(f"goal {gid}: type must be and|or|leaf, got {gtype!r}")
        children = tuple(g.get("children", []))
        if gtype == "leaf" and children:
            raise InvalidSpecError(f"leaf goal {gid} must not have children")
        if gtype in ("and", "or") and not children:
            raise InvalidSpecError(f"{gtype} goal {gid} needs at least one child")
        if gid in goals:
            raise InvalidSpecError(f"duplicate goal id {gid}")
        goals[gid] = GoalSpec(gid, gtype, children)
    root = s.get("root")
    if root not in goals:
        raise InvalidSpecError(f"scheme {name}: unknown root goal {root!r}")
    # Tree shape: every child id resolves, has a single parent, no cycles,
    # and everything hangs off the root.
    parents: dict[str, str] = {}
    for g in goals.values():
        for c in g.children:
            if c not in goals:
                raise InvalidSpecError(f"goal {g.id} references unknown child {c}")
            if c in parents:
                raise InvalidSpecError(f"goal {c} has two parents")
            if c == root:
                raise InvalidSpecError(f"root goal {root} cannot be a child")
            parents[c] = g.id
    reachable: set[str] = set()
    stack = [root]
    while stack:
        gid = stack.pop()
        if gid in reachable:
            raise InvalidSpecError(f"cycle through goal {gid}")
        reachable.add(gid)
        stack.extend(goals[gid].children)
    if reachable != set(goals):
        stray = sorted(set(goals) - reachable)
        raise InvalidSpecError(f"goal {stray[0]} not reachable from root")
    missions: dict[str, MissionSpec] = {}
    for m in s.get("missions", []):
        mn = _ident(m.get("name"), "mission name")
        if mn in missions:
            raise InvalidSpecError(f"duplicate mission {mn}")
        mgoals = tuple(m.get("goals", []))
        for gid in mgoals:
            if gid not in goals:
                raise InvalidSpecError(f"mission {mn} references unknown goal {gid}")
            if goals[gid].type != "leaf":
                raise InvalidSpecError(f"mission {mn}: goal {gid} is not a leaf")
        missions[mn] = MissionSpec(mn, mgoals)
    return SchemeSpec(name, root, goals, missions)


class SchemeInstance:
    def __init__(self, spec: SchemeSpec):
        self.spec = spec
        self.achieved: set[str] = set()
        self.commitments: set[tuple[str, str]] = set()  # (agent, mission)
        self.status = "running"


class GroupInstance:
    def __init__(self, spec: GroupSpec):
        self.spec = spec
        self.players: dict[str, set[str]] = {r: set() for r in spec.roles}

    def well_formed(self, roles: dict[str, RoleSpec]) -> bool:
        return all(len(self.players[r]) >= roles[r].min for r in self.spec.roles)


# Belief notifications produced by organisation changes:
# (agent, "add"/"del", obligation term).
Notifications = list[tuple[str, str, Term]]


class Organisation:
    def __init__(self, spec: OrgSpec):
        self.spec = spec
        self.groups = {g: GroupInstance(spec.groups[g]) for g in spec.groups}
        self.schemes = {s: SchemeInstance(spec.schemes[s]) for s in spec.schemes}
        # (agent, scheme, goal) -> "active" | "fulfilled"
        self.obligations: dict[tuple[str, str, str], str] = {}

    # --- goal tree evaluation ---

    def evaluate(self, scheme: str, goal: str) -> bool:
        inst = self._scheme(scheme)
        spec = inst.spec.goals.get(goal)
        if spec is None:
            raise NotFoundError(f"no goal {goal} in scheme {scheme}")
        return self._eval(inst, goal)

    def _eval(self, inst: SchemeInstance, goal: str) -> bool:
        g = inst.spec.goals[goal]
        if g.type == "leaf":
            return goal in inst.achieved
        if g.type == "and":
            return all(self._eval(inst, c) for c in g.children)
        return any(self._eval(inst, c) for c in g.children)

    def enabled_leaves(self, scheme: str) -> set[str]:
        inst = self._scheme(scheme)
        out: set[str] = set()

        def visit(goal: str, blocked: bool) -> None:
            g = inst.spec.goals[goal]
            if g.type == "leaf":
                if not blocked and goal not in inst.achieved:
                    out.add(goal)
                return
            if g.type == "or":
                satisfied = self._eval(inst, goal)
                for c in g.children:
                    visit(c, blocked or satisfied)
                return
            prefix_done = True
            for c in g.children:
                visit(c, blocked or not prefix_done)
                prefix_done = prefix_done and self._eval(inst, c)

        visit(inst.spec.root, False)
        return out

    def enabled_goals(self, scheme: str, mission: str) -> set[str]:
        inst = self._scheme(scheme)
        m = inst.spec.missions.get(mission)
        if m is None:
            raise NotFoundError(f"no mission {mission} in scheme {scheme}")
        return self.enabled_leaves(scheme) & set(m.goals)

    # --- mutations ---

    def adopt_role(self, agent: str, group: str, role: str) -> Notifications:
        grp = self.groups.get(group)
        if grp is None:
            raise NotFoundError(f"no group {group} in organisation {self.spec.name}")
        if role not in grp.players:
            raise NotFoundError(f"group {group} has no role {role}")
        players = grp.players[role]
        if agent not in players and len(players) >= self.spec.roles[role].max:
            raise ConflictError(
                f"cardinality-exceeded: role {role} already has {len(players)} players"
            )
        players.add(agent)
        for norm in self.spec.norms:
            if norm.role == role:
                scheme = self.spec.mission_scheme[norm.mission]
                self.schemes[scheme].commitments.add((agent, norm.mission))
        return self._recompute()

    def commit_mission(self, agent: str, scheme: str, mission: str) -> Notifications:
        inst = self._scheme(scheme)
        if mission not in inst.spec.missions:
            raise NotFoundError(f"no mission {mission} in scheme {scheme}")
        inst.commitments.add((agent, mission))
        return self._recompute()

    def set_goal_achieved(self, agent: str, scheme: str, goal: str) -> Notifications:
        inst = self._scheme(scheme)
        spec = inst.spec.goals.get(goal)
        if spec is None:
            raise NotFoundError(f"no goal {goal} in scheme {scheme}")
        if spec.type != "leaf":
            raise PreconditionError(f"goal {goal} is not a leaf")
        committed = any(
            (agent, m.name) in inst.commitments and goal in m.goals
            for m in inst.spec.missions.values()
        )
        if not committed:
            raise PreconditionError(
                f"agent {agent} not committed to a mission containing {goal}"
            )
        inst.achieved.add(goal)
        return self._recompute()

    def remove_agent(self, agent: str) -> Notifications:
        for grp in self.groups.values():
            for players in grp.players.values():
                players.discard(agent)
        for inst in self.schemes.values():
            inst.commitments = {(a, m) for a, m in inst.commitments if a != agent}
        notes = self._recompute()
        return [n for n in notes if n[0] != agent]

    def _recompute(self) -> Notifications:
        """Refresh scheme statuses and the obligation table; returns belief
        add/del notifications for affected agents."""
        notes: Notifications = []
        for sname, inst in self.schemes.items():
            if self._eval(inst, inst.spec.root):
                inst.status = "completed"
            enabled = self.enabled_leaves(sname)
            desired: set[tuple[str, str, str]] = set()
            for agent, mission in inst.commitments:
                for goal in inst.spec.missions[mission].goals:
                    if goal in enabled:
                        desired.add((agent, sname, goal))
            current = {k for k in self.obligations if k[1] == sname}
            for key in sorted(desired - current):
                self.obligations[key] = "active"
                notes.append((key[0], "add", _obligation_term(self.spec.name, key[1], key[2])))
            for key in sorted(current):
                agent, _, goal = key
                state = self.obligations[key]
                if state != "active":
                    continue
                if goal in inst.achieved:
                    self.obligations[key] = "fulfilled"
                    notes.append((agent, "del", _obligation_term(self.spec.name, sname, goal)))
                elif key not in desired:
                    # Disabled without being achieved (e.g. an OR sibling won).
                    del self.obligations[key]
                    notes.append((agent, "del", _obligation_term(self.spec.name, sname, goal)))
        return notes

    # --- queries ---

    def agent_roles(self, agent: str) -> list[tuple[str, str]]:
        out = []
        for gname, grp in self.groups.items():
            for role, players in grp.players.items():
                if agent in players:
                    out.append((gname, role))
        return sorted(out)

    def agent_missions(self, agent: str) -> list[tuple[str, str]]:
        out = []
        for sname, inst in self.schemes.items():
            for a, m in inst.commitments:
                if a == agent:
                    out.append((sname, m))
        return sorted(out)

    def snapshot(self) -> dict:
        return {
            "name": self.spec.name,
            "groups": sorted(self.groups),
            "schemes": sorted(self.schemes),
            "norms": [{"role": n.role, "mission": n.mission} for n in self.spec.norms],
        }

    def snapshot_group(self, group: str) -> dict:
        grp = self.groups.get(group)
        if grp is None:
            raise NotFoundError(f"no group {group} in organisation {self.spec.name}")
        return {
            "organisation": self.spec.name,
            "name": grp.spec.name,
            "well_formed": grp.well_formed(self.spec.roles),
            "roles": [
                {
                    "name": r,
                    "min": self.spec.roles[r].min,
                    "max": self.spec.roles[r].max,
                    "players": sorted(grp.players[r]),
                }
                for r in grp.spec.roles
            ],
        }

    def snapshot_scheme(self, scheme: str) -> dict:
        inst = self._scheme(scheme)
        enabled = self.enabled_leaves(scheme)
        return {
            "organisation": self.spec.name,
            "name": inst.spec.name,
            "status": inst.status,
            "root": inst.spec.root,
            "goals": [
                {
                    "id": g.id,
                    "type": g.type,
                    "children": list(g.children),
                    "satisfied": self._eval(inst, g.id),
                    "achieved": g.id in inst.achieved if g.type == "leaf" else None,
                    "enabled": g.id in enabled if g.type == "leaf" else None,
                }
                for g in (inst.spec.goals[k] for k in sorted(inst.spec.goals))
            ],
            "missions": [
                {"name": m.name, "goals": list(m.goals)}
                for m in (inst.spec.missions[k] for k in sorted(inst.spec.missions))
            ],
            "commitments": [
                {"agent": a, "mission": m} for a, m in sorted(inst.commitments)
            ],
            "obligations": [
                {"agent": a, "goal": g, "state": state}
                for (a, s, g), state in sorted(self.obligations.items())
                if s == scheme
            ],
        }

    def _scheme(self, name: str) -> SchemeInstance:
        inst = self.schemes.get(name)
        if inst is None:
            raise NotFoundError(f"no scheme {name} in organisation {self.spec.name}")
        return inst


def _obligation_term(org: str, scheme: str, goal: str) -> Term:
    return Structure("obligation", (Atom(org), Atom(scheme), Atom(goal)))
