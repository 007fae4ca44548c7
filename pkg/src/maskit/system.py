"""The running multi-agent system: agents, environment, organisations,
directory, and revision history behind one coordination lock.

One re-entrant lock serialises every mutation and snapshot. Agents advance
via a fair round-robin scheduler thread that takes the lock per step, so
HTTP handlers interleave at cycle boundaries and snapshots are always
consistent. `pause()` is a barrier: after it returns no cycle is running.
"""
from __future__ import annotations

import hashlib
import json
import re
import threading
import time

from .agent import PERFORMATIVES, Agent
from .directory import Directory
from .environment import Environment
from .errors import (
    ConflictError,
    InvalidSpecError,
    NotFoundError,
    UnsupportedPerformativeError,
)
from .organisation import Notifications, Organisation, parse_org_doc
from .parsing import parse_plan_body, parse_plan_library
from .revisions import RevisionRecord, RevisionStore
from .terms import Term

AGENT_NAME = re.compile(r"[a-z][a-z0-9_]*\Z")  # doubles as a URI segment


class System:
    def __init__(self, name: str = "mas", persist_dir=None):
        self.name = name
        self.lock = threading.RLock()
        self.agents: dict[str, Agent] = {}
        self.env = Environment()
        self.orgs: dict[str, Organisation] = {}
        self.directory = Directory()
        self.revisions = RevisionStore(persist_dir)
        self.scheduler = Scheduler(self)

    # --- agent lifecycle ---

    def spawn_agent(self, name: str, plan_source: str) -> Agent:
        with self.lock:
            if not AGENT_NAME.match(name or ""):
                raise InvalidSpecError(f"invalid agent name: {name!r}")
            if name in self.agents:
                raise ConflictError(f"agent {name} already exists")
            plans = parse_plan_library(plan_source)  # propagate before registering
            agent = Agent(name, plans, plan_source)
            self.revisions.record(plan_entity(name), plan_source)
            self.agents[name] = agent
            return agent

    def kill_agent(self, name: str) -> None:
        with self.lock:
            agent = self.agents.pop(name, None)
            if agent is None:
                raise NotFoundError(f"no agent {name}")
            agent.running = False
            self.directory.prune_agent(name)
            self.env.release_agent(name)
            for org in self.orgs.values():
                self._push_notifications(org.remove_agent(name))
            # Revision history is retained on purpose.

    def update_plans(self, name: str, plan_source: str, bump: str = "patch") -> RevisionRecord:
        with self.lock:
            agent = self._agent(name)
            plans = parse_plan_library(plan_source)  # agent unchanged on error
            record = self.revisions.record(plan_entity(name), plan_source, bump)
            agent.swap_plans(plans, plan_source)
            return record

    # --- interaction ---

    def deliver_message(self, to: str, sender: str, performative: str, content: Term) -> int:
        with self.lock:
            agent = self._agent(to)
            if performative not in PERFORMATIVES:
                raise UnsupportedPerformativeError(
                    f"unsupported performative {performative!r}; known: {', '.join(PERFORMATIVES)}"
                )
            return agent.queue_message(sender, performative, content).id

    def submit_command(self, to: str, body_source: str) -> int:
        with self.lock:
            agent = self._agent(to)
            body = parse_plan_body(body_source)
            return agent.queue_command(body_source, body).id

    # --- directory ---

    def register_service(self, agent: str, service: str) -> None:
        with self.lock:
            self._agent(agent).services.add(service)
            self.directory.register(agent, service)

    def deregister_service(self, agent: str, service: str) -> None:
        with self.lock:
            self._agent(agent).services.discard(service)
            self.directory.deregister(agent, service)

    # --- environment ---

    def create_workspace(self, name: str):
        with self.lock:
            return self.env.create_workspace(name)

    def register_template(self, doc: dict) -> RevisionRecord:
        with self.lock:
            template, _ = self.env.register_template(doc)
            return self.revisions.record(template_entity(template.name), template.document)

    def instantiate(self, workspace: str, artifact: str, template: str):
        with self.lock:
            return self.env.instantiate(workspace, artifact, template)

    def join_workspace(self, agent: str, workspace: str) -> None:
        with self.lock:
            self._agent(agent)
            self.env.join(agent, workspace)

    def focus(self, agent: str, workspace: str, artifact: str) -> None:
        with self.lock:
            a = self._agent(agent)
            newly = self.env.focus(agent, workspace, artifact)
            a.observed.add((workspace, artifact))
            if newly:
                ws = self.env.workspaces[workspace]
                for prop in ws.artifacts[artifact].properties:
                    a.queue_percept("add", prop, "percept")

    def unfocus(self, agent: str, workspace: str, artifact: str) -> None:
        with self.lock:
            a = self._agent(agent)
            removed = self.env.unfocus(agent, workspace, artifact)
            a.observed.discard((workspace, artifact))
            if removed:
                ws = self.env.workspaces[workspace]
                for prop in ws.artifacts[artifact].properties:
                    a.queue_percept("del", prop, "percept")

    def invoke(self, agent: str, workspace: str, artifact: str, op: Term) -> None:
        with self.lock:
            percepts = self.env.invoke(agent, workspace, artifact, op)
            for observer, action, prop in percepts:
                target = self.agents.get(observer)
                if target is not None:
                    target.queue_percept(action, prop, "percept")

    # --- organisation ---

    def load_org_spec(self, doc: dict) -> RevisionRecord:
        with self.lock:
            spec = parse_org_doc(doc)
            if spec.name in self.orgs:
                raise ConflictError(f"organisation {spec.name} already exists")
            self.orgs[spec.name] = Organisation(spec)
            return self.revisions.record(org_entity(spec.name), spec.document)

    def adopt_role(self, agent: str, org: str, group: str, role: str) -> None:
        with self.lock:
            a = self._agent(agent)
            o = self._org(org)
            notes = o.adopt_role(agent, group, role)
            a.roles.add((org, group, role))
            self._sync_missions(a, o)
            self._push_notifications(notes)

    def commit_mission(self, agent: str, org: str, scheme: str, mission: str) -> None:
        with self.lock:
            a = self._agent(agent)
            o = self._org(org)
            notes = o.commit_mission(agent, scheme, mission)
            self._sync_missions(a, o)
            self._push_notifications(notes)

    def set_goal_achieved(self, agent: str, org: str, scheme: str, goal: str) -> None:
        with self.lock:
            self._agent(agent)
            notes = self._org(org).set_goal_achieved(agent, scheme, goal)
            self._push_notifications(notes)

    def _sync_missions(self, agent: Agent, org: Organisation) -> None:
        for scheme, mission in org.agent_missions(agent.name):
            agent.missions.add((org.spec.name, scheme, mission))

    def _push_notifications(self, notes: Notifications) -> None:
        for name, action, term in notes:
            target = self.agents.get(name)
            if target is not None:
                target.queue_percept(action, term, "organisation")

    # --- stepping ---

    def step_agent(self, name: str) -> None:
        with self.lock:
            self._agent(name).step(self)

    def step_all(self, cycles: int = 1) -> None:
        with self.lock:
            for _ in range(cycles):
                for agent in list(self.agents.values()):
                    if agent.running:
                        agent.step(self)

    def quiescent(self) -> bool:
        with self.lock:
            return all(a.idle() for a in self.agents.values())

    def settle(self, max_cycles: int = 10_000) -> bool:
        """Drive manual cycles until nothing is left to do. For tests and
        scripts running without the scheduler thread."""
        for _ in range(max_cycles):
            if self.quiescent():
                return True
            self.step_all(1)
        return self.quiescent()

    # --- views ---

    def snapshot_agent(self, name: str) -> dict:
        with self.lock:
            agent = self._agent(name)
            snap = agent.snapshot()
            head = self.revisions.head(plan_entity(name))
            snap["revision"] = head.revision if head else 0
            snap["semver"] = head.semver_str if head else "0.0.0"
            snap["observed"] = [
                self.env.artifact_summary(o["workspace"], o["artifact"])
                for o in snap["observed"]
            ]
            return snap

    def agent_names(self) -> list[str]:
        with self.lock:
            return sorted(self.agents)

    def state_digest(self) -> str:
        """Hash of all snapshots plus revision heads. Timestamps and cycle
        counters are excluded so identical boots (and idempotent re-applies
        settled at different times) compare equal."""
        with self.lock:
            payload = {
                "agents": {
                    name: {
                        **{k: v for k, v in self.snapshot_agent(name).items() if k != "cycle"},
                        "messages": [
                            {
                                "id": m.id,
                                "sender": m.sender,
                                "performative": m.performative,
                                "status": m.status,
                                "reason": m.reason,
                            }
                            for m in sorted(self.agents[name].messages.values(), key=lambda m: m.id)
                        ],
                        "commands": [
                            {"id": c.id, "source": c.source, "status": c.status, "reason": c.reason}
                            for c in sorted(self.agents[name].commands.values(), key=lambda c: c.id)
                        ],
                    }
                    for name in sorted(self.agents)
                },
                "workspaces": {
                    w: self.env.snapshot_workspace(w) for w in sorted(self.env.workspaces)
                },
                "templates": sorted(self.env.templates),
                "organisations": {
                    o: {
                        "groups": {g: org.snapshot_group(g) for g in sorted(org.groups)},
                        "schemes": {s: org.snapshot_scheme(s) for s in sorted(org.schemes)},
                    }
                    for o, org in sorted(self.orgs.items())
                },
                "directory": self.directory.lookup(),
                "revisions": {
                    entity: {
                        "revision": self.revisions.head(entity).revision,
                        "hash": self.revisions.head(entity).content_hash,
                        "semver": self.revisions.head(entity).semver_str,
                    }
                    for entity in self.revisions.entities()
                },
            }
        blob = json.dumps(payload, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def _agent(self, name: str) -> Agent:
        agent = self.agents.get(name)
        if agent is None:
            raise NotFoundError(f"no agent {name}")
        return agent

    def _org(self, name: str) -> Organisation:
        org = self.orgs.get(name)
        if org is None:
            raise NotFoundError(f"no organisation {name}")
        return org


def plan_entity(agent: str) -> str:
    return f"/agents/{agent}/plans"


def template_entity(template: str) -> str:
    return f"/artifact-templates/{template}"


def org_entity(org: str) -> str:
    return f"/organisations/{org}"


class Scheduler:
    """Round-robin driver thread with a pause/resume switch."""

    def __init__(self, system: System):
        self._system = system
        self._thread: threading.Thread | None = None
        self._stop = threading.Event()
        self._run = threading.Event()
        self._run.set()

    def start(self) -> None:
        if self._thread is not None:
            return
        self._thread = threading.Thread(target=self._loop, name="maskit-scheduler", daemon=True)
        self._thread.start()

    def _loop(self) -> None:
        index = 0
        while not self._stop.is_set():
            if not self._run.is_set():
                time.sleep(0.001)
                continue
            busy = False
            with self._system.lock:
                names = list(self._system.agents)
                if names:
                    agent = self._system.agents.get(names[index % len(names)])
                    index += 1
                    if agent is not None and agent.running:
                        busy = not agent.idle()
                        agent.step(self._system)
            time.sleep(0 if busy else 0.001)

    def pause(self) -> None:
        """Returns only after any in-flight cycle has finished."""
        self._run.clear()
        with self._system.lock:
            pass

    def resume(self) -> None:
        self._run.set()

    def stop(self) -> None:
        self._stop.set()
        thread = self._thread
        if thread is not None:
            thread.join(timeout=2)
            self._thread = None

    @property
    def paused(self) -> bool:
        return not self._run.is_set()
