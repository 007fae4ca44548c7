"""The resource-oriented HTTP surface: routing, JSON representations,
hypermedia links, verb semantics, and error mapping.

The app is a plain WSGI callable around an explicit route table; the table
is the single source of truth for which verbs exist where, for the Allow
header on OPTIONS and 405 responses, and for the link documents that make
the API navigable from `GET /`.
"""
from __future__ import annotations

import json
from typing import Callable
from urllib.parse import parse_qs

from .agent import CommandRecord, MessageRecord
from .errors import (
    ConflictError,
    EvalError,
    InvalidSpecError,
    MasError,
    NotFoundError,
    OpFailure,
    PreconditionError,
    UnsupportedPerformativeError,
)
from .parsing import ParseError, parse_term
from .revisions import BUMPS, RevisionRecord
from .system import System, org_entity, plan_entity, template_entity
from .terms import format_term

MEDIA_TYPE = "application/json; charset=utf-8"


class ApiError(Exception):
    def __init__(
        self,
        status: int,
        code: str,
        message: str,
        detail: dict | None = None,
        headers: dict | None = None,
    ):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail
        self.headers = headers or {}

    def body(self) -> dict:
        doc = {"status": self.status, "code": self.code, "message": self.message}
        if self.detail:
            doc["detail"] = self.detail
        return doc


def _to_api_error(e: Exception) -> ApiError:
    if isinstance(e, ParseError):
        detail = {"line": e.line, "column": e.col}
        if e.expected:
            detail["expected"] = list(e.expected)
        return ApiError(400, "parse-error", str(e), detail)
    if isinstance(e, InvalidSpecError):
        return ApiError(400, "invalid-spec", str(e))
    if isinstance(e, NotFoundError):
        return ApiError(404, "not-found", str(e))
    if isinstance(e, ConflictError):
        return ApiError(409, "conflict", str(e))
    if isinstance(e, UnsupportedPerformativeError):
        return ApiError(422, "unsupported-performative", str(e))
    if isinstance(e, (PreconditionError, OpFailure)):
        return ApiError(409, "precondition-failed", str(e))
    if isinstance(e, (EvalError, MasError)):
        return ApiError(400, "invalid-request", str(e))
    raise e


class Route:
    def __init__(self, pattern: str, handlers: dict[str, Callable]):
        self.pattern = pattern
        self.parts = tuple(pattern.strip("/").split("/")) if pattern != "/" else ()
        self.handlers = handlers
        self.allow = ",".join([*handlers, "OPTIONS"])

    def match(self, segments: tuple[str, ...]) -> dict[str, str] | None:
        if len(segments) != len(self.parts):
            return None
        params: dict[str, str] = {}
        for part, seg in zip(self.parts, segments):
            if part.startswith("{"):
                params[part[1:-1]] = seg
            elif part != seg:
                return None
        return params


class RestApi:
    """WSGI application over a System."""

    def __init__(self, system: System):
        self.system = system
        s = self
        self.routes = [
            Route("/", {"GET": s.root}),
            Route("/agents", {"GET": s.agents_index, "POST": s.agents_create}),
            Route("/agents/{agent}", {"GET": s.agent_show, "DELETE": s.agent_delete}),
            Route("/agents/{agent}/plans", {"GET": s.plans_show, "PUT": s.plans_update}),
            Route("/agents/{agent}/beliefs", {"GET": s.beliefs_show}),
            Route("/agents/{agent}/log", {"GET": s.log_show}),
            Route("/agents/{agent}/inbox", {"GET": s.inbox_index, "POST": s.inbox_post}),
            Route("/agents/{agent}/inbox/{mid}", {"GET": s.inbox_show}),
            Route("/agents/{agent}/command", {"GET": s.command_index, "POST": s.command_post}),
            Route("/agents/{agent}/command/{cid}", {"GET": s.command_show}),
            Route("/agents/{agent}/revisions", {"GET": s.agent_revisions}),
            Route("/agents/{agent}/revisions/{rev}", {"GET": s.agent_revision}),
            Route("/workspaces", {"GET": s.workspaces_index, "POST": s.workspaces_create}),
            Route("/workspaces/{ws}", {"GET": s.workspace_show}),
            Route("/workspaces/{ws}/artifacts", {"POST": s.artifacts_create}),
            Route("/workspaces/{ws}/artifacts/{art}", {"GET": s.artifact_show}),
            Route("/artifact-templates", {"GET": s.templates_index, "POST": s.templates_create}),
            Route("/artifact-templates/{tpl}", {"GET": s.template_show, "PUT": s.template_put}),
            Route("/artifact-templates/{tpl}/revisions", {"GET": s.template_revisions}),
            Route("/artifact-templates/{tpl}/revisions/{rev}", {"GET": s.template_revision}),
            Route("/organisations", {"GET": s.orgs_index, "POST": s.orgs_create}),
            Route("/organisations/{org}", {"GET": s.org_show}),
            Route("/organisations/{org}/groups/{grp}", {"GET": s.group_show}),
            Route("/organisations/{org}/groups/{grp}/players", {"POST": s.players_post}),
            Route("/organisations/{org}/schemes/{sch}", {"GET": s.scheme_show}),
            Route("/organisations/{org}/revisions", {"GET": s.org_revisions}),
            Route("/organisations/{org}/revisions/{rev}", {"GET": s.org_revision}),
            Route("/services", {"GET": s.services_show}),
        ]
        self.methods_by_pattern = {r.pattern: list(r.handlers) for r in self.routes}

    # --- WSGI plumbing ---

    def __call__(self, environ, start_response):
        method = environ["REQUEST_METHOD"].upper()
        path = environ.get("PATH_INFO") or "/"
        query = parse_qs(environ.get("QUERY_STRING", ""))
        try:
            body = self._read_body(environ)
            status, payload, headers = self.dispatch(method, path, body, query)
        except ApiError as e:
            status, payload, headers = e.status, e.body(), e.headers
        data = b"" if payload is None else json.dumps(payload, ensure_ascii=False).encode("utf-8")
        out = [("Content-Type", MEDIA_TYPE), ("Content-Length", str(len(data)))]
        out.extend(headers.items())
        # The browser console is served from a separate origin (static files);
        # the paper's scope excludes security, so CORS is wide open.
        out.append(("Access-Control-Allow-Origin", "*"))
        if method == "OPTIONS" and "Allow" in headers:
            out.append(("Access-Control-Allow-Methods", headers["Allow"]))
            out.append(("Access-Control-Allow-Headers", "Content-Type"))
        start_response(f"{status} {_REASONS.get(status, 'Unknown')}", out)
        return [data]

    def _read_body(self, environ) -> dict | None:
        try:
            length = int(environ.get("CONTENT_LENGTH") or 0)
        except ValueError:
            length = 0
        if length <= 0:
            return None
        raw = environ["wsgi.input"].read(length)
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise ApiError(400, "malformed-json", f"request body is not valid JSON: {e}")
        if not isinstance(doc, dict):
            raise ApiError(400, "malformed-json", "request body must be a JSON object")
        return doc

    def dispatch(self, method: str, path: str, body: dict | None, query: dict):
        segments = tuple(s for s in path.strip("/").split("/") if s) if path != "/" else ()
        for route in self.routes:
            params = route.match(segments)
            if params is None:
                continue
            if method == "OPTIONS":
                doc = {
                    "allow": route.allow.split(","),
                    "links": [
                        {"rel": "self", "href": path, "methods": list(route.handlers)}
                    ],
                }
                return 200, doc, {"Allow": route.allow}
            handler = route.handlers.get(method)
            if handler is None:
                raise ApiError(
                    405,
                    "method-not-allowed",
                    f"{method} is not allowed on {route.pattern}",
                    {"allow": route.allow.split(",")},
                    headers={"Allow": route.allow},
                )
            try:
                return handler(params, body, query)
            except MasError as e:
                raise _to_api_error(e) from e
        raise ApiError(404, "not-found", f"no resource at {path}")

    # --- link helpers ---

    def link(self, rel: str, pattern: str, **params) -> dict:
        href = pattern
        for key, value in params.items():
            href = href.replace("{" + key + "}", str(value))
        return {"rel": rel, "href": href, "methods": self.methods_by_pattern[pattern]}

    def _require(self, body: dict | None, *keys: str) -> list:
        """Fetch required string fields from the JSON body."""
        if body is None:
            raise ApiError(400, "missing-body", f"a JSON body with {keys} is required")
        missing = [k for k in keys if k not in body]
        if missing:
            raise ApiError(400, "missing-field", f"missing field(s): {', '.join(missing)}")
        values = [body[k] for k in keys]
        for key, value in zip(keys, values):
            if not isinstance(value, str):
                raise ApiError(400, "invalid-request", f"field {key!r} must be a string")
        return values

    def _bump(self, body: dict) -> str:
        bump = body.get("bump", "patch")
        if bump not in BUMPS:
            raise ApiError(400, "invalid-request", f"bump must be one of {BUMPS}")
        return bump

    # --- root & agents ---

    def root(self, params, body, query):
        doc = {
            "name": self.system.name,
            "links": [
                self.link("self", "/"),
                self.link("agents", "/agents"),
                self.link("workspaces", "/workspaces"),
                self.link("organisations", "/organisations"),
                self.link("services", "/services"),
            ],
        }
        return 200, doc, {}

    def agents_index(self, params, body, query):
        names = self.system.agent_names()
        doc = {
            "items": [{"name": n, "href": f"/agents/{n}"} for n in names],
            "links": [
                self.link("self", "/agents"),
                self.link("root", "/"),
                *(self.link("item", "/agents/{agent}", agent=n) for n in names),
            ],
        }
        return 200, doc, {}

    def agents_create(self, params, body, query):
        name, plans = self._require(body, "name", "plans")
        self.system.spawn_agent(name, plans)
        doc, _ = self._agent_doc(name)
        return 201, doc, {"Location": f"/agents/{name}"}

    def _agent_doc(self, name: str):
        snap = self.system.snapshot_agent(name)
        links = [
            self.link("self", "/agents/{agent}", agent=name),
            self.link("collection", "/agents"),
            self.link("plans", "/agents/{agent}/plans", agent=name),
            self.link("beliefs", "/agents/{agent}/beliefs", agent=name),
            self.link("log", "/agents/{agent}/log", agent=name),
            self.link("inbox", "/agents/{agent}/inbox", agent=name),
            self.link("command", "/agents/{agent}/command", agent=name),
            self.link("revisions", "/agents/{agent}/revisions", agent=name),
        ]
        for obs in snap["observed"]:
            links.append(
                self.link(
                    "observes",
                    "/workspaces/{ws}/artifacts/{art}",
                    ws=obs["workspace"],
                    art=obs["name"],
                )
            )
        for role in snap["roles"]:
            links.append(
                self.link(
                    "role",
                    "/organisations/{org}/groups/{grp}",
                    org=role["organisation"],
                    grp=role["group"],
                )
            )
        snap["links"] = links
        return snap, links

    def agent_show(self, params, body, query):
        doc, _ = self._agent_doc(params["agent"])
        return 200, doc, {}

    def agent_delete(self, params, body, query):
        self.system.kill_agent(params["agent"])
        return 204, None, {}

    # --- plans, beliefs, log ---

    def plans_show(self, params, body, query):
        name = params["agent"]
        snap = self.system.snapshot_agent(name)
        doc = {
            "agent": name,
            "source": snap["plan_source"],
            "revision": snap["revision"],
            "semver": snap["semver"],
            "links": [
                self.link("self", "/agents/{agent}/plans", agent=name),
                self.link("agent", "/agents/{agent}", agent=name),
                self.link("revisions", "/agents/{agent}/revisions", agent=name),
            ],
        }
        return 200, doc, {}

    def plans_update(self, params, body, query):
        name = params["agent"]
        (source,) = self._require(body, "source")
        record = self.system.update_plans(name, source, self._bump(body or {}))
        doc = {
            "agent": name,
            "revision": record.revision,
            "semver": record.semver_str,
            "links": [
                self.link("self", "/agents/{agent}/plans", agent=name),
                self.link("agent", "/agents/{agent}", agent=name),
                self.link(
                    "revision",
                    "/agents/{agent}/revisions/{rev}",
                    agent=name,
                    rev=record.revision,
                ),
            ],
        }
        return 200, doc, {}

    def beliefs_show(self, params, body, query):
        name = params["agent"]
        snap = self.system.snapshot_agent(name)
        doc = {
            "agent": name,
            "beliefs": snap["beliefs"],
            "links": [
                self.link("self", "/agents/{agent}/beliefs", agent=name),
                self.link("agent", "/agents/{agent}", agent=name),
            ],
        }
        return 200, doc, {}

    def log_show(self, params, body, query):
        name = params["agent"]
        with self.system.lock:
            agent = self.system.agents.get(name)
            if agent is None:
                raise ApiError(404, "not-found", f"no agent {name}")
            lines = list(agent.log)
        doc = {
            "agent": name,
            "lines": lines,
            "links": [
                self.link("self", "/agents/{agent}/log", agent=name),
                self.link("agent", "/agents/{agent}", agent=name),
            ],
        }
        return 200, doc, {}

    # --- messages & commands as resources ---

    def _message_doc(self, agent: str, rec: MessageRecord) -> dict:
        return {
            "id": rec.id,
            "agent": agent,
            "sender": rec.sender,
            "performative": rec.performative,
            "content": format_term(rec.content),
            "status": rec.status,
            "reason": rec.reason,
            "created_at": rec.created_at,
            "updated_at": rec.updated_at,
            "links": [
                self.link("self", "/agents/{agent}/inbox/{mid}", agent=agent, mid=rec.id),
                self.link("agent", "/agents/{agent}", agent=agent),
            ],
        }

    def inbox_index(self, params, body, query):
        name = params["agent"]
        with self.system.lock:
            agent = self.system.agents.get(name)
            if agent is None:
                raise ApiError(404, "not-found", f"no agent {name}")
            items = [self._message_doc(name, m) for m in sorted(agent.messages.values(), key=lambda m: m.id)]
        doc = {
            "agent": name,
            "items": items,
            "links": [
                self.link("self", "/agents/{agent}/inbox", agent=name),
                self.link("agent", "/agents/{agent}", agent=name),
                *(
                    self.link("item", "/agents/{agent}/inbox/{mid}", agent=name, mid=i["id"])
                    for i in items
                ),
            ],
        }
        return 200, doc, {}

    def inbox_post(self, params, body, query):
        name = params["agent"]
        performative, content_src = self._require(body, "performative", "content")
        sender = (body or {}).get("sender", "external")
        if not isinstance(sender, str):
            raise ApiError(400, "invalid-request", "field 'sender' must be a string")
        content = parse_term(content_src)  # 400 before any record is created
        mid = self.system.deliver_message(name, sender, performative, content)
        with self.system.lock:
            doc = self._message_doc(name, self.system.agents[name].messages[mid])
        return 201, doc, {"Location": f"/agents/{name}/inbox/{mid}"}

    def inbox_show(self, params, body, query):
        name = params["agent"]
        mid = _int_param(params["mid"], "message id")
        with self.system.lock:
            agent = self.system.agents.get(name)
            if agent is None or mid not in agent.messages:
                raise ApiError(404, "not-found", f"no message {mid} for agent {name}")
            doc = self._message_doc(name, agent.messages[mid])
        return 200, doc, {}

    def _command_doc(self, agent: str, rec: CommandRecord) -> dict:
        return {
            "id": rec.id,
            "agent": agent,
            "body": rec.source,
            "status": rec.status,
            "reason": rec.reason,
            "created_at": rec.created_at,
            "updated_at": rec.updated_at,
            "links": [
                self.link("self", "/agents/{agent}/command/{cid}", agent=agent, cid=rec.id),
                self.link("agent", "/agents/{agent}", agent=agent),
            ],
        }

    def command_index(self, params, body, query):
        name = params["agent"]
        with self.system.lock:
            agent = self.system.agents.get(name)
            if agent is None:
                raise ApiError(404, "not-found", f"no agent {name}")
            items = [self._command_doc(name, c) for c in sorted(agent.commands.values(), key=lambda c: c.id)]
        doc = {
            "agent": name,
            "items": items,
            "links": [
                self.link("self", "/agents/{agent}/command", agent=name),
                self.link("agent", "/agents/{agent}", agent=name),
                *(
                    self.link("item", "/agents/{agent}/command/{cid}", agent=name, cid=i["id"])
                    for i in items
                ),
            ],
        }
        return 200, doc, {}

    def command_post(self, params, body, query):
        name = params["agent"]
        (source,) = self._require(body, "body")
        cid = self.system.submit_command(name, source)
        with self.system.lock:
            doc = self._command_doc(name, self.system.agents[name].commands[cid])
        return 201, doc, {"Location": f"/agents/{name}/command/{cid}"}

    def command_show(self, params, body, query):
        name = params["agent"]
        cid = _int_param(params["cid"], "command id")
        with self.system.lock:
            agent = self.system.agents.get(name)
            if agent is None or cid not in agent.commands:
                raise ApiError(404, "not-found", f"no command {cid} for agent {name}")
            doc = self._command_doc(name, agent.commands[cid])
        return 200, doc, {}

    # --- revisions ---

    def _revisions_index(self, entity: str, self_pattern: str, item_pattern: str, **params):
        records = self.system.revisions.list(entity)
        if not records:
            raise ApiError(404, "not-found", f"no revisions for {entity}")
        items = [
            {
                "revision": r.revision,
                "semver": r.semver_str,
                "content_hash": r.content_hash,
                "created_at": r.created_at,
            }
            for r in records
        ]
        doc = {
            "entity": entity,
            "items": items,
            "links": [
                self.link("self", self_pattern, **params),
                *(
                    self.link("item", item_pattern, rev=r.revision, **params)
                    for r in records
                ),
            ],
        }
        return 200, doc, {}

    def _revision_doc(self, record: RevisionRecord, self_pattern: str, parent: dict, **params):
        doc = {
            "entity": record.entity,
            "revision": record.revision,
            "semver": record.semver_str,
            "content": record.content,
            "content_hash": record.content_hash,
            "created_at": record.created_at,
            "links": [self.link("self", self_pattern, **params), parent],
        }
        return 200, doc, {}

    def agent_revisions(self, params, body, query):
        # No liveness check: history outlives the agent on purpose.
        name = params["agent"]
        return self._revisions_index(
            plan_entity(name),
            "/agents/{agent}/revisions",
            "/agents/{agent}/revisions/{rev}",
            agent=name,
        )

    def agent_revision(self, params, body, query):
        name = params["agent"]
        rev = _int_param(params["rev"], "revision")
        record = self.system.revisions.get(plan_entity(name), rev)
        return self._revision_doc(
            record,
            "/agents/{agent}/revisions/{rev}",
            self.link("entity", "/agents/{agent}/plans", agent=name),
            agent=name,
            rev=rev,
        )

    # --- workspaces & artifacts ---

    def workspaces_index(self, params, body, query):
        with self.system.lock:
            names = sorted(self.system.env.workspaces)
        doc = {
            "items": [{"name": n, "href": f"/workspaces/{n}"} for n in names],
            "links": [
                self.link("self", "/workspaces"),
                self.link("root", "/"),
                self.link("artifact-templates", "/artifact-templates"),
                *(self.link("item", "/workspaces/{ws}", ws=n) for n in names),
            ],
        }
        return 200, doc, {}

    def workspaces_create(self, params, body, query):
        (name,) = self._require(body, "name")
        self.system.create_workspace(name)
        doc, _ = self._workspace_doc(name)
        return 201, doc, {"Location": f"/workspaces/{name}"}

    def _workspace_doc(self, name: str):
        with self.system.lock:
            snap = self.system.env.snapshot_workspace(name)
        links = [
            self.link("self", "/workspaces/{ws}", ws=name),
            self.link("collection", "/workspaces"),
            self.link("create-artifact", "/workspaces/{ws}/artifacts", ws=name),
            *(
                self.link("artifact", "/workspaces/{ws}/artifacts/{art}", ws=name, art=a["name"])
                for a in snap["artifacts"]
            ),
            *(self.link("member", "/agents/{agent}", agent=m) for m in snap["members"]),
        ]
        snap["links"] = links
        return snap, links

    def workspace_show(self, params, body, query):
        doc, _ = self._workspace_doc(params["ws"])
        return 200, doc, {}

    def artifacts_create(self, params, body, query):
        ws = params["ws"]
        name, template = self._require(body, "name", "template")
        self.system.instantiate(ws, name, template)
        doc = self._artifact_doc(ws, name)
        return 201, doc, {"Location": f"/workspaces/{ws}/artifacts/{name}"}

    def _artifact_doc(self, ws: str, name: str) -> dict:
        with self.system.lock:
            snap = self.system.env.snapshot_artifact(ws, name)
        snap["links"] = [
            self.link("self", "/workspaces/{ws}/artifacts/{art}", ws=ws, art=name),
            self.link("workspace", "/workspaces/{ws}", ws=ws),
            self.link("template", "/artifact-templates/{tpl}", tpl=snap["template"]),
            *(self.link("observer", "/agents/{agent}", agent=o) for o in snap["observers"]),
        ]
        return snap

    def artifact_show(self, params, body, query):
        return 200, self._artifact_doc(params["ws"], params["art"]), {}

    # --- artifact templates ---

    def templates_index(self, params, body, query):
        with self.system.lock:
            names = sorted(self.system.env.templates)
        doc = {
            "items": [{"name": n, "href": f"/artifact-templates/{n}"} for n in names],
            "links": [
                self.link("self", "/artifact-templates"),
                self.link("workspaces", "/workspaces"),
                *(self.link("item", "/artifact-templates/{tpl}", tpl=n) for n in names),
            ],
        }
        return 200, doc, {}

    def templates_create(self, params, body, query):
        if body is None:
            raise ApiError(400, "missing-body", "a template document is required")
        name = body.get("name")
        with self.system.lock:
            existing = self.system.env.templates.get(name) if isinstance(name, str) else None
            if existing is not None:
                incoming = json.dumps(body, sort_keys=True, ensure_ascii=False)
                if incoming != existing.document:
                    raise ApiError(409, "conflict", f"template {name} already exists")
                # Identical re-registration: idempotent accept.
                return 200, self._template_doc(name), {}
            self.system.register_template(body)
        return 201, self._template_doc(name), {"Location": f"/artifact-templates/{name}"}

    def template_put(self, params, body, query):
        name = params["tpl"]
        if body is None:
            raise ApiError(400, "missing-body", "a template document is required")
        doc = dict(body)
        doc.setdefault("name", name)
        if doc.get("name") != name:
            raise ApiError(400, "invalid-spec", "template name must match the URI")
        bump = self._bump(doc)
        doc.pop("bump", None)
        with self.system.lock:
            created = name not in self.system.env.templates
            template, _ = self.system.env.register_template(doc)
            self.system.revisions.record(template_entity(name), template.document, bump)
        status = 201 if created else 200
        headers = {"Location": f"/artifact-templates/{name}"} if created else {}
        return status, self._template_doc(name), headers

    def _template_doc(self, name: str) -> dict:
        with self.system.lock:
            tpl = self.system.env.templates.get(name)
            if tpl is None:
                raise ApiError(404, "not-found", f"no template {name}")
            head = self.system.revisions.head(template_entity(name))
        return {
            "name": name,
            "document": json.loads(tpl.document),
            "revision": head.revision if head else 0,
            "semver": head.semver_str if head else "0.0.0",
            "links": [
                self.link("self", "/artifact-templates/{tpl}", tpl=name),
                self.link("collection", "/artifact-templates"),
                self.link("revisions", "/artifact-templates/{tpl}/revisions", tpl=name),
            ],
        }

    def template_show(self, params, body, query):
        return 200, self._template_doc(params["tpl"]), {}

    def template_revisions(self, params, body, query):
        name = params["tpl"]
        return self._revisions_index(
            template_entity(name),
            "/artifact-templates/{tpl}/revisions",
            "/artifact-templates/{tpl}/revisions/{rev}",
            tpl=name,
        )

    def template_revision(self, params, body, query):
        name = params["tpl"]
        rev = _int_param(params["rev"], "revision")
        record = self.system.revisions.get(template_entity(name), rev)
        return self._revision_doc(
            record,
            "/artifact-templates/{tpl}/revisions/{rev}",
            self.link("entity", "/artifact-templates/{tpl}", tpl=name),
            tpl=name,
            rev=rev,
        )

    # --- organisations ---

    def orgs_index(self, params, body, query):
        with self.system.lock:
            names = sorted(self.system.orgs)
        doc = {
            "items": [{"name": n, "href": f"/organisations/{n}"} for n in names],
            "links": [
                self.link("self", "/organisations"),
                self.link("root", "/"),
                *(self.link("item", "/organisations/{org}", org=n) for n in names),
            ],
        }
        return 200, doc, {}

    def orgs_create(self, params, body, query):
        if body is None:
            raise ApiError(400, "missing-body", "an organisation document is required")
        record = self.system.load_org_spec(body)
        name = body["name"]
        doc = self._org_doc(name)
        doc["revision"] = record.revision
        return 201, doc, {"Location": f"/organisations/{name}"}

    def _org_doc(self, name: str) -> dict:
        with self.system.lock:
            org = self.system.orgs.get(name)
            if org is None:
                raise ApiError(404, "not-found", f"no organisation {name}")
            snap = org.snapshot()
        snap["links"] = [
            self.link("self", "/organisations/{org}", org=name),
            self.link("collection", "/organisations"),
            self.link("revisions", "/organisations/{org}/revisions", org=name),
            *(
                self.link("group", "/organisations/{org}/groups/{grp}", org=name, grp=g)
                for g in snap["groups"]
            ),
            *(
                self.link("scheme", "/organisations/{org}/schemes/{sch}", org=name, sch=s)
                for s in snap["schemes"]
            ),
        ]
        return snap

    def org_show(self, params, body, query):
        return 200, self._org_doc(params["org"]), {}

    def group_show(self, params, body, query):
        org, grp = params["org"], params["grp"]
        with self.system.lock:
            if org not in self.system.orgs:
                raise ApiError(404, "not-found", f"no organisation {org}")
            snap = self.system.orgs[org].snapshot_group(grp)
        players = sorted({p for role in snap["roles"] for p in role["players"]})
        snap["links"] = [
            self.link("self", "/organisations/{org}/groups/{grp}", org=org, grp=grp),
            self.link("organisation", "/organisations/{org}", org=org),
            self.link("players", "/organisations/{org}/groups/{grp}/players", org=org, grp=grp),
            *(self.link("player", "/agents/{agent}", agent=p) for p in players),
        ]
        return 200, snap, {}

    def players_post(self, params, body, query):
        org, grp = params["org"], params["grp"]
        agent, role = self._require(body, "agent", "role")
        self.system.adopt_role(agent, org, grp, role)
        status, doc, _ = self.group_show(params, None, query)
        return 201, doc, {"Location": f"/organisations/{org}/groups/{grp}"}

    def scheme_show(self, params, body, query):
        org, sch = params["org"], params["sch"]
        with self.system.lock:
            if org not in self.system.orgs:
                raise ApiError(404, "not-found", f"no organisation {org}")
            snap = self.system.orgs[org].snapshot_scheme(sch)
        committed = sorted({c["agent"] for c in snap["commitments"]})
        snap["links"] = [
            self.link("self", "/organisations/{org}/schemes/{sch}", org=org, sch=sch),
            self.link("organisation", "/organisations/{org}", org=org),
            *(self.link("committed", "/agents/{agent}", agent=a) for a in committed),
        ]
        return 200, snap, {}

    def org_revisions(self, params, body, query):
        name = params["org"]
        return self._revisions_index(
            org_entity(name),
            "/organisations/{org}/revisions",
            "/organisations/{org}/revisions/{rev}",
            org=name,
        )

    def org_revision(self, params, body, query):
        name = params["org"]
        rev = _int_param(params["rev"], "revision")
        record = self.system.revisions.get(org_entity(name), rev)
        return self._revision_doc(
            record,
            "/organisations/{org}/revisions/{rev}",
            self.link("entity", "/organisations/{org}", org=name),
            org=name,
            rev=rev,
        )

    # --- directory ---

    def services_show(self, params, body, query):
        service = query.get("service", [None])[0]
        with self.system.lock:
            table = self.system.directory.lookup(service)
        providers = sorted({p for ps in table.values() for p in ps})
        doc = {
            "services": table,
            "links": [
                self.link("self", "/services"),
                self.link("root", "/"),
                *(self.link("provider", "/agents/{agent}", agent=p) for p in providers),
            ],
        }
        return 200, doc, {}


def _int_param(raw: str, what: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ApiError(404, "not-found", f"{what} must be an integer, got {raw!r}") from None


_REASONS = {
    200: "OK",
    201: "Created",
    204: "No Content",
    400: "Bad Request",
    404: "Not Found",
    405: "Method Not Allowed",
    409: "Conflict",
    422: "Unprocessable Entity",
    500: "Internal Server Error",
}


def build_app(system: System) -> RestApi:
    return RestApi(system)


def collect_links(doc) -> list[dict]:
    """Recursively gather every link object ({'rel','href','methods'}) in a
    representation."""
    found: list[dict] = []

    def visit(node):
        if isinstance(node, dict):
            if {"rel", "href", "methods"} <= set(node):
                found.append(node)
            for value in node.values():
                visit(value)
        elif isinstance(node, list):
            for value in node:
                visit(value)

    visit(doc)
    return found


def hypermedia_walk(get: Callable[[str], tuple[int, dict | None]]) -> dict[str, set[str]]:
    """Transitive closure of `links` from GET /.

    `get` returns (status, json-or-None). Returns {href: methods-set} of every
    reachable resource. Raises AssertionError on a dangling GET link.
    """
    reached: dict[str, set[str]] = {}
    queue = ["/"]
    reached["/"] = {"GET"}
    visited: set[str] = set()
    while queue:
        path = queue.pop(0)
        if path in visited:
            continue
        visited.add(path)
        status, doc = get(path)
        if status != 200:
            raise AssertionError(f"dangling link: GET {path} -> {status}")
        for entry in collect_links(doc or {}):
            href = entry["href"]
            methods = set(entry["methods"])
            reached.setdefault(href, set()).update(methods)
            if "GET" in methods and href not in visited:
                queue.append(href)
    return reached
