"""Project documents: validation and boot.

A project JSON names everything the system starts with:

    {"name": str,
     "http": {"port": int, "bind": str},
     "persistence": {"mode": "memory"|"file", "dir": str},
     "artifact_templates": [template-doc | "path.json", ...],
     "workspaces": [{"name": str, "artifacts": [{"name": str, "template": str}]}],
     "organisations": [org-doc | "path.json", ...],
     "agents": [{"name": str, "source": inline-text | {"file": "path.asl"}}]}

Boot order is templates, then workspaces/artifacts, then organisations, then
agents, so plan bodies that join/focus/adopt at startup never race bootstrap.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .environment import parse_template_doc
from .errors import InvalidSpecError, MasError
from .organisation import parse_org_doc
from .parsing import parse_plan_library
from .system import AGENT_NAME, System


@dataclass
class Project:
    name: str = "mas"
    port: int = 8080
    bind: str = "127.0.0.1"
    persist_mode: str = "memory"
    persist_dir: str | None = None
    templates: list[dict] = field(default_factory=list)
    workspaces: list[tuple[str, list[tuple[str, str]]]] = field(default_factory=list)
    organisations: list[dict] = field(default_factory=list)
    agents: list[tuple[str, str]] = field(default_factory=list)


def load_project(path: str | Path) -> tuple[Project | None, list[str]]:
    """Parse and cross-check a project file; reports every error found."""
    path = Path(path)
    errors: list[str] = []
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        return None, [f"{path}: file not found"]
    except json.JSONDecodeError as e:
        return None, [f"{path}: not valid JSON: {e}"]
    if not isinstance(doc, dict):
        return None, [f"{path}: project document must be a JSON object"]
    return validate_project(doc, path.parent, errors)


def validate_project(doc: dict, base: Path, errors: list[str]) -> tuple[Project | None, list[str]]:
    project = Project()
    project.name = doc.get("name") or "mas"

    http = doc.get("http", {})
    if not isinstance(http, dict):
        errors.append("http: must be an object")
    else:
        try:
            project.port = int(http.get("port", 8080))
        except (TypeError, ValueError):
            errors.append(f"http.port: not an integer: {http.get('port')!r}")
        project.bind = http.get("bind", "127.0.0.1")

    persistence = doc.get("persistence", {})
    if isinstance(persistence, dict):
        project.persist_mode = persistence.get("mode", "memory")
        if project.persist_mode not in ("memory", "file"):
            errors.append(f"persistence.mode: must be memory|file, got {project.persist_mode!r}")
        project.persist_dir = persistence.get("dir")
        if project.persist_mode == "file" and not project.persist_dir:
            errors.append("persistence.dir: required when mode is file")
    else:
        errors.append("persistence: must be an object")

    template_names: set[str] = set()
    for i, entry in enumerate(doc.get("artifact_templates", [])):
        where = f"artifact_templates[{i}]"
        resolved = _resolve_doc(entry, base, where, errors)
        if resolved is None:
            continue
        try:
            tpl = parse_template_doc(resolved)
        except MasError as e:
            errors.append(f"{where}: {e}")
            continue
        if tpl.name in template_names:
            errors.append(f"{where}: duplicate template name {tpl.name}")
        template_names.add(tpl.name)
        project.templates.append(resolved)

    ws_names: set[str] = set()
    for i, entry in enumerate(doc.get("workspaces", [])):
        where = f"workspaces[{i}]"
        if not isinstance(entry, dict) or not entry.get("name"):
            errors.append(f"{where}: needs a name")
            continue
        name = entry["name"]
        if name in ws_names:
            errors.append(f"{where}: duplicate workspace name {name}")
        ws_names.add(name)
        artifacts: list[tuple[str, str]] = []
        seen_artifacts: set[str] = set()
        for j, art in enumerate(entry.get("artifacts", [])):
            aw = f"{where}.artifacts[{j}]"
            if not isinstance(art, dict) or "name" not in art or "template" not in art:
                errors.append(f"{aw}: needs name and template")
                continue
            if art["template"] not in template_names:
                errors.append(f"{aw}: artifact {art['name']} references unknown template {art['template']}")
            if art["name"] in seen_artifacts:
                errors.append(f"{aw}: duplicate artifact name {art['name']}")
            seen_artifacts.add(art["name"])
            artifacts.append((art["name"], art["template"]))
        project.workspaces.append((name, artifacts))

    org_names: set[str] = set()
    for i, entry in enumerate(doc.get("organisations", [])):
        where = f"organisations[{i}]"
        resolved = _resolve_doc(entry, base, where, errors)
        if resolved is None:
            continue
        try:
            spec = parse_org_doc(resolved)
        except MasError as e:
            errors.append(f"{where}: {e}")
            continue
        if spec.name in org_names:
            errors.append(f"{where}: duplicate organisation name {spec.name}")
        org_names.add(spec.name)
        project.organisations.append(resolved)

    agent_names: set[str] = set()
    for i, entry in enumerate(doc.get("agents", [])):
        where = f"agents[{i}]"
        if not isinstance(entry, dict) or not entry.get("name"):
            errors.append(f"{where}: needs a name")
            continue
        name = entry["name"]
        if not AGENT_NAME.match(name):
            errors.append(f"{where}: invalid agent name {name!r}")
        if name in agent_names:
            errors.append(f"{where}: duplicate agent name {name}")
        agent_names.add(name)
        source = entry.get("source")
        if isinstance(source, dict) and "file" in source:
            src_path = base / source["file"]
            try:
                source = src_path.read_text(encoding="utf-8")
            except OSError as e:
                errors.append(f"{where}: cannot read {src_path}: {e}")
                continue
        if not isinstance(source, str):
            errors.append(f"{where}: source must be inline text or {{\"file\": path}}")
            continue
        try:
            parse_plan_library(source)
        except InvalidSpecError as e:
            errors.append(f"{where} ({name}): {e}")
            continue
        project.agents.append((name, source))

    return (project, errors) if not errors else (None, errors)


def _resolve_doc(entry, base: Path, where: str, errors: list[str]) -> dict | None:
    if isinstance(entry, str):
        path = base / entry
        try:
            loaded = json.loads(path.read_text(encoding="utf-8"))
        except OSError as e:
            errors.append(f"{where}: cannot read {path}: {e}")
            return None
        except json.JSONDecodeError as e:
            errors.append(f"{where}: {path} is not valid JSON: {e}")
            return None
        if not isinstance(loaded, dict):
            errors.append(f"{where}: {path} must hold a JSON object")
            return None
        return loaded
    if isinstance(entry, dict):
        return entry
    errors.append(f"{where}: expected an object or a file path")
    return None


def boot(project: Project, persist_dir: str | None = None) -> System:
    """Construct the system in dependency order. The scheduler is NOT started;
    callers decide when concurrency begins."""
    directory = persist_dir
    if directory is None and project.persist_mode == "file":
        directory = project.persist_dir
    system = System(project.name, persist_dir=directory)
    for doc in project.templates:
        system.register_template(doc)
    for ws_name, artifacts in project.workspaces:
        system.create_workspace(ws_name)
        for art_name, template in artifacts:
            system.instantiate(ws_name, art_name, template)
    for doc in project.organisations:
        system.load_org_spec(doc)
    for name, source in project.agents:
        system.spawn_agent(name, source)
    return system
