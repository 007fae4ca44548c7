"""Shared demo scenario: ping-pong agents incrementing a counter artifact,
plus a two-writer organisation. Used by API, acceptance, and CLI tests."""
from __future__ import annotations

import json
from pathlib import Path

from maskit.project import Project, boot, load_project

COUNTER_TEMPLATE = {
    "name": "counter",
    "properties": ["count(0)"],
    "operations": [
        {
            "name": "inc",
            "params": [],
            "rules": [{"match": ["count(N)"], "update": ["count(N+1)"]}],
        }
    ],
}

PAPER_ORG = {
    "name": "paperorg",
    "roles": [{"name": "writer", "min": 1, "max": 2}],
    "groups": [{"name": "wpgroup", "roles": ["writer"]}],
    "schemes": [
        {
            "name": "write_paper",
            "root": "wp",
            "goals": [
                {"id": "wp", "type": "and", "children": ["wtitle", "wabs"]},
                {"id": "wtitle", "type": "leaf", "children": []},
                {"id": "wabs", "type": "leaf", "children": []},
            ],
            "missions": [
                {"name": "mtitle", "goals": ["wtitle"]},
                {"name": "mabs", "goals": ["wabs"]},
            ],
        }
    ],
    "norms": [
        {"role": "writer", "mission": "mtitle"},
        {"role": "writer", "mission": "mabs"},
    ],
}


def pingpong_source(partner: str, service: str) -> str:
    return "\n".join(
        [
            f'+!setup : true <- .register("{service}"); .joinWorkspace(main); .focus(main, c1).',
            f"+!volley(N) : N > 0 <- .act(main, c1, inc); .send({partner}, achieve, volley(N-1)).",
            '+!volley(N) : N == 0 <- .print("volley done").',
            "+obligation(O, S, G) : true <- .goalAchieved(O, S, G).",
        ]
    )


def project_doc() -> dict:
    return {
        "name": "pingpong",
        "http": {"port": 0, "bind": "127.0.0.1"},
        "persistence": {"mode": "memory"},
        "artifact_templates": [COUNTER_TEMPLATE],
        "workspaces": [
            {"name": "main", "artifacts": [{"name": "c1", "template": "counter"}]}
        ],
        "organisations": [PAPER_ORG],
        "agents": [
            {"name": "alice", "source": pingpong_source("bob", "pinger")},
            {"name": "bob", "source": pingpong_source("alice", "ponger")},
        ],
    }


def write_project(directory: Path) -> Path:
    path = directory / "project.json"
    path.write_text(json.dumps(project_doc(), indent=2), encoding="utf-8")
    return path


def boot_demo(directory: Path):
    """Boot the demo from an actual project file on disk."""
    path = write_project(directory)
    project, errors = load_project(path)
    assert not errors, errors
    assert isinstance(project, Project)
    return boot(project)
