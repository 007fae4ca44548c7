#!/usr/bin/env python3
"""Boot the demo project in-process and drive the full scenario through the
HTTP API: setup both agents, assign writer roles, run a 3-step volley, then
dump the interesting resources.

Usage: python scripts/drive_demo.py
"""
import json
import sys
import time
from pathlib import Path

import httpx

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from maskit.api import build_app  # noqa: E402
from maskit.project import boot, load_project  # noqa: E402


def wait_for(check, timeout=15.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        if check():
            return True
        time.sleep(0.01)
    return False


def main() -> int:
    project, errors = load_project(Path(__file__).parent / "demo_project.json")
    if errors:
        for e in errors:
            print("error:", e, file=sys.stderr)
        return 1
    system = boot(project)
    system.scheduler.start()
    client = httpx.Client(
        transport=httpx.WSGITransport(app=build_app(system)), base_url="http://demo"
    )

    for agent in ("alice", "bob"):
        client.post(f"/agents/{agent}/inbox", json={"performative": "achieve", "content": "setup"})
    assert wait_for(
        lambda: all(
            "count(0)" in client.get(f"/agents/{a}/beliefs").json()["beliefs"]
            for a in ("alice", "bob")
        )
    ), "setup did not converge"

    for agent in ("alice", "bob"):
        client.post(
            "/organisations/paperorg/groups/wpgroup/players",
            json={"agent": agent, "role": "writer"},
        )
    client.post("/agents/alice/inbox", json={"performative": "achieve", "content": "volley(3)"})

    assert wait_for(
        lambda: client.get("/workspaces/main/artifacts/c1").json()["properties"] == ["count(3)"]
        and client.get("/organisations/paperorg/schemes/write_paper").json()["status"]
        == "completed"
    ), "scenario did not converge"

    for path in (
        "/workspaces/main/artifacts/c1",
        "/organisations/paperorg/schemes/write_paper",
        "/services",
        "/agents/bob/log",
        "/agents/alice/revisions",
    ):
        print(f"== GET {path}")
        print(json.dumps(client.get(path).json(), indent=2))

    client.close()
    system.scheduler.stop()
    return 0


if __name__ == "__main__":
    sys.exit(main())
