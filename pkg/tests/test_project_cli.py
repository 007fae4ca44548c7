import json
import os
import signal
import subprocess
import sys
import time
import urllib.request
from pathlib import Path

import pytest

from maskit.cli import main
from maskit.project import boot, load_project

from scenario import boot_demo, project_doc, write_project

SRC_DIR = str(Path(__file__).resolve().parent.parent / "src")


def test_load_valid_project(tmp_path):
    path = write_project(tmp_path)
    project, errors = load_project(path)
    assert errors == []
    assert project.name == "pingpong"
    assert [a[0] for a in project.agents] == ["alice", "bob"]


def test_validation_aggregates_all_errors(tmp_path):
    doc = project_doc()
    doc["workspaces"][0]["artifacts"].append({"name": "c2", "template": "ghost"})
    doc["agents"].append({"name": "alice", "source": "+!x : true <- +y."})  # duplicate
    doc["agents"].append({"name": "broken", "source": "+!x <- ???"})
    doc["http"]["port"] = "not-a-port"
    path = tmp_path / "p.json"
    path.write_text(json.dumps(doc))
    project, errors = load_project(path)
    assert project is None
    assert len(errors) == 4
    assert any("ghost" in e for e in errors)
    assert any("duplicate agent name alice" in e for e in errors)
    assert any("broken" in e for e in errors)
    assert any("port" in e for e in errors)


def test_source_from_file(tmp_path):
    (tmp_path / "solo.asl").write_text('+!go : true <- .print("went").')
    doc = {
        "name": "solo",
        "agents": [{"name": "solo", "source": {"file": "solo.asl"}}],
    }
    path = tmp_path / "p.json"
    path.write_text(json.dumps(doc))
    project, errors = load_project(path)
    assert errors == []
    system = boot(project)
    assert system.snapshot_agent("solo")["plan_source"].startswith("+!go")


def test_missing_source_file_reported(tmp_path):
    doc = {"name": "x", "agents": [{"name": "a", "source": {"file": "nope.asl"}}]}
    path = tmp_path / "p.json"
    path.write_text(json.dumps(doc))
    project, errors = load_project(path)
    assert project is None and "nope.asl" in errors[0]


def test_boot_builds_everything_and_records_revisions(tmp_path):
    system = boot_demo(tmp_path)
    assert system.agent_names() == ["alice", "bob"]
    assert "main" in system.env.workspaces
    assert "paperorg" in system.orgs
    assert system.revisions.head("/agents/alice/plans").revision == 1
    assert system.revisions.head("/artifact-templates/counter").revision == 1
    assert system.revisions.head("/organisations/paperorg").revision == 1


def test_boot_determinism_digest(tmp_path):
    a = boot_demo(tmp_path)
    b = boot_demo(tmp_path)
    assert a.state_digest() == b.state_digest()


def test_boot_with_persistence(tmp_path):
    project, errors = load_project(write_project(tmp_path))
    assert not errors
    system = boot(project, persist_dir=str(tmp_path / "revs"))
    assert (tmp_path / "revs").exists()
    assert any((tmp_path / "revs").iterdir())


def test_cli_validate_exit_codes(tmp_path, capsys):
    path = write_project(tmp_path)
    assert main(["validate", "--project", str(path)]) == 0
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    assert main(["validate", "--project", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "not valid JSON" in err
    assert main(["validate", "--project", str(tmp_path / "missing.json")]) == 1


def test_cli_serve_invalid_project_exits_1(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"agents": [{"name": "x", "source": "+!a <- ???"}]}))
    assert main(["serve", "--project", str(bad)]) == 1


def test_cli_serve_smoke(tmp_path):
    """Spawn the real server on an ephemeral port, hit it, shut it down."""
    path = write_project(tmp_path)
    env = dict(os.environ, PYTHONPATH=SRC_DIR)
    proc = subprocess.Popen(
        [sys.executable, "-m", "maskit", "serve", "--project", str(path), "--port", "0"],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        env=env,
        text=True,
    )
    try:
        line = proc.stdout.readline().strip()
        assert line.startswith("listening on http://")
        base = line.split(" ")[-1]
        deadline = time.time() + 10
        body = None
        while time.time() < deadline:
            try:
                with urllib.request.urlopen(f"{base}/agents", timeout=2) as resp:
                    body = json.loads(resp.read())
                break
            except OSError:
                time.sleep(0.1)
        assert body is not None
        assert {i["name"] for i in body["items"]} == {"alice", "bob"}
    finally:
        proc.send_signal(signal.SIGINT)
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            proc.kill()
