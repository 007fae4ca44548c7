"""Acceptance suite: one test per acceptance criterion, each printing a
PASS/FAIL line (run with -s or check captured output)."""
import itertools
import json
import random
import time
from contextlib import contextmanager

import httpx
import pytest

from maskit.api import build_app, hypermedia_walk
from maskit.organisation import Organisation, parse_org_doc
from maskit.parsing import parse_plan_library, parse_term
from maskit.plans import (
    INTERNAL_ACTIONS,
    AddBelief,
    DelBelief,
    InternalAction,
    Plan,
    Subgoal,
    Test,
    Trigger,
    format_plans,
)
from maskit.system import System
from maskit.terms import (
    Atom,
    ListT,
    Literal,
    Number,
    Str,
    Structure,
    Var,
    format_term,
)
from maskit.unification import unify

from oracles import (
    brute_force_unified_forms,
    ground_space,
    match_pattern,
    pair_space,
    random_goal_tree,
    substitute,
    tree_enabled,
    tree_eval,
)
from scenario import boot_demo
from test_organisation import org_doc_for_tree


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL", flush=True)
        raise
    print(f"ACCEPTANCE {name}: PASS", flush=True)


# ---------------------------------------------------------------------------
# 1. Unification oracle: exhaustive depth-2 pair space vs brute force.
# ---------------------------------------------------------------------------


def test_unification_oracle_exhaustive():
    with criterion("unification-oracle"):
        space = pair_space()
        grounds = ground_space()
        assert len(space) == 24
        checked = 0
        for s, t in itertools.product(space, space):
            oracle_forms = brute_force_unified_forms(s, t, grounds)
            sigma = unify(s, t, {})
            if sigma is None:
                assert oracle_forms == frozenset(), (s, t)
            else:
                unified = substitute(s, sigma)
                # sigma really unifies both sides,
                assert unified == substitute(t, sigma), (s, t)
                assert oracle_forms, (s, t)
                # and every brute-force unified ground form is an instance of
                # the implementation's unified form (most-generality).
                for form in oracle_forms:
                    assert match_pattern(unified, form) is not None, (s, t, form)
            checked += 1
        assert checked == 24 * 24


# ---------------------------------------------------------------------------
# 2. Parser round-trip: 1000 random terms/plans, zero failures.
# ---------------------------------------------------------------------------

ATOMS = ["a", "b", "count", "foo", "inc", "main", "c1", "volley"]
VARS = ["X", "Y", "N", "Count", "_G1"]
STR_CHARS = 'abz019 _-"\\\n\t'


def rand_term(rng, depth, vars_pool):
    kinds = ["atom", "number", "string"]
    if vars_pool:
        kinds.append("var")
    if depth > 0:
        kinds += ["struct", "list", "arith", "rel", "neg"]
    kind = rng.choice(kinds)
    if kind == "atom":
        return Atom(rng.choice(ATOMS))
    if kind == "number":
        if rng.random() < 0.5:
            return Number(float(rng.randint(-9999, 9999)))
        return Number(round(rng.uniform(-100, 100), 3))
    if kind == "string":
        return Str("".join(rng.choice(STR_CHARS) for _ in range(rng.randint(0, 8))))
    if kind == "var":
        return Var(rng.choice(vars_pool))
    if kind == "struct":
        n = rng.randint(1, 3)
        return Structure(
            rng.choice(ATOMS), tuple(rand_term(rng, depth - 1, vars_pool) for _ in range(n))
        )
    if kind == "list":
        n = rng.randint(0, 3)
        return ListT(tuple(rand_term(rng, depth - 1, vars_pool) for _ in range(n)))
    if kind == "arith":
        op = rng.choice(["+", "-", "*", "/"])
        return Structure(
            op, (rand_term(rng, depth - 1, vars_pool), rand_term(rng, depth - 1, vars_pool))
        )
    if kind == "rel":
        op = rng.choice(["<", "<=", ">", ">=", "==", "\\=="])
        return Structure(
            op, (rand_term(rng, depth - 1, vars_pool), rand_term(rng, depth - 1, vars_pool))
        )
    # Unary minus folds over numbers when printed, so apply it to a
    # non-number operand only.
    return Structure("-", (Structure(rng.choice(ATOMS), (rand_term(rng, depth - 1, vars_pool),)),))


def rand_pattern(rng, vars_pool):
    n = rng.randint(1, 3)
    return Structure(
        rng.choice(ATOMS), tuple(rand_term(rng, 1, vars_pool) for _ in range(n))
    )


def rand_relational(rng, vars_pool):
    op = rng.choice(["<", "<=", ">", ">=", "==", "\\=="])
    return Structure(op, (rand_term(rng, 1, vars_pool), rand_term(rng, 1, vars_pool)))


def rand_plan(rng):
    trigger_vars = sorted({rng.choice(VARS) for _ in range(rng.randint(0, 3))})
    trigger = Trigger(
        rng.choice("+-"),
        rng.choice(["belief", "goal"]),
        Structure("trig", tuple(Var(v) for v in trigger_vars) or (Atom("a"),)),
    )
    context = []
    for _ in range(rng.randint(0, 2)):
        if rng.random() < 0.6:
            context.append(Literal(rng.random() < 0.3, rand_pattern(rng, trigger_vars)))
        else:
            context.append(Test(rand_relational(rng, trigger_vars)))
    body = []
    for _ in range(rng.randint(0, 3)):
        roll = rng.random()
        if roll < 0.25:
            body.append(Subgoal(rand_pattern(rng, trigger_vars)))
        elif roll < 0.5:
            body.append(AddBelief(rand_pattern(rng, trigger_vars)))
        elif roll < 0.65:
            body.append(DelBelief(rand_pattern(rng, trigger_vars)))
        elif roll < 0.9:
            name = rng.choice(sorted(INTERNAL_ACTIONS))
            args = tuple(rand_term(rng, 1, trigger_vars) for _ in range(rng.randint(0, 2)))
            body.append(InternalAction(name, args))
        else:
            body.append(Test(rand_relational(rng, trigger_vars)))
    return Plan(trigger, tuple(context), tuple(body))


def test_parser_roundtrip_1000():
    with criterion("parser-round-trip"):
        rng = random.Random(20260810)
        failures = 0
        for _ in range(600):
            t = rand_term(rng, 4, VARS)
            if parse_term(format_term(t)) != t:
                failures += 1
        for _ in range(400):
            plan = rand_plan(rng)
            printed = format_plans([plan])
            try:
                reparsed = parse_plan_library(printed)
            except Exception:
                failures += 1
                continue
            if reparsed != [plan]:
                failures += 1
        assert failures == 0


# ---------------------------------------------------------------------------
# 3. REST conformance: OPTIONS exactness, GET safety, PUT idempotency,
#    hypermedia closure.
# ---------------------------------------------------------------------------


@pytest.fixture
def conformance(tmp_path):
    system = boot_demo(tmp_path)
    app = build_app(system)
    transport = httpx.WSGITransport(app=app)
    with httpx.Client(transport=transport, base_url="http://mas") as client:
        client.post(
            "/agents/alice/inbox", json={"performative": "achieve", "content": "setup"}
        )
        client.post("/agents/alice/command", json={"body": "+note(1)"})
        client.post(
            "/organisations/paperorg/groups/wpgroup/players",
            json={"agent": "bob", "role": "writer"},
        )
        system.settle()
        yield system, app, client
    system.scheduler.stop()


def _walk(client):
    def get(path):
        r = client.get(path)
        return r.status_code, (r.json() if r.status_code == 200 else None)

    return hypermedia_walk(get)


def _pattern_of(app, href):
    segments = tuple(s for s in href.strip("/").split("/") if s) if href != "/" else ()
    for route in app.routes:
        if route.match(segments) is not None:
            return route.pattern
    return None


def test_rest_conformance(conformance):
    system, app, client = conformance
    reached = _walk(client)
    samples = {}
    for href in reached:
        pattern = _pattern_of(app, href)
        if pattern is not None:
            samples.setdefault(pattern, href)

    with criterion("rest-options-allow-exactness"):
        assert set(samples) == {r.pattern for r in app.routes}  # every route instantiated
        violations = []
        for route in app.routes:
            href = samples[route.pattern]
            r = client.options(href)
            expected = [*route.handlers, "OPTIONS"]
            if r.status_code != 200 or r.headers["allow"].split(",") != expected:
                violations.append((href, r.headers.get("allow")))
            probe = client.request("TRACE", href)
            if probe.status_code != 405 or probe.headers.get("allow") != ",".join(expected):
                violations.append((href, "bad 405"))
        assert violations == []

    with criterion("rest-get-safety"):
        system.scheduler.start()
        system.scheduler.pause()
        get_paths = sorted(h for h, m in reached.items() if "GET" in m)
        rng = random.Random(7)
        before = system.state_digest()
        for _ in range(200):
            path = rng.choice(get_paths)
            assert client.get(path).status_code == 200
        assert system.state_digest() == before

    with criterion("rest-put-idempotency"):
        plan_body = {"source": '+!ping : true <- .print("idem").'}
        tpl_body = {
            "name": "counter",
            "properties": ["count(10)"],
            "operations": [
                {
                    "name": "inc",
                    "params": [],
                    "rules": [{"match": ["count(N)"], "update": ["count(N+1)"]}],
                }
            ],
        }
        for path, body in (
            ("/agents/alice/plans", plan_body),
            ("/artifact-templates/counter", tpl_body),
        ):
            entity = path if "templates" in path else "/agents/alice/plans"
            assert client.put(path, json=body).status_code in (200, 201)
            system.settle()
            digest_once = system.state_digest()
            head_once = system.revisions.head(entity).revision
            assert client.put(path, json=body).status_code in (200, 201)
            system.settle()
            assert system.state_digest() == digest_once
            assert system.revisions.head(entity).revision == head_once

    with criterion("rest-hypermedia-closure"):
        reached = _walk(client)
        covered = set()
        for href in reached:
            pattern = _pattern_of(app, href)
            if pattern is not None:
                covered.add(pattern)
        documented_get = {r.pattern for r in app.routes if "GET" in r.handlers}
        assert documented_get <= covered


# ---------------------------------------------------------------------------
# 4. Message lifecycle: 100 randomized messages vs a hand-executed trace.
# ---------------------------------------------------------------------------


def test_message_lifecycle_100():
    with criterion("message-lifecycle"):
        system = System()
        workers = ("worker1", "worker2")
        for name in workers:
            system.spawn_agent(
                name,
                "+!inc(X) : true <- +done(X).\n+pinged(K) : true <- +sig(K).",
            )
        app = build_app(system)
        transport = httpx.WSGITransport(app=app)
        rng = random.Random(424242)
        model: dict[str, set[str]] = {name: set() for name in workers}
        expected_status: dict[str, str] = {}
        with httpx.Client(transport=transport, base_url="http://mas") as client:
            locations = []
            for _ in range(100):
                target = rng.choice(workers)
                kind = rng.choice(["tell", "untell", "achieve", "achieve_missing", "signal"])
                v = rng.randint(0, 9)
                if kind == "tell":
                    payload = {"performative": "tell", "content": f"fact({v})"}
                    model[target].add(f"fact({v})")
                    status = "processed"
                elif kind == "untell":
                    payload = {"performative": "untell", "content": f"fact({v})"}
                    model[target].discard(f"fact({v})")
                    status = "processed"
                elif kind == "achieve":
                    payload = {"performative": "achieve", "content": f"inc({v})"}
                    model[target].add(f"done({v})")
                    status = "processed"
                elif kind == "achieve_missing":
                    payload = {"performative": "achieve", "content": f"missing({v})"}
                    status = "failed"
                else:
                    payload = {"performative": "signal", "content": f"pinged({v})"}
                    model[target].add(f"sig({v})")
                    status = "processed"
                r = client.post(f"/agents/{target}/inbox", json=payload)
                assert r.status_code == 201
                location = r.headers["location"]
                locations.append(location)
                expected_status[location] = status
            assert len(set(locations)) == 100  # no duplicate ids
            assert system.settle()
            terminal = {"processed", "failed"}
            for location in locations:
                body = client.get(location).json()
                assert body["status"] in terminal  # exactly one terminal state
                assert body["status"] == expected_status[location], location
            for name in workers:
                beliefs = client.get(f"/agents/{name}/beliefs").json()["beliefs"]
                assert sorted(beliefs) == sorted(model[name])


# ---------------------------------------------------------------------------
# 5. Hot swap: next trigger uses the new library, in-flight intentions finish
#    under the old one.
# ---------------------------------------------------------------------------


def test_hot_swap_deterministic():
    with criterion("hot-swap"):
        system = System()
        system.spawn_agent(
            "worker",
            "\n".join(
                [
                    '+tick : true <- .print("tick-old").',
                    '+!job : true <- .print("job-old-1"); .print("job-old-2"); .print("job-old-3").',
                ]
            ),
        )
        T = parse_term
        system.deliver_message("worker", "x", "signal", T("tick"))
        assert system.settle()
        assert system.agents["worker"].log == ["tick-old"]
        system.deliver_message("worker", "x", "achieve", T("job"))
        system.step_all(1)  # the job intention starts under the old library
        assert system.agents["worker"].log == ["tick-old", "job-old-1"]
        system.update_plans(
            "worker",
            "\n".join(
                [
                    '+tick : true <- .print("tick-new").',
                    '+!job : true <- .print("job-new").',
                ]
            ),
        )
        system.deliver_message("worker", "x", "signal", T("tick"))
        assert system.settle()
        log = system.agents["worker"].log
        # Old intention completed with old bodies, new trigger used new body.
        assert log == ["tick-old", "job-old-1", "tick-new", "job-old-2", "job-old-3"]
        system.deliver_message("worker", "x", "achieve", T("job"))
        assert system.settle()
        assert system.agents["worker"].log[-1] == "job-new"


# ---------------------------------------------------------------------------
# 6. Revisions / time travel.
# ---------------------------------------------------------------------------


def test_revision_time_travel(system, client):
    with criterion("revisions-time-travel"):
        sources = [f'+!ping : true <- .print("v{i}").' for i in range(1, 11)]
        client.post("/agents", json={"name": "alice", "plans": sources[0]})
        for src in sources[1:]:
            r = client.put("/agents/alice/plans", json={"source": src})
            assert r.status_code == 200
        items = client.get("/agents/alice/revisions").json()["items"]
        assert [i["revision"] for i in items] == list(range(1, 11))  # gapless
        for i, src in enumerate(sources, start=1):
            body = client.get(f"/agents/alice/revisions/{i}").json()
            assert body["content"] == src  # byte-equal round trip
        # A hash-identical PUT mints no new revision.
        r = client.put("/agents/alice/plans", json={"source": sources[-1]})
        assert r.json()["revision"] == 10
        items = client.get("/agents/alice/revisions").json()["items"]
        assert len(items) == 10


# ---------------------------------------------------------------------------
# 7. Organisation oracle: random trees vs brute-force recursion.
# ---------------------------------------------------------------------------


def _edge_trees():
    single = {"r": {"id": "r", "type": "leaf", "children": []}}
    chain = {
        "r": {"id": "r", "type": "and", "children": ["m"]},
        "m": {"id": "m", "type": "or", "children": ["n"]},
        "n": {"id": "n", "type": "leaf", "children": []},
    }
    wide_and = {"r": {"id": "r", "type": "and", "children": [f"l{i}" for i in range(12)]}}
    wide_or = {"r": {"id": "r", "type": "or", "children": [f"l{i}" for i in range(12)]}}
    for tree in (wide_and, wide_or):
        for i in range(12):
            tree[f"l{i}"] = {"id": f"l{i}", "type": "leaf", "children": []}
    return [(single, "r"), (chain, "r"), (wide_and, "r"), (wide_or, "r")]


def test_organisation_oracle():
    with criterion("organisation-oracle"):
        rng = random.Random(6021023)
        trees = _edge_trees()
        while len(trees) < 120:
            trees.append(random_goal_tree(rng, max_nodes=15))
        for goals, root in trees:
            assert len(goals) <= 15
            org = Organisation(parse_org_doc(org_doc_for_tree(goals, root)))
            inst = org.schemes["plan"]
            leaves = sorted(g for g, spec in goals.items() if spec["type"] == "leaf")
            if 2 ** len(leaves) <= 1024:
                subsets = [
                    set(c)
                    for r in range(len(leaves) + 1)
                    for c in itertools.combinations(leaves, r)
                ]
            else:
                subsets = [
                    {l for l in leaves if rng.random() < 0.5} for _ in range(1000)
                ]
            for achieved in subsets:
                inst.achieved = set(achieved)
                assert org.evaluate("plan", root) == tree_eval(goals, root, achieved)
                assert org.enabled_leaves("plan") == tree_enabled(goals, root, achieved)

        # Completion fires exactly when the root evaluates true.
        for goals, root in trees[:20]:
            org = Organisation(parse_org_doc(org_doc_for_tree(goals, root)))
            org.commit_mission("alice", "plan", "all")
            inst = org.schemes["plan"]
            leaves = [g for g, spec in goals.items() if spec["type"] == "leaf"]
            rng.shuffle(leaves)
            for leaf in leaves:
                expected = tree_eval(goals, root, inst.achieved)
                assert (inst.status == "completed") == expected
                org.set_goal_achieved("alice", "plan", leaf)
            assert inst.status == "completed"


# ---------------------------------------------------------------------------
# 8. End-to-end paper scenario, driven over REST only.
# ---------------------------------------------------------------------------


def test_end_to_end_scenario(tmp_path):
    with criterion("end-to-end-scenario"):
        system = boot_demo(tmp_path)
        system.scheduler.start()
        transport = httpx.WSGITransport(app=build_app(system))
        try:
            with httpx.Client(transport=transport, base_url="http://mas") as client:
                for agent in ("alice", "bob"):
                    r = client.post(
                        f"/agents/{agent}/inbox",
                        json={"performative": "achieve", "content": "setup"},
                    )
                    assert r.status_code == 201
                # Wait for setup to take effect before starting the volley:
                # focus shows up as the count(0) percept belief.
                deadline = time.time() + 30
                while time.time() < deadline:
                    ready = all(
                        "count(0)" in client.get(f"/agents/{a}/beliefs").json()["beliefs"]
                        for a in ("alice", "bob")
                    )
                    if ready:
                        break
                    time.sleep(0.01)
                assert ready, "agents never finished setup"
                for agent in ("alice", "bob"):
                    r = client.post(
                        "/organisations/paperorg/groups/wpgroup/players",
                        json={"agent": agent, "role": "writer"},
                    )
                    assert r.status_code == 201
                r = client.post(
                    "/agents/alice/inbox",
                    json={"performative": "achieve", "content": "volley(3)"},
                )
                assert r.status_code == 201

                deadline = time.time() + 30
                done = False
                while time.time() < deadline and not done:
                    props = client.get("/workspaces/main/artifacts/c1").json()["properties"]
                    scheme = client.get(
                        "/organisations/paperorg/schemes/write_paper"
                    ).json()
                    services = client.get("/services").json()["services"]
                    done = (
                        props == ["count(3)"]
                        and scheme["status"] == "completed"
                        and services.get("pinger") == ["alice"]
                        and services.get("ponger") == ["bob"]
                    )
                    if not done:
                        time.sleep(0.01)
                assert done, "scenario did not converge"
                # The counter stays at 3: the volley ended.
                time.sleep(0.05)
                assert client.get("/workspaces/main/artifacts/c1").json()["properties"] == [
                    "count(3)"
                ]
        finally:
            system.scheduler.stop()
