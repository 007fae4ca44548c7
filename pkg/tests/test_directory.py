import random

from maskit.directory import Directory
from maskit.parsing import parse_term
from maskit.system import System


def test_register_lookup_deregister():
    d = Directory()
    assert d.lookup() == {}
    d.register("alice", "translator")
    assert d.lookup("translator") == {"translator": ["alice"]}
    d.register("alice", "translator")  # idempotent
    d.register("bob", "translator")
    assert d.lookup("translator") == {"translator": ["alice", "bob"]}
    d.deregister("alice", "translator")
    d.deregister("alice", "translator")  # absent: no-op
    assert d.lookup() == {"translator": ["bob"]}
    assert d.lookup("nosuch") == {"nosuch": []}


def test_register_then_deregister_is_identity():
    d = Directory()
    d.register("a", "s1")
    before = d.lookup()
    d.register("b", "s2")
    d.deregister("b", "s2")
    assert d.lookup() == before


def test_registry_equals_fold_of_operation_log():
    rng = random.Random(5)
    agents = ["a1", "a2", "a3"]
    services = ["s1", "s2"]
    log = []
    live = Directory()
    for _ in range(200):
        op = rng.choice(["register", "deregister"])
        agent, service = rng.choice(agents), rng.choice(services)
        log.append((op, agent, service))
        getattr(live, op)(agent, service)
    replayed = Directory()
    for op, agent, service in log:
        getattr(replayed, op)(agent, service)
    assert live.lookup() == replayed.lookup()


def test_pruned_on_agent_kill_via_system():
    sys_ = System()
    sys_.spawn_agent("alice", '+!setup : true <- .register("translator").')
    sys_.deliver_message("alice", "x", "achieve", parse_term("setup"))
    sys_.settle()
    assert sys_.directory.lookup() == {"translator": ["alice"]}
    assert sys_.snapshot_agent("alice")["services"] == ["translator"]
    sys_.kill_agent("alice")
    assert sys_.directory.lookup() == {}


def test_deregister_internal_action():
    sys_ = System()
    sys_.spawn_agent(
        "alice",
        '+!flip : true <- .register("svc"); .deregister("svc").',
    )
    sys_.deliver_message("alice", "x", "achieve", parse_term("flip"))
    sys_.settle()
    assert sys_.directory.lookup() == {}
    assert sys_.snapshot_agent("alice")["services"] == []
