import random

import numpy as np
import pytest

from spoofcert.errors import UsageError
from spoofcert.model import (
    TRUE, Action, Call, Chain, InIface, MatchExpr, Protocol, Rule, RulesetTable,
    SrcIp, Unknown,
)
from spoofcert.oracle import (
    ALL, InterpBatch, PacketSpace, SimPacket, UnknownInterp, exact_sets, flat_verdict,
    random_ipassmt, random_table, simulate, simulate_batch,
)
from spoofcert.wordset import IntervalSet

S = IntervalSet(8, [(192, 195)])
FOO = Unknown("--foo")
ALWAYS = UnknownInterp(0)   # bit 0 reads every unknown as true
NEVER = UnknownInterp(1)    # bit 1 reads every unknown as false


def M(*prims):
    return MatchExpr(prims)


def table(policy=Action.ACCEPT, **chains):
    t = RulesetTable("filter", {"FORWARD": Chain("FORWARD", policy, chains.pop("FORWARD", []))})
    for name, rules in chains.items():
        t.chains[name] = Chain(name, None, rules)
    return t


P = SimPacket("eth0", 193, 7, "tcp", 22)


def test_simulate_examples():
    t = table(FORWARD=[Rule(M(SrcIp(S)), Action.DROP)])
    assert simulate(t, "FORWARD", P, ALWAYS) is Action.DROP
    assert simulate(t, "FORWARD", SimPacket("eth0", 5, 7, "tcp", 22), ALWAYS) is Action.ACCEPT
    t = table(FORWARD=[Rule(M(FOO), Action.DROP)])
    assert simulate(t, "FORWARD", P, ALWAYS) is Action.DROP
    assert simulate(t, "FORWARD", P, NEVER) is Action.ACCEPT
    t = table(policy=Action.DROP, FORWARD=[Rule(TRUE, Call("C"))],
              C=[Rule(M(InIface("eth0")), Action.RETURN), Rule(TRUE, Action.ACCEPT)])
    assert simulate(t, "FORWARD", P, ALWAYS) is Action.DROP
    assert simulate(t, "FORWARD", SimPacket("eth1", 1, 1, "udp", 53), ALWAYS) is Action.ACCEPT
    # log and reject are not final / final-drop respectively
    t = table(FORWARD=[Rule(TRUE, Action.LOG), Rule(M(Protocol("tcp")), Action.REJECT)])
    assert simulate(t, "FORWARD", P, ALWAYS) is Action.DROP


def test_flat_verdict():
    rules = [Rule(M(FOO), Action.ACCEPT), Rule(TRUE, Action.DROP)]
    assert flat_verdict(rules, P, ALWAYS) is Action.ACCEPT
    assert flat_verdict(rules, P, NEVER) is Action.DROP
    assert flat_verdict([], P, ALWAYS) is None


def test_interpretations_deterministic():
    a, b = UnknownInterp(12345), UnknownInterp(12345)
    for raw in ("--foo", "--bar", "-m limit --limit 1/s"):
        assert a(raw, P) == b(raw, P)
    assert InterpBatch(3).params("--foo") == InterpBatch(3).params("--foo")
    assert all(ALWAYS(r, P) and not NEVER(r, P) for r in ("--foo", "x", "! y"))
    # the other bits are not all the same reading
    keys = PacketSpace.from_packets([P])
    m = InterpBatch(0).mask("--foo", keys.keys, keys.src_keys)[0]
    assert m not in (np.uint64(1), ALL)


def test_random_table_deterministic_and_bounded():
    for seed in range(100):
        t1, t2 = random_table(seed), random_table(seed)
        assert {n: c.rules for n, c in t1.chains.items()} == {n: c.rules for n, c in t2.chains.items()}
        assert sum(len(c.rules) for c in t1.chains.values()) <= 30
        assert len(t1.chains) <= 4
        t0 = random_table(seed, unknown_rate=0.0)
        assert not any(isinstance(p, Unknown) for c in t0.chains.values() for r in c.rules for p in r.match)
    assert random_ipassmt(4) == random_ipassmt(4)


def test_random_table_rejects_bad_parameters():
    with pytest.raises(UsageError):
        random_table(0, max_chains=0)
    with pytest.raises(UsageError):
        random_table(0, unknown_rate=1.5)


def test_scalar_and_batch_simulation_agree():
    rng = random.Random(3)
    for seed in range(40):
        ipassmt = random_ipassmt(seed)
        t = random_table(seed, guards=ipassmt)
        batch = InterpBatch(seed)
        pkts = [SimPacket(rng.choice(["eth0", "eth1", "wan0", "lo"]), rng.randrange(256),
                          rng.randrange(256), rng.choice(["tcp", "udp", "icmp"]),
                          rng.choice([22, 80, 443, 1500, 9]),
                          rng.choice(["NEW", "ESTABLISHED", "RELATED"])) for _ in range(12)]
        acc = simulate_batch(t, "FORWARD", PacketSpace.from_packets(pkts), batch)
        for i, p in enumerate(pkts):
            for bit in (0, 1, 7, 63):
                verdict = simulate(t, "FORWARD", p, batch.member(bit))
                assert verdict in (Action.ACCEPT, Action.DROP)
                assert bool((int(acc[i]) >> bit) & 1) == (verdict is Action.ACCEPT)


def test_exact_sets_examples():
    interps = [UnknownInterp(k) for k in range(64)]
    acc, denied = exact_sets([], "eth0", interps)
    assert acc.is_empty() and not any(denied(s) for s in range(256))
    acc, _ = exact_sets([Rule(TRUE, Action.ACCEPT)], "eth0", interps)
    assert acc.is_universe()
    acc, denied = exact_sets([Rule(M(SrcIp(S)), Action.DROP)], "eth0", interps)
    assert acc.is_empty()
    assert [s for s in range(256) if denied(s)] == list(range(192, 196))


def test_enumeration_width_limit():
    with pytest.raises(UsageError):
        exact_sets([], "eth0", [ALWAYS], width=17)
    with pytest.raises(UsageError):
        PacketSpace.enumerate("eth0", 20)
    with pytest.raises(UsageError):
        exact_sets([], "eth0", [])


def test_enumerated_space_covers_sources_and_boundaries():
    rules = [Rule(M(SrcIp(S), Protocol("tcp")), Action.DROP)]
    space = PacketSpace.enumerate("eth0", 8, rules, ("NEW", "ESTABLISHED"))
    n_src, reps = space.shape
    assert n_src == 256 and len(space) == n_src * reps
    srcs = {space.packet(k).src_ip for k in range(len(space))}
    assert srcs == set(range(256))
    protos = {space.packet(k).protocol for k in range(reps)}
    assert {"tcp", "udp"} <= protos
