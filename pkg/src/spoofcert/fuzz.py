"""Property checks of the certifier against the brute-force oracle.

Each ``*_violations`` function returns a list of human-readable failure
descriptions; an empty list means the property held on that case.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .certifier import CompiledRule, _step, certify_access, certify_all
from .model import CT_STATES, Action, PacketPattern, Unknown
from .oracle import (
    ALL, BASE_PORTS, InterpBatch, PacketSpace, SimPacket, flat_verdicts,
    prefix_sets, random_ipassmt, random_table, simulate_batch,
)
from .preprocess import apply_state_assumption, simplify, unfold
from .wordset import IntervalSet

ENTRY = "FORWARD"
IFACES = ("eth0", "eth1", "wan0")


@dataclass
class FuzzCase:
    seed: int
    table: object
    ipassmt: dict
    flat: list
    flat_new: list
    width: int = 8
    batch: InterpBatch = field(default=None)
    _spaces: dict = field(default_factory=dict)

    def space(self, iface: str, states=("NEW",)) -> PacketSpace:
        key = (iface, tuple(states))
        sp = self._spaces.get(key)
        if sp is None:
            rules = [r for c in self.table.chains.values() for r in c.rules]
            sp = self._spaces[key] = PacketSpace.enumerate(iface, self.width, rules, states)
        return sp


def make_case(seed: int, max_chains: int = 4, max_rules: int = 30, unknown_rate: float = 0.2,
              width: int = 8, simple_returns: bool = False, iface_pool=IFACES) -> FuzzCase:
    ipassmt = random_ipassmt(seed, iface_pool, width)
    table = random_table(seed, max_chains=max_chains, max_rules=max_rules, iface_pool=iface_pool,
                         unknown_rate=unknown_rate, width=width, guards=ipassmt,
                         simple_returns=simple_returns, entry=ENTRY)
    flat = simplify(unfold(table, ENTRY))
    return FuzzCase(seed, table, ipassmt, flat, apply_state_assumption(flat, True), width,
                    InterpBatch(seed))


def contract_violations(flat) -> list[str]:
    out = []
    if not flat:
        out.append("flat list is empty")
        return out
    for k, r in enumerate(flat):
        if r.action not in (Action.ACCEPT, Action.DROP):
            out.append(f"rule {k} has action {r.action}")
    if not flat[-1].match.is_true:
        out.append("last rule is not unconditional")
    return out


def soundness_violations(case: FuzzCase, results=None) -> tuple[list[str], int]:
    """No NEW packet from a certified interface with a foreign source is accepted.

    Returns ``(violations, number_of_certified_interfaces)``.
    """
    results = results or certify_all(case.flat_new, case.ipassmt)
    out = []
    certified = 0
    for iface, res in results.items():
        if not res.certified:
            continue
        certified += 1
        space = case.space(iface)
        acc = simulate_batch(case.table, ENTRY, space, case.batch)
        foreign = ~case.ipassmt[iface].contains_many(space.src)
        bad = np.flatnonzero((acc != 0) & foreign)
        if bad.size:
            p = space.packet(int(bad[0]))
            bits = int(acc[bad[0]])
            out.append(f"seed {case.seed}: {iface} certified but {p} accepted (interp bits {bits:#x})")
    return out, certified


def prefix_violations(case: FuzzCase) -> list[str]:
    """Every prefix: oracle-accepted sources within the certifier's allowed set,
    certifier's denied set within the oracle's definitely-denied sources."""
    out = []
    compiled = [CompiledRule(r, case.width) for r in case.flat_new]
    for iface in case.ipassmt:
        space = case.space(iface)
        allowed = IntervalSet.empty(case.width)
        denied = IntervalSet.empty(case.width)
        oracle = prefix_sets(case.flat_new, iface, case.batch, case.width, space=space)
        acc_exact, den_exact = next(oracle)
        for k, c in enumerate(compiled):
            allowed, denied = _step(c, iface, allowed, denied)
            acc_exact, den_exact = next(oracle)
            if not acc_exact <= allowed:
                out.append(f"seed {case.seed} {iface} prefix {k + 1}: accepted "
                           f"{acc_exact - allowed} not in allowed set")
            if not denied <= den_exact:
                out.append(f"seed {case.seed} {iface} prefix {k + 1}: denied "
                           f"{denied - den_exact} not definitely dropped")
    return out


def equivalence_violations(case: FuzzCase, ifaces=IFACES + ("lo",)) -> list[str]:
    """Flat list and chain walk agree on every enumerated packet (any state).

    Only meaningful for Unknown-free tables whose Return rules have at most
    one primitive; other tables are skipped.
    """
    for c in case.table.chains.values():
        for r in c.rules:
            if any(isinstance(p, Unknown) for p in r.match):
                return []
            if r.action is Action.RETURN and len(r.match) > 1:
                return []
    out = []
    for iface in ifaces:
        space = case.space(iface, CT_STATES)
        chain_acc = simulate_batch(case.table, ENTRY, space, case.batch)
        *_, (flat_acc, flat_drop) = flat_verdicts(case.flat, space, case.batch)
        if np.any((flat_acc | flat_drop) != ALL):
            out.append(f"seed {case.seed} {iface}: flat list leaves packets undecided")
        diff = np.flatnonzero(chain_acc != flat_acc)
        if diff.size:
            out.append(f"seed {case.seed} {iface}: verdicts differ for {space.packet(int(diff[0]))}")
    return out


def random_packets(case: FuzzCase, n: int, rng: random.Random) -> list[SimPacket]:
    top = (1 << case.width) - 1
    ports = list(BASE_PORTS) + [22, 22, 1500]
    return [
        SimPacket(rng.choice(IFACES + ("lo",)), rng.randint(0, top), rng.randint(0, top),
                  rng.choice(("tcp", "tcp", "udp", "icmp")), rng.choice(ports),
                  rng.choice(CT_STATES[:3]))
        for _ in range(n)
    ]


def lockout_violations(case: FuzzCase, n_packets: int = 40) -> tuple[list[str], int]:
    """A DEFINITELY ACCEPTED verdict must hold under every interpretation.

    Returns ``(violations, number_of_accepted_verdicts)``.
    """
    rng = random.Random(case.seed ^ 0x10C0)
    packets = random_packets(case, n_packets, rng)
    chosen = [p for p in packets if certify_access(case.flat, PacketPattern(
        p.in_iface, p.src_ip, p.dst_ip, p.protocol, p.dst_port, p.state))]
    if not chosen:
        return [], 0
    space = PacketSpace.from_packets(chosen)
    acc = simulate_batch(case.table, ENTRY, space, case.batch)
    out = [f"seed {case.seed}: {chosen[k]} certified accessible but dropped (bits {int(acc[k]):#x})"
           for k in np.flatnonzero(acc != ALL)]
    return out, len(chosen)
