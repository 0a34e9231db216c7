"""Brute-force ground truth at small address widths.

The oracle walks chains exactly like the kernel does, with a caller-chosen
meaning for every Unknown primitive. Two interpreters are provided:

* :func:`simulate` handles one packet and one interpretation, written as
  plainly as possible;
* :func:`simulate_batch` handles a whole :class:`PacketSpace` and 64
  interpretations at once. Bit ``k`` of each ``uint64`` word is the answer
  under interpretation ``k`` of an :class:`InterpBatch`.

Tests check the two against each other, then use the batch path for the
soundness fuzzing of the certifier.
"""

from __future__ import annotations

import hashlib
import itertools
import random
import zlib
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import kernels
from .certifier import iface_matches
from .errors import CyclicChainError, UsageError
from .model import (
    CT_STATES, Action, Call, Chain, CtState, DstIp, DstPort, InIface, MatchExpr,
    Origin, Protocol, Rule, RulesetTable, SrcIp, Unknown,
)
from .wordset import Cidr, IntervalSet

__all__ = [
    "SimPacket", "UnknownInterp", "InterpBatch", "PacketSpace", "simulate",
    "simulate_batch", "flat_verdicts", "prefix_sets", "exact_sets",
    "random_table", "random_ipassmt", "MAX_ENUM_WIDTH",
]

MAX_ENUM_WIDTH = 16
ALL = np.uint64(0xFFFFFFFFFFFFFFFF)
_U64 = 0xFFFFFFFFFFFFFFFF
BASE_PROTOCOLS = ("tcp", "udp", "icmp")
BASE_PORTS = (0, 1, 22, 53, 80, 443, 8080, 65535)
_SRC_SALT = 0x5A17C0DE5A17C0DE


def _h64(text: str) -> int:
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


def _mix(z: int) -> int:
    z &= _U64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64
    return z ^ (z >> 31)


def _proto_code(name: str) -> int:
    return zlib.crc32(name.encode()) & 0xFF


@dataclass(frozen=True)
class SimPacket:
    in_iface: str
    src_ip: int
    dst_ip: int
    protocol: str
    dst_port: int
    state: str = "NEW"


class InterpBatch:
    """64 interpretations of Unknown primitives, one per bit.

    For each raw text every bit independently gets one of four behaviours:
    constantly false, constantly true, a pseudo-random function of the
    whole packet, or a pseudo-random function of (interface, source)
    only. Bit 0 is true and bit 1 false for every Unknown, so the two
    extreme readings are always covered.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self._cache: dict[str, tuple[int, int, int, int]] = {}

    def params(self, raw: str) -> tuple[int, int, int, int]:
        p = self._cache.get(raw)
        if p is None:
            salt = _h64(f"{self.seed}\0{raw}")
            a = _mix(salt ^ 0xA5A5A5A5A5A5A5A5)
            b = _mix(salt ^ 0x3C3C3C3C3C3C3C3C)
            const_true = ~a & b & _U64
            pkt_rand = a & ~b & _U64
            src_rand = a & b
            const_true = (const_true | 1) & ~2
            pkt_rand &= ~3
            src_rand &= ~3
            p = (salt, const_true, pkt_rand, src_rand)
            self._cache[raw] = p
        return p

    def mask(self, raw: str, keys: np.ndarray, src_keys: np.ndarray) -> np.ndarray:
        salt, const_true, pkt_rand, src_rand = self.params(raw)
        return kernels.unknown_mask(keys, src_keys, salt, const_true, pkt_rand, src_rand)

    def member(self, k: int) -> "UnknownInterp":
        return UnknownInterp(self.seed * 64 + k)


@dataclass(frozen=True)
class UnknownInterp:
    """One interpretation: a pure function of (raw text, packet)."""

    seed: int

    @property
    def batch(self) -> InterpBatch:
        return _batch(self.seed // 64)

    @property
    def bit(self) -> int:
        return self.seed % 64

    def __call__(self, raw: str, p: SimPacket) -> bool:
        space = PacketSpace.from_packets([p])
        m = self.batch.mask(raw, space.keys, space.src_keys)
        return bool((int(m[0]) >> self.bit) & 1)


_BATCHES: dict[int, InterpBatch] = {}


def _batch(seed: int) -> InterpBatch:
    b = _BATCHES.get(seed)
    if b is None:
        b = _BATCHES[seed] = InterpBatch(seed)
    return b


class PacketSpace:
    """A flat array of concrete packets.

    ``shape`` is ``(n_src, n_rest)`` when built by :meth:`enumerate`, which
    lists packets source-major so per-source reductions are a reshape.
    """

    def __init__(self, ifaces, iface_idx, src, dst, protos, proto_idx, port, state_idx, shape=None):
        self.ifaces = list(ifaces)
        self.iface_idx = np.asarray(iface_idx, dtype=np.int64)
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.protos = list(protos)
        self.proto_idx = np.asarray(proto_idx, dtype=np.int64)
        self.port = np.asarray(port, dtype=np.int64)
        self.state_idx = np.asarray(state_idx, dtype=np.int64)
        self.shape = shape or (len(self.src), 1)
        self._keys()

    def __len__(self):
        return len(self.src)

    def _keys(self):
        ifh = np.array([_h64(name) for name in self.ifaces], dtype=np.uint64)[self.iface_idx]
        codes = np.array([_proto_code(p) for p in self.protos], dtype=np.uint64)[self.proto_idx]
        u = lambda a: a.astype(np.uint64)
        base = (u(self.src) | (u(self.dst) << np.uint64(16)) | (u(self.port) << np.uint64(32))
                | (codes << np.uint64(48)) | (u(self.state_idx) << np.uint64(56)))
        self.keys = kernels.mix64(base ^ ifh)
        self.src_keys = kernels.mix64(u(self.src) ^ ifh ^ np.uint64(_SRC_SALT))

    @classmethod
    def from_packets(cls, packets: Sequence[SimPacket]) -> "PacketSpace":
        ifaces = sorted({p.in_iface for p in packets})
        protos = sorted({p.protocol for p in packets})
        return cls(
            ifaces, [ifaces.index(p.in_iface) for p in packets],
            [p.src_ip for p in packets], [p.dst_ip for p in packets],
            protos, [protos.index(p.protocol) for p in packets],
            [p.dst_port for p in packets], [CT_STATES.index(p.state) for p in packets],
        )

    @classmethod
    def enumerate(cls, iface: str, width: int, rules: Iterable[Rule] = (),
                  states: Sequence[str] = ("NEW",)) -> "PacketSpace":
        """Every packet from ``iface``: all sources, representative other fields.

        Destinations, ports and protocols are reduced to fixed sentinels
        plus every boundary constant appearing in ``rules``, which is
        enough to separate all behaviours of the known primitives.
        """
        if width > MAX_ENUM_WIDTH:
            raise UsageError(f"refusing to enumerate {width}-bit address space")
        top = (1 << width) - 1
        dsts = {0, top}
        ports = set(BASE_PORTS)
        protos = list(BASE_PROTOCOLS)
        for prim in _prims(rules):
            if isinstance(prim, DstIp):
                for lo, hi in prim.addrs.intervals:
                    dsts.update(v for v in (lo - 1, lo, hi, hi + 1) if 0 <= v <= top)
            elif isinstance(prim, DstPort):
                ports.update(v for v in (prim.lo - 1, prim.lo, prim.hi, prim.hi + 1) if 0 <= v <= 65535)
            elif isinstance(prim, Protocol) and prim.name != "all" and prim.name not in protos:
                protos.append(prim.name)
        rest = list(itertools.product(sorted(dsts), range(len(protos)), sorted(ports),
                                      [CT_STATES.index(s) for s in states]))
        n_src = top + 1
        rest_arr = np.array(rest, dtype=np.int64)
        reps = len(rest)
        src = np.repeat(np.arange(n_src, dtype=np.int64), reps)
        tiled = np.tile(rest_arr, (n_src, 1))
        return cls([iface], np.zeros(len(src), dtype=np.int64), src, tiled[:, 0],
                   protos, tiled[:, 1], tiled[:, 2], tiled[:, 3], shape=(n_src, reps))

    def packet(self, k: int) -> SimPacket:
        return SimPacket(self.ifaces[self.iface_idx[k]], int(self.src[k]), int(self.dst[k]),
                         self.protos[self.proto_idx[k]], int(self.port[k]),
                         CT_STATES[self.state_idx[k]])


def _prims(rules_or_table):
    if isinstance(rules_or_table, RulesetTable):
        rules = [r for c in rules_or_table.chains.values() for r in c.rules]
    else:
        rules = rules_or_table
    for r in rules:
        yield from r.match


# ---------------------------------------------------------------- scalar path

def _prim_holds(prim, p: SimPacket, f: UnknownInterp) -> bool:
    if isinstance(prim, InIface):
        v = iface_matches(prim.pattern, p.in_iface)
    elif isinstance(prim, SrcIp):
        v = prim.addrs.member(p.src_ip)
    elif isinstance(prim, DstIp):
        v = prim.addrs.member(p.dst_ip)
    elif isinstance(prim, Protocol):
        v = prim.name == "all" or prim.name == p.protocol
    elif isinstance(prim, DstPort):
        v = prim.lo <= p.dst_port <= prim.hi
    elif isinstance(prim, CtState):
        v = p.state in prim.states
    elif isinstance(prim, Unknown):
        v = f(prim.raw, p)
    else:
        raise UsageError(f"unsupported primitive {prim!r}")
    return v != prim.negated


def _matches(m: MatchExpr, p: SimPacket, f: UnknownInterp) -> bool:
    return all(_prim_holds(prim, p, f) for prim in m)


def simulate(table: RulesetTable, entry: str, p: SimPacket, f: UnknownInterp) -> Action:
    """Verdict (ACCEPT or DROP) of built-in chain ``entry`` for packet ``p``."""
    chain = table.chains[entry]
    if chain.policy is None:
        raise UsageError(f"{entry!r} has no policy")

    def walk(name: str, stack: list) -> Optional[Action]:
        if name in stack:
            raise CyclicChainError(stack[stack.index(name):] + [name])
        stack.append(name)
        try:
            for rule in table.chains[name].rules:
                if not _matches(rule.match, p, f):
                    continue
                a = rule.action
                if a is Action.ACCEPT:
                    return Action.ACCEPT
                if a in (Action.DROP, Action.REJECT):
                    return Action.DROP
                if a is Action.RETURN:
                    return None
                if isinstance(a, Call):
                    verdict = walk(a.chain, stack)
                    if verdict is not None:
                        return verdict
            return None
        finally:
            stack.pop()

    verdict = walk(entry, [])
    return verdict if verdict is not None else chain.policy


def flat_verdict(rules: Sequence[Rule], p: SimPacket, f: UnknownInterp) -> Optional[Action]:
    for rule in rules:
        if _matches(rule.match, p, f):
            return Action.DROP if rule.action is Action.REJECT else rule.action
    return None


# ---------------------------------------------------------------- batch path

class _Evaluator:
    def __init__(self, space: PacketSpace, batch: InterpBatch):
        self.space = space
        self.batch = batch
        self._cache: dict = {}

    def _known(self, prim) -> np.ndarray:
        s = self.space
        if isinstance(prim, InIface):
            ok = np.array([iface_matches(prim.pattern, n) for n in s.ifaces], dtype=bool)
            return ok[s.iface_idx]
        if isinstance(prim, SrcIp):
            return prim.addrs.contains_many(s.src)
        if isinstance(prim, DstIp):
            return prim.addrs.contains_many(s.dst)
        if isinstance(prim, Protocol):
            if prim.name == "all":
                return np.ones(len(s), dtype=bool)
            ok = np.array([n == prim.name for n in s.protos], dtype=bool)
            return ok[s.proto_idx]
        if isinstance(prim, DstPort):
            return (s.port >= prim.lo) & (s.port <= prim.hi)
        if isinstance(prim, CtState):
            ok = np.array([st in prim.states for st in CT_STATES], dtype=bool)
            return ok[s.state_idx]
        raise UsageError(f"unsupported primitive {prim!r}")

    def prim(self, prim) -> np.ndarray:
        m = self._cache.get(prim)
        if m is None:
            if isinstance(prim, Unknown):
                m = self.batch.mask(prim.raw, self.space.keys, self.space.src_keys)
                if prim.negated:
                    m = ~m
            else:
                b = self._known(prim)
                if prim.negated:
                    b = ~b
                m = np.where(b, ALL, np.uint64(0))
            self._cache[prim] = m
        return m

    def match(self, m: MatchExpr) -> np.ndarray:
        out = np.full(len(self.space), ALL, dtype=np.uint64)
        for prim in m:
            out &= self.prim(prim)
        return out


def simulate_batch(table: RulesetTable, entry: str, space: PacketSpace,
                   batch: InterpBatch, evaluator: Optional[_Evaluator] = None) -> np.ndarray:
    """Accept mask per packet: bit k set iff interpretation k accepts it."""
    chain = table.chains[entry]
    if chain.policy is None:
        raise UsageError(f"{entry!r} has no policy")
    ev = evaluator or _Evaluator(space, batch)
    zero = np.zeros(len(space), dtype=np.uint64)

    def walk(name, active, stack):
        if name in stack:
            raise CyclicChainError(stack[stack.index(name):] + [name])
        stack.append(name)
        acc = zero.copy()
        ret = zero.copy()
        for rule in table.chains[name].rules:
            if not active.any():
                break
            a = rule.action
            if a in (Action.LOG, Action.EMPTY):
                continue
            hit = ev.match(rule.match) & active
            if a is Action.ACCEPT:
                acc |= hit
                active = active & ~hit
            elif a in (Action.DROP, Action.REJECT):
                active = active & ~hit
            elif a is Action.RETURN:
                ret |= hit
                active = active & ~hit
            elif isinstance(a, Call):
                sub_acc, back = walk(a.chain, hit, stack)
                acc |= sub_acc
                active = (active & ~hit) | back
        stack.pop()
        # back = packets handed back to the caller (returned or fell off the end)
        return acc, ret | active

    acc, back = walk(entry, np.full(len(space), ALL, dtype=np.uint64), [])
    if chain.policy is Action.ACCEPT:
        acc |= back
    return acc


def flat_verdicts(rules: Sequence[Rule], space: PacketSpace, batch: InterpBatch,
                  evaluator: Optional[_Evaluator] = None):
    """Yield ``(accepted, dropped)`` masks after each rule of a flat list."""
    ev = evaluator or _Evaluator(space, batch)
    undecided = np.full(len(space), ALL, dtype=np.uint64)
    acc = np.zeros(len(space), dtype=np.uint64)
    drop = np.zeros(len(space), dtype=np.uint64)
    for rule in rules:
        hit = ev.match(rule.match) & undecided
        if rule.action is Action.ACCEPT:
            acc = acc | hit
        elif rule.action in (Action.DROP, Action.REJECT):
            drop = drop | hit
        else:
            raise UsageError(f"flat rule list contains {rule.action}")
        undecided = undecided & ~hit
        yield acc, drop


def set_from_mask(flags: np.ndarray, width: int) -> IntervalSet:
    """IntervalSet of the indices where ``flags`` is true."""
    flags = np.asarray(flags, dtype=bool)
    if not flags.any():
        return IntervalSet.empty(width)
    padded = np.concatenate(([False], flags, [False])).astype(np.int8)
    edges = np.diff(padded)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    return IntervalSet(width, np.column_stack((starts, ends)))


def prefix_sets(rules: Sequence[Rule], iface: str, batch: InterpBatch, width: int = 8,
                select: int = _U64, space: Optional[PacketSpace] = None):
    """For each prefix of ``rules`` (including the empty one) yield
    ``(accepted_srcs, denied_srcs)``.

    ``accepted_srcs`` holds sources with at least one enumerated packet
    accepted under a selected interpretation; ``denied_srcs`` those whose
    every packet is dropped under every selected interpretation.
    """
    space = space or PacketSpace.enumerate(iface, width, rules)
    n_src, reps = space.shape
    sel = np.uint64(select)
    yield IntervalSet.empty(width), IntervalSet.empty(width)
    for acc, drop in flat_verdicts(rules, space, batch):
        any_acc = ((acc & sel) != 0).reshape(n_src, reps).any(axis=1)
        all_drop = ((drop & sel) == sel).reshape(n_src, reps).all(axis=1)
        yield set_from_mask(any_acc, width), set_from_mask(all_drop, width)


def exact_sets(rules: Sequence[Rule], iface: str, interps: Sequence[UnknownInterp],
               width: int = 8):
    """Exact-analog sets of a flat rule prefix over the enumerated packets.

    Returns ``(accepted_srcs, denied_check)``: the sources some packet and
    sampled interpretation get accepted for, and a predicate telling
    whether every packet with a given source is dropped under every
    sampled interpretation.
    """
    if width > MAX_ENUM_WIDTH:
        raise UsageError(f"refusing to enumerate {width}-bit address space")
    groups: dict[int, int] = {}
    for f in interps:
        groups[f.seed // 64] = groups.get(f.seed // 64, 0) | (1 << f.bit)
    if not groups:
        raise UsageError("need at least one interpretation")
    accepted = IntervalSet.empty(width)
    denied = IntervalSet.universe(width)
    space = PacketSpace.enumerate(iface, width, rules)
    for seed, select in groups.items():
        *_, (acc, den) = prefix_sets(rules, iface, _batch(seed), width, select, space)
        accepted = accepted | acc
        denied = denied & den
    return accepted, denied.member


# ---------------------------------------------------------------- generators

UNKNOWN_POOL = (
    "--foo", "--bar", "-m limit --limit 1/s", "-m recent --rcheck --name ssh",
    "-m mac --mac-source 00:11:22:33:44:55", "-o eth1",
)


def _random_cidr(rng: random.Random, width: int, min_len: int = 0) -> Cidr:
    plen = rng.randint(min_len, width)
    base = rng.getrandbits(width) & ~((1 << (width - plen)) - 1) if plen else 0
    return Cidr(base, plen, width)


def random_ipassmt(seed: int, iface_pool: Sequence[str] = ("eth0", "eth1", "wan0"),
                   width: int = 8) -> dict:
    """Internal interfaces get random blocks; the last one gets everything else."""
    rng = random.Random(seed)
    out = {}
    inner = IntervalSet.empty(width)
    for name in iface_pool[:-1]:
        s = IntervalSet.empty(width)
        for _ in range(rng.randint(1, 2)):
            s = s | IntervalSet.from_cidr(_random_cidr(rng, width, 1 if width > 1 else 0))
        out[name] = s
        inner = inner | s
    rest = inner.complement()
    out[iface_pool[-1]] = rest if rest else IntervalSet.universe(width)
    return out


def random_table(seed: int, max_chains: int = 4, max_rules: int = 30,
                 iface_pool: Sequence[str] = ("eth0", "eth1", "wan0"),
                 unknown_rate: float = 0.2, width: int = 8,
                 guards: Optional[dict] = None, simple_returns: bool = False,
                 entry: str = "FORWARD") -> RulesetTable:
    """Reproducible random acyclic filter table.

    ``guards`` (interface -> permitted sources) makes the generator emit
    anti-spoofing rules and range-check chains for those interfaces, so a
    useful share of the tables is certifiable. With ``simple_returns``
    every Return rule has at most one primitive. The total rule count
    never exceeds ``max_rules``.
    """
    if max_chains < 1 or max_rules < 0 or not 0 <= unknown_rate <= 1:
        raise UsageError("bad random_table parameters")
    rng = random.Random(seed)
    n_chains = rng.randint(1, max_chains)
    names = [entry] + [f"c{k}" for k in range(1, n_chains)]
    budget = rng.randint(0, max_rules)
    counts = [0] * n_chains
    for _ in range(budget):
        counts[0 if rng.random() < 0.4 else rng.randrange(n_chains)] += 1
    patterns = list(iface_pool) + ["eth+"]
    guard_ifaces = sorted(guards) if guards else []
    dst_pool = [_random_cidr(rng, width, 1) for _ in range(2)]
    port_pool = [(22, 22), (80, 80), (443, 443), (1000, 2000)]

    def unknown():
        return Unknown(rng.choice(UNKNOWN_POOL), rng.random() < 0.3)

    def random_match(allow_unknown=True):
        prims = []
        if rng.random() < 0.5:
            prims.append(InIface(rng.choice(patterns), rng.random() < 0.15))
        if rng.random() < 0.5:
            if guard_ifaces and rng.random() < 0.4:
                prims.append(SrcIp(guards[rng.choice(guard_ifaces)], rng.random() < 0.5))
            else:
                prims.append(SrcIp(IntervalSet.from_cidr(_random_cidr(rng, width)),
                                   rng.random() < 0.3))
        if rng.random() < 0.15:
            prims.append(DstIp(IntervalSet.from_cidr(rng.choice(dst_pool)), rng.random() < 0.3))
        if rng.random() < 0.25:
            proto = rng.choice(BASE_PROTOCOLS)
            prims.append(Protocol(proto, rng.random() < 0.2))
            if proto != "icmp" and rng.random() < 0.5:
                lo, hi = rng.choice(port_pool)
                prims.append(DstPort(lo, hi, rng.random() < 0.2))
        if rng.random() < 0.15:
            k = rng.randint(1, 2)
            prims.append(CtState(frozenset(rng.sample(CT_STATES[:3], k)), rng.random() < 0.2))
        if allow_unknown and rng.random() < unknown_rate:
            prims.insert(rng.randint(0, len(prims)), unknown())
        return MatchExpr(tuple(prims))

    def guard_rule():
        iface = rng.choice(guard_ifaces)
        prims = [InIface(iface), SrcIp(guards[iface], True)]
        if rng.random() < unknown_rate:
            prims.insert(rng.randint(0, 2), unknown())
        return MatchExpr(tuple(prims)), Action.DROP

    table = RulesetTable("filter", {})
    line = 1
    for k, name in enumerate(names):
        policy = rng.choice((Action.ACCEPT, Action.DROP)) if k == 0 else None
        table.chains[name] = Chain(name, policy, [], line)
        line += 1

    # range-check chain: permitted sources return, everything else dropped
    range_chain = None
    if guard_ifaces and n_chains > 1 and counts[-1] >= 2 and rng.random() < 0.5:
        range_chain = rng.choice(guard_ifaces)

    for k, name in enumerate(names):
        chain = table.chains[name]
        callable_ = names[k + 1:]
        n = counts[k]
        made = 0
        if k == 0 and guard_ifaces and n and rng.random() < 0.6:
            # anti-spoofing block at the head of the entry chain
            for _ in range(min(n, rng.randint(1, len(guard_ifaces)))):
                m, a = guard_rule()
                chain.rules.append(Rule(m, a, Origin(name, line)))
                line += 1
                made += 1
        if range_chain is not None and k == len(names) - 1:
            ret_match = MatchExpr((SrcIp(guards[range_chain]),))
            if rng.random() < unknown_rate and not simple_returns:
                ret_match = MatchExpr((unknown(),)) & ret_match
            chain.rules.append(Rule(ret_match, Action.RETURN, Origin(name, line)))
            chain.rules.append(Rule(MatchExpr(), Action.DROP, Origin(name, line + 1)))
            line += 2
            made += 2
        while made < n:
            if guard_ifaces and rng.random() < 0.1:
                m, a = guard_rule()
            else:
                r = rng.random()
                if callable_ and r < 0.18:
                    a = Call(rng.choice(callable_))
                    if range_chain is not None and a.chain == names[-1] and rng.random() < 0.7:
                        m = MatchExpr((InIface(range_chain),))
                    else:
                        m = random_match()
                elif r < 0.28:
                    a = Action.RETURN
                    m = random_match()
                    if simple_returns:
                        m = MatchExpr(m.conjuncts[:rng.randint(0, 1)])
                else:
                    a = rng.choice((Action.ACCEPT, Action.ACCEPT, Action.DROP, Action.DROP,
                                    Action.REJECT, Action.LOG, Action.EMPTY))
                    m = random_match()
            chain.rules.append(Rule(m, a, Origin(name, line)))
            line += 1
            made += 1
    return table
