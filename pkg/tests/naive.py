"""Deliberately dumb reference models used as test oracles."""

from functools import lru_cache

from spoofcert.certifier import iface_matches
from spoofcert.model import (
    CtState, DstIp, DstPort, InIface, MatchExpr, Protocol, SrcIp, Unknown,
)
from spoofcert.wordset import IntervalSet


def to_pyset(s):
    out = set()
    for lo, hi in s.intervals:
        out.update(range(lo, hi + 1))
    return out


def intervals_of(values):
    """Canonical interval list of a python set of ints, by scanning."""
    out = []
    for v in sorted(values):
        if out and out[-1][1] + 1 == v:
            out[-1][1] = v
        else:
            out.append([v, v])
    return tuple((lo, hi) for lo, hi in out)


def universe(width):
    return set(range(1 << width))


def min_cidr_count(values, width):
    """Fewest aligned blocks whose disjoint union is exactly ``values`` (DP)."""
    values = frozenset(values)

    @lru_cache(maxsize=None)
    def best(start):
        # cover every value >= start
        rest = [v for v in values if v >= start]
        if not rest:
            return 0
        x = min(rest)
        options = []
        for span in range(width + 1):
            size = 1 << span
            if x % size:
                break
            if all(y in values for y in range(x, x + size)):
                options.append(1 + best(x + size))
        return min(options)

    return best(0)


# ---------------------------------------------------------------- match expressions

def matched_srcs(m, iface, width=8):
    """Exact sources matched by an interface/source-only expression, by scanning."""
    def holds(p, src):
        if isinstance(p, InIface):
            return iface_matches(p.pattern, iface) != p.negated
        return p.addrs.member(src) != p.negated
    return IntervalSet.from_values(width, [s for s in range(1 << width) if all(holds(p, s) for p in m)])


def random_cidr_set(rng, width=8):
    plen = rng.randint(0, width)
    base = rng.getrandbits(width) & ~((1 << (width - plen)) - 1)
    return IntervalSet(width, [(base, base + (1 << (width - plen)) - 1)])


def random_expr(rng, known_only=False):
    prims = []
    for _ in range(rng.randint(0, 4)):
        kind = rng.randrange(2 if known_only else 7)
        neg = rng.random() < 0.4
        if kind == 0:
            prims.append(InIface(rng.choice(["eth0", "eth1", "eth+", "wan"]), neg))
        elif kind == 1:
            prims.append(SrcIp(random_cidr_set(rng), neg))
        elif kind == 2:
            prims.append(Unknown(rng.choice(["--foo", "--bar"]), neg))
        elif kind == 3:
            prims.append(Protocol(rng.choice(["tcp", "udp"]), neg))
        elif kind == 4:
            prims.append(DstPort(22, 80, neg))
        elif kind == 5:
            prims.append(DstIp(random_cidr_set(rng), neg))
        else:
            prims.append(CtState(frozenset({"NEW"}), neg))
    return MatchExpr(tuple(prims))
