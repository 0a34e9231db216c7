"""Synthetic large rulesets for benchmarks.

The layout mimics a campus router: one interface per VLAN plus an uplink,
a range-check chain per interface that returns for permitted sources and
drops the rest, and per-VLAN service chains. Everything is emitted as
``iptables-save`` text so benchmarks exercise the parser too.
"""

from __future__ import annotations

import random

from .wordset import IntervalSet, parse_cidr

INTERNAL = "10.0.0.0/8"


def synthetic_ruleset(n_ifaces: int = 20, total_rules: int = 5000, seed: int = 0,
                      broken_iface: int | None = None) -> tuple[str, str]:
    """Return ``(iptables_save_text, ipassmt_text)``.

    ``n_ifaces - 1`` VLANs ``vlan1..`` own ``10.N.0.0/16``; interface
    ``wan`` owns everything outside 10.0.0.0/8. The rule count is exact.
    With ``broken_iface`` set, that VLAN's service chain is consulted
    before its range check, which the certifier must reject.
    """
    rng = random.Random(seed)
    vlans = [f"vlan{n}" for n in range(1, n_ifaces)]
    ifaces = vlans + ["wan"]
    ranges = {v: f"10.{n}.0.0/16" for n, v in enumerate(vlans, start=1)}

    lines = ["*filter", ":INPUT ACCEPT [0:0]", ":FORWARD DROP [0:0]", ":OUTPUT ACCEPT [0:0]"]
    for i in ifaces:
        lines.append(f":ranges_{i} - [0:0]")
        lines.append(f":filter_{i} - [0:0]")
    lines.append(":common - [0:0]")

    rules: list[str] = []
    fwd = ["-A FORWARD -m state --state RELATED,ESTABLISHED -j ACCEPT"]
    for k, i in enumerate(ifaces):
        if k + 1 == broken_iface:
            fwd.append(f"-A FORWARD -i {i} -j filter_{i}")
        fwd.append(f"-A FORWARD -i {i} -j ranges_{i}")
    for k, i in enumerate(ifaces):
        if k + 1 != broken_iface:
            fwd.append(f"-A FORWARD -i {i} -j filter_{i}")
    fwd.append("-A FORWARD -j common")
    fwd.append("-A FORWARD -j LOG --log-prefix \"fwd-drop \"")
    rules += fwd

    for i in vlans:
        rules.append(f"-A ranges_{i} -s {ranges[i]} -j RETURN")
        rules.append(f"-A ranges_{i} -j DROP")
    rules.append(f"-A ranges_wan -s {INTERNAL} -j DROP")
    rules.append("-A ranges_wan -s 127.0.0.0/8 -j DROP")

    def host(net_index: int) -> str:
        return f"10.{net_index}.{rng.randrange(256)}.{rng.randrange(1, 255)}"

    def service_rule(chain: str, src_net: str | None) -> str:
        dst = host(rng.randrange(1, n_ifaces))
        proto, port = rng.choice((("tcp", 22), ("tcp", 80), ("tcp", 443), ("udp", 53),
                                  ("tcp", 25), ("tcp", "8000:8100")))
        src = f"-s {src_net} " if src_net else ""
        r = rng.random()
        if r < 0.05:
            return f"-A {chain} {src}-p tcp --dport 22 -m limit --limit 3/min -j ACCEPT"
        if r < 0.12:
            return f"-A {chain} {src}-d {dst}/32 -p {proto} --dport {port} -j REJECT --reject-with icmp-port-unreachable"
        if r < 0.15:
            return f"-A {chain} -m recent --update --seconds 60 --name scan -j DROP"
        return f"-A {chain} {src}-d {dst}/32 -p {proto} -m {proto} --dport {port} -j ACCEPT"

    remaining = total_rules - len(rules)
    n_common = remaining // 10
    per_chain, extra = divmod(remaining - n_common, len(ifaces))
    for k, i in enumerate(ifaces):
        count = per_chain + (1 if k < extra else 0)
        for _ in range(count):
            if i == "wan":
                src = None
            else:
                net = parse_cidr(ranges[i])
                sub = rng.randrange(256)
                src = f"10.{(net.base >> 16) & 0xFF}.{sub}.0/24" if rng.random() < 0.7 else None
            rules.append(service_rule(f"filter_{i}", src))
    for _ in range(n_common):
        rules.append(f"-A common -d {host(rng.randrange(1, n_ifaces))}/32 -p icmp -j ACCEPT")

    assert len(rules) == total_rules, (len(rules), total_rules)
    lines += rules
    lines.append("COMMIT")

    outside = IntervalSet.from_cidr(parse_cidr(INTERNAL)).complement()
    assmt = [f"{v} = {ranges[v]}" for v in vlans]
    assmt.append("wan = " + ",".join(str(c) for c in outside.to_cidr_list()))
    return "\n".join(lines) + "\n", "\n".join(assmt) + "\n"
