"""Certification of spoofing protection on a preprocessed rule list.

For one input interface the certifier walks the rules once, keeping

* ``allowed``: every source address some rule so far may accept, and
* ``denied``: addresses every earlier rule definitely drops and that no
  earlier rule could have accepted.

The interface is protected when ``allowed - denied`` lies inside its
assigned range. Because ``allowed`` only over-approximates and ``denied``
only under-approximates, a positive verdict holds for every possible
meaning of the matches the tool does not understand.
"""

from __future__ import annotations

import enum
from typing import Iterable, Optional

from .errors import UsageError
from .model import (
    Action, CertResult, CtState, DstIp, DstPort, InIface, MatchExpr,
    PacketPattern, Protocol, Rule, SrcIp, Unknown, Violation,
)
from .wordset import IntervalSet

__all__ = [
    "Ternary", "iface_matches", "may_match_srcs", "must_match_srcs", "sp",
    "certify_all", "eval_ternary", "certify_access", "CompiledRule", "compile_rules",
]


class Ternary(enum.Enum):
    FALSE = 0
    TRUE = 1
    UNKNOWN = 2

    def __invert__(self):
        if self is Ternary.UNKNOWN:
            return self
        return Ternary.TRUE if self is Ternary.FALSE else Ternary.FALSE

    def __and__(self, other):
        if self is Ternary.FALSE or other is Ternary.FALSE:
            return Ternary.FALSE
        if self is Ternary.UNKNOWN or other is Ternary.UNKNOWN:
            return Ternary.UNKNOWN
        return Ternary.TRUE

    @classmethod
    def of(cls, b: bool) -> "Ternary":
        return cls.TRUE if b else cls.FALSE


def iface_matches(pattern: str, iface: str) -> bool:
    """Interface name match; a trailing ``+`` accepts any suffix."""
    if pattern.endswith("+"):
        return iface.startswith(pattern[:-1])
    return pattern == iface


class CompiledRule:
    """Interface-independent facts about a rule, computed once.

    ``srcs`` is the intersection of the rule's source-address primitives
    (complemented when negated). ``exact`` tells whether the rule only
    constrains interface and source address, in which case ``srcs`` is
    also the set of sources it definitely matches.
    """

    __slots__ = ("rule", "accept", "ifaces", "srcs", "exact")

    def __init__(self, rule: Rule, width: int):
        if rule.action is Action.ACCEPT:
            self.accept = True
        elif rule.action is Action.DROP:
            self.accept = False
        else:
            raise UsageError(
                f"rule list is not preprocessed: found action {rule.action} "
                "(only ACCEPT and DROP allowed)")
        self.rule = rule
        self.ifaces = []
        srcs = None
        exact = True
        for prim in rule.match:
            if isinstance(prim, InIface):
                self.ifaces.append((prim.pattern, prim.negated))
            elif isinstance(prim, SrcIp):
                if prim.addrs.width != width:
                    raise UsageError(
                        f"source set width {prim.addrs.width} does not match {width}")
                s = prim.addrs.complement() if prim.negated else prim.addrs
                srcs = s if srcs is None else srcs & s
            else:
                exact = False
        self.srcs = IntervalSet.universe(width) if srcs is None else srcs
        self.exact = exact

    def iface_ok(self, iface: str) -> bool:
        for pattern, negated in self.ifaces:
            if iface_matches(pattern, iface) == negated:
                return False
        return True


def compile_rules(rules: Iterable[Rule], width: int = 32) -> list[CompiledRule]:
    return [CompiledRule(r, width) for r in rules]


def _width_of(m: MatchExpr, default: int) -> int:
    for prim in m:
        if isinstance(prim, SrcIp):
            return prim.addrs.width
    return default


def may_match_srcs(m: MatchExpr, iface: str, width: Optional[int] = None) -> IntervalSet:
    """Over-approximate the sources of packets from ``iface`` that ``m`` can match.

    Only interface and source-address primitives are consulted; all other
    primitives are assumed satisfiable.
    """
    width = width or _width_of(m, 32)
    c = CompiledRule(Rule(m, Action.ACCEPT), width)
    if not c.iface_ok(iface):
        return IntervalSet.empty(width)
    return c.srcs


def must_match_srcs(m: MatchExpr, iface: str, width: Optional[int] = None) -> IntervalSet:
    """Under-approximate the sources for which every packet from ``iface`` matches ``m``.

    Any primitive other than interface or source address makes the result
    empty, even ones (protocol, port, ...) whose meaning is known.
    """
    width = width or _width_of(m, 32)
    c = CompiledRule(Rule(m, Action.DROP), width)
    if not c.exact or not c.iface_ok(iface):
        return IntervalSet.empty(width)
    return c.srcs


def _as_compiled(rules, width):
    rules = list(rules)
    if rules and isinstance(rules[0], CompiledRule):
        return rules
    return compile_rules(rules, width)


def _step(c: CompiledRule, iface: str, allowed: IntervalSet, denied: IntervalSet):
    if not c.iface_ok(iface):
        return allowed, denied
    if c.accept:
        return allowed | c.srcs, denied
    if c.exact:
        return allowed, denied | (c.srcs - allowed)
    return allowed, denied


def sp(rules, iface: str, assigned: IntervalSet) -> CertResult:
    """Certify spoofing protection of ``rules`` for packets entering on ``iface``.

    ``rules`` is a preprocessed list (ACCEPT/DROP only) of :class:`Rule`
    or :class:`CompiledRule`. On failure the result names the first rule
    after which some source outside ``assigned`` was potentially accepted
    and not definitely denied; that set only grows along the rule list, so
    the earliest such rule is well defined.
    """
    width = assigned.width
    compiled = _as_compiled(rules, width)
    allowed = IntervalSet.empty(width)
    denied = IntervalSet.empty(width)
    for c in compiled:
        allowed, denied = _step(c, iface, allowed, denied)
    final = allowed - denied
    if final <= assigned:
        return CertResult(True, final)

    allowed = IntervalSet.empty(width)
    denied = IntervalSet.empty(width)
    for idx, c in enumerate(compiled):
        allowed, denied = _step(c, iface, allowed, denied)
        offending = (allowed - denied) - assigned
        if offending:
            return CertResult(False, final, Violation(idx, offending, c.rule.origin))
    raise AssertionError("unreachable: final check failed but no prefix did")


def certify_all(rules, ipassmt: dict) -> dict:
    """Run :func:`sp` for every interface of ``ipassmt``, in its order."""
    if not ipassmt:
        raise UsageError("ipassmt is empty")
    widths = {s.width for s in ipassmt.values()}
    if len(widths) != 1:
        raise UsageError("ipassmt mixes address widths")
    compiled = _as_compiled(rules, widths.pop())
    return {iface: sp(compiled, iface, assigned) for iface, assigned in ipassmt.items()}


def _eval_prim(prim, p: PacketPattern) -> Ternary:
    if isinstance(prim, InIface):
        v = Ternary.of(iface_matches(prim.pattern, p.in_iface))
    elif isinstance(prim, SrcIp):
        v = Ternary.of(prim.addrs.member(p.src_ip))
    elif isinstance(prim, DstIp):
        if p.dst_ip is None:
            return Ternary.UNKNOWN
        v = Ternary.of(prim.addrs.member(p.dst_ip))
    elif isinstance(prim, Protocol):
        if prim.name == "all":
            v = Ternary.TRUE
        elif p.protocol is None:
            return Ternary.UNKNOWN
        else:
            v = Ternary.of(prim.name == p.protocol)
    elif isinstance(prim, DstPort):
        if p.dst_port is None:
            return Ternary.UNKNOWN
        v = Ternary.of(prim.lo <= p.dst_port <= prim.hi)
    elif isinstance(prim, CtState):
        v = Ternary.of(p.state in prim.states)
    elif isinstance(prim, Unknown):
        return Ternary.UNKNOWN
    else:
        raise UsageError(f"unsupported primitive {prim!r}")
    return ~v if prim.negated else v


def eval_ternary(m: MatchExpr, p: PacketPattern) -> Ternary:
    """Three-valued match of ``m`` against the concrete fields of ``p``."""
    result = Ternary.TRUE
    for prim in m:
        result = result & _eval_prim(prim, p)
        if result is Ternary.FALSE:
            break
    return result


def certify_access(rules, p: PacketPattern) -> bool:
    """True only if ``p`` is accepted whatever the unknown matches mean.

    Unknown outcomes count as matching for DROP rules and as not matching
    for ACCEPT rules, i.e. the rule list is read as its strictest version.
    """
    for rule in rules:
        if isinstance(rule, CompiledRule):
            rule = rule.rule
        if rule.action not in (Action.ACCEPT, Action.DROP):
            raise UsageError(f"rule list is not preprocessed: found action {rule.action}")
        v = eval_ternary(rule.match, p)
        if rule.action is Action.ACCEPT and v is Ternary.TRUE:
            return True
        if rule.action is Action.DROP and v is not Ternary.FALSE:
            return False
    return False
