"""Rules, match expressions and the other value types shared by every stage.

Everything here is an immutable value. A match expression is a plain
conjunction of primitives; negation lives on the primitive.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from typing import Optional, Union

from .wordset import IntervalSet, format_cidr

CT_STATES = ("NEW", "ESTABLISHED", "RELATED", "INVALID", "UNTRACKED")
BUILTIN_CHAINS = ("INPUT", "FORWARD", "OUTPUT", "PREROUTING", "POSTROUTING")


class Action(enum.Enum):
    ACCEPT = "ACCEPT"
    DROP = "DROP"
    REJECT = "REJECT"
    LOG = "LOG"
    RETURN = "RETURN"
    EMPTY = "EMPTY"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Call:
    chain: str

    def __str__(self):
        return self.chain


Target = Union[Action, Call]


class _Prim:
    negated: bool

    def negate(self):
        return dataclasses.replace(self, negated=not self.negated)

    def _body(self) -> str:
        raise NotImplementedError

    def to_spec(self) -> str:
        body = self._body()
        return f"! {body}" if self.negated else body


@dataclass(frozen=True)
class InIface(_Prim):
    pattern: str
    negated: bool = False

    def _body(self):
        return f"-i {self.pattern}"


def _addr_spec(addrs: IntervalSet) -> str:
    return ",".join(format_cidr(c) for c in addrs.to_cidr_list())


@dataclass(frozen=True)
class SrcIp(_Prim):
    addrs: IntervalSet
    negated: bool = False

    def _body(self):
        return f"-s {_addr_spec(self.addrs)}"


@dataclass(frozen=True)
class DstIp(_Prim):
    addrs: IntervalSet
    negated: bool = False

    def _body(self):
        return f"-d {_addr_spec(self.addrs)}"


@dataclass(frozen=True)
class Protocol(_Prim):
    name: str
    negated: bool = False

    def _body(self):
        return f"-p {self.name}"


@dataclass(frozen=True)
class DstPort(_Prim):
    lo: int
    hi: int
    negated: bool = False

    def __post_init__(self):
        if not 0 <= self.lo <= self.hi <= 65535:
            raise ValueError(f"bad port range {self.lo}:{self.hi}")

    def _body(self):
        ports = str(self.lo) if self.lo == self.hi else f"{self.lo}:{self.hi}"
        return f"--dport {ports}"


@dataclass(frozen=True)
class CtState(_Prim):
    states: frozenset
    negated: bool = False

    def __post_init__(self):
        bad = set(self.states) - set(CT_STATES)
        if bad or not self.states:
            raise ValueError(f"bad conntrack state list {sorted(self.states)}")

    def to_spec(self):
        listed = ",".join(s for s in CT_STATES if s in self.states)
        neg = "! " if self.negated else ""
        return f"-m conntrack {neg}--ctstate {listed}"


@dataclass(frozen=True)
class Unknown(_Prim):
    raw: str
    negated: bool = False

    def __post_init__(self):
        if not self.raw:
            raise ValueError("Unknown primitive needs its raw text")

    def _body(self):
        return self.raw


MatchPrim = Union[InIface, SrcIp, DstIp, Protocol, DstPort, CtState, Unknown]


@dataclass(frozen=True)
class MatchExpr:
    """Conjunction of primitives; the empty conjunction matches everything."""

    conjuncts: tuple = ()

    def __post_init__(self):
        if not isinstance(self.conjuncts, tuple):
            object.__setattr__(self, "conjuncts", tuple(self.conjuncts))

    @property
    def is_true(self) -> bool:
        return not self.conjuncts

    def __and__(self, other: "MatchExpr") -> "MatchExpr":
        return MatchExpr(self.conjuncts + other.conjuncts)

    def __iter__(self):
        return iter(self.conjuncts)

    def __len__(self):
        return len(self.conjuncts)

    def to_spec(self) -> str:
        return " ".join(prim.to_spec() for prim in self.conjuncts)


TRUE = MatchExpr()


@dataclass(frozen=True)
class Origin:
    chain: str
    line: int

    def __str__(self):
        return f"{self.chain}:{self.line}"


@dataclass(frozen=True)
class Rule:
    match: MatchExpr
    action: Target
    origin: Optional[Origin] = field(default=None, compare=False)

    def to_spec(self) -> str:
        if self.action is Action.EMPTY:
            return self.match.to_spec()
        jump = f"-j {self.action}"
        spec = self.match.to_spec()
        return f"{spec} {jump}" if spec else jump


@dataclass
class Chain:
    name: str
    policy: Optional[Action] = None
    rules: list = field(default_factory=list)
    line: int = 0

    @property
    def builtin(self) -> bool:
        return self.policy is not None


@dataclass
class RulesetTable:
    name: str
    chains: dict = field(default_factory=dict)
    line: int = 0


# interface name -> permitted source addresses, in file order
Ipassmt = dict


@dataclass(frozen=True)
class PacketPattern:
    """A concrete packet as seen on an input interface."""

    in_iface: str
    src_ip: int
    dst_ip: Optional[int] = None
    protocol: Optional[str] = None
    dst_port: Optional[int] = None
    state: str = "NEW"

    def __post_init__(self):
        if self.state not in CT_STATES:
            raise ValueError(f"unknown connection state {self.state!r}")
        if self.dst_port is not None and not 0 <= self.dst_port <= 65535:
            raise ValueError(f"bad port {self.dst_port}")


@dataclass(frozen=True)
class Violation:
    rule_index: int
    offending: IntervalSet
    origin: Optional[Origin] = None


@dataclass(frozen=True)
class CertResult:
    certified: bool
    final_allowed: IntervalSet
    first_violation: Optional[Violation] = None

    def __post_init__(self):
        if self.certified != (self.first_violation is None):
            raise ValueError("certified must hold exactly when there is no violation")
