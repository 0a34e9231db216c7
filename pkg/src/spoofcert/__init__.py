"""Sound certification of IP spoofing protection for iptables rulesets."""

from .certifier import (
    Ternary, certify_access, certify_all, eval_ternary, iface_matches,
    may_match_srcs, must_match_srcs, sp,
)
from .errors import ParseError, SpoofcertError, UsageError
from .model import (
    Action, Call, CertResult, CtState, DstIp, DstPort, InIface, MatchExpr,
    PacketPattern, Protocol, Rule, SrcIp, Unknown,
)
from .parser import load_table, parse_ipassmt, parse_rule_spec, parse_save
from .preprocess import apply_state_assumption, flatten, simplify, unfold
from .wordset import Cidr, IntervalSet, parse_cidr

__version__ = "0.1.0"

__all__ = [
    "Action", "Call", "CertResult", "Cidr", "CtState", "DstIp", "DstPort", "InIface",
    "IntervalSet", "MatchExpr", "PacketPattern", "ParseError", "Protocol", "Rule",
    "SpoofcertError", "SrcIp", "Ternary", "Unknown", "UsageError", "apply_state_assumption",
    "certify_access", "certify_all", "eval_ternary", "flatten", "iface_matches", "load_table",
    "may_match_srcs", "must_match_srcs", "parse_cidr", "parse_ipassmt", "parse_rule_spec",
    "parse_save", "simplify", "sp", "unfold",
]
