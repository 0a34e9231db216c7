"""Parsers for ``iptables-save`` dumps and interface address assignments.

Only a subset of iptables is understood. Options outside it are kept as
:class:`~spoofcert.model.Unknown` primitives with their original text, so
the certifier can still reason about the rest of the rule.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .errors import InvalidCidrError, ParseError, UnsupportedError
from .model import (
    BUILTIN_CHAINS, CT_STATES, Action, Call, Chain, CtState, DstIp, DstPort,
    InIface, MatchExpr, Origin, Protocol, Rule, RulesetTable, SrcIp, Unknown,
)
from .wordset import IntervalSet, parse_cidr_set

__all__ = [
    "ParseDiagnostic", "parse_save", "parse_rule_spec", "parse_ipassmt",
    "load_table", "tokenize",
]

_TOKEN_RE = re.compile(r'"(?:[^"\\]|\\.)*"|\S+')

_IFACE_OPTS = ("-i", "--in-interface")
_SRC_OPTS = ("-s", "--source", "--src")
_DST_OPTS = ("-d", "--destination", "--dst")
_PROTO_OPTS = ("-p", "--protocol")
_PORT_OPTS = ("--dport", "--destination-port")
_MATCH_OPTS = ("-m", "--match")
_JUMP_OPTS = ("-j", "--jump")
_GOTO_OPTS = ("-g", "--goto")
# options that terminate the swallowed argument list of an unknown module
_TOP_LEVEL = frozenset(
    _IFACE_OPTS + _SRC_OPTS + _DST_OPTS + _PROTO_OPTS + _MATCH_OPTS + _JUMP_OPTS + _GOTO_OPTS)

_KNOWN_MODULES = ("state", "conntrack", "tcp", "udp", "comment")
_PROTO_ALIASES = {"6": "tcp", "17": "udp", "1": "icmp", "0": "all"}

_TARGETS = {
    "ACCEPT": Action.ACCEPT,
    "DROP": Action.DROP,
    "REJECT": Action.REJECT,
    "LOG": Action.LOG,
    "RETURN": Action.RETURN,
}
# targets that never decide a packet's fate in the filter table
NON_TERMINATING_TARGETS = frozenset({
    "NFLOG", "ULOG", "MARK", "CONNMARK", "TCPMSS", "CT", "NOTRACK", "TRACE",
    "AUDIT", "CLASSIFY", "TOS", "DSCP", "SET", "CHECKSUM", "IDLETIMER", "LED",
    "SECMARK", "CONNSECMARK",
})


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str  # "warn" or "error"
    line: int
    message: str

    def __str__(self):
        return f"{self.severity}:{self.line}: {self.message}"


@dataclass(frozen=True)
class _Tok:
    text: str
    start: int
    end: int


def tokenize(text: str) -> list[str]:
    """Split on whitespace, keeping double-quoted strings whole."""
    return [m.group(0) for m in _TOKEN_RE.finditer(text)]


def _spans(text: str) -> list[_Tok]:
    return [_Tok(m.group(0), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def _parse_ports(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition(":")
    if not sep:
        hi = lo
    lo = lo or "0"
    hi = hi or "65535"
    if not (lo.isdigit() and hi.isdigit()):
        raise ValueError(text)
    lo_i, hi_i = int(lo), int(hi)
    if not 0 <= lo_i <= hi_i <= 65535:
        raise ValueError(text)
    return lo_i, hi_i


def _parse_states(text: str) -> frozenset:
    states = frozenset(s.strip().upper() for s in text.split(","))
    bad = states - set(CT_STATES)
    if bad or "" in states:
        raise ParseError(f"unknown connection state(s) {','.join(sorted(bad))!r}")
    return states


def parse_rule_spec(
    spec: Union[str, Sequence[str]],
    width: int = 32,
    warnings: Optional[list] = None,
) -> tuple[MatchExpr, Union[Action, Call]]:
    """Parse the part of an ``-A`` line after the chain name.

    ``spec`` is either the raw text or an already-split token list. Unknown
    primitives keep the exact source text of the tokens they swallowed.
    A target that is not a built-in verdict comes back as ``Call(name)``;
    resolving it against the declared chains is the caller's job. Warning
    messages are appended to ``warnings`` when a list is given.
    """
    if isinstance(spec, str):
        text = spec
        toks = _spans(spec)
    else:
        text = " ".join(spec)
        toks, pos = [], 0
        for t in spec:
            toks.append(_Tok(t, pos, pos + len(t)))
            pos += len(t) + 1
    warn = warnings.append if warnings is not None else (lambda msg: None)

    prims: list = []
    target: Union[Action, Call] = Action.EMPTY
    have_target = False
    seen = set()
    module: Optional[str] = None
    tcp_udp = False
    negate = False
    i, n = 0, len(toks)

    def value(idx: int, opt: str) -> str:
        if idx >= n:
            raise ParseError(f"option {opt} needs an argument")
        val = toks[idx].text
        if val == "!":
            raise ParseError(
                f"legacy negation '{opt} ! ...' is not supported; write '! {opt} ...'")
        return val

    def raw(first: int, last: int) -> str:
        return text[toks[first].start:toks[last].end]

    def swallow(first: int, stop) -> int:
        j = first + 1
        while j < n and not stop(toks[j].text):
            j += 1
        return j

    def unknown(first: int, end: int, why: str) -> None:
        nonlocal negate
        prims.append(Unknown(raw(first, end - 1), negate))
        warn(f"{why}: kept as unknown match {raw(first, end - 1)!r}")
        negate = False

    def dash_stop(t: str) -> bool:
        return t.startswith("-") or t == "!"

    while i < n:
        tok = toks[i].text
        if tok == "!":
            if negate:
                raise ParseError("double negation '! !'")
            if i + 1 >= n:
                raise ParseError("dangling '!' at end of rule")
            negate = True
            i += 1
            continue

        if tok in _GOTO_OPTS:
            raise UnsupportedError(f"{tok} (goto) is unsupported")

        if tok in _JUMP_OPTS:
            if negate:
                raise ParseError(f"'!' cannot negate {tok}")
            if have_target:
                raise ParseError("more than one -j target")
            name = value(i + 1, tok)
            target = _TARGETS.get(name, None) or Call(name)
            have_target = True
            # target options (--reject-with, --log-prefix, ...) carry no filtering meaning
            j = i + 2
            while j < n and toks[j].text not in _TOP_LEVEL and toks[j].text != "!":
                j += 1
            i = j
            continue

        if tok in _IFACE_OPTS:
            if "iface" in seen:
                raise ParseError("duplicate -i in one rule")
            seen.add("iface")
            prims.append(InIface(value(i + 1, tok), negate))
            negate = False
            i += 2
            continue

        if tok in _SRC_OPTS or tok in _DST_OPTS:
            is_src = tok in _SRC_OPTS
            if is_src:
                if "src" in seen:
                    raise ParseError("duplicate -s in one rule")
                seen.add("src")
            val = value(i + 1, tok)
            try:
                addrs = parse_cidr_set(val, width)
            except InvalidCidrError as exc:
                raise ParseError(f"bad address {val!r}: {exc}") from exc
            prims.append((SrcIp if is_src else DstIp)(addrs, negate))
            negate = False
            i += 2
            continue

        if tok in _PROTO_OPTS:
            val = value(i + 1, tok).lower()
            val = _PROTO_ALIASES.get(val, val)
            prims.append(Protocol(val, negate))
            if val in ("tcp", "udp") and not negate:
                tcp_udp = True
            negate = False
            i += 2
            continue

        if tok in _PORT_OPTS:
            val = value(i + 1, tok)
            try:
                lo, hi = _parse_ports(val)
            except ValueError:
                lo = None
            if not tcp_udp or lo is None:
                why = "port match without preceding -p tcp|udp" if not tcp_udp else "unparsed port"
                unknown(i, i + 2, why)
            else:
                prims.append(DstPort(lo, hi, negate))
                negate = False
            i += 2
            continue

        if tok in _MATCH_OPTS:
            mod = value(i + 1, tok)
            if mod in _KNOWN_MODULES and not negate:
                module = mod
                i += 2
                continue
            # unknown module: keep it together with its options
            module = None
            j = swallow(i + 1, lambda t: t in _TOP_LEVEL or t == "!")
            unknown(i, j, f"unsupported match module {mod!r}")
            i = j
            continue

        if module == "state" and tok == "--state" or module == "conntrack" and tok == "--ctstate":
            prims.append(CtState(_parse_states(value(i + 1, tok)), negate))
            negate = False
            i += 2
            continue

        if module == "comment" and tok == "--comment":
            if negate:
                raise ParseError("'!' cannot negate --comment")
            value(i + 1, tok)
            i += 2
            continue

        j = swallow(i, dash_stop)
        unknown(i, j, f"unsupported option {tok!r}" if tok.startswith("-") else f"stray token {tok!r}")
        i = j

    return MatchExpr(tuple(prims)), target


def parse_save(text: str, width: int = 32) -> tuple[list[RulesetTable], list[ParseDiagnostic]]:
    """Parse an ``iptables-save`` dump.

    Never raises on bad input: on the first error the result is an empty
    table list and the diagnostics end with that error.
    """
    diags: list[ParseDiagnostic] = []
    tables: list[RulesetTable] = []
    current: Optional[RulesetTable] = None
    lineno = 0

    def fail(message: str, line: int):
        diags.append(ParseDiagnostic("error", line, message))
        return [], diags

    try:
        lines = text.splitlines()
    except AttributeError:
        return fail("input is not text", 0)

    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("*"):
            if current is not None:
                return fail(f"table {current.name!r} not closed by COMMIT", lineno)
            name = line[1:].strip()
            if not name or any(t.name == name for t in tables):
                return fail(f"bad or duplicate table name {name!r}", lineno)
            current = RulesetTable(name, {}, lineno)
            continue
        if line == "COMMIT":
            if current is None:
                return fail("COMMIT outside a table", lineno)
            tables.append(current)
            current = None
            continue
        if current is None:
            return fail("line outside a *table section", lineno)
        if line.startswith(":"):
            parts = line[1:].split()
            if len(parts) < 2 or len(parts) > 3:
                return fail("malformed chain declaration", lineno)
            name, policy = parts[0], parts[1]
            if name in current.chains:
                return fail(f"chain {name!r} declared twice", lineno)
            if policy == "-":
                if name in BUILTIN_CHAINS:
                    return fail(f"built-in chain {name!r} needs a policy", lineno)
                current.chains[name] = Chain(name, None, [], lineno)
            elif policy in ("ACCEPT", "DROP"):
                if name not in BUILTIN_CHAINS:
                    return fail(f"user-defined chain {name!r} cannot have a policy", lineno)
                current.chains[name] = Chain(name, Action(policy), [], lineno)
            else:
                return fail(f"bad policy {policy!r}", lineno)
            continue

        body = line
        if body.startswith("["):
            # counters from iptables-save -c
            close = body.find("]")
            if close < 0:
                return fail("unterminated counter block", lineno)
            body = body[close + 1:].lstrip()
        if not (body.startswith("-A ") or body.startswith("--append ")):
            return fail(f"unrecognized line {line[:40]!r}", lineno)
        _, _, rest = body.partition(" ")
        rest = rest.lstrip()
        chain_name, _, spec = rest.partition(" ")
        chain = current.chains.get(chain_name)
        if chain is None:
            return fail(f"rule for undeclared chain {chain_name!r}", lineno)
        warnings: list[str] = []
        try:
            match, target = parse_rule_spec(spec.strip(), width, warnings)
        except ParseError as exc:
            return fail(exc.message, lineno)
        except ValueError as exc:
            return fail(str(exc), lineno)
        if isinstance(target, Call) and target.chain not in current.chains:
            if target.chain in NON_TERMINATING_TARGETS:
                warnings.append(f"target {target.chain} has no filtering effect; treated as no-op")
                target = Action.EMPTY
            elif target.chain in BUILTIN_CHAINS:
                return fail(f"cannot jump to built-in chain {target.chain!r}", lineno)
            else:
                return fail(f"unknown target or undeclared chain {target.chain!r}", lineno)
        if isinstance(target, Call) and current.chains[target.chain].builtin:
            return fail(f"cannot jump to built-in chain {target.chain!r}", lineno)
        diags.extend(ParseDiagnostic("warn", lineno, w) for w in warnings)
        chain.rules.append(Rule(match, target, Origin(chain_name, lineno)))

    if current is not None:
        return fail(f"table {current.name!r} not closed by COMMIT", lineno + 1)
    return tables, diags


def load_table(text: str, table: str = "filter", width: int = 32):
    """Parse ``text`` and return ``(table, warnings)``; raise on error."""
    tables, diags = parse_save(text, width)
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        raise ParseError(errors[0].message, errors[0].line)
    for t in tables:
        if t.name == table:
            return t, diags
    raise ParseError(f"no table {table!r} in ruleset")


def parse_ipassmt(text: str, width: int = 32) -> dict[str, IntervalSet]:
    """Parse ``<iface> = <cidr>[,<cidr>]*`` lines; ``#`` starts a comment."""
    result: dict[str, IntervalSet] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        iface, eq, addrs = line.partition("=")
        iface = iface.strip()
        if not eq:
            raise ParseError("expected '<iface> = <cidr>[,<cidr>]*'", lineno)
        if not iface or any(c.isspace() for c in iface):
            raise ParseError(f"bad interface name {iface!r}", lineno)
        if iface in result:
            raise ParseError(f"duplicate interface {iface!r}", lineno)
        addrs = "".join(addrs.split())
        if not addrs:
            raise ParseError(f"empty address list for {iface!r}", lineno)
        try:
            result[iface] = parse_cidr_set(addrs, width)
        except InvalidCidrError as exc:
            raise ParseError(str(exc), lineno) from exc
    return result
