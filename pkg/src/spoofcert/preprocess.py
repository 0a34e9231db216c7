"""Flatten a table into an Accept/Drop-only rule list.

:func:`unfold` inlines user-defined chains and removes Return;
:func:`simplify` drops the actions that never decide a packet;
:func:`apply_state_assumption` restricts the analysis to NEW packets.
"""

from __future__ import annotations

from typing import Iterable, Optional

from .errors import CyclicChainError, UsageError
from .model import (
    TRUE, Action, Call, CtState, MatchExpr, Origin, Rule, RulesetTable, Unknown,
)

__all__ = ["unfold", "simplify", "apply_state_assumption", "flatten", "negate_match"]


def negate_match(m: MatchExpr) -> Optional[MatchExpr]:
    """Negation of ``m`` as a conjunction, or None when ``m`` is always true.

    Single primitives flip their flag. Anything longer cannot be written
    without disjunction and becomes one opaque Unknown primitive.
    """
    if m.is_true:
        return None
    if len(m) == 1:
        return MatchExpr((m.conjuncts[0].negate(),))
    body = " ∧ ".join(p.to_spec() for p in m.conjuncts)
    return MatchExpr((Unknown(f"¬({body})"),))


def _inline(table: RulesetTable, name: str, stack: list[str]) -> list[Rule]:
    if name in stack:
        raise CyclicChainError(stack[stack.index(name):] + [name])
    chain = table.chains.get(name)
    if chain is None:
        raise UsageError(f"no chain {name!r} in table {table.name!r}")
    stack.append(name)
    out: list[Rule] = []
    guard = TRUE
    for rule in chain.rules:
        if rule.action is Action.RETURN:
            neg = negate_match(rule.match)
            if neg is None:
                break
            guard = guard & neg
            continue
        if isinstance(rule.action, Call):
            cond = guard & rule.match
            for sub in _inline(table, rule.action.chain, stack):
                out.append(Rule(cond & sub.match, sub.action, sub.origin))
            continue
        out.append(Rule(guard & rule.match, rule.action, rule.origin))
    stack.pop()
    return out


def unfold(table: RulesetTable, entry: str) -> list[Rule]:
    """Inline every call reachable from built-in chain ``entry``.

    A rule ``(m, Return)`` disappears and the negation of ``m`` is
    conjoined onto the rest of its own chain; at the top level this makes
    the remaining rules fall through to the policy. The policy itself is
    appended as the final unconditional rule.
    """
    chain = table.chains.get(entry)
    if chain is None:
        raise UsageError(f"no chain {entry!r} in table {table.name!r}")
    if chain.policy is None:
        raise UsageError(f"{entry!r} is not a built-in chain with a policy")
    rules = _inline(table, entry, [])
    rules.append(Rule(TRUE, chain.policy, Origin(entry, chain.line)))
    return rules


def simplify(rules: Iterable[Rule]) -> list[Rule]:
    out = []
    for rule in rules:
        action = rule.action
        if isinstance(action, Call) or action is Action.RETURN:
            raise UsageError("simplify needs an unfolded rule list")
        if action in (Action.LOG, Action.EMPTY):
            continue
        if action is Action.REJECT:
            rule = Rule(rule.match, Action.DROP, rule.origin)
        out.append(rule)
    if not out or not out[-1].match.is_true:
        raise UsageError("rule list does not end with an unconditional verdict")
    return out


def apply_state_assumption(rules: Iterable[Rule], assume_new: bool = True) -> list[Rule]:
    """Evaluate connection-state matches for a NEW packet.

    Rules that cannot match a NEW packet are removed; state primitives a
    NEW packet always satisfies are dropped from their conjunction.
    """
    rules = list(rules)
    if not assume_new:
        return rules
    out = []
    for rule in rules:
        keep = []
        dead = False
        for prim in rule.match:
            if isinstance(prim, CtState):
                if ("NEW" in prim.states) != prim.negated:
                    continue
                dead = True
                break
            keep.append(prim)
        if dead:
            continue
        if len(keep) != len(rule.match):
            rule = Rule(MatchExpr(tuple(keep)), rule.action, rule.origin)
        out.append(rule)
    return out


def flatten(table: RulesetTable, entry: str = "FORWARD", assume_new: bool = True) -> list[Rule]:
    """The full pipeline: unfold, simplify, then apply the state assumption."""
    return apply_state_assumption(simplify(unfold(table, entry)), assume_new)
