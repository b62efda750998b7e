"""Frontier sets and the connectedness check for sequential composition.

``trans_i`` collects the role pairs of the actions a choreography may start
with, ``trans_f`` those it may end with. A program is connected when, for
every sequence, each final pair of the left side shares a role with each
initial pair of the right side.

Everything here is iterative so that long generated sequences do not hit the
interpreter's recursion limit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Tuple

from choreo import dioc
from choreo.printer import pretty_dioc

RolePair = Tuple[str, str]
FrontierSet = FrozenSet[RolePair]

EMPTY: FrontierSet = frozenset()

# Below this size the quadratic check is cheaper than the common-role argument.
BRUTE_FORCE_LIMIT = 9


def pair(a: str, b: str) -> RolePair:
    return (a, b) if a <= b else (b, a)


def _meets(p: RolePair, q: RolePair) -> bool:
    return p[0] in q or p[1] in q


def brute_force_intersect(s: FrontierSet, t: FrontierSet) -> bool:
    return all(_meets(p, q) for p in s for q in t)


def pairsets_all_intersect(s: FrontierSet, t: FrontierSet) -> bool:
    """True iff every pair of ``s`` shares a role with every pair of ``t``.

    Once the smaller set has more than nine pairs the check can only succeed
    if a single role occurs in every pair of both sets, and that role must
    belong to any one pair of the smaller set.
    """
    small, large = (s, t) if len(s) <= len(t) else (t, s)
    if not small:
        return True
    if len(small) <= BRUTE_FORCE_LIMIT:
        return brute_force_intersect(small, large)
    first = next(iter(small))
    for role in set(first):
        if all(role in p for p in small) and all(role in q for q in large):
            return True
    return False


@dataclass(frozen=True)
class Summary:
    roles: FrozenSet[str]
    initial: FrontierSet
    final: FrontierSet


def _summarize(
    node: dioc.DiocProc, kids: List[Summary]
) -> Summary:
    if isinstance(node, dioc.Interaction):
        p = frozenset({pair(node.sender, node.receiver)})
        return Summary(frozenset({node.sender, node.receiver}), p, p)
    if isinstance(node, dioc.Assign):
        p = frozenset({pair(node.role, node.role)})
        return Summary(frozenset({node.role}), p, p)
    if isinstance(node, (dioc.Skip, dioc.End)):
        return Summary(frozenset(), EMPTY, EMPTY)
    if isinstance(node, dioc.Seq):
        left, right = kids
        initial = left.initial if left.initial else right.initial
        final = right.final if right.final else left.final
        return Summary(left.roles | right.roles, initial, final)
    if isinstance(node, dioc.Par):
        left, right = kids
        return Summary(left.roles | right.roles, left.initial | right.initial, left.final | right.final)
    if isinstance(node, dioc.If):
        then, else_ = kids
        r = node.role
        final = then.final | else_.final
        if not final:
            final = frozenset({pair(r, r)})
        return Summary(then.roles | else_.roles | {r}, frozenset({pair(r, r)}), final)
    if isinstance(node, dioc.While):
        (body,) = kids
        r = node.role
        if not body.final:
            final = frozenset({pair(r, r)})
        else:
            final = frozenset(pair(r, s) for s in body.roles - {r})
        return Summary(body.roles | {r}, frozenset({pair(r, r)}), final)
    if isinstance(node, dioc.Scope):
        (body,) = kids
        r = node.role
        others = body.roles - {r}
        if others:
            final = frozenset(pair(r, s) for s in others)
        else:
            final = frozenset({pair(r, r)})
        return Summary(body.roles | {r}, frozenset({pair(r, r)}), final)
    raise TypeError(f"not a choreography term: {node!r}")


def summaries(p: dioc.DiocProc) -> Dict[int, Summary]:
    """Post-order summaries keyed by ``id`` of each node of ``p``."""
    out: Dict[int, Summary] = {}
    stack: List[Tuple[dioc.DiocProc, bool]] = [(p, False)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in out:
            continue
        kids = dioc.children(node)
        if expanded or not kids:
            out[id(node)] = _summarize(node, [out[id(k)] for k in kids])
            continue
        stack.append((node, True))
        for k in kids:
            if id(k) not in out:
                stack.append((k, False))
    return out


def trans_i(p: dioc.DiocProc) -> FrontierSet:
    return summaries(p)[id(p)].initial


def trans_f(p: dioc.DiocProc) -> FrontierSet:
    return summaries(p)[id(p)].final


@dataclass
class ConnectednessReport:
    ok: bool
    failing: Optional[dioc.Seq] = None
    final_pair: Optional[RolePair] = None
    initial_pair: Optional[RolePair] = None

    def describe(self) -> str:
        if self.ok or self.failing is None:
            return "connected"
        left = pretty_dioc(self.failing.left).splitlines()[0]
        right = pretty_dioc(self.failing.right).splitlines()[0]
        return (
            f"sequence '{left}' ; '{right}': final pair {{{', '.join(self.final_pair or ())}}} "
            f"shares no role with initial pair {{{', '.join(self.initial_pair or ())}}}"
        )


def connected(p: dioc.DiocProc, *, logger: Optional[logging.Logger] = None) -> ConnectednessReport:
    """Check every sequence of ``p``; report the first failing one in pre-order."""
    log = logger or logging.getLogger(__name__)
    table = summaries(p)
    for node in dioc.walk(p):
        if not isinstance(node, dioc.Seq):
            continue
        final = table[id(node.left)].final
        initial = table[id(node.right)].initial
        if pairsets_all_intersect(final, initial):
            continue
        for fp in sorted(final):
            for ip in sorted(initial):
                if not _meets(fp, ip):
                    log.debug("Sequence not connected: %s vs %s", fp, ip)
                    return ConnectednessReport(False, node, fp, ip)
    return ConnectednessReport(True)


__all__ = [
    "BRUTE_FORCE_LIMIT",
    "ConnectednessReport",
    "FrontierSet",
    "RolePair",
    "Summary",
    "brute_force_intersect",
    "connected",
    "pair",
    "pairsets_all_intersect",
    "summaries",
    "trans_f",
    "trans_i",
]
