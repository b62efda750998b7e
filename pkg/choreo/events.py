"""Events, causality and conflicts of choreographies and networks.

Events are named by global index, kind and the role performing them. In a
network each role taking part in a scope has its own scope events; a
participant's events match the leader's the way a receive matches a send.
The causality relation is a ``networkx`` digraph that is transitively
closed; the reflexive pairs are implicit.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import networkx as nx

from choreo import dioc, dpoc
from choreo.dpoc import AuxKind, DpocIndex, GlobalIndex, IndexVariant, Network, format_global, plain
from choreo.dpoc_engine import system_transitions


class EventKind(str, enum.Enum):
    SEND = "send"
    RECV = "recv"
    ASSIGN = "assign"
    SCOPE_INIT = "scope-init"
    SCOPE_TERM = "scope-term"
    IF = "if"
    WHILE = "while"


@dataclass(frozen=True)
class Event:
    gid: GlobalIndex
    kind: EventKind
    role: str = ""
    op: str = ""
    peer: str = ""
    scopes: Tuple[GlobalIndex, ...] = field(default=(), compare=False)

    @property
    def is_comm(self) -> bool:
        return self.kind in (EventKind.SEND, EventKind.RECV)

    @property
    def is_aux(self) -> bool:
        return "*" in self.op

    @property
    def index(self) -> DpocIndex:
        return self.gid[-1]

    def __str__(self) -> str:
        where = f"[{self.role}]" if self.role else ""
        extra = f" {self.op}:{self.peer}" if self.op else ""
        return f"{self.kind.value}@{format_global(self.gid)}{where}{extra}"


_SCOPE_KINDS = (EventKind.SCOPE_INIT, EventKind.SCOPE_TERM)
_LOOP_NOTICE = f".{AuxKind.WB.value}*_"


def _scope_pair(a: Event, b: Event) -> bool:
    if a.kind != b.kind or a.gid != b.gid or a.role == b.role:
        return False
    lead, part = (a, b) if not a.peer else (b, a)
    return not lead.peer and part.peer == lead.role


def matching(a: Event, b: Event) -> bool:
    """Send/receive pair on the same operation between the same roles.

    The receiving side of a decision broadcast carries ``?r`` where the
    sending side carries ``?t`` or ``?f``. For loop notifications a
    participant's receive in front of its loop takes the ``?t`` that opens an
    iteration, and the receive closing an iteration takes the ``?f`` sent after
    the loop. Scope events of a participant match those of the leader.
    """
    if a.kind in _SCOPE_KINDS:
        return _scope_pair(a, b)
    if {a.kind, b.kind} != {EventKind.SEND, EventKind.RECV}:
        return False
    send, recv = (a, b) if a.kind is EventKind.SEND else (b, a)
    if send.op != recv.op or send.peer != recv.role or recv.peer != send.role:
        return False
    if send.gid == recv.gid:
        return True
    s, r = send.gid[-1], recv.gid[-1]
    if s.base != r.base or r.variant is not IndexVariant.RECV:
        return False
    if s.variant not in (IndexVariant.TRUE, IndexVariant.FALSE):
        return False
    outer_s, outer_r = send.gid[:-1], recv.gid[:-1]
    if _LOOP_NOTICE not in send.op:
        return outer_s == outer_r
    loop = plain(s.base)
    closing = outer_r[-1:] == (loop,)
    if s.variant is IndexVariant.TRUE:
        return not closing and outer_s in (outer_r, outer_r + (loop,))
    return closing and outer_r == outer_s + (loop,)


# -------------------
# Structure collected from a term
# -------------------


@dataclass
class _Collected:
    events: Set[Event] = field(default_factory=set)
    edges: Set[Tuple[Event, Event]] = field(default_factory=set)
    conflicts: Set[FrozenSet[Event]] = field(default_factory=set)

    def add(self, ev: Event) -> Event:
        self.events.add(ev)
        return ev

    def precede(self, before: Iterable[Event], after: Iterable[Event]) -> None:
        after = list(after)
        for a in before:
            for b in after:
                if a != b:
                    self.edges.add((a, b))

    def branches(self, left: Set[Event], right: Set[Event]) -> None:
        for a in left:
            for b in right:
                if a != b:
                    self.conflicts.add(frozenset((a, b)))

    def sequence(self, parts: Iterable[Set[Event]]) -> Set[Event]:
        seen: Set[Event] = set()
        prev: Set[Event] = set()
        for cur in parts:
            self.precede(prev, cur)
            if cur:
                prev = cur
            seen |= cur
        return seen

    def conditional(self, guard: Event, then: Set[Event], else_: Set[Event]) -> Set[Event]:
        self.precede([guard], then | else_)
        self.branches(then, else_)
        return {guard} | then | else_

    def scope(self, init: Event, term: Event, body: Set[Event]) -> Set[Event]:
        self.precede([init], body | {term})
        self.precede(body, [term])
        return {init, term} | body


def _seq_items(p, kind) -> List:
    out: List = []
    stack = [p]
    while stack:
        node = stack.pop()
        if isinstance(node, kind):
            stack.extend([node.right, node.left])
        else:
            out.append(node)
    return out


def _dioc_events(out: _Collected, p: dioc.DiocProc, ctx: GlobalIndex, scopes) -> Set[Event]:
    if isinstance(p, dioc.Seq):
        return out.sequence(_dioc_events(out, item, ctx, scopes) for item in _seq_items(p, dioc.Seq))
    if isinstance(p, dioc.Par):
        return _dioc_events(out, p.left, ctx, scopes) | _dioc_events(out, p.right, ctx, scopes)
    if isinstance(p, (dioc.Skip, dioc.End)):
        return set()
    gid = ctx + (plain(p.idx),)
    if isinstance(p, dioc.Interaction):
        op = f"{p.idx}.{p.op}"
        send = out.add(Event(gid, EventKind.SEND, p.sender, op, p.receiver, scopes))
        recv = out.add(Event(gid, EventKind.RECV, p.receiver, op, p.sender, scopes))
        out.edges.add((send, recv))
        return {send, recv}
    if isinstance(p, dioc.Assign):
        return {out.add(Event(gid, EventKind.ASSIGN, p.role, scopes=scopes))}
    if isinstance(p, dioc.If):
        guard = out.add(Event(gid, EventKind.IF, p.role, scopes=scopes))
        return out.conditional(guard, _dioc_events(out, p.then, ctx, scopes), _dioc_events(out, p.else_, ctx, scopes))
    if isinstance(p, dioc.While):
        guard = out.add(Event(gid, EventKind.WHILE, p.role, scopes=scopes))
        body = _dioc_events(out, p.body, gid, scopes)
        out.precede([guard], body)
        return {guard} | body
    if isinstance(p, dioc.Scope):
        init = out.add(Event(gid, EventKind.SCOPE_INIT, p.role, scopes=scopes))
        term = out.add(Event(gid, EventKind.SCOPE_TERM, p.role, scopes=scopes))
        return out.scope(init, term, _dioc_events(out, p.body, ctx, scopes + (gid,)))
    raise TypeError(f"not a choreography term: {p!r}")


def _dpoc_events(out: _Collected, role: str, p: dpoc.DpocProc, ctx: GlobalIndex, scopes) -> Set[Event]:
    if isinstance(p, dpoc.Seq):
        return out.sequence(_dpoc_events(out, role, item, ctx, scopes) for item in _seq_items(p, dpoc.Seq))
    if isinstance(p, dpoc.Par):
        return _dpoc_events(out, role, p.left, ctx, scopes) | _dpoc_events(out, role, p.right, ctx, scopes)
    if isinstance(p, (dpoc.Skip, dpoc.End)):
        return set()
    gid = ctx + (p.idx,)
    if isinstance(p, (dpoc.Send, dpoc.SendUpdate)):
        return {out.add(Event(gid, EventKind.SEND, role, p.op.full(), p.to, scopes))}
    if isinstance(p, dpoc.Recv):
        return {out.add(Event(gid, EventKind.RECV, role, p.op.full(), p.sender, scopes))}
    if isinstance(p, dpoc.Assign):
        return {out.add(Event(gid, EventKind.ASSIGN, role, scopes=scopes))}
    if isinstance(p, dpoc.If):
        guard = out.add(Event(gid, EventKind.IF, role, scopes=scopes))
        then = _dpoc_events(out, role, p.then, ctx, scopes)
        return out.conditional(guard, then, _dpoc_events(out, role, p.else_, ctx, scopes))
    if isinstance(p, dpoc.While):
        guard = out.add(Event(gid, EventKind.WHILE, role, scopes=scopes))
        body = _dpoc_events(out, role, p.body, gid, scopes)
        out.precede([guard], body)
        return {guard} | body
    if isinstance(p, (dpoc.ScopeCoord, dpoc.ScopeSimple)):
        lead = p.lead if isinstance(p, dpoc.ScopeSimple) else ""
        init = out.add(Event(gid, EventKind.SCOPE_INIT, role, peer=lead, scopes=scopes))
        term = out.add(Event(gid, EventKind.SCOPE_TERM, role, peer=lead, scopes=scopes))
        return out.scope(init, term, _dpoc_events(out, role, p.body, ctx, scopes + (gid,)))
    raise TypeError(f"not a role process: {p!r}")


def _collect(term) -> _Collected:
    out = _Collected()
    if isinstance(term, Network):
        for role, st in term.items():
            _dpoc_events(out, role, st.proc, (), ())
    else:
        _dioc_events(out, term, (), ())
    return out


def events_of(term) -> FrozenSet[Event]:
    """Events of a choreography or of a network."""
    return frozenset(_collect(term).events)


def conflicts(term) -> FrozenSet[FrozenSet[Event]]:
    """Unordered pairs of events lying in different branches of one conditional."""
    return frozenset(_collect(term).conflicts)


# -------------------
# Causality
# -------------------


@dataclass
class Causality:
    """Transitively closed order; ``leq`` adds reflexivity."""

    graph: nx.DiGraph

    def leq(self, a: Event, b: Event) -> bool:
        return a == b or self.graph.has_edge(a, b)

    def predecessors(self, e: Event) -> List[Event]:
        if e not in self.graph:
            return []
        return [a for a in self.graph.predecessors(e) if a != e]

    def is_partial_order(self) -> bool:
        return not any(self.graph.has_edge(b, a) for a, b in self.graph.edges if a != b)

    def cycle(self) -> Optional[List[Event]]:
        for a, b in self.graph.edges:
            if a != b and self.graph.has_edge(b, a):
                return [a, b]
        return None


def _matches_index(events: Iterable[Event]) -> Dict[Event, List[Event]]:
    by_channel: Dict[Tuple[object, ...], List[Event]] = {}
    for e in events:
        if e.is_comm:
            key: Tuple[object, ...] = (e.op, frozenset((e.role, e.peer)), e.gid[-1].base)
        elif e.kind in _SCOPE_KINDS:
            key = (e.kind, e.gid)
        else:
            continue
        by_channel.setdefault(key, []).append(e)
    out: Dict[Event, List[Event]] = {}
    for group in by_channel.values():
        for a in group:
            out[a] = [b for b in group if matching(a, b)]
    return out


def leq(term, *, logger: Optional[logging.Logger] = None) -> Causality:
    """Least causality relation of a choreography or a network.

    On networks, whenever ``a`` precedes ``b`` every event matching ``a``
    precedes ``b`` as well; the closure is iterated to a fixpoint. Pairs
    ``a <= a`` are not used to derive new pairs.
    """
    log = logger or logging.getLogger(__name__)
    col = _collect(term)
    g = nx.DiGraph()
    g.add_nodes_from(col.events)
    g.add_edges_from(col.edges)
    closure = nx.transitive_closure(g, reflexive=False)
    if isinstance(term, Network):
        matches = _matches_index(col.events)
        rounds = 0
        while True:
            rounds += 1
            new = [
                (m, b)
                for a, b in closure.edges
                if a != b
                for m in matches.get(a, ())
                if m != b and not closure.has_edge(m, b)
            ]
            if not new:
                break
            closure.add_edges_from(new)
            closure = nx.transitive_closure(closure, reflexive=False)
        log.debug("Causality over %d events closed in %d round(s)", len(col.events), rounds)
    return Causality(closure)


# -------------------
# Well-annotated networks
# -------------------


@dataclass
class WellAnnotationReport:
    """Witnesses per failed condition; C2 is dynamic, see :func:`check_minimality`."""

    failures: Dict[str, List[str]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not any(self.failures.values())

    def passed(self, condition: str) -> bool:
        return not self.failures.get(condition)

    def add(self, condition: str, witness: str) -> None:
        self.failures.setdefault(condition, []).append(witness)

    def describe(self) -> List[str]:
        lines = []
        for cond in ("C1", "C3", "C4", "C5", "C6"):
            wit = self.failures.get(cond, [])
            lines.append(f"{cond}: {'ok' if not wit else 'FAIL ' + '; '.join(wit[:3])}")
        return lines


def _check_ordered(
    report: WellAnnotationReport,
    condition: str,
    events: List[Event],
    order: Causality,
    conflicting: FrozenSet[FrozenSet[Event]],
) -> None:
    groups: Dict[Tuple[str, str, str], List[Event]] = {}
    for e in events:
        groups.setdefault((e.role, e.op, e.peer), []).append(e)
    for group in groups.values():
        group.sort(key=str)
        for i, a in enumerate(group):
            for b in group[i + 1 :]:
                if a.gid == b.gid or frozenset((a, b)) in conflicting:
                    continue
                if not (order.leq(a, b) or order.leq(b, a)):
                    report.add(condition, f"{a} || {b}")


def check_wellannotated_dpoc(net: Network, *, logger: Optional[logging.Logger] = None) -> WellAnnotationReport:
    """Static conditions C1, C3, C4, C5 and C6 on a network."""
    log = logger or logging.getLogger(__name__)
    col = _collect(net)
    order = leq(net, logger=log)
    conflicting = frozenset(col.conflicts)
    report = WellAnnotationReport({c: [] for c in ("C1", "C3", "C4", "C5", "C6")})
    events = sorted(col.events, key=str)

    by_gid: Dict[GlobalIndex, List[Event]] = {}
    for e in events:
        if e.is_comm and not e.is_aux:
            by_gid.setdefault(e.gid, []).append(e)
    for gid, group in by_gid.items():
        if len(group) > 2 or (len(group) == 2 and not matching(group[0], group[1])):
            report.add("C1", f"{format_global(gid)}: {', '.join(map(str, group))}")

    _check_ordered(report, "C3", [e for e in events if e.kind is EventKind.SEND], order, conflicting)
    _check_ordered(report, "C4", [e for e in events if e.kind is EventKind.RECV], order, conflicting)

    matches = _matches_index(events)
    for e in events:
        for m in matches.get(e, ()):
            if set(e.scopes) != set(m.scopes):
                report.add("C5", f"{e} in scopes {list(map(format_global, e.scopes))} matched by {m}")

    by_index: Dict[Tuple[DpocIndex, EventKind, str, str, str], List[Event]] = {}
    for e in events:
        by_index.setdefault((e.index, e.kind, e.role, e.op, e.peer), []).append(e)
    for group in by_index.values():
        for i, a in enumerate(group):
            for b in group[i + 1 :]:
                if a.gid == b.gid:
                    continue
                inner, outer = (a, b) if len(a.gid) > len(b.gid) else (b, a)
                loop = inner.gid[:-1]
                if len(inner.gid) == len(outer.gid) or outer.gid[: len(loop)] == loop:
                    report.add("C6", f"{a} / {b}")
                    continue
                guard = Event(loop, EventKind.WHILE, inner.role)
                if not order.leq(outer, guard):
                    report.add("C6", f"{outer} does not precede {guard}")
    for cond, wit in report.failures.items():
        if wit:
            log.debug("Condition %s failed with %d witness(es)", cond, len(wit))
    return report


def leaf_event(role: str, leaf: dpoc.DpocProc) -> Optional[Event]:
    """Event fired by an enabled construct; enabled constructs sit outside every loop."""
    if isinstance(leaf, (dpoc.Send, dpoc.SendUpdate)):
        return Event((leaf.idx,), EventKind.SEND, role, leaf.op.full(), leaf.to)
    if isinstance(leaf, dpoc.Recv):
        return Event((leaf.idx,), EventKind.RECV, role, leaf.op.full(), leaf.sender)
    if isinstance(leaf, dpoc.Assign):
        return Event((leaf.idx,), EventKind.ASSIGN, role)
    if isinstance(leaf, dpoc.If):
        return Event((leaf.idx,), EventKind.IF, role)
    if isinstance(leaf, dpoc.While):
        return Event((leaf.idx,), EventKind.WHILE, role)
    if isinstance(leaf, dpoc.ScopeCoord):
        return Event((leaf.idx,), EventKind.SCOPE_INIT, role)
    if isinstance(leaf, dpoc.ScopeSimple):
        return Event((leaf.idx,), EventKind.SCOPE_INIT, role, peer=leaf.lead)
    return None


def check_minimality(sys, *, logger: Optional[logging.Logger] = None) -> bool:
    """Every event of an enabled transition is minimal for the causality of ``sys.net``."""
    log = logger or logging.getLogger(__name__)
    order = leq(sys.net, logger=log)
    for t in system_transitions(sys, logger=log):
        for role, leaf in t.events:
            ev = leaf_event(role, leaf) if leaf is not None else None
            if ev is None:
                continue
            below = order.predecessors(ev)
            if below:
                log.warning("Enabled event %s is preceded by %s", ev, below[0])
                return False
    return True


__all__ = [
    "Causality",
    "Event",
    "EventKind",
    "WellAnnotationReport",
    "check_minimality",
    "check_wellannotated_dpoc",
    "conflicts",
    "events_of",
    "leaf_event",
    "leq",
    "matching",
]
