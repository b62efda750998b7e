"""Bounded equivalence between a choreography and a network.

Both systems are explored into graphs (with the same repository schedule),
then the largest weak bisimulation contained in the pairs reachable by
matching moves is computed by refinement. Pairs whose silent closure reaches
an unexplored state are never refuted, which makes a surviving initial pair
inconclusive rather than equivalent when exploration was truncated.
"""

from __future__ import annotations

import collections
import enum
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, FrozenSet, Hashable, List, Optional, Sequence, Set, Tuple

import networkx as nx

from choreo import dioc
from choreo.dioc_engine import DiocSystem
from choreo.dioc_engine import change_updates as dioc_change
from choreo.dioc_engine import transitions as dioc_transitions
from choreo.dioc_engine import weak_traces_dioc
from choreo.dpoc_engine import DpocSystem
from choreo.dpoc_engine import change_updates as dpoc_change
from choreo.dpoc_engine import system_transitions, weak_traces_dpoc
from choreo.explore import DEFAULT_MAX_STATES, Exploration, Scheduled, explore, scheduled
from choreo.labels import Label, Transition, describe, is_silent
from choreo.projection import project
from choreo.upd import difference, upd

DEFAULT_MAX_PAIRS = 2_000_000


class Outcome(str, enum.Enum):
    EQUIVALENT = "equivalent"
    COUNTEREXAMPLE = "counterexample"
    INCONCLUSIVE = "inconclusive"


@dataclass
class Verdict:
    outcome: Outcome
    trace: List[Label] = field(default_factory=list)
    reason: str = ""
    states: Tuple[int, int] = (0, 0)

    @property
    def ok(self) -> bool:
        return self.outcome is Outcome.EQUIVALENT

    def describe(self) -> str:
        if self.outcome is Outcome.COUNTEREXAMPLE:
            steps = " ; ".join(describe(lab) for lab in self.trace) or "(empty)"
            return f"counterexample after [{steps}]: {self.reason}"
        if self.outcome is Outcome.INCONCLUSIVE:
            return f"inconclusive: {self.reason}"
        return f"equivalent ({self.states[0]} choreography states, {self.states[1]} network states)"


class _WeakMoves:
    """Weak successors in an explored graph, cached per node and label."""

    def __init__(self, ex: Exploration):
        self.ex = ex
        self.silent = ex.silent_graph()
        self._closure: Dict[Hashable, FrozenSet[Hashable]] = {}
        self._after: Dict[Tuple[Hashable, Label], FrozenSet[Hashable]] = {}
        self._touches: Dict[Hashable, bool] = {}

    def closure(self, node: Hashable) -> FrozenSet[Hashable]:
        if node not in self._closure:
            self._closure[node] = frozenset(nx.descendants(self.silent, node) | {node})
        return self._closure[node]

    def after(self, node: Hashable, label: Label) -> FrozenSet[Hashable]:
        """States reachable by silent steps, ``label``, then silent steps."""
        if is_silent(label):
            return self.closure(node)
        key = (node, label)
        if key not in self._after:
            out: Set[Hashable] = set()
            for n in self.closure(node):
                for lab, target in self.ex.moves(n):
                    if lab == label:
                        out |= self.closure(target)
            self._after[key] = frozenset(out)
        return self._after[key]

    def unsure(self, node: Hashable) -> bool:
        if node not in self._touches:
            self._touches[node] = any(n in self.ex.truncated for n in self.closure(node))
        return self._touches[node]


def _unmatched(
    left: _WeakMoves, right: _WeakMoves, a: Hashable, b: Hashable, rel: Set[Tuple[Hashable, Hashable]], flip: bool
) -> Optional[Label]:
    for lab, a2 in left.ex.moves(a):
        partners = right.after(b, lab)
        if not any(((a2, b2) if not flip else (b2, a2)) in rel for b2 in partners):
            return lab
    return None


def _bisimulation(
    d: Exploration, p: Exploration, *, max_pairs: int, log: logging.Logger
) -> Verdict:
    wd, wp = _WeakMoves(d), _WeakMoves(p)
    start = (d.initial, p.initial)
    parent: Dict[Tuple[Hashable, Hashable], Tuple[Optional[Tuple[Hashable, Hashable]], Optional[Label]]] = {
        start: (None, None)
    }
    queue = collections.deque([start])
    while queue:
        a, b = queue.popleft()
        succ: List[Tuple[Label, Tuple[Hashable, Hashable]]] = []
        for lab, a2 in d.moves(a):
            succ.extend((lab, (a2, b2)) for b2 in wp.after(b, lab))
        for lab, b2 in p.moves(b):
            succ.extend((lab, (a2, b2)) for a2 in wd.after(a, lab))
        for lab, pair in succ:
            if pair not in parent:
                parent[pair] = ((a, b), lab)
                queue.append(pair)
        if len(parent) > max_pairs:
            return Verdict(Outcome.INCONCLUSIVE, reason=f"more than {max_pairs} state pairs")
    log.debug("Bisimulation candidates: %d pairs", len(parent))

    rel = set(parent)
    first_round: Dict[Tuple[Hashable, Hashable], Label] = {}
    round_no = 0
    while True:
        round_no += 1
        removed: Dict[Tuple[Hashable, Hashable], Label] = {}
        for a, b in rel:
            if a in d.truncated or b in p.truncated or wd.unsure(a) or wp.unsure(b):
                continue
            lab = _unmatched(wd, wp, a, b, rel, flip=False) or _unmatched(wp, wd, b, a, rel, flip=True)
            if lab is not None:
                removed[(a, b)] = lab
        if not removed:
            break
        if round_no == 1:
            first_round = dict(removed)
        rel -= set(removed)

    states = (d.graph.number_of_nodes(), p.graph.number_of_nodes())
    if start not in rel:
        return _counterexample(parent, first_round, states)
    if d.truncated or p.truncated:
        return Verdict(Outcome.INCONCLUSIVE, reason="exploration bound reached", states=states)
    return Verdict(Outcome.EQUIVALENT, states=states)


def _path(parent, pair) -> List[Label]:
    labels: List[Label] = []
    while True:
        prev, lab = parent[pair]
        if prev is None:
            break
        if lab is not None:
            labels.append(lab)
        pair = prev
    labels.reverse()
    return [lab for lab in labels if not is_silent(lab)]


def _counterexample(parent, first_round, states) -> Verdict:
    if not first_round:
        return Verdict(Outcome.COUNTEREXAMPLE, reason="initial states are not related", states=states)
    # shortest witness: fewest recorded steps from the initial pair
    depth: Dict[Tuple[Hashable, Hashable], int] = {}

    def steps(pair) -> int:
        n, cur = 0, pair
        while parent[cur][0] is not None:
            n += 1
            cur = parent[cur][0]
        return n

    for pair in first_round:
        depth[pair] = steps(pair)
    pair = min(first_round, key=lambda q: (depth[q], repr(first_round[q])))
    lab = first_round[pair]
    trace = _path(parent, pair)
    return Verdict(
        Outcome.COUNTEREXAMPLE,
        trace=trace,
        reason=f"'{describe(lab)}' cannot be matched by the other side",
        states=states,
    )


def _successors(dsys: DiocSystem, psys: DpocSystem, schedule: Sequence[dioc.UpdateRepo], log: logging.Logger):
    d_succ = scheduled(lambda s: dioc_transitions(s, logger=log), (dsys.repo,) + tuple(schedule), dioc_change)
    p_succ = scheduled(lambda s: system_transitions(s, logger=log), (psys.repo,) + tuple(schedule), dpoc_change)
    return d_succ, p_succ


def equiv_check(
    dsys: DiocSystem,
    psys: DpocSystem,
    fuel: int,
    schedule: Sequence[dioc.UpdateRepo] = (),
    *,
    mode: str = "bisim",
    max_states: int = DEFAULT_MAX_STATES,
    max_pairs: int = DEFAULT_MAX_PAIRS,
    logger: Optional[logging.Logger] = None,
) -> Verdict:
    """Compare a choreography system with a network under the same repository schedule.

    ``mode`` is ``"bisim"`` (weak bisimulation) or ``"traces"`` (weak trace
    sets of paths of at most ``fuel`` steps).
    """
    log = logger or logging.getLogger(__name__)
    if mode not in ("bisim", "traces"):
        raise ValueError(f"unknown equivalence mode: {mode!r}")
    if mode == "traces":
        return _trace_check(dsys, psys, fuel, schedule, log)
    d_succ, p_succ = _successors(dsys, psys, schedule, log)
    d = explore(Scheduled(0, dsys), d_succ, fuel=fuel, max_states=max_states, logger=log)
    p = explore(Scheduled(0, psys), p_succ, fuel=fuel, max_states=max_states, logger=log)
    verdict = _bisimulation(d, p, max_pairs=max_pairs, log=log)
    if verdict.outcome is Outcome.INCONCLUSIVE:
        log.warning("Equivalence check inconclusive: %s", verdict.reason)
    return verdict


def _trace_check(
    dsys: DiocSystem, psys: DpocSystem, fuel: int, schedule: Sequence[dioc.UpdateRepo], log: logging.Logger
) -> Verdict:
    d_traces, d_cut = weak_traces_dioc(dsys, fuel, schedule, logger=log)
    # A network needs several steps per choreography step.
    p_traces, p_cut = weak_traces_dpoc(psys, fuel * 4, schedule, logger=log)
    p_only = sorted((t for t in p_traces - d_traces), key=len)
    d_only = sorted((t for t in d_traces - p_traces), key=len)
    if p_only and not d_cut:
        return Verdict(Outcome.COUNTEREXAMPLE, trace=list(p_only[0]), reason="trace of the network only")
    if d_only and not p_cut:
        return Verdict(Outcome.COUNTEREXAMPLE, trace=list(d_only[0]), reason="trace of the choreography only")
    if d_cut or p_cut:
        return Verdict(Outcome.INCONCLUSIVE, reason="trace enumeration ran out of fuel")
    return Verdict(Outcome.EQUIVALENT, states=(len(d_traces), len(p_traces)))


# -------------------
# Projection commutes with steps up to upd
# -------------------


@dataclass
class CommutationFailure:
    dioc: DiocSystem
    label: Label
    direction: str
    detail: str


def _silent_reach(start: Any, successors: Callable[[Any], List[Transition]], limit: int) -> List[Any]:
    seen = {start}
    out = [start]
    queue = collections.deque([start])
    while queue and len(seen) < limit:
        node = queue.popleft()
        for t in successors(node):
            if is_silent(t.label) and t.target not in seen:
                seen.add(t.target)
                out.append(t.target)
                queue.append(t.target)
    return out


def _weak_after(start: Any, label: Label, successors: Callable[[Any], List[Transition]], limit: int) -> List[Any]:
    if is_silent(label):
        return _silent_reach(start, successors, limit)
    out: List[Any] = []
    for node in _silent_reach(start, successors, limit):
        for t in successors(node):
            if t.label == label:
                out.extend(_silent_reach(t.target, successors, limit))
    return out


def _network_of(d: DiocSystem, roles: Sequence[str], log: logging.Logger) -> DpocSystem:
    net = project(d.proc, d.sigma, roles, logger=log)
    return DpocSystem(d.repo, net, d.fresh, d.fns)


def check_commutation(
    dsys: DiocSystem,
    *,
    max_states: int = 60,
    search_limit: int = 400,
    logger: Optional[logging.Logger] = None,
) -> List[CommutationFailure]:
    """Relate every reachable choreography state with the projection of it.

    For a state ``I`` and ``N = project(I)``: each choreography step
    ``I -l-> I'`` must be matched by network moves ``N => N'`` with
    ``upd(N')`` equal to ``project(I')``; each network step ``N -l-> N'`` must
    be matched by choreography moves ``I => I'`` with ``upd(N')`` equal to
    ``project(I')``. Local states are compared without auxiliary variables.
    """
    log = logger or logging.getLogger(__name__)
    roles = sorted(dioc.roles(dsys.proc) | set(dsys.sigma.keys()))
    d_succ = lambda s: dioc_transitions(s, logger=log)  # noqa: E731
    p_succ = lambda s: system_transitions(s, logger=log)  # noqa: E731
    failures: List[CommutationFailure] = []
    seen = {dsys}
    queue = collections.deque([dsys])
    while queue and len(seen) <= max_states:
        d = queue.popleft()
        n = _network_of(d, roles, log)
        for t in d_succ(d):
            target = _network_of(t.target, roles, log).net
            found = any(
                difference(upd(m.net, d.fns), target) is None
                for m in _weak_after(n, t.label, p_succ, search_limit)
            )
            if not found:
                failures.append(CommutationFailure(d, t.label, "choreography step", "no network match"))
            if t.target not in seen:
                seen.add(t.target)
                queue.append(t.target)
        for t in p_succ(n):
            candidates = _weak_after(d, t.label, d_succ, search_limit)
            images = [_network_of(c, roles, log).net for c in candidates]
            normal = upd(t.target.net, d.fns)
            if not any(difference(normal, img) is None for img in images):
                failures.append(CommutationFailure(d, t.label, "network step", "no choreography match"))
    if failures:
        log.warning("%d commutation failure(s)", len(failures))
    return failures


__all__ = [
    "CommutationFailure",
    "Outcome",
    "Verdict",
    "check_commutation",
    "equiv_check",
]
