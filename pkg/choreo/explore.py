"""Bounded exploration of transition systems into networkx graphs.

Engines expose a ``successors(state) -> List[Transition]`` function; this
module turns it into an explicit labelled multigraph, enumerates weak traces
and wraps a system with a scripted sequence of update repositories.
"""

from __future__ import annotations

import collections
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, FrozenSet, Hashable, List, Optional, Sequence, Set, Tuple

import networkx as nx

from choreo.labels import ChangeUpdates, Label, Transition, is_internal, is_silent

Successors = Callable[[Any], List[Transition]]

DEFAULT_MAX_STATES = 200_000


@dataclass(frozen=True)
class Scheduled:
    """A system paired with the position in its repository schedule."""

    phase: int
    sys: Any


def scheduled(successors: Successors, phases: Sequence[Any], with_repo: Callable[[Any, Any], Any]) -> Successors:
    """Lift ``successors`` to :class:`Scheduled` states.

    The environment may move to the next phase at any point; that step is
    labelled ``ChangeUpdates(k)``.
    """

    def succ(state: Scheduled) -> List[Transition]:
        out = [
            Transition(t.label, Scheduled(state.phase, t.target), t.scope, t.events)
            for t in successors(state.sys)
        ]
        nxt = state.phase + 1
        if nxt < len(phases):
            out.append(Transition(ChangeUpdates(nxt), Scheduled(nxt, with_repo(state.sys, phases[nxt]))))
        return out

    return succ


@dataclass
class Exploration:
    graph: nx.MultiDiGraph
    initial: Hashable
    truncated: Set[Hashable] = field(default_factory=set)

    @property
    def complete(self) -> bool:
        return not self.truncated

    def moves(self, node: Hashable) -> List[Tuple[Label, Hashable]]:
        return [(data["label"], v) for _, v, data in self.graph.out_edges(node, data=True)]

    def dead_states(self) -> List[Hashable]:
        return [n for n in self.graph.nodes if self.graph.out_degree(n) == 0 and n not in self.truncated]

    def path_labels(self, target: Hashable) -> List[Label]:
        """Labels along a shortest path from the initial state to ``target``."""
        nodes = nx.shortest_path(self.graph, self.initial, target)
        labels: List[Label] = []
        for u, v in zip(nodes, nodes[1:]):
            edges = self.graph.get_edge_data(u, v)
            labels.append(edges[min(edges)]["label"])
        return labels

    def closure_touches_truncation(self, node: Hashable, silent: nx.DiGraph) -> bool:
        if node in self.truncated:
            return True
        if node not in silent:
            return False
        return any(n in self.truncated for n in nx.descendants(silent, node))

    def silent_graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.graph.nodes)
        g.add_edges_from((u, v) for u, v, data in self.graph.edges(data=True) if is_silent(data["label"]))
        return g


def explore(
    initial: Hashable,
    successors: Successors,
    *,
    fuel: Optional[int] = None,
    max_states: int = DEFAULT_MAX_STATES,
    internal_only: bool = False,
    logger: Optional[logging.Logger] = None,
) -> Exploration:
    """Breadth-first exploration up to depth ``fuel`` and at most ``max_states`` states.

    States left unexpanded because of either bound are recorded as truncated.
    With ``internal_only`` repository changes are not followed.
    """
    log = logger or logging.getLogger(__name__)
    graph = nx.MultiDiGraph()
    graph.add_node(initial, depth=0)
    result = Exploration(graph, initial)
    queue = collections.deque([initial])
    while queue:
        state = queue.popleft()
        depth = graph.nodes[state]["depth"]
        if fuel is not None and depth >= fuel:
            outgoing = [t for t in successors(state) if not internal_only or is_internal(t.label)]
            if outgoing:
                result.truncated.add(state)
            continue
        if graph.number_of_nodes() >= max_states:
            result.truncated.add(state)
            continue
        for t in successors(state):
            if internal_only and not is_internal(t.label):
                continue
            if t.target not in graph:
                graph.add_node(t.target, depth=depth + 1)
                queue.append(t.target)
            graph.add_edge(state, t.target, label=t.label, scope=t.scope, events=t.events)
    if result.truncated:
        log.warning(
            "Exploration truncated at %d state(s) (fuel=%s, max_states=%d)", len(result.truncated), fuel, max_states
        )
    log.debug("Explored %d states, %d transitions", graph.number_of_nodes(), graph.number_of_edges())
    return result


def weak_traces(
    initial: Hashable,
    successors: Successors,
    fuel: int,
    *,
    logger: Optional[logging.Logger] = None,
) -> Tuple[FrozenSet[Tuple[Label, ...]], bool]:
    """Prefix-closed set of weak traces over paths of at most ``fuel`` steps.

    The flag reports whether some path still had moves of its own when its
    fuel ran out; a pending repository change alone does not count.
    """
    log = logger or logging.getLogger(__name__)
    memo: Dict[Tuple[Hashable, int], FrozenSet[Tuple[Label, ...]]] = {}
    cache: Dict[Hashable, List[Transition]] = {}
    truncated = False

    def succ(state: Hashable) -> List[Transition]:
        if state not in cache:
            cache[state] = successors(state)
        return cache[state]

    # Post-order over (state, remaining fuel) pairs.
    stack: List[Tuple[Hashable, int, bool]] = [(initial, fuel, False)]
    while stack:
        state, k, expanded = stack.pop()
        key = (state, k)
        if key in memo:
            continue
        moves = succ(state)
        if k == 0 or not moves:
            if k == 0 and any(is_internal(t.label) for t in moves):
                truncated = True
            memo[key] = frozenset({()})
            continue
        if not expanded:
            stack.append((state, k, True))
            for t in moves:
                if (t.target, k - 1) not in memo:
                    stack.append((t.target, k - 1, False))
            continue
        traces: Set[Tuple[Label, ...]] = {()}
        for t in moves:
            tails = memo[(t.target, k - 1)]
            if is_silent(t.label):
                traces.update(tails)
            else:
                traces.update((t.label,) + tail for tail in tails)
        memo[key] = frozenset(traces)
    if truncated:
        log.warning("Weak trace enumeration ran out of fuel after %d steps", fuel)
    return memo[(initial, fuel)], truncated


__all__ = [
    "DEFAULT_MAX_STATES",
    "Exploration",
    "Scheduled",
    "Successors",
    "explore",
    "scheduled",
    "weak_traces",
]
