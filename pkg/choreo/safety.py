"""Deadlock, termination, race and orphan checks on explored networks."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx

from choreo import dioc, dpoc
from choreo.dpoc_engine import DpocSystem, change_updates, role_step, system_transitions
from choreo.explore import DEFAULT_MAX_STATES, Exploration, Scheduled, explore, scheduled
from choreo.labels import Label, RecvAct, RecvUpAct, SendAct, SendUpAct, Tick, describe


@dataclass
class SafetyVerdict:
    """``ok`` is None when the bounded exploration could not decide."""

    name: str
    ok: Optional[bool]
    trace: List[Label] = field(default_factory=list)
    detail: str = ""

    @property
    def status(self) -> str:
        if self.ok is None:
            return "inconclusive"
        return "pass" if self.ok else "FAIL"

    def describe(self) -> str:
        text = f"{self.name}: {self.status}"
        if self.ok is False:
            steps = " ; ".join(describe(lab) for lab in self.trace) or "(empty trace)"
            text += f" after [{steps}]"
        if self.detail:
            text += f" ({self.detail})"
        return text


def explore_network(
    sys: DpocSystem,
    fuel: int,
    schedule: Sequence[dioc.UpdateRepo] = (),
    *,
    max_states: int = DEFAULT_MAX_STATES,
    internal_only: bool = True,
    logger: Optional[logging.Logger] = None,
) -> Exploration:
    """Reachable states of ``sys``; by default repository changes are not followed."""
    log = logger or logging.getLogger(__name__)
    phases = (sys.repo,) + tuple(schedule)
    succ = scheduled(lambda s: system_transitions(s, logger=log), phases, change_updates)
    return explore(
        Scheduled(0, sys), succ, fuel=fuel, max_states=max_states, internal_only=internal_only, logger=log
    )


def _undecided(name: str, ex: Exploration) -> SafetyVerdict:
    return SafetyVerdict(name, None, detail=f"{len(ex.truncated)} state(s) left unexplored")


def check_deadlock_freedom(ex: Exploration) -> SafetyVerdict:
    """Every state that cannot move was reached by a termination step."""
    g = ex.graph
    if not ex.initial.sys.net.names():
        return SafetyVerdict("deadlock freedom", True, detail="empty network")
    for node in ex.dead_states():
        incoming = [data["label"] for _, _, data in g.in_edges(node, data=True)]
        if node == ex.initial or not all(isinstance(lab, Tick) for lab in incoming):
            return SafetyVerdict("deadlock freedom", False, ex.path_labels(node), "stuck without termination")
    if not ex.complete:
        return _undecided("deadlock freedom", ex)
    return SafetyVerdict("deadlock freedom", True)


def check_termination(ex: Exploration) -> SafetyVerdict:
    """Every maximal run is finite and ends with a termination step."""
    deadlock = check_deadlock_freedom(ex)
    if deadlock.ok is False:
        return SafetyVerdict("termination", False, deadlock.trace, deadlock.detail)
    if not ex.complete:
        return _undecided("termination", ex)
    if not nx.is_directed_acyclic_graph(ex.graph):
        return SafetyVerdict("termination", False, detail="some run can loop forever")
    return SafetyVerdict("termination", True)


def _races(sys: DpocSystem, log: logging.Logger) -> List[str]:
    sends: Counter = Counter()
    recvs: Counter = Counter()
    for role in sys.net.names():
        for m in role_step(role, sys, logger=log):
            lab = m.label
            if isinstance(lab, (SendAct, SendUpAct)):
                sends[(role, lab.op, lab.to)] += 1
            elif isinstance(lab, RecvAct):
                recvs[(lab.sender, lab.op, role)] += 1
            elif isinstance(lab, RecvUpAct):
                recvs[(lab.sender, lab.op, role)] += 1
    out = []
    for key in sorted(set(sends) & set(recvs), key=repr):
        if sends[key] > 1 or recvs[key] > 1:
            sender, op, receiver = key
            out.append(f"{op.full()} {sender}->{receiver}: {sends[key]} send(s), {recvs[key]} receive(s)")
    return out


def check_race_freedom(ex: Exploration, *, logger: Optional[logging.Logger] = None) -> SafetyVerdict:
    """No enabled receive can meet two enabled sends, nor a send two receives."""
    log = logger or logging.getLogger(__name__)
    for node in ex.graph.nodes:
        found = _races(node.sys, log)
        if found:
            return SafetyVerdict("race freedom", False, ex.path_labels(node), found[0])
    if not ex.complete:
        return _undecided("race freedom", ex)
    return SafetyVerdict("race freedom", True)


def _pending_sends(net: dpoc.Network) -> List[str]:
    return [role for role, st in net.items() if dpoc.contains_send(st.proc)]


def check_orphan_freedom(ex: Exploration, *, logger: Optional[logging.Logger] = None) -> SafetyVerdict:
    """No send survives termination, and no send is left enabled where nothing can move."""
    log = logger or logging.getLogger(__name__)
    g = ex.graph
    for u, v, data in g.edges(data=True):
        if isinstance(data["label"], Tick):
            roles = _pending_sends(v.sys.net)
            if roles:
                return SafetyVerdict("orphan freedom", False, ex.path_labels(v), f"sends left in {', '.join(roles)}")
    for node in ex.dead_states():
        for role in node.sys.net.names():
            moves = role_step(role, node.sys, logger=log)
            if any(isinstance(m.label, (SendAct, SendUpAct)) for m in moves):
                return SafetyVerdict(
                    "orphan freedom", False, ex.path_labels(node), f"{role} holds a send nobody receives"
                )
    if not ex.complete:
        return _undecided("orphan freedom", ex)
    return SafetyVerdict("orphan freedom", True)


@dataclass
class SafetyReport:
    verdicts: Dict[str, SafetyVerdict]
    exploration: Optional[Exploration] = None

    @property
    def states(self) -> int:
        return self.exploration.graph.number_of_nodes() if self.exploration is not None else 0

    @property
    def ok(self) -> bool:
        return all(v.ok is not False for v in self.verdicts.values())

    def lines(self) -> List[str]:
        return [v.describe() for v in self.verdicts.values()]


def check_all(
    sys: DpocSystem,
    fuel: int,
    schedule: Sequence[dioc.UpdateRepo] = (),
    *,
    max_states: int = DEFAULT_MAX_STATES,
    logger: Optional[logging.Logger] = None,
) -> SafetyReport:
    log = logger or logging.getLogger(__name__)
    ex = explore_network(sys, fuel, schedule, max_states=max_states, logger=log)
    verdicts: List[Tuple[str, SafetyVerdict]] = [
        ("deadlock", check_deadlock_freedom(ex)),
        ("termination", check_termination(ex)),
        ("race", check_race_freedom(ex, logger=log)),
        ("orphan", check_orphan_freedom(ex, logger=log)),
    ]
    for name, v in verdicts:
        if v.ok is False:
            log.warning("Property %s failed: %s", name, v.describe())
    return SafetyReport(dict(verdicts), ex)


__all__ = [
    "SafetyReport",
    "SafetyVerdict",
    "check_all",
    "check_deadlock_freedom",
    "check_orphan_freedom",
    "check_race_freedom",
    "check_termination",
    "explore_network",
]
