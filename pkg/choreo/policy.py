"""Single runs of a system under an update policy, and their JSON-lines traces.

A policy decides the nondeterminism the engines leave open: whether a scope
takes an update, which one, and when the environment swaps the update
repository. Whatever it leaves open is settled by a seeded random choice, so
a run is a function of (program, updates, policy, seed, fuel).
"""

from __future__ import annotations

import json
import logging
import random
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from choreo.explore import Scheduled, Successors, scheduled
from choreo.labels import ChangeUpdates, Label, NoUp, Tick, Transition, UpdateApplied, to_record


class PolicyKind(str, Enum):
    NONE = "none"
    FIRST = "first"
    SCRIPT = "script"
    EXHAUSTIVE = "exhaustive"


@dataclass(frozen=True)
class ScopeChoice:
    """At scope ``scope`` apply ``update``; None means take no update."""

    scope: int
    update: Optional[str]


@dataclass(frozen=True)
class PhaseChange:
    """Before step ``step`` switch to repository phase ``phase``."""

    step: int
    phase: int


@dataclass(frozen=True)
class Policy:
    kind: PolicyKind
    scopes: Tuple[ScopeChoice, ...] = ()
    changes: Tuple[PhaseChange, ...] = ()

    def choice_for(self, scope: Optional[int]) -> Optional[ScopeChoice]:
        for c in self.scopes:
            if c.scope == scope:
                return c
        return None

    def change_at(self, step: int) -> Optional[PhaseChange]:
        for c in self.changes:
            if c.step == step:
                return c
        return None

    def validate(self, update_names: Iterable[str], phases: int = 1) -> None:
        known = set(update_names)
        for c in self.scopes:
            if c.update is not None and c.update not in known:
                raise ValueError(f"policy names unknown update {c.update!r}")
        for ch in self.changes:
            if not 0 < ch.phase < phases:
                raise ValueError(f"policy switches to phase {ch.phase}, only {phases} phase(s) loaded")

    def __str__(self) -> str:
        if self.kind is not PolicyKind.SCRIPT:
            return self.kind.value
        parts = [f"scope{c.scope}={c.update or 'no-up'}" for c in self.scopes]
        parts += [f"step{c.step}=phase{c.phase}" for c in self.changes]
        return "script:" + ",".join(parts)


NO_UPDATE = Policy(PolicyKind.NONE)

_SCOPE_ENTRY = re.compile(r"^scope(\d+)=([A-Za-z_][A-Za-z0-9_$-]*)$")
_PHASE_ENTRY = re.compile(r"^step(\d+)=phase(\d+)$")


def parse_policy(text: str) -> Policy:
    """``none``, ``first``, ``exhaustive`` or ``script:ENTRY,...``.

    Script entries are ``scopeN=UPDATE``, ``scopeN=no-up`` and
    ``stepK=phaseP``; scopes the script does not mention take no update.
    """
    text = text.strip()
    if not text.startswith("script:"):
        try:
            kind = PolicyKind(text)
        except ValueError as exc:
            raise ValueError(f"unknown policy {text!r}") from exc
        if kind is PolicyKind.SCRIPT:
            raise ValueError("script policy needs entries: script:scopeN=UPDATE,...")
        return Policy(kind)
    scopes: List[ScopeChoice] = []
    changes: List[PhaseChange] = []
    for raw in text[len("script:"):].split(","):
        entry = raw.strip()
        if not entry:
            continue
        m = _SCOPE_ENTRY.match(entry)
        if m:
            scope = int(m.group(1))
            if any(c.scope == scope for c in scopes):
                raise ValueError(f"scope {scope} scripted twice")
            update = None if m.group(2) == "no-up" else m.group(2)
            scopes.append(ScopeChoice(scope, update))
            continue
        m = _PHASE_ENTRY.match(entry)
        if m:
            changes.append(PhaseChange(int(m.group(1)), int(m.group(2))))
            continue
        raise ValueError(f"malformed policy entry {entry!r}")
    return Policy(PolicyKind.SCRIPT, tuple(scopes), tuple(sorted(changes, key=lambda c: c.step)))


# -------------------
# Candidate filtering
# -------------------


def _is_decision(t: Transition) -> bool:
    return isinstance(t.label, (NoUp, UpdateApplied))


def _first_updates(moves: List[Transition]) -> List[Transition]:
    chosen: Dict[Optional[int], Transition] = {}
    for t in moves:
        if isinstance(t.label, UpdateApplied) and t.scope not in chosen:
            chosen[t.scope] = t
    out = []
    for t in moves:
        if not _is_decision(t) or t.scope not in chosen:
            out.append(t)
        elif t is chosen[t.scope]:
            out.append(t)
    return out


def _scripted(moves: List[Transition], policy: Policy, log: logging.Logger) -> List[Transition]:
    out = []
    for t in moves:
        if not _is_decision(t):
            out.append(t)
            continue
        choice = policy.choice_for(t.scope)
        wanted = choice.update if choice is not None else None
        if isinstance(t.label, UpdateApplied) and t.label.name == wanted:
            out.append(t)
        elif isinstance(t.label, NoUp):
            applicable = any(
                isinstance(o.label, UpdateApplied) and o.scope == t.scope and o.label.name == wanted for o in moves
            )
            if wanted is not None and not applicable:
                log.warning("Update %s does not apply at scope %s; taking no update", wanted, t.scope)
            if not applicable:
                out.append(t)
    return out


def candidates(
    moves: List[Transition], policy: Policy, step: int, *, logger: Optional[logging.Logger] = None
) -> List[Transition]:
    """Transitions the policy allows at ``step``; a scripted repository change preempts everything else."""
    log = logger or logging.getLogger(__name__)
    change = policy.change_at(step)
    if change is not None:
        forced = [t for t in moves if isinstance(t.label, ChangeUpdates) and t.label.phase == change.phase]
        if forced:
            return forced
        log.warning("Cannot switch to phase %d at step %d", change.phase, step)
    if policy.kind is not PolicyKind.EXHAUSTIVE:
        moves = [t for t in moves if not isinstance(t.label, ChangeUpdates)]
    if policy.kind is PolicyKind.NONE:
        return [t for t in moves if not isinstance(t.label, UpdateApplied)]
    if policy.kind is PolicyKind.FIRST:
        return _first_updates(moves)
    if policy.kind is PolicyKind.SCRIPT:
        return _scripted(moves, policy, log)
    return moves


# -------------------
# Runs
# -------------------


class RunStatus(Enum):
    TERMINATED = 0
    OUT_OF_FUEL = 3
    STUCK = 4


@dataclass
class RunResult:
    status: RunStatus
    trace: List[Label] = field(default_factory=list)
    final: Any = None

    @property
    def exit_code(self) -> int:
        return self.status.value


def run(
    initial: Any,
    successors: Callable[[Any], List[Transition]],
    with_repo: Callable[[Any, Any], Any],
    policy: Policy,
    *,
    phases: Sequence[Any] = (),
    seed: int = 0,
    fuel: int = 200,
    logger: Optional[logging.Logger] = None,
) -> RunResult:
    """Execute one run of at most ``fuel`` steps; ``phases`` lists the repositories after the initial one."""
    log = logger or logging.getLogger(__name__)
    if fuel < 0:
        raise ValueError("fuel must not be negative")
    rng = random.Random(seed)
    succ: Successors = scheduled(successors, (initial.repo,) + tuple(phases), with_repo)
    state = Scheduled(0, initial)
    trace: List[Label] = []
    for step in range(fuel):
        moves = candidates(succ(state), policy, step, logger=log)
        if not moves:
            log.info("Run stuck after %d step(s)", step)
            return RunResult(RunStatus.STUCK, trace, state.sys)
        t = moves[rng.randrange(len(moves))]
        trace.append(t.label)
        state = t.target
        if isinstance(t.label, Tick):
            return RunResult(RunStatus.TERMINATED, trace, state.sys)
    log.warning("Run used all %d step(s) of fuel", fuel)
    return RunResult(RunStatus.OUT_OF_FUEL, trace, state.sys)


def trace_records(trace: Sequence[Label], *, payload_text: Optional[Callable[[Any], str]] = None) -> List[Dict[str, Any]]:
    return [to_record(lab, i, payload_text=payload_text) for i, lab in enumerate(trace)]


def write_trace(
    trace: Sequence[Label], out: IO[str], *, payload_text: Optional[Callable[[Any], str]] = None
) -> None:
    for rec in trace_records(trace, payload_text=payload_text):
        out.write(json.dumps(rec, sort_keys=True) + "\n")


__all__ = [
    "NO_UPDATE",
    "PhaseChange",
    "Policy",
    "PolicyKind",
    "RunResult",
    "RunStatus",
    "ScopeChoice",
    "candidates",
    "parse_policy",
    "run",
    "trace_records",
    "write_trace",
]
