"""Labelled transition system of choreography-level systems.

A system is the global state, the current update repository, the running
program and the counter used to renumber inserted update bodies. Every
transition produces a new immutable system value.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

from choreo import dioc
from choreo.explore import Scheduled, scheduled, weak_traces
from choreo.labels import NO_UP, TAU, TICK, Comm, Label, Tick, Transition, UpdateApplied
from choreo.values import (
    EMPTY_ENV,
    EMPTY_GLOBAL,
    FunctionEnv,
    GlobalState,
    Lit,
    assign,
    eval_expr,
    guard_holds,
    local_view,
)


@dataclass(frozen=True)
class DiocSystem:
    sigma: GlobalState
    repo: dioc.UpdateRepo
    proc: dioc.DiocProc
    fresh: int
    fns: FunctionEnv = field(default=EMPTY_ENV, compare=False)


def initial_system(
    proc: dioc.DiocProc,
    sigma: GlobalState = EMPTY_GLOBAL,
    repo: dioc.UpdateRepo = dioc.EMPTY_REPO,
    *,
    fns: FunctionEnv = EMPTY_ENV,
    repos: Sequence[dioc.UpdateRepo] = (),
) -> DiocSystem:
    """System whose fresh counter starts above every index of ``proc`` and the repositories."""
    fresh = dioc.initial_fresh(proc, tuple(repos) + (repo,))
    return DiocSystem(sigma, repo, proc, fresh, fns)


@dataclass(frozen=True)
class _Move:
    label: Label
    proc: dioc.DiocProc
    sigma: GlobalState
    fresh: int
    scope: Optional[int] = None


def _moves(p: dioc.DiocProc, sys: DiocSystem, log: logging.Logger) -> List[_Move]:
    sigma, fresh = sys.sigma, sys.fresh
    if isinstance(p, dioc.Skip):
        return [_Move(TICK, dioc.END, sigma, fresh)]
    if isinstance(p, dioc.End):
        return []
    if isinstance(p, dioc.Interaction):
        v = eval_expr(p.expr, local_view(sigma, p.sender), sys.fns)
        label = Comm(p.op, p.sender, v, p.receiver, p.var)
        return [_Move(label, dioc.Assign(p.idx, p.var, p.receiver, Lit(v)), sigma, fresh)]
    if isinstance(p, dioc.Assign):
        v = eval_expr(p.expr, local_view(sigma, p.role), sys.fns)
        return [_Move(TAU, dioc.SKIP, assign(sigma, p.role, p.var, v), fresh)]
    if isinstance(p, dioc.Seq):
        out: List[_Move] = []
        left = _moves(p.left, sys, log)
        for m in left:
            if not isinstance(m.label, Tick):
                out.append(replace(m, proc=dioc.Seq(m.proc, p.right)))
        if any(isinstance(m.label, Tick) for m in left):
            out.extend(_moves(p.right, sys, log))
        return out
    if isinstance(p, dioc.Par):
        left = _moves(p.left, sys, log)
        right = _moves(p.right, sys, log)
        out = [replace(m, proc=dioc.Par(m.proc, p.right)) for m in left if not isinstance(m.label, Tick)]
        out += [replace(m, proc=dioc.Par(p.left, m.proc)) for m in right if not isinstance(m.label, Tick)]
        ticks_l = [m for m in left if isinstance(m.label, Tick)]
        ticks_r = [m for m in right if isinstance(m.label, Tick)]
        for a in ticks_l:
            for b in ticks_r:
                out.append(_Move(TICK, dioc.Par(a.proc, b.proc), sigma, fresh))
        return out
    if isinstance(p, dioc.If):
        local = local_view(sigma, p.role)
        taken = guard_holds(p.guard, local, sys.fns, where=f"if[{p.idx}]@{p.role}", logger=log)
        return [_Move(TAU, p.then if taken else p.else_, sigma, fresh)]
    if isinstance(p, dioc.While):
        local = local_view(sigma, p.role)
        if guard_holds(p.guard, local, sys.fns, where=f"while[{p.idx}]@{p.role}", logger=log):
            return [_Move(TAU, dioc.Seq(p.body, p), sigma, fresh)]
        return [_Move(TAU, dioc.SKIP, sigma, fresh)]
    if isinstance(p, dioc.Scope):
        out = [_Move(NO_UP, p.body, sigma, fresh, scope=p.idx)]
        body_roles = dioc.roles(p.body)
        for entry in sys.repo:
            if not entry.applies_to(body_roles, p.name):
                continue
            inserted = dioc.reindex(entry.body, fresh)
            label = UpdateApplied(entry.name, entry.digest)
            out.append(_Move(label, inserted, sigma, fresh + dioc.max_index(entry.body), scope=p.idx))
        return out
    raise TypeError(f"not a choreography term: {p!r}")


def transitions(sys: DiocSystem, *, logger: Optional[logging.Logger] = None) -> List[Transition]:
    """All successors by the choreography rules, repository changes excluded."""
    log = logger or logging.getLogger(__name__)
    return [
        Transition(m.label, DiocSystem(m.sigma, sys.repo, m.proc, m.fresh, sys.fns), scope=m.scope)
        for m in _moves(sys.proc, sys, log)
    ]


def enabled_dioc(sys: DiocSystem, *, logger: Optional[logging.Logger] = None) -> List[Tuple[Label, DiocSystem]]:
    return [(t.label, t.target) for t in transitions(sys, logger=logger)]


def step_dioc(
    sys: DiocSystem, choice: int, *, logger: Optional[logging.Logger] = None
) -> Tuple[Label, DiocSystem]:
    options = enabled_dioc(sys, logger=logger)
    if not 0 <= choice < len(options):
        raise ValueError(f"choice {choice} out of range: {len(options)} transition(s) enabled")
    return options[choice]


def change_updates(sys: DiocSystem, repo: dioc.UpdateRepo) -> DiocSystem:
    return replace(sys, repo=repo)


def weak_traces_dioc(
    sys: DiocSystem,
    fuel: int,
    schedule: Sequence[dioc.UpdateRepo] = (),
    *,
    logger: Optional[logging.Logger] = None,
) -> Tuple[frozenset, bool]:
    """Weak traces of at most ``fuel`` steps and whether any branch ran out of fuel.

    ``schedule`` lists the repositories the environment may switch to, in
    order; the system starts with its own repository.
    """
    log = logger or logging.getLogger(__name__)
    phases = (sys.repo,) + tuple(schedule)
    succ = scheduled(lambda s: transitions(s, logger=log), phases, change_updates)
    return weak_traces(Scheduled(0, sys), succ, fuel, logger=log)


__all__ = [
    "DiocSystem",
    "change_updates",
    "enabled_dioc",
    "initial_system",
    "step_dioc",
    "transitions",
    "weak_traces_dioc",
]
