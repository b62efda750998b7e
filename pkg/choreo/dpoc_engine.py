"""Labelled transition system of role processes and networks.

Roles move on their own (``role_step``); the network combines those moves:
local steps are lifted, matching sends and receives synchronise into
interactions, and termination happens only when every role can terminate.
Receives are early style: a role-level receive is a function of the value
that the synchronising send provides.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

from choreo import dioc, dpoc
from choreo.dpoc import AUX_SINK, AuxKind, DpocIndex, Network, OpName, RoleState
from choreo.explore import Scheduled, scheduled, weak_traces
from choreo.labels import (
    NO_UP,
    TAU,
    TICK,
    Comm,
    CommUp,
    Label,
    NoUp,
    RecvAct,
    RecvUpAct,
    RoleLabel,
    SendAct,
    SendUpAct,
    Tau,
    Tick,
    Transition,
    UpdateApplied,
)
from choreo.projection import pi
from choreo.values import EMPTY_ENV, OK, FunctionEnv, Lit, LocalState, eval_expr, guard_holds


@dataclass(frozen=True)
class DpocSystem:
    repo: dioc.UpdateRepo
    net: Network
    fresh: int
    fns: FunctionEnv = field(default=EMPTY_ENV, compare=False)


def initial_system(
    net: Network,
    repo: dioc.UpdateRepo = dioc.EMPTY_REPO,
    *,
    fresh: Optional[int] = None,
    fns: FunctionEnv = EMPTY_ENV,
    repos: Sequence[dioc.UpdateRepo] = (),
) -> DpocSystem:
    if fresh is None:
        indexes = [gid[-1].base for _, _, gid in dpoc.network_global_indexes(net)]
        fresh = max(indexes + [r.max_index() for r in tuple(repos) + (repo,)], default=0)
    return DpocSystem(repo, net, fresh, fns)


Builder = Callable[[object], dpoc.DpocProc]


def _const(p: dpoc.DpocProc) -> Builder:
    return lambda _received: p


@dataclass(frozen=True)
class RoleMove:
    """One role-level step; receives leave their residue open in the received value."""

    label: RoleLabel
    build: Builder
    local: LocalState
    fresh: int
    scope: Optional[int] = None
    leaf: Optional[dpoc.DpocProc] = field(default=None, compare=False)

    def residue(self, received: object = None) -> dpoc.DpocProc:
        return self.build(received)


def _then(m: RoleMove, wrap: Callable[[dpoc.DpocProc], dpoc.DpocProc]) -> RoleMove:
    build = m.build
    return replace(m, build=lambda x: wrap(build(x)))


def _tick_residue(p: dpoc.DpocProc) -> dpoc.DpocProc:
    if isinstance(p, dpoc.Skip):
        return dpoc.END
    if isinstance(p, dpoc.Seq):
        return _tick_residue(p.right)
    if isinstance(p, dpoc.Par):
        return dpoc.Par(_tick_residue(p.left), _tick_residue(p.right))
    raise ValueError(f"process cannot terminate: {p!r}")


def _scope_end(i: int) -> Tuple[OpName, OpName]:
    return OpName.auxiliary(AuxKind.SB, i), OpName.auxiliary(AuxKind.SE, i)


def _role_moves(
    role: str,
    p: dpoc.DpocProc,
    local: LocalState,
    repo: dioc.UpdateRepo,
    fresh: int,
    fns: FunctionEnv,
    log: logging.Logger,
) -> List[RoleMove]:
    if isinstance(p, dpoc.Skip):
        return [RoleMove(TICK, _const(dpoc.END), local, fresh)]
    if isinstance(p, dpoc.End):
        return []
    if isinstance(p, dpoc.Assign):
        v = eval_expr(p.expr, local, fns)
        return [RoleMove(TAU, _const(dpoc.SKIP), local.set(p.var, v), fresh, leaf=p)]
    if isinstance(p, dpoc.Send):
        v = eval_expr(p.expr, local, fns)
        return [RoleMove(SendAct(p.op, v, p.to), _const(dpoc.SKIP), local, fresh, leaf=p)]
    if isinstance(p, dpoc.Recv):
        idx, var = p.idx, p.var
        return [RoleMove(RecvAct(p.op, var, p.sender), lambda v: dpoc.Assign(idx, var, Lit(v)), local, fresh, leaf=p)]
    if isinstance(p, dpoc.SendUpdate):
        return [RoleMove(SendUpAct(p.op, p.payload, p.to), _const(dpoc.SKIP), local, fresh, leaf=p)]
    if isinstance(p, dpoc.Seq):
        left = _role_moves(role, p.left, local, repo, fresh, fns, log)
        right_q = p.right
        out = [_then(m, lambda r: dpoc.Seq(r, right_q)) for m in left if not isinstance(m.label, Tick)]
        if any(isinstance(m.label, Tick) for m in left):
            out.extend(_role_moves(role, p.right, local, repo, fresh, fns, log))
        return out
    if isinstance(p, dpoc.Par):
        left = _role_moves(role, p.left, local, repo, fresh, fns, log)
        right = _role_moves(role, p.right, local, repo, fresh, fns, log)
        lp, rp = p.left, p.right
        out = [_then(m, lambda r: dpoc.Par(r, rp)) for m in left if not isinstance(m.label, Tick)]
        out += [_then(m, lambda r: dpoc.Par(lp, r)) for m in right if not isinstance(m.label, Tick)]
        if any(isinstance(m.label, Tick) for m in left) and any(isinstance(m.label, Tick) for m in right):
            out.append(RoleMove(TICK, _const(_tick_residue(p)), local, fresh))
        return out
    if isinstance(p, dpoc.If):
        taken = guard_holds(p.guard, local, fns, where=f"if[{p.idx}]@{role}", logger=log)
        return [RoleMove(TAU, _const(p.then if taken else p.else_), local, fresh, leaf=p)]
    if isinstance(p, dpoc.While):
        if guard_holds(p.guard, local, fns, where=f"while[{p.idx}]@{role}", logger=log):
            return [RoleMove(TAU, _const(dpoc.Seq(p.body, p)), local, fresh, leaf=p)]
        return [RoleMove(TAU, _const(dpoc.SKIP), local, fresh, leaf=p)]
    if isinstance(p, dpoc.ScopeCoord):
        return _lead_moves(role, p, local, repo, fresh)
    if isinstance(p, dpoc.ScopeSimple):
        idx, body, lead = p.idx, p.body, p.lead
        sb, se = _scope_end(idx.base)
        notify = dpoc.Send(DpocIndex(idx.base), se, Lit(OK), lead)

        def install(payload: object) -> dpoc.DpocProc:
            code = body if payload is None else payload
            return dpoc.Seq(code, notify)  # type: ignore[arg-type]

        return [RoleMove(RecvUpAct(sb, lead), install, local, fresh, scope=idx.base, leaf=p)]
    raise TypeError(f"not a role process: {p!r}")


def _lead_moves(
    role: str, p: dpoc.ScopeCoord, local: LocalState, repo: dioc.UpdateRepo, fresh: int
) -> List[RoleMove]:
    i = p.idx.base
    sb, se = _scope_end(i)
    others = sorted(set(p.roleset) - {role})

    def frame(sends: List[dpoc.DpocProc], middle: dpoc.DpocProc) -> dpoc.DpocProc:
        collect = [dpoc.Recv(DpocIndex(i), se, AUX_SINK, r) for r in others]
        return dpoc.seq(dpoc.product(sends), middle, dpoc.product(collect))

    no_sends: List[dpoc.DpocProc] = [dpoc.SendUpdate(DpocIndex(i), sb, None, r) for r in others]
    out = [RoleMove(NO_UP, _const(frame(no_sends, p.body)), local, fresh, scope=i, leaf=p)]
    scope_roles = frozenset(p.roleset)
    for entry in repo:
        if not entry.applies_to(scope_roles, dict(p.props).get("name")):
            continue
        inserted = dioc.reindex(entry.body, fresh)
        sends: List[dpoc.DpocProc] = [dpoc.SendUpdate(DpocIndex(i), sb, pi(inserted, r), r) for r in others]
        residue = frame(sends, pi(inserted, role))
        label = UpdateApplied(entry.name, entry.digest)
        out.append(RoleMove(label, _const(residue), local, fresh + dioc.max_index(entry.body), scope=i, leaf=p))
    return out


def role_step(
    role: str,
    sys: DpocSystem,
    *,
    logger: Optional[logging.Logger] = None,
) -> List[RoleMove]:
    """Role-level moves of ``role`` inside ``sys``, including unmatched sends and receives."""
    log = logger or logging.getLogger(__name__)
    st = sys.net[role]
    return _role_moves(role, st.proc, st.local, sys.repo, sys.fresh, sys.fns, log)


def _matches(send: RoleLabel, sender: str, recv: RoleLabel, receiver: str) -> bool:
    if isinstance(send, SendAct) and isinstance(recv, RecvAct):
        return send.op == recv.op and send.to == receiver and recv.sender == sender
    if isinstance(send, SendUpAct) and isinstance(recv, RecvUpAct):
        return send.op == recv.op and send.to == receiver and recv.sender == sender
    return False


def system_transitions(sys: DpocSystem, *, logger: Optional[logging.Logger] = None) -> List[Transition]:
    """Network steps: lifted local steps, synchronisations and joint termination.

    Each transition carries ``(role, leaf)`` pairs naming the constructs
    that fired.
    """
    log = logger or logging.getLogger(__name__)
    names = sys.net.names()
    moves = {r: role_step(r, sys, logger=log) for r in names}
    out: List[Transition] = []
    for r in names:
        st = sys.net[r]
        for m in moves[r]:
            if isinstance(m.label, (Tau, NoUp, UpdateApplied)):
                net = sys.net.replace(r, RoleState(m.residue(), m.local))
                target = DpocSystem(sys.repo, net, m.fresh, sys.fns)
                out.append(Transition(m.label, target, scope=m.scope, events=((r, m.leaf),)))
                continue
            if not isinstance(m.label, (SendAct, SendUpAct)):
                continue
            for s in names:
                if s == r:
                    continue
                for n in moves[s]:
                    if not _matches(m.label, r, n.label, s):
                        continue
                    if isinstance(m.label, SendAct):
                        recv = n.label
                        assert isinstance(recv, RecvAct)
                        label: Label = Comm(m.label.op.display(), r, m.label.value, s, recv.var, m.label.op.is_aux)
                        received: object = m.label.value
                    else:
                        label = CommUp(m.label.op.display(), r, m.label.payload, s)
                        received = m.label.payload
                    net = sys.net.replace(r, RoleState(m.residue(), st.local))
                    net = net.replace(s, RoleState(n.residue(received), sys.net[s].local))
                    target = DpocSystem(sys.repo, net, sys.fresh, sys.fns)
                    scope = n.scope if isinstance(label, CommUp) else None
                    out.append(Transition(label, target, scope=scope, events=((r, m.leaf), (s, n.leaf))))
    if names and all(any(isinstance(m.label, Tick) for m in moves[r]) for r in names):
        net = sys.net
        for r in names:
            net = net.replace(r, RoleState(_tick_residue(sys.net.proc(r)), sys.net[r].local))
        out.append(Transition(TICK, DpocSystem(sys.repo, net, sys.fresh, sys.fns)))
    return out


def system_step(sys: DpocSystem, *, logger: Optional[logging.Logger] = None) -> List[Tuple[Label, DpocSystem]]:
    return [(t.label, t.target) for t in system_transitions(sys, logger=logger)]


def change_updates(sys: DpocSystem, repo: dioc.UpdateRepo) -> DpocSystem:
    return replace(sys, repo=repo)


def weak_traces_dpoc(
    sys: DpocSystem,
    fuel: int,
    schedule: Sequence[dioc.UpdateRepo] = (),
    *,
    logger: Optional[logging.Logger] = None,
) -> Tuple[frozenset, bool]:
    """Weak traces with auxiliary interactions and silent steps removed."""
    log = logger or logging.getLogger(__name__)
    phases = (sys.repo,) + tuple(schedule)
    succ = scheduled(lambda s: system_transitions(s, logger=log), phases, change_updates)
    return weak_traces(Scheduled(0, sys), succ, fuel, logger=log)


__all__ = [
    "DpocSystem",
    "RoleMove",
    "change_updates",
    "initial_system",
    "role_step",
    "system_step",
    "system_transitions",
    "weak_traces_dpoc",
]
