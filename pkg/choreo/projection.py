"""Process projection of annotated choreographies onto roles, and network projection."""

from __future__ import annotations

import logging
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

from choreo import dioc, dpoc
from choreo.connectedness import Summary, connected, summaries
from choreo.dpoc import AuxKind, DpocIndex, IndexVariant, OpName, aux_var
from choreo.values import EMPTY_GLOBAL, FALSE, OK, TRUE, GlobalState, Lit, Var, local_view


class NotAnnotatedError(ValueError):
    def __init__(self, construct: object):
        self.construct = construct
        super().__init__(f"cannot project a construct without an index: {construct!r}")


def _ix(i: int, variant: IndexVariant = IndexVariant.PLAIN) -> DpocIndex:
    return DpocIndex(i, variant)


def _others(roles: FrozenSet[str], r: str) -> List[str]:
    return sorted(roles - {r})


def _broadcast(i: int, kind: AuxKind, variant: IndexVariant, value: Lit, targets: List[str]) -> dpoc.DpocProc:
    op = OpName.auxiliary(kind, i)
    return dpoc.product([dpoc.Send(_ix(i, variant), op, value, t) for t in targets])


def _collect(i: int, kind: AuxKind, variant: IndexVariant, sources: List[str]) -> dpoc.DpocProc:
    op = OpName.auxiliary(kind, i)
    return dpoc.product([dpoc.Recv(_ix(i, variant), op, dpoc.AUX_SINK, s) for s in sources])


def _project_node(
    node: dioc.DiocProc,
    r: str,
    kids: List[dpoc.DpocProc],
    table: Dict[int, Summary],
) -> dpoc.DpocProc:
    if isinstance(node, dioc.Skip):
        return dpoc.SKIP
    if isinstance(node, dioc.End):
        return dpoc.END
    if isinstance(node, dioc.Seq):
        return dpoc.Seq(kids[0], kids[1])
    if isinstance(node, dioc.Par):
        return dpoc.Par(kids[0], kids[1])
    if node.idx <= 0:
        raise NotAnnotatedError(node)
    i = node.idx
    if isinstance(node, dioc.Assign):
        return dpoc.Assign(_ix(i), node.var, node.expr) if node.role == r else dpoc.SKIP
    if isinstance(node, dioc.Interaction):
        op = OpName(i, node.op)
        if node.sender == r:
            return dpoc.Send(_ix(i), op, node.expr, node.receiver)
        if node.receiver == r:
            return dpoc.Recv(_ix(i), op, node.var, node.sender)
        return dpoc.SKIP
    if isinstance(node, dioc.If):
        involved = table[id(node.then)].roles | table[id(node.else_)].roles
        then, else_ = kids
        if node.role == r:
            targets = _others(involved, r)
            return dpoc.If(
                _ix(i),
                node.guard,
                dpoc.Seq(_broadcast(i, AuxKind.CND, IndexVariant.TRUE, TRUE, targets), then),
                dpoc.Seq(_broadcast(i, AuxKind.CND, IndexVariant.FALSE, FALSE, targets), else_),
            )
        if r in involved:
            x = aux_var(i)
            recv = dpoc.Recv(_ix(i, IndexVariant.RECV), OpName.auxiliary(AuxKind.CND, i), x, node.role)
            return dpoc.Seq(recv, dpoc.If(_ix(i), Var(x), then, else_))
        return dpoc.SKIP
    if isinstance(node, dioc.While):
        involved = table[id(node.body)].roles
        (body,) = kids
        if node.role == r:
            targets = _others(involved, r)
            loop = dpoc.While(
                _ix(i),
                node.guard,
                dpoc.seq(
                    _broadcast(i, AuxKind.WB, IndexVariant.TRUE, TRUE, targets),
                    body,
                    _collect(i, AuxKind.WE, IndexVariant.CLOSE, targets),
                ),
            )
            return dpoc.Seq(loop, _broadcast(i, AuxKind.WB, IndexVariant.FALSE, FALSE, targets))
        if r in involved:
            x = aux_var(i)
            wb = OpName.auxiliary(AuxKind.WB, i)
            begin = dpoc.Recv(_ix(i, IndexVariant.RECV), wb, x, node.role)
            close = dpoc.Send(_ix(i, IndexVariant.CLOSE), OpName.auxiliary(AuxKind.WE, i), Lit(OK), node.role)
            return dpoc.Seq(begin, dpoc.While(_ix(i), Var(x), dpoc.seq(body, close, begin)))
        return dpoc.SKIP
    if isinstance(node, dioc.Scope):
        involved = table[id(node.body)].roles
        (body,) = kids
        if node.role == r:
            return dpoc.ScopeCoord(_ix(i), r, body, tuple(sorted(involved)), node.props)
        if r in involved:
            return dpoc.ScopeSimple(_ix(i), node.role, body)
        return dpoc.SKIP
    raise TypeError(f"not a choreography term: {node!r}")


def pi(p: dioc.DiocProc, r: str, *, table: Optional[Dict[int, Summary]] = None) -> dpoc.DpocProc:
    """Local behaviour of role ``r`` in ``p``.

    Built bottom-up over an explicit stack; ``table`` may carry precomputed
    summaries of ``p`` when projecting several roles.
    """
    table = table if table is not None else summaries(p)
    out: Dict[int, dpoc.DpocProc] = {}
    stack: List[Tuple[dioc.DiocProc, bool]] = [(p, False)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in out:
            continue
        kids = dioc.children(node)
        if expanded or not kids:
            out[id(node)] = _project_node(node, r, [out[id(k)] for k in kids], table)
            continue
        stack.append((node, True))
        for k in kids:
            if id(k) not in out:
                stack.append((k, False))
    return out[id(p)]


def project(
    p: dioc.DiocProc,
    sigma: GlobalState = EMPTY_GLOBAL,
    extra_roles: Iterable[str] = (),
    *,
    logger: Optional[logging.Logger] = None,
) -> dpoc.Network:
    """One role entry per role of ``p`` (plus ``extra_roles``), each with its slice of ``sigma``."""
    log = logger or logging.getLogger(__name__)
    report = connected(p, logger=log)
    if not report.ok:
        log.warning("Projecting a program that is not connected: %s", report.describe())
    table = summaries(p)
    names = sorted(table[id(p)].roles | set(extra_roles))
    net = dpoc.Network.of({r: dpoc.RoleState(pi(p, r, table=table), local_view(sigma, r)) for r in names})
    log.debug("Projected %d role(s): %s", len(names), ", ".join(names))
    return net


__all__ = ["NotAnnotatedError", "pi", "project"]
