"""Bring a running network back to the shape of a projection.

A choreography decides a conditional, a loop iteration or a scope in one step,
while the network needs several auxiliary interactions for the same decision.
``compl`` finishes decisions that have already started, ``clean`` drops the
closing acknowledgements of loops and scopes, and ``canonical`` removes the
neutral ``1`` and flattens sequences and parallels so that terms compare by
value. ``upd`` is the composition used when comparing a network with the
projection of a choreography.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Callable, Dict, List, Optional, Type, Union

from choreo import dpoc
from choreo.dpoc import AuxKind, DpocProc, Network, RoleState, is_aux_var
from choreo.values import EMPTY_ENV, FunctionEnv, LocalState, Var, eval_expr, same_value

Rewrite = Callable[[DpocProc], Optional[DpocProc]]


def _flatten(p: DpocProc, kind: Type[Union[dpoc.Seq, dpoc.Par]]) -> List[DpocProc]:
    out: List[DpocProc] = []
    stack = [p]
    while stack:
        node = stack.pop()
        if isinstance(node, kind):
            stack.extend([node.right, node.left])
        else:
            out.append(node)
    return out


def canonical(p: DpocProc) -> DpocProc:
    """Right-nested, ``1``-free form; a parallel of terminated branches is ``0``."""
    if isinstance(p, (dpoc.Seq, dpoc.Par)):
        kind = type(p)
        items: List[DpocProc] = []
        for item in _flatten(p, kind):
            c = canonical(item)
            if isinstance(c, kind):
                items.extend(_flatten(c, kind))
            elif not isinstance(c, dpoc.Skip):
                items.append(c)
        if not items:
            return dpoc.SKIP
        if kind is dpoc.Par:
            if all(isinstance(i, dpoc.End) for i in items):
                return dpoc.END
            return dpoc.product(items)
        return dpoc.seq(*items)
    if isinstance(p, dpoc.If):
        return replace(p, then=canonical(p.then), else_=canonical(p.else_))
    if isinstance(p, (dpoc.While, dpoc.ScopeCoord, dpoc.ScopeSimple)):
        return replace(p, body=canonical(p.body))
    if isinstance(p, dpoc.SendUpdate) and p.payload is not None:
        return replace(p, payload=canonical(p.payload))
    return p


def enabled_leaves(p: DpocProc) -> List[DpocProc]:
    """Constructs at the front of a canonical term, left to right."""
    out: List[DpocProc] = []
    stack = [p]
    while stack:
        node = stack.pop()
        if isinstance(node, dpoc.Seq):
            stack.append(node.left)
        elif isinstance(node, dpoc.Par):
            stack.extend([node.right, node.left])
        elif not isinstance(node, (dpoc.Skip, dpoc.End)):
            out.append(node)
    return out


def _rewrite_first(p: DpocProc, fn: Rewrite) -> Optional[DpocProc]:
    """Replace the first node (pre-order) accepted by ``fn``; loop bodies and payloads are skipped."""
    out = fn(p)
    if out is not None:
        return out
    if isinstance(p, (dpoc.Seq, dpoc.Par)):
        left = _rewrite_first(p.left, fn)
        if left is not None:
            return type(p)(left, p.right)
        right = _rewrite_first(p.right, fn)
        if right is not None:
            return type(p)(p.left, right)
        return None
    if isinstance(p, dpoc.If):
        then = _rewrite_first(p.then, fn)
        if then is not None:
            return replace(p, then=then)
        else_ = _rewrite_first(p.else_, fn)
        return replace(p, else_=else_) if else_ is not None else None
    if isinstance(p, (dpoc.ScopeCoord, dpoc.ScopeSimple)):
        body = _rewrite_first(p.body, fn)
        return replace(p, body=body) if body is not None else None
    return None


def _split(p: DpocProc):
    if isinstance(p, dpoc.Seq):
        return p.left, p.right
    return p, None


def _then(items: List[DpocProc], rest: Optional[DpocProc]) -> DpocProc:
    return dpoc.seq(*items, *([rest] if rest is not None else []))


def _unfold(loop: dpoc.While, rest: Optional[DpocProc]) -> DpocProc:
    return _then(_flatten(loop.body, dpoc.Seq) + [loop], rest)


def _decision_receiver(send: dpoc.Send, sender: str, value: object) -> Rewrite:
    """Pattern ``recv ; while`` or ``recv ; if`` waiting for ``send``."""
    owner = send.op.owner

    def fn(node: DpocProc) -> Optional[DpocProc]:
        if not isinstance(node, dpoc.Seq):
            return None
        recv = node.left
        if not (isinstance(recv, dpoc.Recv) and recv.op == send.op and recv.sender == sender):
            return None
        head, rest = _split(node.right)
        if send.op.aux is AuxKind.WB and isinstance(head, dpoc.While) and head.idx.base == owner:
            return _unfold(head, rest) if value is True else _then([], rest)
        if send.op.aux is AuxKind.CND and isinstance(head, dpoc.If) and head.idx.base == owner:
            return _then([head.then if value is True else head.else_], rest)
        return None

    return fn


def _scope_receiver(send: dpoc.SendUpdate, sender: str) -> Rewrite:
    owner = send.op.owner

    def fn(node: DpocProc) -> Optional[DpocProc]:
        if isinstance(node, dpoc.ScopeSimple) and node.idx.base == owner and node.lead == sender:
            return node.body if send.payload is None else send.payload
        return None

    return fn


def _replace_node(p: DpocProc, target: DpocProc, by: DpocProc) -> DpocProc:
    out = _rewrite_first(p, lambda n: by if n is target else None)
    return out if out is not None else p


def _aux_guard(guard: object, local: LocalState) -> Optional[object]:
    if isinstance(guard, Var) and is_aux_var(guard.name) and guard.name in local:
        return local.get(guard.name)
    return None


def _complete_one(
    role: str,
    leaf: DpocProc,
    procs: Dict[str, DpocProc],
    locals_: Dict[str, LocalState],
    fns: FunctionEnv,
) -> bool:
    p, local = procs[role], locals_[role]
    if isinstance(leaf, dpoc.Send) and leaf.op.aux in (AuxKind.WB, AuxKind.CND):
        if leaf.to not in procs:
            return False
        value = eval_expr(leaf.expr, local, fns)
        received = _rewrite_first(procs[leaf.to], _decision_receiver(leaf, role, value))
        if received is None:
            return False
        procs[leaf.to] = canonical(received)
        procs[role] = canonical(_replace_node(p, leaf, dpoc.SKIP))
        return True
    if isinstance(leaf, dpoc.SendUpdate):
        if leaf.to not in procs:
            return False
        received = _rewrite_first(procs[leaf.to], _scope_receiver(leaf, role))
        if received is None:
            return False
        procs[leaf.to] = canonical(received)
        procs[role] = canonical(_replace_node(p, leaf, dpoc.SKIP))
        return True
    if isinstance(leaf, dpoc.Assign) and is_aux_var(leaf.var):
        locals_[role] = local.set(leaf.var, eval_expr(leaf.expr, local, fns))
        procs[role] = canonical(_replace_node(p, leaf, dpoc.SKIP))
        return True
    if isinstance(leaf, dpoc.While):
        value = _aux_guard(leaf.guard, local)
        if value is None:
            return False
        by = dpoc.seq(*_flatten(leaf.body, dpoc.Seq), leaf) if value is True else dpoc.SKIP
        procs[role] = canonical(_replace_node(p, leaf, by))
        return True
    if isinstance(leaf, dpoc.If):
        value = _aux_guard(leaf.guard, local)
        if value is None:
            return False
        procs[role] = canonical(_replace_node(p, leaf, leaf.then if value is True else leaf.else_))
        return True
    return False


def compl(net: Network, fns: FunctionEnv = EMPTY_ENV) -> Network:
    """Finish every auxiliary decision already under way, to a fixpoint."""
    procs = {r: canonical(st.proc) for r, st in net.items()}
    locals_ = {r: st.local for r, st in net.items()}
    progress = True
    while progress:
        progress = False
        for role in sorted(procs):
            for leaf in enabled_leaves(procs[role]):
                if _complete_one(role, leaf, procs, locals_, fns):
                    progress = True
                    break
            if progress:
                break
    return Network.of({r: RoleState(procs[r], locals_[r]) for r in procs})


def _closing(p: DpocProc) -> bool:
    if isinstance(p, (dpoc.Send, dpoc.Recv)):
        return p.op.aux in (AuxKind.SE, AuxKind.WE)
    return isinstance(p, dpoc.Assign) and p.var == dpoc.AUX_SINK


def _strip_closing(p: DpocProc) -> DpocProc:
    if _closing(p):
        return dpoc.SKIP
    if isinstance(p, (dpoc.Seq, dpoc.Par)):
        return type(p)(_strip_closing(p.left), _strip_closing(p.right))
    if isinstance(p, dpoc.If):
        return replace(p, then=_strip_closing(p.then), else_=_strip_closing(p.else_))
    if isinstance(p, (dpoc.ScopeCoord, dpoc.ScopeSimple)):
        return replace(p, body=_strip_closing(p.body))
    return p


def clean(net: Network) -> Network:
    """Drop end-of-loop and end-of-scope acknowledgements outside loop bodies."""
    return Network.of({r: RoleState(canonical(_strip_closing(st.proc)), st.local) for r, st in net.items()})


def upd(net: Network, fns: FunctionEnv = EMPTY_ENV) -> Network:
    return clean(compl(net, fns))


def visible_local(local: LocalState) -> Dict[str, object]:
    return {k: v for k, v in local.to_dict().items() if not is_aux_var(k)}


def _same_local(a: LocalState, b: LocalState) -> bool:
    va, vb = visible_local(a), visible_local(b)
    return va.keys() == vb.keys() and all(same_value(va[k], vb[k]) for k in va)  # type: ignore[arg-type]


def difference(a: Network, b: Network) -> Optional[str]:
    """First role on which the two networks differ up to auxiliary variables, if any."""
    if a.names() != b.names():
        return f"roles {a.names()} vs {b.names()}"
    for role in a.names():
        if canonical(a.proc(role)) != canonical(b.proc(role)):
            return f"process of {role}"
        if not _same_local(a[role].local, b[role].local):
            return f"local state of {role}"
    return None


def same_network(a: Network, b: Network) -> bool:
    return difference(a, b) is None


__all__ = [
    "canonical",
    "clean",
    "compl",
    "difference",
    "enabled_leaves",
    "same_network",
    "upd",
    "visible_local",
]
