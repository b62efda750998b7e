"""Process-level terms: indexes, operation names, role processes and networks."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, List, Mapping, Optional, Tuple, Union

from choreo.values import EMPTY_LOCAL, Expr, FrozenMap, LocalState


class IndexVariant(str, enum.Enum):
    PLAIN = ""
    TRUE = "t"
    FALSE = "f"
    RECV = "r"
    CLOSE = "c"


@dataclass(frozen=True, order=True)
class DpocIndex:
    base: int
    variant: IndexVariant = IndexVariant.PLAIN

    def __str__(self) -> str:
        if self.variant is IndexVariant.PLAIN:
            return str(self.base)
        return f"{self.base}?{self.variant.value}"


def plain(i: int) -> DpocIndex:
    return DpocIndex(i, IndexVariant.PLAIN)


GlobalIndex = Tuple[DpocIndex, ...]


def format_global(gid: GlobalIndex) -> str:
    return ":".join(str(i) for i in gid)


class AuxKind(str, enum.Enum):
    CND = "cnd"
    WB = "wb"
    WE = "we"
    SB = "sb"
    SE = "se"


@dataclass(frozen=True)
class OpName:
    """Operation name carrying the prefix index; auxiliary names also carry their owner."""

    prefix: int
    name: str
    aux: Optional[AuxKind] = None
    owner: int = 0

    @classmethod
    def auxiliary(cls, kind: AuxKind, owner: int) -> "OpName":
        return cls(prefix=owner, name=kind.value, aux=kind, owner=owner)

    @property
    def is_aux(self) -> bool:
        return self.aux is not None

    def display(self) -> str:
        """Name as it appears in system labels: prefix removed."""
        if self.aux is None:
            return self.name
        return f"{self.aux.value}*_{self.owner}"

    def full(self) -> str:
        return f"{self.prefix}.{self.display()}"


# Receive variables introduced by projection live in a namespace the parser rejects.
AUX_PREFIX = "aux$"
AUX_SINK = "aux$_"


def aux_var(i: int) -> str:
    return f"{AUX_PREFIX}x_{i}"


def is_aux_var(name: str) -> bool:
    return name.startswith(AUX_PREFIX)


# -------------------
# Role processes
# -------------------


@dataclass(frozen=True)
class Recv:
    idx: DpocIndex
    op: OpName
    var: str
    sender: str


@dataclass(frozen=True)
class Send:
    idx: DpocIndex
    op: OpName
    expr: Expr
    to: str


@dataclass(frozen=True)
class SendUpdate:
    """``sb*`` message; ``payload`` is None for the ``no`` answer."""

    idx: DpocIndex
    op: OpName
    payload: Optional["DpocProc"]
    to: str


@dataclass(frozen=True)
class Assign:
    idx: DpocIndex
    var: str
    expr: Expr


@dataclass(frozen=True)
class Seq:
    left: "DpocProc"
    right: "DpocProc"


@dataclass(frozen=True)
class Par:
    left: "DpocProc"
    right: "DpocProc"


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class End:
    pass


@dataclass(frozen=True)
class If:
    idx: DpocIndex
    guard: Expr
    then: "DpocProc"
    else_: "DpocProc"


@dataclass(frozen=True)
class While:
    idx: DpocIndex
    guard: Expr
    body: "DpocProc"


@dataclass(frozen=True)
class ScopeCoord:
    idx: DpocIndex
    lead: str
    body: "DpocProc"
    roleset: Tuple[str, ...]
    props: Tuple[Tuple[str, str], ...] = ()


@dataclass(frozen=True)
class ScopeSimple:
    idx: DpocIndex
    lead: str
    body: "DpocProc"


DpocProc = Union[Recv, Send, SendUpdate, Assign, Seq, Par, Skip, End, If, While, ScopeCoord, ScopeSimple]

SKIP = Skip()
END = End()

Indexed = (Recv, Send, SendUpdate, Assign, If, While, ScopeCoord, ScopeSimple)


def seq(*items: DpocProc) -> DpocProc:
    """Right-nested sequence; the empty sequence is 1."""
    if not items:
        return SKIP
    out = items[-1]
    for item in reversed(items[:-1]):
        out = Seq(item, out)
    return out


def product(items: List[DpocProc]) -> DpocProc:
    """Right-nested parallel composition; the empty product is 1."""
    if not items:
        return SKIP
    out = items[-1]
    for item in reversed(items[:-1]):
        out = Par(item, out)
    return out


def children(p: DpocProc) -> Tuple[DpocProc, ...]:
    if isinstance(p, (Seq, Par)):
        return (p.left, p.right)
    if isinstance(p, If):
        return (p.then, p.else_)
    if isinstance(p, (While, ScopeCoord, ScopeSimple)):
        return (p.body,)
    return ()


def walk(p: DpocProc) -> Iterator[DpocProc]:
    """Pre-order traversal (payloads of update messages are data, not visited)."""
    stack: List[DpocProc] = [p]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def global_indexes(p: DpocProc) -> List[Tuple[DpocProc, GlobalIndex]]:
    """Indexed constructs of one role with their enclosing-while paths."""
    out: List[Tuple[DpocProc, GlobalIndex]] = []
    stack: List[Tuple[DpocProc, GlobalIndex]] = [(p, ())]
    while stack:
        node, ctx = stack.pop()
        if isinstance(node, Indexed):
            out.append((node, ctx + (node.idx,)))  # type: ignore[union-attr]
        inner = ctx + (node.idx,) if isinstance(node, While) else ctx
        for child in reversed(children(node)):
            stack.append((child, inner))
    return out


def network_global_indexes(net: "Network") -> List[Tuple[str, DpocProc, GlobalIndex]]:
    return [(role, node, gid) for role, st in net.items() for node, gid in global_indexes(st.proc)]


def contains_send(p: DpocProc) -> bool:
    return any(isinstance(n, (Send, SendUpdate)) for n in walk(p))


def can_tick(p: DpocProc) -> bool:
    if isinstance(p, Skip):
        return True
    if isinstance(p, (Seq, Par)):
        return can_tick(p.left) and can_tick(p.right)
    return False


# -------------------
# Networks
# -------------------


@dataclass(frozen=True)
class RoleState:
    proc: DpocProc
    local: LocalState = EMPTY_LOCAL


@dataclass(frozen=True)
class Network:
    """Parallel composition of roles with distinct names, kept sorted by name."""

    roles: FrozenMap[str, RoleState] = FrozenMap()

    @classmethod
    def of(cls, entries: Mapping[str, RoleState]) -> "Network":
        return cls(FrozenMap.of(dict(entries)))

    def names(self) -> List[str]:
        return self.roles.keys()

    def __getitem__(self, role: str) -> RoleState:
        st = self.roles.get(role)
        if st is None:
            raise KeyError(role)
        return st

    def proc(self, role: str) -> DpocProc:
        return self[role].proc

    def replace(self, role: str, state: RoleState) -> "Network":
        return Network(self.roles.set(role, state))

    def items(self) -> List[Tuple[str, RoleState]]:
        return list(self.roles.items)


__all__ = [
    "AUX_PREFIX",
    "AUX_SINK",
    "Assign",
    "AuxKind",
    "DpocIndex",
    "DpocProc",
    "END",
    "End",
    "GlobalIndex",
    "If",
    "IndexVariant",
    "Indexed",
    "Network",
    "OpName",
    "Par",
    "Recv",
    "RoleState",
    "SKIP",
    "ScopeCoord",
    "ScopeSimple",
    "Send",
    "SendUpdate",
    "Seq",
    "Skip",
    "While",
    "aux_var",
    "can_tick",
    "children",
    "contains_send",
    "format_global",
    "global_indexes",
    "is_aux_var",
    "network_global_indexes",
    "plain",
    "product",
    "seq",
    "walk",
]
