"""Choreography-level terms, the roles function, annotation checks and the update repository."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple, Union

from choreo.dpoc import GlobalIndex, plain
from choreo.values import Expr


@dataclass(frozen=True)
class Interaction:
    idx: int
    op: str
    sender: str
    expr: Expr
    receiver: str
    var: str


@dataclass(frozen=True)
class Assign:
    idx: int
    var: str
    role: str
    expr: Expr


@dataclass(frozen=True)
class Seq:
    left: "DiocProc"
    right: "DiocProc"


@dataclass(frozen=True)
class Par:
    left: "DiocProc"
    right: "DiocProc"


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class End:
    pass


@dataclass(frozen=True)
class If:
    idx: int
    guard: Expr
    role: str
    then: "DiocProc"
    else_: "DiocProc"


@dataclass(frozen=True)
class While:
    idx: int
    guard: Expr
    role: str
    body: "DiocProc"


@dataclass(frozen=True)
class Scope:
    idx: int
    role: str
    body: "DiocProc"
    props: Tuple[Tuple[str, str], ...] = ()

    @property
    def name(self) -> Optional[str]:
        return dict(self.props).get("name")


DiocProc = Union[Interaction, Assign, Seq, Par, Skip, End, If, While, Scope]
IndexedConstruct = Union[Interaction, Assign, If, While, Scope]

SKIP = Skip()
END = End()

INDEXED = (Interaction, Assign, If, While, Scope)


def children(p: DiocProc) -> Tuple[DiocProc, ...]:
    if isinstance(p, (Seq, Par)):
        return (p.left, p.right)
    if isinstance(p, If):
        return (p.then, p.else_)
    if isinstance(p, (While, Scope)):
        return (p.body,)
    return ()


def walk(p: DiocProc) -> Iterator[DiocProc]:
    stack: List[DiocProc] = [p]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def seq(*items: DiocProc) -> DiocProc:
    if not items:
        return SKIP
    out = items[-1]
    for item in reversed(items[:-1]):
        out = Seq(item, out)
    return out


def roles(p: DiocProc) -> FrozenSet[str]:
    """Roles occurring in ``p``; guards and scopes contribute their coordinator."""
    out = set()
    for node in walk(p):
        if isinstance(node, Interaction):
            out.add(node.sender)
            out.add(node.receiver)
        elif isinstance(node, (Assign, If, While, Scope)):
            out.add(node.role)
    return frozenset(out)


def is_initial(p: DiocProc) -> bool:
    return not any(isinstance(n, End) for n in walk(p))


def indexed(p: DiocProc) -> List[IndexedConstruct]:
    return [n for n in walk(p) if isinstance(n, INDEXED)]  # type: ignore[misc]


def max_index(p: DiocProc) -> int:
    return max((n.idx for n in indexed(p)), default=0)


@dataclass
class AnnotationReport:
    ok: bool
    duplicates: List[int]
    missing: int

    def messages(self) -> List[str]:
        out: List[str] = []
        if self.missing:
            out.append(f"{self.missing} construct(s) without an index")
        for i in self.duplicates:
            out.append(f"index {i} used more than once")
        return out


def well_annotated(p: DiocProc) -> AnnotationReport:
    counts = Counter(n.idx for n in indexed(p))
    missing = counts.pop(0, 0)
    duplicates = sorted(i for i, c in counts.items() if c > 1)
    return AnnotationReport(ok=not missing and not duplicates, duplicates=duplicates, missing=missing)


def global_indexes(p: DiocProc) -> List[Tuple[IndexedConstruct, GlobalIndex]]:
    """Each indexed construct with the chain of enclosing while indexes prepended."""
    out: List[Tuple[IndexedConstruct, GlobalIndex]] = []
    stack: List[Tuple[DiocProc, GlobalIndex]] = [(p, ())]
    while stack:
        node, ctx = stack.pop()
        if isinstance(node, INDEXED):
            out.append((node, ctx + (plain(node.idx),)))  # type: ignore[arg-type]
        inner = ctx + (plain(node.idx),) if isinstance(node, While) else ctx
        for child in reversed(children(node)):
            stack.append((child, inner))
    return out


def _rebuild(node: DiocProc, kids: List[DiocProc], fn) -> DiocProc:
    if isinstance(node, (Interaction, Assign)):
        return replace(node, idx=fn(node.idx))
    if isinstance(node, Seq):
        return Seq(kids[0], kids[1])
    if isinstance(node, Par):
        return Par(kids[0], kids[1])
    if isinstance(node, If):
        return replace(node, idx=fn(node.idx), then=kids[0], else_=kids[1])
    if isinstance(node, (While, Scope)):
        return replace(node, idx=fn(node.idx), body=kids[0])
    return node


def _map_indexes(p: DiocProc, fn) -> DiocProc:
    """Apply ``fn`` to every index; post-order over an explicit stack."""
    out: Dict[int, DiocProc] = {}
    stack: List[Tuple[DiocProc, bool]] = [(p, False)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in out:
            continue
        kids = children(node)
        if expanded or not kids:
            out[id(node)] = _rebuild(node, [out[id(k)] for k in kids], fn)
            continue
        stack.append((node, True))
        for k in kids:
            if id(k) not in out:
                stack.append((k, False))
    return out[id(p)]


def reindex(p: DiocProc, offset: int) -> DiocProc:
    """Shift every index by ``offset`` (fresh copies of update bodies)."""
    return _map_indexes(p, lambda i: i + offset)


def strip_indexes(p: DiocProc) -> DiocProc:
    return _map_indexes(p, lambda _i: 0)


# -------------------
# Update repository
# -------------------


@dataclass(frozen=True)
class UpdateEntry:
    name: str
    body: DiocProc
    digest: str
    target: Optional[str] = None
    connected: bool = True

    def applies_to(self, scope_roles: FrozenSet[str], scope_name: Optional[str]) -> bool:
        if not self.connected:
            return False
        if self.target is not None and self.target != scope_name:
            return False
        return roles(self.body) <= scope_roles


@dataclass(frozen=True)
class UpdateRepo:
    entries: Tuple[UpdateEntry, ...] = ()

    def __iter__(self) -> Iterator[UpdateEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def names(self) -> List[str]:
        return [e.name for e in self.entries]

    def get(self, name: str) -> Optional[UpdateEntry]:
        for e in self.entries:
            if e.name == name:
                return e
        return None

    def max_index(self) -> int:
        return max((max_index(e.body) for e in self.entries), default=0)


EMPTY_REPO = UpdateRepo()


def initial_fresh(p: DiocProc, repos: Tuple[UpdateRepo, ...] = ()) -> int:
    return max([max_index(p)] + [r.max_index() for r in repos])


__all__ = [
    "AnnotationReport",
    "Assign",
    "DiocProc",
    "EMPTY_REPO",
    "END",
    "End",
    "INDEXED",
    "If",
    "IndexedConstruct",
    "Interaction",
    "Par",
    "SKIP",
    "Scope",
    "Seq",
    "Skip",
    "UpdateEntry",
    "UpdateRepo",
    "While",
    "children",
    "global_indexes",
    "indexed",
    "initial_fresh",
    "is_initial",
    "max_index",
    "reindex",
    "roles",
    "seq",
    "strip_indexes",
    "walk",
]
