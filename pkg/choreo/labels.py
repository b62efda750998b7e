"""Transition labels of both calculi and their JSON trace records."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple, Union

from choreo.dpoc import DpocProc, OpName
from choreo.values import Value, format_value, json_value


@dataclass(frozen=True)
class Tau:
    pass


@dataclass(frozen=True)
class Tick:
    pass


@dataclass(frozen=True)
class NoUp:
    pass


@dataclass(frozen=True)
class Comm:
    """``o : R(v) -> S(x)``; the same shape serves both levels once prefixes are dropped."""

    op: str
    sender: str
    value: Value
    receiver: str
    var: str
    aux: bool = False


@dataclass(frozen=True)
class CommUp:
    """Higher-order ``sb*`` interaction; ``payload`` None is the ``no`` answer."""

    op: str
    sender: str
    payload: Optional[DpocProc]
    receiver: str


@dataclass(frozen=True)
class UpdateApplied:
    name: str
    digest: str


@dataclass(frozen=True)
class ChangeUpdates:
    phase: int


# Role-level actions; they never appear in system traces.


@dataclass(frozen=True)
class SendAct:
    op: OpName
    value: Value
    to: str


@dataclass(frozen=True)
class RecvAct:
    op: OpName
    var: str
    sender: str


@dataclass(frozen=True)
class SendUpAct:
    op: OpName
    payload: Optional[DpocProc]
    to: str


@dataclass(frozen=True)
class RecvUpAct:
    op: OpName
    sender: str


Label = Union[Tau, Tick, NoUp, Comm, CommUp, UpdateApplied, ChangeUpdates]
RoleLabel = Union[Tau, Tick, NoUp, UpdateApplied, SendAct, RecvAct, SendUpAct, RecvUpAct]

TAU = Tau()
TICK = Tick()
NO_UP = NoUp()


def is_silent(label: Label) -> bool:
    """Labels removed when weakening a trace."""
    if isinstance(label, Tau) or isinstance(label, CommUp):
        return True
    return isinstance(label, Comm) and label.aux


def is_internal(label: Label) -> bool:
    """Everything except repository changes, which the environment performs."""
    return not isinstance(label, ChangeUpdates)


def weaken(trace: Tuple[Label, ...]) -> Tuple[Label, ...]:
    return tuple(lab for lab in trace if not is_silent(lab))


def short_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class Transition:
    """One outgoing edge; ``scope`` names the scope index decided by update steps."""

    label: Label
    target: Any
    scope: Optional[int] = None
    events: Tuple[Any, ...] = field(default=(), compare=False)


def describe(label: Label) -> str:
    if isinstance(label, Comm):
        return f"{label.op}: {label.sender}({format_value(label.value)}) -> {label.receiver}({label.var})"
    if isinstance(label, CommUp):
        payload = "no" if label.payload is None else "code"
        return f"{label.op}: {label.sender}({payload}) -> {label.receiver}"
    if isinstance(label, UpdateApplied):
        return f"update {label.name}#{label.digest}"
    if isinstance(label, ChangeUpdates):
        return f"change-updates {label.phase}"
    if isinstance(label, Tick):
        return "tick"
    if isinstance(label, NoUp):
        return "no-up"
    return "tau"


def to_record(label: Label, step: int, *, payload_text=None) -> Dict[str, Any]:
    """JSON-lines trace record; absent keys are omitted."""
    rec: Dict[str, Any] = {"step": step}
    if isinstance(label, Comm):
        rec.update(
            kind="interaction",
            op=label.op,
            sender=label.sender,
            receiver=label.receiver,
            value=json_value(label.value),
            var=label.var,
        )
        if label.aux:
            rec["aux"] = True
    elif isinstance(label, CommUp):
        rec.update(kind="update-interaction", op=label.op, sender=label.sender, receiver=label.receiver, aux=True)
        if label.payload is None:
            rec["value"] = "no"
        else:
            text = payload_text(label.payload) if payload_text else repr(label.payload)
            rec["value"] = "code:" + short_digest(text)
    elif isinstance(label, UpdateApplied):
        rec.update(kind="update", update=label.name, value=label.digest)
    elif isinstance(label, ChangeUpdates):
        rec.update(kind="change-updates", value=label.phase)
    elif isinstance(label, Tick):
        rec["kind"] = "tick"
    elif isinstance(label, NoUp):
        rec["kind"] = "no-up"
    else:
        rec["kind"] = "tau"
    return rec


__all__ = [
    "ChangeUpdates",
    "Comm",
    "CommUp",
    "Label",
    "NO_UP",
    "NoUp",
    "RecvAct",
    "RecvUpAct",
    "RoleLabel",
    "SendAct",
    "SendUpAct",
    "TAU",
    "TICK",
    "Tau",
    "Tick",
    "Transition",
    "UpdateApplied",
    "describe",
    "is_internal",
    "is_silent",
    "short_digest",
    "to_record",
    "weaken",
]
