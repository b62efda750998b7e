"""Values, expressions and their total evaluation.

Both calculi share this expression layer. Evaluation never raises: unbound
variables, unknown functions and type mismatches all produce ``Err``.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass
from typing import Dict, Generic, Iterator, List, Mapping, Optional, Sequence, Tuple, TypeVar, Union


class ErrValue(enum.Enum):
    ERR = "null"

    def __repr__(self) -> str:
        return "Err"


Err = ErrValue.ERR

Value = Union[bool, int, float, str, ErrValue]

# Payload of the scope-end and loop-end notifications.
OK = "ok"

K = TypeVar("K")
V = TypeVar("V")


@dataclass(frozen=True)
class FrozenMap(Generic[K, V]):
    """Immutable mapping stored as a key-sorted tuple so it can be hashed."""

    items: Tuple[Tuple[K, V], ...] = ()

    @classmethod
    def of(cls, mapping: Optional[Mapping[K, V]] = None) -> "FrozenMap[K, V]":
        if not mapping:
            return cls(())
        return cls(tuple(sorted(mapping.items(), key=lambda kv: kv[0])))  # type: ignore[arg-type,return-value]

    def get(self, key: K, default: Optional[V] = None) -> Optional[V]:
        for k, v in self.items:
            if k == key:
                return v
        return default

    def set(self, key: K, value: V) -> "FrozenMap[K, V]":
        data = dict(self.items)
        data[key] = value
        return FrozenMap.of(data)

    def keys(self) -> List[K]:
        return [k for k, _ in self.items]

    def to_dict(self) -> Dict[K, V]:
        return dict(self.items)

    def __contains__(self, key: object) -> bool:
        return any(k == key for k, _ in self.items)

    def __iter__(self) -> Iterator[K]:
        return iter(self.keys())

    def __len__(self) -> int:
        return len(self.items)


LocalState = FrozenMap[str, Value]
GlobalState = FrozenMap[str, LocalState]

EMPTY_LOCAL: LocalState = FrozenMap()
EMPTY_GLOBAL: GlobalState = FrozenMap()


def local_view(sigma: GlobalState, role: str) -> LocalState:
    view = sigma.get(role)
    return view if view is not None else EMPTY_LOCAL


def lookup(sigma: GlobalState, role: str, var: str) -> Value:
    value = local_view(sigma, role).get(var)
    return Err if value is None else value


def assign(sigma: GlobalState, role: str, var: str, value: Value) -> GlobalState:
    return sigma.set(role, local_view(sigma, role).set(var, value))


def global_state(bindings: Mapping[str, Mapping[str, Value]]) -> GlobalState:
    return FrozenMap.of({role: FrozenMap.of(dict(vars_)) for role, vars_ in bindings.items()})


# -------------------
# Expressions
# -------------------


@dataclass(frozen=True)
class Lit:
    value: Value


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unop:
    op: str
    arg: "Expr"


@dataclass(frozen=True)
class Binop:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    fname: str
    args: Tuple["Expr", ...] = ()


Expr = Union[Lit, Var, Unop, Binop, Call]

TRUE = Lit(True)
FALSE = Lit(False)


def expr_vars(e: Expr) -> List[str]:
    if isinstance(e, Var):
        return [e.name]
    if isinstance(e, Unop):
        return expr_vars(e.arg)
    if isinstance(e, Binop):
        return expr_vars(e.left) + expr_vars(e.right)
    if isinstance(e, Call):
        out: List[str] = []
        for a in e.args:
            out.extend(expr_vars(a))
        return out
    return []


def is_number(v: object) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def same_value(a: Value, b: Value) -> bool:
    """Type-strict equality: ``true`` never equals ``1``."""
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if is_number(a) and is_number(b):
        return a == b
    return type(a) is type(b) and a == b


def format_value(v: Value) -> str:
    if v is Err:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return json.dumps(v)
    return repr(v)


def json_value(v: Value) -> object:
    """Value as it appears in JSON trace records (Err becomes null)."""
    return None if v is Err else v


# -------------------
# Function environment
# -------------------

WILDCARD = "_"


@dataclass(frozen=True)
class FunctionRule:
    fname: str
    patterns: Tuple[Union[Value, None], ...]  # None is the wildcard
    result: Value

    def matches(self, args: Sequence[Value]) -> bool:
        if len(args) != len(self.patterns):
            return False
        return all(p is None or same_value(p, a) for p, a in zip(self.patterns, args))


@dataclass(frozen=True)
class FunctionEnv:
    """Deterministic stub table for external calls; first matching rule wins."""

    rules: Tuple[FunctionRule, ...] = ()

    def call(self, fname: str, args: Sequence[Value]) -> Value:
        for rule in self.rules:
            if rule.fname == fname and rule.matches(args):
                return rule.result
        return Err

    def names(self) -> List[str]:
        return sorted({r.fname for r in self.rules})


EMPTY_ENV = FunctionEnv()


# -------------------
# Evaluation
# -------------------


def _arith(op: str, a: Value, b: Value) -> Value:
    if op == "+" and isinstance(a, str) and isinstance(b, str):
        return a + b
    if not (is_number(a) and is_number(b)):
        return Err
    x, y = a, b  # type: ignore[assignment]
    if op == "+":
        return x + y  # type: ignore[operator]
    if op == "-":
        return x - y  # type: ignore[operator]
    if op == "*":
        return x * y  # type: ignore[operator]
    if y == 0:
        return Err
    if op == "/":
        if isinstance(x, int) and isinstance(y, int):
            return x // y
        return x / y  # type: ignore[operator]
    if op == "%":
        return x % y  # type: ignore[operator]
    return Err


def _compare(op: str, a: Value, b: Value) -> Value:
    if op == "==":
        return same_value(a, b)
    if op == "!=":
        return not same_value(a, b)
    comparable = (is_number(a) and is_number(b)) or (isinstance(a, str) and isinstance(b, str))
    if not comparable:
        return Err
    if op == "<":
        return a < b  # type: ignore[operator]
    if op == "<=":
        return a <= b  # type: ignore[operator]
    if op == ">":
        return a > b  # type: ignore[operator]
    if op == ">=":
        return a >= b  # type: ignore[operator]
    return Err


def eval_expr(e: Expr, local: Optional[LocalState] = None, fns: FunctionEnv = EMPTY_ENV) -> Value:
    """Evaluate ``e`` against one role's local state. Total."""
    state = local if local is not None else EMPTY_LOCAL
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Var):
        v = state.get(e.name)
        return Err if v is None else v
    if isinstance(e, Unop):
        a = eval_expr(e.arg, state, fns)
        if e.op == "!":
            return (not a) if isinstance(a, bool) else Err
        if e.op == "-":
            return -a if is_number(a) else Err  # type: ignore[operator]
        return Err
    if isinstance(e, Binop):
        a = eval_expr(e.left, state, fns)
        b = eval_expr(e.right, state, fns)
        if e.op in ("and", "or"):
            if not (isinstance(a, bool) and isinstance(b, bool)):
                return Err
            return (a and b) if e.op == "and" else (a or b)
        if e.op in ("==", "!=", "<", "<=", ">", ">="):
            return _compare(e.op, a, b)
        return _arith(e.op, a, b)
    if isinstance(e, Call):
        return fns.call(e.fname, [eval_expr(a, state, fns) for a in e.args])
    return Err


def guard_holds(
    e: Expr,
    local: Optional[LocalState],
    fns: FunctionEnv = EMPTY_ENV,
    *,
    where: str = "",
    logger: Optional[logging.Logger] = None,
) -> bool:
    """Guards are booleans; anything else counts as false and is reported."""
    v = eval_expr(e, local, fns)
    if isinstance(v, bool):
        return v
    log = logger or logging.getLogger(__name__)
    log.warning("Guard %s evaluated to %s; taking the false branch", where or "?", format_value(v))
    return False


__all__ = [
    "EMPTY_ENV",
    "EMPTY_GLOBAL",
    "EMPTY_LOCAL",
    "Binop",
    "Call",
    "Err",
    "ErrValue",
    "Expr",
    "FALSE",
    "FrozenMap",
    "FunctionEnv",
    "FunctionRule",
    "GlobalState",
    "Lit",
    "LocalState",
    "OK",
    "TRUE",
    "Unop",
    "Value",
    "Var",
    "WILDCARD",
    "assign",
    "eval_expr",
    "expr_vars",
    "format_value",
    "global_state",
    "guard_holds",
    "is_number",
    "json_value",
    "local_view",
    "lookup",
    "same_value",
]
