"""Parsers for choreography programs, update files, process networks and stub tables.

Concrete syntax follows the running purchase example::

    priceReq : Buyer(prod) -> Seller(order);
    [7] order_price@Seller = getPrice(order);
    if (price_ok)@Buyer { ... } else { ... };
    scope @Seller { ... } prop { N.name = "offer" }

Explicit ``[n]`` prefixes set indexes; ``index_by_line=True`` uses source lines.
"""

from __future__ import annotations

import itertools
import json
import logging
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from choreo import dioc, dpoc
from choreo.connectedness import connected
from choreo.lexer import ChoreoSyntaxError, Token, TokenStream, tokenize
from choreo.printer import body_digest
from choreo.values import (
    Binop,
    Call,
    Err,
    Expr,
    FrozenMap,
    FunctionEnv,
    FunctionRule,
    Lit,
    Unop,
    Value,
    Var,
    format_value,
)

KEYWORDS = {
    "if", "else", "while", "scope", "prop", "true", "false", "null", "and", "or", "not",
    "include", "from", "with", "preamble", "aioc", "update", "target",
}

ENTRY_BLOCK = 10000


class UpdateRejected(ValueError):
    """An update body that may not enter a repository."""

    def __init__(self, name: str, reason: str):
        self.name = name
        self.reason = reason
        super().__init__(f"update {name!r} rejected: {reason}")


# -------------------
# Expressions
# -------------------

_CMP_OPS = ("==", "!=", "<=", ">=", "<", ">")


def parse_expr(ts: TokenStream) -> Expr:
    return _or_expr(ts)


def _or_expr(ts: TokenStream) -> Expr:
    left = _and_expr(ts)
    while ts.at("or") or ts.at("||"):
        ts.advance()
        left = Binop("or", left, _and_expr(ts))
    return left


def _and_expr(ts: TokenStream) -> Expr:
    left = _cmp_expr(ts)
    while ts.at("and") or ts.at("&&"):
        ts.advance()
        left = Binop("and", left, _cmp_expr(ts))
    return left


def _cmp_expr(ts: TokenStream) -> Expr:
    left = _add_expr(ts)
    tok = ts.current
    if tok.kind == "OP" and tok.text in _CMP_OPS:
        ts.advance()
        return Binop(tok.text, left, _add_expr(ts))
    return left


def _add_expr(ts: TokenStream) -> Expr:
    left = _mul_expr(ts)
    while ts.current.kind == "OP" and ts.current.text in ("+", "-"):
        op = ts.advance().text
        left = Binop(op, left, _mul_expr(ts))
    return left


def _mul_expr(ts: TokenStream) -> Expr:
    left = _unary(ts)
    while ts.current.kind == "OP" and ts.current.text in ("*", "/", "%"):
        op = ts.advance().text
        left = Binop(op, left, _unary(ts))
    return left


def _number(tok: Token, negate: bool = False) -> Lit:
    value: Value = float(tok.text) if tok.kind == "FLOAT" else int(tok.text)
    return Lit(-value if negate else value)  # type: ignore[operator]


def _unary(ts: TokenStream) -> Expr:
    if ts.at("!") or ts.at("not"):
        ts.advance()
        return Unop("!", _unary(ts))
    if ts.at("-"):
        ts.advance()
        if ts.current.kind in ("INT", "FLOAT"):
            return _number(ts.advance(), negate=True)
        return Unop("-", _unary(ts))
    return _primary(ts)


def _string(tok: Token, ts: TokenStream) -> str:
    try:
        return json.loads(tok.text)
    except ValueError:
        ts.fail("malformed string literal", tok)


def _primary(ts: TokenStream) -> Expr:
    tok = ts.current
    if tok.kind in ("INT", "FLOAT"):
        return _number(ts.advance())
    if tok.kind == "STRING":
        ts.advance()
        return Lit(_string(tok, ts))
    if tok.kind == "NAME":
        if tok.text == "true":
            ts.advance()
            return Lit(True)
        if tok.text == "false":
            ts.advance()
            return Lit(False)
        if tok.text == "null":
            ts.advance()
            return Lit(Err)
        if tok.text in KEYWORDS:
            ts.fail(f"unexpected keyword {tok.text!r} in expression")
        ts.advance()
        if ts.accept("("):
            args: List[Expr] = []
            if not ts.at(")"):
                args.append(parse_expr(ts))
                while ts.accept(","):
                    args.append(parse_expr(ts))
            ts.expect(")")
            return Call(tok.text, tuple(args))
        return Var(tok.text)
    if ts.accept("("):
        inner = parse_expr(ts)
        ts.expect(")")
        return inner
    ts.fail(f"expected an expression, found {ts.describe(tok)}")


def _literal(ts: TokenStream) -> Value:
    e = _unary(ts)
    if not isinstance(e, Lit):
        ts.fail("expected a literal")
    return e.value


# -------------------
# Choreographies
# -------------------


@dataclass(frozen=True)
class Program:
    proc: dioc.DiocProc
    declared_roles: Tuple[str, ...] = ()
    path: Optional[str] = None


class _DiocParser:
    def __init__(self, ts: TokenStream, *, index_by_line: bool, reserve_aux: bool = True):
        self.ts = ts
        self.index_by_line = index_by_line
        self.reserve_aux = reserve_aux

    def name(self, what: str) -> str:
        tok = self.ts.expect_kind("NAME", what)
        if tok.text in KEYWORDS:
            self.ts.fail(f"keyword {tok.text!r} cannot be used as {what}", tok)
        if self.reserve_aux and tok.text.startswith(dpoc.AUX_PREFIX):
            self.ts.fail(f"names starting with {dpoc.AUX_PREFIX!r} are reserved", tok)
        return tok.text

    def at_chor_end(self) -> bool:
        return self.ts.at("}") or self.ts.current.kind == "EOF"

    def chor(self) -> dioc.DiocProc:
        if self.at_chor_end():
            return dioc.SKIP
        items = [self.par()]
        while self.ts.accept(";"):
            if self.at_chor_end():
                break
            items.append(self.par())
        return dioc.seq(*items)

    def par(self) -> dioc.DiocProc:
        items = [self.stmt()]
        while self.ts.accept("|"):
            items.append(self.stmt())
        out = items[-1]
        for item in reversed(items[:-1]):
            out = dioc.Par(item, out)
        return out

    def block(self) -> dioc.DiocProc:
        self.ts.expect("{")
        body = self.chor()
        self.ts.expect("}")
        return body

    def stmt(self) -> dioc.DiocProc:
        ts = self.ts
        explicit = 0
        if ts.accept("["):
            explicit = int(ts.expect_kind("INT", "index").text)
            if explicit <= 0:
                ts.fail("indexes are positive")
            ts.expect("]")
        tok = ts.current
        idx = explicit or (tok.line if self.index_by_line else 0)
        if not explicit:
            if ts.at("{"):
                return self.block()
            if tok.kind == "INT" and tok.text in ("0", "1"):
                ts.advance()
                return dioc.SKIP if tok.text == "1" else dioc.END
        if ts.accept("if"):
            guard = parse_expr(ts)
            ts.expect("@")
            role = self.name("role")
            then = self.block()
            else_ = self.block() if ts.accept("else") else dioc.SKIP
            return dioc.If(idx, guard, role, then, else_)
        if ts.accept("while"):
            guard = parse_expr(ts)
            ts.expect("@")
            role = self.name("role")
            return dioc.While(idx, guard, role, self.block())
        if ts.accept("scope"):
            ts.expect("@")
            role = self.name("role")
            body = self.block()
            props: Tuple[Tuple[str, str], ...] = ()
            if ts.accept("prop"):
                props = self.props()
            return dioc.Scope(idx, role, body, props)
        if tok.kind != "NAME":
            ts.fail(f"expected a statement, found {ts.describe(tok)}")
        nxt = ts.peek()
        if nxt.text == ":":
            op = self.name("operation")
            ts.expect(":")
            sender = self.name("role")
            ts.expect("(")
            expr = parse_expr(ts)
            ts.expect(")")
            ts.expect("->")
            receiver = self.name("role")
            ts.expect("(")
            var = self.name("variable")
            ts.expect(")")
            if sender == receiver:
                ts.fail(f"interaction {op!r} has the same sender and receiver", tok)
            return dioc.Interaction(idx, op, sender, expr, receiver, var)
        if nxt.text == "@":
            var = self.name("variable")
            ts.expect("@")
            role = self.name("role")
            ts.expect("=")
            return dioc.Assign(idx, var, role, parse_expr(ts))
        ts.fail(f"expected ':' or '@' after {tok.text!r}", nxt)

    def props(self) -> Tuple[Tuple[str, str], ...]:
        ts = self.ts
        ts.expect("{")
        out: Dict[str, str] = {}
        while not ts.at("}"):
            holder = ts.expect_kind("NAME", "property holder")
            if holder.text != "N":
                ts.fail("properties are written N.<key>", holder)
            ts.expect(".")
            key = ts.expect_kind("NAME", "property key").text
            ts.expect("=")
            value = _literal(ts)
            out[key] = value if isinstance(value, str) else format_value(value)
            if not ts.accept(","):
                break
        ts.expect("}")
        return tuple(sorted(out.items()))

    def preamble(self) -> List[str]:
        ts = self.ts
        declared: List[str] = []
        ts.expect("{")
        while not ts.at("}"):
            if ts.accept("starter"):
                ts.expect(":")
                declared.append(self.name("role"))
            elif ts.accept("location"):
                ts.expect("@")
                declared.append(self.name("role"))
                ts.expect(":")
                ts.expect_kind("STRING", "location")
            else:
                ts.fail(f"unexpected {ts.describe(ts.current)} in preamble")
            ts.accept(",")
        ts.expect("}")
        return declared

    def include(self) -> None:
        ts = self.ts
        ts.expect_kind("NAME", "function name")
        while ts.accept(","):
            ts.expect_kind("NAME", "function name")
        ts.expect("from")
        ts.expect_kind("STRING", "service location")
        if ts.accept("with"):
            ts.expect_kind("STRING", "protocol")

    def program(self) -> Tuple[dioc.DiocProc, List[str]]:
        ts = self.ts
        while ts.accept("include"):
            self.include()
        declared: List[str] = []
        if ts.accept("preamble"):
            declared = self.preamble()
        if ts.at("aioc") and ts.peek().text == "{":
            ts.advance()
            proc = self.block()
        else:
            proc = self.chor()
        if ts.current.kind != "EOF":
            ts.fail(f"unexpected {ts.describe(ts.current)}")
        return proc, declared


def parse_program(text: str, path: Optional[str] = None, *, index_by_line: bool = False) -> Program:
    ts = TokenStream(tokenize(text, path), path)
    proc, declared = _DiocParser(ts, index_by_line=index_by_line).program()
    return Program(proc=proc, declared_roles=tuple(dict.fromkeys(declared)), path=path)


def parse_dioc(text: str, path: Optional[str] = None, *, index_by_line: bool = False) -> dioc.DiocProc:
    return parse_program(text, path, index_by_line=index_by_line).proc


def load_program(path: str, *, index_by_line: bool = False) -> Program:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise RuntimeError(f"cannot read program {path}: {exc}") from exc
    return parse_program(text, path, index_by_line=index_by_line)


def annotate(p: dioc.DiocProc, start: int = 1) -> dioc.DiocProc:
    """Number indexed constructs in pre-order from ``start``."""
    counter = itertools.count(start)

    def go(node: dioc.DiocProc) -> dioc.DiocProc:
        if isinstance(node, (dioc.Interaction, dioc.Assign)):
            return replace(node, idx=next(counter))
        if isinstance(node, dioc.Seq):
            return dioc.Seq(go(node.left), go(node.right))
        if isinstance(node, dioc.Par):
            return dioc.Par(go(node.left), go(node.right))
        if isinstance(node, dioc.If):
            i = next(counter)
            return replace(node, idx=i, then=go(node.then), else_=go(node.else_))
        if isinstance(node, (dioc.While, dioc.Scope)):
            i = next(counter)
            return replace(node, idx=i, body=go(node.body))
        return node

    return go(p)


def ensure_annotated(p: dioc.DiocProc) -> dioc.DiocProc:
    """Keep a complete, distinct annotation; otherwise renumber from 1."""
    return p if dioc.well_annotated(p).ok else annotate(p)


# -------------------
# Update files
# -------------------


def make_entry(name: str, body: dioc.DiocProc, target: Optional[str] = None) -> dioc.UpdateEntry:
    """Validate an annotated update body and wrap it for a repository."""
    if not dioc.is_initial(body):
        raise UpdateRejected(name, "body contains 0")
    report = connected(body)
    if not report.ok:
        raise UpdateRejected(name, f"not connected: {report.describe()}")
    return dioc.UpdateEntry(name=name, body=body, digest=body_digest(body), target=target, connected=True)


def parse_updates(
    text: str,
    path: Optional[str] = None,
    *,
    first_entry: int = 1,
    logger: Optional[logging.Logger] = None,
) -> dioc.UpdateRepo:
    """Parse ``update NAME [target SCOPE] { chor }`` blocks; entry k is numbered from 10000*k."""
    log = logger or logging.getLogger(__name__)
    ts = TokenStream(tokenize(text, path), path)
    parser = _DiocParser(ts, index_by_line=False)
    entries: List[dioc.UpdateEntry] = []
    seen: Dict[str, Token] = {}
    k = first_entry
    while ts.current.kind != "EOF":
        start = ts.expect("update")
        name = parser.name("update name")
        if name in seen:
            ts.fail(f"duplicate update name {name!r}", start)
        seen[name] = start
        target = parser.name("scope name") if ts.accept("target") else None
        body = annotate(parser.block(), start=ENTRY_BLOCK * k)
        entries.append(make_entry(name, body, target))
        log.debug("Loaded update %s (%d constructs)", name, len(dioc.indexed(body)))
        k += 1
    return dioc.UpdateRepo(tuple(entries))


def load_updates(paths: Sequence[str], *, logger: Optional[logging.Logger] = None) -> dioc.UpdateRepo:
    """Load ``.upd`` files (directories expand to their sorted ``*.upd`` files) into one repository."""
    files: List[str] = []
    for p in paths:
        if os.path.isdir(p):
            files.extend(sorted(str(f) for f in Path(p).glob("*.upd")))
        else:
            files.append(p)
    entries: List[dioc.UpdateEntry] = []
    for f in files:
        try:
            text = Path(f).read_text(encoding="utf-8")
        except OSError as exc:
            raise RuntimeError(f"cannot read updates {f}: {exc}") from exc
        repo = parse_updates(text, f, first_entry=len(entries) + 1, logger=logger)
        for e in repo:
            if any(prev.name == e.name for prev in entries):
                raise UpdateRejected(e.name, f"name already defined before {f}")
            entries.append(e)
    return dioc.UpdateRepo(tuple(entries))


# -------------------
# Process networks
# -------------------

_VARIANTS = {v.value: v for v in dpoc.IndexVariant if v is not dpoc.IndexVariant.PLAIN}
_AUX_KINDS = {k.value: k for k in dpoc.AuxKind}


class _DpocParser:
    def __init__(self, ts: TokenStream):
        self.ts = ts

    def at_end(self) -> bool:
        return self.ts.at("}") or self.ts.at("end") or self.ts.current.kind == "EOF"

    def proc(self) -> dpoc.DpocProc:
        if self.at_end():
            return dpoc.SKIP
        items = [self.par()]
        while self.ts.accept(";"):
            if self.at_end():
                break
            items.append(self.par())
        return dpoc.seq(*items)

    def par(self) -> dpoc.DpocProc:
        items = [self.stmt()]
        while self.ts.accept("|"):
            items.append(self.stmt())
        return dpoc.product(items)

    def block(self) -> dpoc.DpocProc:
        self.ts.expect("{")
        body = self.proc()
        self.ts.expect("}")
        return body

    def index(self) -> dpoc.DpocIndex:
        ts = self.ts
        base = int(ts.expect_kind("INT", "index").text)
        variant = dpoc.IndexVariant.PLAIN
        if ts.accept("?"):
            tok = ts.expect_kind("NAME", "index variant")
            if tok.text not in _VARIANTS:
                ts.fail(f"unknown index variant {tok.text!r}", tok)
            variant = _VARIANTS[tok.text]
        return dpoc.DpocIndex(base, variant)

    def opname(self) -> dpoc.OpName:
        ts = self.ts
        prefix = int(ts.expect_kind("INT", "operation prefix").text)
        ts.expect(".")
        name = ts.expect_kind("NAME", "operation").text
        if ts.accept("*"):
            owner_tok = ts.expect_kind("NAME", "auxiliary owner")
            if name not in _AUX_KINDS or not owner_tok.text[1:].isdigit():
                ts.fail(f"malformed auxiliary operation {name}*{owner_tok.text}", owner_tok)
            return dpoc.OpName(prefix=prefix, name=name, aux=_AUX_KINDS[name], owner=int(owner_tok.text[1:]))
        return dpoc.OpName(prefix=prefix, name=name)

    def roles_list(self) -> Tuple[str, ...]:
        ts = self.ts
        ts.expect("{")
        out: List[str] = []
        while not ts.at("}"):
            out.append(ts.expect_kind("NAME", "role").text)
            if not ts.accept(","):
                break
        ts.expect("}")
        return tuple(sorted(out))

    def stmt(self) -> dpoc.DpocProc:
        ts = self.ts
        tok = ts.current
        if ts.at("{"):
            return self.block()
        if tok.kind == "INT" and tok.text in ("0", "1"):
            ts.advance()
            return dpoc.SKIP if tok.text == "1" else dpoc.END
        ts.expect("[")
        idx = self.index()
        ts.expect("]")
        if ts.accept("if"):
            guard = parse_expr(ts)
            then = self.block()
            else_ = self.block() if ts.accept("else") else dpoc.SKIP
            return dpoc.If(idx, guard, then, else_)
        if ts.accept("while"):
            guard = parse_expr(ts)
            return dpoc.While(idx, guard, self.block())
        if ts.accept("scope"):
            ts.expect("@")
            lead = ts.expect_kind("NAME", "role").text
            body = self.block()
            if ts.accept("roles"):
                roleset = self.roles_list()
                props: Tuple[Tuple[str, str], ...] = ()
                if ts.accept("prop"):
                    props = _DiocParser(ts, index_by_line=False, reserve_aux=False).props()
                return dpoc.ScopeCoord(idx, lead, body, roleset, props)
            return dpoc.ScopeSimple(idx, lead, body)
        if ts.current.kind == "INT":
            op = self.opname()
            ts.expect(":")
            if op.aux is dpoc.AuxKind.SB:
                if ts.accept("no"):
                    payload: Optional[dpoc.DpocProc] = None
                else:
                    ts.expect("code")
                    payload = self.block()
                ts.expect("to")
                return dpoc.SendUpdate(idx, op, payload, ts.expect_kind("NAME", "role").text)
            expr = parse_expr(ts)
            if ts.accept("from"):
                if not isinstance(expr, Var):
                    ts.fail("a receive stores into a variable")
                return dpoc.Recv(idx, op, expr.name, ts.expect_kind("NAME", "role").text)
            ts.expect("to")
            return dpoc.Send(idx, op, expr, ts.expect_kind("NAME", "role").text)
        var = ts.expect_kind("NAME", "variable").text
        ts.expect("=")
        return dpoc.Assign(idx, var, parse_expr(ts))


def parse_dpoc(text: str, path: Optional[str] = None) -> dpoc.DpocProc:
    ts = TokenStream(tokenize(text, path), path)
    proc = _DpocParser(ts).proc()
    if ts.current.kind != "EOF":
        ts.fail(f"unexpected {ts.describe(ts.current)}")
    return proc


def parse_network(text: str, path: Optional[str] = None) -> dpoc.Network:
    """``role R [{x = v, ...}] : proc end`` blocks."""
    ts = TokenStream(tokenize(text, path), path)
    parser = _DpocParser(ts)
    entries: Dict[str, dpoc.RoleState] = {}
    while ts.current.kind != "EOF":
        ts.expect("role")
        tok = ts.expect_kind("NAME", "role")
        if tok.text in entries:
            ts.fail(f"role {tok.text!r} defined twice", tok)
        bindings: Dict[str, Value] = {}
        if ts.accept("{"):
            while not ts.at("}"):
                var = ts.expect_kind("NAME", "variable").text
                ts.expect("=")
                bindings[var] = _literal(ts)
                if not ts.accept(","):
                    break
            ts.expect("}")
        ts.expect(":")
        proc = parser.proc()
        ts.expect("end")
        entries[tok.text] = dpoc.RoleState(proc, FrozenMap.of(bindings))
    return dpoc.Network.of(entries)


def load_network(path: str) -> dpoc.Network:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise RuntimeError(f"cannot read network {path}: {exc}") from exc
    return parse_network(text, path)


# -------------------
# Function tables
# -------------------


def parse_fns(text: str, path: Optional[str] = None) -> FunctionEnv:
    """``fname(p1, ..., pn) = literal`` rules; ``_`` is a wildcard pattern."""
    ts = TokenStream(tokenize(text, path), path)
    rules: List[FunctionRule] = []
    while ts.current.kind != "EOF":
        fname = ts.expect_kind("NAME", "function name").text
        ts.expect("(")
        patterns: List[Optional[Value]] = []
        while not ts.at(")"):
            if ts.current.kind == "NAME" and ts.current.text == "_":
                ts.advance()
                patterns.append(None)
            else:
                patterns.append(_literal(ts))
            if not ts.accept(","):
                break
        ts.expect(")")
        ts.expect("=")
        rules.append(FunctionRule(fname, tuple(patterns), _literal(ts)))
        ts.accept(";")
    return FunctionEnv(tuple(rules))


def load_fns(path: Optional[str]) -> FunctionEnv:
    if not path:
        return FunctionEnv()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise RuntimeError(f"cannot read function table {path}: {exc}") from exc
    return parse_fns(text, path)


__all__ = [
    "ChoreoSyntaxError",
    "ENTRY_BLOCK",
    "Program",
    "UpdateRejected",
    "annotate",
    "ensure_annotated",
    "load_fns",
    "load_network",
    "load_program",
    "load_updates",
    "make_entry",
    "parse_dioc",
    "parse_dpoc",
    "parse_expr",
    "parse_fns",
    "parse_network",
    "parse_program",
    "parse_updates",
]
