"""Pretty printers.

Three renderings are offered:

* ``pretty_dioc`` prints choreographies in the source syntax; parsing the
  output gives back the same tree, indexes included.
* ``full_dpoc`` / ``pretty_network`` print role processes in the ``.dpocnet``
  syntax, also parseable.
* ``display_dpoc`` is the human-facing layout used for projected files:
  1 leaves elided, operation prefixes hidden, auxiliary lines starred.
"""

from __future__ import annotations

from typing import Callable, List, Tuple, Type

from choreo import dioc, dpoc
from choreo.labels import short_digest
from choreo.values import OK, Binop, Call, Expr, Lit, Unop, Var, format_value

INDENT = "  "

# -------------------
# Expressions
# -------------------

_PREC = {"or": 1, "and": 2, "==": 3, "!=": 3, "<": 3, "<=": 3, ">": 3, ">=": 3, "+": 4, "-": 4, "*": 5, "/": 5, "%": 5}
_UNARY = 6
_ATOM = 7


def _display_name(name: str) -> str:
    return name[len(dpoc.AUX_PREFIX):] if name.startswith(dpoc.AUX_PREFIX) else name


def _expr(e: Expr, display: bool) -> Tuple[str, int]:
    if isinstance(e, Lit):
        text = format_value(e.value)
        return text, (_UNARY if text.startswith("-") else _ATOM)
    if isinstance(e, Var):
        return (_display_name(e.name) if display else e.name), _ATOM
    if isinstance(e, Call):
        return f"{e.fname}({', '.join(_expr(a, display)[0] for a in e.args)})", _ATOM
    if isinstance(e, Unop):
        inner, p = _expr(e.arg, display)
        if e.op == "-":
            return f"-({inner})", _UNARY
        return (f"!{inner}" if p >= _UNARY else f"!({inner})"), _UNARY
    if isinstance(e, Binop):
        prec = _PREC.get(e.op, 0)
        left, lp = _expr(e.left, display)
        right, rp = _expr(e.right, display)
        if lp < prec or (prec == 3 and lp <= prec):
            left = f"({left})"
        if rp <= prec:
            right = f"({right})"
        return f"{left} {e.op} {right}", prec
    return "?", _ATOM


def format_expr(e: Expr, *, display: bool = False) -> str:
    return _expr(e, display)[0]


# -------------------
# Shared layout
# -------------------

StmtFn = Callable[[object, int], List[str]]


def _pad(ind: int) -> str:
    return INDENT * ind


def _spine(p: object, cls: Type) -> List[object]:
    items: List[object] = []
    node = p
    while isinstance(node, cls):
        items.append(node.left)  # type: ignore[attr-defined]
        node = node.right  # type: ignore[attr-defined]
    items.append(node)
    return items


class _Layout:
    """Structure-preserving layout: left-nested compositions get braces."""

    def __init__(self, seq_cls: Type, par_cls: Type, stmt: StmtFn):
        self.seq_cls = seq_cls
        self.par_cls = par_cls
        self.stmt = stmt

    def braced(self, p: object, ind: int) -> List[str]:
        return [_pad(ind) + "{"] + self.chor(p, ind + 1) + [_pad(ind) + "}"]

    def chor(self, p: object, ind: int) -> List[str]:
        if isinstance(p, self.par_cls):
            return self.par(p, ind)
        items = _spine(p, self.seq_cls)
        lines: List[str] = []
        for k, item in enumerate(items):
            if isinstance(item, (self.seq_cls, self.par_cls)) and len(items) > 1:
                chunk = self.braced(item, ind)
            else:
                chunk = self.stmt(item, ind)
            if k < len(items) - 1:
                chunk[-1] += ";"
            lines.extend(chunk)
        return lines

    def par(self, p: object, ind: int) -> List[str]:
        lines: List[str] = []
        for k, operand in enumerate(_spine(p, self.par_cls)):
            if k:
                lines.append(_pad(ind) + "|")
            if isinstance(operand, (self.seq_cls, self.par_cls)):
                lines.extend(self.braced(operand, ind))
            else:
                lines.extend(self.stmt(operand, ind))
        return lines

    def block(self, header: str, body: object, ind: int, footer: str = "}") -> List[str]:
        return [_pad(ind) + header + " {"] + self.chor(body, ind + 1) + [_pad(ind) + footer]


# -------------------
# Choreographies
# -------------------


def _dioc_stmt(p: object, ind: int) -> List[str]:
    pad = _pad(ind)
    pfx = f"[{p.idx}] " if getattr(p, "idx", 0) else ""  # type: ignore[attr-defined]
    if isinstance(p, dioc.Interaction):
        return [f"{pad}{pfx}{p.op} : {p.sender}({format_expr(p.expr)}) -> {p.receiver}({p.var})"]
    if isinstance(p, dioc.Assign):
        return [f"{pad}{pfx}{p.var}@{p.role} = {format_expr(p.expr)}"]
    if isinstance(p, dioc.Skip):
        return [pad + "1"]
    if isinstance(p, dioc.End):
        return [pad + "0"]
    if isinstance(p, dioc.If):
        header = f"{pfx}if ({format_expr(p.guard)})@{p.role}"
        if isinstance(p.else_, dioc.Skip):
            return _DIOC.block(header, p.then, ind)
        return _DIOC.block(header, p.then, ind, "} else {") + _DIOC.chor(p.else_, ind + 1) + [pad + "}"]
    if isinstance(p, dioc.While):
        return _DIOC.block(f"{pfx}while ({format_expr(p.guard)})@{p.role}", p.body, ind)
    if isinstance(p, dioc.Scope):
        footer = "}"
        if p.props:
            footer += " prop { " + ", ".join(f"N.{k} = {format_value(v)}" for k, v in p.props) + " }"
        return _DIOC.block(f"{pfx}scope @{p.role}", p.body, ind, footer)
    return _DIOC.braced(p, ind)


_DIOC = _Layout(dioc.Seq, dioc.Par, _dioc_stmt)


def pretty_dioc(p: dioc.DiocProc) -> str:
    return "\n".join(_DIOC.chor(p, 0))


def body_digest(body: dioc.DiocProc) -> str:
    """Identity of an update body, independent of where it was numbered."""
    return short_digest(pretty_dioc(dioc.strip_indexes(body)))


# -------------------
# Role processes, parseable form
# -------------------


def _full_stmt(p: object, ind: int) -> List[str]:
    pad = _pad(ind)
    if isinstance(p, dpoc.Skip):
        return [pad + "1"]
    if isinstance(p, dpoc.End):
        return [pad + "0"]
    pfx = f"[{p.idx}] "  # type: ignore[attr-defined]
    if isinstance(p, dpoc.Send):
        return [f"{pad}{pfx}{p.op.full()} : {format_expr(p.expr)} to {p.to}"]
    if isinstance(p, dpoc.Recv):
        return [f"{pad}{pfx}{p.op.full()} : {p.var} from {p.sender}"]
    if isinstance(p, dpoc.SendUpdate):
        if p.payload is None:
            return [f"{pad}{pfx}{p.op.full()} : no to {p.to}"]
        return _FULL.block(f"{pfx}{p.op.full()} : code", p.payload, ind, f"}} to {p.to}")
    if isinstance(p, dpoc.Assign):
        return [f"{pad}{pfx}{p.var} = {format_expr(p.expr)}"]
    if isinstance(p, dpoc.If):
        header = f"{pfx}if ({format_expr(p.guard)})"
        if isinstance(p.else_, dpoc.Skip):
            return _FULL.block(header, p.then, ind)
        return _FULL.block(header, p.then, ind, "} else {") + _FULL.chor(p.else_, ind + 1) + [pad + "}"]
    if isinstance(p, dpoc.While):
        return _FULL.block(f"{pfx}while ({format_expr(p.guard)})", p.body, ind)
    if isinstance(p, dpoc.ScopeCoord):
        footer = "} roles {" + ", ".join(p.roleset) + "}"
        if p.props:
            footer += " prop { " + ", ".join(f"N.{k} = {format_value(v)}" for k, v in p.props) + " }"
        return _FULL.block(f"{pfx}scope @{p.lead}", p.body, ind, footer)
    if isinstance(p, dpoc.ScopeSimple):
        return _FULL.block(f"{pfx}scope @{p.lead}", p.body, ind)
    return _FULL.braced(p, ind)


_FULL = _Layout(dpoc.Seq, dpoc.Par, _full_stmt)


def full_dpoc(p: dpoc.DpocProc, indent: int = 0) -> str:
    return "\n".join(_FULL.chor(p, indent))


def pretty_network(net: dpoc.Network) -> str:
    blocks: List[str] = []
    for role, st in net.items():
        header = f"role {role}"
        if len(st.local):
            header += " { " + ", ".join(f"{k} = {format_value(v)}" for k, v in st.local.items) + " }"
        blocks.append(f"{header}:\n{full_dpoc(st.proc, 1)}\nend")
    return "\n\n".join(blocks)


# -------------------
# Role processes, display form
# -------------------


def elide(p: dpoc.DpocProc) -> dpoc.DpocProc:
    """Drop 1 leaves from sequences and parallels, recursively."""
    if isinstance(p, (dpoc.Seq, dpoc.Par)):
        left, right = elide(p.left), elide(p.right)
        if isinstance(left, dpoc.Skip):
            return right
        if isinstance(right, dpoc.Skip):
            return left
        return type(p)(left, right)
    if isinstance(p, dpoc.If):
        return dpoc.If(p.idx, p.guard, elide(p.then), elide(p.else_))
    if isinstance(p, dpoc.While):
        return dpoc.While(p.idx, p.guard, elide(p.body))
    if isinstance(p, dpoc.ScopeCoord):
        return dpoc.ScopeCoord(p.idx, p.lead, elide(p.body), p.roleset, p.props)
    if isinstance(p, dpoc.ScopeSimple):
        return dpoc.ScopeSimple(p.idx, p.lead, elide(p.body))
    if isinstance(p, dpoc.SendUpdate) and p.payload is not None:
        return dpoc.SendUpdate(p.idx, p.op, elide(p.payload), p.to)
    return p


def _flatten(p: object, cls: Type) -> List[object]:
    if isinstance(p, cls):
        return _flatten(p.left, cls) + _flatten(p.right, cls)  # type: ignore[attr-defined]
    return [p]


def _disp_block(p: object, ind: int) -> List[str]:
    items = _flatten(p, dpoc.Seq)
    lines: List[str] = []
    for k, item in enumerate(items):
        if isinstance(item, dpoc.Par):
            if len(items) > 1:
                chunk = [_pad(ind) + "{"] + _disp_par(item, ind + 1) + [_pad(ind) + "}"]
            else:
                chunk = _disp_par(item, ind)
        else:
            chunk = _disp_stmt(item, ind)
        if k < len(items) - 1:
            chunk[-1] += ";"
        lines.extend(chunk)
    return lines


def _disp_par(p: object, ind: int) -> List[str]:
    lines: List[str] = []
    for k, operand in enumerate(_flatten(p, dpoc.Par)):
        if k:
            lines.append(_pad(ind) + "|")
        if isinstance(operand, dpoc.Seq):
            lines.extend([_pad(ind) + "{"] + _disp_block(operand, ind + 1) + [_pad(ind) + "}"])
        else:
            lines.extend(_disp_stmt(operand, ind))
    return lines


def _disp_wrap(header: str, body: object, ind: int, footer: str = "}") -> List[str]:
    return [_pad(ind) + header + " {"] + _disp_block(body, ind + 1) + [_pad(ind) + footer]


def _disp_payload(e: Expr, op: dpoc.OpName) -> str:
    if op.aux in (dpoc.AuxKind.SE, dpoc.AuxKind.WE) and e == Lit(OK):
        return "ok"
    return format_expr(e, display=True)


def _disp_stmt(p: object, ind: int) -> List[str]:
    pad = _pad(ind)
    if isinstance(p, dpoc.Skip):
        return [pad + "1"]
    if isinstance(p, dpoc.End):
        return [pad + "0"]
    pfx = f"[{p.idx}] "  # type: ignore[attr-defined]
    if isinstance(p, dpoc.Send):
        mark = "* " if p.op.is_aux else ""
        return [f"{pad}{mark}{pfx}{p.op.display()} : {_disp_payload(p.expr, p.op)} to {p.to}"]
    if isinstance(p, dpoc.Recv):
        mark = "* " if p.op.is_aux else ""
        return [f"{pad}{mark}{pfx}{p.op.display()} : {_display_name(p.var)} from {p.sender}"]
    if isinstance(p, dpoc.SendUpdate):
        if p.payload is None:
            return [f"{pad}* {pfx}{p.op.display()} : no to {p.to}"]
        return _disp_wrap(f"* {pfx}{p.op.display()} : code", p.payload, ind, f"}} to {p.to}")
    if isinstance(p, dpoc.Assign):
        return [f"{pad}{pfx}{_display_name(p.var)} = {format_expr(p.expr, display=True)}"]
    if isinstance(p, dpoc.If):
        header = f"{pfx}if ({format_expr(p.guard, display=True)})"
        if isinstance(p.else_, dpoc.Skip):
            return _disp_wrap(header, p.then, ind)
        return _disp_wrap(header, p.then, ind, "} else {") + _disp_block(p.else_, ind + 1) + [pad + "}"]
    if isinstance(p, dpoc.While):
        return _disp_wrap(f"{pfx}while ({format_expr(p.guard, display=True)})", p.body, ind)
    if isinstance(p, dpoc.ScopeCoord):
        return _disp_wrap(f"{pfx}scope @{p.lead}", p.body, ind, "} roles {" + ", ".join(p.roleset) + "}")
    if isinstance(p, dpoc.ScopeSimple):
        return _disp_wrap(f"{pfx}scope @{p.lead}", p.body, ind)
    return _disp_block(p, ind)


def display_dpoc(p: dpoc.DpocProc) -> str:
    return "\n".join(_disp_block(elide(p), 0))


_DIOC_TYPES = (
    dioc.Interaction, dioc.Assign, dioc.Seq, dioc.Par, dioc.Skip, dioc.End, dioc.If, dioc.While, dioc.Scope,
)


def pretty(p: object) -> str:
    """Source form for choreographies, display form for role processes."""
    if isinstance(p, _DIOC_TYPES):
        return pretty_dioc(p)  # type: ignore[arg-type]
    return display_dpoc(p)  # type: ignore[arg-type]


__all__ = [
    "body_digest",
    "display_dpoc",
    "elide",
    "format_expr",
    "full_dpoc",
    "pretty",
    "pretty_dioc",
    "pretty_network",
]
