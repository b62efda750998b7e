"""Random choreographies, shrinking and fault injection for property tests.

Generated programs are a pure function of the configuration and the seed.
They are annotated from 1, every loop is bounded by a counter it owns and
guards only read variables that are certainly assigned at their role, so
runs neither diverge nor evaluate unset variables. With ``repair`` on, a
sequence whose sides share no role is bridged by located actions.
"""

from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, FrozenSet, List, Optional, Tuple

from choreo import dioc, dpoc
from choreo.connectedness import FrontierSet, pairsets_all_intersect, trans_f, trans_i
from choreo.parser import annotate
from choreo.values import Binop, Expr, Lit, Var

CORPUS_DIR = Path(__file__).resolve().parent.parent / "corpus"

CONSTRUCTS = ("interaction", "assign", "seq", "par", "if", "while", "scope")

FAULTS = ("drop-receive", "stray-send", "dup-send")


def _default_weights() -> Dict[str, int]:
    return {"interaction": 4, "assign": 2, "seq": 3, "par": 1, "if": 1, "while": 1, "scope": 1}


@dataclass
class GeneratorConfig:
    max_depth: int = 3
    roles: int = 2
    values: int = 3
    variables: int = 2
    max_seq: int = 3
    loop_bound: int = 2
    weights: Dict[str, int] = field(default_factory=_default_weights)
    repair: bool = True

    def role_names(self) -> List[str]:
        return [chr(ord("A") + i) for i in range(self.roles)]

    def var_names(self) -> List[str]:
        return ["xyzuvw"[i % 6] + ("" if i < 6 else str(i // 6)) for i in range(self.variables)]


Defined = FrozenSet[Tuple[str, str]]


class _Generator:
    def __init__(self, cfg: GeneratorConfig, seed: int):
        if cfg.roles < 1:
            raise ValueError("generator needs at least one role")
        self.cfg = cfg
        self.rng = random.Random(seed)
        self.roles = cfg.role_names()
        self.vars = cfg.var_names()
        self.ops = itertools.count(1)
        self.loops = itertools.count(1)
        kinds = [k for k in CONSTRUCTS if cfg.weights.get(k, 0) > 0]
        self.kinds = kinds or ["assign"]
        self.kind_weights = [cfg.weights.get(k, 1) for k in self.kinds]

    # -------------------
    # Leaves
    # -------------------

    def value(self) -> Lit:
        return Lit(self.rng.randrange(max(1, self.cfg.values)))

    def expr(self, role: str, defined: Defined) -> Expr:
        known = sorted(v for r, v in defined if r == role)
        if known and self.rng.random() < 0.5:
            return Binop("+", Var(self.rng.choice(known)), self.value())
        return self.value()

    def guard(self, role: str, defined: Defined) -> Expr:
        known = sorted(v for r, v in defined if r == role)
        bound = self.value()
        if known:
            return Binop("<", Var(self.rng.choice(known)), bound)
        return Binop("<", self.value(), bound)

    def interaction(self, defined: Defined) -> Tuple[dioc.DiocProc, Defined]:
        if len(self.roles) < 2:
            return self.assign(defined)
        sender, receiver = self.rng.sample(self.roles, 2)
        var = self.rng.choice(self.vars)
        node = dioc.Interaction(0, f"o{next(self.ops)}", sender, self.expr(sender, defined), receiver, var)
        return node, defined | {(receiver, var)}

    def assign(self, defined: Defined) -> Tuple[dioc.DiocProc, Defined]:
        role = self.rng.choice(self.roles)
        var = self.rng.choice(self.vars)
        return dioc.Assign(0, var, role, self.expr(role, defined)), defined | {(role, var)}

    # -------------------
    # Composites
    # -------------------

    def gen(self, depth: int, defined: Defined) -> Tuple[dioc.DiocProc, Defined]:
        if depth <= 1:
            kind = "interaction" if self.rng.random() < 0.7 else "assign"
        else:
            kind = self.rng.choices(self.kinds, weights=self.kind_weights)[0]
        if kind == "interaction":
            return self.interaction(defined)
        if kind == "assign":
            return self.assign(defined)
        if kind == "seq":
            items: List[dioc.DiocProc] = []
            for _ in range(self.rng.randint(2, max(2, self.cfg.max_seq))):
                item, defined = self.gen(depth - 1, defined)
                items.append(item)
            return self.link_all(items), defined
        if kind == "par":
            left, dl = self.gen(depth - 1, defined)
            right, dr = self.gen(depth - 1, defined)
            return dioc.Par(left, right), dl | dr
        role = self.rng.choice(self.roles)
        if kind == "if":
            then, _ = self.gen(depth - 1, defined)
            else_ = self.gen(depth - 1, defined)[0] if self.rng.random() < 0.6 else dioc.SKIP
            return dioc.If(0, self.guard(role, defined), role, then, else_), defined
        if kind == "while":
            counter = f"n{next(self.loops)}"
            body, _ = self.gen(depth - 1, defined)
            step = dioc.Assign(0, counter, role, Binop("+", Var(counter), Lit(1)))
            loop = dioc.While(
                0, Binop("<", Var(counter), Lit(self.cfg.loop_bound)), role, self.link_all([body, step])
            )
            return dioc.Seq(dioc.Assign(0, counter, role, Lit(0)), loop), defined
        body, _ = self.gen(depth - 1, defined)
        return dioc.Scope(0, role, body), defined

    # -------------------
    # Connectedness repair
    # -------------------

    def bridge(self, final: FrontierSet, initial: FrontierSet) -> Optional[List[dioc.DiocProc]]:
        """Located actions, at most two, placed between sides that share no role."""
        options = [(a, b) for a in self.roles for b in self.roles]

        def meets_all(p: Tuple[str, str], pairs: FrontierSet) -> bool:
            return all(p[0] in q or p[1] in q for q in pairs)

        for p in options:
            if meets_all(p, final) and meets_all(p, initial):
                return [self.located(p)]
        for p in options:
            if not meets_all(p, final):
                continue
            for q in options:
                if meets_all(q, initial) and (q[0] in p or q[1] in p):
                    return [self.located(p), self.located(q)]
        return None

    def located(self, p: Tuple[str, str]) -> dioc.DiocProc:
        a, b = p
        if a == b:
            return dioc.Assign(0, "sync", a, Lit(0))
        return dioc.Interaction(0, f"sync{next(self.ops)}", a, Lit(0), b, "sync")

    def link(self, left: dioc.DiocProc, right: dioc.DiocProc) -> dioc.DiocProc:
        if not self.cfg.repair:
            return dioc.Seq(left, right)
        final, initial = trans_f(left), trans_i(right)
        if pairsets_all_intersect(final, initial):
            return dioc.Seq(left, right)
        actions = self.bridge(final, initial)
        if actions is None:
            return dioc.Par(left, right)
        return dioc.seq(left, *actions, right)

    def link_all(self, items: List[dioc.DiocProc]) -> dioc.DiocProc:
        out = items[-1]
        for item in reversed(items[:-1]):
            out = self.link(item, out)
        return out


def gen_dioc(cfg: GeneratorConfig, seed: int) -> dioc.DiocProc:
    """Annotated random program; depth 0 gives ``1``."""
    if cfg.max_depth <= 0:
        return dioc.SKIP
    g = _Generator(cfg, seed)
    p, _ = g.gen(cfg.max_depth, frozenset())
    return annotate(p)


def gen_chain(n: int, roles: int = 3, seed: int = 0) -> dioc.DiocProc:
    """Connected sequence of ``n`` interactions, each sharing a role with the previous one."""
    rng = random.Random(seed)
    names = [chr(ord("A") + i) for i in range(max(2, roles))]
    items: List[dioc.DiocProc] = []
    last: Optional[Tuple[str, str]] = None
    for k in range(n):
        if last is None:
            sender, receiver = rng.sample(names, 2)
        else:
            sender = rng.choice(last)
            receiver = rng.choice([r for r in names if r != sender])
        items.append(dioc.Interaction(k + 1, f"o{k + 1}", sender, Lit(k), receiver, "x"))
        last = (sender, receiver)
    return dioc.seq(*items)


# -------------------
# Shrinking
# -------------------


def _replace(p: dioc.DiocProc, target: dioc.DiocProc, by: dioc.DiocProc) -> dioc.DiocProc:
    if p is target:
        return by
    if isinstance(p, (dioc.Seq, dioc.Par)):
        return type(p)(_replace(p.left, target, by), _replace(p.right, target, by))
    if isinstance(p, dioc.If):
        return replace(p, then=_replace(p.then, target, by), else_=_replace(p.else_, target, by))
    if isinstance(p, (dioc.While, dioc.Scope)):
        return replace(p, body=_replace(p.body, target, by))
    return p


def _size(p: dioc.DiocProc) -> int:
    return sum(1 for n in dioc.walk(p) if not isinstance(n, dioc.Skip))


def shrink(
    p: dioc.DiocProc,
    still_fails: Callable[[dioc.DiocProc], bool],
    *,
    logger: Optional[logging.Logger] = None,
) -> dioc.DiocProc:
    """Delete subterms depth-first while ``still_fails`` keeps holding."""
    log = logger or logging.getLogger(__name__)
    current = p
    progress = True
    while progress:
        progress = False
        for node in list(dioc.walk(current)):
            if node is current or isinstance(node, dioc.Skip):
                continue
            candidate = _replace(current, node, dioc.SKIP)
            if _size(candidate) < _size(current) and still_fails(candidate):
                current = candidate
                progress = True
                break
    log.debug("Shrunk program from %d to %d constructs", _size(p), _size(current))
    return current


# -------------------
# Fault injection
# -------------------


def _first(p: dpoc.DpocProc, pred: Callable[[dpoc.DpocProc], bool]) -> Optional[dpoc.DpocProc]:
    for node in dpoc.walk(p):
        if pred(node):
            return node
    return None


def _swap(p: dpoc.DpocProc, target: dpoc.DpocProc, by: dpoc.DpocProc) -> dpoc.DpocProc:
    if p is target:
        return by
    if isinstance(p, (dpoc.Seq, dpoc.Par)):
        return type(p)(_swap(p.left, target, by), _swap(p.right, target, by))
    if isinstance(p, dpoc.If):
        return replace(p, then=_swap(p.then, target, by), else_=_swap(p.else_, target, by))
    if isinstance(p, (dpoc.While, dpoc.ScopeCoord, dpoc.ScopeSimple)):
        return replace(p, body=_swap(p.body, target, by))
    return p


def _programmer(kind: type) -> Callable[[dpoc.DpocProc], bool]:
    return lambda n: isinstance(n, kind) and not n.op.is_aux  # type: ignore[attr-defined]


def inject_fault(net: dpoc.Network, fault: str) -> dpoc.Network:
    """Mutate a projected network: ``drop-receive``, ``stray-send`` or ``dup-send``."""
    if fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; expected one of {', '.join(FAULTS)}")
    names = net.names()
    if fault == "stray-send":
        if len(names) < 2:
            raise ValueError("stray-send needs a network with two roles")
        role, peer = names[0], names[1]
        top = max((gid[-1].base for _, _, gid in dpoc.network_global_indexes(net)), default=0) + 1
        stray = dpoc.Send(dpoc.plain(top), dpoc.OpName(top, "stray"), Lit(0), peer)
        return net.replace(role, dpoc.RoleState(dpoc.Seq(net.proc(role), stray), net[role].local))
    kind = dpoc.Recv if fault == "drop-receive" else dpoc.Send
    for role in names:
        target = _first(net.proc(role), _programmer(kind))
        if target is None:
            continue
        by = dpoc.SKIP if fault == "drop-receive" else dpoc.Par(target, target)
        return net.replace(role, dpoc.RoleState(_swap(net.proc(role), target, by), net[role].local))
    raise ValueError(f"{fault}: no programmer {'receive' if kind is dpoc.Recv else 'send'} to mutate")


# -------------------
# Checked-in corpus
# -------------------


def corpus_files(kind: str, suffix: str) -> List[Path]:
    """Sorted files of ``corpus/<kind>`` with the given suffix."""
    return sorted((CORPUS_DIR / kind).glob(f"*{suffix}"))


def positive_programs() -> List[Path]:
    return [p for p in corpus_files("programs", ".dioc") if p.stem != "disconnected"]


__all__ = [
    "CORPUS_DIR",
    "FAULTS",
    "GeneratorConfig",
    "corpus_files",
    "gen_chain",
    "gen_dioc",
    "inject_fault",
    "positive_programs",
    "shrink",
]
