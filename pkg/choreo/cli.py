"""Command-line workbench: check, project, run, equiv and analyze.

Exit codes: 0 success, 1 syntax or configuration error, 2 check failure,
3 fuel exhausted (or an inconclusive bounded verdict), 4 stuck run,
5 counterexample, 6 property failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, TextIO, Tuple

from dotenv import load_dotenv  # type: ignore[import-not-found]

from choreo import dioc, dioc_engine, dpoc_engine
from choreo.config import WorkbenchConfig
from choreo.connectedness import connected
from choreo.corpus import FAULTS, inject_fault
from choreo.equivalence import Outcome, equiv_check
from choreo.events import check_minimality, check_wellannotated_dpoc
from choreo.lexer import ChoreoSyntaxError
from choreo.parser import Program, UpdateRejected, ensure_annotated, load_fns, load_network, load_program, load_updates
from choreo.policy import PolicyKind, parse_policy, run, write_trace
from choreo.printer import display_dpoc, full_dpoc, pretty_network
from choreo.projection import NotAnnotatedError, project
from choreo.safety import check_all
from choreo.values import FunctionEnv

EXIT_OK = 0
EXIT_SYNTAX = 1
EXIT_CHECK = 2
EXIT_FUEL = 3
EXIT_STUCK = 4
EXIT_COUNTEREXAMPLE = 5
EXIT_PROPERTY = 6

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    program: str
    updates: List[str] = field(default_factory=list)
    policy: str = "none"
    fuel: int = 200
    seed: int = 0
    fns_path: Optional[str] = None
    trace_path: Optional[str] = None
    level: str = "dpoc"
    max_states: int = 200_000
    fault: Optional[str] = None

    @classmethod
    def from_args(cls, args: argparse.Namespace, env: WorkbenchConfig) -> "RunConfig":
        updates = list(args.updates or [])
        if not updates and env.updates_dir:
            updates = [env.updates_dir]
        cfg = cls(
            program=args.path,
            updates=updates,
            policy=args.policy or ("exhaustive" if args.command in ("equiv", "analyze") and updates else "none"),
            fuel=env.fuel if args.fuel is None else args.fuel,
            seed=env.seed if args.seed is None else args.seed,
            fns_path=args.fns or env.fns_path,
            trace_path=getattr(args, "trace", None),
            level=getattr(args, "level", "dpoc"),
            max_states=env.max_states,
            fault=getattr(args, "inject_fault", None),
        )
        if cfg.fuel < 0:
            raise ValueError("--fuel must not be negative")
        return cfg


# -------------------
# Loading
# -------------------


def _load_checked(path: str) -> Program:
    """Program indexed by source line, renumbered when lines do not give distinct indexes."""
    program = load_program(path, index_by_line=True)
    proc = ensure_annotated(program.proc)
    if proc is not program.proc:
        log.info("Indexes of %s renumbered in pre-order", path)
    return Program(proc, program.declared_roles, program.path)


def _load_phases(paths: Sequence[str]) -> Tuple[dioc.UpdateRepo, Tuple[dioc.UpdateRepo, ...]]:
    """Each ``--updates`` occurrence is one repository phase; the first is the initial one."""
    repos = [load_updates([p], logger=log) for p in paths]
    if not repos:
        return dioc.EMPTY_REPO, ()
    return repos[0], tuple(repos[1:])


def _systems(cfg: RunConfig, program: Program, fns: FunctionEnv):
    repo, phases = _load_phases(cfg.updates)
    policy = parse_policy(cfg.policy)
    policy.validate([n for r in (repo,) + phases for n in r.names()], 1 + len(phases))
    if policy.kind is PolicyKind.NONE:
        repo, phases = dioc.EMPTY_REPO, ()
    dsys = dioc_engine.initial_system(program.proc, repo=repo, fns=fns, repos=phases)
    net = project(program.proc, dsys.sigma, program.declared_roles, logger=log)
    if cfg.fault:
        net = inject_fault(net, cfg.fault)
    psys = dpoc_engine.DpocSystem(repo, net, dsys.fresh, fns)
    return policy, dsys, psys, phases


# -------------------
# Commands
# -------------------


def cmd_check(args: argparse.Namespace, out: TextIO) -> int:
    path = args.path
    if path.endswith(".upd"):
        repo = load_updates([path], logger=log)
        for entry in repo:
            print(f"update {entry.name}: connected, digest {entry.digest[:16]}", file=out)
        return EXIT_OK
    program = _load_checked(path)
    annotation = dioc.well_annotated(program.proc)
    report = connected(program.proc, logger=log)
    print(f"well-annotated: {'ok' if annotation.ok else 'FAIL'}", file=out)
    print(f"connected: {'ok' if report.ok else 'FAIL ' + report.describe()}", file=out)
    return EXIT_OK if annotation.ok and report.ok else EXIT_CHECK


def cmd_project(args: argparse.Namespace, out: TextIO) -> int:
    program = _load_checked(args.path)
    report = connected(program.proc, logger=log)
    if not report.ok and not args.force:
        print(f"not connected: {report.describe()} (use --force to project anyway)", file=sys.stderr)
        return EXIT_CHECK
    net = project(program.proc, extra_roles=program.declared_roles, logger=log)
    if args.format == "network":
        text = pretty_network(net)
        if args.out:
            target = Path(args.out)
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text + "\n", encoding="utf-8")
        else:
            print(text, file=out)
        return EXIT_OK
    render = display_dpoc if args.format == "display" else full_dpoc
    for role in net.names():
        text = render(net.proc(role))
        if args.out:
            outdir = Path(args.out)
            outdir.mkdir(parents=True, exist_ok=True)
            (outdir / f"{role}.dpoc").write_text(text + "\n", encoding="utf-8")
            log.info("Wrote %s", outdir / f"{role}.dpoc")
        else:
            print(f"// {role}", file=out)
            print(text, file=out)
    return EXIT_OK


def cmd_run(cfg: RunConfig, out: TextIO) -> int:
    program = _load_checked(cfg.program)
    fns = load_fns(cfg.fns_path)
    policy, dsys, psys, phases = _systems(cfg, program, fns)
    if cfg.level == "dioc":
        result = run(
            dsys,
            lambda s: dioc_engine.transitions(s, logger=log),
            dioc_engine.change_updates,
            policy,
            phases=phases,
            seed=cfg.seed,
            fuel=cfg.fuel,
            logger=log,
        )
    else:
        result = run(
            psys,
            lambda s: dpoc_engine.system_transitions(s, logger=log),
            dpoc_engine.change_updates,
            policy,
            phases=phases,
            seed=cfg.seed,
            fuel=cfg.fuel,
            logger=log,
        )
    if cfg.trace_path:
        with open(cfg.trace_path, "w", encoding="utf-8") as fh:
            write_trace(result.trace, fh, payload_text=full_dpoc)
    else:
        write_trace(result.trace, out, payload_text=full_dpoc)
    log.info("Run finished: %s after %d step(s)", result.status.name, len(result.trace))
    return result.exit_code


def cmd_equiv(cfg: RunConfig, mode: str, out: TextIO) -> int:
    program = _load_checked(cfg.program)
    fns = load_fns(cfg.fns_path)
    _policy, dsys, psys, phases = _systems(cfg, program, fns)
    verdict = equiv_check(dsys, psys, cfg.fuel, phases, mode=mode, max_states=cfg.max_states, logger=log)
    print(verdict.describe(), file=out)
    if verdict.outcome is Outcome.COUNTEREXAMPLE:
        return EXIT_COUNTEREXAMPLE
    if verdict.outcome is Outcome.INCONCLUSIVE:
        return EXIT_FUEL
    return EXIT_OK


class _CheckFailed(Exception):
    pass


def _network_system(cfg: RunConfig, fns: FunctionEnv):
    if cfg.program.endswith(".dpocnet"):
        net = load_network(cfg.program)
        if cfg.fault:
            net = inject_fault(net, cfg.fault)
        repo, phases = _load_phases(cfg.updates)
        return dpoc_engine.initial_system(net, repo, fns=fns, repos=phases), phases
    program = _load_checked(cfg.program)
    report = connected(program.proc, logger=log)
    if not report.ok:
        raise _CheckFailed(f"not connected: {report.describe()}")
    _policy, _dsys, psys, phases = _systems(cfg, program, fns)
    return psys, phases


def cmd_analyze(cfg: RunConfig, out: TextIO) -> int:
    fns = load_fns(cfg.fns_path)
    psys, phases = _network_system(cfg, fns)
    failed = False
    annotation = check_wellannotated_dpoc(psys.net, logger=log)
    for line in annotation.describe():
        print(line, file=out)
    failed |= not annotation.ok
    safety = check_all(psys, cfg.fuel, phases, max_states=cfg.max_states, logger=log)
    for line in safety.lines():
        print(line, file=out)
    failed |= not safety.ok
    minimal = True
    if safety.exploration is not None:
        minimal = all(check_minimality(node.sys, logger=log) for node in safety.exploration.graph.nodes)
    print(f"minimality: {'ok' if minimal else 'FAIL'} ({safety.states} state(s))", file=out)
    failed |= not minimal
    return EXIT_PROPERTY if failed else EXIT_OK


# -------------------
# Entry point
# -------------------


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="choreo", description="Dynamic choreography compiler and verifier.")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("path", help="Choreography (.dioc) or, for analyze, a raw network (.dpocnet).")
        p.add_argument("--updates", action="append", help="Update file or directory; repeat for later phases.")
        p.add_argument("--fuel", type=int, default=None, help="Step or exploration depth bound.")
        p.add_argument("--seed", type=int, default=None, help="Seed for choices left open by the policy.")
        p.add_argument("--fns", default=None, help="Function table (.fns).")
        p.add_argument("--policy", default=None, help="none | first | exhaustive | script:scopeN=UPDATE,stepK=phaseP")
        p.add_argument("--inject-fault", choices=FAULTS, default=None, help="Mutate the projection.")

    p_check = sub.add_parser("check", help="Report well-annotation and connectedness.")
    p_check.add_argument("path")

    p_project = sub.add_parser("project", help="Project a choreography to one process per role.")
    p_project.add_argument("path")
    p_project.add_argument("--out", default=None, help="Output directory (or file with --format network).")
    p_project.add_argument("--format", choices=("display", "full", "network"), default="display")
    p_project.add_argument("--force", action="store_true", help="Project even if not connected.")

    p_run = sub.add_parser("run", help="Execute one run and print its trace.")
    common(p_run)
    p_run.add_argument("--level", choices=("dioc", "dpoc"), default="dpoc")
    p_run.add_argument("--trace", default=None, help="Write the JSON-lines trace here.")

    p_equiv = sub.add_parser("equiv", help="Compare a choreography with its projection.")
    common(p_equiv)
    p_equiv.add_argument("--mode", choices=("bisim", "traces"), default="bisim")

    p_analyze = sub.add_parser("analyze", help="Deadlock, race, orphan and annotation checks.")
    common(p_analyze)
    return parser


def main(argv: Optional[Sequence[str]] = None, out: TextIO = sys.stdout) -> int:
    args = _parser().parse_args(argv)
    load_dotenv()
    try:
        env = WorkbenchConfig.from_env()
    except RuntimeError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_SYNTAX
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else env.log_level,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "check":
            return cmd_check(args, out)
        if args.command == "project":
            return cmd_project(args, out)
        cfg = RunConfig.from_args(args, env)
        if args.command == "run":
            return cmd_run(cfg, out)
        if args.command == "equiv":
            return cmd_equiv(cfg, args.mode, out)
        return cmd_analyze(cfg, out)
    except ChoreoSyntaxError as exc:
        print(f"syntax error: {exc}", file=sys.stderr)
        return EXIT_SYNTAX
    except (UpdateRejected, NotAnnotatedError, _CheckFailed) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SYNTAX


if __name__ == "__main__":
    sys.exit(main())
