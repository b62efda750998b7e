import unittest
from typing import List, Tuple

from choreo import dioc, dioc_engine, dpoc
from choreo.corpus import CORPUS_DIR
from choreo.dpoc_engine import DpocSystem, initial_system, role_step, system_transitions, weak_traces_dpoc
from choreo.labels import TAU, TICK, Comm, CommUp, Label, NoUp, RecvAct, SendAct, UpdateApplied, weaken
from choreo.parser import ensure_annotated, load_network, load_program, load_updates
from choreo.projection import project
from choreo.values import Lit


def _load(name: str) -> dioc.DiocProc:
    path = str(CORPUS_DIR / "programs" / f"{name}.dioc")
    return ensure_annotated(load_program(path, index_by_line=True).proc)


def _drive(sys: DpocSystem, limit: int = 500) -> Tuple[List[Label], DpocSystem]:
    labels: List[Label] = []
    for _ in range(limit):
        moves = system_transitions(sys)
        if not moves:
            break
        labels.append(moves[0].label)
        sys = moves[0].target
    return labels, sys


class NetworkStepTests(unittest.TestCase):
    def test_ping_pong(self):
        sys = initial_system(project(_load("ping")))
        self.assertEqual(sys.fresh, 2)
        labels, final = _drive(sys)
        self.assertEqual(
            labels,
            [Comm("ping", "A", 1, "B", "x"), TAU, Comm("pong", "B", 2, "A", "y"), TAU, TICK],
        )
        self.assertEqual(final.net["B"].local.get("x"), 1)
        self.assertEqual(final.net["A"].local.get("y"), 2)

    def test_role_moves_include_unmatched_actions(self):
        sys = initial_system(project(_load("ping")))
        (send,) = role_step("A", sys)
        (recv,) = role_step("B", sys)
        self.assertEqual(send.label, SendAct(dpoc.OpName(1, "ping"), 1, "B"))
        self.assertEqual(recv.label, RecvAct(dpoc.OpName(1, "ping"), "x", "A"))
        pong = sys.net.proc("B").right
        self.assertEqual(recv.residue(7), dpoc.Seq(dpoc.Assign(dpoc.DpocIndex(1), "x", Lit(7)), pong))

    def test_termination_needs_every_role(self):
        lone = initial_system(load_network(str(CORPUS_DIR / "raw-dpoc" / "lone-receive.dpocnet")))
        self.assertEqual(system_transitions(lone), [])
        done = initial_system(load_network(str(CORPUS_DIR / "raw-dpoc" / "all-one.dpocnet")))
        labels, final = _drive(done)
        self.assertEqual(labels, [TICK])
        self.assertEqual(final.net.proc("A"), dpoc.END)

    def test_empty_network_never_terminates(self):
        self.assertEqual(system_transitions(initial_system(dpoc.Network.of({}))), [])

    def test_loop_decisions_are_auxiliary(self):
        labels, _ = _drive(initial_system(project(_load("loop"))))
        aux = [lab for lab in labels if isinstance(lab, Comm) and lab.aux]
        self.assertIn("wb*_2", {lab.op for lab in aux})
        self.assertIn("we*_2", {lab.op for lab in aux})
        visible = [lab for lab in weaken(tuple(labels)) if isinstance(lab, Comm)]
        self.assertEqual([(lab.op, lab.value) for lab in visible], [("tick", 0), ("tick", 1)])
        self.assertEqual(labels[-1], TICK)

    def test_weak_traces_match_the_choreography(self):
        p = _load("ping")
        d_traces, d_cut = dioc_engine.weak_traces_dioc(dioc_engine.initial_system(p), 10)
        p_traces, p_cut = weak_traces_dpoc(initial_system(project(p)), 20)
        self.assertFalse(d_cut or p_cut)
        self.assertEqual(d_traces, p_traces)


class ScopeTests(unittest.TestCase):
    def setUp(self):
        repo = load_updates([str(CORPUS_DIR / "updates" / "reply.upd")])
        net = project(_load("scoped"))
        sys = initial_system(net, repo)
        for _ in range(2):
            sys = system_transitions(sys)[0].target
        self.at_scope = sys

    def test_coordinator_offers_each_update(self):
        moves = system_transitions(self.at_scope)
        self.assertIsInstance(moves[0].label, NoUp)
        names = [m.label.name for m in moves if isinstance(m.label, UpdateApplied)]
        self.assertEqual(names, ["fast", "verbose"])
        self.assertTrue(all(m.scope == 2 for m in moves))

    def test_update_code_is_shipped_to_the_other_roles(self):
        chosen = next(m for m in system_transitions(self.at_scope) if getattr(m.label, "name", None) == "verbose")
        labels, final = _drive(chosen.target)
        shipped = [lab for lab in labels if isinstance(lab, CommUp)]
        self.assertEqual(len(shipped), 1)
        self.assertEqual((shipped[0].op, shipped[0].sender, shipped[0].receiver), ("sb*_2", "B", "A"))
        self.assertIsNotNone(shipped[0].payload)
        self.assertEqual(final.net["A"].local.get("y"), 101)
        self.assertEqual(final.net["B"].local.get("z"), 101)
        self.assertEqual(labels[-1], TICK)

    def test_no_update_sends_no(self):
        no_up = system_transitions(self.at_scope)[0].target
        labels, final = _drive(no_up)
        shipped = [lab for lab in labels if isinstance(lab, CommUp)]
        self.assertEqual([lab.payload for lab in shipped], [None])
        self.assertEqual(final.net["A"].local.get("y"), 2)


if __name__ == "__main__":
    unittest.main()
