import unittest

from choreo import dioc, dpoc
from choreo.corpus import CORPUS_DIR, GeneratorConfig, corpus_files, gen_dioc
from choreo.dpoc import AuxKind, DpocIndex, IndexVariant, OpName
from choreo.parser import ensure_annotated, load_program, parse_dioc
from choreo.printer import display_dpoc
from choreo.projection import NotAnnotatedError, pi, project
from choreo.values import Lit, Var, global_state


def _load(name: str) -> dioc.DiocProc:
    path = str(CORPUS_DIR / "programs" / f"{name}.dioc")
    return ensure_annotated(load_program(path, index_by_line=True).proc)


class GoldenTests(unittest.TestCase):
    def test_purchase_projection_matches_golden_files(self):
        net = project(_load("purchase"))
        self.assertEqual(net.names(), ["Bank", "Buyer", "Seller"])
        for path in corpus_files("golden", ".dpoc"):
            with self.subTest(role=path.stem):
                expected = path.read_text(encoding="utf-8")
                self.assertEqual(display_dpoc(net.proc(path.stem)) + "\n", expected)

    def test_projection_is_deterministic(self):
        first = project(_load("purchase"))
        second = project(_load("purchase"))
        self.assertEqual(first, second)
        for role in first.names():
            self.assertEqual(display_dpoc(first.proc(role)), display_dpoc(second.proc(role)))


class RuleTests(unittest.TestCase):
    def test_interactions(self):
        p = _load("ping")
        self.assertEqual(
            pi(p, "A"),
            dpoc.Seq(
                dpoc.Send(DpocIndex(1), OpName(1, "ping"), Lit(1), "B"),
                dpoc.Recv(DpocIndex(2), OpName(2, "pong"), "y", "B"),
            ),
        )

    def test_uninvolved_role_does_nothing(self):
        p = _load("ping")
        self.assertTrue(all(isinstance(n, (dpoc.Seq, dpoc.Skip)) for n in dpoc.walk(pi(p, "C"))))

    def test_conditional_is_broadcast_by_its_role(self):
        p = _load("branch")
        cond = next(n for n in dpoc.walk(pi(p, "A")) if isinstance(n, dpoc.If))
        self.assertEqual(cond.idx, DpocIndex(2))
        self.assertEqual(
            cond.then.left,
            dpoc.Send(DpocIndex(2, IndexVariant.TRUE), OpName.auxiliary(AuxKind.CND, 2), Lit(True), "B"),
        )
        self.assertEqual(
            cond.else_.left,
            dpoc.Send(DpocIndex(2, IndexVariant.FALSE), OpName.auxiliary(AuxKind.CND, 2), Lit(False), "B"),
        )

        # B skips the assignment at A, then learns the decision before branching.
        decided = pi(p, "B").right.left
        self.assertEqual(
            decided.left,
            dpoc.Recv(DpocIndex(2, IndexVariant.RECV), OpName.auxiliary(AuxKind.CND, 2), "aux$x_2", "A"),
        )
        self.assertEqual(decided.right.guard, Var("aux$x_2"))

    def test_loop_followers_acknowledge_each_iteration(self):
        p = _load("loop")
        follower = pi(p, "B")
        begin = dpoc.Recv(DpocIndex(2, IndexVariant.RECV), OpName.auxiliary(AuxKind.WB, 2), "aux$x_2", "A")
        self.assertEqual(follower.right.left, begin)
        loop = follower.right.right
        self.assertIsInstance(loop, dpoc.While)
        sends = [n for n in dpoc.walk(loop) if isinstance(n, dpoc.Send)]
        self.assertEqual([s.op for s in sends], [OpName.auxiliary(AuxKind.WE, 2)])
        self.assertEqual(sends[0].idx, DpocIndex(2, IndexVariant.CLOSE))

    def test_loop_coordinator_closes_with_false(self):
        p = _load("loop")
        lead = pi(p, "A")
        tail = lead.right.right
        self.assertEqual(
            tail, dpoc.Send(DpocIndex(2, IndexVariant.FALSE), OpName.auxiliary(AuxKind.WB, 2), Lit(False), "B")
        )

    def test_scope_roles(self):
        net = project(_load("scoped"))
        lead = next(n for n in dpoc.walk(net.proc("B")) if isinstance(n, dpoc.ScopeCoord))
        self.assertEqual(lead.roleset, ("A", "B"))
        self.assertEqual(dict(lead.props), {"name": "reply"})
        follower = next(n for n in dpoc.walk(net.proc("A")) if isinstance(n, dpoc.ScopeSimple))
        self.assertEqual(follower.lead, "B")

    def test_unannotated_program(self):
        with self.assertRaises(NotAnnotatedError):
            project(parse_dioc("a: A(1) -> B(x)"))

    def test_local_states_and_extra_roles(self):
        sigma = global_state({"A": {"x": 1}, "Z": {"q": 0}})
        net = project(_load("ping"), sigma, ("Z",))
        self.assertEqual(net.names(), ["A", "B", "Z"])
        self.assertEqual(net["A"].local.get("x"), 1)
        self.assertEqual(net["Z"].local.get("q"), 0)
        self.assertEqual(net.proc("Z"), dpoc.Seq(dpoc.SKIP, dpoc.SKIP))

    def test_generated_programs_project_every_role(self):
        cfg = GeneratorConfig(max_depth=3, roles=3)
        for seed in range(20):
            p = gen_dioc(cfg, seed)
            net = project(p)
            self.assertEqual(set(net.names()), set(dioc.roles(p)))
            programmer = {
                (n.idx.base, n.op.name)
                for _, st in net.items()
                for n in dpoc.walk(st.proc)
                if isinstance(n, dpoc.Send) and not n.op.is_aux
            }
            expected = {(n.idx, n.op) for n in dioc.walk(p) if isinstance(n, dioc.Interaction)}
            self.assertEqual(programmer, expected)


if __name__ == "__main__":
    unittest.main()
