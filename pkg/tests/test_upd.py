import unittest

from choreo import dioc, dioc_engine, dpoc, dpoc_engine
from choreo.corpus import CORPUS_DIR, positive_programs
from choreo.dpoc import AuxKind, DpocIndex, IndexVariant, OpName
from choreo.parser import ensure_annotated, load_program
from choreo.projection import project
from choreo.upd import canonical, clean, difference, same_network, upd
from choreo.values import OK, Lit


def _load(name: str) -> dioc.DiocProc:
    path = str(CORPUS_DIR / "programs" / f"{name}.dioc")
    return ensure_annotated(load_program(path, index_by_line=True).proc)


class CanonicalTests(unittest.TestCase):
    def test_neutral_elements(self):
        a = dpoc.Assign(DpocIndex(1), "x", Lit(1))
        b = dpoc.Assign(DpocIndex(2), "y", Lit(2))
        self.assertEqual(canonical(dpoc.Seq(dpoc.SKIP, dpoc.Seq(a, dpoc.SKIP))), a)
        self.assertEqual(canonical(dpoc.Seq(dpoc.Seq(a, b), dpoc.SKIP)), dpoc.Seq(a, b))
        self.assertEqual(canonical(dpoc.Par(dpoc.END, dpoc.END)), dpoc.END)
        self.assertEqual(canonical(dpoc.Par(dpoc.SKIP, dpoc.SKIP)), dpoc.SKIP)


class NormalizationTests(unittest.TestCase):
    def test_projections_are_fixpoints(self):
        for path in positive_programs():
            with self.subTest(program=path.stem):
                net = project(_load(path.stem))
                self.assertTrue(same_network(upd(net), net), difference(upd(net), net))

    def test_decided_conditional_is_completed(self):
        d = dioc_engine.initial_system(_load("branch"))
        p = dpoc_engine.initial_system(project(d.proc))
        for _ in range(2):
            d = dioc_engine.transitions(d)[0].target
            p = dpoc_engine.system_transitions(p)[0].target
        before = difference(p.net, project(d.proc, d.sigma))
        self.assertIsNotNone(before)
        self.assertIsNone(difference(upd(p.net), project(d.proc, d.sigma)))

    def test_clean_drops_closing_acknowledgements(self):
        ack = dpoc.Send(DpocIndex(6, IndexVariant.CLOSE), OpName.auxiliary(AuxKind.SE, 6), Lit(OK), "Seller")
        work = dpoc.Assign(DpocIndex(7), "x", Lit(1))
        net = dpoc.Network.of({"Buyer": dpoc.RoleState(dpoc.Seq(ack, work))})
        self.assertEqual(clean(net).proc("Buyer"), work)

    def test_differences_are_named(self):
        net = project(_load("ping"))
        other = net.replace("A", dpoc.RoleState(dpoc.SKIP))
        self.assertEqual(difference(net, other), "process of A")
        self.assertIn("roles", difference(net, project(_load("relay"))))


if __name__ == "__main__":
    unittest.main()
