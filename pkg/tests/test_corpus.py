import unittest

from choreo import dioc, dpoc
from choreo.connectedness import connected
from choreo.corpus import (
    CORPUS_DIR,
    FAULTS,
    GeneratorConfig,
    corpus_files,
    gen_chain,
    gen_dioc,
    inject_fault,
    positive_programs,
    shrink,
)
from choreo.parser import ensure_annotated, load_program
from choreo.projection import project


def _load(name: str) -> dioc.DiocProc:
    path = str(CORPUS_DIR / "programs" / f"{name}.dioc")
    return ensure_annotated(load_program(path, index_by_line=True).proc)


class GeneratorTests(unittest.TestCase):
    def test_same_seed_same_program(self):
        cfg = GeneratorConfig(max_depth=3, roles=3)
        self.assertEqual(gen_dioc(cfg, 11), gen_dioc(cfg, 11))
        self.assertGreater(len({repr(gen_dioc(cfg, s)) for s in range(10)}), 1)

    def test_generated_programs_are_annotated_and_connected(self):
        cfg = GeneratorConfig(max_depth=4, roles=4)
        for seed in range(500):
            with self.subTest(seed=seed):
                p = gen_dioc(cfg, seed)
                self.assertTrue(dioc.well_annotated(p).ok)
                self.assertTrue(connected(p).ok, connected(p).describe())

    def test_degenerate_configurations(self):
        self.assertEqual(gen_dioc(GeneratorConfig(max_depth=0), 1), dioc.SKIP)
        with self.assertRaises(ValueError):
            gen_dioc(GeneratorConfig(roles=0), 1)

    def test_chain(self):
        p = gen_chain(50, roles=4, seed=3)
        steps = [n for n in dioc.walk(p) if isinstance(n, dioc.Interaction)]
        self.assertEqual([n.idx for n in steps], list(range(1, 51)))
        for a, b in zip(steps, steps[1:]):
            self.assertTrue({a.sender, a.receiver} & {b.sender, b.receiver})


class ShrinkTests(unittest.TestCase):
    def test_keeps_only_what_the_failure_needs(self):
        def has_pong(q: dioc.DiocProc) -> bool:
            return any(isinstance(n, dioc.Interaction) and n.op == "pong" for n in dioc.walk(q))

        p = _load("ping")
        self.assertEqual(shrink(p, has_pong), dioc.Seq(dioc.SKIP, p.right))

    def test_nothing_to_remove(self):
        p = _load("ping")
        self.assertIs(shrink(p, lambda q: q == p), p)


class FaultTests(unittest.TestCase):
    def setUp(self):
        self.net = project(_load("ping"))

    def test_dup_send(self):
        mutated = inject_fault(self.net, "dup-send")
        left = mutated.proc("A").left
        self.assertIsInstance(left, dpoc.Par)
        self.assertEqual(left.left, self.net.proc("A").left)
        self.assertEqual(mutated.proc("B"), self.net.proc("B"))

    def test_drop_receive(self):
        mutated = inject_fault(self.net, "drop-receive")
        self.assertEqual(mutated.proc("A"), dpoc.Seq(self.net.proc("A").left, dpoc.SKIP))

    def test_stray_send(self):
        mutated = inject_fault(self.net, "stray-send")
        stray = mutated.proc("A").right
        self.assertIsInstance(stray, dpoc.Send)
        self.assertEqual((stray.op.name, stray.to, stray.idx.base), ("stray", "B", 3))

    def test_every_fault_changes_the_network(self):
        for fault in FAULTS:
            with self.subTest(fault=fault):
                self.assertNotEqual(inject_fault(self.net, fault), self.net)

    def test_errors(self):
        with self.assertRaises(ValueError):
            inject_fault(self.net, "swap")
        lone = project(_load("single-role"))
        with self.assertRaises(ValueError):
            inject_fault(lone, "stray-send")
        with self.assertRaises(ValueError):
            inject_fault(lone, "drop-receive")


class CheckedInCorpusTests(unittest.TestCase):
    def test_files(self):
        names = [p.stem for p in positive_programs()]
        self.assertIn("purchase", names)
        self.assertNotIn("disconnected", names)
        self.assertEqual([p.stem for p in corpus_files("golden", ".dpoc")], ["Bank", "Buyer", "Seller"])


if __name__ == "__main__":
    unittest.main()
