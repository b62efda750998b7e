import unittest

from choreo import dioc, dpoc
from choreo.corpus import CORPUS_DIR, inject_fault, positive_programs
from choreo.dpoc_engine import initial_system
from choreo.parser import ensure_annotated, load_fns, load_network, load_program, load_updates
from choreo.projection import project
from choreo.safety import check_all, check_deadlock_freedom, explore_network

FUEL = 500


def _load(name: str) -> dioc.DiocProc:
    path = str(CORPUS_DIR / "programs" / f"{name}.dioc")
    return ensure_annotated(load_program(path, index_by_line=True).proc)


def _fns(name: str):
    path = CORPUS_DIR / "fns" / f"{name}.fns"
    return load_fns(str(path) if path.exists() else None)


class ProjectedProgramTests(unittest.TestCase):
    def test_corpus_projections_are_safe(self):
        for path in positive_programs():
            with self.subTest(program=path.stem):
                sys = initial_system(project(_load(path.stem)), fns=_fns(path.stem))
                report = check_all(sys, FUEL)
                self.assertEqual(
                    {name: v.status for name, v in report.verdicts.items()},
                    {"deadlock": "pass", "termination": "pass", "race": "pass", "orphan": "pass"},
                    report.lines(),
                )

    def test_projections_stay_safe_with_updates(self):
        cases = (("purchase", "fidelity"), ("scoped", "reply"), ("pricing", "pricing"))
        for name, updates in cases:
            with self.subTest(program=name, updates=updates):
                repo = load_updates([str(CORPUS_DIR / "updates" / f"{updates}.upd")])
                sys = initial_system(project(_load(name)), repo, fns=_fns(name))
                report = check_all(sys, FUEL)
                self.assertEqual({v.status for v in report.verdicts.values()}, {"pass"}, report.lines())
                self.assertGreater(report.states, check_all(initial_system(sys.net, fns=sys.fns), FUEL).states)

    def test_empty_network_passes(self):
        report = check_all(initial_system(dpoc.Network.of({})), FUEL)
        self.assertTrue(report.ok)
        self.assertEqual(report.states, 1)


class RawNetworkTests(unittest.TestCase):
    def test_lone_receive_is_stuck_immediately(self):
        net = load_network(str(CORPUS_DIR / "raw-dpoc" / "lone-receive.dpocnet"))
        verdict = check_deadlock_freedom(explore_network(initial_system(net), FUEL))
        self.assertIs(verdict.ok, False)
        self.assertEqual(verdict.trace, [])
        self.assertIn("(empty trace)", verdict.describe())

    def test_all_one_terminates(self):
        net = load_network(str(CORPUS_DIR / "raw-dpoc" / "all-one.dpocnet"))
        report = check_all(initial_system(net), FUEL)
        self.assertTrue(report.ok)
        self.assertEqual(report.verdicts["termination"].status, "pass")


class FaultTests(unittest.TestCase):
    def setUp(self):
        self.net = project(_load("ping"))

    def _report(self, fault: str):
        with self.assertLogs("choreo", level="WARNING"):
            return check_all(initial_system(inject_fault(self.net, fault)), FUEL)

    def test_duplicated_send_races(self):
        report = self._report("dup-send")
        race = report.verdicts["race"]
        self.assertIs(race.ok, False)
        self.assertEqual(race.trace, [])
        self.assertIn("2 send(s)", race.detail)

    def test_stray_send_is_an_orphan(self):
        report = self._report("stray-send")
        self.assertIs(report.verdicts["orphan"].ok, False)
        self.assertIn("A holds a send", report.verdicts["orphan"].detail)
        self.assertFalse(report.ok)

    def test_dropped_receive_leaves_the_reply_unread(self):
        report = self._report("drop-receive")
        self.assertIs(report.verdicts["orphan"].ok, False)
        self.assertIs(report.verdicts["deadlock"].ok, False)
        self.assertIn("B holds a send", report.verdicts["orphan"].detail)


if __name__ == "__main__":
    unittest.main()
