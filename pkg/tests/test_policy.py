import io
import json
import unittest

from choreo import dioc, dioc_engine, dpoc_engine
from choreo.corpus import CORPUS_DIR
from choreo.labels import TICK, ChangeUpdates, Comm, NoUp, UpdateApplied
from choreo.parser import ensure_annotated, load_network, load_program, load_updates
from choreo.policy import (
    NO_UPDATE,
    PhaseChange,
    PolicyKind,
    RunStatus,
    ScopeChoice,
    parse_policy,
    run,
    write_trace,
)
from choreo.values import lookup


def _load(name: str) -> dioc.DiocProc:
    path = str(CORPUS_DIR / "programs" / f"{name}.dioc")
    return ensure_annotated(load_program(path, index_by_line=True).proc)


def _replies() -> dioc.UpdateRepo:
    return load_updates([str(CORPUS_DIR / "updates" / "reply.upd")])


def _run_dioc(sys, policy, **kwargs):
    return run(sys, dioc_engine.transitions, dioc_engine.change_updates, policy, **kwargs)


class ParsePolicyTests(unittest.TestCase):
    def test_plain_policies(self):
        for text in ("none", "first", "exhaustive"):
            self.assertEqual(str(parse_policy(text)), text)
        self.assertEqual(parse_policy(" none "), NO_UPDATE)

    def test_script(self):
        policy = parse_policy("script:scope2=verbose,scope7=no-up,step3=phase1")
        self.assertIs(policy.kind, PolicyKind.SCRIPT)
        self.assertEqual(policy.scopes, (ScopeChoice(2, "verbose"), ScopeChoice(7, None)))
        self.assertEqual(policy.changes, (PhaseChange(3, 1),))
        self.assertEqual(str(policy), "script:scope2=verbose,scope7=no-up,step3=phase1")

    def test_malformed(self):
        for text in ("sometimes", "script", "script:scope2", "script:scope2=a,scope2=b", "script:step1=two"):
            with self.subTest(text=text), self.assertRaises(ValueError):
                parse_policy(text)

    def test_validate(self):
        policy = parse_policy("script:scope2=verbose,step1=phase1")
        policy.validate(["fast", "verbose"], phases=2)
        with self.assertRaises(ValueError):
            policy.validate(["fast"], phases=2)
        with self.assertRaises(ValueError):
            policy.validate(["verbose"], phases=1)


class RunTests(unittest.TestCase):
    def test_ping_terminates(self):
        result = _run_dioc(dioc_engine.initial_system(_load("ping")), NO_UPDATE)
        self.assertIs(result.status, RunStatus.TERMINATED)
        self.assertEqual(result.exit_code, 0)
        self.assertEqual(len(result.trace), 5)
        self.assertEqual(result.trace[-1], TICK)

    def test_fuel(self):
        with self.assertLogs("choreo.policy", level="WARNING"):
            result = _run_dioc(dioc_engine.initial_system(_load("ping")), NO_UPDATE, fuel=2)
        self.assertIs(result.status, RunStatus.OUT_OF_FUEL)
        self.assertEqual(result.exit_code, 3)
        self.assertEqual(len(result.trace), 2)
        with self.assertRaises(ValueError):
            _run_dioc(dioc_engine.initial_system(_load("ping")), NO_UPDATE, fuel=-1)

    def test_stuck_network(self):
        net = load_network(str(CORPUS_DIR / "raw-dpoc" / "lone-receive.dpocnet"))
        result = run(
            dpoc_engine.initial_system(net), dpoc_engine.system_transitions, dpoc_engine.change_updates, NO_UPDATE
        )
        self.assertIs(result.status, RunStatus.STUCK)
        self.assertEqual(result.exit_code, 4)
        self.assertEqual(result.trace, [])

    def test_same_seed_same_run(self):
        sys = dioc_engine.initial_system(_load("parallel"))
        policy = parse_policy("none")
        first = _run_dioc(sys, policy, seed=7)
        self.assertEqual(_run_dioc(sys, policy, seed=7).trace, first.trace)
        orders = {tuple(lab.op for lab in _run_dioc(sys, policy, seed=s).trace if isinstance(lab, Comm)) for s in range(20)}
        self.assertGreater(len(orders), 1)


class ScopePolicyTests(unittest.TestCase):
    def setUp(self):
        self.sys = dioc_engine.initial_system(_load("scoped"), repo=_replies())

    def _result(self, text: str):
        result = _run_dioc(self.sys, parse_policy(text))
        self.assertIs(result.status, RunStatus.TERMINATED)
        return result

    def test_scripted_update(self):
        result = self._result("script:scope2=verbose")
        self.assertIn("verbose", [lab.name for lab in result.trace if isinstance(lab, UpdateApplied)])
        self.assertEqual(lookup(result.final.sigma, "A", "y"), 101)

    def test_scripted_no_update(self):
        result = self._result("script:scope2=no-up")
        self.assertTrue(any(isinstance(lab, NoUp) for lab in result.trace))
        self.assertEqual(lookup(result.final.sigma, "A", "y"), 2)

    def test_unmentioned_scope_takes_no_update(self):
        result = self._result("script:scope9=verbose")
        self.assertEqual(lookup(result.final.sigma, "A", "y"), 2)

    def test_first_update(self):
        result = self._result("first")
        self.assertEqual([lab.name for lab in result.trace if isinstance(lab, UpdateApplied)], ["fast"])
        self.assertEqual(lookup(result.final.sigma, "B", "z"), 0)

    def test_none_never_updates(self):
        for seed in range(5):
            result = _run_dioc(self.sys, NO_UPDATE, seed=seed)
            self.assertFalse(any(isinstance(lab, UpdateApplied) for lab in result.trace))

    def test_scripted_phase_change(self):
        sys = dioc_engine.initial_system(_load("scoped"))
        result = _run_dioc(sys, parse_policy("script:step0=phase1,scope2=fast"), phases=(_replies(),))
        self.assertEqual(result.trace[0], ChangeUpdates(1))
        self.assertEqual(lookup(result.final.sigma, "A", "y"), 0)


class TraceFileTests(unittest.TestCase):
    def test_json_lines(self):
        result = _run_dioc(dioc_engine.initial_system(_load("ping")), NO_UPDATE)
        out = io.StringIO()
        write_trace(result.trace, out)
        lines = out.getvalue().splitlines()
        self.assertEqual(len(lines), 5)
        self.assertEqual(
            json.loads(lines[0]),
            {"step": 0, "kind": "interaction", "op": "ping", "sender": "A", "receiver": "B", "value": 1, "var": "x"},
        )
        self.assertEqual(json.loads(lines[1]), {"step": 1, "kind": "tau"})
        self.assertEqual(json.loads(lines[-1]), {"step": 4, "kind": "tick"})
        self.assertTrue(lines[0].startswith('{"kind": "interaction"'))


if __name__ == "__main__":
    unittest.main()
