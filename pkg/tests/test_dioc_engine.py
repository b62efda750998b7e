import unittest
from typing import List, Tuple

from choreo import dioc
from choreo.corpus import CORPUS_DIR
from choreo.dioc_engine import DiocSystem, change_updates, initial_system, step_dioc, transitions
from choreo.labels import TAU, TICK, Comm, Label, NoUp, UpdateApplied
from choreo.parser import ensure_annotated, load_fns, load_program, load_updates, make_entry, parse_dioc
from choreo.values import EMPTY_GLOBAL, Err, global_state, lookup

FIDELITY_BODY = (
    "cardReq: Seller(null) -> Buyer(_);\n"
    "card_id@Buyer = getInput();\n"
    "card: Buyer(card_id) -> Seller(buyer_id);\n"
    "if isValid(buyer_id)@Seller {\n"
    "  order_price@Seller = getPrice(order) * 0.9\n"
    "} else {\n"
    "  order_price@Seller = getPrice(order)\n"
    "};\n"
    "offer: Seller(order_price) -> Buyer(prod_price)"
)


def _load(name: str) -> dioc.DiocProc:
    path = str(CORPUS_DIR / "programs" / f"{name}.dioc")
    return ensure_annotated(load_program(path, index_by_line=True).proc)


def _drive(sys: DiocSystem, limit: int = 500) -> Tuple[List[Label], DiocSystem]:
    """Always take the first enabled transition."""
    labels: List[Label] = []
    for _ in range(limit):
        moves = transitions(sys)
        if not moves:
            break
        labels.append(moves[0].label)
        sys = moves[0].target
    return labels, sys


class BasicStepTests(unittest.TestCase):
    def test_ping_pong(self):
        labels, final = _drive(initial_system(_load("ping")))
        self.assertEqual(
            labels,
            [Comm("ping", "A", 1, "B", "x"), TAU, Comm("pong", "B", 2, "A", "y"), TAU, TICK],
        )
        self.assertEqual(lookup(final.sigma, "B", "x"), 1)
        self.assertEqual(lookup(final.sigma, "A", "y"), 2)
        self.assertEqual(transitions(final), [])

    def test_parallel_branches_interleave(self):
        moves = transitions(initial_system(_load("parallel")))
        self.assertEqual({m.label.op for m in moves}, {"a", "c"})

    def test_loop_runs_to_its_bound(self):
        labels, final = _drive(initial_system(_load("loop")))
        ticks = [lab.value for lab in labels if isinstance(lab, Comm)]
        self.assertEqual(ticks, [0, 1])
        self.assertEqual(lookup(final.sigma, "A", "i"), 2)
        self.assertEqual(labels[-1], TICK)

    def test_err_guard_takes_the_else_branch(self):
        p = parse_dioc("if (z > 1)@A { a: A(1) -> B(x) } else { b: A(2) -> B(x) }", index_by_line=True)
        with self.assertLogs("choreo", level="WARNING"):
            labels, final = _drive(initial_system(p))
        self.assertEqual(labels[1], Comm("b", "A", 2, "B", "x"))

    def test_unbound_payload_is_sent_as_err(self):
        p = parse_dioc("a: A(v) -> B(x)", index_by_line=True)
        labels, final = _drive(initial_system(p))
        self.assertEqual(labels[0], Comm("a", "A", Err, "B", "x"))
        self.assertIs(lookup(final.sigma, "B", "x"), Err)

    def test_step_by_choice(self):
        sys = initial_system(_load("parallel"))
        label, _ = step_dioc(sys, 1)
        self.assertIsInstance(label, Comm)
        with self.assertRaises(ValueError):
            step_dioc(sys, 5)

    def test_purchase_runs_to_confirmation(self):
        fns = load_fns(str(CORPUS_DIR / "fns" / "purchase.fns"))
        labels, final = _drive(initial_system(_load("purchase"), fns=fns))
        ops = [lab.op for lab in labels if isinstance(lab, Comm)]
        self.assertEqual(ops[:2], ["priceReq", "offer"])
        self.assertIn("confirm", ops)
        self.assertNotIn("abort", ops)
        self.assertEqual(labels[-1], TICK)
        self.assertIs(lookup(final.sigma, "Bank", "payment_ok"), True)
        self.assertEqual(lookup(final.sigma, "Buyer", "prod_price"), 100)


class ScopeTests(unittest.TestCase):
    def setUp(self):
        self.replies = load_updates([str(CORPUS_DIR / "updates" / "reply.upd")])

    def _at_scope(self, sys: DiocSystem) -> DiocSystem:
        # req, then the receiver's assignment
        for _ in range(2):
            sys = transitions(sys)[0].target
        return sys

    def test_fresh_counter_starts_above_every_index(self):
        sys = initial_system(_load("scoped"), repo=self.replies)
        self.assertEqual(sys.fresh, 20001)
        self.assertEqual(initial_system(_load("scoped")).fresh, 5)

    def test_scope_offers_each_applicable_update(self):
        sys = self._at_scope(initial_system(_load("scoped"), repo=self.replies))
        moves = transitions(sys)
        self.assertIsInstance(moves[0].label, NoUp)
        names = [m.label.name for m in moves if isinstance(m.label, UpdateApplied)]
        self.assertEqual(names, ["fast", "verbose"])
        self.assertTrue(all(m.scope == 2 for m in moves))

    def test_update_replaces_the_scope_body(self):
        sys = self._at_scope(initial_system(_load("scoped"), repo=self.replies))
        chosen = next(m for m in transitions(sys) if getattr(m.label, "name", None) == "verbose")
        labels, final = _drive(chosen.target)
        self.assertEqual(lookup(final.sigma, "A", "y"), 101)
        self.assertEqual(lookup(final.sigma, "B", "z"), 101)
        self.assertEqual(labels[-1], TICK)

    def test_roles_outside_the_scope_block_an_update(self):
        fidelity = load_updates([str(CORPUS_DIR / "updates" / "fidelity.upd")])
        sys = self._at_scope(initial_system(_load("scoped"), repo=fidelity))
        self.assertEqual([type(m.label) for m in transitions(sys)], [NoUp])

    def test_target_must_match_the_scope_name(self):
        body = dioc.reindex(parse_dioc("resp: B(0) -> A(y)", index_by_line=True), 9999)
        repo = dioc.UpdateRepo((make_entry("elsewhere", body, target="other"),))
        sys = self._at_scope(initial_system(_load("scoped"), repo=repo))
        self.assertEqual([type(m.label) for m in transitions(sys)], [NoUp])


class FidelityWalkthroughTests(unittest.TestCase):
    def test_inserted_body_is_renumbered_from_the_fresh_counter(self):
        body = parse_dioc(FIDELITY_BODY, index_by_line=True)
        self.assertEqual([n.idx for n in dioc.indexed(body)], [1, 2, 3, 4, 5, 7, 9])
        repo = dioc.UpdateRepo((make_entry("fidelity", body),))
        scope = next(n for n in dioc.walk(_load("purchase")) if isinstance(n, dioc.Scope) and n.role == "Seller")
        fns = load_fns(str(CORPUS_DIR / "fns" / "purchase.fns"))
        sys = DiocSystem(EMPTY_GLOBAL, repo, scope, 30, fns)

        moves = transitions(sys)
        self.assertEqual([type(m.label) for m in moves], [NoUp, UpdateApplied])
        applied = moves[1]
        self.assertEqual(applied.scope, scope.idx)
        self.assertEqual(sorted(n.idx for n in dioc.indexed(applied.target.proc)), [31, 32, 33, 34, 35, 37, 39])
        self.assertEqual(applied.target.fresh, 39)

        labels, final = _drive(applied.target)
        self.assertEqual([lab.op for lab in labels if isinstance(lab, Comm)], ["cardReq", "card", "offer"])
        self.assertIs(lookup(final.sigma, "Seller", "buyer_id"), True)
        self.assertEqual(lookup(final.sigma, "Buyer", "prod_price"), 90.0)

    def test_repository_swap_changes_nothing_else(self):
        sys = initial_system(_load("scoped"), sigma=global_state({"A": {"k": 1}}))
        swapped = change_updates(sys, load_updates([str(CORPUS_DIR / "updates" / "reply.upd")]))
        self.assertEqual(swapped.proc, sys.proc)
        self.assertEqual(swapped.sigma, sys.sigma)
        self.assertEqual(swapped.repo.names(), ["fast", "verbose"])


if __name__ == "__main__":
    unittest.main()
