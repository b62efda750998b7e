import random
import time
import unittest

import numpy as np

from choreo import dioc
from choreo.connectedness import (
    brute_force_intersect,
    connected,
    pair,
    pairsets_all_intersect,
    trans_f,
    trans_i,
)
from choreo.corpus import CORPUS_DIR, gen_chain, positive_programs
from choreo.parser import ensure_annotated, load_program, parse_dioc

ROLES = [f"R{i}" for i in range(12)]


def _random_pairs(rng: random.Random) -> frozenset:
    size = rng.randrange(0, 16)
    if rng.random() < 0.5:
        # Star around one role, so that large sets can still intersect.
        hub = rng.choice(ROLES[:2])
        return frozenset(pair(hub, rng.choice(ROLES)) for _ in range(size))
    return frozenset(pair(rng.choice(ROLES[:4]), rng.choice(ROLES[:4])) for _ in range(size))


def _load(name: str) -> dioc.DiocProc:
    path = str(CORPUS_DIR / "programs" / f"{name}.dioc")
    return ensure_annotated(load_program(path, index_by_line=True).proc)


class PairsetTests(unittest.TestCase):
    def test_agrees_with_quadratic_check(self):
        rng = random.Random(20240611)
        agreed_true = 0
        for _ in range(10_000):
            s, t = _random_pairs(rng), _random_pairs(rng)
            expected = brute_force_intersect(s, t)
            self.assertEqual(pairsets_all_intersect(s, t), expected, (sorted(s), sorted(t)))
            agreed_true += expected
        self.assertGreater(agreed_true, 100)

    def test_large_sets_with_common_role(self):
        s = frozenset(pair("A", r) for r in ROLES)
        t = frozenset(pair("A", r) for r in ROLES[:11])
        self.assertTrue(pairsets_all_intersect(s, t))
        self.assertFalse(pairsets_all_intersect(s, t | {pair("R1", "R2")}))

    def test_empty_side(self):
        self.assertTrue(pairsets_all_intersect(frozenset(), frozenset({pair("A", "B")})))


class FrontierTests(unittest.TestCase):
    def test_interaction_and_assignment(self):
        p = parse_dioc("a: B(1) -> A(x); y@C = 1", index_by_line=True)
        self.assertEqual(trans_i(p), {("A", "B")})
        self.assertEqual(trans_f(p), {("C", "C")})

    def test_conditional_starts_at_its_role(self):
        p = parse_dioc("if (true)@A { a: B(1) -> C(x) } else { b: C(1) -> D(y) }", index_by_line=True)
        self.assertEqual(trans_i(p), {("A", "A")})
        self.assertEqual(trans_f(p), {("B", "C"), ("C", "D")})

    def test_loop_ends_with_its_coordinator(self):
        p = parse_dioc("while (true)@A { a: B(1) -> C(x) }", index_by_line=True)
        self.assertEqual(trans_f(p), {("A", "B"), ("A", "C")})

    def test_skip_is_transparent(self):
        p = parse_dioc("1; a: A(1) -> B(x); 1", index_by_line=True)
        self.assertEqual(trans_i(p), {("A", "B")})
        self.assertEqual(trans_f(p), {("A", "B")})


class ConnectedTests(unittest.TestCase):
    def test_corpus_programs_are_connected(self):
        for path in positive_programs():
            with self.subTest(program=path.stem):
                self.assertTrue(connected(_load(path.stem)).ok)

    def test_disconnected_program(self):
        report = connected(_load("disconnected"))
        self.assertFalse(report.ok)
        self.assertEqual(report.final_pair, ("A", "B"))
        self.assertEqual(report.initial_pair, ("C", "D"))
        self.assertIn("shares no role", report.describe())

    def test_long_chain_is_connected(self):
        p = gen_chain(20_000)
        self.assertEqual(dioc.max_index(p), 20_000)
        self.assertTrue(connected(p).ok)

    def test_check_grows_linearly(self):
        sizes = [1000, 2000, 4000, 8000, 16000]
        timings = []
        for n in sizes:
            p = gen_chain(n, seed=n)
            best = float("inf")
            for _ in range(3):
                start = time.perf_counter()
                connected(p)
                best = min(best, time.perf_counter() - start)
            timings.append(best)
        slope = np.polyfit(np.log(sizes), np.log(timings), 1)[0]
        self.assertLess(slope, 1.5)

    def test_tenfold_growth_stays_below_quadratic(self):
        timings = []
        for n in (100, 1000, 10_000):
            p = gen_chain(n, seed=n)
            best = float("inf")
            for _ in range(3):
                start = time.perf_counter()
                self.assertTrue(connected(p).ok)
                best = min(best, time.perf_counter() - start)
            timings.append(max(best, 1e-6))
        for small, large in zip(timings, timings[1:]):
            self.assertLessEqual(large / small, 250, timings)
        self.assertLess(timings[-1], 10.0)


class ReindexTests(unittest.TestCase):
    def test_long_chain_is_shifted_without_recursion(self):
        p = dioc.reindex(gen_chain(20_000), 10)
        self.assertEqual(dioc.max_index(p), 20_010)
        self.assertEqual(min(n.idx for n in dioc.indexed(p)), 11)
        self.assertEqual(dioc.max_index(dioc.strip_indexes(p)), 0)


if __name__ == "__main__":
    unittest.main()
