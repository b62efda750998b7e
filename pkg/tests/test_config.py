import os
import unittest
from unittest import mock

from choreo.config import DEFAULT_FUEL, WorkbenchConfig
from choreo.explore import DEFAULT_MAX_STATES


class WorkbenchConfigTests(unittest.TestCase):
    def test_defaults(self):
        with mock.patch.dict(os.environ, {}, clear=True):
            cfg = WorkbenchConfig.from_env()
        self.assertEqual(cfg.fuel, DEFAULT_FUEL)
        self.assertEqual(cfg.seed, 0)
        self.assertIsNone(cfg.fns_path)
        self.assertIsNone(cfg.updates_dir)
        self.assertEqual(cfg.log_level, "WARNING")
        self.assertEqual(cfg.max_states, DEFAULT_MAX_STATES)

    def test_values_from_environment(self):
        env = {
            "CHOREO_FUEL": "50",
            "CHOREO_SEED": "9",
            "CHOREO_FNS": "corpus/fns/purchase.fns",
            "CHOREO_UPDATES": "corpus/updates",
            "CHOREO_LOG_LEVEL": "debug",
            "CHOREO_MAX_STATES": "1000",
        }
        with mock.patch.dict(os.environ, env, clear=True):
            cfg = WorkbenchConfig.from_env()
        self.assertEqual((cfg.fuel, cfg.seed, cfg.max_states), (50, 9, 1000))
        self.assertEqual(cfg.fns_path, "corpus/fns/purchase.fns")
        self.assertEqual(cfg.updates_dir, "corpus/updates")
        self.assertEqual(cfg.log_level, "DEBUG")

    def test_blank_values_fall_back(self):
        with mock.patch.dict(os.environ, {"CHOREO_FUEL": " ", "CHOREO_FNS": ""}, clear=True):
            cfg = WorkbenchConfig.from_env()
        self.assertEqual(cfg.fuel, DEFAULT_FUEL)
        self.assertIsNone(cfg.fns_path)

    def test_bad_values(self):
        for env in ({"CHOREO_FUEL": "lots"}, {"CHOREO_SEED": "-1"}, {"CHOREO_LOG_LEVEL": "LOUD"}):
            with self.subTest(env=env), mock.patch.dict(os.environ, env, clear=True):
                with self.assertRaises(RuntimeError):
                    WorkbenchConfig.from_env()


if __name__ == "__main__":
    unittest.main()
