"""Unit tests for utility functions"""

import unittest

import quantities as pq

from semabr.utils import (
    SEED_PURPOSES,
    TmpTestFolder,
    deep_combine,
    derive_seed,
    format_float,
    to_seconds,
)


class UtilsTestCase(unittest.TestCase):
    def test_deep_combine(self):
        base = {"session": {"rtt": 0.08, "codec": "semantic"}, "seed": 1}
        override = {"session": {"rtt": 0.1}, "seed": 2}
        combined = deep_combine(base, override)
        self.assertEqual(combined, {"session": {"rtt": 0.1, "codec": "semantic"}, "seed": 2})
        # Inputs are left alone.
        self.assertEqual(base["session"]["rtt"], 0.08)
        self.assertEqual(deep_combine({"a": 1, "b": 2}, {"b": 3}), {"a": 1, "b": 3})
        self.assertEqual(deep_combine(), {})

    def test_derive_seed(self):
        self.assertEqual(derive_seed(7, "train", 3), derive_seed(7, "train", 3))
        seeds = {derive_seed(7, purpose) for purpose in SEED_PURPOSES}
        self.assertEqual(len(seeds), len(SEED_PURPOSES))
        self.assertNotEqual(derive_seed(7, "train", 0), derive_seed(7, "train", 1))
        self.assertNotEqual(derive_seed(7, "split"), derive_seed(8, "split"))
        self.assertTrue(all(0 <= s < 2 ** 32 for s in seeds))
        with self.assertRaises(KeyError):
            derive_seed(7, "unknown")

    def test_to_seconds(self):
        self.assertEqual(to_seconds(4), 4.0)
        self.assertAlmostEqual(to_seconds(80 * pq.ms), 0.08)
        self.assertAlmostEqual(to_seconds(2 * pq.min), 120.0)

    def test_format_float(self):
        for value in (0.1, 1 / 3, 1e-300, 12345.678):
            self.assertEqual(float(format_float(value)), value)
        self.assertEqual(format_float(2.0), "2")

    def test_TmpTestFolder(self):
        tmp = TmpTestFolder()
        tmp.create()
        self.assertTrue(tmp.path.is_dir())
        (tmp.path / "f.txt").write_text("x")
        tmp.delete()
        self.assertFalse(tmp.path.exists())
        tmp.delete()


if __name__ == "__main__":
    unittest.main()
