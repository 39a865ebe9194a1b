"""Unit tests for user configuration"""

import json
import logging
import unittest
from pathlib import Path

import semabr


class ConfigTestCase(unittest.TestCase):
    """Unit tests for config files"""

    def setUp(self):
        self.original = semabr.config.path
        semabr.config.path = Path("_delete.json")

    def tearDown(self):
        if semabr.config.path.exists():
            semabr.config.path.unlink()
        semabr.config.path = self.original
        semabr.config.pop("dummy", None)

    def test_new_config(self):
        self.assertTrue(semabr.config.create())
        self.assertTrue(semabr.config.path.is_file())
        data = json.loads(semabr.config.path.read_text())
        self.assertEqual(data["log_level"], logging.INFO)
        self.assertIn("semabr_version", data)
        self.assertEqual(semabr.config.get("dummy", 37), 37)

    def test_missing_config(self):
        c = semabr.config.get_from_disk()
        self.assertEqual(c["log_level"], logging.INFO)
        self.assertTrue(semabr.config.path.is_file())

    def test_bad_config(self):
        with open(semabr.config.path, "w") as f:
            f.write(".......")
        c = semabr.config.get_from_disk()
        self.assertIn("log_level", c)
        self.assertEqual(json.loads(semabr.config.path.read_text())["log_level"], logging.INFO)

    def test_save_and_load(self):
        semabr.config.set("Dummy", 5)
        self.assertEqual(semabr.config["dummy"], 5)
        semabr.config.save()
        semabr.config.pop("dummy")
        semabr.config.load()
        self.assertEqual(semabr.config.get("DUMMY"), 5)


if __name__ == "__main__":
    unittest.main()
