"""Unit tests for the SemABR base class"""

import unittest


class BaseCase(unittest.TestCase):

    def test_SemABR(self):
        from semabr.base import SemABR

        obj = SemABR()
        self.assertIsInstance(obj.__getstate__(), dict)
        self.assertIsInstance(obj.json(), str)
        self.assertIsInstance(obj.json(string=False), dict)

        class Hiding(SemABR):
            state_hide = ["hidden"]

        obj = Hiding()
        obj.visible = 1
        obj.hidden = 2
        obj._private = 3
        state = obj.__getstate__()
        self.assertEqual(state, {"visible": 1})
        self.assertEqual(obj.get_list_attr_with_bases("state_hide"), ["hidden", "version"])

    def test_hash_and_diff(self):
        from semabr.playback import SessionConfig

        a, b = SessionConfig(), SessionConfig(rtt=0.1)
        self.assertEqual(a.hash(), SessionConfig().hash())
        self.assertNotEqual(a.hash(), b.hash())
        self.assertIn("values_changed", a.diff(b))
        self.assertEqual(len(a.hash()), 56)

    def test_Versioned(self):
        from semabr.base import Versioned

        class Here(Versioned):
            pass

        ver = Here()
        version = ver.get_version(cached=False)
        self.assertTrue(version is None or isinstance(version, str))
        self.assertEqual(ver.version, version)

    def test_log(self):
        import logging

        from semabr.base import log, logger

        with self.assertLogs(logger, level=logging.WARNING) as cm:
            log("hello", level=logging.WARNING)
        self.assertIn("hello", cm.output[0])


if __name__ == "__main__":
    unittest.main()
