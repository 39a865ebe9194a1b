"""Tests of imports of semabr submodules and other dependencies"""

import unittest


class ImportTestCase(unittest.TestCase):
    """Unit tests for imports"""

    def test_quantities(self):
        import quantities as pq

        pq.Quantity([10, 20, 30], pq.ms).rescale(pq.s)

    def test_import_everything(self):
        import semabr
        from semabr.utils import import_all_modules

        # Recursively import all submodules
        names = import_all_modules(semabr, skip=["unit_test"])
        self.assertIn("semabr.policies.mpc", names)
        self.assertNotIn("semabr.unit_test.active", names)


if __name__ == "__main__":
    unittest.main()
