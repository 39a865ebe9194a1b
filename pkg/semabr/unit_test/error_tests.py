"""Unit tests for semabr errors"""

import unittest


class ErrorsTestCase(unittest.TestCase):
    """Unit tests for various error classes"""

    def test_error_types(self):
        from semabr.errors import (
            BadParameterValueError,
            Error,
            MalformedLineError,
            NonFiniteUpdateError,
            ParametersError,
            StallError,
        )

        e = MalformedLineError(3, "a b c", "trace.txt")
        self.assertIn("line 3", str(e))
        self.assertIn("trace.txt", str(e))
        e = BadParameterValueError("x", 3)
        self.assertEqual((e.name, e.value), ("x", 3))
        e = ParametersError({"rtt": ["min value is 0"]}, "session")
        self.assertIn("session", str(e))
        e = NonFiniteUpdateError("blew up", epoch=12, snapshot={"chunk": 4})
        self.assertIn("epoch 12", str(e))
        self.assertIsNone(e.diagnostic_path)
        self.assertTrue(issubclass(StallError, Error))


if __name__ == "__main__":
    unittest.main()
