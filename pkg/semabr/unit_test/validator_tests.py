"""Unit tests for cerberus validators and schemas"""

import unittest

import quantities as pq

from semabr.errors import ParametersError
from semabr.validators import (
    BB_SCHEMA,
    RATE_TABLE_SCHEMA,
    RUN_SCHEMA,
    SESSION_SCHEMA,
    TRAIN_SCHEMA,
    ParametersValidator,
    validate,
)


class ValidatorTestCase(unittest.TestCase):
    def test_coerce_seconds(self):
        v = ParametersValidator(SESSION_SCHEMA)
        self.assertAlmostEqual(v._normalize_coerce_seconds("80 ms"), 0.08)
        self.assertAlmostEqual(v._normalize_coerce_seconds(4 * pq.s), 4.0)
        self.assertAlmostEqual(v._normalize_coerce_seconds(500 * pq.ms), 0.5)
        self.assertEqual(v._normalize_coerce_seconds("2.5"), 2.5)
        self.assertEqual(v._normalize_coerce_seconds(3), 3.0)

    def test_coerce_lists(self):
        v = ParametersValidator(SESSION_SCHEMA)
        self.assertEqual(v._normalize_coerce_float_list("160;320"), [160.0, 320.0])
        self.assertEqual(v._normalize_coerce_float_list("160, 320,"), [160.0, 320.0])
        self.assertEqual(v._normalize_coerce_str_list("fixed:0; bb:5,10"), ["fixed:0", "bb:5,10"])
        self.assertEqual(v._normalize_coerce_str_list(("mpc",)), ["mpc"])

    def test_session(self):
        doc = validate(SESSION_SCHEMA, {"rtt": "80 ms", "ladder": "160;320;640", "total_chunks": "5"})
        self.assertAlmostEqual(doc["rtt"], 0.08)
        self.assertEqual(doc["ladder"], [160.0, 320.0, 640.0])
        self.assertEqual(doc["total_chunks"], 5)

    def test_positive_and_increasing(self):
        for bad in (
            {"chunk_duration": 0},
            {"chunk_duration": "-4 s"},
            {"ladder": [320, 160]},
            {"ladder": [160, 160]},
            {"ladder": [160]},
            {"rtt": -1},
        ):
            with self.assertRaises(ParametersError):
                validate(SESSION_SCHEMA, bad, "session")

    def test_train(self):
        doc = validate(TRAIN_SCHEMA, {"gamma": "0.9", "actor_update": "advantage"})
        self.assertEqual(doc["gamma"], 0.9)
        with self.assertRaises(ParametersError):
            validate(TRAIN_SCHEMA, {"gamma": 1.5})
        with self.assertRaises(ParametersError):
            validate(TRAIN_SCHEMA, {"actor_update": "other"})

    def test_bb(self):
        doc = validate(BB_SCHEMA, {"reservoir": 5000 * pq.ms, "cushion": "10 s"})
        self.assertEqual((doc["reservoir"], doc["cushion"]), (5.0, 10.0))

    def test_run(self):
        doc = validate(RUN_SCHEMA, {"seed": "3", "schemes": "fixed:0;mpc"})
        self.assertEqual(doc, {"seed": 3, "schemes": ["fixed:0", "mpc"]})
        with self.assertRaises(ParametersError) as cm:
            validate(RUN_SCHEMA, {"unknown": 1}, "run")
        self.assertIn("unknown", str(cm.exception))
        self.assertEqual(cm.exception.section, "run")

    def test_rate_table(self):
        table = {"codecs": {"semantic": [{"bitrate_kbps": 160, "miou": 0.4}]}}
        self.assertEqual(validate(RATE_TABLE_SCHEMA, table), table)
        with self.assertRaises(ParametersError):
            validate(RATE_TABLE_SCHEMA, {"codecs": {"semantic": [{"bitrate_kbps": 160, "miou": 1.4}]}})
        with self.assertRaises(ParametersError):
            validate(RATE_TABLE_SCHEMA, {"note": "no codecs"})

    def test_not_a_dict(self):
        with self.assertRaises(ParametersError):
            validate(RUN_SCHEMA, None)
        with self.assertRaises(ParametersError):
            validate(RUN_SCHEMA, [1, 2])


if __name__ == "__main__":
    unittest.main()
