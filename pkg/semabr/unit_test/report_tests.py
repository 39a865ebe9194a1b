"""Unit tests for comparison reports"""

import math
import unittest

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from semabr.errors import EmptyInputError, MismatchedTraceSetsError, ZeroBaselineError
from semabr.playback import SessionConfig, run_episode
from semabr.policies import FixedPolicy
from semabr.report import CdfSeries, cdf, emit, relative_gain, slug, summarize
from semabr.utils import TmpTestFolder

from .base import constant_trace, flat_table, rising_table


class CdfTestCase(unittest.TestCase):
    def test_single(self):
        self.assertEqual(cdf([3]).points, [(3.0, 1.0)])

    def test_ties(self):
        self.assertEqual(
            cdf([1, 2, 2, 4]).points, [(1.0, 0.25), (2.0, 0.5), (2.0, 0.75), (4.0, 1.0)]
        )

    def test_sort_invariance(self):
        self.assertEqual(cdf([4, 2, 1, 2]).points, cdf([1, 2, 2, 4]).points)

    def test_empty(self):
        with self.assertRaises(EmptyInputError):
            cdf([], "qoe")


class GainTestCase(unittest.TestCase):
    def test_values(self):
        self.assertEqual(relative_gain(1.5, 1.0), 50.0)
        self.assertEqual(relative_gain(1.0, 1.0), 0.0)
        self.assertEqual(relative_gain(0.5, -1.0), 150.0)

    def test_zero_baseline(self):
        with self.assertRaises(ZeroBaselineError):
            relative_gain(1.0, 0.0)

    @given(
        st.floats(-1e6, 1e6).filter(lambda x: abs(x) > 1e-3),
        st.floats(-1e6, 1e6).filter(lambda x: abs(x) > 1e-3),
    )
    def test_swapped_gains(self, a, b):
        forward, backward = relative_gain(a, b), relative_gain(b, a)
        self.assertEqual(np.sign(forward), -np.sign(backward))
        if a * b > 0:
            self.assertAlmostEqual((1 + forward / 100) * (1 + backward / 100), 1.0, places=9)

    def test_slug(self):
        self.assertEqual(slug("bb:5,10"), "bb_5_10")
        self.assertEqual(slug("rl:out/checkpoint.json"), "rl_out_checkpoint.json")


class SummarizeTestCase(unittest.TestCase):
    def setUp(self):
        self.session = SessionConfig(codec="flat", total_chunks=6)
        self.traces = [constant_trace(10.0, name="a"), constant_trace(12.0, name="b")]

    def logs(self, policy, table, name, traces=None):
        return [
            run_episode(policy, t, self.session, table=table, scheme=name)
            for t in (traces or self.traces)
        ]

    def test_identical_schemes(self):
        table = flat_table(0.5)
        logs = {"x": self.logs(FixedPolicy(1), table, "x"), "y": self.logs(FixedPolicy(1), table, "y")}
        report = summarize(logs)
        gains = report.gains.set_index("metric")["gain_percent"]
        self.assertTrue((gains.drop("rebuffer_s") == 0).all())
        # Neither scheme rebuffers on the fast link, so that gain is undefined.
        self.assertTrue(gains.loc["rebuffer_s"].isna().all())
        self.assertEqual(report.schemes, ["x", "y"])

    def test_double_qoe(self):
        # QoE per chunk is 9.6 * miou on a fast link at a fixed level.
        low = self.logs(FixedPolicy(0), flat_table(1 / 9.6), "low")
        high = self.logs(FixedPolicy(0), flat_table(2 / 9.6), "high")
        report = summarize({"high": high, "low": low}, order=["high", "low"])
        self.assertAlmostEqual(report.mean("high", "qoe"), 2.0)
        self.assertAlmostEqual(report.gain("high", "low", "qoe"), 100.0)
        self.assertAlmostEqual(report.gain("low", "high", "qoe"), -50.0)
        self.assertIn("QoE gain", report.summary())

    def test_zero_baseline_gain_is_nan(self):
        logs = {
            "a": self.logs(FixedPolicy(0), flat_table(0.5), "a"),
            "b": self.logs(FixedPolicy(0), flat_table(0.5), "b"),
        }
        report = summarize(logs)
        self.assertTrue(math.isnan(report.gain("a", "b", "rebuffer_s")))

    def test_cdfs(self):
        report = summarize({"x": self.logs(FixedPolicy(2), flat_table(), "x")})
        series = report.cdfs("x")
        self.assertEqual(sorted(series), ["download_s", "miou", "qoe", "rebuffer_s"])
        self.assertEqual(len(series["qoe"]), 12)
        self.assertEqual(series["qoe"].fractions[-1], 1.0)
        self.assertNotIn("QoE gain", report.summary())

    def test_order_invariance(self):
        traces = self.traces + [constant_trace(0.8, name="c")]
        table = flat_table(0.5)
        low = self.logs(FixedPolicy(0), table, "low", traces=traces)
        high = self.logs(FixedPolicy(2), table, "high", traces=traces)
        report = summarize({"low": low, "high": high})
        shuffled = summarize({"high": high[::-1], "low": low[1:] + low[:1]}, order=["high", "low"])
        self.assertEqual(shuffled.schemes, ["high", "low"])
        for scheme in ("low", "high"):
            for metric in ("miou", "rebuffer_s", "download_s", "qoe"):
                self.assertAlmostEqual(
                    shuffled.mean(scheme, metric), report.mean(scheme, metric), places=12
                )
        for a, b in (("low", "high"), ("high", "low")):
            self.assertAlmostEqual(shuffled.gain(a, b), report.gain(a, b), places=9)

    def test_mismatched_traces(self):
        table = flat_table()
        logs = {
            "x": self.logs(FixedPolicy(0), table, "x"),
            "y": self.logs(FixedPolicy(0), table, "y", traces=self.traces[:1]),
        }
        with self.assertRaises(MismatchedTraceSetsError):
            summarize(logs)

    def test_empty(self):
        with self.assertRaises(EmptyInputError):
            summarize({"x": []})


class EmitTestCase(unittest.TestCase):
    def setUp(self):
        self.tmp = TmpTestFolder()
        self.tmp.delete()
        self.tmp.create()
        session = SessionConfig(codec="rising", total_chunks=5)
        traces = [constant_trace(0.6, name="slow"), constant_trace(4.0, name="fast")]
        table = rising_table()
        self.logs = {
            name: [run_episode(FixedPolicy(level), t, session, table=table, scheme=name)
                   for t in traces]
            for name, level in (("fixed:0", 0), ("fixed:3", 3))
        }

    def tearDown(self):
        self.tmp.delete()

    def test_files(self):
        report = summarize(self.logs, fingerprint="abc", manifest_source="test.txt")
        written = emit(report, self.tmp.path / "report")
        names = sorted(p.relative_to(self.tmp.path / "report").as_posix() for p in written)
        self.assertIn("comparison.csv", names)
        self.assertIn("gains.csv", names)
        self.assertIn("summary.txt", names)
        self.assertIn("cdf/fixed_3_qoe.csv", names)
        self.assertIn("episodes/fixed_0.csv", names)
        header = (self.tmp.path / "report" / "comparison.csv").read_text().splitlines()[0]
        self.assertEqual(header, "scheme,mean_miou,mean_rebuffer_s,mean_download_s,mean_qoe")
        self.assertGreater(report.mean("fixed:3", "miou"), report.mean("fixed:0", "miou"))
        self.assertGreater(report.mean("fixed:3", "rebuffer_s"), report.mean("fixed:0", "rebuffer_s"))

    def test_byte_identical(self):
        first = emit(summarize(self.logs), self.tmp.path / "one")
        second = emit(summarize(self.logs), self.tmp.path / "two")
        for a, b in zip(first, second):
            self.assertEqual(a.read_bytes(), b.read_bytes())

    def test_single_cdf(self):
        path = self.tmp.path / "cdf.csv"
        emit(cdf([2, 1], "miou"), path)
        self.assertEqual(path.read_text(), "metric,value,fraction\nmiou,1,0.5\nmiou,2,1\n")
        self.assertIsInstance(cdf([1]), CdfSeries)


if __name__ == "__main__":
    unittest.main()
