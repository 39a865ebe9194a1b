"""Unit tests for MIoU, bitrate arithmetic and rate-accuracy tables"""

import json
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from semabr.errors import (
    AllClassesEmptyError,
    NonPositiveRatioError,
    RateTableError,
    UnknownBitrateError,
    UnknownCodecError,
    UnknownFilterCountError,
)
from semabr.metrics import (
    BitrateLadder,
    ConfusionMatrix,
    RateAccuracyTable,
    bitrate_for_ratio,
    compare_codecs,
    ladder_for_filters,
    miou,
    miou_at,
    ratio_for_filters,
)
from semabr.utils import TmpTestFolder


def brute_force_miou(labels, predictions, n_classes):
    """Per-class pixel sets intersected and united one class at a time."""
    ious = []
    for c in range(n_classes):
        inter = np.sum((labels == c) & (predictions == c))
        union = np.sum((labels == c) | (predictions == c))
        if union > 0:
            ious.append(inter / union)
    return float(np.mean(ious))


class MiouTestCase(unittest.TestCase):
    def test_perfect(self):
        self.assertEqual(miou([[5, 0], [0, 5]]), 1.0)

    def test_total_misclassification(self):
        self.assertEqual(miou([[0, 3], [3, 0]]), 0.0)

    def test_uniform_confusion(self):
        self.assertAlmostEqual(miou([[1, 1], [1, 1]]), 1 / 3)

    def test_absent_class_skipped(self):
        cm = ConfusionMatrix([[4, 0, 0], [0, 0, 0], [0, 0, 2]])
        self.assertEqual(miou(cm), 1.0)
        self.assertTrue(np.isnan(cm.iou()[1]))

    def test_all_empty(self):
        with self.assertRaises(AllClassesEmptyError):
            miou([[0, 0], [0, 0]])

    def test_bad_matrices(self):
        for counts in ([[1, 2, 3]], [[1, -1], [0, 1]], [[0.5, 0], [0, 1]]):
            with self.assertRaises(ValueError):
                ConfusionMatrix(counts)

    def test_pixel_accuracy(self):
        self.assertEqual(ConfusionMatrix([[3, 1], [0, 4]]).pixel_accuracy(), 7 / 8)

    @settings(max_examples=500, deadline=None)
    @given(
        st.integers(min_value=1, max_value=32),
        st.integers(min_value=1, max_value=32),
        st.integers(min_value=1, max_value=32),
        st.integers(min_value=0, max_value=2 ** 32 - 1),
    )
    def test_matches_brute_force(self, n_classes, height, width, seed):
        rng = np.random.default_rng(seed)
        labels = rng.integers(0, n_classes, (height, width))
        # Mostly right, so that intersections are not all empty.
        predictions = np.where(
            rng.random((height, width)) < 0.6, labels, rng.integers(0, n_classes, (height, width))
        )
        cm = ConfusionMatrix.from_labels(labels, predictions, n_classes)
        self.assertEqual(cm.counts.sum(), height * width)
        value = miou(cm)
        self.assertAlmostEqual(value, brute_force_miou(labels, predictions, n_classes), places=12)
        self.assertTrue(0.0 <= value <= 1.0)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(min_value=1, max_value=32), st.integers(min_value=0, max_value=2 ** 32 - 1))
    def test_permutation_invariance(self, n_classes, seed):
        rng = np.random.default_rng(seed)
        counts = rng.integers(0, 50, (n_classes, n_classes))
        counts[0, 0] += 1
        order = rng.permutation(n_classes)
        permuted = counts[np.ix_(order, order)]
        self.assertAlmostEqual(miou(permuted), miou(counts), places=12)

    def test_diagonal(self):
        self.assertEqual(miou(np.diag([0, 7, 0, 2])), 1.0)

    def test_ignored_labels_and_bad_predictions(self):
        cm = ConfusionMatrix.from_labels([0, 1, 255], [0, 1, 9], 2)
        self.assertEqual(cm.counts.tolist(), [[1, 0], [0, 1]])
        for predictions in ([0, 2], [-1, 0]):
            with self.assertRaises(ValueError):
                ConfusionMatrix.from_labels([0, 1], predictions, 2)
        with self.assertRaises(ValueError):
            ConfusionMatrix.from_labels([0, 1], [0], 2)


class BitrateTestCase(unittest.TestCase):
    def test_bitrate_for_ratio(self):
        self.assertEqual(bitrate_for_ratio(960, 6), 160)
        self.assertEqual(bitrate_for_ratio(7680, 48), 160)
        for b in (1.0, 33.3, 1280.0):
            self.assertEqual(bitrate_for_ratio(b, 1), b)
        for c in (0, -2):
            with self.assertRaises(NonPositiveRatioError):
                bitrate_for_ratio(960, c)

    def test_ratio_for_filters(self):
        self.assertEqual(ratio_for_filters(128), 6)
        self.assertEqual(ratio_for_filters(64), 12)
        self.assertEqual(ratio_for_filters(32), 24)
        self.assertEqual(ratio_for_filters(16), 48)
        with self.assertRaises(UnknownFilterCountError):
            ratio_for_filters(100)

    def test_ladder_for_filters(self):
        ladder = ladder_for_filters(7680)
        self.assertEqual(ladder.levels, (160.0, 320.0, 640.0, 1280.0))
        self.assertEqual(ladder.m, 4)
        self.assertEqual(ladder.mbps(3), 1.28)

    def test_ladder_invariants(self):
        for levels in ([160], [160, 160], [320, 160], [0, 160]):
            with self.assertRaises(ValueError):
                BitrateLadder(levels)


class RateAccuracyTableTestCase(unittest.TestCase):
    def setUp(self):
        self.table = RateAccuracyTable({"c1": [(160, 0.3), (320, 0.5)]})

    def test_lookup(self):
        self.assertEqual(miou_at(self.table, "c1", 320), 0.5)
        self.assertEqual(self.table.miou_at("c1", 160), 0.3)

    def test_unknown_codec(self):
        with self.assertRaises(UnknownCodecError):
            miou_at(self.table, "c2", 160)

    def test_no_interpolation(self):
        with self.assertRaises(UnknownBitrateError):
            miou_at(self.table, "c1", 200)

    def test_invariants(self):
        for knots in ([(320, 0.3), (160, 0.5)], [(160, 0.5), (320, 0.3)], [(160, 1.2)], []):
            with self.assertRaises(RateTableError):
                RateAccuracyTable({"c": knots})

    def test_bundled(self):
        table = RateAccuracyTable.load()
        self.assertEqual(table.codecs, ["abrvsc", "traditional"])
        for codec in table.codecs:
            self.assertEqual([b for b, _ in table.knots(codec)], [160, 320, 640, 1280])

    def test_save_load(self):
        tmp = TmpTestFolder()
        tmp.create()
        try:
            path = tmp.path / "table.json"
            self.table.save(path)
            self.assertEqual(RateAccuracyTable.load(path).entries, self.table.entries)
            path.write_text("{not json")
            with self.assertRaises(RateTableError):
                RateAccuracyTable.load(path)
            path.write_text(json.dumps({"codecs": {"c": [{"bitrate_kbps": -1, "miou": 0.2}]}}))
            with self.assertRaises(RateTableError):
                RateAccuracyTable.load(path)
        finally:
            tmp.delete()

    def test_compare_codecs(self):
        frame = compare_codecs(RateAccuracyTable.load(), "abrvsc", "traditional")
        self.assertEqual(list(frame["bitrate_kbps"]), [160, 320, 640, 1280])
        gains = frame["gain_percent"].tolist()
        self.assertAlmostEqual(gains[0], 100 * (0.54 - 0.28) / 0.28)
        self.assertGreater(gains[1], 100)
        self.assertLess(gains[3], 0)


if __name__ == "__main__":
    unittest.main()
