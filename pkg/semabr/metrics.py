"""Semantic-accuracy arithmetic.

MIoU over a confusion matrix, the compression-ratio / bitrate relation of
the multi-bitrate encoder, and the rate-accuracy table that stands in for
the semantic codec inside the simulator.
"""

import json
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .base import SemABR, here, log
from .errors import (
    AllClassesEmptyError,
    NonPositiveRatioError,
    ParametersError,
    RateTableError,
    UnknownBitrateError,
    UnknownCodecError,
    UnknownFilterCountError,
)
from .validators import RATE_TABLE_SCHEMA, validate

#: Encoder filter count G -> compression ratio.
FILTER_RATIOS = {128: 6, 64: 12, 32: 24, 16: 48}

DEFAULT_LADDER = (160.0, 320.0, 640.0, 1280.0)

DEFAULT_TABLE_PATH = here / "data" / "rate_accuracy.json"


class ConfusionMatrix(SemABR):
    """Pixel counts; entry (i, j) counts pixels of true class i predicted as j."""

    def __init__(self, counts):
        counts = np.array(counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1] or counts.shape[0] < 1:
            raise ValueError("A confusion matrix must be a non-empty square grid")
        if not np.issubdtype(counts.dtype, np.integer):
            if not np.all(counts == np.floor(counts)):
                raise ValueError("Confusion matrix counts must be integers")
            counts = counts.astype(np.int64)
        if np.any(counts < 0):
            raise ValueError("Confusion matrix counts must be >= 0")
        counts.setflags(write=False)
        self.counts = counts

    @classmethod
    def from_labels(cls, labels, predictions, n_classes: int) -> "ConfusionMatrix":
        """Count (true, predicted) class pairs of two equally shaped label grids.

        Labels outside [0, n_classes) mark pixels to ignore.

        Raises:
            ValueError: The shapes differ, or a counted pixel has a
                prediction outside [0, n_classes).
        """
        labels = np.asarray(labels).ravel()
        predictions = np.asarray(predictions).ravel()
        if labels.shape != predictions.shape:
            raise ValueError("Labels and predictions must have the same shape")
        index = (labels >= 0) & (labels < n_classes)
        predicted = predictions[index].astype(np.int64)
        bad = (predicted < 0) | (predicted >= n_classes)
        if np.any(bad):
            raise ValueError(
                "Prediction %d is outside [0, %d)" % (predicted[bad][0], n_classes)
            )
        mask = n_classes * labels[index].astype(np.int64) + predicted
        count = np.bincount(mask, minlength=n_classes ** 2)
        return cls(count.reshape(n_classes, n_classes))

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    def unions(self) -> np.ndarray:
        """Per-class union: row sum + column sum - diagonal."""
        c = self.counts
        return c.sum(axis=1) + c.sum(axis=0) - np.diag(c)

    def iou(self) -> np.ndarray:
        """Per-class IoU; NaN for classes absent and never predicted."""
        unions = self.unions()
        inter = np.diag(self.counts).astype(np.float64)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(unions > 0, inter / np.where(unions > 0, unions, 1), np.nan)

    def pixel_accuracy(self) -> float:
        total = self.counts.sum()
        return float(np.diag(self.counts).sum() / total) if total else float("nan")

    def __getstate__(self) -> dict:
        return {"counts": self.counts.tolist()}


def miou(cm: Union[ConfusionMatrix, Sequence]) -> float:
    """Mean intersection-over-union over classes with a positive union.

    Raises:
        AllClassesEmptyError: Every class is absent and never predicted.
    """
    if not isinstance(cm, ConfusionMatrix):
        cm = ConfusionMatrix(cm)
    unions = cm.unions()
    present = unions > 0
    if not np.any(present):
        raise AllClassesEmptyError(
            "No class of the %dx%d confusion matrix has a positive union"
            % (cm.n_classes, cm.n_classes)
        )
    inter = np.diag(cm.counts)[present].astype(np.float64)
    return float(np.mean(inter / unions[present]))


def bitrate_for_ratio(initial_bitrate: float, compression_ratio: float) -> float:
    """Chunk bitrate of a raw stream compressed by `compression_ratio`.

    Raises:
        NonPositiveRatioError: The ratio is not > 0.
    """
    if not compression_ratio > 0:
        raise NonPositiveRatioError(
            "Compression ratio must be > 0, got %s" % compression_ratio
        )
    return initial_bitrate / compression_ratio


def ratio_for_filters(g: int) -> int:
    """Compression ratio of the encoder variant with `g` output filters.

    Raises:
        UnknownFilterCountError: `g` is not one of 128, 64, 32, 16.
    """
    try:
        return FILTER_RATIOS[g]
    except (KeyError, TypeError):
        raise UnknownFilterCountError(
            "Filter count %s is not one of %s" % (g, sorted(FILTER_RATIOS, reverse=True))
        )


class BitrateLadder(SemABR):
    """The strictly increasing set of selectable bitrates [kbps]."""

    def __init__(self, levels: Iterable[float]):
        levels = tuple(float(b) for b in levels)
        if len(levels) < 2:
            raise ValueError("A bitrate ladder needs at least 2 levels")
        if any(b <= 0 for b in levels):
            raise ValueError("Ladder bitrates must be > 0")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("Ladder bitrates must be strictly increasing")
        self.levels = levels

    @classmethod
    def from_compression_ratios(
        cls, initial_bitrate: float, ratios: Iterable[float]
    ) -> "BitrateLadder":
        """The ladder of bitrates reached by compressing one raw stream."""
        return cls(sorted(bitrate_for_ratio(initial_bitrate, c) for c in ratios))

    @classmethod
    def for_filters(cls, initial_bitrate: float, filters: Iterable[int]) -> "BitrateLadder":
        return cls.from_compression_ratios(
            initial_bitrate, [ratio_for_filters(g) for g in filters]
        )

    @property
    def m(self) -> int:
        return len(self.levels)

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, level: int) -> float:
        return self.levels[level]

    def __iter__(self):
        return iter(self.levels)

    def __eq__(self, other) -> bool:
        return isinstance(other, BitrateLadder) and self.levels == other.levels

    def __hash__(self):
        return hash(self.levels)

    def mbps(self, level: int) -> float:
        return self.levels[level] / 1000.0

    def __repr__(self):
        return "BitrateLadder(%s)" % ", ".join("%g" % b for b in self.levels)


class RateAccuracyTable(SemABR):
    """Per-codec measured MIoU at each bitrate knot.

    Within a codec, bitrates are strictly increasing and MIoU lies in [0, 1]
    and is nondecreasing in bitrate.
    """

    def __init__(self, entries: Dict[str, Iterable[Tuple[float, float]]], note: str = ""):
        self.entries = {}
        for codec, knots in entries.items():
            knots = [(float(b), float(a)) for b, a in knots]
            if not knots:
                raise RateTableError("Codec '%s' has no knots" % codec)
            rates = [b for b, _ in knots]
            accs = [a for _, a in knots]
            if any(b2 <= b1 for b1, b2 in zip(rates, rates[1:])):
                raise RateTableError("Bitrates of codec '%s' must strictly increase" % codec)
            if any(not 0 <= a <= 1 for a in accs):
                raise RateTableError("MIoU values of codec '%s' must lie in [0, 1]" % codec)
            if any(a2 < a1 for a1, a2 in zip(accs, accs[1:])):
                raise RateTableError(
                    "MIoU of codec '%s' must be nondecreasing in bitrate" % codec
                )
            self.entries[codec] = knots
        self.note = note

    @property
    def codecs(self) -> List[str]:
        return list(self.entries)

    def knots(self, codec: str) -> List[Tuple[float, float]]:
        try:
            return self.entries[codec]
        except KeyError:
            raise UnknownCodecError(
                "Codec '%s' is not in the table (known: %s)"
                % (codec, ", ".join(self.entries))
            )

    def miou_at(self, codec: str, bitrate: float) -> float:
        return miou_at(self, codec, bitrate)

    def to_dict(self) -> dict:
        return {
            "note": self.note,
            "codecs": {
                codec: [{"bitrate_kbps": b, "miou": a} for b, a in knots]
                for codec, knots in self.entries.items()
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RateAccuracyTable":
        try:
            data = validate(RATE_TABLE_SCHEMA, data, section="rate table")
        except ParametersError as e:
            raise RateTableError(str(e))
        entries = {
            codec: [(k["bitrate_kbps"], k["miou"]) for k in knots]
            for codec, knots in data["codecs"].items()
        }
        return cls(entries, note=data.get("note", ""))

    @classmethod
    def load(cls, path: Union[str, Path] = None) -> "RateAccuracyTable":
        """Load and validate a table file (the bundled default if `path` is None)."""
        path = Path(path) if path is not None else DEFAULT_TABLE_PATH
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise RateTableError("Table file '%s' is not valid JSON: %s" % (path, e))
        table = cls.from_dict(data)
        log("Loaded rate-accuracy table %s (%s)" % (path, ", ".join(table.codecs)))
        return table

    def save(self, path: Union[str, Path]) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")


def miou_at(table: RateAccuracyTable, codec: str, bitrate: float) -> float:
    """Exact-match lookup of a codec's MIoU at a bitrate knot.

    Raises:
        UnknownCodecError: The codec is not in the table.
        UnknownBitrateError: The bitrate is not one of the codec's knots.
    """
    for b, a in table.knots(codec):
        if b == bitrate:
            return a
    raise UnknownBitrateError(
        "Bitrate %g kbps is not a knot of codec '%s'" % (bitrate, codec)
    )


def compare_codecs(table: RateAccuracyTable, codec: str, baseline: str) -> pd.DataFrame:
    """MIoU of two codecs at their shared bitrates, with the percent gain of `codec`."""
    from .report import relative_gain

    shared = sorted(
        {b for b, _ in table.knots(codec)} & {b for b, _ in table.knots(baseline)}
    )
    rows = []
    for b in shared:
        a, base = miou_at(table, codec, b), miou_at(table, baseline, b)
        gain = relative_gain(a, base) if base != 0 else float("nan")
        rows.append({"bitrate_kbps": b, codec: a, baseline: base, "gain_percent": gain})
    return pd.DataFrame(rows, columns=["bitrate_kbps", codec, baseline, "gain_percent"])


def ladder_for_filters(initial_bitrate: float, filters: Iterable[int] = (16, 32, 64, 128)) -> BitrateLadder:
    """The ladder produced by the encoder variants with `filters` output filters."""
    return BitrateLadder.for_filters(initial_bitrate, filters)
