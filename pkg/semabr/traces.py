"""Network bandwidth traces: parsing, lookup, corpora and train/test splits.

A trace file is line-oriented text; every non-empty line that does not
start with '#' holds two whitespace-separated decimal numbers: a timestamp
in seconds and a bandwidth in megabits per second. Bandwidth is held
constant between samples (zero-order hold) and traces loop with a period
equal to their last timestamp.
"""

import hashlib
from pathlib import Path
from typing import Iterable, List, Tuple, Union

import numpy as np

from .base import SemABR, log
from .errors import (
    DuplicateTraceError,
    EmptyCorpusError,
    MalformedLineError,
    NegativeBandwidthError,
    NonMonotonicTimeError,
    TooFewSamplesError,
    TraceError,
)
from .utils import format_float


class BandwidthTrace(SemABR):
    """An immutable time series of (timestamp [s], bandwidth [Mbps]) samples."""

    def __init__(self, name: str, timestamps: Iterable[float], bandwidths: Iterable[float]):
        times = np.array(timestamps, dtype=np.float64)
        bws = np.array(bandwidths, dtype=np.float64)
        if times.shape != bws.shape or times.ndim != 1:
            raise TraceError("Trace '%s' needs one bandwidth per timestamp" % name)
        if len(times) < 2:
            raise TooFewSamplesError(
                "Trace '%s' has %d sample(s); at least 2 are required" % (name, len(times))
            )
        if not np.all(np.isfinite(times)) or not np.all(np.isfinite(bws)):
            raise TraceError("Trace '%s' holds non-finite values" % name)
        if times[0] < 0:
            raise NonMonotonicTimeError(
                "Trace '%s' starts at negative time %s" % (name, times[0])
            )
        steps = np.diff(times)
        if np.any(steps <= 0):
            i = int(np.argmax(steps <= 0)) + 1
            raise NonMonotonicTimeError(
                "Trace '%s': timestamp %s at sample %d does not increase"
                % (name, times[i], i + 1)
            )
        if np.any(bws < 0):
            i = int(np.argmax(bws < 0))
            raise NegativeBandwidthError(
                "Trace '%s': negative bandwidth %s at sample %d" % (name, bws[i], i + 1)
            )
        times.setflags(write=False)
        bws.setflags(write=False)
        self.name = name
        self._times = times
        self._bandwidths = bws
        super(BandwidthTrace, self).__init__()

    @property
    def timestamps(self) -> np.ndarray:
        return self._times

    @property
    def bandwidths(self) -> np.ndarray:
        return self._bandwidths

    @property
    def samples(self) -> List[Tuple[float, float]]:
        return list(zip(self._times.tolist(), self._bandwidths.tolist()))

    @property
    def duration(self) -> float:
        """The loop period: the last timestamp."""
        return float(self._times[-1])

    def __len__(self) -> int:
        return len(self._times)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BandwidthTrace)
            and self.name == other.name
            and np.array_equal(self._times, other._times)
            and np.array_equal(self._bandwidths, other._bandwidths)
        )

    def __hash__(self):
        return hash((self.name, self._times.tobytes(), self._bandwidths.tobytes()))

    def __getstate__(self) -> dict:
        return {"name": self.name, "samples": self.samples}

    def __setstate__(self, state: dict) -> None:
        times, bws = zip(*state["samples"])
        self.__init__(state["name"], times, bws)

    def __repr__(self):
        return "%s (%d samples, %gs)" % (self.name, len(self), self.duration)

    def segments(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """The constant-bandwidth pieces of one loop period.

        Segment i spans [start_i, end_i) with bandwidth of sample i. The
        first segment starts at 0 even if the first timestamp is later,
        so the first sample is also held backwards to time 0.

        Returns:
            (starts, ends, bandwidths) arrays with one entry per segment.
        """
        starts = self._times[:-1].copy()
        starts[0] = 0.0
        return starts, self._times[1:], self._bandwidths[:-1]

    @property
    def volume(self) -> float:
        """Megabits deliverable over one loop period."""
        starts, ends, bws = self.segments()
        return float(np.sum((ends - starts) * bws))

    def segment_index(self, phase: float) -> int:
        """Index of the segment holding `phase` (a time within one period)."""
        i = int(np.searchsorted(self._times, phase, side="right")) - 1
        return min(max(i, 0), len(self._times) - 2)

    def bandwidth_at(self, time: float) -> float:
        """Bandwidth [Mbps] at `time` [s], looping the trace."""
        return bandwidth_at(self, time)

    def mean_bandwidth(self) -> float:
        """Time-weighted mean bandwidth over one loop period."""
        starts, ends, bws = self.segments()
        return float(np.sum((ends - starts) * bws) / self.duration)

    def stats(self) -> dict:
        """Summary statistics of one loop period."""
        _, _, bws = self.segments()
        return {
            "name": self.name,
            "duration": self.duration,
            "samples": len(self),
            "mean": self.mean_bandwidth(),
            "min": float(np.min(bws)),
            "max": float(np.max(bws)),
        }


def parse_trace(text: str, name: str) -> BandwidthTrace:
    """Parse the content of a trace file.

    Args:
        text (str): Raw file content.
        name (str): Identifier given to the trace.

    Raises:
        MalformedLineError: A line is not two decimal numbers (line number reported).
        NonMonotonicTimeError: Timestamps do not strictly increase.
        NegativeBandwidthError: A bandwidth is negative.
        TooFewSamplesError: Fewer than two samples.

    Returns:
        BandwidthTrace: The validated trace.
    """
    times, bws = [], []
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise MalformedLineError(number, line, name)
        try:
            t, bw = float(parts[0]), float(parts[1])
        except ValueError:
            raise MalformedLineError(number, line, name)
        if not (np.isfinite(t) and np.isfinite(bw)):
            raise MalformedLineError(number, line, name)
        times.append(t)
        bws.append(bw)
    return BandwidthTrace(name, times, bws)


def format_trace(trace: BandwidthTrace) -> str:
    """Serialize a trace to the text format read by `parse_trace`."""
    lines = ["# %s" % trace.name]
    lines += ["%s %s" % (format_float(t), format_float(bw)) for t, bw in trace.samples]
    return "\n".join(lines) + "\n"


def read_trace(path: Union[str, Path]) -> BandwidthTrace:
    """Read and parse one trace file.

    Raises:
        TraceError: The file cannot be read or decoded (path named), or
            one of the parse errors of `parse_trace`.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as e:
        raise TraceError("Cannot read trace file '%s': %s" % (path, e))
    return parse_trace(text, path.name)


def write_trace(trace: BandwidthTrace, path: Union[str, Path]) -> None:
    Path(path).write_text(format_trace(trace))


def bandwidth_at(trace: BandwidthTrace, time: float) -> float:
    """Piecewise-constant bandwidth lookup, looping the trace.

    Returns the bandwidth of the last sample with timestamp <= the phase of
    `time` within a loop; before the first timestamp the first sample holds.
    Loops are closed on the right: at a whole multiple of the duration
    (other than 0) the last sample is in effect, as at the end of the file.
    So bandwidth_at(t + D) == bandwidth_at(t) for every t > 0; t = 0 is excluded.
    """
    if time < 0:
        raise ValueError("Time must be >= 0, got %s" % time)
    phase = float(np.fmod(time, trace.duration))
    if phase == 0 and time > 0:
        phase = trace.duration
    i = int(np.searchsorted(trace.timestamps, phase, side="right")) - 1
    return float(trace.bandwidths[max(i, 0)])


class TraceCorpus(SemABR):
    """A named collection of traces with unique names."""

    def __init__(self, traces: Iterable[BandwidthTrace], source: str = ""):
        self.traces = list(traces)
        self.source = source
        names = [t.name for t in self.traces]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DuplicateTraceError(
                "Corpus '%s' has duplicate trace names: %s" % (source, ", ".join(dupes))
            )
        super(TraceCorpus, self).__init__()

    @property
    def names(self) -> List[str]:
        return [t.name for t in self.traces]

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces)

    def __getitem__(self, item):
        if isinstance(item, str):
            for trace in self.traces:
                if trace.name == item:
                    return trace
            raise KeyError("No trace named '%s' in corpus '%s'" % (item, self.source))
        return self.traces[item]

    def subset(self, names: Iterable[str], source: str = None) -> "TraceCorpus":
        """The traces named in `names`, in that order."""
        return TraceCorpus([self[n] for n in names], source or self.source)

    def manifest_hash(self) -> str:
        """Order-independent identifier of the set of trace names."""
        return manifest_hash(self.names)


def manifest_hash(names: Iterable[str]) -> str:
    joined = "\n".join(sorted(names))
    return hashlib.sha224(joined.encode("utf-8")).hexdigest()


def load_corpus(directory: Union[str, Path], names: Iterable[str] = None) -> TraceCorpus:
    """Load every trace file of a directory (sorted by file name).

    Args:
        directory: The corpus directory; its name becomes the corpus source.
        names (optional): Only load these file names, in this order.

    Raises:
        MalformedLineError and the other `TraceError`s, naming the file.
    """
    directory = Path(directory)
    if names is None:
        paths = sorted(
            p for p in directory.iterdir() if p.is_file() and not p.name.startswith(".")
        )
    else:
        paths = [directory / n for n in names]
    traces = [read_trace(path) for path in paths]
    log("Loaded %d trace(s) from %s" % (len(traces), directory))
    return TraceCorpus(traces, source=directory.name)


def split_corpus(
    corpus: TraceCorpus, train_fraction: float, seed: int
) -> Tuple[TraceCorpus, TraceCorpus]:
    """Deterministic seeded split into (train, test) corpora.

    The train part gets round(train_fraction * n) traces, halves rounding up.

    Raises:
        EmptyCorpusError: The corpus holds no trace.
    """
    n = len(corpus)
    if n == 0:
        raise EmptyCorpusError("Cannot split the empty corpus '%s'" % corpus.source)
    if not 0 <= train_fraction <= 1:
        raise ValueError("Train fraction must be in [0, 1], got %s" % train_fraction)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(np.floor(train_fraction * n + 0.5))
    train = [corpus.traces[i] for i in order[:n_train]]
    test = [corpus.traces[i] for i in order[n_train:]]
    return (
        TraceCorpus(train, source="%s:train" % corpus.source),
        TraceCorpus(test, source="%s:test" % corpus.source),
    )


def write_manifest(corpus: TraceCorpus, path: Union[str, Path]) -> None:
    """Write the trace names of a corpus, one per line."""
    Path(path).write_text("".join("%s\n" % n for n in corpus.names))


def read_manifest(path: Union[str, Path]) -> List[str]:
    lines = Path(path).read_text().splitlines()
    return [line.strip() for line in lines if line.strip() and not line.startswith("#")]
