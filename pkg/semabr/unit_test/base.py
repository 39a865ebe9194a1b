"""Common builders for many unit tests in this directory"""

import numpy as np


def constant_trace(bandwidth: float, duration: float = 100.0, name: str = None):
    from semabr.traces import BandwidthTrace

    return BandwidthTrace(name or "const_%g" % bandwidth, [0.0, duration], [bandwidth] * 2)


def flat_table(value: float = 0.5, ladder=(160.0, 320.0, 640.0, 1280.0), codec: str = "flat"):
    """A table whose MIoU does not depend on bitrate."""
    from semabr.metrics import RateAccuracyTable

    return RateAccuracyTable({codec: [(b, value) for b in ladder]})


def rising_table(ladder=(160.0, 320.0, 640.0, 1280.0), codec: str = "rising"):
    """A table whose MIoU strictly increases with bitrate."""
    from semabr.metrics import RateAccuracyTable

    values = np.linspace(0.3, 0.7, len(ladder))
    return RateAccuracyTable({codec: list(zip(ladder, values.tolist()))})


def tiny_architecture(history_len: int = 4, level_count: int = 3):
    from semabr.nn import Architecture

    return Architecture(
        history_len=history_len,
        level_count=level_count,
        conv_filters=3,
        kernel_size=2,
        scalar_units=4,
        hidden_units=5,
    )


def random_state(rng: np.random.Generator, history_len: int = 4, level_count: int = 3):
    """An observation with nonzero, well-scaled entries everywhere."""
    from semabr.playback import EnvState

    return EnvState(
        throughput_hist=rng.uniform(0.5, 3.0, history_len),
        download_hist=rng.uniform(1.0, 8.0, history_len),
        next_sizes=np.sort(rng.uniform(0.5, 5.0, level_count)),
        buffer=float(rng.uniform(1.0, 30.0)),
        last_level=int(rng.integers(1, level_count)),
        remaining=int(rng.integers(1, 40)),
        total_chunks=48,
    )


class TraceDirBase(object):
    """Writes a few trace files into a scratch folder."""

    def setUp(self):
        from semabr.utils import TmpTestFolder

        self.tmp = TmpTestFolder()
        self.tmp.delete()
        self.tmp.create()
        self.trace_dir = self.tmp.path / "traces"
        self.trace_dir.mkdir()

    def tearDown(self):
        self.tmp.delete()

    def write_traces(self, bandwidths, duration: float = 200.0):
        from semabr.traces import write_trace

        names = []
        for i, bw in enumerate(bandwidths):
            name = "trace_%02d.txt" % i
            write_trace(constant_trace(bw, duration, name), self.trace_dir / name)
            names.append(name)
        return names
