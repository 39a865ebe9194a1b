"""The streaming environment.

Fluid-model chunk downloads over a looping bandwidth trace, client buffer
dynamics, per-chunk QoE and the observation handed to controllers.
"""

import functools
import logging
from typing import Iterable, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .base import SemABR, log
from .errors import BadParameterValueError, StallError
from .metrics import DEFAULT_LADDER, BitrateLadder, RateAccuracyTable
from .traces import BandwidthTrace
from .validators import SESSION_SCHEMA, validate

#: Scale of download times in the observation [s].
DOWNLOAD_SCALE = 10.0
#: Scale of the buffer level in the observation [s].
BUFFER_SCALE = 10.0

CSV_COLUMNS = [
    "n",
    "level",
    "bitrate_kbps",
    "download_s",
    "rebuffer_s",
    "wait_s",
    "miou",
    "qoe",
    "qoe_acc",
    "qoe_rebuf",
    "qoe_smooth",
]


@functools.lru_cache(maxsize=None)
def default_table() -> RateAccuracyTable:
    """The bundled rate-accuracy table, loaded once."""
    return RateAccuracyTable.load()


class SessionConfig(SemABR):
    """Parameters of one streaming session."""

    defaults = {
        "ladder": list(DEFAULT_LADDER),
        "chunk_duration": 4.0,
        "buffer_capacity": 60.0,
        "rtt": 0.08,
        "total_chunks": 48,
        "alpha": 9.6,
        "beta": 4.3,
        "codec": "abrvsc",
        "history_len": 8,
    }

    def __init__(self, **params):
        """
        Keyword arguments are the keys of `SessionConfig.defaults`. Time
        values may be plain seconds or `quantities` time quantities.

        Raises:
            ParametersError: A value violates the session schema.
        """
        params = validate(SESSION_SCHEMA, dict(self.defaults, **params), section="session")
        self.ladder = BitrateLadder(params["ladder"])
        self.chunk_duration = params["chunk_duration"]
        self.buffer_capacity = params["buffer_capacity"]
        self.rtt = params["rtt"]
        self.total_chunks = params["total_chunks"]
        self.alpha = params["alpha"]
        self.beta = params["beta"]
        self.codec = params["codec"]
        self.history_len = params["history_len"]
        super(SessionConfig, self).__init__()

    @property
    def level_count(self) -> int:
        return self.ladder.m

    m = level_count

    def to_dict(self) -> dict:
        return {
            "ladder": list(self.ladder.levels),
            "chunk_duration": self.chunk_duration,
            "buffer_capacity": self.buffer_capacity,
            "rtt": self.rtt,
            "total_chunks": self.total_chunks,
            "alpha": self.alpha,
            "beta": self.beta,
            "codec": self.codec,
            "history_len": self.history_len,
        }

    def __getstate__(self) -> dict:
        return self.to_dict()

    def __setstate__(self, state: dict) -> None:
        self.__init__(**state)

    def __eq__(self, other) -> bool:
        return isinstance(other, SessionConfig) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(self.json())

    def replace(self, **changes) -> "SessionConfig":
        return SessionConfig(**dict(self.to_dict(), **changes))

    def check_level(self, level: int) -> int:
        if not isinstance(level, (int, np.integer)) or not 0 <= level < self.level_count:
            raise BadParameterValueError("level", level)
        return int(level)

    def __repr__(self):
        return "SessionConfig(%s)" % ", ".join(
            "%s=%s" % (k, v) for k, v in self.to_dict().items()
        )


class QoeTerms(NamedTuple):
    accuracy: float
    rebuffer: float
    smoothness: float


class BufferUpdate(NamedTuple):
    rebuffer: float
    wait: float
    new_buffer: float


class ChunkRecord(NamedTuple):
    """What happened to one chunk."""

    index: int
    level: int
    bitrate: float  # kbps
    download_time: float
    rebuffer: float
    wait: float
    miou: float
    qoe: float
    qoe_terms: QoeTerms
    size: float  # Mb
    buffer: float  # after the chunk was added

    def row(self) -> dict:
        return {
            "n": self.index,
            "level": self.level,
            "bitrate_kbps": self.bitrate,
            "download_s": self.download_time,
            "rebuffer_s": self.rebuffer,
            "wait_s": self.wait,
            "miou": self.miou,
            "qoe": self.qoe,
            "qoe_acc": self.qoe_terms.accuracy,
            "qoe_rebuf": self.qoe_terms.rebuffer,
            "qoe_smooth": self.qoe_terms.smoothness,
        }


def chunk_size(level: int, config: SessionConfig) -> float:
    """Size [Mb] of a chunk encoded at ladder index `level`."""
    level = config.check_level(level)
    return config.ladder[level] * config.chunk_duration / 1000.0


def download_chunk(
    trace: BandwidthTrace, start_time: float, size: float, rtt: float
) -> Tuple[float, float]:
    """Fluid download of `size` megabits starting at `start_time`.

    The request costs `rtt` seconds, after which data drains at the
    trace's instantaneous bandwidth. Whole trace loops are skipped in one
    step when the remainder exceeds a loop's volume.

    Returns:
        (download_time, end_time) in seconds.

    Raises:
        StallError: The trace carries no data at all, so a non-empty
            chunk can never finish.
    """
    if size < 0:
        raise ValueError("Chunk size must be >= 0, got %s" % size)
    if rtt < 0:
        raise ValueError("RTT must be >= 0, got %s" % rtt)
    t = start_time + rtt
    if size == 0:
        return t - start_time, t
    volume = trace.volume
    if not volume > 0:
        raise StallError(
            "Trace '%s' has zero bandwidth over its whole loop; %g Mb can never arrive"
            % (trace.name, size)
        )
    _, ends, bws = trace.segments()
    duration = trace.duration
    base = np.floor(t / duration) * duration
    i = trace.segment_index(t - base)
    remaining = size
    while True:
        seg_end = base + ends[i]
        span = seg_end - t
        bw = bws[i]
        if bw > 0 and span > 0:
            capacity = bw * span
            if capacity >= remaining:
                t += remaining / bw
                break
            remaining -= capacity
        t = max(t, seg_end)
        i += 1
        if i == len(bws):
            i = 0
            base += duration
            loops = int(np.floor(remaining / volume))
            if loops * volume >= remaining:
                loops -= 1
            if loops > 0:
                remaining -= loops * volume
                base += loops * duration
            t = max(t, base)
    return t - start_time, t


def advance_buffer(buffer: float, download_time: float, config: SessionConfig) -> BufferUpdate:
    """Client buffer evolution over one chunk download.

    The buffer drains while the chunk downloads; an empty buffer stalls
    playback (rebuffer). The finished chunk adds one chunk duration; what
    exceeds capacity is idle time (wait) before the next request.
    """
    if not 0 <= buffer <= config.buffer_capacity:
        raise ValueError(
            "Buffer %s outside [0, %s]" % (buffer, config.buffer_capacity)
        )
    rebuffer = max(download_time - buffer, 0.0)
    drained = max(buffer - download_time, 0.0)
    candidate = drained + config.chunk_duration
    wait = max(candidate - config.buffer_capacity, 0.0)
    return BufferUpdate(rebuffer, wait, min(candidate, config.buffer_capacity))


def qoe_chunk(
    miou: float,
    rebuffer: float,
    bitrate: float,
    prev_bitrate: float,
    alpha: float,
    beta: float,
) -> Tuple[float, QoeTerms]:
    """Per-chunk QoE with bitrates in Mbps.

    qoe = alpha * miou - beta * rebuffer - |bitrate - prev_bitrate|
    """
    terms = QoeTerms(alpha * miou, beta * rebuffer, abs(bitrate - prev_bitrate))
    return terms.accuracy - terms.rebuffer - terms.smoothness, terms


class EnvState(SemABR):
    """The observation of a controller before choosing the next chunk.

    Raw values are kept; `features()` applies the fixed normalization
    consumed by the networks.
    """

    def __init__(
        self,
        throughput_hist: Sequence[float],
        download_hist: Sequence[float],
        next_sizes: Sequence[float],
        buffer: float,
        last_level: int,
        remaining: int,
        total_chunks: int,
    ):
        self.throughput_hist = np.array(throughput_hist, dtype=np.float64)
        self.download_hist = np.array(download_hist, dtype=np.float64)
        self.next_sizes = np.array(next_sizes, dtype=np.float64)
        if len(self.throughput_hist) != len(self.download_hist):
            raise ValueError("Throughput and download histories differ in length")
        if not 0 <= last_level < len(self.next_sizes):
            raise ValueError("Last level %s outside the ladder" % last_level)
        if not 0 <= remaining <= total_chunks:
            raise ValueError("Remaining chunks %s outside [0, %s]" % (remaining, total_chunks))
        if buffer < 0:
            raise ValueError("Buffer must be >= 0, got %s" % buffer)
        self.buffer = float(buffer)
        self.last_level = int(last_level)
        self.remaining = int(remaining)
        self.total_chunks = int(total_chunks)
        for a in (self.throughput_hist, self.download_hist, self.next_sizes):
            a.setflags(write=False)

    @property
    def history_len(self) -> int:
        return len(self.throughput_hist)

    @property
    def level_count(self) -> int:
        return len(self.next_sizes)

    @property
    def measured(self) -> np.ndarray:
        """The throughput history without the zero padding."""
        return self.throughput_hist[self.throughput_hist > 0]

    def features(self) -> dict:
        """Normalized network inputs: three vectors and the scalar triple."""
        m = self.level_count
        return {
            "t": self.throughput_hist,
            "d": self.download_hist / DOWNLOAD_SCALE,
            "u": self.next_sizes,
            "scalars": np.array(
                [
                    self.buffer / BUFFER_SCALE,
                    self.last_level / (m - 1) if m > 1 else 0.0,
                    self.remaining / self.total_chunks,
                ]
            ),
        }

    def __getstate__(self) -> dict:
        return {
            "throughput_hist": self.throughput_hist.tolist(),
            "download_hist": self.download_hist.tolist(),
            "next_sizes": self.next_sizes.tolist(),
            "buffer": self.buffer,
            "last_level": self.last_level,
            "remaining": self.remaining,
            "total_chunks": self.total_chunks,
        }

    def __setstate__(self, state: dict) -> None:
        self.__init__(**state)

    def __eq__(self, other) -> bool:
        return isinstance(other, EnvState) and self.__getstate__() == other.__getstate__()

    def __hash__(self):
        return hash(self.json())


def measured_throughput(record: ChunkRecord, rtt: float) -> float:
    """Throughput [Mbps] seen while a chunk drained; 0 if it drained instantly."""
    drain = record.download_time - rtt
    return record.size / drain if drain > 0 else 0.0


def assemble_state(history: Sequence[ChunkRecord], config: SessionConfig) -> EnvState:
    """The observation after the chunks in `history` were played.

    Histories shorter than k are zero-padded on the left. Before the first
    chunk the buffer is empty, the last level is 0 and all N chunks remain.
    """
    k = config.history_len
    recent = list(history)[-k:]
    pad = k - len(recent)
    t = [0.0] * pad + [measured_throughput(r, config.rtt) for r in recent]
    d = [0.0] * pad + [r.download_time for r in recent]
    u = [chunk_size(level, config) for level in range(config.level_count)]
    if history:
        last = history[-1]
        buffer, last_level = last.buffer, last.level
    else:
        buffer, last_level = 0.0, 0
    return EnvState(
        t,
        d,
        u,
        buffer,
        last_level,
        config.total_chunks - len(history),
        config.total_chunks,
    )


class StreamingEnv(object):
    """One playback session over one trace. Single-owner mutable state."""

    def __init__(
        self,
        trace: BandwidthTrace,
        config: SessionConfig,
        table: Optional[RateAccuracyTable] = None,
    ):
        self.trace = trace
        self.config = config
        self.table = table if table is not None else default_table()
        # Fail before the first step if the codec row is missing.
        self.table.knots(config.codec)
        self.reset()

    def reset(self, start_time: float = 0.0) -> EnvState:
        self.clock = float(start_time)
        self.buffer = 0.0
        self.records = []
        self.prev_bitrate = None
        self.state = assemble_state(self.records, self.config)
        return self.state

    @property
    def done(self) -> bool:
        return len(self.records) >= self.config.total_chunks

    def step(self, level: int) -> Tuple[ChunkRecord, EnvState, bool]:
        """Download, buffer and score one chunk at ladder index `level`.

        Raises:
            StallError: The trace can never deliver the chunk.
        """
        if self.done:
            raise RuntimeError("The episode on '%s' is already over" % self.trace.name)
        cfg = self.config
        level = cfg.check_level(level)
        size = chunk_size(level, cfg)
        download_time, _ = download_chunk(self.trace, self.clock, size, cfg.rtt)
        update = advance_buffer(self.buffer, download_time, cfg)
        if not self.records:
            # Nothing is playing yet: the first download is startup delay.
            update = update._replace(rebuffer=0.0)
        bitrate = cfg.ladder[level]
        miou = self.table.miou_at(cfg.codec, bitrate)
        prev = bitrate if self.prev_bitrate is None else self.prev_bitrate
        qoe, terms = qoe_chunk(
            miou, update.rebuffer, bitrate / 1000.0, prev / 1000.0, cfg.alpha, cfg.beta
        )
        record = ChunkRecord(
            index=len(self.records),
            level=level,
            bitrate=bitrate,
            download_time=download_time,
            rebuffer=update.rebuffer,
            wait=update.wait,
            miou=miou,
            qoe=qoe,
            qoe_terms=terms,
            size=size,
            buffer=update.new_buffer,
        )
        self.clock += download_time + update.wait
        self.buffer = update.new_buffer
        self.prev_bitrate = bitrate
        self.records.append(record)
        self.state = assemble_state(self.records, cfg)
        return record, self.state, self.done


class EpisodeLog(SemABR):
    """Per-chunk records of one episode."""

    def __init__(
        self,
        trace_name: str,
        config: Union[SessionConfig, dict],
        records: Iterable[ChunkRecord],
        scheme: str = None,
    ):
        self.trace_name = trace_name
        self.config = config.to_dict() if isinstance(config, SessionConfig) else dict(config)
        self.records = list(records)
        self.scheme = scheme
        super(EpisodeLog, self).__init__()

    @property
    def mean_qoe(self) -> float:
        return float(np.mean([r.qoe for r in self.records]))

    @property
    def total_rebuffer(self) -> float:
        return float(sum(r.rebuffer for r in self.records))

    @property
    def mean_bitrate(self) -> float:
        return float(np.mean([r.bitrate for r in self.records]))

    @property
    def switch_count(self) -> int:
        return sum(1 for a, b in zip(self.records, self.records[1:]) if a.level != b.level)

    @property
    def wall_time(self) -> float:
        return float(sum(r.download_time + r.wait for r in self.records))

    def __len__(self) -> int:
        return len(self.records)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.row() for r in self.records], columns=CSV_COLUMNS)

    def to_csv(self, path=None) -> Optional[str]:
        """CSV with one row per chunk; returns the text if `path` is None."""
        return self.to_frame().to_csv(
            path, index=False, float_format="%.17g", lineterminator="\n"
        )

    def __getstate__(self) -> dict:
        return {
            "trace_name": self.trace_name,
            "scheme": self.scheme,
            "config": self.config,
            "records": [r.row() for r in self.records],
        }


def run_episode(
    policy,
    trace: BandwidthTrace,
    config: SessionConfig,
    seed: int = 0,
    table: Optional[RateAccuracyTable] = None,
    scheme: str = None,
) -> EpisodeLog:
    """Play all N chunks of `trace` under `policy`.

    The policy receives the current state and a generator seeded from
    `seed`, so equal inputs give equal logs.
    """
    env = StreamingEnv(trace, config, table)
    rng = np.random.default_rng(seed)
    state = env.state
    done = False
    while not done:
        decision = policy.decide(state, rng=rng)
        _, state, done = env.step(decision.level)
    episode = EpisodeLog(trace.name, config, env.records, scheme=scheme)
    log(
        "Episode on %s (%s): mean QoE %.4f" % (trace.name, scheme or policy, episode.mean_qoe),
        level=logging.DEBUG,
    )
    return episode
