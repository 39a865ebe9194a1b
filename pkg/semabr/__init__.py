"""semabr.

Trace-driven adaptive-bitrate simulation for semantic video
communication, with fixed, buffer-based, MPC and actor-critic
controllers.
"""

from .base import __version__, config, log, logger
from .errors import Error
from .metrics import BitrateLadder, ConfusionMatrix, RateAccuracyTable, miou
from .playback import EpisodeLog, SessionConfig, StreamingEnv, run_episode
from .policies import Policy, PolicyDecision
from .traces import BandwidthTrace, TraceCorpus, load_corpus, parse_trace
