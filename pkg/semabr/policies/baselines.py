"""Fixed-bitrate and buffer-based controllers."""

import numpy as np

from semabr.errors import BadParameterValueError
from semabr.playback import EnvState
from semabr.utils import to_seconds

from .base import Policy, PolicyDecision


class FixedPolicy(Policy):
    """Always requests the same ladder index."""

    def __init__(self, level: int, name: str = None):
        if not isinstance(level, (int, np.integer)) or level < 0:
            raise BadParameterValueError("level", level)
        self.level = int(level)
        super(FixedPolicy, self).__init__(name=name or "fixed:%d" % level, level=level)

    def decide(self, state: EnvState, rng=None) -> PolicyDecision:
        if self.level >= state.level_count:
            raise BadParameterValueError("level", self.level)
        return PolicyDecision(self.level)


class BufferBasedPolicy(Policy):
    """Rate map from buffer level to ladder index.

    At or below the reservoir the lowest level is requested, at or above
    reservoir + cushion the highest; in between the buffer fraction maps
    linearly onto the index range, rounded down.
    """

    def __init__(self, reservoir=5.0, cushion=10.0, name: str = None):
        reservoir, cushion = to_seconds(reservoir), to_seconds(cushion)
        if reservoir < 0:
            raise BadParameterValueError("reservoir", reservoir)
        if not cushion > 0:
            raise BadParameterValueError("cushion", cushion)
        self.reservoir = reservoir
        self.cushion = cushion
        super(BufferBasedPolicy, self).__init__(
            name=name or "bb:%g,%g" % (reservoir, cushion),
            reservoir=reservoir,
            cushion=cushion,
        )

    def level_for_buffer(self, buffer: float, m: int) -> int:
        if buffer <= self.reservoir:
            return 0
        if buffer >= self.reservoir + self.cushion:
            return m - 1
        fraction = (buffer - self.reservoir) / self.cushion
        return min(int(np.floor(fraction * (m - 1))), m - 1)

    def decide(self, state: EnvState, rng=None) -> PolicyDecision:
        level = self.level_for_buffer(state.buffer, state.level_count)
        return PolicyDecision(level, "buffer %.3f s" % state.buffer)


def fixed_policy(level: int) -> FixedPolicy:
    return FixedPolicy(level)


def bb_policy(reservoir=5.0, cushion=10.0) -> BufferBasedPolicy:
    return BufferBasedPolicy(reservoir, cushion)
