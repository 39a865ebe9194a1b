"""The controller driven by a trained actor network."""

import numpy as np

from semabr.errors import BadParameterValueError, ShapeMismatchError
from semabr.nn import ParameterSet, forward_actor
from semabr.playback import EnvState

from .base import Policy, PolicyDecision

MODES = ("greedy", "sample")


def sample_action(probabilities: np.ndarray, rng: np.random.Generator) -> int:
    """One categorical draw; consumes exactly one uniform from `rng`."""
    cdf = np.cumsum(probabilities)
    u = rng.random() * cdf[-1]
    return int(min(np.searchsorted(cdf, u, side="right"), len(cdf) - 1))


class RLPolicy(Policy):
    """Argmax (greedy) or a seeded draw (sample) from pi(.|s; theta)."""

    def __init__(self, actor: ParameterSet, mode: str = "greedy", seed: int = 0, name: str = None):
        if mode not in MODES:
            raise BadParameterValueError("mode", mode)
        self.actor = actor
        self.mode = mode
        self.seed = seed
        super(RLPolicy, self).__init__(name=name or "rl", mode=mode, seed=seed)

    state_hide = ["actor"]

    def probabilities(self, state: EnvState) -> np.ndarray:
        if state.level_count != self.actor.architecture.level_count:
            raise ShapeMismatchError(
                "State has %d levels, the actor was built for %d"
                % (state.level_count, self.actor.architecture.level_count)
            )
        return forward_actor(self.actor, state)

    def decide(self, state: EnvState, rng: np.random.Generator = None) -> PolicyDecision:
        """Pick a level.

        Sampling draws from `rng`. Without one, each call seeds a fresh
        generator with `seed`: equal states give equal actions.
        """
        p = self.probabilities(state)
        if self.mode == "greedy":
            level = int(np.argmax(p))
        else:
            if rng is None:
                rng = np.random.default_rng(self.seed)
            level = sample_action(p, rng)
        return PolicyDecision(level, "p=%s" % np.array2string(p, precision=4))


def rl_policy(actor: ParameterSet, mode: str = "greedy", seed: int = 0) -> RLPolicy:
    return RLPolicy(actor, mode, seed)
