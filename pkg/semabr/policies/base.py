"""Base class for semabr bitrate controllers."""

from typing import NamedTuple, Optional

import numpy as np

from semabr.base import SemABR
from semabr.playback import EnvState


class PolicyDecision(NamedTuple):
    """The ladder index chosen for the next chunk."""

    level: int
    rationale: Optional[str] = None


class Policy(SemABR):
    """Abstract base class for ABR controllers.

    A policy is an immutable value object; `decide` reads the state and,
    if it samples, only the generator handed to it.
    """

    def __init__(self, name: str = None, **params):
        if name is None:
            name = self.__class__.__name__
        self.name = name
        self.params = params
        super(Policy, self).__init__()

    name = None
    """The name of the policy. Defaults to the class name."""

    description = ""
    """A description of the policy."""

    params = None
    """The parameters that distinguish one policy of a class from another."""

    def describe(self) -> str:
        result = "No description available"
        if self.description:
            result = "%s" % self.description
        elif self.__doc__:
            result = " ".join(self.__doc__.strip().split())
        return result

    def decide(self, state: EnvState, rng: np.random.Generator = None) -> PolicyDecision:
        raise NotImplementedError(
            "Policy %s does not implement `decide`" % self.__class__.__name__
        )

    def __call__(self, state: EnvState, rng: np.random.Generator = None) -> PolicyDecision:
        return self.decide(state, rng=rng)

    def __str__(self):
        return "%s" % self.name

    def __repr__(self):
        return str(self)
