"""semabr bitrate controllers and the scheme grammar used to name them.

A scheme is written `<kind>[:<args>][@<codec>]`:

    fixed:<level>             FixedPolicy
    bb:<reservoir>,<cushion>  BufferBasedPolicy
    mpc:<horizon>,<window>    MpcPolicy
    rl:<params-file>          RLPolicy (greedy)

The optional `@<codec>` suffix plays the scheme with another row of the
rate-accuracy table.
"""

import re
from typing import List, NamedTuple, Optional, Tuple

from semabr.errors import Error, SchemeSpecError
from semabr.metrics import RateAccuracyTable
from semabr.nn import load_params
from semabr.playback import SessionConfig

from .base import Policy, PolicyDecision
from .baselines import BufferBasedPolicy, FixedPolicy, bb_policy, fixed_policy
from .learned import RLPolicy, rl_policy, sample_action
from .mpc import MpcConfig, MpcPolicy, harmonic_mean_predictor, mpc_policy

KINDS = ("fixed", "bb", "mpc", "rl")

_start = re.compile(r"^\s*(%s)\s*(:|@|$)" % "|".join(KINDS))


class SchemeSpec(NamedTuple):
    text: str
    kind: str
    args: Tuple[str, ...]
    codec: Optional[str]


def split_schemes(text: str) -> List[str]:
    """Split a scheme list on ',' or ';' without breaking `bb:5,10` apart."""
    specs = []
    for token in re.split(r"[;,]", text):
        if not token.strip():
            continue
        if _start.match(token) or not specs:
            specs.append(token.strip())
        else:
            specs[-1] += "," + token.strip()
    return specs


def parse_scheme(text: str) -> SchemeSpec:
    """Parse one scheme spec.

    Raises:
        SchemeSpecError: Unknown kind or wrong argument count.
    """
    body, at, codec = text.strip().partition("@")
    kind, _, rest = body.partition(":")
    kind = kind.strip()
    if kind not in KINDS:
        raise SchemeSpecError(
            "Unknown scheme '%s' in '%s' (known: %s)" % (kind, text, ", ".join(KINDS))
        )
    if kind == "rl":
        args = (rest.strip(),) if rest.strip() else ()
    else:
        args = tuple(a.strip() for a in rest.split(",")) if rest.strip() else ()
    expected = {"fixed": (1,), "bb": (0, 2), "mpc": (0, 2), "rl": (1,)}[kind]
    if len(args) not in expected:
        raise SchemeSpecError(
            "Scheme '%s' takes %s argument(s), got %d"
            % (text, " or ".join(str(n) for n in expected), len(args))
        )
    if at and not codec.strip():
        raise SchemeSpecError("Empty codec suffix in '%s'" % text)
    return SchemeSpec(text.strip(), kind, args, codec.strip() or None)


def build_policy(
    spec: SchemeSpec,
    session: SessionConfig,
    table: RateAccuracyTable,
    mpc_defaults: MpcConfig = None,
    bb_defaults: Tuple[float, float] = (5.0, 10.0),
) -> Policy:
    """Instantiate the policy a spec names, for a session and table.

    Raises:
        SchemeSpecError: The arguments are not numbers, are out of range,
            or (for rl) the parameter file cannot be used.
    """
    try:
        if spec.kind == "fixed":
            level = int(spec.args[0])
            if not 0 <= level < session.level_count:
                raise SchemeSpecError(
                    "Level %d of '%s' is outside the %d-level ladder"
                    % (level, spec.text, session.level_count)
                )
            return FixedPolicy(level, name=spec.text)
        if spec.kind == "bb":
            reservoir, cushion = (
                (float(a) for a in spec.args) if spec.args else bb_defaults
            )
            return BufferBasedPolicy(reservoir, cushion, name=spec.text)
        if spec.kind == "mpc":
            if spec.args:
                cfg = MpcConfig(int(spec.args[0]), int(spec.args[1]))
            else:
                cfg = mpc_defaults or MpcConfig()
            return MpcPolicy(cfg, session, table, name=spec.text)
        actor = load_params(spec.args[0])
        arch = actor.architecture
        if (arch.history_len, arch.level_count) != (session.history_len, session.level_count):
            raise SchemeSpecError(
                "Actor of '%s' expects k=%d, m=%d; the session has k=%d, m=%d"
                % (
                    spec.text,
                    arch.history_len,
                    arch.level_count,
                    session.history_len,
                    session.level_count,
                )
            )
        return RLPolicy(actor, "greedy", name=spec.text)
    except SchemeSpecError:
        raise
    except (ValueError, OSError, Error) as e:
        raise SchemeSpecError("Cannot build scheme '%s': %s" % (spec.text, e))
