"""Model predictive control over a finite horizon of future chunks."""

import functools
import itertools
from typing import Callable, Optional, Sequence

import numpy as np

from semabr.errors import BadParameterValueError, NoHistoryError
from semabr.metrics import RateAccuracyTable
from semabr.playback import EnvState, SessionConfig, default_table
from semabr.validators import MPC_SCHEMA, validate

from .base import Policy, PolicyDecision


class MpcConfig(object):
    """Horizon H and predictor window of the MPC controller."""

    def __init__(self, horizon: int = 5, window: int = 5):
        params = validate(MPC_SCHEMA, {"horizon": horizon, "window": window}, "mpc")
        self.horizon = params["horizon"]
        self.window = params["window"]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MpcConfig)
            and (self.horizon, self.window) == (other.horizon, other.window)
        )

    def __repr__(self):
        return "MpcConfig(horizon=%d, window=%d)" % (self.horizon, self.window)


def harmonic_mean_predictor(past_throughputs: Sequence[float]) -> float:
    """n / sum(1 / x) over the measured (non-zero) throughputs.

    Raises:
        NoHistoryError: Nothing has been measured yet.
    """
    x = np.asarray(past_throughputs, dtype=np.float64)
    x = x[x > 0]
    if len(x) == 0:
        raise NoHistoryError("No measured throughput to predict from")
    return float(len(x) / np.sum(1.0 / x))


@functools.lru_cache(maxsize=64)
def enumerate_plans(m: int, length: int) -> np.ndarray:
    """All m**length level sequences, in lexicographic order."""
    return np.array(list(itertools.product(range(m), repeat=length)), dtype=np.int64).reshape(
        -1, length
    )


class MpcPolicy(Policy):
    """Chooses the first level of the plan with the best predicted QoE.

    Plans cover min(H, remaining) chunks. Each is simulated with a
    constant predicted throughput and the client buffer dynamics of the
    environment, and scored by the summed per-chunk QoE. Ties go to the
    lexicographically lowest plan, hence the lower level.

    `download_oracle(elapsed, size)` replaces the throughput prediction
    with exact download times: it returns the seconds (RTT included)
    needed for `size` Mb requested `elapsed` seconds after the decision.
    Tests use it for perfect foresight on piecewise traces.
    """

    def __init__(
        self,
        cfg: MpcConfig = None,
        session: SessionConfig = None,
        table: RateAccuracyTable = None,
        predictor: Optional[Callable[[np.ndarray], float]] = None,
        name: str = None,
        download_oracle: Optional[Callable[[float, float], float]] = None,
    ):
        self.cfg = cfg or MpcConfig()
        self.session = session or SessionConfig()
        self.table = table if table is not None else default_table()
        self.predictor = predictor
        self.download_oracle = download_oracle
        ladder = self.session.ladder
        self._sizes = np.array([b * self.session.chunk_duration / 1000.0 for b in ladder])
        self._mbps = np.array([b / 1000.0 for b in ladder])
        self._miou = np.array([self.table.miou_at(self.session.codec, b) for b in ladder])
        super(MpcPolicy, self).__init__(
            name=name or "mpc:%d,%d" % (self.cfg.horizon, self.cfg.window),
            horizon=self.cfg.horizon,
            window=self.cfg.window,
        )

    state_hide = ["session", "table", "predictor", "download_oracle", "cfg"]

    def predict(self, state: EnvState) -> float:
        history = state.measured[-self.cfg.window :]
        if self.predictor is not None:
            return float(self.predictor(history))
        return harmonic_mean_predictor(history)

    def score_plans(
        self, state: EnvState, throughput: Optional[float], plans: np.ndarray
    ) -> np.ndarray:
        """Summed QoE of every plan (rows of `plans`).

        Downloads take `rtt + size / throughput`, or what the download
        oracle says when the policy has one.
        """
        s = self.session
        buffer = np.full(len(plans), min(state.buffer, s.buffer_capacity))
        elapsed = np.zeros(len(plans))
        cold = state.remaining == state.total_chunks
        if cold:
            prev = self._mbps[plans[:, 0]]
        else:
            prev = np.full(len(plans), self._mbps[state.last_level])
        score = np.zeros(len(plans))
        known = {}
        for j in range(plans.shape[1]):
            levels = plans[:, j]
            if self.download_oracle is None:
                download = s.rtt + self._sizes[levels] / throughput
            else:
                download = np.empty(len(plans))
                for i, (t, level) in enumerate(zip(elapsed, levels)):
                    if (t, level) not in known:
                        known[t, level] = float(self.download_oracle(t, self._sizes[level]))
                    download[i] = known[t, level]
            rebuffer = np.maximum(download - buffer, 0.0)
            if cold and j == 0:
                rebuffer = np.zeros(len(plans))
            candidate = np.maximum(buffer - download, 0.0) + s.chunk_duration
            elapsed = elapsed + download + np.maximum(candidate - s.buffer_capacity, 0.0)
            buffer = np.minimum(candidate, s.buffer_capacity)
            bitrate = self._mbps[levels]
            score += s.alpha * self._miou[levels] - s.beta * rebuffer - np.abs(bitrate - prev)
            prev = bitrate
        return score

    def decide(self, state: EnvState, rng=None) -> PolicyDecision:
        if state.level_count != len(self._sizes):
            raise BadParameterValueError("level_count", state.level_count)
        if state.remaining < 1:
            return PolicyDecision(0, "no chunk left")
        length = min(self.cfg.horizon, state.remaining)
        plans = enumerate_plans(state.level_count, length)
        if self.download_oracle is not None:
            score = self.score_plans(state, None, plans)
            best = int(np.argmax(score))
            return PolicyDecision(
                int(plans[best, 0]),
                "exact downloads, plan %s scores %.4f" % (plans[best].tolist(), score[best]),
            )
        try:
            throughput = self.predict(state)
        except NoHistoryError:
            return PolicyDecision(0, "no throughput history")
        if not throughput > 0:
            return PolicyDecision(0, "predicted %s Mbps" % throughput)
        score = self.score_plans(state, throughput, plans)
        best = int(np.argmax(score))
        return PolicyDecision(
            int(plans[best, 0]),
            "predicted %.4f Mbps, plan %s scores %.4f"
            % (throughput, plans[best].tolist(), score[best]),
        )


def mpc_policy(cfg: MpcConfig = None, **kwargs) -> MpcPolicy:
    return MpcPolicy(cfg, **kwargs)
