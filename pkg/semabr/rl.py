"""Actor-critic training of the bitrate controller.

Each epoch plays one episode on a trace drawn from the training corpus,
sampling actions from the actor. After every chunk the critic moves
against the TD error and the actor moves along its score function,
in that order. Several workers may train at once: each works on a
snapshot of the shared parameters and hands its result back to a
`ParameterStore`, which serializes writes.
"""

import functools
import logging
import threading
import time
from pathlib import Path
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple, Union

import jsonpickle
import numpy as np
import pandas as pd

from .base import SemABR, log
from .errors import (
    EmptyCorpusError,
    NonFiniteActivationError,
    NonFiniteUpdateError,
)
from .metrics import RateAccuracyTable
from .nn import (
    Architecture,
    GradientSet,
    ParameterSet,
    forward_actor,
    forward_critic,
    grad_entropy,
    grad_log_policy,
    grad_q,
    init_params,
    params_from_payload,
    params_payload,
)
from .playback import (
    EnvState,
    EpisodeLog,
    SessionConfig,
    StreamingEnv,
    qoe_chunk,
    run_episode,
)
from .policies.learned import RLPolicy, sample_action
from .traces import TraceCorpus
from .utils import derive_seed
from .validators import TRAIN_SCHEMA, validate

CHECKPOINT_FORMAT = "semabr-checkpoint"


class TrainConfig(SemABR):
    """Hyperparameters of a training run."""

    defaults = {
        "actor_lr": 1e-4,
        "critic_lr": 1e-3,
        "gamma": 0.99,
        "epochs": 20000,
        "workers": 1,
        "entropy_weight": 0.1,
        "entropy_weight_final": 0.01,
        "seed": 0,
        "checkpoint_every": 0,
        "actor_update": "literal",
    }

    def __init__(self, **params):
        params = validate(TRAIN_SCHEMA, dict(self.defaults, **params), section="train")
        for key in self.defaults:
            setattr(self, key, params[key])
        super(TrainConfig, self).__init__()

    def to_dict(self) -> dict:
        return {key: getattr(self, key) for key in self.defaults}

    def __getstate__(self) -> dict:
        return self.to_dict()

    def __setstate__(self, state: dict) -> None:
        self.__init__(**state)

    def __eq__(self, other) -> bool:
        return isinstance(other, TrainConfig) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(self.json())

    def replace(self, **changes) -> "TrainConfig":
        return TrainConfig(**dict(self.to_dict(), **changes))

    def entropy_weight_at(self, epoch: int) -> float:
        """Entropy weight decayed linearly from its initial to its final value."""
        start = self.entropy_weight
        end = min(self.entropy_weight_final, start)
        if self.epochs <= 1:
            return start
        return start + (end - start) * epoch / (self.epochs - 1)


class Transition(NamedTuple):
    state: EnvState
    action: int
    reward: float
    next_state: EnvState
    done: bool


class StepResult(NamedTuple):
    """One online update, with everything needed to audit it."""

    transition: Transition
    q: float
    q_next: float
    delta: float
    entropy: float
    d_theta: GradientSet
    d_w: GradientSet


def reward(
    miou: float,
    rebuffer: float,
    bitrate: float,
    prev_bitrate: float,
    alpha: float,
    beta: float,
) -> float:
    """The per-chunk reward is the per-chunk QoE (bitrates in Mbps)."""
    return qoe_chunk(miou, rebuffer, bitrate, prev_bitrate, alpha, beta)[0]


def td_error(q_n: float, r_n: float, gamma: float, q_next: float, done: bool) -> float:
    """q_n - (r_n + gamma * q_next), bootstrapping from 0 after the last chunk."""
    if done:
        q_next = 0.0
    return q_n - (r_n + gamma * q_next)


def _checked(params: ParameterSet, arrays: Dict[str, np.ndarray], what: str) -> ParameterSet:
    for name, a in arrays.items():
        if not np.all(np.isfinite(a)):
            raise NonFiniteUpdateError(
                "%s update made '%s' non-finite" % (what, name),
                snapshot={"parameter": name},
            )
    return ParameterSet(params.architecture, arrays)


def critic_step(w: ParameterSet, delta: float, d_w: GradientSet, lr: float) -> ParameterSet:
    """w - lr * delta * d_w.

    Raises:
        ShapeMismatchError: `d_w` is not congruent with `w`.
        NonFiniteUpdateError: The result is not finite.
    """
    return _checked(w, w.combine(d_w, -lr * delta), "Critic")


def actor_step(
    theta: ParameterSet,
    q_n: float,
    d_theta: GradientSet,
    lr: float,
    eta: float = 0.0,
    entropy_grad: Optional[GradientSet] = None,
) -> ParameterSet:
    """theta + lr * q_n * d_theta + lr * eta * entropy_grad.

    With eta = 0 (or no entropy gradient) this is the plain score-function
    step.

    Raises:
        ShapeMismatchError: A gradient is not congruent with `theta`.
        NonFiniteUpdateError: The result is not finite.
    """
    arrays = theta.combine(d_theta, lr * q_n)
    if eta and entropy_grad is not None:
        theta.check_congruent(entropy_grad)
        arrays = {n: a + (lr * eta) * entropy_grad[n] for n, a in arrays.items()}
    return _checked(theta, arrays, "Actor")


def state_value(theta: ParameterSet, w: ParameterSet, state: EnvState) -> float:
    """sum_a pi(a|s) q(s, a): the critic's values weighted by the actor."""
    return float(forward_actor(theta, state) @ forward_critic(w, state))


def train_step(
    theta: ParameterSet,
    w: ParameterSet,
    env: StreamingEnv,
    state: EnvState,
    rng: np.random.Generator,
    cfg: TrainConfig,
    eta: float,
) -> Tuple[ParameterSet, ParameterSet, StepResult]:
    """Play one chunk and apply the critic, then the actor update."""
    probabilities = forward_actor(theta, state)
    action = sample_action(probabilities, rng)
    record, next_state, done = env.step(action)
    q_n = float(forward_critic(w, state)[action])
    q_next = 0.0 if done else state_value(theta, w, next_state)
    delta = td_error(q_n, record.qoe, cfg.gamma, q_next, done)
    d_w = grad_q(w, state, action)
    w = critic_step(w, delta, d_w, cfg.critic_lr)
    d_theta = grad_log_policy(theta, state, action)
    coefficient = q_n if cfg.actor_update == "literal" else -delta
    if eta > 0:
        entropy_grad, h = grad_entropy(theta, state)
    else:
        entropy_grad = None
        p = probabilities[probabilities > 0]
        h = float(-np.sum(p * np.log(p)))
    theta = actor_step(theta, coefficient, d_theta, cfg.actor_lr, eta, entropy_grad)
    transition = Transition(state, action, record.qoe, next_state, done)
    return theta, w, StepResult(transition, q_n, q_next, delta, h, d_theta, d_w)


def train_episode(
    theta: ParameterSet,
    w: ParameterSet,
    env: StreamingEnv,
    rng: np.random.Generator,
    cfg: TrainConfig,
    eta: float,
) -> Tuple[ParameterSet, ParameterSet, List[StepResult]]:
    """One full episode of online updates starting from (theta, w).

    Raises:
        NonFiniteUpdateError: With a snapshot of the failing step.
    """
    state = env.reset()
    steps, done = [], False
    while not done:
        try:
            theta, w, step = train_step(theta, w, env, state, rng, cfg, eta)
        except (NonFiniteUpdateError, NonFiniteActivationError) as e:
            snapshot = {
                "trace": env.trace.name,
                "chunk": len(env.records),
                "state": state.__getstate__(),
                "actor_norms": {n: float(np.linalg.norm(a)) for n, a in theta.items()},
                "critic_norms": {n: float(np.linalg.norm(a)) for n, a in w.items()},
                "cause": str(e),
            }
            raise NonFiniteUpdateError(str(e), snapshot=snapshot)
        steps.append(step)
        state, done = step.transition.next_state, step.transition.done
    return theta, w, steps


class ParameterStore(object):
    """The global actor and critic shared by training workers.

    Snapshots are consistent pairs. Results are applied one at a time: a
    result computed on the current version replaces the parameters; one
    computed on an older snapshot contributes only its own change.
    """

    def __init__(self, actor: ParameterSet, critic: ParameterSet):
        self._lock = threading.Lock()
        self.actor = actor
        self.critic = critic
        self.version = 0

    def snapshot(self) -> Tuple[ParameterSet, ParameterSet, int]:
        with self._lock:
            return self.actor, self.critic, self.version

    def apply(
        self,
        actor: ParameterSet,
        critic: ParameterSet,
        base: Tuple[ParameterSet, ParameterSet, int],
    ) -> int:
        base_actor, base_critic, base_version = base
        with self._lock:
            if base_version == self.version:
                self.actor, self.critic = actor, critic
            else:
                self.actor = _checked(
                    self.actor, self.actor.combine(actor.minus(base_actor)), "Actor"
                )
                self.critic = _checked(
                    self.critic, self.critic.combine(critic.minus(base_critic)), "Critic"
                )
            self.version += 1
            return self.version


class TrainingReport(SemABR):
    """Per-epoch curves and the final parameters of a run."""

    def __init__(
        self,
        reward_curve: List[float],
        entropy_curve: List[float],
        actor: ParameterSet,
        critic: ParameterSet,
        wall_time: float,
        epoch_wall: List[float] = None,
    ):
        self.reward_curve = list(reward_curve)
        self.entropy_curve = list(entropy_curve)
        self.actor = actor
        self.critic = critic
        self.wall_time = wall_time
        self.epoch_wall = list(epoch_wall) if epoch_wall is not None else []
        super(TrainingReport, self).__init__()

    state_hide = ["actor", "critic", "wall_time", "epoch_wall"]

    @property
    def epochs(self) -> int:
        return len(self.reward_curve)

    def curve_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "epoch": np.arange(1, self.epochs + 1),
                "mean_reward": self.reward_curve,
                "mean_entropy": self.entropy_curve,
            }
        )

    def log_frame(self) -> pd.DataFrame:
        frame = self.curve_frame()
        frame["wall_s"] = self.epoch_wall if self.epoch_wall else np.nan
        return frame


def make_env_factory(
    session: SessionConfig, table: RateAccuracyTable = None
) -> Callable[..., StreamingEnv]:
    return functools.partial(StreamingEnv, config=session, table=table)


def train(
    cfg: TrainConfig,
    env_factory: Callable[..., StreamingEnv],
    corpus: TraceCorpus,
    architecture: Architecture = None,
    on_checkpoint: Callable[[int, ParameterSet, ParameterSet], None] = None,
) -> TrainingReport:
    """Train an actor and a critic for `cfg.epochs` episodes.

    Epoch e draws its trace and its actions from a generator seeded by
    (cfg.seed, e), so a single worker is fully reproducible.

    Args:
        cfg: Hyperparameters.
        env_factory: Builds a fresh environment for a trace.
        corpus: The training traces.
        architecture (optional): Defaults to the layout matching the
            environment's history length and ladder.
        on_checkpoint (optional): Called with (epochs done, actor, critic)
            every `cfg.checkpoint_every` epochs.

    Raises:
        EmptyCorpusError: The corpus holds no trace.
        NonFiniteUpdateError: An update went non-finite; carries the
            epoch and a diagnostic snapshot.
        Any other error of an epoch (e.g. StallError) is re-raised after
        every worker stopped, the one of the earliest epoch first.
    """
    if len(corpus) == 0:
        raise EmptyCorpusError("Cannot train on the empty corpus '%s'" % corpus.source)
    if architecture is None:
        architecture = Architecture.for_session(env_factory(corpus[0]).config)
    store = ParameterStore(
        init_params(derive_seed(cfg.seed, "actor_init"), architecture),
        init_params(derive_seed(cfg.seed, "critic_init"), architecture),
    )
    rewards = [None] * cfg.epochs
    entropies = [None] * cfg.epochs
    walls = [None] * cfg.epochs
    counter = {"next": 0}
    counter_lock = threading.Lock()
    failures = []
    start = time.perf_counter()

    def run_epoch(epoch):
        rng = np.random.default_rng(derive_seed(cfg.seed, "train", epoch))
        trace = corpus[int(rng.integers(len(corpus)))]
        base = store.snapshot()
        theta, w, steps = train_episode(
            base[0], base[1], env_factory(trace), rng, cfg, cfg.entropy_weight_at(epoch)
        )
        store.apply(theta, w, base)
        rewards[epoch] = float(np.mean([s.transition.reward for s in steps]))
        entropies[epoch] = float(np.mean([s.entropy for s in steps]))
        walls[epoch] = time.perf_counter() - start
        done = epoch + 1
        if cfg.checkpoint_every and done % cfg.checkpoint_every == 0:
            actor, critic, _ = store.snapshot()
            if on_checkpoint is not None:
                on_checkpoint(done, actor, critic)
        if done % max(cfg.epochs // 20, 1) == 0:
            log("Epoch %d/%d: mean reward %.4f" % (done, cfg.epochs, rewards[epoch]))

    def work():
        while True:
            with counter_lock:
                if failures or counter["next"] >= cfg.epochs:
                    return
                epoch = counter["next"]
                counter["next"] += 1
            try:
                run_epoch(epoch)
            except NonFiniteUpdateError as e:
                snapshot = dict(e.snapshot or {}, epoch=epoch)
                error = NonFiniteUpdateError(str(e), epoch=epoch, snapshot=snapshot)
                with counter_lock:
                    failures.append((epoch, error))
                return
            except Exception as e:
                # Re-raised after join.
                with counter_lock:
                    failures.append((epoch, e))
                return

    if cfg.workers == 1:
        work()
    else:
        threads = [threading.Thread(target=work, name="worker-%d" % i) for i in range(cfg.workers)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    if failures:
        epoch, error = min(failures, key=lambda f: f[0])
        log("Training aborted in epoch %d: %s" % (epoch, error), level=logging.ERROR)
        raise error
    actor, critic, _ = store.snapshot()
    return TrainingReport(
        rewards, entropies, actor, critic, time.perf_counter() - start, walls
    )


def evaluate(
    actor: ParameterSet,
    corpus: TraceCorpus,
    config: SessionConfig,
    seed: int = 0,
    table: RateAccuracyTable = None,
    scheme: str = "rl",
) -> List[EpisodeLog]:
    """Greedy episodes of the actor on every trace of `corpus`.

    Raises:
        EmptyCorpusError: The corpus holds no trace.
    """
    if len(corpus) == 0:
        raise EmptyCorpusError("Cannot evaluate on the empty corpus '%s'" % corpus.source)
    policy = RLPolicy(actor, "greedy", seed=seed)
    return [
        run_episode(policy, trace, config, derive_seed(seed, "evaluate", i), table, scheme)
        for i, trace in enumerate(corpus)
    ]


def save_checkpoint(
    path: Union[str, Path],
    actor: ParameterSet,
    critic: ParameterSet,
    cfg: TrainConfig,
    epoch: int,
    session: SessionConfig = None,
) -> None:
    """Write both networks with the training config and the epoch counter."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "epoch": epoch,
        "train": cfg.to_dict(),
        "session": session.to_dict() if session is not None else None,
        "actor": params_payload(actor),
        "critic": params_payload(critic),
    }
    Path(path).write_text(jsonpickle.encode(payload, unpicklable=False))
    log("Wrote checkpoint of epoch %d to %s" % (epoch, path))


def load_checkpoint(path: Union[str, Path]) -> dict:
    """Read a checkpoint; its networks come back as ParameterSets."""
    payload = jsonpickle.decode(Path(path).read_text())
    return {
        "epoch": payload["epoch"],
        "train": TrainConfig(**payload["train"]),
        "session": SessionConfig(**payload["session"]) if payload.get("session") else None,
        "actor": params_from_payload(payload["actor"]),
        "critic": params_from_payload(payload["critic"]),
    }


def write_diagnostic(error: NonFiniteUpdateError, directory: Union[str, Path]) -> Path:
    """Dump the snapshot of a numerical abort as JSON; sets `error.diagnostic_path`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    epoch = error.epoch if error.epoch is not None else -1
    path = directory / ("diagnostic_epoch%d.json" % epoch)
    state = {"message": str(error), "epoch": error.epoch, "snapshot": error.snapshot}
    path.write_text(jsonpickle.encode(state, unpicklable=False, indent=2))
    error.diagnostic_path = path
    return path
