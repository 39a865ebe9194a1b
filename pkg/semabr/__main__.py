"""semabr command line tools.

Split a trace directory into train/test manifests:
`semabr split traces/ --fraction 0.75`
train the actor-critic controller on the train manifest:
`semabr train --trace-dir traces/ --manifest out/train.txt`
compare schemes on the test manifest:
`semabr compare --trace-dir traces/ --manifest out/test.txt --schemes "fixed:0,bb:5,10,mpc:5,5"`
and inspect inputs with `semabr trace-info <file>`, `semabr table` and
`semabr config`.

Settings come from built-in defaults, then a JSON config file
(`--config`), then environment variables `SEMABR_<SECTION>__<KEY>` or
`SEMABR_SEED`, then command-line flags; later layers win.

Exit codes: 0 success, 1 usage or empty input, 2 invalid input,
3 numerical failure during training.
"""

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Dict, List, Mapping, Optional

from .base import SemABR, log
from .errors import (
    EmptyCorpusError,
    Error,
    NonFiniteActivationError,
    NonFiniteParameterError,
    NonFiniteUpdateError,
    ParametersError,
    SchemeSpecError,
)
from .metrics import RateAccuracyTable, compare_codecs
from .playback import SessionConfig, run_episode
from .policies import MpcConfig, build_policy, parse_scheme, split_schemes
from .report import emit, summarize
from .rl import TrainConfig, make_env_factory, save_checkpoint, train, write_diagnostic
from .traces import load_corpus, read_manifest, read_trace, split_corpus, write_manifest
from .utils import deep_combine, derive_seed
from .validators import RUN_SCHEMA, validate

ENV_PREFIX = "SEMABR_"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    """Raised by the argument parser instead of exiting."""


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class RunConfig(SemABR):
    """The merged, validated settings tree of one invocation."""

    defaults = {
        "seed": 0,
        "schemes": ["fixed:0", "fixed:1", "fixed:2", "fixed:3", "bb", "mpc"],
        "session": dict(SessionConfig.defaults),
        "train": {k: v for k, v in TrainConfig.defaults.items() if k != "seed"},
        "mpc": {"horizon": 5, "window": 5},
        "bb": {"reservoir": 5.0, "cushion": 10.0},
        "split": {"fraction": 0.75},
        "paths": {
            "trace_dir": None,
            "table": None,
            "out_dir": "out",
            "train_manifest": None,
            "test_manifest": None,
            "checkpoint": None,
        },
    }

    def __init__(self, tree: dict):
        self.tree = validate(RUN_SCHEMA, deep_combine(self.defaults, tree), section="run")
        super(RunConfig, self).__init__()

    @classmethod
    def load(
        cls,
        path: Optional[Path] = None,
        environ: Mapping[str, str] = None,
        overrides: dict = None,
    ) -> "RunConfig":
        """Merge defaults < config file < environment < overrides."""
        layers = [cls.defaults]
        if path is not None:
            with open(path, "r") as f:
                layers.append(json.load(f))
        layers.append(env_overrides(os.environ if environ is None else environ))
        layers.append(overrides or {})
        return cls(deep_combine(*layers))

    def __getitem__(self, key):
        return self.tree[key]

    @property
    def seed(self) -> int:
        return self.tree["seed"]

    @property
    def paths(self) -> dict:
        return self.tree["paths"]

    def session(self) -> SessionConfig:
        return SessionConfig(**self.tree["session"])

    def train_config(self) -> TrainConfig:
        return TrainConfig(**dict(self.tree["train"], seed=self.seed))

    def mpc(self) -> MpcConfig:
        return MpcConfig(**self.tree["mpc"])

    def table(self) -> RateAccuracyTable:
        return RateAccuracyTable.load(self.paths["table"])

    def fingerprint(self) -> str:
        """Identifier of every setting that shapes results (paths excluded)."""
        tree = {k: v for k, v in self.tree.items() if k != "paths"}
        return self.hash(json.dumps(tree, sort_keys=True))

    def __getstate__(self) -> dict:
        return self.tree


def env_overrides(environ: Mapping[str, str]) -> dict:
    """Settings from `SEMABR_SEED` and `SEMABR_<SECTION>__<KEY>` variables."""
    tree = {}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX) :].lower()
        if rest == "seed":
            tree["seed"] = value
        elif rest == "schemes":
            tree["schemes"] = split_schemes(value)
        elif "__" in rest:
            section, key = rest.split("__", 1)
            tree.setdefault(section, {})[key] = value
    return tree


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="semabr")
    parser.add_argument("--config", "-c", default=None, help="path to a JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="root seed of all randomness")
    parser.add_argument("--out", default=None, help="output directory")
    sub = parser.add_subparsers(dest="action")

    p = sub.add_parser("split", help="split a trace directory into train/test manifests")
    p.add_argument("trace_dir", nargs="?", default=None)
    p.add_argument("--fraction", type=float, default=None)

    p = sub.add_parser("train", help="train the actor-critic controller")
    p.add_argument("--trace-dir", default=None)
    p.add_argument("--manifest", default=None, help="train manifest")
    p.add_argument("--table", default=None, help="rate-accuracy table file")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("compare", help="evaluate schemes on the test traces")
    p.add_argument("--trace-dir", default=None)
    p.add_argument("--manifest", default=None, help="test manifest")
    p.add_argument("--table", default=None, help="rate-accuracy table file")
    p.add_argument("--schemes", default=None, help="e.g. 'fixed:0,bb:5,10,mpc:5,5,rl:ckpt.json'")

    p = sub.add_parser("trace-info", help="summarize one trace file")
    p.add_argument("trace_file")

    p = sub.add_parser("table", help="compare two codecs of a rate-accuracy table")
    p.add_argument("--table", default=None)
    p.add_argument("--codec", default="abrvsc")
    p.add_argument("--baseline", default="traditional")

    p = sub.add_parser("config", help="print the merged configuration")
    p.add_argument("--write", default=None, help="also save it to this file")
    return parser


def overrides_from(args: argparse.Namespace) -> dict:
    """The settings given as command-line flags."""
    tree = {"paths": {}, "train": {}, "split": {}}
    if args.seed is not None:
        tree["seed"] = args.seed
    if args.out is not None:
        tree["paths"]["out_dir"] = args.out
    flags = vars(args)
    if flags.get("trace_dir") is not None:
        tree["paths"]["trace_dir"] = flags["trace_dir"]
    if flags.get("table") is not None:
        tree["paths"]["table"] = flags["table"]
    if flags.get("manifest") is not None:
        key = "train_manifest" if args.action == "train" else "test_manifest"
        tree["paths"][key] = flags["manifest"]
    for key in ("epochs", "workers"):
        if flags.get(key) is not None:
            tree["train"][key] = flags[key]
    if flags.get("fraction") is not None:
        tree["split"]["fraction"] = flags["fraction"]
    if flags.get("schemes") is not None:
        tree["schemes"] = split_schemes(flags["schemes"])
    return {k: v for k, v in tree.items() if v != {}}


def main(*args) -> int:
    """Launch the main routine; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(args if args else None)
        if args.action is None:
            raise UsageError("no command given")
    except UsageError as e:
        print("semabr: %s" % e, file=sys.stderr)
        print(parser.format_usage(), file=sys.stderr, end="")
        return EXIT_USAGE
    try:
        config = RunConfig.load(args.config, overrides=overrides_from(args))
    except (ParametersError, OSError, ValueError) as e:
        print("semabr: invalid configuration: %s" % e, file=sys.stderr)
        return EXIT_INVALID
    actions = {
        "split": cmd_split,
        "train": cmd_train,
        "compare": cmd_compare,
        "trace-info": cmd_trace_info,
        "table": cmd_table,
        "config": cmd_config,
    }
    return actions[args.action](config, args)


def _fail(code: int, message: str) -> int:
    log(message)
    print("semabr: %s" % message, file=sys.stderr)
    return code


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.paths["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest_corpus(config: RunConfig, key: str):
    """The corpus named by a manifest, loaded from the trace directory."""
    trace_dir, manifest = config.paths["trace_dir"], config.paths[key]
    for what, path in (("trace directory", trace_dir), (key.replace("_", " "), manifest)):
        if path is None:
            raise FileNotFoundError("No %s given" % what)
        if not Path(path).exists():
            raise FileNotFoundError("The %s '%s' does not exist" % (what, path))
    return load_corpus(trace_dir, read_manifest(manifest)), manifest


def cmd_split(config: RunConfig, args) -> int:
    """Write train.txt and test.txt manifests into the output directory."""
    trace_dir = config.paths["trace_dir"]
    if trace_dir is None or not Path(trace_dir).is_dir():
        return _fail(EXIT_USAGE, "trace directory '%s' not found" % trace_dir)
    try:
        corpus = load_corpus(trace_dir)
        train_set, test_set = split_corpus(
            corpus, config["split"]["fraction"], derive_seed(config.seed, "split")
        )
    except EmptyCorpusError as e:
        return _fail(EXIT_USAGE, str(e))
    except Error as e:
        return _fail(EXIT_INVALID, str(e))
    out = _out_dir(config)
    write_manifest(train_set, out / "train.txt")
    write_manifest(test_set, out / "test.txt")
    print("train: %d trace(s) -> %s" % (len(train_set), out / "train.txt"))
    print("test: %d trace(s) -> %s" % (len(test_set), out / "test.txt"))
    return EXIT_OK


def cmd_train(config: RunConfig, args) -> int:
    """Train, then write checkpoint.json, reward_curve.csv and training_log.csv."""
    try:
        corpus, _ = _manifest_corpus(config, "train_manifest")
        table = config.table()
        session = config.session()
        cfg = config.train_config()
        table.knots(session.codec)
    except EmptyCorpusError as e:
        return _fail(EXIT_USAGE, str(e))
    except (Error, OSError, ValueError) as e:
        return _fail(EXIT_INVALID, str(e))
    if len(corpus) == 0:
        return _fail(EXIT_USAGE, "the train manifest lists no trace")
    out = _out_dir(config)
    checkpoints = out / "checkpoints"

    def on_checkpoint(epoch, actor, critic):
        checkpoints.mkdir(exist_ok=True)
        save_checkpoint(checkpoints / ("epoch_%d.json" % epoch), actor, critic, cfg, epoch, session)

    try:
        report = train(cfg, make_env_factory(session, table), corpus, on_checkpoint=on_checkpoint)
    except NonFiniteUpdateError as e:
        path = write_diagnostic(e, out)
        return _fail(EXIT_NUMERIC, "%s; diagnostic written to %s" % (e, path))
    except (NonFiniteActivationError, NonFiniteParameterError) as e:
        return _fail(EXIT_NUMERIC, str(e))
    except Error as e:
        return _fail(EXIT_INVALID, str(e))
    save_checkpoint(out / "checkpoint.json", report.actor, report.critic, cfg, report.epochs, session)
    report.curve_frame().to_csv(
        out / "reward_curve.csv", index=False, float_format="%.17g", lineterminator="\n"
    )
    report.log_frame().to_csv(
        out / "training_log.csv", index=False, float_format="%.17g", lineterminator="\n"
    )
    print(
        "trained %d epoch(s) in %.1f s; final mean reward %.4f -> %s"
        % (report.epochs, report.wall_time, report.reward_curve[-1], out / "checkpoint.json")
    )
    return EXIT_OK


def cmd_compare(config: RunConfig, args) -> int:
    """Evaluate every scheme on the test traces and emit the report."""
    try:
        corpus, manifest = _manifest_corpus(config, "test_manifest")
        table = config.table()
        session = config.session()
        mpc = config.mpc()
        bb = (config["bb"]["reservoir"], config["bb"]["cushion"])
        specs = [parse_scheme(text) for text in config["schemes"]]
        names = [s.text for s in specs]
        if len(set(names)) != len(names):
            raise SchemeSpecError("Scheme list %s repeats a scheme" % names)
        policies = []
        for spec in specs:
            scheme_session = session.replace(codec=spec.codec) if spec.codec else session
            table.knots(scheme_session.codec)
            policy = build_policy(spec, scheme_session, table, mpc_defaults=mpc, bb_defaults=bb)
            policies.append((spec.text, policy, scheme_session))
    except EmptyCorpusError as e:
        return _fail(EXIT_USAGE, str(e))
    except (Error, OSError, ValueError) as e:
        return _fail(EXIT_INVALID, str(e))
    if len(corpus) == 0:
        return _fail(EXIT_USAGE, "the test manifest lists no trace")
    logs: Dict[str, List] = {}
    try:
        for name, policy, scheme_session in policies:
            logs[name] = [
                run_episode(
                    policy,
                    trace,
                    scheme_session,
                    derive_seed(config.seed, "compare", i),
                    table,
                    scheme=name,
                )
                for i, trace in enumerate(corpus)
            ]
            log("Evaluated %s on %d trace(s)" % (name, len(corpus)))
    except (NonFiniteActivationError, NonFiniteParameterError) as e:
        return _fail(EXIT_NUMERIC, "%s: %s" % (name, e))
    except Error as e:
        return _fail(EXIT_INVALID, "%s: %s" % (name, e))
    params = {
        "bb defaults": "reservoir %g s, cushion %g s" % bb,
        "mpc defaults": "horizon %d, window %d (harmonic mean)" % (mpc.horizon, mpc.window),
        "session": ", ".join("%s=%s" % kv for kv in session.to_dict().items()),
    }
    try:
        report = summarize(
            logs,
            order=names,
            fingerprint=config.fingerprint(),
            manifest_source=str(manifest),
            params=params,
        )
        emit(report, Path(config.paths["out_dir"]) / "report")
    except Error as e:
        return _fail(EXIT_INVALID, str(e))
    print(report.summary(), end="")
    return EXIT_OK


def cmd_trace_info(config: RunConfig, args) -> int:
    try:
        trace = read_trace(args.trace_file)
    except Error as e:
        return _fail(EXIT_INVALID, str(e))
    stats = trace.stats()
    print("name: %s" % stats["name"])
    print("duration: %g s" % stats["duration"])
    print("samples: %d" % stats["samples"])
    print("mean bandwidth: %.6g Mbps (time-weighted)" % stats["mean"])
    print("min bandwidth: %.6g Mbps" % stats["min"])
    print("max bandwidth: %.6g Mbps" % stats["max"])
    return EXIT_OK


def cmd_table(config: RunConfig, args) -> int:
    try:
        table = config.table()
        frame = compare_codecs(table, args.codec, args.baseline)
    except (Error, OSError) as e:
        return _fail(EXIT_INVALID, str(e))
    print(frame.to_string(index=False, float_format=lambda x: "%.4f" % x))
    if args.out is not None:
        path = _out_dir(config) / "codec_comparison.csv"
        frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return EXIT_OK


def cmd_config(config: RunConfig, args) -> int:
    text = json.dumps(config.tree, indent=2, sort_keys=True) + "\n"
    print(text, end="")
    if args.write:
        Path(args.write).write_text(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
