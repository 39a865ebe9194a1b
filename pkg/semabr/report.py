"""Comparison artifacts: empirical CDFs, per-scheme means and relative gains."""

import re
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence, Union

import numpy as np
import pandas as pd

from .base import SemABR, log
from .errors import (
    EmptyInputError,
    IoFailureError,
    MismatchedTraceSetsError,
    ZeroBaselineError,
)
from .playback import EpisodeLog
from .traces import manifest_hash

FLOAT_FORMAT = "%.17g"

#: Report metric -> EpisodeLog frame column.
METRICS = {
    "miou": "miou",
    "rebuffer_s": "rebuffer_s",
    "download_s": "download_s",
    "qoe": "qoe",
}

COMPARISON_COLUMNS = ["scheme", "mean_miou", "mean_rebuffer_s", "mean_download_s", "mean_qoe"]
GAIN_COLUMNS = ["scheme_a", "scheme_b", "metric", "gain_percent"]
CDF_COLUMNS = ["metric", "value", "fraction"]


class CdfSeries(SemABR):
    """Empirical distribution function of one metric."""

    def __init__(self, metric: str, values: Iterable[float], fractions: Iterable[float]):
        self.metric = metric
        self.values = np.asarray(values, dtype=np.float64)
        self.fractions = np.asarray(fractions, dtype=np.float64)
        super(CdfSeries, self).__init__()

    @property
    def points(self) -> List[tuple]:
        return list(zip(self.values.tolist(), self.fractions.tolist()))

    def __len__(self) -> int:
        return len(self.values)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"metric": self.metric, "value": self.values, "fraction": self.fractions},
            columns=CDF_COLUMNS,
        )

    def __getstate__(self) -> dict:
        return {"metric": self.metric, "points": self.points}


def cdf(values: Iterable[float], metric: str = "value") -> CdfSeries:
    """Sorted values paired with (i + 1) / n.

    Raises:
        EmptyInputError: No value was given.
    """
    v = np.sort(np.asarray(list(values), dtype=np.float64), kind="stable")
    n = len(v)
    if n == 0:
        raise EmptyInputError("Cannot build the CDF of '%s' from no values" % metric)
    return CdfSeries(metric, v, np.arange(1, n + 1) / n)


def relative_gain(a: float, b: float) -> float:
    """Percent gain of `a` over baseline `b`: 100 * (a - b) / |b|.

    Raises:
        ZeroBaselineError: `b` is zero.
    """
    if b == 0:
        raise ZeroBaselineError("Gain of %s over a zero baseline is undefined" % a)
    return 100.0 * (a - b) / abs(b)


def slug(name: str) -> str:
    """File-name-safe version of a scheme name."""
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name).strip("_") or "scheme"


class ComparisonReport(SemABR):
    """Means and pairwise gains of several schemes on one trace set."""

    def __init__(
        self,
        schemes: Sequence[str],
        pools: Mapping[str, pd.DataFrame],
        manifest: str,
        fingerprint: str = None,
        manifest_source: str = None,
        params: Mapping[str, str] = None,
        logs: Mapping[str, List[EpisodeLog]] = None,
    ):
        self.schemes = list(schemes)
        self.pools = {s: pools[s] for s in self.schemes}
        self.manifest = manifest
        self.manifest_source = manifest_source
        self.fingerprint = fingerprint
        self.params = dict(params or {})
        self.logs = dict(logs or {})
        self.means = self._means()
        self.gains = self._gains()
        super(ComparisonReport, self).__init__()

    state_hide = ["pools", "logs"]

    def _means(self) -> pd.DataFrame:
        rows = []
        for scheme in self.schemes:
            pool = self.pools[scheme]
            rows.append(
                {
                    "scheme": scheme,
                    "mean_miou": float(pool["miou"].mean()),
                    "mean_rebuffer_s": float(pool["rebuffer_s"].mean()),
                    "mean_download_s": float(pool["download_s"].mean()),
                    "mean_qoe": float(pool["qoe"].mean()),
                }
            )
        return pd.DataFrame(rows, columns=COMPARISON_COLUMNS)

    def mean(self, scheme: str, metric: str) -> float:
        row = self.means[self.means["scheme"] == scheme]
        return float(row["mean_" + metric].iloc[0])

    def _gains(self) -> pd.DataFrame:
        rows = []
        for a in self.schemes:
            for b in self.schemes:
                if a == b:
                    continue
                for metric in METRICS:
                    try:
                        gain = relative_gain(self.mean(a, metric), self.mean(b, metric))
                    except ZeroBaselineError:
                        gain = float("nan")
                    rows.append(
                        {"scheme_a": a, "scheme_b": b, "metric": metric, "gain_percent": gain}
                    )
        return pd.DataFrame(rows, columns=GAIN_COLUMNS)

    def gain(self, a: str, b: str, metric: str = "qoe") -> float:
        g = self.gains
        row = g[(g["scheme_a"] == a) & (g["scheme_b"] == b) & (g["metric"] == metric)]
        return float(row["gain_percent"].iloc[0])

    def cdfs(self, scheme: str) -> Dict[str, CdfSeries]:
        pool = self.pools[scheme]
        return {metric: cdf(pool[column], metric) for metric, column in METRICS.items()}

    def summary(self) -> str:
        """Human-readable table with provenance header."""
        lines = [
            "semabr scheme comparison",
            "version: %s" % self.version,
            "config fingerprint: %s" % self.fingerprint,
            "trace manifest: %s (%s)" % (self.manifest_source, self.manifest),
        ]
        lines += ["%s: %s" % (k, v) for k, v in self.params.items()]
        lines += ["", self.means.to_string(index=False, float_format=lambda x: "%.6f" % x)]
        if len(self.schemes) < 2:
            return "\n".join(lines) + "\n"
        lines += ["", "QoE gain [%] of row over column:"]
        qoe = self.gains[self.gains["metric"] == "qoe"]
        matrix = qoe.pivot(index="scheme_a", columns="scheme_b", values="gain_percent")
        matrix = matrix.reindex(index=self.schemes, columns=self.schemes)
        lines.append(matrix.to_string(float_format=lambda x: "%.2f" % x, na_rep="-"))
        return "\n".join(lines) + "\n"


def summarize(
    logs: Mapping[str, List[EpisodeLog]],
    order: Sequence[str] = None,
    fingerprint: str = None,
    manifest_source: str = None,
    params: Mapping[str, str] = None,
) -> ComparisonReport:
    """Pool every chunk of every episode per scheme and compare the pools.

    Args:
        logs: Scheme name -> its episode logs.
        order (optional): Declared scheme order; defaults to the mapping's.
        fingerprint (optional): Identifier of the run configuration.
        manifest_source (optional): Where the trace list came from.
        params (optional): Extra header lines for the summary.

    Raises:
        MismatchedTraceSetsError: Schemes were played on different traces.
        EmptyInputError: A scheme has no log.
    """
    order = list(order) if order is not None else list(logs)
    if set(order) != set(logs):
        raise ValueError("Scheme order %s does not match the logs %s" % (order, list(logs)))
    hashes = {}
    pools = {}
    for scheme in order:
        episodes = sorted(logs[scheme], key=lambda e: e.trace_name)
        if not episodes:
            raise EmptyInputError("Scheme '%s' has no episode" % scheme)
        hashes[scheme] = manifest_hash(e.trace_name for e in episodes)
        frames = [e.to_frame().assign(trace=e.trace_name) for e in episodes]
        pools[scheme] = pd.concat(frames, ignore_index=True)
    if len(set(hashes.values())) > 1:
        detail = ", ".join("%s=%s" % (s, h[:12]) for s, h in hashes.items())
        raise MismatchedTraceSetsError("Schemes saw different trace sets: %s" % detail)
    return ComparisonReport(
        order,
        pools,
        manifest=hashes[order[0]],
        fingerprint=fingerprint,
        manifest_source=manifest_source,
        params=params,
        logs={s: sorted(logs[s], key=lambda e: e.trace_name) for s in order},
    )


def _to_csv(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def emit(obj: Union[ComparisonReport, CdfSeries], destination: Union[str, Path]) -> List[Path]:
    """Write a report (into a directory) or a CDF (to a file).

    A report writes comparison.csv, gains.csv, summary.txt, one
    cdf/<scheme>_<metric>.csv per scheme and metric, and one
    episodes/<scheme>.csv with every chunk the scheme played.

    Raises:
        IoFailureError: The destination cannot be written.
    """
    destination = Path(destination)
    written = []
    try:
        if isinstance(obj, CdfSeries):
            destination.parent.mkdir(parents=True, exist_ok=True)
            _to_csv(obj.to_frame(), destination)
            return [destination]
        destination.mkdir(parents=True, exist_ok=True)
        (destination / "cdf").mkdir(exist_ok=True)
        (destination / "episodes").mkdir(exist_ok=True)
        path = destination / "comparison.csv"
        _to_csv(obj.means, path)
        written.append(path)
        path = destination / "gains.csv"
        _to_csv(obj.gains, path)
        written.append(path)
        path = destination / "summary.txt"
        path.write_text(obj.summary())
        written.append(path)
        for scheme in obj.schemes:
            for metric, series in obj.cdfs(scheme).items():
                path = destination / "cdf" / ("%s_%s.csv" % (slug(scheme), metric))
                _to_csv(series.to_frame(), path)
                written.append(path)
            pool = obj.pools[scheme]
            path = destination / "episodes" / ("%s.csv" % slug(scheme))
            _to_csv(pool[["trace"] + list(pool.columns.drop("trace"))], path)
            written.append(path)
    except OSError as e:
        raise IoFailureError("Cannot write report to '%s': %s" % (destination, e))
    log("Wrote %d report file(s) to %s" % (len(written), destination))
    return written
