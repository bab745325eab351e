"""Composite distributions and mitigation ranking.

Each (demand x routing) sample yields one per-flow distribution; extracting
an order statistic (say the 99th-percentile FCT) from every sample gives a
composite distribution of that statistic. Mitigations are compared on a
summary percentile of the composite (the 90th by default, a robust estimate)
using either a priority comparator (walk metrics in order, deciding on the
first gap wider than the tie fraction) or a linear comparator (weighted sum
of metrics normalized by their healthy-network values, lower is better).

Quantiles everywhere are nearest-rank: element ceil(q * n) of the sorted
sample, deterministic and interpolation-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

LOWER_BETTER = "lower-better"
HIGHER_BETTER = "higher-better"

P99_FCT = "p99_fct"
P01_THROUGHPUT = "p01_throughput"
AVG_THROUGHPUT = "avg_throughput"

METRIC_DIRECTION = {
    P99_FCT: LOWER_BETTER,
    P01_THROUGHPUT: HIGHER_BETTER,
    AVG_THROUGHPUT: HIGHER_BETTER,
}


def nearest_rank(values: np.ndarray, q: float) -> float:
    """Nearest-rank quantile: element ceil(q*n) (1-indexed) of the sorted sample."""
    if len(values) == 0:
        raise ConfigurationError("quantile of an empty sample")
    if not (0 < q <= 1):
        raise ConfigurationError("quantile must be in (0, 1]")
    v = np.sort(np.asarray(values))
    rank = max(1, math.ceil(q * len(v)))
    return float(v[rank - 1])


@dataclass(frozen=True)
class MetricSpec:
    name: str  # one of the standard metric names above, or custom
    kind: str  # "fct_quantile" | "throughput_quantile" | "throughput_mean"
    q: float = 0.5
    direction: str = LOWER_BETTER

    def __post_init__(self):
        if self.kind.endswith("quantile") and not (0 < self.q < 1):
            raise ConfigurationError("quantile must be in (0, 1)")


STANDARD_METRICS = (
    MetricSpec(P99_FCT, "fct_quantile", 0.99, LOWER_BETTER),
    MetricSpec(P01_THROUGHPUT, "throughput_quantile", 0.01, HIGHER_BETTER),
    MetricSpec(AVG_THROUGHPUT, "throughput_mean", direction=HIGHER_BETTER),
)


def sample_statistic(metric: MetricSpec, values: np.ndarray) -> float:
    if metric.kind == "throughput_mean":
        return float(np.mean(values))
    return nearest_rank(values, metric.q)


@dataclass
class CompositeDistribution:
    metric: MetricSpec
    values: np.ndarray  # one statistic per (demand x routing) sample
    skipped_samples: int = 0  # samples with an empty per-flow distribution
    summary_q: float = 0.90

    def summary(self) -> float:
        return nearest_rank(self.values, self.summary_q)


def composite(
    per_sample_values: list[np.ndarray],
    metric: MetricSpec,
    summary_q: float = 0.90,
) -> CompositeDistribution:
    """One order statistic per sample; empty samples are skipped and tallied."""
    if not per_sample_values:
        raise ConfigurationError("no samples to compose")
    stats = []
    skipped = 0
    for vals in per_sample_values:
        if len(vals) == 0:
            skipped += 1
            continue
        stats.append(sample_statistic(metric, vals))
    if not stats:
        raise ConfigurationError("every sample was empty")
    return CompositeDistribution(
        metric=metric, values=np.asarray(stats), skipped_samples=skipped, summary_q=summary_q
    )


def fct_from_throughput(throughputs: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """FCT = size / throughput (sizes in bytes, throughput bits/s)."""
    return sizes * 8.0 / throughputs


def throughput_from_fct(fcts: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    return sizes * 8.0 / fcts


@dataclass
class EvaluationResult:
    mitigation_id: str
    composites: dict[str, CompositeDistribution]
    failure_fraction: float = 0.0  # flows that could never complete
    partitioned: bool = False

    def summary(self, metric_name: str) -> float:
        return self.composites[metric_name].summary()


A_BETTER = "a-better"
B_BETTER = "b-better"
TIE = "tie"


@dataclass(frozen=True)
class PriorityComparator:
    metrics: tuple[str, ...]  # metric names, highest priority first
    tie_fraction: float = 0.10
    failure_gate: float | None = 0.01  # a side failing more than this loses outright

    def __post_init__(self):
        if not self.metrics:
            raise ConfigurationError("priority comparator needs at least one metric")
        if not (0 <= self.tie_fraction < 1):
            raise ConfigurationError("tie fraction must be in [0, 1)")


@dataclass(frozen=True)
class LinearComparator:
    """w0*(99pFCT/99pFCT_h) + w1*(1pThru_h/1pThru) + w2*(avgThru_h/avgThru),
    lower score wins; _h are the healthy-network baselines."""

    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    healthy: dict[str, float] | None = None
    tie_fraction: float = 0.0

    def __post_init__(self):
        if any(w < 0 for w in self.weights) or not any(self.weights):
            raise ConfigurationError("weights must be >= 0 and not all zero")

    def score(self, result: EvaluationResult) -> float:
        if not self.healthy:
            raise ConfigurationError("linear comparator needs healthy-network metrics")
        w0, w1, w2 = self.weights
        h = self.healthy
        s = 0.0
        if w0:
            s += w0 * result.summary(P99_FCT) / h[P99_FCT]
        if w1:
            s += w1 * h[P01_THROUGHPUT] / result.summary(P01_THROUGHPUT)
        if w2:
            s += w2 * h[AVG_THROUGHPUT] / result.summary(AVG_THROUGHPUT)
        return s


Comparator = PriorityComparator | LinearComparator


def _gap(a: float, b: float, direction: str) -> tuple[float, str]:
    """Relative gap versus the better value, and which side is better."""
    if a == b:
        return 0.0, TIE
    lower = a < b
    better_is_a = lower if direction == LOWER_BETTER else not lower
    better = a if better_is_a else b
    if better == 0:
        return math.inf, A_BETTER if better_is_a else B_BETTER
    return abs(a - b) / abs(better), A_BETTER if better_is_a else B_BETTER


def compare(
    a: EvaluationResult, b: EvaluationResult, comparator: Comparator
) -> tuple[str, list[dict]]:
    """Ordering plus a transcript of which metric decided."""
    transcript: list[dict] = []
    if isinstance(comparator, LinearComparator):
        sa, sb = comparator.score(a), comparator.score(b)
        transcript.append({"metric": "linear_score", "a": sa, "b": sb})
        if math.isclose(sa, sb, rel_tol=max(comparator.tie_fraction, 1e-12)):
            return TIE, transcript
        return (A_BETTER if sa < sb else B_BETTER), transcript

    gate = comparator.failure_gate
    if gate is not None:
        fa, fb = a.failure_fraction, b.failure_fraction
        if (fa > gate) != (fb > gate):
            transcript.append({"metric": "failure_gate", "a": fa, "b": fb})
            return (B_BETTER if fa > gate else A_BETTER), transcript
    for name in comparator.metrics:
        va, vb = a.summary(name), b.summary(name)
        gap, winner = _gap(va, vb, METRIC_DIRECTION.get(name, LOWER_BETTER))
        decided = gap > comparator.tie_fraction
        transcript.append(
            {"metric": name, "a": va, "b": vb, "gap": gap, "decided": decided}
        )
        if decided:
            return winner, transcript
    return TIE, transcript


def rank(
    results: list[EvaluationResult], comparator: Comparator
) -> list[EvaluationResult]:
    """Total order by repeated tournament selection; ties and input order are
    broken by mitigation id, partitioned candidates sink to the bottom."""
    if not results:
        raise ConfigurationError("nothing to rank")
    healthy_pool = sorted(
        (r for r in results if not r.partitioned), key=lambda r: r.mitigation_id
    )
    partitioned = sorted(
        (r for r in results if r.partitioned), key=lambda r: r.mitigation_id
    )
    ordered: list[EvaluationResult] = []
    pool = list(healthy_pool)
    while pool:
        best = pool[0]
        for challenger in pool[1:]:
            verdict, _ = compare(challenger, best, comparator)
            if verdict == A_BETTER:
                best = challenger
        ordered.append(best)
        pool.remove(best)
    return ordered + partitioned


def performance_penalty(
    chosen: float, best: float, direction: str
) -> float | None:
    """Relative gap in percent versus the best candidate; 0 at the optimum.
    None when the best value is zero (undefined)."""
    if best == 0:
        return None
    if direction == LOWER_BETTER:
        return (chosen - best) / best * 100.0
    return (best - chosen) / best * 100.0
