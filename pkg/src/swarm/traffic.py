"""Demand sampling from traffic distributions.

A demand matrix is the list of flows (src server, dst server, size, start
time) drawn from per-server Poisson arrivals, an empirical flow-size CDF
and a server-pair communication probability matrix. Sampling is bitwise
reproducible for a fixed (spec, seed).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import ConfigurationError
from .net_model import NetworkState
from .seeds import rng_for


@dataclass(frozen=True)
class Flow:
    id: str
    src: str
    dst: str
    size: float  # bytes
    start: float  # seconds


@dataclass(frozen=True)
class DemandMatrix:
    flows: tuple[Flow, ...]
    seed: int = 0

    def total_bytes(self) -> float:
        return math.fsum(f.size for f in self.flows)


@dataclass(frozen=True)
class SamplingConfig:
    demand_samples: int  # K
    routing_samples: int  # N
    alpha: float = 0.05
    epsilon: float = 0.05
    interval: tuple[float, float] = (0.0, math.inf)  # measurement interval I

    def __post_init__(self):
        if self.demand_samples < 1 or self.routing_samples < 1:
            raise ConfigurationError("sample counts must be >= 1")
        t0, t1 = self.interval
        if not t0 < t1:
            raise ConfigurationError("interval must satisfy t0 < t1")


@dataclass(frozen=True)
class TrafficSpec:
    rate_per_server_fps: float
    size_cdf: tuple[tuple[float, float], ...]  # (bytes, cumulative prob), ends at 1
    duration_s: float
    short_threshold_bytes: float = 150e3
    # sparse (src, dst, prob) rows; empty means uniform over distinct pairs
    comm_prob: tuple[tuple[str, str, float], ...] = ()

    def __post_init__(self):
        if self.rate_per_server_fps < 0:
            raise ConfigurationError("arrival rate must be >= 0")
        if self.duration_s <= 0:
            raise ConfigurationError("duration must be positive")
        if self.short_threshold_bytes <= 0:
            raise ConfigurationError("short threshold must be positive")
        if not self.size_cdf:
            raise ConfigurationError("empty flow size distribution")
        prev = 0.0
        for size, p in self.size_cdf:
            if size <= 0:
                raise ConfigurationError("flow sizes must be positive")
            if p < prev:
                raise ConfigurationError("size CDF must be non-decreasing")
            prev = p
        if abs(prev - 1.0) > 1e-9:
            raise ConfigurationError("size CDF must end at 1")
        if self.comm_prob:
            by_src: dict[str, float] = {}
            for src, dst, p in self.comm_prob:
                if src == dst:
                    raise ConfigurationError("comm_prob pairs must have src != dst")
                by_src[src] = by_src.get(src, 0.0) + p
            for src, total in by_src.items():
                if abs(total - 1.0) > 1e-9:
                    raise ConfigurationError(f"comm_prob row for {src} sums to {total}")


def default_size_cdf() -> tuple[tuple[float, float], ...]:
    """Heavy-tailed empirical CDF shipped as package data (DCTCP-like mix of
    mice and elephants); callers normally supply their own measured CDF."""
    with resources.files("swarm.data").joinpath("size_cdf_default.json").open() as fh:
        points = json.load(fh)["size_cdf"]
    return tuple((float(b), float(p)) for b, p in points)


def _sample_sizes(cdf: tuple[tuple[float, float], ...], u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw on the discrete support (smallest size with CDF >= u)."""
    probs = np.array([p for _, p in cdf])
    sizes = np.array([s for s, _ in cdf])
    idx = np.searchsorted(probs, u, side="left")
    idx = np.minimum(idx, len(sizes) - 1)
    return sizes[idx]


def sample_demand(spec: TrafficSpec, servers: list[str], seed: int) -> DemandMatrix:
    """Draw one demand matrix: per-server flow counts are Poisson(rate * duration),
    start times uniform over the duration, destinations from comm_prob."""
    if not servers:
        raise ConfigurationError("no servers to sample traffic for")
    servers = sorted(servers)
    server_idx = {s: i for i, s in enumerate(servers)}

    dst_choices: dict[str, tuple[list[str], np.ndarray]] = {}
    if spec.comm_prob:
        rows: dict[str, list[tuple[str, float]]] = {}
        for src, dst, p in spec.comm_prob:
            rows.setdefault(src, []).append((dst, p))
        for src, pairs in rows.items():
            pairs.sort()
            dst_choices[src] = (
                [d for d, _ in pairs],
                np.cumsum([p for _, p in pairs]),
            )

    flows: list[Flow] = []
    rng = rng_for("demand", seed)
    for src in servers:
        if spec.comm_prob and src not in dst_choices:
            continue
        n = int(rng.poisson(spec.rate_per_server_fps * spec.duration_s))
        if n == 0:
            continue
        starts = rng.random(n) * spec.duration_s
        sizes = _sample_sizes(spec.size_cdf, rng.random(n))
        if spec.comm_prob:
            dsts_pool, cdf = dst_choices[src]
            picks = np.searchsorted(cdf, rng.random(n), side="left")
            picks = np.minimum(picks, len(dsts_pool) - 1)
            dsts = [dsts_pool[i] for i in picks]
        else:
            offsets = rng.integers(1, len(servers), size=n) if len(servers) > 1 else None
            if offsets is None:
                raise ConfigurationError("uniform comm_prob needs at least two servers")
            dsts = [servers[(server_idx[src] + int(o)) % len(servers)] for o in offsets]
        for j in range(n):
            flows.append(Flow("", src, dsts[j], float(sizes[j]), float(starts[j])))

    flows.sort(key=lambda f: (f.start, f.src, f.dst, f.size))
    flows = [
        Flow(f"f{i:07d}", f.src, f.dst, f.size, f.start) for i, f in enumerate(flows)
    ]
    return DemandMatrix(flows=tuple(flows), seed=seed)


def split_traffic(dm: DemandMatrix, short_threshold: float) -> tuple[DemandMatrix, DemandMatrix]:
    """Partition into (short, long); sizes <= threshold are short."""
    if short_threshold <= 0:
        raise ConfigurationError("short threshold must be positive")
    short = tuple(f for f in dm.flows if f.size <= short_threshold)
    long = tuple(f for f in dm.flows if f.size > short_threshold)
    return DemandMatrix(short, dm.seed), DemandMatrix(long, dm.seed)


def downscale_traffic(
    dm: DemandMatrix, state: NetworkState, k: int, seed: int = 0
) -> list[tuple[DemandMatrix, NetworkState]]:
    """POP-style split: each flow lands in exactly one of k sub-matrices
    uniformly at random; each sub-state divides all capacities by k."""
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    if k == 1:
        return [(dm, state)]
    rng = rng_for("downscale", seed, dm.seed)
    assignment = rng.integers(0, k, size=len(dm.flows))
    groups: list[list[Flow]] = [[] for _ in range(k)]
    for f, g in zip(dm.flows, assignment):
        groups[int(g)].append(f)
    from dataclasses import replace as _replace

    sub_state = state.with_edges(
        [_replace(e, capacity=e.capacity / k) for e in state.edges.values()]
    )
    return [(DemandMatrix(tuple(g), dm.seed), sub_state) for g in groups]


def required_samples(alpha: float, epsilon: float) -> int:
    """Dvoretzky-Kiefer-Wolfowitz sample count for an empirical CDF within
    epsilon of the truth with confidence 1 - alpha."""
    if not (0 < alpha < 1):
        raise ConfigurationError(f"alpha must be in (0, 1), got {alpha}")
    if epsilon <= 0:
        raise ConfigurationError(f"epsilon must be positive, got {epsilon}")
    return math.ceil(math.log(2.0 / alpha) / (2.0 * epsilon * epsilon))


# -- traffic/v1 file format ------------------------------------------------------


def spec_to_dict(spec: TrafficSpec) -> dict:
    return {
        "schema": "traffic/v1",
        "rate_per_server_fps": spec.rate_per_server_fps,
        "size_cdf": [[s, p] for s, p in spec.size_cdf],
        "comm_prob": "uniform" if not spec.comm_prob else [list(r) for r in spec.comm_prob],
        "duration_s": spec.duration_s,
        "short_threshold_bytes": spec.short_threshold_bytes,
    }


def spec_from_dict(doc: dict) -> TrafficSpec:
    if doc.get("schema") != "traffic/v1":
        raise ConfigurationError("expected schema traffic/v1")
    comm = doc.get("comm_prob", "uniform")
    comm_rows: tuple[tuple[str, str, float], ...] = ()
    if comm != "uniform":
        comm_rows = tuple((str(s), str(d), float(p)) for s, d, p in comm)
    cdf = doc.get("size_cdf") or default_size_cdf()
    if doc.get("size_cdf"):
        cdf = tuple((float(s), float(p)) for s, p in doc["size_cdf"])
    return TrafficSpec(
        rate_per_server_fps=float(doc["rate_per_server_fps"]),
        size_cdf=cdf,
        duration_s=float(doc["duration_s"]),
        short_threshold_bytes=float(doc.get("short_threshold_bytes", 150e3)),
        comm_prob=comm_rows,
    )
