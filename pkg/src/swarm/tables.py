"""Empirically-driven lookup tables with analytical fallbacks.

Three tables drive the transport model: the loss-limited throughput of long
flows (per drop rate and RTT), the number of RTTs a short flow needs (per
size, drop rate and initial window), and per-hop queueing delay (per link
utilization and competing flow count). Measured tables are produced offline
by the reference simulator sweeps (see tablegen); when absent, analytical
defaults take over:

* loss-limited rate: (MSS/RTT) * sqrt(3/2) / sqrt(p), the classic
  steady-state response of an AIMD loop to random loss;
* RTT count: slow-start doubling plus a binomial retransmission-round
  penalty with mean segments * p;
* queueing delay: M/M/1 waiting time with packet-sized service times.

Lookups snap to the nearest grid cell (log-scale on drop-rate and size axes)
and never interpolate, so a cell's distribution is returned verbatim.
Distribution cells are stored as quantile lists and sampled by inverse CDF.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

DEFAULT_MSS = 1460.0  # bytes
DEFAULT_IW = 10
MATHIS_CONST = math.sqrt(1.5)
UNBOUNDED = math.inf


def _nearest(axis: tuple[float, ...], value: float, log: bool = False) -> int:
    arr = np.asarray(axis, dtype=float)
    if log:
        v = math.log10(max(value, 1e-300))
        arr = np.log10(np.maximum(arr, 1e-300))
        return int(np.argmin(np.abs(arr - v)))
    return int(np.argmin(np.abs(arr - value)))


def _draw_quantiles(quantiles: tuple[float, ...], u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw from a sorted quantile list."""
    q = np.asarray(quantiles, dtype=float)
    idx = np.minimum((u * len(q)).astype(int), len(q) - 1)
    return q[idx]


@dataclass(frozen=True)
class LossThroughputTable:
    drop_rates: tuple[float, ...]
    rtts: tuple[float, ...]  # seconds
    cells: dict[tuple[int, int], tuple[float, ...]]  # sorted achievable rates, bits/s
    provenance: str = "measured"

    def sample(self, drop_rate: float, rtt: float, u: float) -> float:
        i = _nearest(self.drop_rates, drop_rate, log=True)
        j = _nearest(self.rtts, rtt)
        cell = self.cells.get((i, j))
        if cell is None:
            raise ConfigurationError(f"loss table cell ({i},{j}) is empty")
        return float(_draw_quantiles(cell, np.asarray([u]))[0])


@dataclass(frozen=True)
class RttCountTable:
    sizes: tuple[float, ...]  # bytes, log-spaced buckets
    drop_rates: tuple[float, ...]
    iws: tuple[int, ...]
    cells: dict[tuple[int, int, int], tuple[tuple[int, ...], tuple[float, ...]]]
    # cell = (counts, cumulative probabilities)

    def sample(self, size: float, drop_rate: float, iw: int, u: np.ndarray) -> np.ndarray:
        i = _nearest(self.sizes, size, log=True)
        j = _nearest(self.drop_rates, drop_rate, log=True)
        k = _nearest(tuple(float(x) for x in self.iws), float(iw))
        counts, cum = self.cells[(i, j, k)]
        idx = np.minimum(np.searchsorted(cum, u, side="left"), len(counts) - 1)
        return np.asarray(counts)[idx]


@dataclass(frozen=True)
class QueueDelayTable:
    utilizations: tuple[float, ...]  # bucket centers in [0, 1]
    flow_counts: tuple[float, ...]
    cells: dict[tuple[int, int], tuple[float, ...]]  # sorted delays, seconds

    def sample(self, utilization: float, competing: float, u: np.ndarray) -> np.ndarray:
        i = _nearest(self.utilizations, utilization)
        j = _nearest(self.flow_counts, competing)
        return _draw_quantiles(self.cells[(i, j)], u)


@dataclass(frozen=True)
class TableSet:
    loss: LossThroughputTable | None = None
    rtt_count: RttCountTable | None = None
    queue_delay: QueueDelayTable | None = None
    mss_bytes: float = DEFAULT_MSS
    iw: int = DEFAULT_IW


# -- analytical defaults ----------------------------------------------------------


def mathis_rate(drop_rate: float, rtt: float, mss_bytes: float = DEFAULT_MSS) -> float:
    """Loss-limited steady-state rate in bits/s; rtt in seconds."""
    if drop_rate <= 0:
        return UNBOUNDED
    if drop_rate >= 1:
        return 0.0
    rtt = max(rtt, 1e-6)
    return (mss_bytes * 8.0 / rtt) * MATHIS_CONST / math.sqrt(drop_rate)


def rtt_count_default(size: float, iw: int = DEFAULT_IW, mss: float = DEFAULT_MSS) -> int:
    """Lossless slow-start rounds: smallest r with iw*(2^r - 1)*mss >= size."""
    if size <= 0:
        raise ConfigurationError("flow size must be positive")
    r = 1
    while iw * ((1 << r) - 1) * mss < size:
        r += 1
    return r


def rtt_count_draws(
    size: float,
    drop_rate: float,
    rng: np.random.Generator,
    n: int,
    iw: int = DEFAULT_IW,
    mss: float = DEFAULT_MSS,
) -> np.ndarray:
    """Analytical default: base slow-start rounds plus a binomial
    retransmission penalty, one extra round per lost segment in expectation."""
    base = rtt_count_default(size, iw, mss)
    if drop_rate <= 0:
        return np.full(n, base, dtype=int)
    segments = int(math.ceil(size / mss))
    extra = rng.binomial(segments, min(drop_rate, 1.0), size=n)
    return base + extra


def queue_delay_default(
    utilization: float,
    capacity: float,
    competing: float,
    burst_segments: float,
    mss: float = DEFAULT_MSS,
) -> float:
    """Per-hop extra delay for one RTT's burst draining behind the competing
    load: the burst moves at the better of the leftover capacity and its fair
    share against the competing flows."""
    if utilization <= 0 or capacity <= 0:
        return 0.0
    drain = capacity * max(1.0 - utilization, 1.0 / (competing + 1.0))
    return burst_segments * mss * 8.0 * (1.0 / drain - 1.0 / capacity)


def analytical_loss_table(
    drop_rates: tuple[float, ...], rtts: tuple[float, ...], mss: float = DEFAULT_MSS
) -> LossThroughputTable:
    cells = {
        (i, j): (mathis_rate(p, r, mss),)
        for i, p in enumerate(drop_rates)
        for j, r in enumerate(rtts)
    }
    return LossThroughputTable(drop_rates, rtts, cells, provenance="analytical-default")


# -- JSON table files ------------------------------------------------------------


def _enc(v: float):
    return None if math.isinf(v) else v


def _dec(v) -> float:
    return math.inf if v is None else float(v)


def loss_table_to_dict(t: LossThroughputTable) -> dict:
    return {
        "schema": "tables/loss-tput/v1",
        "provenance": t.provenance,
        "drop_rates": list(t.drop_rates),
        "rtts": list(t.rtts),
        "cells": {f"{i},{j}": [_enc(v) for v in q] for (i, j), q in sorted(t.cells.items())},
    }


def loss_table_from_dict(doc: dict) -> LossThroughputTable:
    if doc.get("schema") != "tables/loss-tput/v1":
        raise ConfigurationError("expected schema tables/loss-tput/v1")
    cells = {}
    for key, q in doc["cells"].items():
        i, j = (int(x) for x in key.split(","))
        cells[(i, j)] = tuple(_dec(v) for v in q)
    return LossThroughputTable(
        tuple(doc["drop_rates"]), tuple(doc["rtts"]), cells, doc.get("provenance", "measured")
    )


def rtt_table_to_dict(t: RttCountTable) -> dict:
    return {
        "schema": "tables/rtt-count/v1",
        "sizes": list(t.sizes),
        "drop_rates": list(t.drop_rates),
        "iws": list(t.iws),
        "cells": {
            f"{i},{j},{k}": {"counts": list(c), "cum": list(p)}
            for (i, j, k), (c, p) in sorted(t.cells.items())
        },
    }


def rtt_table_from_dict(doc: dict) -> RttCountTable:
    if doc.get("schema") != "tables/rtt-count/v1":
        raise ConfigurationError("expected schema tables/rtt-count/v1")
    cells = {}
    for key, cell in doc["cells"].items():
        i, j, k = (int(x) for x in key.split(","))
        cells[(i, j, k)] = (tuple(int(c) for c in cell["counts"]), tuple(cell["cum"]))
    return RttCountTable(
        tuple(doc["sizes"]), tuple(doc["drop_rates"]), tuple(int(x) for x in doc["iws"]), cells
    )


def queue_table_to_dict(t: QueueDelayTable) -> dict:
    return {
        "schema": "tables/queue-delay/v1",
        "utilizations": list(t.utilizations),
        "flow_counts": list(t.flow_counts),
        "cells": {f"{i},{j}": list(q) for (i, j), q in sorted(t.cells.items())},
    }


def queue_table_from_dict(doc: dict) -> QueueDelayTable:
    if doc.get("schema") != "tables/queue-delay/v1":
        raise ConfigurationError("expected schema tables/queue-delay/v1")
    cells = {}
    for key, q in doc["cells"].items():
        i, j = (int(x) for x in key.split(","))
        cells[(i, j)] = tuple(float(v) for v in q)
    return QueueDelayTable(
        tuple(doc["utilizations"]), tuple(doc["flow_counts"]), cells
    )


def save_table(path: str, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_table_set(directory: str) -> TableSet:
    import os

    loss = rtt = queue = None
    p = os.path.join(directory, "loss_tput.json")
    if os.path.exists(p):
        loss = loss_table_from_dict(json.load(open(p)))
    p = os.path.join(directory, "rtt_count.json")
    if os.path.exists(p):
        rtt = rtt_table_from_dict(json.load(open(p)))
    p = os.path.join(directory, "queue_delay.json")
    if os.path.exists(p):
        queue = queue_table_from_dict(json.load(open(p)))
    return TableSet(loss=loss, rtt_count=rtt, queue_delay=queue)
