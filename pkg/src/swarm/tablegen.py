"""Offline table generation through the reference simulator.

Two tiny fixtures stand in for the measurement testbeds:

* a two-switch chain whose middle link carries the configured drop rate and
  delay, used for the loss-limited throughput of a long flow and for the
  RTT counts of short flows (capacities are high enough that loss is the
  only limit);
* a three-switch chain with an ingress link feeding a bottleneck: M ballast
  flows stop at the middle switch while N flows continue across the
  bottleneck, so M+N steers the bottleneck utilization and N the competing
  flow count seen by a small probe flow. Probe delay minus the empty-network
  baseline gives the queueing-delay cell.

Every cell holds at least the DKW-required sample count for the configured
(alpha, epsilon); an unreachable cell aborts generation naming the cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TableGenerationError
from .net_model import Edge, NetworkState, Node
from .oracle import SimConfig, _run_slow_start
from .routing import Path
from .seeds import rng_for
from .tables import (
    DEFAULT_IW,
    DEFAULT_MSS,
    LossThroughputTable,
    QueueDelayTable,
    RttCountTable,
    UNBOUNDED,
)
from .traffic import Flow, required_samples


@dataclass(frozen=True)
class TableGenConfig:
    alpha: float = 0.1
    epsilon: float = 0.15
    seed: int = 0
    drop_rates: tuple[float, ...] = (0.0, 1e-5, 1e-4, 1e-3, 1e-2, 6.25e-2, 1e-1, 1.0)
    rtts: tuple[float, ...] = (2e-4, 4e-4, 1e-3)
    sizes: tuple[float, ...] = (5e3, 15e3, 50e3, 150e3)
    iws: tuple[int, ...] = (DEFAULT_IW,)
    utilizations: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 0.9)
    flow_counts: tuple[float, ...] = (0, 2, 4, 8)
    mss_bytes: float = DEFAULT_MSS
    measure_s: float = 1.0

    def samples_per_cell(self) -> int:
        return required_samples(self.alpha, self.epsilon)


def _chain_state(drop: float, one_way_delay: float, capacity: float = 100e9) -> NetworkState:
    nodes = {
        "s1": Node("s1", "tor"),
        "s2": Node("s2", "tor"),
        "h1": Node("h1", "server"),
        "h2": Node("h2", "server"),
    }
    edges = {"m": Edge("m", "s1", "s2", capacity, drop_rate=drop, prop_delay=one_way_delay)}
    routing = {"s1": {"s2": (("s2", 1.0),)}, "s2": {"s1": (("s1", 1.0),)}}
    return NetworkState(nodes, edges, {"h1": "s1", "h2": "s2"}, routing)


def measure_loss_limited_rate(
    drop: float,
    rtt: float,
    seed: int,
    mss: float = DEFAULT_MSS,
    duration_s: float = 1.0,
) -> float:
    """Steady-state average rate of one additive-increase/halving loop under
    per-MSS Bernoulli loss; the warmup fifth is discarded."""
    rng = rng_for("loss-measure", seed)
    mss_bits = mss * 8.0
    dt = rtt / 2.0
    slope = mss_bits / (rtt * rtt)  # one MSS per RTT of additive increase
    rate = 10 * mss_bits / rtt  # initial-window starting point
    t = 0.0
    warm = duration_s / 5.0
    acc = 0.0
    acc_t = 0.0
    while t < duration_s:
        segs = rate * dt / mss_bits
        if rng.random() < 1.0 - (1.0 - drop) ** segs:
            rate = max(rate / 2.0, mss_bits / rtt)
        else:
            rate += slope * dt
        if t >= warm:
            acc += rate * dt
            acc_t += dt
        t += dt
    return acc / acc_t if acc_t else 0.0


def generate_loss_table(cfg: TableGenConfig) -> LossThroughputTable:
    n = cfg.samples_per_cell()
    cells: dict[tuple[int, int], tuple[float, ...]] = {}
    for i, p in enumerate(cfg.drop_rates):
        for j, rtt in enumerate(cfg.rtts):
            if p <= 0:
                cells[(i, j)] = (UNBOUNDED,)
                continue
            if p >= 1:
                cells[(i, j)] = (0.0,)
                continue
            vals = sorted(
                measure_loss_limited_rate(
                    p, rtt, stable_seed(cfg.seed, "loss", i, j, r), cfg.mss_bytes, cfg.measure_s
                )
                for r in range(n)
            )
            if len(vals) < n:
                raise TableGenerationError(f"loss cell ({p}, {rtt}) under-sampled")
            cells[(i, j)] = tuple(vals)
    return LossThroughputTable(cfg.drop_rates, cfg.rtts, cells, provenance="measured")


def stable_seed(*parts) -> int:
    from .seeds import stable_u64

    return stable_u64(*parts)


def generate_rtt_count_table(cfg: TableGenConfig) -> RttCountTable:
    n = cfg.samples_per_cell()
    rtt = cfg.rtts[0]
    cells = {}
    for i, size in enumerate(cfg.sizes):
        for j, p in enumerate(cfg.drop_rates):
            for k, iw in enumerate(cfg.iws):
                if p >= 1:
                    # dead-path sentinel; flows over such paths fail before lookup
                    cells[(i, j, k)] = ((1,), (1.0,))
                    continue
                state = _chain_state(p, rtt / 2.0)
                path = Path(("s1", "s2"), ("m",))
                counts: dict[int, int] = {}
                for r in range(n):
                    sim = SimConfig(
                        dt=1e-3,
                        seed=stable_seed(cfg.seed, "rtt", i, j, k, r),
                        mss_bytes=cfg.mss_bytes,
                        iw=iw,
                    )
                    flow = Flow(f"probe{r}", "h1", "h2", size, 0.0)
                    res = _run_slow_start(state, flow, path, sim, _EmptyLoads())
                    if not math.isfinite(res.fct):
                        raise TableGenerationError(
                            f"rtt cell (size={size}, p={p}, iw={iw}) produced no FCT"
                        )
                    c = max(1, round(res.fct / rtt))
                    counts[c] = counts.get(c, 0) + 1
                support = sorted(counts)
                probs = np.cumsum([counts[c] for c in support]) / n
                cells[(i, j, k)] = (tuple(support), tuple(float(x) for x in probs))
    return RttCountTable(cfg.sizes, cfg.drop_rates, cfg.iws, cells)


class _EmptyLoads:
    def at(self, t):
        return {}

    def counts_at(self, t):
        return {}


def _bottleneck_state(capacity: float = 1e9) -> NetworkState:
    nodes = {
        "s0": Node("s0", "tor"),
        "s1": Node("s1", "t1"),
        "s2": Node("s2", "tor"),
        "hsrc": Node("hsrc", "server"),
        "hmid": Node("hmid", "server"),
        "hprobe": Node("hprobe", "server"),
        "hdst": Node("hdst", "server"),
    }
    edges = {
        "ingress": Edge("ingress", "s0", "s1", capacity, prop_delay=1e-4),
        "bottleneck": Edge("bottleneck", "s1", "s2", capacity, prop_delay=1e-4),
    }
    routing = {
        "s0": {"s1": (("s1", 1.0),), "s2": (("s1", 1.0),)},
        "s1": {"s0": (("s0", 1.0),), "s2": (("s2", 1.0),)},
        "s2": {"s0": (("s1", 1.0),), "s1": (("s1", 1.0),)},
    }
    server_map = {"hsrc": "s0", "hmid": "s1", "hprobe": "s1", "hdst": "s2"}
    return NetworkState(nodes, edges, server_map, routing)


def generate_tables(
    cfg: TableGenConfig,
) -> tuple[RttCountTable, QueueDelayTable, LossThroughputTable]:
    """All three measurement tables in one sweep run."""
    return generate_rtt_count_table(cfg), generate_queue_table(cfg), generate_loss_table(cfg)


def generate_queue_table(cfg: TableGenConfig, probe_size: float = 10e3) -> QueueDelayTable:
    n_cell = max(4, cfg.samples_per_cell() // 8)  # deterministic fluid; light sampling
    state = _bottleneck_state()
    cells: dict[tuple[int, int], list[float]] = {}

    def run_probe(m_ballast: int, n_cross: int, rep: int) -> tuple[float, float]:
        flows = []
        paths: dict[str, Path | None] = {}
        big = 1e12  # effectively open-ended background flows
        for x in range(m_ballast):
            fid = f"ballast{x}"
            flows.append(Flow(fid, "hsrc", "hmid", big, 0.0))
            paths[fid] = Path(("s0", "s1"), ("ingress",))
        for x in range(n_cross):
            fid = f"cross{x}"
            flows.append(Flow(fid, "hsrc", "hdst", big, 0.0))
            paths[fid] = Path(("s0", "s1", "s2"), ("ingress", "bottleneck"))
        sim = SimConfig(
            dt=0.01,
            seed=stable_seed(cfg.seed, "queue", m_ballast, n_cross, rep),
            mss_bytes=cfg.mss_bytes,
            horizon_s=0.3,
        )
        from .oracle import _run_fluid

        results: dict = {}
        loads = _run_fluid(
            state,
            [(f, paths[f.id]) for f in flows],
            sim,
            results,
            nic_rate=1e12,
        )
        probe = Flow(f"probe{rep}", "hprobe", "hdst", probe_size, 0.25)
        probe_path = Path(("s1", "s2"), ("bottleneck",))
        res = _run_slow_start(state, probe, probe_path, sim, loads)
        bg = loads.at(0.25)
        util = bg.get("bottleneck", 0.0) / state.edges["bottleneck"].capacity
        return res.fct, util

    baseline_fct, _ = run_probe(0, 0, 0)

    target_cells = [
        (i, j) for i in range(len(cfg.utilizations)) for j in range(len(cfg.flow_counts))
    ]
    for i, u in enumerate(cfg.utilizations):
        for j, count in enumerate(cfg.flow_counts):
            samples = []
            if u <= 0 or count == 0:
                cells[(i, j)] = [0.0] * n_cell
                continue
            n_cross = int(count)
            # ingress sharing sets the bottleneck utilization: u = N/(M+N)
            m_ballast = int(round(n_cross * (1.0 - u) / u))
            for rep in range(n_cell):
                fct, util = run_probe(m_ballast, n_cross, rep)
                samples.append(max(fct - baseline_fct, 0.0))
            if len(samples) < n_cell:
                raise TableGenerationError(
                    f"queue cell (utilization={u}, flows={count}) under-sampled"
                )
            cells[(i, j)] = sorted(samples)
    return QueueDelayTable(
        cfg.utilizations,
        cfg.flow_counts,
        {k: tuple(v) for k, v in cells.items()},
    )
