"""Short-flow FCT estimation: (number of RTTs) x (RTT duration).

The RTT-count distribution comes from the measured table when present and
otherwise from slow-start doubling plus a binomial retransmission penalty.
The RTT itself is twice the path propagation delay plus one queueing draw
per congested hop; hop utilization and competing-flow counts are read from
the long-flow estimator's epoch trace at the short flow's start time, and
the queueing draw comes from the measured table or the M/M/1 default.

Each flow contributes a small Monte Carlo cloud of FCT samples (fixed seed),
so the per-sample distribution reflects both sources of variation. Flows
crossing a fully dead hop are tallied as failed, not given an FCT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .longflow import LinkLoadTrace, path_drop_rate
from .net_model import NetworkState
from .routing import Path, RoutingSample
from .seeds import rng_for
from .tables import TableSet, queue_delay_default, rtt_count_default, rtt_count_draws
from .traffic import DemandMatrix


@dataclass
class ShortFlowResult:
    flow_ids: list[str]  # one entry per draw's owning flow
    fcts: np.ndarray  # seconds, all Monte Carlo draws pooled
    sizes: np.ndarray  # bytes, parallel to fcts
    failed_ids: list[str]

    @property
    def n_flows(self) -> int:
        return len(set(self.flow_ids))


FAILED = None


def short_flow_fct(
    flow,
    path: Path,
    state: NetworkState,
    tables: TableSet,
    seed_parts: tuple,
    n_mc: int = 8,
    link_trace: LinkLoadTrace | None = None,
) -> np.ndarray | None:
    """Monte Carlo FCT draws for one short flow, or None if its path is dead."""
    p = path_drop_rate(state, path)
    if p >= 1.0:
        return FAILED
    rng = rng_for("shortflow", *seed_parts)
    if tables.rtt_count is not None:
        counts = tables.rtt_count.sample(flow.size, p, tables.iw, rng.random(n_mc))
    else:
        counts = rtt_count_draws(flow.size, p, rng, n_mc, tables.iw, tables.mss_bytes)

    segments = max(1.0, math.ceil(flow.size / tables.mss_bytes))
    base_rounds = rtt_count_default(flow.size, tables.iw, tables.mss_bytes)
    burst = segments / base_rounds  # representative per-RTT burst

    prop = 2.0 * sum(state.edges[eid].prop_delay for eid in path.edge_ids)
    rtts = np.full(n_mc, prop)
    for eid in path.edge_ids:
        edge = state.edges[eid]
        if link_trace is None:
            continue
        load, competing = link_trace.at(eid, flow.start)
        utilization = load / edge.capacity if edge.capacity > 0 else 0.0
        if utilization <= 0:
            continue
        if tables.queue_delay is not None:
            rtts += tables.queue_delay.sample(utilization, competing, rng.random(n_mc))
        else:
            rtts += queue_delay_default(
                utilization, edge.capacity, competing, burst, tables.mss_bytes
            )
    return counts * rtts


def estimate_short_flows(
    state: NetworkState,
    short_dm: DemandMatrix,
    routing_sample: RoutingSample,
    tables: TableSet | None = None,
    seed: int = 0,
    n_mc: int = 8,
    link_trace: LinkLoadTrace | None = None,
) -> ShortFlowResult:
    """Per-flow FCT estimation is independent across flows; results pool all
    Monte Carlo draws (order-independent set semantics)."""
    tables = tables or TableSet()
    ids: list[str] = []
    fcts: list[np.ndarray] = []
    sizes: list[np.ndarray] = []
    failed: list[str] = []
    for f in short_dm.flows:
        path = routing_sample.paths.get(f.id)
        if path is None:
            failed.append(f.id)
            continue
        draws = short_flow_fct(
            f, path, state, tables, (seed, routing_sample.index, f.id), n_mc, link_trace
        )
        if draws is FAILED:
            failed.append(f.id)
            continue
        ids.extend([f.id] * len(draws))
        fcts.append(draws)
        sizes.append(np.full(len(draws), f.size))
    return ShortFlowResult(
        flow_ids=ids,
        fcts=np.concatenate(fcts) if fcts else np.zeros(0),
        sizes=np.concatenate(sizes) if sizes else np.zeros(0),
        failed_ids=failed,
    )
