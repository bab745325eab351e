"""Epoch-based estimation of long-flow average throughput.

Time is cut into fixed epochs. Flows that arrive during an epoch join at its
start boundary; each epoch the active set receives rates from a demand-aware
max-min fair allocation where every flow is bounded by its loss-limited cap
(drawn once per flow per routing sample). Completed flows whose start falls
inside the measurement interval contribute size / duration.

Units: rates and caps are bits/s, sizes are bytes, times are seconds.
A flow finishing mid-epoch is charged its exact remaining bits and its
duration is interpolated inside the epoch, so integrated bits always equal
the flow size bit-for-bit.

Flows whose path never touches the fabric (both endpoints under one ToR)
contend with nothing in this model; they run at the access-rate stand-in
(minimum fabric capacity unless configured), still subject to their loss cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError
from .fairshare import LinkSystem, build_link_system, exact_max_min, fast_max_min
from .net_model import NetworkState
from .routing import Path, RoutingSample
from .seeds import rng_for
from .tables import TableSet, mathis_rate
from .traffic import DemandMatrix, Flow


@dataclass(frozen=True)
class EstimatorConfig:
    epoch_s: float
    interval: tuple[float, float]
    use_fast_maxmin: bool = False
    resample_caps_per_epoch: bool = False  # off: the cap models a converged control loop
    window_split: int = 1
    guard_gap_s: float = 0.0  # must cover the longest expected flow when splitting
    nic_rate: float | None = None
    mss_bytes: float = 1460.0
    capture_link_load: bool = False
    snapshot_at: float | None = None

    def __post_init__(self):
        if self.epoch_s <= 0:
            raise ConfigurationError("epoch must be positive")
        t0, t1 = self.interval
        if not t0 < t1:
            raise ConfigurationError("measurement interval must satisfy t0 < t1")
        if self.window_split < 1:
            raise ConfigurationError("window_split must be >= 1")


@dataclass(frozen=True)
class WarmStart:
    time: float
    # (flow id, bits sent so far, epoch boundary the flow joined at)
    entries: tuple[tuple[str, float, float], ...]


@dataclass
class LinkLoadTrace:
    """Per-epoch per-link offered rates and active flow counts, consumed by
    the short-flow queueing lookup."""

    epoch_s: float
    start_time: float
    edge_index: dict[str, int]
    loads: np.ndarray  # [n_epochs, n_links] bits/s
    counts: np.ndarray

    def at(self, edge_id: str, t: float) -> tuple[float, float]:
        li = self.edge_index.get(edge_id)
        if li is None or len(self.loads) == 0:
            return 0.0, 0.0
        k = int((t - self.start_time) / self.epoch_s)
        k = min(max(k, 0), len(self.loads) - 1)
        return float(self.loads[k, li]), float(self.counts[k, li])


@dataclass
class LongFlowResult:
    flow_ids: list[str]
    throughputs: np.ndarray  # bits/s, completed in-interval flows
    sizes: np.ndarray  # bytes, parallel to throughputs
    durations: np.ndarray
    failed_ids: list[str]  # in-interval flows that can never complete
    straggler_ids: list[str]  # in-interval flows still active at the horizon
    link_trace: LinkLoadTrace | None = None
    snapshot: WarmStart | None = None
    epoch_bits: dict[str, list[float]] | None = None  # per-flow per-epoch credit


def path_drop_rate(state: NetworkState, path: Path) -> float:
    keep = 1.0
    for eid in path.edge_ids:
        keep *= 1.0 - state.edges[eid].drop_rate
    for nid in path.nodes:
        keep *= 1.0 - state.nodes[nid].drop_rate
    return 1.0 - keep


def path_rtt(state: NetworkState, path: Path) -> float:
    """Base RTT for the cap lookup: twice the one-way propagation delay.
    Queueing enters only the short-flow model."""
    return 2.0 * sum(state.edges[eid].prop_delay for eid in path.edge_ids)


def loss_limited_throughput(
    path: Path,
    state: NetworkState,
    rtt: float,
    table,
    seed_parts: tuple,
    mss: float = 1460.0,
) -> float:
    """Rate cap in bits/s; inf means unbounded (clean path)."""
    p = path_drop_rate(state, path)
    if p <= 0:
        return math.inf
    if p >= 1:
        return 0.0
    if table is not None:
        u = float(rng_for("losscap", *seed_parts).random())
        return table.sample(p, rtt, u)
    return mathis_rate(p, rtt, mss)


def compute_throughput(
    system: LinkSystem,
    caps: np.ndarray,
    active: np.ndarray,
    use_fast: bool = False,
) -> np.ndarray:
    """Per-flow rates: loss caps composed with (fast or exact) max-min."""
    if use_fast:
        return fast_max_min(system, caps, active)
    return exact_max_min(system, caps, active)


def demand_aware_max_min(
    state: NetworkState,
    flow_ids: list[str],
    paths: dict[str, Path],
    caps: dict[str, float | None],
) -> dict[str, float]:
    """Exact max-min on the graph augmented with one virtual edge per capped
    flow (capacity = cap); public single-shot entry point."""
    system, _ = build_link_system(state, paths, flow_ids)
    cap_arr = np.array(
        [math.inf if caps.get(fid) is None else float(caps[fid]) for fid in flow_ids]
    )
    rates = exact_max_min(system, cap_arr)
    return dict(zip(flow_ids, rates))


@dataclass
class _Prepared:
    flows: list[Flow]
    paths: dict[str, Path]
    caps: np.ndarray
    failed: list[Flow]  # unreachable or dead-path flows (rate 0 forever)


def _prepare(
    state: NetworkState,
    dm: DemandMatrix,
    routing_sample: RoutingSample,
    config: EstimatorConfig,
    tables: TableSet,
    seed: int,
) -> _Prepared:
    failed = [f for f in dm.flows if routing_sample.paths.get(f.id) is None]
    flows = [f for f in dm.flows if routing_sample.paths.get(f.id) is not None]
    paths = {f.id: routing_sample.paths[f.id] for f in flows}

    caps = np.empty(len(flows))
    for i, f in enumerate(flows):
        path = paths[f.id]
        caps[i] = loss_limited_throughput(
            path, state, path_rtt(state, path), tables.loss,
            (seed, routing_sample.index, f.id), tables.mss_bytes,
        )
    nic = config.nic_rate
    if nic is None:
        nic = min((e.capacity for e in state.edges.values()), default=math.inf)
    fabric = np.array([len(paths[f.id].edge_ids) > 0 for f in flows], dtype=bool)
    if len(flows):
        caps = np.where(fabric, caps, np.minimum(caps, nic))

    dead = caps <= 0.0
    failed += [f for f, d in zip(flows, dead) if d]
    keep = ~dead
    flows = [f for f, k in zip(flows, keep) if k]
    caps = caps[keep]
    paths = {f.id: paths[f.id] for f in flows}
    return _Prepared(flows=flows, paths=paths, caps=caps, failed=failed)


def estimate_long_flows(
    state: NetworkState,
    dm: DemandMatrix,
    routing_sample: RoutingSample,
    config: EstimatorConfig,
    tables: TableSet | None = None,
    seed: int = 0,
    warm_start: WarmStart | None = None,
    loop_start: float = 0.0,
) -> LongFlowResult:
    tables = tables or TableSet()
    prep = _prepare(state, dm, routing_sample, config, tables, seed)
    return _epoch_loop(state, prep, config, warm_start=warm_start, loop_start=loop_start)


def _epoch_loop(
    state: NetworkState,
    prep: _Prepared,
    config: EstimatorConfig,
    warm_start: WarmStart | None = None,
    loop_start: float = 0.0,
) -> LongFlowResult:
    t0, t1 = config.interval
    zeta = config.epoch_s
    flows, paths, caps = prep.flows, prep.paths, prep.caps
    n = len(flows)
    order = sorted(range(n), key=lambda i: (flows[i].start, flows[i].id))
    system, edge_index = build_link_system(state, paths, [f.id for f in flows])

    size_bits = np.array([f.size * 8.0 for f in flows]) if n else np.zeros(0)
    starts = np.array([f.start for f in flows]) if n else np.zeros(0)
    sent = np.zeros(n)
    join_time = np.zeros(n)
    active = np.zeros(n, dtype=bool)
    done_rate = np.zeros(n)
    done_dur = np.zeros(n)
    completed = np.zeros(n, dtype=bool)
    epoch_bits: dict[str, list[float]] = {f.id: [] for f in flows}
    idx_of = {f.id: i for i, f in enumerate(flows)}

    time = loop_start
    ptr = 0
    if warm_start is not None:
        time = warm_start.time
        for fid, bits, joined in warm_start.entries:
            i = idx_of[fid]
            sent[i] = bits
            join_time[i] = joined
            active[i] = True
        while ptr < n and starts[order[ptr]] < time:
            i = order[ptr]
            if not active[i]:
                completed[i] = True  # finished before the warm point
            ptr += 1

    if n:
        finite = caps[np.isfinite(caps) & (caps > 0)]
        floor_rate = min(
            finite.min() if len(finite) else math.inf,
            (system.cap.min() if len(system.cap) else math.inf) / max(1, n),
        )
        horizon = float(starts.max()) + (
            size_bits.max() / floor_rate if math.isfinite(floor_rate) else 0.0
        )
        horizon = max(horizon, t1 if math.isfinite(t1) else 0.0) + zeta
    else:
        horizon = t1 if math.isfinite(t1) else 0.0

    load_rows: list[np.ndarray] = []
    count_rows: list[np.ndarray] = []
    snapshot: WarmStart | None = None
    flows_flat, links_flat = system.incidence()
    nic_floor = config.nic_rate or max(
        float(system.cap.max()) if len(system.cap) else 0.0,
        min((e.capacity for e in state.edges.values()), default=math.inf),
    )

    while ptr < n or active.any():
        if not active.any() and ptr < n:
            nxt = starts[order[ptr]]
            if nxt >= time + zeta:  # idle gap: skip whole epochs, keep the grid
                time += math.floor((nxt - time) / zeta) * zeta
        # epoch-boundary float drift after thousands of additions is ~1e-10,
        # so the snapshot trigger needs a tolerance well above that
        if (
            config.snapshot_at is not None
            and snapshot is None
            and time >= config.snapshot_at - max(1e-9, 1e-6 * zeta)
        ):
            snapshot = WarmStart(
                time=time,
                entries=tuple(
                    (flows[i].id, float(sent[i]), float(join_time[i]))
                    for i in range(n)
                    if active[i]
                ),
            )
        epoch_start = time
        time += zeta
        while ptr < n and starts[order[ptr]] < time:
            i = order[ptr]
            if not completed[i]:
                active[i] = True
                join_time[i] = epoch_start
            ptr += 1

        theta = compute_throughput(system, caps, active, config.use_fast_maxmin)
        if config.capture_link_load:
            row = np.zeros(len(system.cap))
            cnt = np.zeros(len(system.cap))
            sel = active[flows_flat]
            np.add.at(row, links_flat[sel], theta[flows_flat[sel]])
            np.add.at(cnt, links_flat[sel], 1.0)
            load_rows.append(row)
            count_rows.append(cnt)

        for i in np.nonzero(active)[0]:
            rate = theta[i]
            if rate <= 0:
                epoch_bits[flows[i].id].append(0.0)
                continue
            remaining = size_bits[i] - sent[i]
            credit = zeta * rate
            if credit >= remaining:
                sent[i] = size_bits[i]  # final-epoch clamp: exact remaining bits
                epoch_bits[flows[i].id].append(remaining)
                fin = epoch_start + remaining / rate
                active[i] = False
                completed[i] = True
                # duration from the true arrival, floored at line rate so a
                # flow arriving late in its join epoch cannot beat physics
                done_dur[i] = max(fin - starts[i], size_bits[i] / nic_floor)
                done_rate[i] = size_bits[i] / done_dur[i]
            else:
                sent[i] += credit
                epoch_bits[flows[i].id].append(credit)

        if time > horizon:
            break

    def in_interval(start: float) -> bool:
        return t0 <= start < t1

    picked = [i for i in range(n) if completed[i] and done_dur[i] > 0 and in_interval(starts[i])]
    trace = None
    if config.capture_link_load:
        trace = LinkLoadTrace(
            epoch_s=zeta,
            start_time=loop_start,
            edge_index=dict(edge_index),
            loads=np.array(load_rows) if load_rows else np.zeros((0, len(system.cap))),
            counts=np.array(count_rows) if count_rows else np.zeros((0, len(system.cap))),
        )
    return LongFlowResult(
        flow_ids=[flows[i].id for i in picked],
        throughputs=done_rate[picked],
        sizes=np.array([flows[i].size for i in picked]),
        durations=done_dur[picked],
        failed_ids=[f.id for f in prep.failed if in_interval(f.start)],
        straggler_ids=[flows[i].id for i in range(n) if active[i] and in_interval(starts[i])],
        link_trace=trace,
        snapshot=snapshot,
        epoch_bits=epoch_bits,
    )


def stitch_windows(
    state: NetworkState,
    dm: DemandMatrix,
    routing_sample: RoutingSample,
    config: EstimatorConfig,
    tables: TableSet | None = None,
    seed: int = 0,
) -> LongFlowResult:
    """Cut the measurement interval into disjoint windows, evaluate each from
    a guard-gap burn-in (its warm start), and concatenate. split=1 is exactly
    the sequential estimator."""
    if config.window_split == 1:
        return estimate_long_flows(state, dm, routing_sample, config, tables, seed)
    t0, t1 = config.interval
    width = (t1 - t0) / config.window_split
    if config.guard_gap_s <= 0:
        raise ConfigurationError("window stitching needs a positive guard gap")
    if width < config.guard_gap_s:
        raise ConfigurationError(
            f"windows of {width}s are shorter than the {config.guard_gap_s}s guard gap"
        )
    tables = tables or TableSet()
    parts: list[LongFlowResult] = []
    for k in range(config.window_split):
        w0 = t0 + k * width
        w1 = w0 + width
        burn = max(0.0, w0 - config.guard_gap_s)
        sub_cfg = replace(config, interval=(w0, w1), window_split=1, snapshot_at=None)
        sub_dm = DemandMatrix(
            flows=tuple(f for f in dm.flows if f.start >= burn), seed=dm.seed
        )
        prep = _prepare(state, sub_dm, routing_sample, sub_cfg, tables, seed)
        parts.append(_epoch_loop(state, prep, sub_cfg, loop_start=burn))
    return LongFlowResult(
        flow_ids=[fid for p in parts for fid in p.flow_ids],
        throughputs=np.concatenate([p.throughputs for p in parts]),
        sizes=np.concatenate([p.sizes for p in parts]),
        durations=np.concatenate([p.durations for p in parts]),
        failed_ids=[fid for p in parts for fid in p.failed_ids],
        straggler_ids=[fid for p in parts for fid in p.straggler_ids],
    )
