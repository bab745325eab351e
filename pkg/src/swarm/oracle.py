"""Independent reference simulator used for validation and table generation.

A fluid, small-timestep simulator: each step, active flows get rates from a
plain progressive-filling max-min loop (written separately from the
estimator's allocator on purpose); losses are sampled per delivered MSS and
feed an AIMD-style ceiling: on a loss the flow's ceiling halves and holds
for one RTT, then recovers additively (one MSS per RTT). Short flows, which
a fluid timestep cannot resolve, run a round-by-round slow-start model with
per-segment Bernoulli drops and burst-drain queueing against the fluid
background at the flow's start time.

Agreement between this simulator and the estimator is evidence, not
tautology: the estimator reasons with epoch fair shares and closed-form or
measured caps, while the simulator lets a control loop find the same rates
dynamically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError
from .net_model import NetworkState
from .routing import RoutingSample
from .seeds import rng_for
from .traffic import DemandMatrix

FAIR_SHARE_FLUID = "fair-share-fluid"
SLOW_START_AIMD = "slow-start-aimd"


@dataclass(frozen=True)
class SimConfig:
    dt: float  # seconds; should be well under the estimator's epoch (zeta/20 default)
    cc: str = SLOW_START_AIMD
    seed: int = 0
    mss_bytes: float = 1460.0
    iw: int = 10
    short_threshold: float = 150e3
    horizon_s: float | None = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigurationError("dt must be positive")
        if self.cc not in (FAIR_SHARE_FLUID, SLOW_START_AIMD):
            raise ConfigurationError(f"unknown cc model {self.cc!r}")


@dataclass
class SimFlowResult:
    flow_id: str
    throughput: float  # bits/s averaged over the flow's lifetime
    fct: float  # seconds
    failed: bool = False
    straggler: bool = False


def _maxmin_loop(
    link_cap: dict[str, float],
    flow_edges: dict[str, list[str]],
    ceilings: dict[str, float],
) -> dict[str, float]:
    """Plain progressive filling over the active flows; ceilings act as
    one-flow virtual links."""
    rates = {f: 0.0 for f in flow_edges}
    active = {f for f in flow_edges if ceilings.get(f, math.inf) > 0}
    for f in flow_edges:
        if f not in active:
            rates[f] = 0.0
    remaining = dict(link_cap)
    level = 0.0
    while active:
        counts: dict[str, int] = {}
        for f in active:
            for e in flow_edges[f]:
                counts[e] = counts.get(e, 0) + 1
        step = math.inf
        for e, c in counts.items():
            step = min(step, remaining[e] / c)
        cap_step = min((ceilings.get(f, math.inf) - level) for f in active)
        delta = min(step, cap_step)
        if not math.isfinite(delta):
            raise ValueError("unbounded flow in max-min loop")
        level += delta
        for e, c in counts.items():
            remaining[e] -= delta * c
        frozen = set()
        for f in active:
            if ceilings.get(f, math.inf) <= level + 1e-12 * max(level, 1.0):
                rates[f] = ceilings[f]
                frozen.add(f)
        for f in active:
            if f in frozen:
                continue
            for e in flow_edges[f]:
                if remaining[e] <= 1e-12 * max(link_cap[e], 1.0):
                    rates[f] = level
                    frozen.add(f)
                    break
        active -= frozen
    return rates


def simulate(
    state: NetworkState,
    dm: DemandMatrix,
    routing_sample: RoutingSample,
    config: SimConfig,
) -> list[SimFlowResult]:
    results: dict[str, SimFlowResult] = {}
    nic_rate = min((e.capacity for e in state.edges.values()), default=math.inf)

    fluid, rounds = [], []
    for f in dm.flows:
        path = routing_sample.paths.get(f.id)
        if path is None:
            results[f.id] = SimFlowResult(f.id, 0.0, math.inf, failed=True)
            continue
        if config.cc == SLOW_START_AIMD and f.size <= config.short_threshold:
            rounds.append((f, path))
        else:
            fluid.append((f, path))

    link_loads = _run_fluid(state, fluid, config, results, nic_rate)
    for f, path in rounds:
        results[f.id] = _run_slow_start(state, f, path, config, link_loads)
    return [results[f.id] for f in dm.flows]


def _path_drop(state: NetworkState, path) -> float:
    keep = 1.0
    for eid in path.edge_ids:
        keep *= 1.0 - state.edges[eid].drop_rate
    for nid in path.nodes:
        keep *= 1.0 - state.nodes[nid].drop_rate
    return 1.0 - keep


class _FluidLoads:
    """Per-step per-link loads and active flow counts from the fluid phase."""

    def __init__(self, dt: float):
        self.dt = dt
        self.rows: list[dict[str, float]] = []
        self.count_rows: list[dict[str, int]] = []

    def record(self, loads: dict[str, float], counts: dict[str, int]):
        self.rows.append(loads)
        self.count_rows.append(counts)

    def at(self, t: float) -> dict[str, float]:
        if not self.rows:
            return {}
        k = min(max(int(t / self.dt), 0), len(self.rows) - 1)
        return self.rows[k]

    def counts_at(self, t: float) -> dict[str, int]:
        if not self.count_rows:
            return {}
        k = min(max(int(t / self.dt), 0), len(self.count_rows) - 1)
        return self.count_rows[k]


def _run_fluid(
    state: NetworkState,
    flows,
    config: SimConfig,
    results: dict[str, SimFlowResult],
    nic_rate: float,
) -> _FluidLoads:
    dt = config.dt
    loads = _FluidLoads(dt)
    if not flows:
        return loads

    link_cap = {eid: e.capacity for eid, e in state.edges.items()}
    info = {}
    for f, path in flows:
        p = _path_drop(state, path)
        if p >= 1.0:
            results[f.id] = SimFlowResult(f.id, 0.0, math.inf, failed=True)
            continue
        rtt = max(2.0 * sum(state.edges[eid].prop_delay for eid in path.edge_ids), 1e-6)
        info[f.id] = {
            "flow": f,
            "edges": list(path.edge_ids),
            "p": p,
            "rtt": rtt,
            "size_bits": f.size * 8.0,
            "sent": 0.0,
            "ceil": math.inf if path.edge_ids else nic_rate,
            "hold_until": 0.0,
            "rng": rng_for("oracle-aimd", config.seed, f.id),
            "start": math.floor(f.start / dt) * dt,
        }

    pending = sorted(info.values(), key=lambda d: (d["start"], d["flow"].id))
    sizes = [d["size_bits"] for d in pending]
    if config.horizon_s is not None:
        horizon = config.horizon_s
    else:
        floor_rate = min(link_cap.values(), default=nic_rate) / max(1, len(pending))
        horizon = (
            max(d["start"] for d in pending) + 4.0 * max(sizes) / floor_rate + 1.0
        )

    t = 0.0
    ptr = 0
    active: dict[str, dict] = {}
    while ptr < len(pending) or active:
        if not active and ptr < len(pending) and pending[ptr]["start"] > t:
            t = pending[ptr]["start"]
        while ptr < len(pending) and pending[ptr]["start"] <= t + 1e-15:
            d = pending[ptr]
            active[d["flow"].id] = d
            ptr += 1

        ceilings = {}
        flow_edges = {}
        for fid, d in active.items():
            flow_edges[fid] = d["edges"]
            base = d["ceil"] if d["edges"] else min(d["ceil"], nic_rate)
            ceilings[fid] = base
        rates = _maxmin_loop(link_cap, flow_edges, ceilings)

        step_loads: dict[str, float] = {}
        step_counts: dict[str, int] = {}
        finished = []
        for fid in sorted(active):
            d = active[fid]
            rate = rates[fid]
            for e in d["edges"]:
                step_loads[e] = step_loads.get(e, 0.0) + rate
                step_counts[e] = step_counts.get(e, 0) + 1
            if rate <= 0:
                continue
            # AIMD ceiling dynamics driven by sampled loss
            if d["p"] > 0:
                segs = rate * dt / (config.mss_bytes * 8.0)
                loss_prob = 1.0 - (1.0 - d["p"]) ** segs
                if d["rng"].random() < loss_prob:
                    d["ceil"] = max(rate / 2.0, 1.0)
                    d["hold_until"] = t + d["rtt"]
                elif math.isfinite(d["ceil"]) and t >= d["hold_until"]:
                    d["ceil"] += (config.mss_bytes * 8.0 / d["rtt"] ** 2) * dt
            remaining = d["size_bits"] - d["sent"]
            if rate * dt >= remaining:
                d["sent"] = d["size_bits"]
                fct = t + remaining / rate - d["start"]
                results[fid] = SimFlowResult(fid, d["size_bits"] / fct, fct)
                finished.append(fid)
            else:
                d["sent"] += rate * dt
        loads.record(step_loads, step_counts)
        for fid in finished:
            del active[fid]
        t += dt
        if t > horizon:
            for fid, d in active.items():
                results[fid] = SimFlowResult(fid, 0.0, math.inf, straggler=True)
            break
    return loads


def _run_slow_start(
    state: NetworkState,
    flow,
    path,
    config: SimConfig,
    loads: _FluidLoads,
) -> SimFlowResult:
    p = _path_drop(state, path)
    if p >= 1.0:
        return SimFlowResult(flow.id, 0.0, math.inf, failed=True)
    rng = rng_for("oracle-ss", config.seed, flow.id)
    mss_bits = config.mss_bytes * 8.0
    segs_left = int(math.ceil(flow.size / config.mss_bytes))
    prop = 2.0 * sum(state.edges[eid].prop_delay for eid in path.edge_ids)
    background = loads.at(flow.start)
    counts = loads.counts_at(flow.start)

    w = config.iw
    t_acc = 0.0
    guard = 0
    while segs_left > 0:
        guard += 1
        if guard > 100000:
            return SimFlowResult(flow.id, 0.0, math.inf, straggler=True)
        burst = min(w, segs_left)
        drops = rng.binomial(burst, p) if p > 0 else 0
        delivered = burst - drops
        round_time = prop
        for eid in path.edge_ids:
            edge = state.edges[eid]
            load = background.get(eid, 0.0)
            # the burst drains at whichever is better: leftover capacity or
            # the fair share it can claim against the competing flows
            competing = counts.get(eid, 0)
            drain = max(edge.capacity - load, edge.capacity / (competing + 1.0))
            round_time += burst * mss_bits * (1.0 / drain - 1.0 / edge.capacity)
        t_acc += round_time
        segs_left -= delivered
        if drops > 0:
            w = max(config.iw, w // 2)
        else:
            w = w * 2
    fct = max(t_acc, 1e-12)
    return SimFlowResult(flow.id, flow.size * 8.0 / fct, fct)
