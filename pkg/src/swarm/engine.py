"""Evaluation engine: demand sampling x routing sampling x candidate
mitigations, composite assembly, ranking, and the results/v1 document.

All randomness is derived from the scenario seed via named sub-streams
(traffic, routing, caps, short-flow), keyed by sample indices and flow ids;
demand and routing seed streams do not depend on the mitigation, so every
candidate is scored against common random draws. Results are therefore
identical for any worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .aggregate import (
    LOWER_BETTER,
    METRIC_DIRECTION,
    STANDARD_METRICS,
    CompositeDistribution,
    EvaluationResult,
    LinearComparator,
    composite,
    compare,
    performance_penalty,
    rank,
)
from .baselines import choose_with_method
from .errors import ConfigurationError
from .longflow import EstimatorConfig, estimate_long_flows, stitch_windows
from .net_model import (
    Failure,
    Mitigation,
    MoveTraffic,
    NetworkState,
    apply_failure,
    apply_mitigation,
    unreachable_tor_pairs,
)
from .routing import sample_routing
from .scenario import Scenario, comparator_to_dict
from .seeds import stable_u64
from .shortflow import estimate_short_flows
from .tables import TableSet, load_table_set
from .traffic import DemandMatrix, sample_demand, split_traffic


@dataclass
class SampleStats:
    """Per (demand, routing) sample outcome."""

    fct: np.ndarray  # seconds
    thr: np.ndarray  # bits/s
    failed: int
    attempted: int


def _scenario_tables(scenario: Scenario) -> TableSet:
    if scenario.tables_dir:
        return load_table_set(scenario.tables_dir)
    return TableSet()


def apply_events(state: NetworkState, events: list) -> NetworkState:
    """Replay the failure/mitigation history onto the base topology. History
    mitigations must be state-only (traffic moves need a sampled demand)."""
    for ev in events:
        if isinstance(ev, Failure):
            state = apply_failure(state, ev)
        elif isinstance(ev, Mitigation):
            if any(isinstance(a, MoveTraffic) for a in ev.actions):
                raise ConfigurationError(
                    "history mitigations cannot move traffic; make it a candidate"
                )
            state, _ = apply_mitigation(state, DemandMatrix(()), ev)
        else:
            raise ConfigurationError(f"unknown event {ev!r}")
    return state


def _estimator_config(scenario: Scenario, capture_link_load: bool) -> EstimatorConfig:
    return EstimatorConfig(
        epoch_s=scenario.epoch_s,
        interval=scenario.interval,
        use_fast_maxmin=scenario.use_fast_maxmin,
        window_split=scenario.window_split,
        guard_gap_s=scenario.guard_gap_s,
        capture_link_load=capture_link_load,
    )


def _evaluate_task(args) -> tuple[str, int, list[SampleStats]]:
    """One (mitigation, demand sample) cell: N routing samples through the
    long- and short-flow estimators. Pure; safe for process pools."""
    (state, scenario, mitigation, k) = args
    tables = _scenario_tables(scenario)
    servers = sorted(state.server_map)
    dm = sample_demand(scenario.traffic, servers, stable_u64("traffic", scenario.seed, k))
    st, dm = apply_mitigation(state, dm, mitigation)
    short_dm, long_dm = split_traffic(dm, scenario.traffic.short_threshold_bytes)
    t0, t1 = scenario.interval
    short_dm = DemandMatrix(
        tuple(f for f in short_dm.flows if t0 <= f.start < t1), dm.seed
    )
    routing_seed = stable_u64("routing", scenario.seed, k)
    samples = sample_routing(st, dm, scenario.routing_samples, routing_seed)
    cap_seed = stable_u64("caps", scenario.seed, k)
    short_seed = stable_u64("short", scenario.seed, k)

    cfg = _estimator_config(scenario, capture_link_load=len(short_dm.flows) > 0)
    out: list[SampleStats] = []
    for rs in samples:
        long_rs_paths = {f.id: rs.paths[f.id] for f in long_dm.flows}
        short_rs_paths = {f.id: rs.paths[f.id] for f in short_dm.flows}
        long_rs = type(rs)(index=rs.index, paths=long_rs_paths)
        short_rs = type(rs)(index=rs.index, paths=short_rs_paths)
        if scenario.window_split > 1:
            lres = stitch_windows(st, long_dm, long_rs, cfg, tables, cap_seed)
        else:
            lres = estimate_long_flows(st, long_dm, long_rs, cfg, tables, cap_seed)
        sres = estimate_short_flows(
            st,
            short_dm,
            short_rs,
            tables,
            short_seed,
            n_mc=scenario.short_flow_mc,
            link_trace=lres.link_trace,
        )
        if len(sres.fcts):
            fct = sres.fcts
        else:  # no short flows: a long flow's duration is its completion time
            fct = lres.durations
        if len(lres.throughputs):
            thr = lres.throughputs
        elif len(sres.fcts):
            thr = sres.sizes * 8.0 / sres.fcts
        else:
            thr = np.zeros(0)
        failed = len(lres.failed_ids) + len(lres.straggler_ids) + len(sres.failed_ids)
        attempted = (
            len(lres.flow_ids)
            + len(lres.failed_ids)
            + len(lres.straggler_ids)
            + sres.n_flows
            + len(sres.failed_ids)
        )
        out.append(SampleStats(fct=fct, thr=thr, failed=failed, attempted=attempted))
    return mitigation.id, k, out


def _composites_from_stats(
    stats: list[SampleStats], summary_q: float
) -> tuple[dict[str, CompositeDistribution], float]:
    per_metric = {}
    for metric in STANDARD_METRICS:
        values = [s.fct if metric.kind.startswith("fct") else s.thr for s in stats]
        per_metric[metric.name] = composite(values, metric, summary_q)
    failed = sum(s.failed for s in stats)
    attempted = sum(s.attempted for s in stats)
    return per_metric, (failed / attempted if attempted else 0.0)


def evaluate_scenario(
    scenario: Scenario,
    jobs: int = 1,
    method: str = "swarm",
    progress=None,
) -> dict:
    """Full evaluation; returns the results/v1 document (JSON-serializable,
    deterministic for a fixed scenario + seed + method)."""
    base_state = scenario.state
    state = apply_events(base_state, scenario.events)

    comparator = scenario.comparator
    if isinstance(comparator, LinearComparator) and comparator.healthy is None:
        healthy = _healthy_metrics(scenario, jobs)
        comparator = LinearComparator(
            weights=comparator.weights, healthy=healthy, tie_fraction=comparator.tie_fraction
        )

    tasks = [
        (state, scenario, mit, k)
        for mit in sorted(scenario.candidates, key=lambda m: m.id)
        for k in range(scenario.demand_samples)
    ]
    collected: dict[tuple[str, int], list[SampleStats]] = {}
    done = 0
    if jobs <= 1 or len(tasks) == 1:
        for t in tasks:
            mid, k, stats = _evaluate_task(t)
            collected[(mid, k)] = stats
            done += 1
            if progress:
                progress(done / len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for mid, k, stats in pool.map(_evaluate_task, tasks):
                collected[(mid, k)] = stats
                done += 1
                if progress:
                    progress(done / len(tasks))

    results: list[EvaluationResult] = []
    for mit in sorted(scenario.candidates, key=lambda m: m.id):
        stats = [
            s
            for k in range(scenario.demand_samples)
            for s in collected[(mit.id, k)]
        ]
        composites, failure_fraction = _composites_from_stats(
            stats, scenario.summary_percentile
        )
        st_m, _ = apply_mitigation(state, DemandMatrix(()), _state_only(mit))
        results.append(
            EvaluationResult(
                mitigation_id=mit.id,
                composites=composites,
                failure_fraction=failure_fraction,
                partitioned=bool(unreachable_tor_pairs(st_m)),
            )
        )

    ordered = rank(results, comparator)
    ranking = [r.mitigation_id for r in ordered]

    if method == "swarm":
        chosen = ranking[0]
    else:
        servers = sorted(state.server_map)
        dm0 = sample_demand(
            scenario.traffic, servers, stable_u64("traffic", scenario.seed, 0)
        )
        window = scenario.interval[1] - scenario.interval[0]
        pick = choose_with_method(
            method, state, dm0, scenario.candidates, scenario.failures(), window
        )
        chosen = _match_candidate(pick, scenario.candidates)

    by_id = {r.mitigation_id: r for r in results}
    best: dict[str, float] = {}
    for metric in STANDARD_METRICS:
        vals = [r.summary(metric.name) for r in results if not r.partitioned]
        if not vals:
            continue
        best[metric.name] = (
            min(vals) if METRIC_DIRECTION[metric.name] == LOWER_BETTER else max(vals)
        )

    mitigations_doc = {}
    for r in results:
        penalties = {}
        for name, b in best.items():
            p = performance_penalty(r.summary(name), b, METRIC_DIRECTION[name])
            penalties[name] = p
        mitigations_doc[r.mitigation_id] = {
            "composites": {
                name: {
                    "values": [float(v) for v in c.values],
                    "summary": float(c.summary()),
                    "skipped_samples": c.skipped_samples,
                }
                for name, c in r.composites.items()
            },
            "failure_fraction": r.failure_fraction,
            "partitioned": r.partitioned,
            "penalty_vs_best": penalties,
        }

    transcripts = {}
    for i in range(len(ordered) - 1):
        a, b = ordered[i], ordered[i + 1]
        if a.partitioned or b.partitioned:
            continue
        verdict, transcript = compare(a, b, comparator)
        transcripts[f"{a.mitigation_id} vs {b.mitigation_id}"] = {
            "verdict": verdict,
            "steps": transcript,
        }

    return {
        "schema": "results/v1",
        "scenario": scenario.name,
        "seed": scenario.seed,
        "method": method,
        "comparator": comparator_to_dict(scenario.comparator),
        "quantile_method": "nearest-rank",
        "summary_percentile": scenario.summary_percentile,
        "demand_samples": scenario.demand_samples,
        "routing_samples": scenario.routing_samples,
        "mitigations": mitigations_doc,
        "ranking": ranking,
        "chosen": chosen,
        "chosen_penalty": mitigations_doc[chosen]["penalty_vs_best"],
        "partitioned": sorted(r.mitigation_id for r in results if r.partitioned),
    }


def _state_only(mit: Mitigation) -> Mitigation:
    return Mitigation(
        id=mit.id,
        actions=tuple(a for a in mit.actions if not isinstance(a, MoveTraffic)) or mit.actions,
    )


def _match_candidate(pick: Mitigation, candidates: list[Mitigation]) -> str:
    for c in candidates:
        if c.actions == pick.actions:
            return c.id
    for c in candidates:
        if c.id == pick.id:
            return c.id
    # baselines may synthesize an action outside the candidate list; fall back
    # to no-action semantics if present, else the synthesized id
    for c in candidates:
        if c.id == "no-action":
            if all(type(a).__name__ == "NoAction" for a in pick.actions):
                return c.id
    return pick.id


def _healthy_metrics(scenario: Scenario, jobs: int) -> dict[str, float]:
    """Evaluate the failure-free topology under no-action to normalize the
    linear comparator."""
    from dataclasses import replace as _replace

    healthy_scenario = _replace(
        scenario,
        events=[],
        candidates=[Mitigation.no_action()],
        comparator=scenario.comparator,
    )
    stats: list[SampleStats] = []
    for k in range(scenario.demand_samples):
        _, _, s = _evaluate_task(
            (healthy_scenario.state, healthy_scenario, Mitigation.no_action(), k)
        )
        stats.extend(s)
    composites, _ = _composites_from_stats(stats, scenario.summary_percentile)
    return {name: c.summary() for name, c in composites.items()}


def write_results(path: str, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
