"""Desk-scale reproduction grids of the three production failure scenarios.

All cases run on the testbed-shaped Clos (two pods of three ToRs and two
T1s, two spines). Scenario 1 sweeps consecutive link corruptions at high
(1e-2) and low (1e-5) drop rates, scenario 2 starts from a half-capacity
core link, scenario 3 from ToR-level drops; orderings of the two failures
are enumerated, the first failure always arriving already mitigated by the
playbook disable where it applies. 57 cases total.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

from .aggregate import PriorityComparator
from .engine import evaluate_scenario, write_results
from .net_model import (
    BringBackLink,
    DisableLink,
    DisableSwitch,
    Failure,
    Mitigation,
    MoveTraffic,
    NetworkState,
    SetWcmpWeights,
    build_clos,
)
from .scenario import PRIORITY_FCT, Scenario
from .traffic import TrafficSpec

HIGH = 1e-2
LOW = 1e-5

TOR_T1_A = "l:p00-tor00:p00-t1-00"
TOR_T1_B = "l:p00-tor00:p00-t1-01"  # same ToR, other T1
TOR_T1_C = "l:p00-tor01:p00-t1-01"  # other ToR, other T1
T1_T2_A = "l:p00-t1-00:t2-00"
T1_T2_B = "l:p00-t1-01:t2-01"


def testbed_state(link_capacity: float = 1e9, servers_per_tor: int = 2) -> NetworkState:
    return build_clos(2, 3, 2, 2, servers_per_tor, link_capacity, 50e-6)


def default_traffic(duration_s: float = 3.0) -> TrafficSpec:
    return TrafficSpec(
        rate_per_server_fps=3.0,
        size_cdf=((10e3, 0.3), (60e3, 0.55), (140e3, 0.7), (1.5e6, 0.9), (6e6, 1.0)),
        duration_s=duration_s,
        short_threshold_bytes=150e3,
    )


@dataclass
class SuiteCase:
    id: str
    events: list
    candidates: list[Mitigation]


def _wcmp_away(state: NetworkState, edge_id: str) -> Mitigation | None:
    """Shift WCMP weight off the failed link at the switch below it."""
    e = state.edges[edge_id]
    rank = {"tor": 1, "agg": 1, "t1": 2, "t2": 3}
    below = e.u if rank[state.nodes[e.u].kind] <= rank[state.nodes[e.v].kind] else e.v
    above = e.other(below)
    peers = [
        n
        for n in state.adjacency[below]
        if rank.get(state.nodes[n].kind, 0) > rank[state.nodes[below].kind]
    ]
    if len(peers) < 2:
        return None
    weights = {n: (1.0 if n != above else 0.25) for n in peers}
    return Mitigation(
        id=f"wcmp:{below}", actions=(SetWcmpWeights(below, weights),)
    )


def _link_candidates(
    state: NetworkState, second: str, first_disabled: str | None
) -> list[Mitigation]:
    cands = [
        Mitigation.no_action(),
        Mitigation(id=f"disable:{second}", actions=(DisableLink(second),)),
    ]
    if first_disabled:
        cands.append(
            Mitigation(
                id=f"bringback:{first_disabled}",
                actions=(BringBackLink(first_disabled),),
            )
        )
        cands.append(
            Mitigation(
                id=f"disable:{second}+bringback:{first_disabled}",
                actions=(DisableLink(second), BringBackLink(first_disabled)),
            )
        )
    w = _wcmp_away(state, second)
    if w:
        cands.append(w)
    return cands


def scenario1_cases(state: NetworkState) -> list[SuiteCase]:
    cases = []
    for eid in (TOR_T1_A, T1_T2_A):
        for rate, tag in ((HIGH, "hi"), (LOW, "lo")):
            cases.append(
                SuiteCase(
                    id=f"scen1-single-{eid}-{tag}",
                    events=[Failure("link_drop", eid, rate)],
                    candidates=_link_candidates(state, eid, None),
                )
            )
    pairs = [
        ("sametor", TOR_T1_A, TOR_T1_B),
        ("difftor", TOR_T1_A, TOR_T1_C),
        ("mixed", TOR_T1_A, T1_T2_B),
        ("core", T1_T2_A, T1_T2_B),
    ]
    for name, e1, e2 in pairs:
        for r1, t1 in ((HIGH, "hi"), (LOW, "lo")):
            for r2, t2 in ((HIGH, "hi"), (LOW, "lo")):
                for order in (0, 1):
                    first, second = (e1, e2) if order == 0 else (e2, e1)
                    rf, rs = (r1, r2) if order == 0 else (r2, r1)
                    cases.append(
                        SuiteCase(
                            id=f"scen1-pair-{name}-{t1}{t2}-o{order}",
                            events=[
                                Failure("link_drop", first, rf),
                                Mitigation(
                                    id=f"history-disable:{first}",
                                    actions=(DisableLink(first),),
                                ),
                                Failure("link_drop", second, rs),
                            ],
                            candidates=_link_candidates(state, second, first),
                        )
                    )
    return cases


def scenario2_cases(state: NetworkState) -> list[SuiteCase]:
    base = Failure("link_capacity_reduction", T1_T2_A, 0.5)
    cases = [
        SuiteCase(
            id="scen2-base",
            events=[base],
            candidates=_link_candidates(state, T1_T2_A, None),
        )
    ]
    levels = ((HIGH, "hi"), (LOW, "lo"), (1.0, "cut"))
    for rate, tag in levels:
        kind = "link_cut" if tag == "cut" else "link_drop"
        for order in (0, 1):
            events = (
                [base, Failure(kind, TOR_T1_A, rate)]
                if order == 0
                else [Failure(kind, TOR_T1_A, rate), base]
            )
            cases.append(
                SuiteCase(
                    id=f"scen2-{tag}-o{order}",
                    events=events,
                    candidates=_link_candidates(state, TOR_T1_A, None),
                )
            )
    return cases


def scenario3_cases(state: NetworkState) -> list[SuiteCase]:
    tor = "p00-tor00"
    spare = "p00-tor02-s00"
    moved = "p00-tor00-s00"

    def tor_candidates() -> list[Mitigation]:
        return [
            Mitigation.no_action(),
            Mitigation(id=f"drain:{tor}", actions=(DisableSwitch(tor),)),
            Mitigation(
                id=f"move:{moved}",
                actions=(MoveTraffic(moved, spare, 0.5),),
            ),
        ]

    cases = []
    for rate, tag in ((HIGH, "hi"), (LOW, "lo")):
        cases.append(
            SuiteCase(
                id=f"scen3-single-{tag}",
                events=[Failure("tor_drop", tor, rate)],
                candidates=tor_candidates(),
            )
        )
    levels = ((HIGH, "hi"), (LOW, "lo"), (1.0, "cut"))
    link = TOR_T1_C  # different ToR, same pod
    for tor_rate, ttag in ((HIGH, "hi"), (LOW, "lo")):
        for rate, tag in levels:
            kind = "link_cut" if tag == "cut" else "link_drop"
            for order in (0, 1):
                events = (
                    [Failure("tor_drop", tor, tor_rate), Failure(kind, link, rate)]
                    if order == 0
                    else [Failure(kind, link, rate), Failure("tor_drop", tor, tor_rate)]
                )
                cases.append(
                    SuiteCase(
                        id=f"scen3-{ttag}-{tag}-o{order}",
                        events=events,
                        candidates=tor_candidates()
                        + [Mitigation(id=f"disable:{link}", actions=(DisableLink(link),))],
                    )
                )
    return cases


SUITES = {
    "scen1": scenario1_cases,
    "scen2": scenario2_cases,
    "scen3": scenario3_cases,
}


def run_suite(
    suite: str,
    out_dir: str,
    seed: int = 0,
    jobs: int = 1,
    demand_samples: int = 2,
    routing_samples: int = 6,
) -> list[dict]:
    state = testbed_state()
    cases = SUITES[suite](state)
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for case in cases:
        sc = Scenario(
            name=case.id,
            state=state,
            traffic=default_traffic(),
            events=case.events,
            candidates=case.candidates,
            comparator=PriorityComparator(metrics=PRIORITY_FCT),
            demand_samples=demand_samples,
            routing_samples=routing_samples,
            interval=(0.5, 2.5),
            epoch_s=0.1,
            seed=seed,
        )
        doc = evaluate_scenario(sc, jobs=jobs)
        write_results(os.path.join(out_dir, f"{case.id}.json"), doc)
        chosen = doc["chosen"]
        pen = doc["mitigations"][chosen]["penalty_vs_best"]
        rows.append(
            {
                "case": case.id,
                "chosen": chosen,
                "ranking": "|".join(doc["ranking"]),
                "penalty_p99_fct": pen.get("p99_fct"),
                "penalty_p01_throughput": pen.get("p01_throughput"),
                "penalty_avg_throughput": pen.get("avg_throughput"),
                "partitioned": "|".join(doc["partitioned"]),
            }
        )
    with open(os.path.join(out_dir, f"{suite}-summary.csv"), "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    return rows
