"""Baseline mitigation-selection strategies for head-to-head comparison.

These reproduce the decision logic of utilization-driven repair automation
(disable whatever minimizes max link utilization), residual-path-diversity
gates, and threshold-based operator playbooks. None of them look at
connection-level performance, which is exactly the comparison the ranking
engine is built to win.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError, UnsupportedFailureError
from .net_model import (
    LINK_DROP,
    SWITCH_DROP,
    T1,
    T2,
    TOR,
    TOR_DROP,
    DisableLink,
    DisableSwitch,
    Failure,
    Mitigation,
    NetworkState,
    NoAction,
    apply_mitigation,
    unreachable_tor_pairs,
)
from .routing import enumerate_paths
from .traffic import DemandMatrix


@dataclass(frozen=True)
class BaselineConfig:
    method: str  # netpilot-orig | netpilot-<th> | corropt-<th> | playbook-<th>
    utilization_window_s: float = 1.0  # demand window for expected-load rates

    def threshold(self) -> float:
        tail = self.method.rsplit("-", 1)[-1]
        if tail == "orig":
            return math.nan
        th = float(tail)
        if not (0 < th <= 100):
            raise ConfigurationError("threshold must be in (0, 100]")
        return th / 100.0


def expected_link_utilization(
    state: NetworkState, dm: DemandMatrix, window_s: float
) -> dict[str, float]:
    """Expected load per link: each flow's mean rate (size over the demand
    window) spread across its path distribution. No loss modeling; this is
    the healthy-network approximation the utilization baseline uses."""
    load: dict[str, float] = {eid: 0.0 for eid in state.edges}
    pair_cache: dict[tuple[str, str], list] = {}
    for f in dm.flows:
        pair = (state.tor_of(f.src), state.tor_of(f.dst))
        if pair[0] == pair[1]:
            continue
        if pair not in pair_cache:
            try:
                pair_cache[pair] = enumerate_paths(state, *pair)
            except Exception:
                pair_cache[pair] = []
        rate = f.size * 8.0 / window_s
        for path in pair_cache[pair]:
            for eid in path.edge_ids:
                load[eid] += rate * path.probability
    return {
        eid: load[eid] / state.edges[eid].capacity
        for eid in state.edges
        if state.edges[eid].alive
    }


def _max_utilization(state: NetworkState, dm: DemandMatrix, window_s: float) -> float:
    util = expected_link_utilization(state, dm, window_s)
    return max(util.values(), default=0.0)


def _has_disable(mit: Mitigation) -> bool:
    return any(isinstance(a, (DisableLink, DisableSwitch)) for a in mit.actions)


def netpilot_choose(
    state: NetworkState,
    dm: DemandMatrix,
    candidates: list[Mitigation],
    config: BaselineConfig,
) -> tuple[Mitigation, list[str]]:
    """Pick the candidate minimizing max link utilization on the healthy
    post-mitigation graph. The original variant always acts (it has no notion
    of a tolerable fault); thresholded variants act only when the winner's
    utilization stays under the threshold. Returns (choice, skipped ids)."""
    orig = config.method.endswith("orig")
    threshold = None if orig else config.threshold()

    skipped: list[str] = []
    scored: list[tuple[float, str, Mitigation]] = []
    for mit in candidates:
        if all(isinstance(a, NoAction) for a in mit.actions):
            continue
        if orig and not _has_disable(mit):
            continue
        try:
            st, dm_m = apply_mitigation(state, dm, mit)
        except Exception:
            skipped.append(mit.id)
            continue
        if unreachable_tor_pairs(st):
            skipped.append(mit.id)
            continue
        scored.append((_max_utilization(st, dm_m, config.utilization_window_s), mit.id, mit))
    if not scored:
        return Mitigation.no_action(), skipped
    scored.sort(key=lambda t: (t[0], t[1]))
    best_util, _, best = scored[0]
    if threshold is not None and best_util > threshold:
        return Mitigation.no_action(), skipped
    return best, skipped


def _up_paths_from_tor(state: NetworkState, tor: str, live_only: bool, skip_edge: str | None) -> int:
    """ToR -> T1 -> T2 chains; live_only counts only usable links."""
    count = 0
    for t1, eid in state.adjacency[tor].items():
        if state.nodes[t1].kind != T1:
            continue
        if eid == skip_edge or (live_only and not state.edges[eid].alive):
            continue
        for t2, eid2 in state.adjacency[t1].items():
            if state.nodes[t2].kind != T2:
                continue
            if eid2 == skip_edge or (live_only and not state.edges[eid2].alive):
                continue
            count += 1
    return count


def _tors_below_edge(state: NetworkState, edge_id: str) -> list[str]:
    e = state.edges[edge_id]
    ku, kv = state.nodes[e.u].kind, state.nodes[e.v].kind
    if TOR in (ku, kv):
        return [e.u if ku == TOR else e.v]
    # T1-T2 failure: every ToR under that T1 is affected
    t1 = e.u if ku == T1 else e.v
    return sorted(n for n, eid in state.adjacency[t1].items() if state.nodes[n].kind == TOR)


def corropt_choose(
    state: NetworkState, failure: Failure, threshold: float
) -> Mitigation:
    """Disable the corrupting link iff the fraction of structural up-paths to
    the spine that remain afterwards is at least the threshold."""
    if failure.kind != LINK_DROP:
        raise UnsupportedFailureError(
            "this gate only considers link corruption failures"
        )
    edge_id = failure.location
    worst = 1.0
    for tor in _tors_below_edge(state, edge_id):
        total = _up_paths_from_tor(state, tor, live_only=False, skip_edge=None)
        remaining = _up_paths_from_tor(state, tor, live_only=True, skip_edge=edge_id)
        worst = min(worst, remaining / total if total else 0.0)
    if worst >= threshold:
        return Mitigation(id=f"disable:{edge_id}", actions=(DisableLink(edge_id),))
    return Mitigation.no_action()


def playbook_choose(
    state: NetworkState,
    failure: Failure,
    threshold: float,
    drain_drop_threshold: float = 1e-3,
) -> Mitigation:
    """Operator playbook: above-ToR FCS errors are disabled when enough
    uplinks remain at the switch below; ToR-level loss above the drain
    threshold drains the ToR; congestion gets no action."""
    if failure.kind == LINK_DROP:
        e = state.edges[failure.location]
        ku, kv = state.nodes[e.u].kind, state.nodes[e.v].kind
        rank = {TOR: 1, "agg": 1, T1: 2, T2: 3}
        below = e.u if rank.get(ku, 0) <= rank.get(kv, 0) else e.v
        uplinks = [
            eid
            for nbr, eid in state.adjacency[below].items()
            if rank.get(state.nodes[nbr].kind, 0) > rank.get(state.nodes[below].kind, 0)
        ]
        total = len(uplinks)
        live_after = sum(
            1 for eid in uplinks if eid != failure.location and state.edges[eid].alive
        )
        if total and live_after / total >= threshold:
            return Mitigation(
                id=f"disable:{failure.location}", actions=(DisableLink(failure.location),)
            )
        return Mitigation.no_action()
    if failure.kind in (TOR_DROP, SWITCH_DROP):
        if failure.magnitude > drain_drop_threshold:
            return Mitigation(
                id=f"drain:{failure.location}",
                actions=(DisableSwitch(failure.location),),
            )
        return Mitigation.no_action()
    # congestion (capacity loss) and cuts: no action
    return Mitigation.no_action()


def choose_with_method(
    method: str,
    state: NetworkState,
    dm: DemandMatrix,
    candidates: list[Mitigation],
    failures: list[Failure],
    window_s: float = 1.0,
) -> Mitigation:
    """Dispatch for the CLI's --method flag; baselines that need the failure
    context use the most recent failure."""
    cfg = BaselineConfig(method=method, utilization_window_s=window_s)
    if method.startswith("netpilot"):
        choice, _ = netpilot_choose(state, dm, candidates, cfg)
        return choice
    if not failures:
        raise ConfigurationError(f"{method} needs a failure in the scenario")
    last = failures[-1]
    if method.startswith("corropt"):
        return corropt_choose(state, last, cfg.threshold())
    if method.startswith("playbook"):
        return playbook_choose(state, last, cfg.threshold())
    raise ConfigurationError(f"unknown method {method!r}")
