"""Network state: topology graph, failures, and mitigation actions.

The state is an annotated graph. Edges carry capacity, drop rate and
propagation delay; switches carry a drop rate and a WCMP routing table;
servers attach to ToRs through ``server_map`` (server-to-ToR links are not
modeled as graph edges, so capacity contention happens only on the
switch-to-switch fabric).

States are immutable by convention: every update returns a new state that
shares unchanged node/edge records with its parent, so states are safe to
hand to parallel workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping

from .errors import ConfigurationError, InvalidRoutingError, NotFoundError, StateError
from .seeds import stable_u64

SERVER = "server"
TOR = "tor"
T1 = "t1"
T2 = "t2"
AGG = "agg"  # collapsed healthy pod, acts as a ToR directly attached to the spine

_TIER_RANK = {SERVER: 0, TOR: 1, AGG: 1, T1: 2, T2: 3}


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    drop_rate: float = 0.0


@dataclass(frozen=True)
class Edge:
    id: str
    u: str
    v: str
    capacity: float  # bits/s
    drop_rate: float = 0.0
    prop_delay: float = 0.0  # seconds, one way
    admin_state: str = "enabled"
    saved_drop_rate: float | None = None  # fault level recorded at disable time

    @property
    def disabled(self) -> bool:
        return self.admin_state == "disabled"

    @property
    def alive(self) -> bool:
        """Usable by routing: not admin-disabled and not dropping everything."""
        return not self.disabled and self.drop_rate < 1.0

    def other(self, node_id: str) -> str:
        return self.v if node_id == self.u else self.u


# routing table for one switch: destination ToR -> ((next_hop, weight), ...)
RoutingTable = Mapping[str, tuple[tuple[str, float], ...]]


class NetworkState:
    def __init__(
        self,
        nodes: dict[str, Node],
        edges: dict[str, Edge],
        server_map: dict[str, str],
        routing: dict[str, RoutingTable],
    ):
        self.nodes = nodes
        self.edges = edges
        self.server_map = server_map
        self.routing = routing
        self._adjacency: dict[str, dict[str, str]] | None = None
        self._reach_cache: dict[str, frozenset[str]] = {}

    # -- validation ---------------------------------------------------------

    def validate(self) -> None:
        for srv, tor in self.server_map.items():
            if tor not in self.nodes:
                raise ConfigurationError(f"server {srv} maps to unknown ToR {tor}")
        for e in self.edges.values():
            if e.u not in self.nodes or e.v not in self.nodes:
                raise ConfigurationError(f"edge {e.id} has an endpoint not in nodes")
            if e.capacity <= 0:
                raise ConfigurationError(f"edge {e.id} has non-positive capacity")

    # -- derived views ------------------------------------------------------

    @property
    def adjacency(self) -> dict[str, dict[str, str]]:
        if self._adjacency is None:
            adj: dict[str, dict[str, str]] = {n: {} for n in self.nodes}
            for e in self.edges.values():
                adj[e.u][e.v] = e.id
                adj[e.v][e.u] = e.id
            self._adjacency = adj
        return self._adjacency

    @property
    def tier_index(self) -> dict[str, tuple[str, ...]]:
        """Switch-to-switch edges grouped by the lower endpoint's tier."""
        buckets: dict[str, list[str]] = {}
        for eid in sorted(self.edges):
            e = self.edges[eid]
            ku, kv = self.nodes[e.u].kind, self.nodes[e.v].kind
            lower = ku if _TIER_RANK[ku] <= _TIER_RANK[kv] else kv
            buckets.setdefault(lower, []).append(eid)
        return {k: tuple(v) for k, v in buckets.items()}

    def tors(self) -> list[str]:
        return sorted(n for n, node in self.nodes.items() if node.kind in (TOR, AGG))

    def edge_between(self, a: str, b: str) -> Edge:
        eid = self.adjacency.get(a, {}).get(b)
        if eid is None:
            raise NotFoundError(f"no edge between {a} and {b}")
        return self.edges[eid]

    def tor_of(self, server: str) -> str:
        try:
            return self.server_map[server]
        except KeyError:
            raise NotFoundError(f"unknown server {server}") from None

    def node_alive(self, node_id: str) -> bool:
        return self.nodes[node_id].drop_rate < 1.0

    def live_next_hops(self, node_id: str, dst_tor: str) -> list[tuple[str, float]]:
        """Table entries usable for dst: edge alive, neighbor alive, and the
        neighbor still has a live route to dst (a dead-end branch is treated
        as withdrawn, the way converged routing would)."""
        table = self.routing.get(node_id, {})
        entries = table.get(dst_tor, ())
        reach = self._reachable_from(dst_tor)
        out = []
        for nh, w in entries:
            eid = self.adjacency.get(node_id, {}).get(nh)
            if eid is None or not self.edges[eid].alive:
                continue
            if not self.node_alive(nh) or (nh != dst_tor and nh not in reach):
                continue
            out.append((nh, w))
        return out

    def _reachable_from(self, dst_tor: str) -> frozenset[str]:
        """Nodes with a live routed path to dst_tor (reverse BFS over tables)."""
        cached = self._reach_cache.get(dst_tor)
        if cached is not None:
            return cached
        # invert table entries pointing at each node
        incoming: dict[str, list[str]] = {}
        for node_id, table in self.routing.items():
            entries = table.get(dst_tor, ())
            for nh, w in entries:
                if w <= 0:
                    continue
                eid = self.adjacency.get(node_id, {}).get(nh)
                if eid is None or not self.edges[eid].alive:
                    continue
                if not self.node_alive(node_id) or not self.node_alive(nh):
                    continue
                incoming.setdefault(nh, []).append(node_id)
        seen = {dst_tor} if self.node_alive(dst_tor) else set()
        stack = list(seen)
        while stack:
            cur = stack.pop()
            for prev in incoming.get(cur, ()):
                if prev not in seen:
                    seen.add(prev)
                    stack.append(prev)
        result = frozenset(seen)
        self._reach_cache[dst_tor] = result
        return result

    # -- copy-on-write updates ----------------------------------------------

    def with_edges(self, updated: Iterable[Edge]) -> "NetworkState":
        edges = dict(self.edges)
        for e in updated:
            edges[e.id] = e
        return NetworkState(self.nodes, edges, self.server_map, self.routing)

    def with_node(self, node: Node) -> "NetworkState":
        nodes = dict(self.nodes)
        nodes[node.id] = node
        return NetworkState(nodes, self.edges, self.server_map, self.routing)

    def with_routing(self, node_id: str, table: RoutingTable) -> "NetworkState":
        routing = dict(self.routing)
        routing[node_id] = table
        return NetworkState(self.nodes, self.edges, self.server_map, routing)

    def structurally_equal(self, other: "NetworkState") -> bool:
        return (
            self.nodes == other.nodes
            and self.edges == other.edges
            and self.server_map == other.server_map
            and {n: dict(t) for n, t in self.routing.items()}
            == {n: dict(t) for n, t in other.routing.items()}
        )


# -- failures ----------------------------------------------------------------

LINK_DROP = "link_drop"
TOR_DROP = "tor_drop"
LINK_CAPACITY_REDUCTION = "link_capacity_reduction"
LINK_CUT = "link_cut"
SWITCH_DROP = "switch_drop"

FAILURE_KINDS = (LINK_DROP, TOR_DROP, LINK_CAPACITY_REDUCTION, LINK_CUT, SWITCH_DROP)


@dataclass(frozen=True)
class Failure:
    kind: str
    location: str  # edge id or node id
    magnitude: float = 1.0  # drop rate, or capacity factor for reductions
    onset: float = 0.0

    def __post_init__(self):
        if self.kind not in FAILURE_KINDS:
            raise ConfigurationError(f"unknown failure kind {self.kind!r}")
        if self.kind == LINK_CAPACITY_REDUCTION:
            if not (0 < self.magnitude <= 1):
                raise ConfigurationError("capacity factor must be in (0, 1]")
        elif not (0 <= self.magnitude <= 1):
            raise ConfigurationError("drop rate must be in [0, 1]")


def apply_failure(state: NetworkState, failure: Failure) -> NetworkState:
    kind, loc = failure.kind, failure.location
    if kind in (LINK_DROP, LINK_CAPACITY_REDUCTION, LINK_CUT):
        edge = state.edges.get(loc)
        if edge is None:
            raise NotFoundError(f"unknown edge {loc}")
        if kind == LINK_DROP:
            edge = replace(edge, drop_rate=failure.magnitude)
        elif kind == LINK_CUT:
            edge = replace(edge, drop_rate=1.0)
        else:
            edge = replace(edge, capacity=edge.capacity * failure.magnitude)
        return state.with_edges([edge])
    node = state.nodes.get(loc)
    if node is None:
        raise NotFoundError(f"unknown node {loc}")
    if kind == TOR_DROP and node.kind not in (TOR, AGG):
        raise ConfigurationError(f"{loc} is not a ToR")
    return state.with_node(replace(node, drop_rate=failure.magnitude))


# -- mitigations ---------------------------------------------------------------


@dataclass(frozen=True)
class NoAction:
    pass


@dataclass(frozen=True)
class DisableLink:
    edge_id: str


@dataclass(frozen=True)
class DisableSwitch:
    node_id: str


@dataclass(frozen=True)
class BringBackLink:
    edge_id: str


@dataclass(frozen=True)
class SetWcmpWeights:
    node_id: str
    weights: Mapping[str, float]  # next hop -> new weight, applied per dst entry


@dataclass(frozen=True)
class RestoreEcmp:
    node_id: str


@dataclass(frozen=True)
class MoveTraffic:
    from_server: str
    to_server: str
    fraction: float = 1.0


Action = NoAction | DisableLink | DisableSwitch | BringBackLink | SetWcmpWeights | RestoreEcmp | MoveTraffic


@dataclass(frozen=True)
class Mitigation:
    id: str
    actions: tuple[Action, ...] = (NoAction(),)

    @staticmethod
    def no_action() -> "Mitigation":
        return Mitigation(id="no-action", actions=(NoAction(),))


def _disable_edge(state: NetworkState, edge_id: str) -> NetworkState:
    edge = state.edges.get(edge_id)
    if edge is None:
        raise NotFoundError(f"unknown edge {edge_id}")
    if edge.disabled:
        raise StateError(f"edge {edge_id} is already disabled")
    return state.with_edges(
        [replace(edge, drop_rate=1.0, admin_state="disabled", saved_drop_rate=edge.drop_rate)]
    )


def _bring_back_edge(state: NetworkState, edge_id: str) -> NetworkState:
    edge = state.edges.get(edge_id)
    if edge is None:
        raise NotFoundError(f"unknown edge {edge_id}")
    if not edge.disabled or edge.saved_drop_rate is None:
        raise StateError(f"edge {edge_id} was never disabled; nothing to bring back")
    return state.with_edges(
        [replace(edge, drop_rate=edge.saved_drop_rate, admin_state="enabled", saved_drop_rate=None)]
    )


def _set_wcmp(state: NetworkState, node_id: str, weights: Mapping[str, float]) -> NetworkState:
    if node_id not in state.nodes:
        raise NotFoundError(f"unknown node {node_id}")
    for w in weights.values():
        if w < 0:
            raise ConfigurationError("WCMP weights must be non-negative")
    table = state.routing.get(node_id, {})
    new_table = {}
    for dst, entries in table.items():
        new_entries = tuple((nh, float(weights.get(nh, w))) for nh, w in entries)
        new_table[dst] = new_entries
    out = state.with_routing(node_id, new_table)
    for dst, entries in new_table.items():
        live = out.live_next_hops(node_id, dst)
        if live and sum(w for _, w in live) <= 0:
            raise InvalidRoutingError(
                f"all enabled next-hop weights are zero at {node_id} for destination {dst}"
            )
    return out


def _restore_ecmp(state: NetworkState, node_id: str) -> NetworkState:
    if node_id not in state.nodes:
        raise NotFoundError(f"unknown node {node_id}")
    table = state.routing.get(node_id, {})
    return state.with_routing(
        node_id, {dst: tuple((nh, 1.0) for nh, _ in entries) for dst, entries in table.items()}
    )


def _move_traffic(demand, action: MoveTraffic):
    # local import: traffic depends on net_model for downscaling
    from .traffic import DemandMatrix

    if not (0 < action.fraction <= 1):
        raise ConfigurationError("traffic fraction must be in (0, 1]")
    salt = stable_u64("move-traffic", action.from_server, action.to_server)
    new_flows = []
    for f in demand.flows:
        if f.src == action.from_server or f.dst == action.from_server:
            u = (stable_u64(salt, f.id) % (1 << 53)) / float(1 << 53)
            if u < action.fraction:
                src = action.to_server if f.src == action.from_server else f.src
                dst = action.to_server if f.dst == action.from_server else f.dst
                f = replace(f, src=src, dst=dst)
        new_flows.append(f)
    return DemandMatrix(flows=tuple(new_flows), seed=demand.seed)


def apply_mitigation(state: NetworkState, demand, mitigation: Mitigation):
    """Apply the mitigation's actions in order; returns (state', demand')."""
    st, dm = state, demand
    for action in mitigation.actions:
        if isinstance(action, NoAction):
            continue
        elif isinstance(action, DisableLink):
            st = _disable_edge(st, action.edge_id)
        elif isinstance(action, BringBackLink):
            st = _bring_back_edge(st, action.edge_id)
        elif isinstance(action, DisableSwitch):
            node = st.nodes.get(action.node_id)
            if node is None:
                raise NotFoundError(f"unknown node {action.node_id}")
            for nbr_eid in sorted(st.adjacency[action.node_id].values()):
                if not st.edges[nbr_eid].disabled:
                    st = _disable_edge(st, nbr_eid)
        elif isinstance(action, SetWcmpWeights):
            st = _set_wcmp(st, action.node_id, action.weights)
        elif isinstance(action, RestoreEcmp):
            st = _restore_ecmp(st, action.node_id)
        elif isinstance(action, MoveTraffic):
            for srv in (action.from_server, action.to_server):
                if srv not in st.server_map:
                    raise NotFoundError(f"unknown server {srv}")
            dm = _move_traffic(dm, action)
        else:
            raise ConfigurationError(f"unknown action {action!r}")
    return st, dm


def unreachable_tor_pairs(state: NetworkState) -> list[tuple[str, str]]:
    """ToR pairs with no live routed path; non-empty means a partition."""
    tors = state.tors()
    bad = []
    for dst in tors:
        reach = state._reachable_from(dst)
        for src in tors:
            if src != dst and src not in reach:
                bad.append((src, dst))
    return bad


# -- Clos construction ---------------------------------------------------------


def build_clos(
    pods: int,
    tors_per_pod: int,
    t1_per_pod: int,
    t2_count: int,
    servers_per_tor: int,
    link_capacity: float,
    prop_delay: float,
) -> NetworkState:
    """Full bipartite ToR-T1 wiring inside each pod, T1-T2 across pods,
    ECMP (weight 1) tables installed everywhere."""
    for name, v in (
        ("pods", pods),
        ("tors_per_pod", tors_per_pod),
        ("t1_per_pod", t1_per_pod),
        ("t2_count", t2_count),
        ("servers_per_tor", servers_per_tor),
    ):
        if v < 1:
            raise ConfigurationError(f"{name} must be >= 1, got {v}")
    if link_capacity <= 0:
        raise ConfigurationError("link capacity must be positive")
    if prop_delay < 0:
        raise ConfigurationError("propagation delay must be >= 0")

    nodes: dict[str, Node] = {}
    edges: dict[str, Edge] = {}
    server_map: dict[str, str] = {}

    t2s = [f"t2-{i:02d}" for i in range(t2_count)]
    for t in t2s:
        nodes[t] = Node(t, T2)

    pod_tors: list[list[str]] = []
    pod_t1s: list[list[str]] = []
    for p in range(pods):
        tors = [f"p{p:02d}-tor{t:02d}" for t in range(tors_per_pod)]
        t1s = [f"p{p:02d}-t1-{i:02d}" for i in range(t1_per_pod)]
        pod_tors.append(tors)
        pod_t1s.append(t1s)
        for t in tors:
            nodes[t] = Node(t, TOR)
        for a in t1s:
            nodes[a] = Node(a, T1)
        for t in tors:
            for a in t1s:
                eid = f"l:{t}:{a}"
                edges[eid] = Edge(eid, t, a, link_capacity, prop_delay=prop_delay)
            for s in range(servers_per_tor):
                srv = f"{t}-s{s:02d}"
                nodes[srv] = Node(srv, SERVER)
                server_map[srv] = t
        for a in t1s:
            for t2 in t2s:
                eid = f"l:{a}:{t2}"
                edges[eid] = Edge(eid, a, t2, link_capacity, prop_delay=prop_delay)

    all_tors = [t for tors in pod_tors for t in tors]
    routing: dict[str, RoutingTable] = {}
    for p in range(pods):
        for t in pod_tors[p]:
            routing[t] = {
                dst: tuple((a, 1.0) for a in pod_t1s[p]) for dst in all_tors if dst != t
            }
        for a in pod_t1s[p]:
            table: dict[str, tuple[tuple[str, float], ...]] = {}
            for dst in all_tors:
                if dst in pod_tors[p]:
                    table[dst] = ((dst, 1.0),)
                else:
                    table[dst] = tuple((t2, 1.0) for t2 in t2s)
            routing[a] = table
    for t2 in t2s:
        routing[t2] = {
            dst: tuple((a, 1.0) for a in pod_t1s[p])
            for p in range(pods)
            for dst in pod_tors[p]
        }

    state = NetworkState(nodes, edges, server_map, routing)
    state.validate()
    return state


# -- downscaling ----------------------------------------------------------------


def _pods_of(state: NetworkState) -> list[tuple[list[str], list[str]]]:
    """Structural pod discovery: connected components over ToR-T1 edges.
    Returns (tors, t1s) per pod, deterministically ordered."""
    comp: dict[str, int] = {}
    nxt = 0
    for eid in sorted(state.edges):
        e = state.edges[eid]
        kinds = {state.nodes[e.u].kind, state.nodes[e.v].kind}
        if kinds != {TOR, T1}:
            continue
        cu, cv = comp.get(e.u), comp.get(e.v)
        if cu is None and cv is None:
            comp[e.u] = comp[e.v] = nxt
            nxt += 1
        elif cu is None:
            comp[e.u] = cv
        elif cv is None:
            comp[e.v] = cu
        elif cu != cv:
            for k, c in comp.items():
                if c == cv:
                    comp[k] = cu
    pods: dict[int, tuple[list[str], list[str]]] = {}
    for node_id in sorted(comp):
        tors, t1s = pods.setdefault(comp[node_id], ([], []))
        (tors if state.nodes[node_id].kind == TOR else t1s).append(node_id)
    return [pods[c] for c in sorted(pods)]


def _pod_healthy(state: NetworkState, tors: list[str], t1s: list[str]) -> bool:
    members = set(tors) | set(t1s)
    for n in members:
        if state.nodes[n].drop_rate != 0.0:
            return False
    for e in state.edges.values():
        if e.u in members or e.v in members:
            if e.drop_rate != 0.0 or e.disabled:
                return False
    return True


def downscale_topology(
    state: NetworkState, healthy_pod_collapse: bool, server_scale: float = 1.0
) -> NetworkState:
    if not (0 < server_scale <= 1):
        raise ConfigurationError("server_scale must be in (0, 1]")
    if not healthy_pod_collapse and server_scale == 1.0:
        return state

    nodes = dict(state.nodes)
    edges = dict(state.edges)
    server_map = dict(state.server_map)
    routing: dict[str, dict[str, tuple[tuple[str, float], ...]]] = {
        n: dict(t) for n, t in state.routing.items()
    }

    renamed_tor: dict[str, str] = {}  # collapsed ToR -> aggregate node id
    if healthy_pod_collapse:
        t2s = sorted(n for n, nd in state.nodes.items() if nd.kind == T2)
        for tors, t1s in _pods_of(state):
            if not _pod_healthy(state, tors, t1s):
                continue
            agg_id = f"agg:{tors[0]}"
            nodes[agg_id] = Node(agg_id, AGG)
            members = set(tors) | set(t1s)
            up_delay: dict[str, list[float]] = {}
            up_cap: dict[str, list[float]] = {}
            tor_t1_delays: list[float] = []
            for eid in sorted(state.edges):
                e = state.edges[eid]
                if e.u in members or e.v in members:
                    del edges[eid]
                    other = {e.u, e.v} - members
                    if other:  # T1-T2 uplink
                        (t2,) = other
                        up_cap.setdefault(t2, []).append(e.capacity)
                        up_delay.setdefault(t2, []).append(e.prop_delay)
                    else:
                        tor_t1_delays.append(e.prop_delay)
            tor_hop = sum(tor_t1_delays) / len(tor_t1_delays) if tor_t1_delays else 0.0
            for t2 in sorted(up_cap):
                eid = f"l:{agg_id}:{t2}"
                edges[eid] = Edge(
                    eid,
                    agg_id,
                    t2,
                    capacity=math.fsum(up_cap[t2]),
                    prop_delay=sum(up_delay[t2]) / len(up_delay[t2]) + tor_hop,
                )
            for n in members:
                del nodes[n]
                routing.pop(n, None)
            for t in tors:
                renamed_tor[t] = agg_id
            for srv, tor in list(server_map.items()):
                if tor in renamed_tor:
                    server_map[srv] = renamed_tor[tor]
            routing[agg_id] = {}

        if renamed_tor:
            agg_ids = sorted(set(renamed_tor.values()))
            # rewrite destination entries at surviving switches
            for node_id, table in routing.items():
                new_table: dict[str, tuple[tuple[str, float], ...]] = {}
                for dst, entries in table.items():
                    new_dst = renamed_tor.get(dst, dst)
                    if new_dst != dst and nodes[node_id].kind == T2:
                        # spine now reaches the collapsed pod over one edge
                        eid = f"l:{new_dst}:{node_id}"
                        entries = ((new_dst, edges[eid].capacity),) if eid in edges else ()
                    else:
                        # at ToRs/T1s in other pods the next hops are unchanged
                        entries = tuple((nh, w) for nh, w in entries if nh in nodes)
                    if new_dst in new_table or not entries:
                        continue
                    new_table[new_dst] = entries
                routing[node_id] = new_table
            # aggregate nodes route everything through their T2 uplinks,
            # weighted by uplink capacity so the traffic split matches the
            # capacity the pod's T1 layer used to offer
            all_tors = sorted(
                n for n, nd in nodes.items() if nd.kind in (TOR, AGG)
            )
            for agg_id in agg_ids:
                ups = tuple(
                    (e.v if e.u == agg_id else e.u, e.capacity)
                    for e in (edges[eid] for eid in sorted(edges))
                    if agg_id in (e.u, e.v)
                )
                routing[agg_id] = {dst: ups for dst in all_tors if dst != agg_id}

    if server_scale < 1.0:
        by_tor: dict[str, list[str]] = {}
        for srv in sorted(server_map):
            by_tor.setdefault(server_map[srv], []).append(srv)
        for tor, srvs in by_tor.items():
            keep = max(1, math.ceil(len(srvs) * server_scale))
            for srv in srvs[keep:]:
                del server_map[srv]
                nodes.pop(srv, None)
        for eid, e in edges.items():
            ku, kv = nodes[e.u].kind, nodes[e.v].kind
            if ku != SERVER and kv != SERVER:
                edges[eid] = replace(e, capacity=e.capacity * server_scale)

    out = NetworkState(nodes, edges, server_map, {n: t for n, t in routing.items()})
    out.validate()
    return out
