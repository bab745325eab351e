"""WCMP path probabilities, routing-sample generation, and the per-flow
path trie used to batch per-link updates across samples.

Paths follow Clos up/down (valley-free) routing as encoded in the per-switch
tables. Weight renormalization happens here, over *live* next hops only, so
disabling a link implicitly reroutes the traffic that would have crossed it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnreachableError
from .net_model import NetworkState
from .seeds import rng_for
from .traffic import DemandMatrix


@dataclass(frozen=True)
class Path:
    nodes: tuple[str, ...]  # src ToR .. dst ToR inclusive
    edge_ids: tuple[str, ...]
    probability: float = 1.0

    @property
    def trivial(self) -> bool:
        return len(self.nodes) == 1


@dataclass
class RoutingSample:
    index: int
    # flow id -> Path, or None when the flow's endpoints are partitioned
    paths: dict[str, Path | None]

    def failed_flows(self) -> list[str]:
        return [fid for fid, p in self.paths.items() if p is None]


def path_probability(state: NetworkState, nodes: tuple[str, ...], dst_tor: str) -> float:
    """Product over hops of w / sum(w over live next hops toward dst)."""
    prob = 1.0
    for i in range(len(nodes) - 1):
        here, nxt = nodes[i], nodes[i + 1]
        live = state.live_next_hops(here, dst_tor)
        total = sum(w for _, w in live)
        if total <= 0:
            raise UnreachableError(f"no live next hop at {here} toward {dst_tor}")
        w = dict(live).get(nxt)
        if w is None:
            return 0.0
        prob *= w / total
    return prob


def enumerate_paths(state: NetworkState, src_tor: str, dst_tor: str) -> list[Path]:
    """All live routed paths with probabilities, in lexicographic node order.
    Probabilities sum to 1 for a reachable pair."""
    if src_tor == dst_tor:
        return [Path(nodes=(src_tor,), edge_ids=(), probability=1.0)]
    out: list[Path] = []

    def walk(node: str, acc_nodes: list[str], acc_edges: list[str], acc_prob: float):
        if node == dst_tor:
            out.append(Path(tuple(acc_nodes), tuple(acc_edges), acc_prob))
            return
        live = state.live_next_hops(node, dst_tor)
        total = sum(w for _, w in live)
        if total <= 0:
            return
        for nh, w in sorted(live):
            if w <= 0 or nh in acc_nodes:
                continue
            eid = state.adjacency[node][nh]
            walk(nh, acc_nodes + [nh], acc_edges + [eid], acc_prob * w / total)

    walk(src_tor, [src_tor], [], 1.0)
    if not out:
        raise UnreachableError(f"{src_tor} cannot reach {dst_tor}")
    return out


def sample_routing(
    state: NetworkState, dm: DemandMatrix, n_samples: int, seed: int
) -> list[RoutingSample]:
    """N independent routings of the demand. Each flow's path is drawn from
    its WCMP path distribution; the draw for sample n depends only on
    (seed, n, flow id). Flows with partitioned endpoints get a None marker."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    pair_paths: dict[tuple[str, str], list[Path] | None] = {}
    pair_cdf: dict[tuple[str, str], np.ndarray] = {}

    samples = [RoutingSample(index=n, paths={}) for n in range(n_samples)]
    for f in dm.flows:
        pair = (state.tor_of(f.src), state.tor_of(f.dst))
        if pair not in pair_paths:
            try:
                paths = enumerate_paths(state, *pair)
            except UnreachableError:
                paths = None
            pair_paths[pair] = paths
            if paths is not None:
                pair_cdf[pair] = np.cumsum([p.probability for p in paths])
        paths = pair_paths[pair]
        if paths is None:
            for s in samples:
                s.paths[f.id] = None
            continue
        if len(paths) == 1:
            for s in samples:
                s.paths[f.id] = paths[0]
            continue
        u = rng_for("routing", seed, f.id).random(n_samples)
        idx = np.minimum(np.searchsorted(pair_cdf[pair], u, side="left"), len(paths) - 1)
        for n, i in enumerate(idx):
            samples[n].paths[f.id] = paths[int(i)]
    return samples


# -- path trie -------------------------------------------------------------------


@dataclass
class TrieLeaf:
    path: Path
    mask: np.ndarray  # bool over samples; which of the N samples took this path
    rates: np.ndarray  # per-sample rate estimate; meaningful where mask holds


@dataclass
class PathTrie:
    """Per-flow trie over sampled paths. Internal nodes are switches, leaves
    are complete paths. Leaf masks are disjoint and cover every sample that
    produced a valid path, so a per-link update touches exactly the samples
    routed across that link."""

    flow_id: str
    n_samples: int
    root: dict = field(default_factory=dict)  # node id -> child dict, "" -> TrieLeaf
    leaves: list[TrieLeaf] = field(default_factory=list)

    def update_edge(self, edge_id: str, fn) -> None:
        """Apply fn(rates_subset) -> rates_subset to every sample whose path
        crosses edge_id; other samples are untouched."""
        for leaf in self.leaves:
            if edge_id in leaf.path.edge_ids:
                leaf.rates[leaf.mask] = fn(leaf.rates[leaf.mask])

    def rates_by_sample(self) -> np.ndarray:
        out = np.full(self.n_samples, np.nan)
        for leaf in self.leaves:
            out[leaf.mask] = leaf.rates[leaf.mask]
        return out

    def leaf_for(self, path: Path) -> TrieLeaf | None:
        for leaf in self.leaves:
            if leaf.path.nodes == path.nodes:
                return leaf
        return None


def build_path_trie(flow_id: str, sampled_paths: list[Path | None]) -> PathTrie:
    n = len(sampled_paths)
    trie = PathTrie(flow_id=flow_id, n_samples=n)
    by_nodes: dict[tuple[str, ...], TrieLeaf] = {}
    for i, p in enumerate(sampled_paths):
        if p is None:
            continue
        leaf = by_nodes.get(p.nodes)
        if leaf is None:
            leaf = TrieLeaf(path=p, mask=np.zeros(n, bool), rates=np.zeros(n))
            by_nodes[p.nodes] = leaf
            level = trie.root
            for node in p.nodes:
                level = level.setdefault(node, {})
            level[""] = leaf
            trie.leaves.append(leaf)
        leaf.mask[i] = True
    return trie
