"""Max-min fair rate allocation with per-flow rate caps.

Two routes to the same quantity:

* ``exact_max_min`` is progressive filling on the graph augmented with one
  virtual edge per capped flow (capacity = cap). All active flows rise at a
  common fill level; a freeze event occurs when a link saturates or a flow
  hits its cap, so the iteration count grows with links plus distinct caps,
  which is what makes an approximate variant worth having.

* ``fast_max_min`` is the approximate tier-ordered sweep: each link is
  water-filled once per sweep. A crossing flow is bounded by its cap and by
  the availability it last saw on its other links (allocation there plus
  that link's slack), which lets bottleneck information propagate across
  the fabric in a couple of sweeps. Rates are the per-flow minimum over
  link allocations, so the result is capacity-feasible by construction.

Both operate on a ``LinkSystem``: link capacities plus per-flow link index
lists, independent of how the topology is represented.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .net_model import NetworkState
from .routing import Path

UNCAPPED = np.inf
_SAT_TOL = 1e-12


@dataclass
class LinkSystem:
    cap: np.ndarray  # [n_links] capacities
    flow_links: list[np.ndarray]  # per flow: indices into cap
    tiers: list[np.ndarray] | None = None  # link index groups in sweep order
    _ctx: dict | None = None  # static sweep structures, built lazily

    @property
    def n_flows(self) -> int:
        return len(self.flow_links)

    def incidence(self) -> tuple[np.ndarray, np.ndarray]:
        """(flow_idx, link_idx) flattened incidence pairs."""
        if not self.flow_links:
            return np.zeros(0, np.intp), np.zeros(0, np.intp)
        flows = np.repeat(
            np.arange(len(self.flow_links)), [len(l) for l in self.flow_links]
        )
        links = (
            np.concatenate(self.flow_links)
            if any(len(l) for l in self.flow_links)
            else np.zeros(0, np.intp)
        )
        return flows.astype(np.intp), links.astype(np.intp)

    def sweep_context(self) -> dict:
        """Per-flow padded link rows and per-link crossing-flow arrays; static
        across calls, so epoch loops reuse them."""
        if self._ctx is None:
            n = self.n_flows
            n_links = len(self.cap)
            lens = [len(l) for l in self.flow_links]
            width = max(lens, default=0)
            links_pad = np.full((n, max(width, 1)), -1, dtype=np.intp)
            for f, links in enumerate(self.flow_links):
                if len(links):
                    links_pad[f, : len(links)] = links
            flows_flat, links_flat = self.incidence()
            order = np.argsort(links_flat, kind="stable")
            lf, ff = links_flat[order], flows_flat[order]
            starts = np.searchsorted(lf, np.arange(n_links))
            ends = np.searchsorted(lf, np.arange(n_links), side="right")
            link_flows = {
                li: ff[starts[li] : ends[li]]
                for li in range(n_links)
                if ends[li] > starts[li]
            }
            self._ctx = {
                "links_pad": links_pad,
                "link_flows": link_flows,
                "flows_flat": flows_flat,
                "links_flat": links_flat,
            }
        return self._ctx


_TIER_ORDER = {"server": 0, "tor": 1, "agg": 1, "t1": 2, "t2": 3}


def build_link_system(
    state: NetworkState, paths: dict[str, Path], flow_ids: list[str]
) -> tuple[LinkSystem, dict[str, int]]:
    """Index the links actually used by these flows; tier groups follow the
    fabric order (ToR-T1 links first, then T1-T2)."""
    used: dict[str, int] = {}
    tier_of: dict[str, str] = {}
    for fid in flow_ids:
        for eid in paths[fid].edge_ids:
            if eid not in used:
                used[eid] = -1
                e = state.edges[eid]
                ku, kv = state.nodes[e.u].kind, state.nodes[e.v].kind
                tier_of[eid] = min(ku, kv, key=lambda k: _TIER_ORDER[k])
    ordered = sorted(used, key=lambda eid: (_TIER_ORDER[tier_of[eid]], eid))
    for i, eid in enumerate(ordered):
        used[eid] = i
    cap = np.array([state.edges[eid].capacity for eid in ordered])
    flow_links = [
        np.array([used[eid] for eid in paths[fid].edge_ids], dtype=np.intp)
        for fid in flow_ids
    ]
    groups: dict[int, list[int]] = {}
    for eid in ordered:
        groups.setdefault(_TIER_ORDER[tier_of[eid]], []).append(used[eid])
    tiers = [np.array(groups[k], dtype=np.intp) for k in sorted(groups)]
    return LinkSystem(cap=cap, flow_links=flow_links, tiers=tiers or None), used


def exact_max_min(
    system: LinkSystem, caps: np.ndarray, active: np.ndarray | None = None
) -> np.ndarray:
    """Progressive filling. caps[i] = per-flow rate bound (np.inf if uncapped);
    active selects participating flows (others get rate 0). Every flow must
    cross at least one link or carry a finite cap."""
    n = system.n_flows
    rates = np.zeros(n)
    if n == 0:
        return rates
    act = np.ones(n, bool) if active is None else active.copy()
    caps = np.asarray(caps, dtype=float)

    ctx = system.sweep_context()
    flows_flat, links_flat = ctx["flows_flat"], ctx["links_flat"]
    count = np.zeros(len(system.cap))
    np.add.at(count, links_flat[act[flows_flat]], 1.0)
    remaining = system.cap.astype(float).copy()

    zero = act & (caps <= 0)
    if zero.any():
        act &= ~zero
        np.add.at(count, links_flat[zero[flows_flat]], -1.0)

    level = 0.0
    guard = 0
    while act.any():
        guard += 1
        if guard > 2 * (len(system.cap) + n) + 8:
            raise RuntimeError("progressive filling failed to terminate")
        live = count > 0
        delta_link = np.min(remaining[live] / count[live]) if live.any() else np.inf
        act_caps = caps[act]
        min_cap = act_caps.min() if len(act_caps) else np.inf
        delta_cap = min_cap - level
        if not np.isfinite(delta_link) and not np.isfinite(delta_cap):
            raise ValueError("flow with no links and no cap has unbounded rate")
        delta = min(delta_link, delta_cap)

        np.add.at(remaining, links_flat[act[flows_flat]], -delta)
        level += delta

        frozen = np.zeros(n, bool)
        if delta_cap <= delta_link:  # flows at their cap freeze there
            frozen |= act & (caps <= level + _SAT_TOL * max(level, 1.0))
        sat = (remaining <= _SAT_TOL * np.maximum(system.cap, 1.0)) & (count > 0)
        if sat.any():
            on_sat = sat[links_flat] & act[flows_flat]
            frozen[flows_flat[on_sat]] = True
            frozen &= act
        if frozen.any():
            rates[frozen] = np.minimum(level, caps[frozen])
            act &= ~frozen
            np.add.at(count, links_flat[frozen[flows_flat]], -1.0)
    return rates


def _waterfill_link(capacity: float, bounds: np.ndarray) -> tuple[np.ndarray, float]:
    """Single-link max-min among flows with upper bounds. Returns the
    allocations (summing to <= capacity) and the link's water level: the rate
    one more unconstrained flow could still claim here."""
    k = len(bounds)
    if k == 1:  # the common fabric case: level is whatever a newcomer gets
        b0 = bounds[0]
        return (np.array([b0 if b0 < capacity else capacity]), capacity)
    bmin = float(bounds.min())
    if bmin == float(bounds.max()):  # all equal, including all-unbounded
        fair = capacity / k
        if bmin > fair:
            return np.full(k, fair), fair
        return bounds.copy(), capacity - (k - 1) * bmin
    order = np.argsort(bounds, kind="stable")
    b = bounds[order]
    csum0 = np.concatenate(([0.0], np.cumsum(b)[:-1]))
    with np.errstate(invalid="ignore"):
        share = (capacity - csum0) / (k - np.arange(k))
    over = b > share
    alloc_sorted = b.copy()
    if over.any():
        m = int(np.argmax(over))
        level = float(share[m])
        alloc_sorted[m:] = np.minimum(b[m:], level)
    else:
        level = float(share[-1])  # slack plus the largest bound
    out = np.empty(k)
    out[order] = alloc_sorted
    return out, level


def fast_max_min(
    system: LinkSystem,
    caps: np.ndarray,
    active: np.ndarray | None = None,
    sweeps: int = 8,
    rtol: float = 1e-3,
) -> np.ndarray:
    """Tier-ordered sweeps: water-fill every link once per sweep, bounding a
    crossing flow by its cap and by the water levels of its other links.
    Stops once rates and levels move less than rtol between sweeps (normally
    after the first refinement pass); feasible by construction. Inactive
    flows participate with a zero bound, so the static sweep structures are
    shared across an epoch loop."""
    n = system.n_flows
    if n == 0:
        return np.zeros(0)
    act = np.ones(n, bool) if active is None else active
    caps = np.asarray(caps, dtype=float)
    n_links = len(system.cap)
    ctx = system.sweep_context()
    links_pad = ctx["links_pad"]
    eff_caps = np.where(act, caps, 0.0)
    link_flows: dict[int, np.ndarray] = {}
    for li, fl in ctx["link_flows"].items():
        fla = fl[act[fl]] if not act.all() else fl
        if len(fla):
            link_flows[li] = fla

    level = np.full(n_links + 1, np.inf)  # slot -1 is the pad
    alloc: dict[int, np.ndarray] = {}
    prev = prev_level = None
    tiers = system.tiers or [np.arange(n_links, dtype=np.intp)]
    for _ in range(max(1, sweeps)):
        for tier in tiers:
            for li in tier:
                fl = link_flows.get(int(li))
                if fl is None:
                    continue
                rows = links_pad[fl]
                vals = np.where((rows >= 0) & (rows != li), level[rows], np.inf)
                bounds = np.minimum(eff_caps[fl], vals.min(axis=1))
                alloc[int(li)], level[int(li)] = _waterfill_link(
                    float(system.cap[li]), bounds
                )
        theta = eff_caps.copy()
        for li, fl in link_flows.items():
            np.minimum.at(theta, fl, alloc[li])
        if prev is not None:
            # rates lag the level propagation by one sweep, so require both
            # to be stable before stopping
            d_theta = np.max(np.abs(theta - prev) / np.maximum(np.abs(theta), 1e-12))
            fin = np.isfinite(level) & np.isfinite(prev_level)
            same_inf = np.array_equal(np.isfinite(level), np.isfinite(prev_level))
            d_level = (
                np.max(np.abs(level[fin] - prev_level[fin]) / np.maximum(level[fin], 1e-12))
                if fin.any()
                else 0.0
            )
            if d_theta <= rtol and same_inf and d_level <= rtol:
                break
        prev, prev_level = theta, level.copy()
    return theta


def maxmin_certificate(
    system: LinkSystem, caps: np.ndarray, rates: np.ndarray, rtol: float = 1e-6
) -> bool:
    """Max-min optimality: every flow has a saturated traversed edge (real or
    its own cap) on which its rate is maximal among the crossing flows."""
    caps = np.asarray(caps, dtype=float)
    load = np.zeros(len(system.cap))
    for i, links in enumerate(system.flow_links):
        load[links] += rates[i]
    if np.any(load > system.cap * (1 + 1e-9) + 1e-12):
        return False
    for i, links in enumerate(system.flow_links):
        if np.isfinite(caps[i]) and rates[i] >= caps[i] * (1 - rtol) - 1e-15:
            continue  # virtual edge saturated; flow alone on it, so maximal
        ok = False
        for li in links:
            saturated = load[li] >= system.cap[li] * (1 - rtol) - 1e-15
            if not saturated:
                continue
            crossing = [j for j, ls in enumerate(system.flow_links) if li in ls]
            if rates[i] >= max(rates[j] for j in crossing) * (1 - rtol) - 1e-15:
                ok = True
                break
        if not ok:
            return False
    return True
