import numpy as np
import pytest

from swarm.fairshare import (
    LinkSystem,
    build_link_system,
    exact_max_min,
    fast_max_min,
    maxmin_certificate,
)
from swarm.longflow import demand_aware_max_min
from swarm.net_model import build_clos
from swarm.routing import Path


def naive_progressive_filling(caps_link, flow_links, caps_flow):
    """Brute-force reference: explicit virtual edge per capped flow, one
    freeze event at a time."""
    links = {i: c for i, c in enumerate(caps_link)}
    attached = {}
    for f, ls in enumerate(flow_links):
        attached[f] = list(ls)
        if np.isfinite(caps_flow[f]):
            virtual = ("v", f)
            links[virtual] = caps_flow[f]
            attached[f].append(virtual)
    rates = {f: 0.0 for f in attached}
    active = set(attached)
    remaining = dict(links)
    level = 0.0
    while active:
        counts = {}
        for f in active:
            for l in attached[f]:
                counts[l] = counts.get(l, 0) + 1
        delta = min(remaining[l] / c for l, c in counts.items())
        level += delta
        for l, c in counts.items():
            remaining[l] -= delta * c
        frozen = {
            f
            for f in active
            if any(remaining[l] <= 1e-12 * max(links[l], 1.0) for l in attached[f])
        }
        for f in frozen:
            rates[f] = level
        active -= frozen
    return np.array([rates[f] for f in sorted(attached)])


def random_instance(rng):
    n_links = int(rng.integers(1, 7))
    n_flows = int(rng.integers(1, 9))
    caps_link = rng.uniform(1, 20, n_links)
    flow_links = [
        np.array(sorted(rng.choice(n_links, size=int(rng.integers(1, n_links + 1)), replace=False)))
        for _ in range(n_flows)
    ]
    caps_flow = np.where(rng.random(n_flows) < 0.5, rng.uniform(0.5, 15, n_flows), np.inf)
    return LinkSystem(cap=caps_link, flow_links=flow_links), caps_flow


def test_symmetric_fair_share():
    system = LinkSystem(cap=np.array([10.0]), flow_links=[np.array([0]), np.array([0])])
    rates = exact_max_min(system, np.array([np.inf, np.inf]))
    assert rates == pytest.approx([5.0, 5.0])


def test_capped_flow_yields_surplus():
    system = LinkSystem(cap=np.array([10.0]), flow_links=[np.array([0]), np.array([0])])
    rates = exact_max_min(system, np.array([np.inf, 2.0]))
    assert rates == pytest.approx([8.0, 2.0])


def test_two_link_progressive_filling():
    system = LinkSystem(
        cap=np.array([10.0, 4.0]),
        flow_links=[np.array([0]), np.array([1]), np.array([0, 1])],
    )
    rates = exact_max_min(system, np.array([np.inf] * 3))
    assert rates == pytest.approx([8.0, 2.0, 2.0])


def test_zero_cap_gets_zero_not_error():
    system = LinkSystem(cap=np.array([10.0]), flow_links=[np.array([0]), np.array([0])])
    rates = exact_max_min(system, np.array([np.inf, 0.0]))
    assert rates == pytest.approx([10.0, 0.0])


def test_exact_matches_brute_force_corpus():
    rng = np.random.default_rng(123)
    for _ in range(100):
        system, caps = random_instance(rng)
        mine = exact_max_min(system, caps.copy())
        ref = naive_progressive_filling(system.cap, system.flow_links, caps)
        np.testing.assert_allclose(mine, ref, rtol=1e-9, atol=1e-9)
        assert maxmin_certificate(system, caps, mine)


def test_fast_symmetric_is_exact():
    system = LinkSystem(cap=np.array([12.0]), flow_links=[np.array([0])] * 4)
    caps = np.array([np.inf] * 4)
    np.testing.assert_allclose(fast_max_min(system, caps), exact_max_min(system, caps))


def test_fast_never_exceeds_caps():
    rng = np.random.default_rng(5)
    for _ in range(50):
        system, caps = random_instance(rng)
        rates = fast_max_min(system, caps.copy())
        assert np.all(rates <= caps + 1e-9)


def test_fast_close_to_exact():
    rng = np.random.default_rng(77)
    for _ in range(100):
        system, caps = random_instance(rng)
        fast = fast_max_min(system, caps.copy())
        exact = exact_max_min(system, caps.copy())
        rel = np.abs(fast - exact) / np.maximum(exact, 1e-12)
        assert rel.max() <= 0.05


def test_adding_flow_monotone_on_shared_bottleneck():
    # on a single shared link, a newcomer can only lower or keep others' rates
    rng = np.random.default_rng(9)
    for _ in range(30):
        n = int(rng.integers(1, 8))
        caps = np.where(rng.random(n) < 0.5, rng.uniform(0.5, 6, n), np.inf)
        system = LinkSystem(cap=np.array([10.0]), flow_links=[np.array([0])] * n)
        base = exact_max_min(system, caps.copy())
        system2 = LinkSystem(cap=np.array([10.0]), flow_links=[np.array([0])] * (n + 1))
        with_extra = exact_max_min(system2, np.concatenate([caps, [np.inf]]))
        assert np.all(with_extra[:n] <= base + 1e-9)


def test_adding_flow_can_raise_an_unrelated_flow():
    # the general "never raises anyone" claim is false for multi-link max-min:
    # a newcomer squeezing B on L2 frees L1 capacity for A
    system = LinkSystem(
        cap=np.array([10.0, 4.0]), flow_links=[np.array([0]), np.array([0, 1])]
    )
    base = exact_max_min(system, np.array([np.inf, np.inf]))
    assert base == pytest.approx([6.0, 4.0])
    system2 = LinkSystem(
        cap=np.array([10.0, 4.0]),
        flow_links=[np.array([0]), np.array([0, 1]), np.array([1])],
    )
    grown = exact_max_min(system2, np.array([np.inf] * 3))
    assert grown == pytest.approx([8.0, 2.0, 2.0])
    assert grown[0] > base[0]


def test_capacity_removal_monotone_on_shared_bottleneck():
    rng = np.random.default_rng(31)
    for _ in range(30):
        n = int(rng.integers(1, 8))
        caps = np.where(rng.random(n) < 0.5, rng.uniform(0.5, 6, n), np.inf)
        system = LinkSystem(cap=np.array([10.0]), flow_links=[np.array([0])] * n)
        base = exact_max_min(system, caps.copy())
        half = LinkSystem(cap=np.array([5.0]), flow_links=[np.array([0])] * n)
        reduced = exact_max_min(half, caps.copy())
        assert np.all(reduced <= base + 1e-9)


def test_demand_aware_max_min_on_state():
    state = build_clos(1, 2, 2, 1, 1, 10e9, 50e-6)
    paths = {
        "a": Path(
            ("p00-tor00", "p00-t1-00", "p00-tor01"),
            ("l:p00-tor00:p00-t1-00", "l:p00-tor01:p00-t1-00"),
        ),
        "b": Path(
            ("p00-tor00", "p00-t1-00", "p00-tor01"),
            ("l:p00-tor00:p00-t1-00", "l:p00-tor01:p00-t1-00"),
        ),
    }
    rates = demand_aware_max_min(state, ["a", "b"], paths, {"a": None, "b": 2e9})
    assert rates["b"] == pytest.approx(2e9)
    assert rates["a"] == pytest.approx(8e9)


def test_build_link_system_tier_order():
    state = build_clos(2, 2, 2, 2, 1, 10e9, 50e-6)
    from swarm.routing import enumerate_paths

    paths = {"f": enumerate_paths(state, "p00-tor00", "p01-tor00")[0]}
    system, index = build_link_system(state, paths, ["f"])
    assert system.tiers is not None and len(system.tiers) == 2
    # ToR-T1 links come before T1-T2 links in the sweep order
    tor_tier, t1_tier = system.tiers
    assert max(tor_tier) < min(t1_tier)
