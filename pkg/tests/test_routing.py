import numpy as np
import pytest

from swarm.errors import UnreachableError
from swarm.net_model import (
    DisableLink,
    Failure,
    Mitigation,
    SetWcmpWeights,
    apply_failure,
    apply_mitigation,
    build_clos,
)
from swarm.routing import (
    Path,
    build_path_trie,
    enumerate_paths,
    path_probability,
    sample_routing,
)
from swarm.traffic import DemandMatrix, Flow


@pytest.fixture
def clos():
    return build_clos(2, 2, 2, 2, 2, 10e9, 50e-6)


def test_single_path_probability_one(clos):
    # T1 -> dst ToR in its own pod: one next hop
    assert path_probability(clos, ("p00-t1-00", "p00-tor01"), "p00-tor01") == 1.0


def test_ecmp_two_equal_uplinks(clos):
    paths = enumerate_paths(clos, "p00-tor00", "p00-tor01")
    assert len(paths) == 2
    for p in paths:
        assert p.probability == pytest.approx(0.5)


def test_wcmp_three_to_one(clos):
    m = Mitigation(
        "w", (SetWcmpWeights("p00-tor00", {"p00-t1-00": 3.0, "p00-t1-01": 1.0}),)
    )
    st, _ = apply_mitigation(clos, DemandMatrix(()), m)
    probs = {
        p.nodes[1]: p.probability for p in enumerate_paths(st, "p00-tor00", "p00-tor01")
    }
    assert probs["p00-t1-00"] == pytest.approx(0.75)
    assert probs["p00-t1-01"] == pytest.approx(0.25)


def test_same_tor_trivial_path(clos):
    paths = enumerate_paths(clos, "p00-tor00", "p00-tor00")
    assert len(paths) == 1 and paths[0].trivial and paths[0].probability == 1.0


def test_intra_pod_two_paths(clos):
    paths = enumerate_paths(clos, "p00-tor00", "p00-tor01")
    assert [p.nodes for p in paths] == sorted(p.nodes for p in paths)  # lexicographic
    assert sum(p.probability for p in paths) == pytest.approx(1.0, abs=1e-9)


def test_inter_pod_path_count_and_sum(clos):
    paths = enumerate_paths(clos, "p00-tor00", "p01-tor01")
    # 2 T1 up x 2 T2 x (1 T1 down... T2 fans to 2 T1s in dst pod) = 8
    assert len(paths) == 8
    assert sum(p.probability for p in paths) == pytest.approx(1.0, abs=1e-9)


def test_probability_sums_all_pairs(clos):
    tors = clos.tors()
    for src in tors:
        for dst in tors:
            total = sum(p.probability for p in enumerate_paths(clos, src, dst))
            assert total == pytest.approx(1.0, abs=1e-9)


def test_partitioned_pair_unreachable(clos):
    st = clos
    for t1 in ("p00-t1-00", "p00-t1-01"):
        st = apply_failure(st, Failure("link_cut", f"l:p00-tor00:{t1}", 1.0))
    with pytest.raises(UnreachableError):
        enumerate_paths(st, "p00-tor00", "p01-tor00")


def _dm(flows):
    return DemandMatrix(tuple(flows))


def test_single_path_sampling_identical(clos):
    # after disabling one uplink, intra-pod pair has a single live path
    st, _ = apply_mitigation(
        clos, DemandMatrix(()), Mitigation("d", (DisableLink("l:p00-tor00:p00-t1-00"),))
    )
    dm = _dm([Flow("f1", "p00-tor00-s00", "p00-tor01-s00", 1e6, 0.0)])
    samples = sample_routing(st, dm, 16, seed=0)
    nodes = {s.paths["f1"].nodes for s in samples}
    assert len(nodes) == 1


def test_two_equal_paths_split(clos):
    dm = _dm([Flow("f1", "p00-tor00-s00", "p00-tor01-s00", 1e6, 0.0)])
    n = 10_000
    samples = sample_routing(clos, dm, n, seed=1)
    via_a = sum(1 for s in samples if s.paths["f1"].nodes[1] == "p00-t1-00")
    assert abs(via_a / n - 0.5) < 0.02  # 3 sigma of binomial(n, .5) is ~0.015


def test_disabled_uplink_never_sampled(clos):
    st, _ = apply_mitigation(
        clos, DemandMatrix(()), Mitigation("d", (DisableLink("l:p00-tor00:p00-t1-00"),))
    )
    dm = _dm([Flow("f1", "p00-tor00-s00", "p01-tor00-s00", 1e6, 0.0)])
    for s in sample_routing(st, dm, 200, seed=2):
        assert "p00-t1-00" not in s.paths["f1"].nodes


def test_unreachable_flow_marked_not_dropped(clos):
    st = clos
    for t1 in ("p00-t1-00", "p00-t1-01"):
        st = apply_failure(st, Failure("link_cut", f"l:p00-tor00:{t1}", 1.0))
    dm = _dm(
        [
            Flow("dead", "p00-tor00-s00", "p01-tor00-s00", 1e6, 0.0),
            Flow("alive", "p00-tor01-s00", "p01-tor00-s00", 1e6, 0.0),
        ]
    )
    samples = sample_routing(st, dm, 4, seed=3)
    for s in samples:
        assert s.paths["dead"] is None
        assert s.paths["alive"] is not None
        assert s.failed_flows() == ["dead"]


def test_sampling_deterministic_per_flow_id(clos):
    dm = _dm(
        [
            Flow("f1", "p00-tor00-s00", "p01-tor00-s00", 1e6, 0.0),
            Flow("f2", "p00-tor00-s01", "p01-tor01-s00", 1e6, 0.1),
        ]
    )
    a = sample_routing(clos, dm, 8, seed=9)
    b = sample_routing(clos, dm, 8, seed=9)
    for sa, sb in zip(a, b):
        assert sa.paths == sb.paths
    # a flow's draws do not depend on which other flows are present
    dm_only_f2 = _dm([Flow("f2", "p00-tor00-s01", "p01-tor01-s00", 1e6, 0.1)])
    c = sample_routing(clos, dm_only_f2, 8, seed=9)
    for sa, sc in zip(a, c):
        assert sa.paths["f2"] == sc.paths["f2"]


def test_sampled_frequencies_match_probabilities(clos):
    from scipy import stats

    dm = _dm([Flow("f1", "p00-tor00-s00", "p01-tor00-s00", 1e6, 0.0)])
    n = 10_000
    samples = sample_routing(clos, dm, n, seed=4)
    paths = enumerate_paths(clos, "p00-tor00", "p01-tor00")
    counts = {p.nodes: 0 for p in paths}
    for s in samples:
        counts[s.paths["f1"].nodes] += 1
    obs = np.array([counts[p.nodes] for p in paths])
    exp = np.array([p.probability * n for p in paths])
    chi2 = float(np.sum((obs - exp) ** 2 / exp))
    assert chi2 < stats.chi2.ppf(0.99, df=len(paths) - 1)


# -- path trie --------------------------------------------------------------


def test_trie_single_path_full_mask():
    p = Path(("a", "b", "c"), ("e1", "e2"))
    trie = build_path_trie("f", [p] * 5)
    assert len(trie.leaves) == 1
    assert trie.leaves[0].mask.all()


def test_trie_masks_partition():
    p1 = Path(("a", "b", "c"), ("e1", "e2"))
    p2 = Path(("a", "d", "c"), ("e3", "e4"))
    sampled = [p1] * 600 + [p2] * 400
    trie = build_path_trie("f", sampled)
    assert len(trie.leaves) == 2
    m1, m2 = (leaf.mask for leaf in trie.leaves)
    assert m1.sum() == 600 and m2.sum() == 400
    assert not (m1 & m2).any()
    assert (m1 | m2).all()


def test_trie_update_touches_only_paths_with_edge():
    p1 = Path(("a", "b", "c"), ("e1", "e2"))
    p2 = Path(("a", "d", "c"), ("e3", "e4"))
    trie = build_path_trie("f", [p1, p2, p1, p2])
    trie.update_edge("e3", lambda r: r + 7.0)
    rates = trie.rates_by_sample()
    assert list(rates) == [0.0, 7.0, 0.0, 7.0]


def test_trie_batched_equals_sequential():
    rng = np.random.default_rng(0)
    paths_pool = [
        Path(("a", "b", "c"), ("e1", "e2")),
        Path(("a", "d", "c"), ("e3", "e2")),
        Path(("a", "d", "e"), ("e3", "e5")),
    ]
    n = 64
    sampled = [paths_pool[i] for i in rng.integers(0, 3, n)]
    trie = build_path_trie("f", sampled)
    updates = [("e2", 1.5), ("e3", 2.0), ("e1", 0.25), ("e2", 3.0)]
    for eid, delta in updates:
        trie.update_edge(eid, lambda r, d=delta: r + d)
    batched = trie.rates_by_sample()
    sequential = np.zeros(n)
    for i, p in enumerate(sampled):
        for eid, delta in updates:
            if eid in p.edge_ids:
                sequential[i] += delta
    assert (batched == sequential).all()
