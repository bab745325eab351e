import numpy as np
import pytest

from swarm.errors import ConfigurationError
from swarm.longflow import LinkLoadTrace
from swarm.net_model import Failure, apply_failure, build_clos
from swarm.routing import enumerate_paths, sample_routing
from swarm.shortflow import estimate_short_flows, short_flow_fct
from swarm.tables import (
    QueueDelayTable,
    RttCountTable,
    TableSet,
    rtt_count_default,
)
from swarm.traffic import DemandMatrix, Flow


def test_rtt_count_fits_first_window():
    assert rtt_count_default(10 * 1460, iw=10, mss=1460) == 1
    assert rtt_count_default(1, iw=10, mss=1460) == 1


def test_rtt_count_doubling():
    # 3*IW*MSS needs two rounds: 10 + 20 segments >= 30
    assert rtt_count_default(43800, iw=10, mss=1460) == 2


def test_rtt_count_sim_oracle():
    # frozen from explicit doubling simulation: window doubles each round
    def doubling_rounds(size, iw, mss):
        sent, w, r = 0, iw, 0
        while sent < size:
            sent += w * mss
            w *= 2
            r += 1
        return r

    for size in (1000, 14600, 43800, 150e3, 1e6):
        assert rtt_count_default(size, 10, 1460) == doubling_rounds(size, 10, 1460)


def test_rtt_count_rejects_zero():
    with pytest.raises(ConfigurationError):
        rtt_count_default(0)


@pytest.fixture
def clos():
    return build_clos(2, 2, 2, 2, 2, 10e9, 50e-6)


def test_lossless_fct_equals_propagation_times_rounds(clos):
    # inter-pod path: 4 hops at 50us -> RTT 400us; size fits one window
    path = enumerate_paths(clos, "p00-tor00", "p01-tor00")[0]
    assert len(path.edge_ids) == 4
    flow = Flow("f", "p00-tor00-s00", "p01-tor00-s00", 1000.0, 0.0)
    draws = short_flow_fct(flow, path, clos, TableSet(), (0,), n_mc=16)
    assert np.allclose(draws, 4 * 2 * 50e-6)


def test_five_hop_500us(clos):
    # synthetic 5-hop path at 50us per hop, one RTT
    import swarm.routing as routing

    nodes = ("p00-tor00", "p00-t1-00", "t2-00", "p01-t1-00", "p01-tor00")
    edge_ids = tuple(
        clos.adjacency[a][b] for a, b in zip(nodes, nodes[1:])
    )
    path = routing.Path(nodes + ("p01-tor01",), edge_ids + (clos.adjacency["p01-t1-00"]["p01-tor01"],))
    flow = Flow("f", "p00-tor00-s00", "p01-tor01-s00", 1000.0, 0.0)
    draws = short_flow_fct(flow, path, clos, TableSet(), (0,), n_mc=4)
    assert np.allclose(draws, 5 * 2 * 50e-6)


def test_dead_hop_fails(clos):
    st = apply_failure(clos, Failure("link_cut", "l:p00-tor00:p00-t1-00", 1.0))
    from swarm.routing import Path

    path = Path(
        ("p00-tor00", "p00-t1-00", "p00-tor01"),
        ("l:p00-tor00:p00-t1-00", "l:p00-tor01:p00-t1-00"),
    )
    flow = Flow("f", "p00-tor00-s00", "p00-tor01-s00", 1000.0, 0.0)
    assert short_flow_fct(flow, path, st, TableSet(), (0,)) is None


def test_fct_at_least_min_rounds_times_prop(clos):
    st = apply_failure(clos, Failure("link_drop", "l:p00-tor00:p00-t1-00", 1e-2))
    paths = enumerate_paths(st, "p00-tor00", "p01-tor00")
    path = paths[0]
    prop = 2 * sum(st.edges[e].prop_delay for e in path.edge_ids)
    flow = Flow("f", "p00-tor00-s00", "p01-tor00-s00", 120e3, 0.0)
    draws = short_flow_fct(flow, path, st, TableSet(), (1,), n_mc=64)
    min_rounds = rtt_count_default(120e3)
    assert np.all(draws >= min_rounds * prop - 1e-12)


def test_queue_table_dominance(clos):
    # scaling every queueing cell up never lowers any FCT quantile
    path = enumerate_paths(clos, "p00-tor00", "p00-tor01")[0]
    trace = LinkLoadTrace(
        epoch_s=0.1,
        start_time=0.0,
        edge_index={eid: i for i, eid in enumerate(path.edge_ids)},
        loads=np.full((1, len(path.edge_ids)), 5e9),
        counts=np.full((1, len(path.edge_ids)), 4.0),
    )
    base_cells = {(0, 0): (1e-5, 2e-5, 4e-5)}
    slow_cells = {(0, 0): (2e-5, 4e-5, 8e-5)}
    flow = Flow("f", "p00-tor00-s00", "p00-tor01-s00", 50e3, 0.05)
    fcts = {}
    for name, cells in (("base", base_cells), ("slow", slow_cells)):
        tables = TableSet(queue_delay=QueueDelayTable((0.5,), (4.0,), cells))
        fcts[name] = np.sort(
            short_flow_fct(flow, path, clos, tables, (2,), n_mc=128, link_trace=trace)
        )
    assert np.all(fcts["slow"] >= fcts["base"] - 1e-15)


def test_table_lookup_exact_grid_point():
    t = RttCountTable(
        sizes=(1e4, 1e5),
        drop_rates=(1e-4, 1e-2),
        iws=(10,),
        cells={
            (i, j, 0): ((5 + i + j,), (1.0,))
            for i in range(2)
            for j in range(2)
        },
    )
    out = t.sample(1e5, 1e-2, 10, np.array([0.3, 0.9]))
    assert list(out) == [7, 7]
    # off-grid snaps to nearest (log scale) and is deterministic
    out2 = t.sample(0.9e5, 0.8e-2, 10, np.array([0.5]))
    assert list(out2) == [7]


def test_estimate_short_flows_empty(clos):
    res = estimate_short_flows(clos, DemandMatrix(()), None)
    assert len(res.fcts) == 0


def test_estimate_point_mass_and_order_independence(clos):
    flows = [
        Flow(f"f{i}", "p00-tor00-s00", "p00-tor01-s00", 1000.0, 0.0) for i in range(5)
    ]
    dm = DemandMatrix(tuple(flows))
    rs = sample_routing(clos, dm, 1, seed=0)[0]
    res = estimate_short_flows(clos, dm, rs, TableSet(), seed=0, n_mc=4)
    assert np.allclose(res.fcts, res.fcts[0])  # identical flows, no loss, no queue
    dm_rev = DemandMatrix(tuple(reversed(flows)))
    res_rev = estimate_short_flows(clos, dm_rev, rs, TableSet(), seed=0, n_mc=4)
    assert sorted(zip(res.flow_ids, res.fcts)) == sorted(zip(res_rev.flow_ids, res_rev.fcts))


def test_failed_flows_tallied(clos):
    st = apply_failure(clos, Failure("tor_drop", "p00-tor00", 1.0))
    flows = [
        Flow("dead", "p00-tor00-s00", "p01-tor00-s00", 1e3, 0.0),
        Flow("ok", "p00-tor01-s00", "p01-tor00-s00", 1e3, 0.0),
    ]
    dm = DemandMatrix(tuple(flows))
    rs = sample_routing(st, dm, 1, seed=0)[0]
    res = estimate_short_flows(st, dm, rs, TableSet(), seed=0)
    assert res.failed_ids == ["dead"]
    assert set(res.flow_ids) == {"ok"}
