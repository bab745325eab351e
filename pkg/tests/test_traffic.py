import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarm.errors import ConfigurationError
from swarm.net_model import build_clos
from swarm.traffic import (
    DemandMatrix,
    Flow,
    TrafficSpec,
    default_size_cdf,
    downscale_traffic,
    required_samples,
    sample_demand,
    split_traffic,
)


def spec_with(rate=2.0, duration=5.0, cdf=None, comm=()):
    return TrafficSpec(
        rate_per_server_fps=rate,
        size_cdf=cdf or ((1e4, 0.5), (1e6, 1.0)),
        duration_s=duration,
        comm_prob=comm,
    )


SERVERS = [f"srv{i}" for i in range(4)]


def test_zero_rate_empty_matrix():
    dm = sample_demand(spec_with(rate=0.0), SERVERS, seed=1)
    assert dm.flows == ()


def test_degenerate_comm_prob():
    spec = spec_with(comm=(("srv0", "srv1", 1.0),))
    dm = sample_demand(spec, SERVERS, seed=2)
    assert len(dm.flows) > 0
    assert all(f.src == "srv0" and f.dst == "srv1" for f in dm.flows)


def test_poisson_mean_total_flows():
    # 10 flows/s x 4 servers x 100 s: mean 4000, sd sqrt(4000)
    spec = spec_with(rate=10.0, duration=100.0)
    totals = [len(sample_demand(spec, SERVERS, seed=s).flows) for s in range(200)]
    mean = np.mean(totals)
    sigma_of_mean = math.sqrt(4000 / 200)
    assert abs(mean - 4000) < 3 * sigma_of_mean


def test_flow_fields_valid():
    spec = spec_with(duration=7.0)
    dm = sample_demand(spec, SERVERS, seed=3)
    for f in dm.flows:
        assert 0 <= f.start < 7.0
        assert f.size > 0
        assert f.src != f.dst


def test_bitwise_reproducible():
    spec = spec_with()
    assert sample_demand(spec, SERVERS, 42) == sample_demand(spec, SERVERS, 42)
    assert sample_demand(spec, SERVERS, 42) != sample_demand(spec, SERVERS, 43)


def test_empty_size_distribution_rejected():
    with pytest.raises(ConfigurationError):
        TrafficSpec(rate_per_server_fps=1.0, size_cdf=(), duration_s=1.0)


def test_split_threshold_boundary():
    flows = (
        Flow("a", "s1", "s2", 150e3, 0.0),
        Flow("b", "s1", "s2", 150e3 + 1, 0.0),
    )
    short, long = split_traffic(DemandMatrix(flows), 150e3)
    assert [f.id for f in short.flows] == ["a"]
    assert [f.id for f in long.flows] == ["b"]


def test_split_empty():
    short, long = split_traffic(DemandMatrix(()), 150e3)
    assert short.flows == () and long.flows == ()


@given(st.lists(st.floats(min_value=1, max_value=1e9), max_size=40), st.integers(0, 2**31))
@settings(max_examples=50, deadline=None)
def test_split_then_merge_is_permutation(sizes, seed):
    flows = tuple(Flow(f"f{i}", "a", "b", s, 0.0) for i, s in enumerate(sizes))
    short, long = split_traffic(DemandMatrix(flows, seed), 150e3)
    merged = sorted(short.flows + long.flows, key=lambda f: f.id)
    assert merged == sorted(flows, key=lambda f: f.id)


@pytest.fixture
def small_state():
    return build_clos(1, 2, 1, 1, 2, 10e9, 50e-6)


def test_downscale_k1_identity(small_state):
    dm = sample_demand(spec_with(), sorted(small_state.server_map), 5)
    [(dm2, st2)] = downscale_traffic(dm, small_state, 1)
    assert dm2 is dm and st2 is small_state


def test_downscale_partition_and_capacity(small_state):
    dm = sample_demand(spec_with(rate=20.0), sorted(small_state.server_map), 6)
    parts = downscale_traffic(dm, small_state, 2, seed=0)
    ids = sorted(f.id for p, _ in parts for f in p.flows)
    assert ids == sorted(f.id for f in dm.flows)  # exactly-once partition
    for _, st2 in parts:
        assert all(e.capacity == 5e9 for e in st2.edges.values())


def test_downscale_conserves_bytes(small_state):
    dm = sample_demand(spec_with(rate=20.0), sorted(small_state.server_map), 7)
    parts = downscale_traffic(dm, small_state, 4, seed=1)
    assert math.fsum(p.total_bytes() for p, _ in parts) == pytest.approx(
        dm.total_bytes(), abs=0
    )


def test_required_samples_closed_form():
    assert required_samples(0.05, 0.05) == 738
    assert required_samples(0.05, 0.0430) == 998


def test_sampling_config_validation():
    from swarm.traffic import SamplingConfig

    cfg = SamplingConfig(demand_samples=32, routing_samples=1000, interval=(50.0, 150.0))
    assert cfg.alpha == 0.05
    with pytest.raises(ConfigurationError):
        SamplingConfig(demand_samples=0, routing_samples=1, interval=(0.0, 1.0))
    with pytest.raises(ConfigurationError):
        SamplingConfig(demand_samples=1, routing_samples=1, interval=(2.0, 1.0))


@pytest.mark.parametrize("alpha,eps", [(1.5, 0.05), (0.0, 0.05), (0.05, 0.0), (0.05, -1)])
def test_required_samples_domain(alpha, eps):
    with pytest.raises(ConfigurationError):
        required_samples(alpha, eps)


def test_size_distribution_matches_cdf():
    # DKW-style check at alpha=0.01 on a 1e5-flow sample
    cdf = default_size_cdf()
    spec = TrafficSpec(
        rate_per_server_fps=25000.0, size_cdf=cdf, duration_s=1.0
    )
    dm = sample_demand(spec, SERVERS, seed=11)
    sizes = np.array([f.size for f in dm.flows])
    n = len(sizes)
    assert n > 9e4
    critical = math.sqrt(math.log(2 / 0.01) / (2 * n))
    worst = 0.0
    for x, p in cdf:
        emp = np.mean(sizes <= x)
        worst = max(worst, abs(emp - p))
    assert worst < critical
