import json
import math

import numpy as np
import pytest

from swarm.tablegen import (
    TableGenConfig,
    generate_loss_table,
    generate_queue_table,
    generate_rtt_count_table,
    measure_loss_limited_rate,
)
from swarm.tables import (
    UNBOUNDED,
    LossThroughputTable,
    loss_table_from_dict,
    loss_table_to_dict,
    mathis_rate,
    queue_table_from_dict,
    queue_table_to_dict,
    rtt_table_from_dict,
    rtt_table_to_dict,
)

SMALL = TableGenConfig(
    alpha=0.3,
    epsilon=0.3,
    drop_rates=(0.0, 1e-2, 6.25e-2, 1.0),
    rtts=(4e-4,),
    sizes=(10e3, 150e3),
    utilizations=(0.0, 0.5),
    flow_counts=(0, 4),
    measure_s=0.5,
)


def test_mathis_monotone_in_drop_rate():
    rates = [mathis_rate(p, 4e-4) for p in (1e-5, 1e-4, 1e-3, 1e-2, 1e-1)]
    assert all(a > b for a, b in zip(rates, rates[1:]))


def test_lossless_cell_unbounded_sentinel():
    t = generate_loss_table(SMALL)
    assert t.cells[(0, 0)] == (UNBOUNDED,)


def test_dead_cell_zero():
    t = generate_loss_table(SMALL)
    assert t.cells[(3, 0)] == (0.0,)


def test_power_of_two_acl_cell_populated():
    t = generate_loss_table(SMALL)
    i = t.drop_rates.index(6.25e-2)
    cell = t.cells[(i, 0)]
    assert len(cell) >= 2
    assert np.median(cell) == pytest.approx(mathis_rate(6.25e-2, 4e-4), rel=0.35)


def test_generation_deterministic():
    a = generate_loss_table(SMALL)
    b = generate_loss_table(SMALL)
    assert loss_table_to_dict(a) == loss_table_to_dict(b)
    assert json.dumps(loss_table_to_dict(a), sort_keys=True) == json.dumps(
        loss_table_to_dict(b), sort_keys=True
    )


def test_measured_rate_tracks_closed_form():
    vals = [measure_loss_limited_rate(1e-2, 4e-4, s, duration_s=1.0) for s in range(8)]
    assert np.mean(vals) == pytest.approx(mathis_rate(1e-2, 4e-4), rel=0.3)


def test_rtt_cells_lossless_point_mass():
    t = generate_rtt_count_table(SMALL)
    counts, cum = t.cells[(0, 0, 0)]  # 10 KB, lossless
    assert counts == (1,) and cum == (1.0,)
    counts150, _ = t.cells[(1, 0, 0)]  # 150 KB, lossless: slow-start rounds
    assert counts150 == (4,)


def test_rtt_cells_lossy_spread():
    t = generate_rtt_count_table(SMALL)
    counts, cum = t.cells[(1, 1, 0)]  # 150 KB at p=1e-2
    assert min(counts) >= 4 and len(counts) >= 2
    assert cum[-1] == pytest.approx(1.0)


def test_queue_zero_utilization_point_mass_at_zero():
    q = generate_queue_table(SMALL)
    assert all(v == 0.0 for v in q.cells[(0, 0)])
    assert all(v == 0.0 for v in q.cells[(0, 1)])


def test_queue_busy_cell_positive():
    q = generate_queue_table(SMALL)
    busy = q.cells[(1, 1)]  # utilization 0.5, 4 competing flows
    assert all(v > 0 for v in busy)


def test_loss_table_roundtrip():
    t = generate_loss_table(SMALL)
    assert loss_table_from_dict(loss_table_to_dict(t)) == t


def test_rtt_table_roundtrip():
    t = generate_rtt_count_table(SMALL)
    assert rtt_table_from_dict(rtt_table_to_dict(t)) == t


def test_queue_table_roundtrip():
    t = generate_queue_table(SMALL)
    assert queue_table_from_dict(queue_table_to_dict(t)) == t


def test_loss_lookup_nearest_log_cell():
    t = LossThroughputTable(
        drop_rates=(1e-4, 1e-2),
        rtts=(2e-4, 1e-3),
        cells={(i, j): (float(10 * i + j),) for i in range(2) for j in range(2)},
    )
    assert t.sample(3e-3, 9e-4, 0.5) == 11.0  # nearest in log-drop, nearest rtt
    assert t.sample(2e-4, 2.1e-4, 0.5) == 0.0
