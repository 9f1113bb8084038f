import json

import numpy as np
import pytest

from muxim.network import IC, LT, GeneratorConfig, generate_synthetic
from muxim.propagation import (GuardError, estimate_spread,
                               exact_activation_probabilities, exact_spread,
                               per_layer_spread, record_status_dataset,
                               simulate_once)

from conftest import (random_guarded_instance, single_layer_net,
                      two_layer_net)


def chain_two_layer():
    # layer 0: a->b (p=1), layer 1: b->c (p=1); b bridges the layers
    return two_layer_net([(0, 1)], [(1, 2)], 3, probs0=[1.0], probs1=[1.0])


def test_empty_seed_set_activates_nothing():
    trace = simulate_once(chain_two_layer(), [], rng_seed=0)
    assert trace.activated == set()


def test_overlapping_activation_bridges_layers():
    trace = simulate_once(chain_two_layer(), [0], rng_seed=0)
    assert trace.activated == {0, 1, 2}
    assert trace.per_layer_activated[0] == {0, 1}
    assert trace.per_layer_activated[1] == {1, 2}
    assert trace.activation_round == {0: 0, 1: 1, 2: 2}


def test_lt_needs_both_neighbors():
    net = single_layer_net([(0, 2), (1, 2)], 3, model=LT,
                           weights=[0.5, 0.5], thresholds=[1.0, 1.0, 0.6])
    assert simulate_once(net, [0], rng_seed=0).activated == {0}
    assert simulate_once(net, [0, 1], rng_seed=0).activated == {0, 1, 2}


def test_seed_out_of_range_rejected():
    with pytest.raises(ValueError, match="seed id"):
        simulate_once(chain_two_layer(), [99], rng_seed=0)


def test_deterministic_network_has_zero_stderr():
    est = estimate_spread(chain_two_layer(), [0], m=40, master_seed=5)
    assert est.mean == 3.0
    assert est.stderr == 0.0


def test_monte_carlo_matches_closed_form_single_edge():
    net = single_layer_net([(0, 1)], 2, probs=[0.5])
    assert exact_spread(net, [0]) == 1.5
    est = estimate_spread(net, [0], m=100000, master_seed=11)
    assert abs(est.mean - 1.5) <= 3 * est.stderr


def test_default_simulation_count_is_100():
    import inspect
    sig = inspect.signature(estimate_spread)
    assert sig.parameters["m"].default == 100


def test_estimate_is_deterministic():
    net = random_guarded_instance(np.random.default_rng(3), num_layers=2)
    a = estimate_spread(net, [0, 1], m=200, master_seed=42)
    b = estimate_spread(net, [0, 1], m=200, master_seed=42)
    assert a.mean == b.mean and a.stderr == b.stderr


def test_per_layer_spread_single_layer_equals_total():
    net = single_layer_net([(0, 1), (1, 2)], 3, probs=[1.0, 1.0])
    trace = simulate_once(net, [0], rng_seed=0)
    assert per_layer_spread(trace, 0) == len(trace.activated) == 3


def test_per_layer_spread_counts_copies():
    trace = simulate_once(chain_two_layer(), [0], rng_seed=0)
    # node 1 is activated inside layer 0 and copied into layer 1
    assert 1 in trace.per_layer_activated[1]
    assert per_layer_spread(trace, 1) == 2.0


def test_per_layer_sum_dominates_total_with_overlap():
    trace = simulate_once(chain_two_layer(), [0], rng_seed=0)
    total = len(trace.activated)
    assert sum(per_layer_spread(trace, i) for i in range(2)) >= total
    est = estimate_spread(chain_two_layer(), [0], m=20, master_seed=0)
    assert per_layer_spread(est, 0) == est.per_layer_mean[0]
    assert est.per_layer_mean.sum() >= est.mean


def test_per_layer_spread_range_checks():
    trace = simulate_once(chain_two_layer(), [0], rng_seed=0)
    with pytest.raises(ValueError):
        per_layer_spread(trace, 5)
    with pytest.raises(TypeError):
        per_layer_spread([1, 2, 3], 0)


def test_exact_spread_chain_enumeration():
    net = single_layer_net([(0, 1), (1, 2)], 3, probs=[0.5, 0.5])
    assert exact_spread(net, [0]) == pytest.approx(1.75, abs=1e-12)


def test_exact_spread_lt_only_is_deterministic_simulation():
    net = single_layer_net([(0, 1)], 3, model=LT, weights=[1.0],
                           thresholds=[1.0, 0.8, 1.0])
    trace = simulate_once(net, [0], rng_seed=0)
    assert exact_spread(net, [0]) == float(len(trace.activated))


def test_exact_guard_rejects_large_instances():
    rng = np.random.default_rng(0)
    net = random_guarded_instance(rng, max_nodes=10, max_ic_edges=12)
    big = generate_synthetic(GeneratorConfig([10, 10], 40, 0.2, [IC, IC], rng_seed=0))
    with pytest.raises(GuardError, match="IC edges"):
        exact_spread(big, [0])
    # LT without fixed thresholds is not enumerable either
    lt = single_layer_net([(0, 1)], 2, model=LT, weights=[1.0], thresholds=None)
    with pytest.raises(GuardError, match="thresholds"):
        exact_spread(lt, [0])
    assert exact_spread(net, [0]) >= 1.0


def test_monte_carlo_tracks_exact_oracle(rng):
    for trial in range(5):
        net = random_guarded_instance(rng, max_nodes=8, max_ic_edges=10,
                                      num_layers=2)
        seeds = [0, 1]
        exact = exact_spread(net, seeds)
        est = estimate_spread(net, seeds, m=30000, master_seed=trial)
        assert abs(est.mean - exact) <= 3 * max(est.stderr, 1e-9)


def test_exact_monotone_in_seeds(rng):
    for _ in range(5):
        net = random_guarded_instance(rng, max_nodes=8, max_ic_edges=10)
        base = exact_spread(net, [0])
        for v in range(1, net.num_nodes):
            assert exact_spread(net, [0, v]) >= base - 1e-12


def test_exact_submodular_spot_check(rng):
    for _ in range(5):
        net = random_guarded_instance(rng, max_nodes=8, max_ic_edges=10)
        nodes = list(range(net.num_nodes))
        a = set(rng.choice(nodes, size=2, replace=False).tolist())
        b = set(rng.choice(nodes, size=2, replace=False).tolist())
        sa, sb = exact_spread(net, a), exact_spread(net, b)
        su = exact_spread(net, a | b)
        si = exact_spread(net, a & b)
        assert sa + sb >= su + si - 1e-9


def test_overlap_closure_invariant(rng):
    net = generate_synthetic(GeneratorConfig([10, 14], 60, 0.5, [IC, IC], rng_seed=1))
    for seed in range(5):
        trace = simulate_once(net, [0, 3], rng_seed=seed)
        for v in trace.activated:
            for i in range(net.num_layers):
                if net.member[i][v]:
                    assert v in trace.per_layer_activated[i]


def test_trace_json_export():
    trace = simulate_once(chain_two_layer(), [0], rng_seed=0)
    doc = json.loads(trace.to_json())
    assert doc["activated"] == [0, 1, 2]
    assert doc["per_layer_activated"] == [[0, 1], [1, 2]]
    assert doc["activation_round"]["2"] == 2


def test_status_dataset_columns():
    net = chain_two_layer()
    data = record_status_dataset(net, [0], {0, 1}, m=25, master_seed=0)
    assert data.rows.shape == (25, 3)
    # deterministic chain: every node always active
    assert data.rows.all()
    # restricting to layer 0 leaves node 2 unreached
    data0 = record_status_dataset(net, [0], {0}, m=25, master_seed=0)
    assert data0.rows[:, 2].sum() == 0
    assert data0.rows[:, 1].all()


def test_status_dataset_validation():
    net = chain_two_layer()
    with pytest.raises(ValueError, match="layers_so_far"):
        record_status_dataset(net, [0], set(), m=10, master_seed=0)
    with pytest.raises(ValueError, match="at least 2"):
        record_status_dataset(net, [0], {0}, m=1, master_seed=0)


def test_status_dataset_matches_exact_marginals(rng):
    net = random_guarded_instance(rng, max_nodes=7, max_ic_edges=9)
    probs = exact_activation_probabilities(net, [0])
    data = record_status_dataset(net, [0], {0}, m=60000, master_seed=1)
    freq = data.rows.mean(axis=0)
    assert np.abs(freq - probs).max() < 0.02


def test_status_dataset_csv_export(tmp_path):
    net = chain_two_layer()
    data = record_status_dataset(net, [0], {0}, m=5, master_seed=0)
    path = tmp_path / "status.csv"
    data.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "node_0,node_1,node_2"
    assert len(lines) == 6
