"""Shared builders for small, guarded test instances."""

import numpy as np
import pytest

from muxim.network import IC, LT, Layer, MultiplexNetwork


def make_layer(layer_id, model, edges, num_nodes, probs=None, weights=None,
               thresholds=None):
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    edges = edges[order]
    if model == IC:
        probs = np.ones(len(edges)) if probs is None else np.asarray(probs, float)[order]
        return Layer(layer_id, IC, edges, probs=probs)
    weights = np.ones(len(edges)) if weights is None else np.asarray(weights, float)[order]
    thr = None if thresholds is None else np.asarray(thresholds, float)
    return Layer(layer_id, LT, edges, weights=weights, thresholds=thr)


def single_layer_net(edges, num_nodes, model=IC, probs=None, weights=None,
                     thresholds=None):
    layer = make_layer(0, model, edges, num_nodes, probs, weights, thresholds)
    member = np.ones((1, num_nodes), dtype=bool)
    return MultiplexNetwork(num_nodes, [layer], member)


def two_layer_net(edges0, edges1, num_nodes, members0=None, members1=None,
                  probs0=None, probs1=None):
    l0 = make_layer(0, IC, edges0, num_nodes, probs=probs0)
    l1 = make_layer(1, IC, edges1, num_nodes, probs=probs1)
    member = np.zeros((2, num_nodes), dtype=bool)
    if members0 is None:
        members0 = sorted({v for e in edges0 for v in e})
    if members1 is None:
        members1 = sorted({v for e in edges1 for v in e})
    member[0, list(members0)] = True
    member[1, list(members1)] = True
    return MultiplexNetwork(num_nodes, [l0, l1], member)


def random_guarded_instance(rng, max_nodes=10, max_ic_edges=12, num_layers=1,
                            p_range=(0.2, 0.9)):
    """Random small multiplex within the exact-enumeration guards."""
    n = int(rng.integers(4, max_nodes + 1))
    layers, member = [], np.zeros((num_layers, n), dtype=bool)
    budget = int(rng.integers(num_layers, max_ic_edges + 1))
    split = sorted(rng.choice(budget + 1, size=num_layers - 1).tolist()) \
        if num_layers > 1 else []
    counts = np.diff([0] + split + [budget]).astype(int)
    for i in range(num_layers):
        e = int(counts[i])
        pairs = rng.choice(n * (n - 1), size=min(e, n * (n - 1)), replace=False)
        a, b = np.divmod(pairs, n - 1)
        b = b + (b >= a)
        edges = np.column_stack([a, b])
        lo, hi = p_range
        probs = lo + (hi - lo) * rng.random(len(edges))
        layers.append(make_layer(i, IC, edges, n, probs=probs))
        member[i] = True  # all identities member of every layer
    return MultiplexNetwork(n, layers, member)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
