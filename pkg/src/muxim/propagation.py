"""Cascade simulation on multiplex networks.

The engine runs synchronous rounds: within a round each layer propagates
independently (IC edges fire once from newly active sources, LT nodes
activate when their active in-weight reaches the threshold), and between
rounds newly activated identities are copied to every layer they belong to.
All randomness is pre-sampled per simulation from a counter-based Philox
stream keyed by the master seed, so results are reproducible regardless of
execution order and many simulations can run as one batched matrix
computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .network import IC, LT, LT_THRESHOLD_RANGE, MultiplexNetwork

EXACT_IC_EDGE_GUARD = 16


class GuardError(RuntimeError):
    """An exact-enumeration guard was exceeded; fall back to Monte Carlo."""


@dataclass
class CascadeTrace:
    """Outcome of one simulation at identity level plus per-layer views."""

    activated: set[int]
    per_layer_activated: list[set[int]]
    activation_round: dict[int, int]

    def to_json(self) -> str:
        import json
        return json.dumps({
            "activated": sorted(self.activated),
            "per_layer_activated": [sorted(s) for s in self.per_layer_activated],
            "activation_round": {str(v): r for v, r
                                 in sorted(self.activation_round.items())},
        }, sort_keys=True)


@dataclass
class SpreadEstimate:
    """Monte Carlo spread: mean activated identities over num_sims runs."""

    mean: float
    stderr: float
    num_sims: int
    per_layer_mean: np.ndarray | None = None


@dataclass
class StatusDataset:
    """Binary activation matrix: one row per simulation, one column per node."""

    rows: np.ndarray
    seed_context: tuple[int, ...]
    layer_context: frozenset[int]

    @property
    def num_sims(self) -> int:
        return int(self.rows.shape[0])

    def to_csv(self, path) -> None:
        n = self.rows.shape[1]
        header = ",".join(f"node_{i}" for i in range(n))
        np.savetxt(path, self.rows, fmt="%d", delimiter=",", header=header, comments="")


class _LayerPrep:
    """Per-layer arrays laid out for batched rounds (edges grouped by target)."""

    def __init__(self, layer, num_nodes):
        self.model = layer.model
        e = layer.edges
        self.has_edges = bool(e.size)
        if not self.has_edges:
            return
        vals = layer.probs if layer.model == IC else layer.weights
        order = np.lexsort((e[:, 0], e[:, 1]))  # group by dst, then src
        self.src = e[order, 0]
        self.dst = e[order, 1]
        self.vals = vals[order]
        self.dst_unique, self.dst_starts = np.unique(self.dst, return_index=True)
        # column order used when pre-sampling coins: canonical (src, dst)
        self.sample_to_dst_order = order


class CascadeWorlds:
    """A frozen batch of Monte Carlo worlds sharing one network.

    World w pre-samples every IC edge coin and, for LT layers without fixed
    thresholds, a per-node threshold.  Spread evaluations against the same
    CascadeWorlds therefore share randomness: the estimated spread is a
    deterministic, monotone set function of the seeds, which keeps greedy
    routines stable and makes paired comparisons exact.
    """

    def __init__(self, net: MultiplexNetwork, num_worlds: int, master_seed: int,
                 record_rounds: bool = False):
        self.net = net
        self.m = int(num_worlds)
        self.master_seed = int(master_seed)
        self.record_rounds = record_rounds
        self.weights = None  # uniform; exact enumerations set world probabilities
        n = net.num_nodes
        self._prep = [_LayerPrep(layer, n) for layer in net.layers]
        rng = np.random.Generator(np.random.Philox(key=self.master_seed % (2 ** 64)))
        self._live: dict[int, np.ndarray] = {}
        self._theta: dict[int, np.ndarray] = {}
        for i, layer in enumerate(net.layers):
            prep = self._prep[i]
            if layer.model == IC:
                if prep.has_edges:
                    coins = rng.random((self.m, layer.num_edges))
                    live = coins < layer.probs[None, :]
                    self._live[i] = live[:, prep.sample_to_dst_order]
            else:
                if layer.thresholds is not None:
                    self._theta[i] = layer.thresholds[None, :]
                else:
                    lo, hi = LT_THRESHOLD_RANGE
                    self._theta[i] = lo + (hi - lo) * rng.random((self.m, n))

    @classmethod
    def from_live_matrix(cls, net, live_by_layer, num_worlds, weights=None):
        """Internal constructor for exact enumeration over explicit worlds."""
        obj = cls.__new__(cls)
        obj.net = net
        obj.m = num_worlds
        obj.master_seed = -1
        obj.record_rounds = False
        obj.weights = weights
        obj._prep = [_LayerPrep(layer, net.num_nodes) for layer in net.layers]
        obj._live = {}
        obj._theta = {}
        for i, layer in enumerate(net.layers):
            prep = obj._prep[i]
            if layer.model == IC and prep.has_edges and i in live_by_layer:
                obj._live[i] = live_by_layer[i][:, prep.sample_to_dst_order]
            elif layer.model == LT and layer.thresholds is not None:
                obj._theta[i] = layer.thresholds[None, :]
        return obj

    # -- core closure ------------------------------------------------------

    def _scope(self, layers):
        if layers is None:
            return list(range(self.net.num_layers))
        idx = sorted(set(int(i) for i in layers))
        for i in idx:
            if not (0 <= i < self.net.num_layers):
                raise ValueError(f"layer {i} out of range")
        return idx

    def blank_state(self, layers=None):
        n = self.net.num_nodes
        active = np.zeros((self.m, n), dtype=bool)
        acc = {i: np.zeros((self.m, n)) for i in self._scope(layers)
               if self.net.layers[i].model == LT}
        return active, acc

    def run(self, seeds, layers=None, active=None, acc=None, frontier=None,
            rows=None):
        """Propagate to a fixpoint; returns (active, acc, rounds|None).

        `active`/`acc` give a pre-existing closed state to extend (they are
        modified in place); `seeds` are activated on top of it.  `rows`
        restricts the batch to a subset of worlds: the state arrays then
        have rows.size rows and the pre-sampled randomness is sliced to
        match.
        """
        scope = self._scope(layers)
        n = self.net.num_nodes
        nrows = self.m if rows is None else len(rows)
        if active is None:
            active = np.zeros((nrows, n), dtype=bool)
            acc = {i: np.zeros((nrows, n)) for i in scope
                   if self.net.layers[i].model == LT}
        if frontier is None:
            frontier = np.zeros((nrows, n), dtype=bool)
            seeds = list(seeds)
            if seeds:
                if min(seeds) < 0 or max(seeds) >= n:
                    raise ValueError("seed id outside the node universe")
                frontier[:, seeds] = True
            frontier &= ~active
            active |= frontier
        rounds = None
        if self.record_rounds:
            rounds = np.full((nrows, n), -1, dtype=np.int64)
            rounds[frontier] = 0
        r = 0
        member = self.net.member
        live = self._live
        theta = self._theta
        if rows is not None:
            live = {i: self._live[i][rows] for i in scope if i in self._live}
            theta = {i: (self._theta[i][rows] if self._theta[i].shape[0] == self.m
                         else self._theta[i])
                     for i in scope if i in self._theta}
        first_round = True
        while frontier.any():
            r += 1
            hits = np.zeros((nrows, n), dtype=bool)
            for i in scope:
                prep = self._prep[i]
                f_layer = frontier & member[i]
                # touch only the columns of edges leaving the frontier
                cols = None
                if prep.has_edges and f_layer.any():
                    cols = np.flatnonzero(f_layer.any(axis=0)[prep.src])
                if prep.model == LT:
                    contributed = False
                    if cols is not None and cols.size:
                        fsrc = f_layer[:, prep.src[cols]]
                        contrib = fsrc * prep.vals[cols][None, :]
                        dsts = prep.dst[cols]  # stays dst-sorted
                        starts = np.flatnonzero(
                            np.concatenate(([True], dsts[1:] != dsts[:-1])))
                        acc[i][:, dsts[starts]] += np.add.reduceat(contrib, starts, axis=1)
                        contributed = True
                    # the accumulator only moves on contributions, so the
                    # threshold test can be skipped otherwise (state starts
                    # from a fixpoint); the first round still sweeps to catch
                    # thresholds satisfied with no input at all
                    if contributed or first_round:
                        reached = (acc[i] >= theta[i] - 1e-12) & member[i][None, :]
                        hits |= reached
                elif cols is not None and cols.size:
                    fsrc = f_layer[:, prep.src[cols]]
                    fired = fsrc & live[i][:, cols]
                    dsts = prep.dst[cols]
                    starts = np.flatnonzero(
                        np.concatenate(([True], dsts[1:] != dsts[:-1])))
                    grouped = np.bitwise_or.reduceat(fired, starts, axis=1)
                    hits[:, dsts[starts]] |= grouped
            first_round = False
            frontier = hits & ~active
            active |= frontier
            if rounds is not None and frontier.any():
                rounds[frontier] = r
        return active, acc, rounds

    # -- measurements ------------------------------------------------------

    def activated_matrix(self, seeds, layers=None):
        active, _, _ = self.run(seeds, layers=layers)
        return active

    def spread(self, seeds, layers=None, per_layer=True) -> SpreadEstimate:
        active = self.activated_matrix(seeds, layers=layers)
        counts = active.sum(axis=1).astype(float)
        if self.weights is not None:  # exact enumeration: no sampling error
            mean = float(counts @ self.weights)
            stderr = 0.0
        else:
            mean = float(counts.mean())
            stderr = float(counts.std(ddof=1) / math.sqrt(self.m)) if self.m > 1 else 0.0
        plm = None
        if per_layer:
            reduce = (lambda c: float(c @ self.weights)) if self.weights is not None \
                else (lambda c: float(c.mean()))
            plm = np.array([
                reduce((active & self.net.member[i][None, :]).sum(axis=1).astype(float))
                for i in range(self.net.num_layers)])
        return SpreadEstimate(mean, stderr, self.m, plm)

    def baseline(self, seeds, layers=None):
        """Closed state for `seeds`, reusable for incremental marginal evals."""
        active, acc, _ = self.run(seeds, layers=layers)
        return _Baseline(self, layers, active, acc)


class _Baseline:
    """Closure of a seed set inside one CascadeWorlds, extensible node by node."""

    def __init__(self, worlds, layers, active, acc):
        self.worlds = worlds
        self.layers = layers
        self.active = active
        self.acc = acc
        self.counts = active.sum(axis=1).astype(float)

    def mean_count(self) -> float:
        if self.worlds.weights is not None:
            return float(self.counts @ self.worlds.weights)
        return float(self.counts.mean())

    def extend_rows(self, v: int):
        """Re-close only the worlds where v is new; baseline untouched.

        Returns (rows, active_sub, acc_sub): the affected world indices plus
        their extended state; rows is empty when v is active everywhere.
        """
        rows = np.flatnonzero(~self.active[:, v])
        if rows.size == 0:
            return rows, None, None
        active = self.active[rows].copy()
        acc = {i: a[rows].copy() for i, a in self.acc.items()}
        frontier = np.zeros_like(active)
        frontier[:, v] = True
        active |= frontier
        active, acc, _ = self.worlds.run(None, layers=self.layers, active=active,
                                         acc=acc, frontier=frontier, rows=rows)
        return rows, active, acc

    def extend_matrix(self, v: int):
        """Full activation matrix after adding node v (baseline untouched)."""
        rows, sub, _ = self.extend_rows(v)
        if rows.size == 0:
            return self.active.copy()
        new = self.active.copy()
        new[rows] = sub
        return new

    def gain(self, v: int) -> float:
        rows, sub, _ = self.extend_rows(v)
        if rows.size == 0:
            return 0.0
        delta = sub.sum(axis=1) - self.counts[rows]
        if self.worlds.weights is not None:
            return float(delta @ self.worlds.weights[rows])
        return float(delta.sum() / self.worlds.m)

    def accept(self, v: int) -> None:
        rows, sub, acc_sub = self.extend_rows(v)
        if rows.size:
            self.active[rows] = sub
            for i in self.acc:
                self.acc[i][rows] = acc_sub[i]
            self.counts = self.active.sum(axis=1).astype(float)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def simulate_once(net: MultiplexNetwork, seeds, rng_seed: int = 0,
                  layers=None) -> CascadeTrace:
    """One cascade; deterministic for a given rng_seed."""
    worlds = CascadeWorlds(net, 1, rng_seed, record_rounds=True)
    active, _, rounds = worlds.run(seeds, layers=layers)
    row = active[0]
    activated = set(np.flatnonzero(row).tolist())
    per_layer = [set(np.flatnonzero(row & net.member[i]).tolist())
                 for i in range(net.num_layers)]
    act_round = {int(v): int(rounds[0, v]) for v in np.flatnonzero(row)}
    return CascadeTrace(activated, per_layer, act_round)


def estimate_spread(net: MultiplexNetwork, seeds, m: int = 100,
                    master_seed: int = 0, layers=None) -> SpreadEstimate:
    """Monte Carlo estimate of the expected number of activated identities.

    Duplicate activations across layers count once; stderr is the sample
    standard deviation over the m simulations divided by sqrt(m).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    worlds = CascadeWorlds(net, m, master_seed)
    return worlds.spread(seeds, layers=layers)


def per_layer_spread(obj, layer: int) -> float:
    """Activated-identity count attributable to one layer (copies included)."""
    if isinstance(obj, CascadeTrace):
        if not (0 <= layer < len(obj.per_layer_activated)):
            raise ValueError(f"layer {layer} out of range")
        return float(len(obj.per_layer_activated[layer]))
    if isinstance(obj, SpreadEstimate):
        if obj.per_layer_mean is None or not (0 <= layer < len(obj.per_layer_mean)):
            raise ValueError("estimate carries no per-layer means for that layer")
        return float(obj.per_layer_mean[layer])
    raise TypeError("expected a CascadeTrace or SpreadEstimate")


def _ic_edge_arrays(net, scope):
    edges_p = []
    for i in scope:
        layer = net.layers[i]
        if layer.model == IC and layer.num_edges:
            for j in range(layer.num_edges):
                edges_p.append((i, j, layer.probs[j]))
    return edges_p


def _exact_worlds(net, layers=None):
    scope = sorted(set(int(i) for i in layers)) if layers is not None \
        else list(range(net.num_layers))
    ic_edges = _ic_edge_arrays(net, scope)
    ne = len(ic_edges)
    if ne > EXACT_IC_EDGE_GUARD:
        raise GuardError(
            f"{ne} IC edges exceed the exact-enumeration guard of "
            f"{EXACT_IC_EDGE_GUARD}; use estimate_spread instead")
    for i in scope:
        layer = net.layers[i]
        if layer.model == LT and layer.thresholds is None:
            raise GuardError("exact evaluation needs fixed LT thresholds")

    m = 1 << ne
    masks = np.arange(m, dtype=np.uint64)
    live_bits = np.zeros((m, ne), dtype=bool)
    probs = np.ones(m)
    for b, (_, _, p) in enumerate(ic_edges):
        bit = ((masks >> np.uint64(b)) & np.uint64(1)).astype(bool)
        live_bits[:, b] = bit
        probs *= np.where(bit, p, 1.0 - p)

    live_by_layer = {}
    for i in scope:
        layer = net.layers[i]
        if layer.model == IC and layer.num_edges:
            cols = [b for b, (li, _, _) in enumerate(ic_edges) if li == i]
            live_by_layer[i] = live_bits[:, cols]
    worlds = CascadeWorlds.from_live_matrix(net, live_by_layer, m, weights=probs)
    return worlds, probs, scope


def exact_worlds(net: MultiplexNetwork, layers=None) -> CascadeWorlds:
    """Probability-weighted enumeration of all IC live-edge worlds (guarded).

    Spread queries against the returned CascadeWorlds are exact, so it can
    drive greedy selection or exhaustive search without re-enumerating.
    """
    worlds, _, _ = _exact_worlds(net, layers)
    return worlds


def exact_spread(net: MultiplexNetwork, seeds, layers=None) -> float:
    """Exact expected spread by enumerating every IC live-edge world.

    Guarded: at most EXACT_IC_EDGE_GUARD in-scope IC edges, and LT layers
    must carry fixed thresholds (their dynamics are then deterministic).
    """
    worlds, probs, scope = _exact_worlds(net, layers)
    active = worlds.activated_matrix(seeds, layers=scope)
    counts = active.sum(axis=1)
    return float(np.dot(probs, counts))


def exact_activation_probabilities(net: MultiplexNetwork, seeds,
                                   layers=None) -> np.ndarray:
    """Per-node activation probability under the same exact enumeration."""
    worlds, probs, scope = _exact_worlds(net, layers)
    active = worlds.activated_matrix(seeds, layers=scope)
    return probs @ active


def record_status_dataset(net: MultiplexNetwork, seeds, layers_so_far,
                          m: int = 100, master_seed: int = 0) -> StatusDataset:
    """Simulate m cascades restricted to the given layers and log final states.

    Each row is the full-network activation indicator of one simulation:
    propagation runs only inside `layers_so_far`, but activations are
    identity-level, so member copies in every other layer are implied.
    """
    layers_so_far = frozenset(int(i) for i in layers_so_far)
    if not layers_so_far:
        raise ValueError("layers_so_far must not be empty")
    if m < 2:
        raise ValueError("need at least 2 simulations for downstream statistics")
    worlds = CascadeWorlds(net, m, master_seed)
    active = worlds.activated_matrix(seeds, layers=layers_so_far)
    return StatusDataset(active.astype(np.uint8), tuple(sorted(seeds)), layers_so_far)
