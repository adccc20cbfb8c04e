"""Minimum-weight perfect matching over a DecodingGraph."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import networkx as nx
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .dem import BOUNDARY, DecodingGraph

W_MAX = 46.0


def edge_weight(p: float) -> float:
    if p >= 0.5:
        raise ValueError(f"edge probability {p} >= 0.5 cannot be matched")
    if p <= 0:
        return W_MAX
    return min(math.log((1 - p) / p), W_MAX)


def matching_edges(graph: DecodingGraph) -> dict[tuple[int, int], tuple[float, int]]:
    """One edge per node pair: the lightest, ties broken by smallest observable mask."""
    best: dict[tuple[int, int], tuple[float, int]] = {}
    for e in graph.edges:
        u, v = graph.node(e.u), graph.node(e.v)
        key = (min(u, v), max(u, v))
        cand = (edge_weight(e.probability), e.obs_mask)
        if key not in best or cand < best[key]:
            best[key] = cand
    return best


@dataclass
class PathTable:
    """All-pairs shortest paths with the observable parity along each path."""

    distance: np.ndarray  # (N+1) x (N+1), last index is the boundary
    obs: np.ndarray  # same shape, int64 observable masks
    num_detectors: int

    @property
    def boundary(self) -> int:
        return self.num_detectors


def precompute_paths(graph: DecodingGraph) -> PathTable:
    n = graph.num_detectors + 1
    edges = matching_edges(graph)
    rows, cols, weights = [], [], []
    mask_of: dict[tuple[int, int], int] = {}
    for (u, v), (w, mask) in edges.items():
        rows += [u, v]
        cols += [v, u]
        # scipy drops explicit zeros; keep zero-weight edges reachable
        weights += [max(w, 1e-300)] * 2
        mask_of[(u, v)] = mask_of[(v, u)] = mask
    adj = coo_matrix((weights, (rows, cols)), shape=(n, n)).tocsr()
    dist, pred = dijkstra(adj, directed=False, return_predecessors=True)
    obs = np.zeros((n, n), dtype=np.int64)
    order = np.argsort(dist, axis=1, kind="stable")
    for s in range(n):
        row_obs = obs[s]
        row_pred = pred[s]
        for v in order[s]:
            p = row_pred[v]
            if p >= 0:
                row_obs[v] = row_obs[p] ^ mask_of[(int(p), int(v))]
    return PathTable(dist, obs, graph.num_detectors)


@dataclass
class MatchingResult:
    pairs: list[tuple[int, int]]
    total_weight: float
    predicted_observable_flips: int


def _canonical_pairs(pairs: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    out = []
    for a, b in pairs:
        if b == BOUNDARY or (a != BOUNDARY and a <= b):
            out.append((a, b))
        else:
            out.append((b, a))
    return sorted(out, key=lambda p: (p[0], p[1] == BOUNDARY, p[1]))


def decode(graph: DecodingGraph, syndrome: Iterable[int], paths: PathTable | None = None) -> MatchingResult:
    """Exact MWPM on the complete syndrome graph with one boundary copy per defect."""
    paths = paths or precompute_paths(graph)
    flipped = sorted(set(syndrome))
    if not flipped:
        return MatchingResult([], 0.0, 0)
    B = paths.boundary
    dist = paths.distance
    g = nx.Graph()
    finite = [(dist[a, B]) for a in flipped if np.isfinite(dist[a, B])]
    big = 1.0 + 2 * sum(finite) + sum(
        dist[a, b] for i, a in enumerate(flipped) for b in flipped[i + 1 :] if np.isfinite(dist[a, b])
    )
    for i, a in enumerate(flipped):
        for b in flipped[i + 1 :]:
            if np.isfinite(dist[a, b]):
                g.add_edge(("d", a), ("d", b), weight=big - dist[a, b])
            g.add_edge(("b", a), ("b", b), weight=big)
        if np.isfinite(dist[a, B]):
            g.add_edge(("d", a), ("b", a), weight=big - dist[a, B])
    matching = nx.max_weight_matching(g, maxcardinality=True)
    pairs, total, flips = [], 0.0, 0
    matched = set()
    for x, y in matching:
        if x[0] == "b" and y[0] == "b":
            continue
        if x[0] == "b":
            x, y = y, x
        a = x[1]
        b = BOUNDARY if y[0] == "b" else y[1]
        matched.add(a)
        if b != BOUNDARY:
            matched.add(b)
        node_b = B if b == BOUNDARY else b
        total += float(dist[a, node_b])
        flips ^= int(paths.obs[a, node_b])
        pairs.append((a, b))
    if matched != set(flipped):
        raise ValueError("syndrome has no perfect matching (disconnected defect)")
    return MatchingResult(_canonical_pairs(pairs), total, flips)


def brute_force_match(
    graph: DecodingGraph, syndrome: Iterable[int], paths: PathTable | None = None
) -> MatchingResult:
    """Exhaustive search over all pairings; each defect may also go to the boundary."""
    flipped = sorted(set(syndrome))
    if len(flipped) > 10:
        raise ValueError("brute_force_match handles at most 10 defects")
    paths = paths or precompute_paths(graph)
    B = paths.boundary
    dist = paths.distance
    best = [math.inf, None]

    def rec(rest: list[int], acc: float, chosen: list[tuple[int, int]]):
        if acc >= best[0]:
            return
        if not rest:
            best[0], best[1] = acc, list(chosen)
            return
        a, tail = rest[0], rest[1:]
        if np.isfinite(dist[a, B]):
            chosen.append((a, BOUNDARY))
            rec(tail, acc + dist[a, B], chosen)
            chosen.pop()
        for i, b in enumerate(tail):
            if np.isfinite(dist[a, b]):
                chosen.append((a, b))
                rec(tail[:i] + tail[i + 1 :], acc + dist[a, b], chosen)
                chosen.pop()

    rec(flipped, 0.0, [])
    if best[1] is None:
        raise ValueError("syndrome has no perfect matching")
    flips = 0
    for a, b in best[1]:
        flips ^= int(paths.obs[a, B if b == BOUNDARY else b])
    return MatchingResult(_canonical_pairs(best[1]), float(best[0]), flips)


class BatchMatcher:
    """Fast batch decoding backed by PyMatching's sparse blossom."""

    def __init__(self, graph: DecodingGraph):
        import pymatching

        self.graph = graph
        m = pymatching.Matching()
        for (u, v), (w, mask) in sorted(matching_edges(graph).items()):
            faults = {j for j in range(graph.num_observables) if (mask >> j) & 1}
            if v == graph.boundary:
                m.add_boundary_edge(u, fault_ids=faults, weight=w)
            else:
                m.add_edge(u, v, fault_ids=faults, weight=w)
        self.matching = m
        self.width = m.num_detectors

    def decode_batch(self, syndromes: np.ndarray) -> np.ndarray:
        """Predicted observable flips, shape (shots, num_observables)."""
        syn = np.asarray(syndromes, dtype=np.uint8)
        if syn.shape[1] > self.width:
            if syn[:, self.width :].any():
                raise ValueError("syndrome flips a detector with no incident edge")
            syn = syn[:, : self.width]
        elif syn.shape[1] < self.width:
            raise ValueError("syndrome shorter than the graph")
        pred = self.matching.decode_batch(syn)
        out = np.zeros((syn.shape[0], self.graph.num_observables), dtype=np.uint8)
        k = min(pred.shape[1], out.shape[1]) if pred.ndim == 2 else 0
        if k:
            out[:, :k] = pred[:, :k]
        return out

    def weight(self, syndrome: Iterable[int]) -> float:
        syn = np.zeros(self.width, dtype=np.uint8)
        syn[list(syndrome)] = 1
        _, w = self.matching.decode(syn, return_weight=True)
        return float(w)
