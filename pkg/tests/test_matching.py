import math

import numpy as np
import pytest

from fbslab.dem import BOUNDARY, DecodingGraph, GraphEdge, extract_decoding_graph
from fbslab.harness import ExperimentConfig, build_circuit
from fbslab.matching import (
    W_MAX,
    BatchMatcher,
    brute_force_match,
    decode,
    edge_weight,
    matching_edges,
    precompute_paths,
)


def test_edge_weight():
    assert edge_weight(0.1) == pytest.approx(math.log(9))
    assert edge_weight(0.0) == W_MAX
    assert edge_weight(1e-300) == W_MAX
    with pytest.raises(ValueError):
        edge_weight(0.5)


def _line():
    # B - 0 - 1 - 2 - B, observable on the left boundary edge
    edges = [
        GraphEdge(0, BOUNDARY, 0.1, 1),
        GraphEdge(0, 1, 0.1, 0),
        GraphEdge(1, 2, 0.1, 0),
        GraphEdge(2, BOUNDARY, 0.1, 0),
    ]
    return DecodingGraph(3, 1, edges)


def test_line_graph_decoding():
    g = _line()
    w = math.log(9)
    res = decode(g, [0])
    assert res.pairs == [(0, BOUNDARY)]
    assert res.predicted_observable_flips == 1
    assert res.total_weight == pytest.approx(w)
    res = decode(g, [0, 2])
    assert res.pairs in ([(0, BOUNDARY), (2, BOUNDARY)], [(0, 2)])
    assert res.total_weight == pytest.approx(2 * w)
    assert decode(g, []).pairs == []
    res = decode(g, [1])
    assert res.total_weight == pytest.approx(2 * w)


def test_parallel_edges_keep_lightest():
    g = DecodingGraph(2, 1, [GraphEdge(0, 1, 0.01, 1), GraphEdge(0, 1, 0.2, 0), GraphEdge(0, BOUNDARY, 0.1, 0)])
    assert matching_edges(g)[(0, 1)] == (edge_weight(0.2), 0)


def test_disconnected_syndrome_raises():
    g = DecodingGraph(3, 1, [GraphEdge(0, 1, 0.1, 1)])
    with pytest.raises(ValueError):
        decode(g, [2])
    with pytest.raises(ValueError):
        brute_force_match(g, [0, 1, 2])


@pytest.mark.parametrize("code,d", [("bs", 3), ("fbs", 5)])
def test_exact_and_pymatching_weights_agree(code, d):
    g = extract_decoding_graph(build_circuit(ExperimentConfig(code=code, d=d, cycles=2, p_depol=1e-2)))
    paths = precompute_paths(g)
    batch = BatchMatcher(g)
    rng = np.random.default_rng(3)
    for _ in range(60):
        chosen = rng.choice(len(g.edges), size=3, replace=False)
        syn: set[int] = set()
        for i in chosen:
            e = g.edges[i]
            syn ^= {e.u}
            if e.v != BOUNDARY:
                syn ^= {e.v}
        if not syn:
            continue
        exact = decode(g, syn, paths)
        assert batch.weight(syn) == pytest.approx(exact.total_weight, rel=1e-6, abs=1e-6)
        row = np.zeros((1, g.num_detectors), dtype=np.uint8)
        row[0, sorted(syn)] = 1
        pred = batch.decode_batch(row)
        assert pred.shape == (1, g.num_observables)


def test_batch_rejects_short_syndrome():
    g = _line()
    with pytest.raises(ValueError):
        BatchMatcher(g).decode_batch(np.zeros((1, 1), dtype=np.uint8))
