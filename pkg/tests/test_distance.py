import math

from fbslab.dem import BOUNDARY, DecodingGraph, GraphEdge, extract_decoding_graph
from fbslab.distance import (
    DistanceReport,
    graphlike_distance,
    isg_and_subsystem_distance,
    min_weight_outside,
    validate_graph_witness,
)
from fbslab.harness import ExperimentConfig, build_circuit
from fbslab.lattice import CodeLayout, gauge_group, stabilizer_group
from fbslab.pauli import PauliGroupBasis, PauliString, commutes
from fbslab.schedule import FloquetSchedule, compute_isgs, place_defects


def test_graphlike_on_toy_line():
    g = DecodingGraph(
        2,
        1,
        [GraphEdge(0, BOUNDARY, 0.1, 1), GraphEdge(0, 1, 0.1, 0), GraphEdge(1, BOUNDARY, 0.1, 0)],
    )
    rep = graphlike_distance(g)
    assert rep.value == 3
    assert validate_graph_witness(g, rep.witness)
    assert not validate_graph_witness(g, rep.witness[:2])


def test_graphlike_without_logical_edges_is_infinite():
    g = DecodingGraph(1, 1, [GraphEdge(0, BOUNDARY, 0.1, 0)])
    assert math.isinf(graphlike_distance(g).value)


def test_record_format():
    rep = DistanceReport(3, PauliString.parse("+XXX"), "isg")
    assert rep.record() == "method=isg value=3 exact witness=+XXX"


def test_static_bacon_shor_distance_by_min_weight():
    layout = CodeLayout.square(3)
    S, G = stabilizer_group(layout), gauge_group(layout)
    w, op, exact = min_weight_outside(S, G, layout.n)
    assert (w, exact) == (3, True)
    assert all(commutes(op, g) for g in S.generators)


def test_non_css_fallback_matches_css_search():
    # YY checks force the exhaustive 4^n search; a single Y commutes with both
    n = 3
    S = PauliGroupBasis.from_operators(n, [PauliString.parse("+YYI"), PauliString.parse("+IYY")])
    w, op, exact = min_weight_outside(S, S, n)
    assert (w, exact) == (1, True)
    assert op.x_mask == op.z_mask
    assert all(commutes(op, g) for g in S.generators) and not S.contains(op)


def test_bacon_shor_isg_and_subsystem():
    layout = CodeLayout.square(3)
    rounds = FloquetSchedule.bacon_shor(3).rounds
    isgs = []
    # after each round the measured group is the round's checks plus the stabilizers
    for rs in rounds:
        isgs.append(PauliGroupBasis.from_operators(layout.n, rs.checks).extended(stabilizer_group(layout).generators))
    reps = isg_and_subsystem_distance(isgs)
    assert reps["isg"].value == 3
    assert reps["subsystem"].value == 3


def test_distance_ordering_for_floquet_code():
    layout = CodeLayout.square(5)
    isgs = [i.measured for i in compute_isgs(layout, place_defects(5))]
    reps = isg_and_subsystem_distance(isgs)
    graph = graphlike_distance(
        extract_decoding_graph(build_circuit(ExperimentConfig(code="fbs", d=5, cycles=3)))
    ).value
    assert reps["isg"].value >= reps["subsystem"].value >= graph
    assert graph == 4
    assert reps["subsystem"].value == 4
