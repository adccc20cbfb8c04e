"""Acceptance criteria 1-13.  Each test carries its criterion number; the
terminal summary prints one PASS/FAIL line per criterion."""

import time
from fractions import Fraction

import numpy as np
import pytest

from fbslab.circuits import DepolarizingNoise, NoiseModel, build_bacon_shor_circuit, build_fbs_circuit
from fbslab.cli import main as cli_main
from fbslab.dem import (
    enumerate_mechanisms,
    extract_decoding_graph,
    run_circuit_tableau,
    site_signatures,
)
from fbslab.distance import (
    _full_min_weight,
    brute_force_distance,
    graphlike_distance,
    unmasked_distance,
    unmasked_sets,
)
from fbslab.harness import ExperimentConfig, kdn_ratio, preset, prepare, run_shots
from fbslab.lattice import (
    CodeLayout,
    code_parameters,
    gauge_group,
    plaquettes,
    stabilizer_group,
    virtual_canonical_basis,
    virtual_x,
    virtual_z,
)
from fbslab.matching import brute_force_match, decode, precompute_paths
from fbslab.pauli import PauliGroupBasis, PauliString, center, commutes, multiply, same_up_to_phase
from fbslab.schedule import (
    FloquetSchedule,
    check_preservation,
    compute_isgs,
    dynamical_logicals,
    place_defects,
)
from fbslab.tableau import RandomStream, StabilizerState


def _fbs_rounds(d, defects):
    return [rs.checks for rs in FloquetSchedule.build(d, defects).rounds]


# 1 ---------------------------------------------------------------------------


@pytest.mark.criterion(1)
def test_structure_suite():
    start = time.perf_counter()
    for L in range(2, 8):
        for M in range(2, 8):
            layout = CodeLayout(L, M)
            gauge = gauge_group(layout)
            stab = stabilizer_group(layout)
            params = code_parameters(layout)
            assert gauge.rank == L * (M - 1) + M * (L - 1)
            assert stab.rank == (L - 1) + (M - 1)
            assert params.g == (L - 1) * (M - 1)
            assert params.k == 1
            assert params.n == params.g + params.s + params.k
            assert stab.is_subgroup_of(gauge)
            assert all(commutes(s, g) for s in stab.generators for g in gauge.generators)
    # the center of the gauge group is exactly the stabilizer group
    for d in (3, 4):
        layout = CodeLayout.square(d)
        assert center(gauge_group(layout)).same_group(stabilizer_group(layout))
    assert time.perf_counter() - start < 1.0


# 2 ---------------------------------------------------------------------------


@pytest.mark.criterion(2)
def test_canonical_commutation():
    start = time.perf_counter()
    for d in (3, 5):
        layout = CodeLayout.square(d)
        ps = list(plaquettes(layout))
        xs = {p: virtual_x(layout, p) for p in ps}
        zs = {p: virtual_z(layout, p) for p in ps}
        assert len(ps) == d * d
        for p in ps:
            for q in ps:
                assert commutes(xs[p], zs[q]) == (p != q), (p, q)
                assert commutes(xs[p], xs[q])
                assert commutes(zs[p], zs[q])
    assert time.perf_counter() - start < 1.0


# 3 ---------------------------------------------------------------------------


@pytest.mark.criterion(3)
def test_isg_steady_state_and_content():
    start = time.perf_counter()
    for d in (4, 5, 6, 7):
        layout = CodeLayout.square(d)
        (site,) = place_defects(d)
        # compute_isgs raises unless cycles 2 and 3 give the same groups
        isgs = compute_isgs(layout, [site], cycles=3)
        round0 = isgs[0].measured
        xa, xd = virtual_x(layout, site.a), virtual_x(layout, site.d)
        assert round0.contains(multiply(xa, xd))
        assert not round0.contains(xa)
        assert not round0.contains(xd)
        for isg in isgs:
            assert isg.basis.rank == layout.n
            assert isg.measured.rank == layout.n - 2
    assert time.perf_counter() - start < 5.0


# 4 ---------------------------------------------------------------------------


@pytest.mark.criterion(4)
def test_preservation_suite():
    start = time.perf_counter()
    for d in (5, 7):
        layout = CodeLayout.square(d)
        defects = place_defects(d)
        isgs = compute_isgs(layout, defects)
        for r in range(4):
            res = check_preservation(layout, defects[0], r, isgs)
            assert res.x_ok and res.z_ok, res.diff
            assert res.membership_ok, res.diff

    # 3-qubit repetition code switch: <ZZ> code to <XX> code, logical ZZZ kept.
    n = 3
    s0 = PauliGroupBasis.from_operators(n, [PauliString.parse("+ZZI"), PauliString.parse("+IZZ")])
    s1 = PauliGroupBasis.from_operators(n, [PauliString.parse("+XXI"), PauliString.parse("+IXX")])
    zbar, xbar = PauliString.parse("+ZZZ"), PauliString.parse("+XXX")
    for group in (s0, s1):
        assert all(commutes(zbar, g) and commutes(xbar, g) for g in group.generators)
        assert not group.contains(zbar) and not group.contains(xbar)
    # s^(0) = s^(1) = identity satisfies the preservation identity trivially
    ident = PauliString(n)
    assert same_up_to_phase(multiply(ident, zbar), multiply(ident, zbar))
    for value in (1, -1):
        state = StabilizerState(n, RandomStream(7, 0))
        if value == -1:
            state.apply_pauli(xbar)  # |111>
        assert state.peek(zbar) == value
        for g in s1.generators:
            state.measure(g)
        assert state.peek(zbar) == value  # Zbar survives the switch
        assert state.stabilizer_group().contains(zbar)
    assert time.perf_counter() - start < 1.0


# 5 ---------------------------------------------------------------------------


@pytest.mark.criterion(5)
def test_self_correction():
    start = time.perf_counter()
    d = 5
    layout = CodeLayout.square(d)
    defects = place_defects(d)
    site = defects[0]
    circuit = build_fbs_circuit(d, defects, 3, NoiseModel())
    depol = [i for i, ins in enumerate(circuit.instructions) if isinstance(ins, DepolarizingNoise)]
    # depolarizing slot k precedes step k; steps 4..7 are the second cycle
    before_round1, end_of_round2 = depol[5], depol[7] - 1
    a = site.a
    error = PauliString.x_type(layout.n, [layout.qubit_index(a.row, a.col - 1), layout.qubit_index(a.row, a.col)])
    # the error carries a factor of the dynamical logical X at round 0
    assert not commutes(error, dynamical_logicals(layout, site, 0).z_op)

    snapshots = {}

    def grab(i, state):
        if i == end_of_round2:
            snapshots["group"] = state.stabilizer_group()

    clean = run_circuit_tableau(circuit, RandomStream(3, 0).generator(), inspect=grab)
    clean_group = snapshots["group"]
    hit = run_circuit_tableau(
        circuit, RandomStream(3, 0).generator(), injections={before_round1: [error]}, inspect=grab
    )
    flipped = [i for i, (u, v) in enumerate(zip(clean.detectors, hit.detectors)) if u != v]
    assert len(flipped) == 2
    for i in flipped:
        det = circuit.detectors[i]
        assert det.kind == "temporary" and det.tag.startswith("s5 r1")
    assert snapshots["group"].same_group(clean_group)
    # the decoder's correction exactly cancels the recorded observable change
    noisy = build_fbs_circuit(d, defects, 3, NoiseModel(1e-3))
    result = decode(extract_decoding_graph(noisy), flipped)
    observed = sum((u ^ v) << j for j, (u, v) in enumerate(zip(clean.observables, hit.observables)))
    assert result.predicted_observable_flips == observed
    assert time.perf_counter() - start < 1.0


# 6 ---------------------------------------------------------------------------


@pytest.mark.criterion(6)
def test_distance_bacon_shor():
    start = time.perf_counter()
    for d in (3, 5, 7, 9):
        circuit = build_bacon_shor_circuit(d, 3, NoiseModel(1e-3))
        report = graphlike_distance(extract_decoding_graph(circuit))
        assert report.value == d
        assert len(report.witness) == d
    assert time.perf_counter() - start < 30.0


# 7 ---------------------------------------------------------------------------


@pytest.mark.criterion(7)
def test_distance_floquet():
    start = time.perf_counter()
    for d in range(3, 11):
        circuit = build_fbs_circuit(d, place_defects(d), 3, NoiseModel(1e-3))
        expected = d - 1 if d % 2 else d - 2
        assert graphlike_distance(extract_decoding_graph(circuit)).value == expected, d
    for d in (5, 7, 9):
        circuit = build_fbs_circuit(d, place_defects(d), 3, NoiseModel(1e-3), skip_final_cd_detector=True)
        assert graphlike_distance(extract_decoding_graph(circuit)).value == (d - 1) // 2, d
    assert time.perf_counter() - start < 60.0


# 8 ---------------------------------------------------------------------------


def _random_syndromes(graph, rng, count):
    """Syndromes from a few random graph edges, so every one is matchable."""
    out = []
    while len(out) < count:
        picks = rng.choice(len(graph.edges), size=int(rng.integers(1, 5)), replace=False)
        dets: set[int] = set()
        for i in picks:
            e = graph.edges[i]
            dets ^= {e.u}
            if e.v >= 0:
                dets ^= {e.v}
        if 0 < len(dets) <= 10:
            out.append(sorted(dets))
    return out


@pytest.mark.criterion(8)
def test_oracle_equivalence():
    start = time.perf_counter()
    noise = NoiseModel(1e-3)
    for circuit in (build_bacon_shor_circuit(3, 3, noise), build_fbs_circuit(3, place_defects(3), 3, noise)):
        graph = extract_decoding_graph(circuit)
        assert brute_force_distance(circuit).value == graphlike_distance(graph).value

    graphs = [
        extract_decoding_graph(build_bacon_shor_circuit(3, 3, NoiseModel(2e-2))),
        extract_decoding_graph(build_fbs_circuit(5, place_defects(5), 2, NoiseModel(2e-2))),
        extract_decoding_graph(build_fbs_circuit(5, place_defects(5), 2, NoiseModel(1e-2, 2e-2))),
    ]
    rng = np.random.default_rng(2024)
    for graph in graphs:
        paths = precompute_paths(graph)
        for syndrome in _random_syndromes(graph, rng, 200):
            fast = decode(graph, syndrome, paths)
            slow = brute_force_match(graph, syndrome, paths)
            assert fast.total_weight == pytest.approx(slow.total_weight, rel=1e-12, abs=1e-9)
    assert time.perf_counter() - start < 120.0


# 9 ---------------------------------------------------------------------------


@pytest.mark.criterion(9)
def test_kdn_saturation():
    start = time.perf_counter()
    entries = preset("fig8")
    assert [e.config.q for e in entries] == [2, 3, 4, 5, 6]
    for entry in entries:
        cfg = entry.config
        assert cfg.d == 3 * cfg.q + 2 and entry.expected_distance == 4
        setup = prepare(cfg)
        assert graphlike_distance(setup.graph).value == 4
        assert kdn_ratio(cfg.q) == Fraction(4 * (cfg.q**2 + 1), (3 * cfg.q + 2) ** 2)
        # k counts the q^2 dynamical qubits plus the static one
        assert cfg.logical_qubits == cfg.q**2 + 1
        assert Fraction(cfg.logical_qubits * 4, cfg.d**2) == kdn_ratio(cfg.q)
    assert kdn_ratio(2) == Fraction(20, 64)
    ratios = [kdn_ratio(q) for q in range(1, 200)]
    assert all(a < b for a, b in zip(ratios[1:], ratios[2:]))
    assert all(r < Fraction(4, 9) for r in ratios)
    assert Fraction(4, 9) - ratios[-1] < Fraction(1, 100)
    assert time.perf_counter() - start < 300.0


# 10 --------------------------------------------------------------------------


@pytest.mark.criterion(10)
def test_unmasked_distance():
    start = time.perf_counter()
    for d in (3, 5, 7):
        layout = CodeLayout.square(d)
        defects = place_defects(d)
        isgs = compute_isgs(layout, defects)
        rounds = _fbs_rounds(d, defects)
        isg0 = virtual_canonical_basis(layout, isgs[0].measured)
        sets = unmasked_sets(rounds, 0, isg0)
        permanent = stabilizer_group(layout)
        after3 = PauliGroupBasis.from_operators(layout.n, sets.C_history[2])
        assert after3.same_group(permanent)
        assert len(sets.C_history[2]) == permanent.rank
        report, sets = unmasked_distance(rounds, 0, isg0, permanent=permanent)
        assert report.value == report.witness.weight
        U = PauliGroupBasis.from_operators(layout.n, sets.U_tilde)
        G = PauliGroupBasis.from_operators(
            layout.n, list(sets.P_tilde) + list(sets.destabilizers) + list(U.generators)
        )
        if d == 7:
            assert report.value == 6
            # the unfixed defect box operator is a minimum-weight witness
            xa = virtual_x(layout, defects[0].a)
            assert xa.weight == d - 1
            assert all(commutes(xa, u) for u in U.generators) and not G.contains(xa)
        if d == 3:
            # independent 4^9 enumeration over all Paulis
            w, op, exact = _full_min_weight(U, G, layout.n)
            assert exact and w == report.value and w <= d - 1
    assert time.perf_counter() - start < 60.0


# 11 --------------------------------------------------------------------------


@pytest.mark.criterion(11)
def test_monte_carlo_trend():
    start = time.perf_counter()
    rates = {}
    for code in ("bs", "fbs"):
        for d in (5, 7, 9, 17):
            cfg = ExperimentConfig(
                code=code, d=d, cycles=d, p_depol=5e-3, shots_max=100_000, errors_max=100_000, seed=11
            )
            rates[code, d] = run_shots(cfg, workers=4)
    for code in ("bs", "fbs"):
        seq = [rates[code, d].per_cycle for d in (5, 7, 9)]
        assert seq[0] > seq[1] > seq[2], (code, seq)
    fbs, bs = rates["fbs", 17], rates["bs", 17]
    lo_f, hi_f = fbs.interval()
    lo_b, hi_b = bs.interval()
    assert fbs.per_cycle <= bs.per_cycle or lo_f <= hi_b, (fbs, bs)
    assert time.perf_counter() - start < 900.0


# 12 --------------------------------------------------------------------------


def _graphlike_configs():
    dep = NoiseModel(1e-3)
    dep_reset = NoiseModel(1e-3, 1e-3)
    yield "bs3", build_bacon_shor_circuit(3, 3, dep)
    yield "bs5", build_bacon_shor_circuit(5, 3, dep_reset)
    for d in range(3, 8):
        yield f"fbs{d}", build_fbs_circuit(d, place_defects(d), 3, dep)
    yield "fbs6-reset", build_fbs_circuit(6, place_defects(6), 3, dep_reset)
    yield "fbs5-skipcd", build_fbs_circuit(5, place_defects(5), 3, dep, skip_final_cd_detector=True)
    yield "fbs7-k4", build_fbs_circuit(7, place_defects(7, 4), 3, dep)
    yield "fbs8-dense", build_fbs_circuit(8, place_defects(8, 4, mode="dense"), 3, dep)
    yield "fbs5-repeated", build_fbs_circuit(5, place_defects(5), 0, dep_reset, mode="repeated_rounds", repeats=3)


@pytest.mark.criterion(12)
def test_graphlike_guarantee():
    start = time.perf_counter()
    for name, circuit in _graphlike_configs():
        sigs = site_signatures(circuit)
        mechanisms = enumerate_mechanisms(circuit, sigs=sigs)
        assert mechanisms, name
        for mech in mechanisms:
            if mech.pauli == "Y":
                continue  # decomposed into its X and Z parts, each listed separately
            assert len(mech.detectors) <= 2, (name, mech)
            assert mech.detectors or not mech.obs_mask, (name, mech)
        extract_decoding_graph(circuit, strict=True)  # raises on either violation
    assert time.perf_counter() - start < 60.0


# 13 --------------------------------------------------------------------------


@pytest.mark.criterion(13)
def test_determinism_across_workers(tmp_path):
    start = time.perf_counter()
    outputs = []
    for workers in (1, 4, 8):
        out = tmp_path / f"w{workers}.csv"
        argv = [
            "sample", "--code", "fbs", "--d", "5", "--cycles", "4", "--p-depol", "0.01",
            "--p-meas", "0.002", "--shots", "20000", "--max-errors", "100000", "--seed", "99",
            "--workers", str(workers), "--out", str(out),
        ]
        assert cli_main(argv) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]
    # the early stop is exact and equally deterministic
    stops = []
    for workers in (1, 4, 8):
        out = tmp_path / f"e{workers}.csv"
        argv = ["sample", "--d", "5", "--p-depol", "0.02", "--shots", "50000", "--max-errors", "150",
                "--seed", "5", "--workers", str(workers), "--out", str(out)]
        assert cli_main(argv) == 0
        stops.append(out.read_bytes())
    assert stops[0] == stops[1] == stops[2]
    assert b",150," in stops[0]
    assert time.perf_counter() - start < 120.0
