import numpy as np
import pytest

from fbslab.circuits import NoiseModel, build_bacon_shor_circuit, build_fbs_circuit
from fbslab.dem import (
    CircuitIndex,
    MeasurementFlip,
    NoiseSite,
    combine_probabilities,
    enumerate_mechanisms,
    error_sensitivity,
    extract_decoding_graph,
    run_circuit_tableau,
    site_signatures,
)
from fbslab.harness import ExperimentConfig, build_circuit
from fbslab.pauli import PauliString
from fbslab.schedule import place_defects


def test_combine_probabilities():
    assert combine_probabilities(0.1, 0.2) == pytest.approx(0.26)
    assert combine_probabilities(0.0, 0.3) == 0.3


@pytest.mark.parametrize(
    "circuit",
    [
        build_bacon_shor_circuit(3, 2, NoiseModel(1e-3, 1e-3, 0)),
        build_fbs_circuit(5, place_defects(5), 2, NoiseModel(1e-3, 1e-3, 1e-3)),
        build_fbs_circuit(5, place_defects(5), 0, NoiseModel(1e-3), mode="repeated_rounds", repeats=2),
    ],
    ids=["bs3", "fbs5", "fbs5-repeated"],
)
def test_propagation_agrees_with_tableau(circuit):
    """Injected single errors: signature tables vs a tableau replay."""
    rng = np.random.default_rng(7)
    index = CircuitIndex(circuit)
    sigs = site_signatures(circuit, index)
    n = circuit.n_qubits
    for trial in range(100):
        s = int(rng.integers(len(sigs.instruction)))
        q = int(rng.integers(n))
        pauli = "XYZ"[int(rng.integers(3))]
        instr = sigs.instruction[s]
        x = 1 << q if pauli in "XY" else 0
        z = 1 << q if pauli in "YZ" else 0
        run = run_circuit_tableau(
            circuit, np.random.default_rng(trial), injections={instr: [PauliString.hermitian(n, x, z)]}
        )
        dets = {i for i, v in enumerate(run.detectors) if v}
        obs = sum(v << j for j, v in enumerate(run.observables))
        want = set()
        want_obs = 0
        for flag, table in ((x, sigs.x_sig), (z, sigs.z_sig)):
            if flag:
                want ^= set(table[s][q][0])
                want_obs ^= table[s][q][1]
        assert dets == want, (instr, q, pauli)
        assert obs == want_obs
        sens = error_sensitivity(circuit, NoiseSite(instr, q), pauli, index)
        assert sens.flipped_detectors == frozenset(want)
    for m in rng.integers(circuit.num_measurements, size=20):
        m = int(m)
        run = run_circuit_tableau(circuit, np.random.default_rng(0), flips=[m])
        dets = {i for i, v in enumerate(run.detectors) if v}
        assert dets == set(sigs.meas_sig[m][0])
        assert error_sensitivity(circuit, MeasurementFlip(m), index=index).flipped_detectors == frozenset(dets)


def test_mechanism_probabilities():
    c = build_bacon_shor_circuit(3, 1, NoiseModel(3e-3, 0, 0))
    mechs = enumerate_mechanisms(c)
    assert {m.pauli for m in mechs} == {"X", "Y", "Z"}
    assert all(m.probability == pytest.approx(1e-3) for m in mechs)


def test_graph_is_graphlike_without_measurement_noise():
    for cfg in (
        ExperimentConfig(code="bs", d=3, cycles=2),
        ExperimentConfig(code="fbs", d=5, cycles=2, p_reset=1e-3),
    ):
        g = extract_decoding_graph(build_circuit(cfg))
        assert not g.undetectable
        assert all(len({e.u, e.v}) == 2 for e in g.edges)
        assert all(0 < e.probability < 0.5 for e in g.edges)


def test_measurement_noise_has_silent_observable_flips():
    # a flip of the defect-edge record changes the dynamical observable
    # without touching any detector
    c = build_circuit(ExperimentConfig(code="fbs", d=5, cycles=2, p_meas=1e-3))
    with pytest.raises(ValueError):
        extract_decoding_graph(c, strict=True)
    g = extract_decoding_graph(c, strict=False)
    assert g.undetectable
    assert all(what.startswith("flip of measurement") for what, _, _ in g.undetectable)
    assert all(obs == 1 << 1 for _, _, obs in g.undetectable)
