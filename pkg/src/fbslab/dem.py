"""Single-error propagation, decoding-graph extraction and tableau replay.

Every error is a Pauli, and Pauli frames are unchanged by Pauli
measurements, so an error P inserted at some point flips exactly the later
measurement records whose operator anticommutes with P.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple

import numpy as np

from .circuits import (
    BitflipNoise,
    DepolarizingNoise,
    MeasureCheck,
    ReadoutAllZ,
    ResetAllZero,
    ScheduledCircuit,
)
from .pauli import PauliString
from .tableau import StabilizerState


class NoiseSite(NamedTuple):
    instruction: int
    qubit: int


class MeasurementFlip(NamedTuple):
    measurement: int


class HypergraphError(ValueError):
    """A unit mechanism flips three or more detectors."""


def combine_probabilities(p1: float, p2: float) -> float:
    """Probability that exactly one of two independent events happens."""
    return p1 * (1 - p2) + p2 * (1 - p1)


@dataclass(frozen=True)
class Sensitivity:
    flipped_detectors: frozenset[int]
    flipped_observables: frozenset[int]


class CircuitIndex:
    """Lookup tables shared by the propagation routines."""

    def __init__(self, circuit: ScheduledCircuit):
        self.circuit = circuit
        n = circuit.n_qubits
        ops = circuit.measurement_operators()
        self.num_measurements = len(ops)
        self.meas_x = [op.x_mask for op in ops]
        self.meas_z = [op.z_mask for op in ops]
        self.meas_to_dets: list[list[int]] = [[] for _ in ops]
        for det in circuit.detectors:
            for m in det.measurement_indices:
                self.meas_to_dets[m].append(det.id)
        self.meas_to_obs = [0] * len(ops)
        for obs in circuit.observables:
            for m in obs.measurement_indices:
                self.meas_to_obs[m] ^= 1 << obs.id
        # measurement count before each instruction
        self.t0: list[int] = []
        count = 0
        for ins in circuit.instructions:
            self.t0.append(count)
            if isinstance(ins, MeasureCheck):
                count += 1
            elif isinstance(ins, ReadoutAllZ):
                count += n
        self.noise_sites = [
            i for i, ins in enumerate(circuit.instructions) if isinstance(ins, (BitflipNoise, DepolarizingNoise))
        ]
        # measurements whose operator has an X (resp. Z) component on each qubit
        self.x_on: list[list[int]] = [[] for _ in range(n)]
        self.z_on: list[list[int]] = [[] for _ in range(n)]
        for m, (x, z) in enumerate(zip(self.meas_x, self.meas_z)):
            for q in _bits(x):
                self.x_on[q].append(m)
            for q in _bits(z):
                self.z_on[q].append(m)


def _bits(v: int) -> Iterable[int]:
    while v:
        low = v & -v
        yield low.bit_length() - 1
        v ^= low


def _signature(index: CircuitIndex, measurements: Iterable[int]) -> tuple[set[int], int]:
    dets: set[int] = set()
    obs = 0
    for m in measurements:
        dets.symmetric_difference_update(index.meas_to_dets[m])
        obs ^= index.meas_to_obs[m]
    return dets, obs


def error_sensitivity(
    circuit: ScheduledCircuit,
    location: NoiseSite | MeasurementFlip,
    pauli: str = "M",
    index: CircuitIndex | None = None,
) -> Sensitivity:
    """Detectors and observables flipped by one error.

    ``location`` is a NoiseSite (an error inserted at that instruction on that
    qubit, with ``pauli`` in X/Y/Z) or a MeasurementFlip (``pauli`` ignored).
    """
    index = index or CircuitIndex(circuit)
    if isinstance(location, MeasurementFlip):
        if not 0 <= location.measurement < index.num_measurements:
            raise ValueError(f"no measurement {location.measurement}")
        flipped = [location.measurement]
    else:
        i, q = location
        if not 0 <= i < len(circuit.instructions) or not 0 <= q < circuit.n_qubits:
            raise ValueError(f"invalid noise site {location}")
        if pauli not in ("X", "Y", "Z"):
            raise ValueError(f"pauli must be X, Y or Z, got {pauli!r}")
        ex = 1 << q if pauli in "XY" else 0
        ez = 1 << q if pauli in "ZY" else 0
        t0 = index.t0[i]
        flipped = [
            m
            for m in range(t0, index.num_measurements)
            if bin((ex & index.meas_z[m]) ^ (ez & index.meas_x[m])).count("1") & 1
        ]
    dets, obs = _signature(index, flipped)
    return Sensitivity(
        frozenset(dets), frozenset(j for j in range(len(circuit.observables)) if (obs >> j) & 1)
    )


@dataclass(frozen=True)
class Mechanism:
    """One unit error: an X/Y/Z at a noise site or a measurement flip."""

    location: NoiseSite | MeasurementFlip
    pauli: str
    probability: float
    detectors: tuple[int, ...]
    obs_mask: int


@dataclass
class SiteSignatures:
    """Signatures of X and Z errors on every qubit at every noise instruction."""

    instruction: list[int]
    probability: list[float]
    kind: list[str]
    x_sig: list[list[tuple[tuple[int, ...], int]]]
    z_sig: list[list[tuple[tuple[int, ...], int]]]
    meas_sig: list[tuple[tuple[int, ...], int]]
    meas_prob: list[float]


def site_signatures(circuit: ScheduledCircuit, index: CircuitIndex | None = None) -> SiteSignatures:
    """All single-error signatures, via suffix sums of detector sets per qubit."""
    index = index or CircuitIndex(circuit)
    n = circuit.n_qubits
    sites = index.noise_sites
    t0s = [index.t0[i] for i in sites]
    x_sig = [[None] * n for _ in sites]
    z_sig = [[None] * n for _ in sites]
    for q in range(n):
        for flips_by, table in ((index.z_on[q], x_sig), (index.x_on[q], z_sig)):
            running: set[int] = set()
            obs = 0
            ptr = len(flips_by) - 1
            for s in range(len(sites) - 1, -1, -1):
                while ptr >= 0 and flips_by[ptr] >= t0s[s]:
                    m = flips_by[ptr]
                    running.symmetric_difference_update(index.meas_to_dets[m])
                    obs ^= index.meas_to_obs[m]
                    ptr -= 1
                table[s][q] = (tuple(sorted(running)), obs)
    meas_sig = [(_xor_tuple(index.meas_to_dets[m]), index.meas_to_obs[m]) for m in range(index.num_measurements)]
    instrs = circuit.instructions
    return SiteSignatures(
        instruction=list(sites),
        probability=[instrs[i].p for i in sites],
        kind=["bitflip" if isinstance(instrs[i], BitflipNoise) else "depol" for i in sites],
        x_sig=x_sig,
        z_sig=z_sig,
        meas_sig=meas_sig,
        meas_prob=circuit.measurement_flip_probabilities(),
    )


def _xor_tuple(items: Iterable[int]) -> tuple[int, ...]:
    acc: set[int] = set()
    for i in items:
        acc ^= {i}
    return tuple(sorted(acc))


def _xor_sig(a: tuple[tuple[int, ...], int], b: tuple[tuple[int, ...], int]) -> tuple[tuple[int, ...], int]:
    return tuple(sorted(set(a[0]) ^ set(b[0]))), a[1] ^ b[1]


def enumerate_mechanisms(
    circuit: ScheduledCircuit, include_zero_probability: bool = False, sigs: SiteSignatures | None = None
) -> list[Mechanism]:
    """Every unit mechanism, with Y listed as its own (composite) mechanism."""
    sigs = sigs or site_signatures(circuit)
    out = []
    for s, instr in enumerate(sigs.instruction):
        p = sigs.probability[s]
        if p == 0 and not include_zero_probability:
            continue
        for q in range(circuit.n_qubits):
            xs, zs = sigs.x_sig[s][q], sigs.z_sig[s][q]
            site = NoiseSite(instr, q)
            if sigs.kind[s] == "bitflip":
                out.append(Mechanism(site, "X", p, *xs))
            else:
                out.append(Mechanism(site, "X", p / 3, *xs))
                out.append(Mechanism(site, "Y", p / 3, *_xor_sig(xs, zs)))
                out.append(Mechanism(site, "Z", p / 3, *zs))
    for m, (dets, obs) in enumerate(sigs.meas_sig):
        p = sigs.meas_prob[m]
        if p == 0 and not include_zero_probability:
            continue
        out.append(Mechanism(MeasurementFlip(m), "M", p, dets, obs))
    return out


BOUNDARY = -1


@dataclass
class GraphEdge:
    u: int
    v: int  # BOUNDARY for boundary edges
    probability: float
    obs_mask: int
    multiplicity: int = 1


@dataclass
class DecodingGraph:
    num_detectors: int
    num_observables: int
    edges: list[GraphEdge] = field(default_factory=list)
    undetectable: list[tuple[str, float, int]] = field(default_factory=list)

    @property
    def boundary(self) -> int:
        """Node id used for the boundary in array-based algorithms."""
        return self.num_detectors

    def node(self, v: int) -> int:
        return self.num_detectors if v == BOUNDARY else v


def extract_decoding_graph(circuit: ScheduledCircuit, strict: bool = True) -> DecodingGraph:
    """Merge every unit mechanism into a graph edge.

    Y errors on depolarizing sites are split into their X and Z components,
    each carried by the edge of that component.  A component that flips three
    or more detectors raises HypergraphError.  Mechanisms flipping no detector
    but some observable are collected in ``undetectable``; with ``strict`` they
    raise instead.
    """
    sigs = site_signatures(circuit)
    merged: dict[tuple[int, int, int], list] = {}
    graph = DecodingGraph(len(circuit.detectors), len(circuit.observables))

    def add(sig, p, what):
        dets, obs = sig
        if p <= 0 or (not dets and not obs):
            return
        if len(dets) > 2:
            raise HypergraphError(f"{what} flips detectors {dets}")
        if not dets:
            if strict:
                raise HypergraphError(f"{what} flips observables {obs:b} without any detector")
            graph.undetectable.append((what, p, obs))
            return
        key = (dets[0], dets[1] if len(dets) == 2 else BOUNDARY, obs)
        if key in merged:
            entry = merged[key]
            entry[0] = combine_probabilities(entry[0], p)
            entry[1] += 1
        else:
            merged[key] = [p, 1]

    for s, instr in enumerate(sigs.instruction):
        p = sigs.probability[s]
        if p == 0:
            continue
        depol = sigs.kind[s] == "depol"
        p_component = combine_probabilities(p / 3, p / 3) if depol else p
        for q in range(circuit.n_qubits):
            add(sigs.x_sig[s][q], p_component, f"X at instruction {instr} qubit {q}")
            if depol:
                add(sigs.z_sig[s][q], p_component, f"Z at instruction {instr} qubit {q}")
    for m, sig in enumerate(sigs.meas_sig):
        add(sig, sigs.meas_prob[m], f"flip of measurement {m}")
    for (u, v, obs), (p, mult) in sorted(merged.items()):
        graph.edges.append(GraphEdge(u, v, p, obs, mult))
    return graph


# ---------------------------------------------------------------------------
# tableau replay


@dataclass
class CircuitRun:
    measurements: list[int]
    detectors: list[int]
    observables: list[int]
    applied: list[tuple[int, int, str]]


def run_circuit_tableau(
    circuit: ScheduledCircuit,
    rng: np.random.Generator,
    sample_noise: bool = False,
    injections: dict[int, list[PauliString]] | None = None,
    flips: Iterable[int] = (),
    inspect: Callable[[int, StabilizerState], None] | None = None,
) -> CircuitRun:
    """Replay a circuit on a tableau.

    ``injections`` maps an instruction index to Paulis applied just before it
    runs; ``flips`` lists measurement records to invert.  ``inspect`` is called
    with (instruction index, state) after each instruction.
    """
    injections = injections or {}
    flips = set(flips)
    n = circuit.n_qubits
    state = StabilizerState(n, rng)
    bits: list[int] = []
    applied = []
    for i, ins in enumerate(circuit.instructions):
        for err in injections.get(i, ()):
            state.apply_pauli(err)
        if isinstance(ins, ResetAllZero):
            state = StabilizerState(n, rng)
        elif isinstance(ins, BitflipNoise) and sample_noise:
            for q in ins.qubits:
                if state.apply_bitflip(q, ins.p) != "I":
                    applied.append((i, q, "X"))
        elif isinstance(ins, DepolarizingNoise) and sample_noise:
            for q in ins.qubits:
                got = state.apply_depolarizing(q, ins.p)
                if got != "I":
                    applied.append((i, q, got))
        elif isinstance(ins, MeasureCheck):
            bit = state.measure(ins.op).bit
            if sample_noise and ins.p_meas > 0 and rng.random() < ins.p_meas:
                bit ^= 1
            bits.append(bit)
        elif isinstance(ins, ReadoutAllZ):
            for q in range(n):
                bit = state.measure(PauliString(n, 0, 1 << q)).bit
                if sample_noise and ins.p_meas > 0 and rng.random() < ins.p_meas:
                    bit ^= 1
                bits.append(bit)
        if inspect is not None:
            inspect(i, state)
    for m in flips:
        bits[m] ^= 1
    dets = [sum(bits[m] for m in d.measurement_indices) % 2 for d in circuit.detectors]
    obs = [sum(bits[m] for m in o.measurement_indices) % 2 for o in circuit.observables]
    return CircuitRun(bits, dets, obs, applied)
