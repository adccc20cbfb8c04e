"""Noisy measurement circuits for Bacon-Shor and Floquet-Bacon-Shor codes.

A circuit is a flat instruction list plus detector and observable
definitions over measurement-record indices.  Every measurement outcome is
stored as a bit (0 for +1, 1 for -1); a detector or observable is the XOR of
its bits and is 0 in a noiseless run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

from .lattice import CodeLayout, Edge
from .pauli import PauliGroupBasis, PauliString
from .schedule import DefectSite, build_round, dynamical_logicals, s_operators


@dataclass(frozen=True)
class NoiseModel:
    p_depol: float = 0.0
    p_reset: float = 0.0
    p_meas: float = 0.0

    def __post_init__(self):
        for name in ("p_depol", "p_reset", "p_meas"):
            p = getattr(self, name)
            if not 0.0 <= p < 0.5:
                raise ValueError(f"{name}={p} must lie in [0, 0.5)")


@dataclass(frozen=True)
class ResetAllZero:
    pass


@dataclass(frozen=True)
class BitflipNoise:
    p: float
    qubits: tuple[int, ...]


@dataclass(frozen=True)
class DepolarizingNoise:
    p: float
    qubits: tuple[int, ...]


@dataclass(frozen=True)
class MeasureCheck:
    op: PauliString
    p_meas: float


@dataclass(frozen=True)
class ReadoutAllZ:
    p_meas: float


Instruction = Union[ResetAllZero, BitflipNoise, DepolarizingNoise, MeasureCheck, ReadoutAllZ]

DETECTOR_KINDS = ("temporary", "permanent", "initial", "final", "per-check-repeat")


@dataclass(frozen=True)
class DetectorDef:
    id: int
    measurement_indices: tuple[int, ...]
    kind: str
    tag: str = ""


@dataclass(frozen=True)
class ObservableDef:
    id: int
    measurement_indices: tuple[int, ...]
    label: str


@dataclass
class ScheduledCircuit:
    n_qubits: int
    instructions: list[Instruction]
    detectors: list[DetectorDef] = field(default_factory=list)
    observables: list[ObservableDef] = field(default_factory=list)
    layout: CodeLayout | None = None
    rounds_measured: int = 0
    cycles: int = 0

    @property
    def num_measurements(self) -> int:
        count = 0
        for ins in self.instructions:
            if isinstance(ins, MeasureCheck):
                count += 1
            elif isinstance(ins, ReadoutAllZ):
                count += self.n_qubits
        return count

    def measurement_operators(self) -> list[PauliString]:
        ops = []
        for ins in self.instructions:
            if isinstance(ins, MeasureCheck):
                ops.append(ins.op)
            elif isinstance(ins, ReadoutAllZ):
                ops.extend(PauliString(self.n_qubits, 0, 1 << q) for q in range(self.n_qubits))
        return ops

    def measurement_flip_probabilities(self) -> list[float]:
        out = []
        for ins in self.instructions:
            if isinstance(ins, MeasureCheck):
                out.append(ins.p_meas)
            elif isinstance(ins, ReadoutAllZ):
                out.extend([ins.p_meas] * self.n_qubits)
        return out

    def validate(self) -> None:
        m = self.num_measurements
        for det in self.detectors:
            if any(not 0 <= i < m for i in det.measurement_indices):
                raise ValueError(f"detector {det.id} references a missing measurement")
            if det.kind not in DETECTOR_KINDS:
                raise ValueError(f"detector {det.id} has unknown kind {det.kind!r}")
        for obs in self.observables:
            if any(not 0 <= i < m for i in obs.measurement_indices):
                raise ValueError(f"observable {obs.id} references a missing measurement")

    # -- text format --------------------------------------------------------
    def to_text(self) -> str:
        lines = []
        for ins in self.instructions:
            if isinstance(ins, ResetAllZero):
                lines.append(f"RESET {self.n_qubits}")
            elif isinstance(ins, BitflipNoise):
                lines.append(f"BITFLIP {ins.p!r} " + " ".join(map(str, ins.qubits)))
            elif isinstance(ins, DepolarizingNoise):
                lines.append(f"DEPOL {ins.p!r} " + " ".join(map(str, ins.qubits)))
            elif isinstance(ins, MeasureCheck):
                lines.append(f"MEAS {ins.p_meas!r} {ins.op.literal()}")
            elif isinstance(ins, ReadoutAllZ):
                lines.append(f"READZ {ins.p_meas!r}")
        for det in self.detectors:
            tag = f" #{det.tag}" if det.tag else ""
            lines.append(
                f"DETECTOR {det.id} {det.kind} " + " ".join(map(str, det.measurement_indices)) + tag
            )
        for obs in self.observables:
            lines.append(f"OBSERVABLE {obs.id} {obs.label} " + " ".join(map(str, obs.measurement_indices)))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "ScheduledCircuit":
        n = None
        instructions: list[Instruction] = []
        detectors, observables = [], []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            head, *rest = line.split()
            if head == "RESET":
                n = int(rest[0])
                instructions.append(ResetAllZero())
            elif head in ("BITFLIP", "DEPOL"):
                cls = BitflipNoise if head == "BITFLIP" else DepolarizingNoise
                instructions.append(cls(float(rest[0]), tuple(int(q) for q in rest[1:])))
            elif head == "MEAS":
                op = PauliString.parse(rest[1])
                n = op.n_qubits if n is None else n
                instructions.append(MeasureCheck(op, float(rest[0])))
            elif head == "READZ":
                instructions.append(ReadoutAllZ(float(rest[0])))
            elif head == "DETECTOR":
                tag = ""
                if "#" in line:
                    line, tag = line.split("#", 1)
                    rest = line.split()[1:]
                detectors.append(
                    DetectorDef(int(rest[0]), tuple(int(i) for i in rest[2:]), rest[1], tag.strip())
                )
            elif head == "OBSERVABLE":
                observables.append(ObservableDef(int(rest[0]), tuple(int(i) for i in rest[2:]), rest[1]))
            else:
                raise ValueError(f"unknown instruction {head!r}")
        if n is None:
            raise ValueError("circuit text has no RESET line")
        return ScheduledCircuit(n, instructions, detectors, observables)


# ---------------------------------------------------------------------------
# builders


class _Builder:
    def __init__(self, layout: CodeLayout, noise: NoiseModel):
        self.layout = layout
        self.noise = noise
        self.n = layout.n
        self.instructions: list[Instruction] = [ResetAllZero()]
        self.instructions.append(BitflipNoise(noise.p_reset, tuple(range(self.n))))
        self.n_meas = 0
        self.detectors: list[DetectorDef] = []
        self.readout_base: int | None = None
        self.rounds = 0

    def depolarize(self) -> None:
        self.instructions.append(DepolarizingNoise(self.noise.p_depol, tuple(range(self.n))))

    def measure_round(self, edges: Sequence[Edge]) -> dict[Edge, int]:
        self.depolarize()
        records = {}
        for e in edges:
            self.instructions.append(MeasureCheck(e.pauli(self.layout), self.noise.p_meas))
            records[e] = self.n_meas
            self.n_meas += 1
        self.rounds += 1
        return records

    def readout(self) -> None:
        self.depolarize()
        self.instructions.append(ReadoutAllZ(self.noise.p_meas))
        self.readout_base = self.n_meas
        self.n_meas += self.n

    def readout_bits(self, mask: int) -> list[int]:
        return [self.readout_base + q for q in range(self.n) if (mask >> q) & 1]

    def detector(self, indices, kind: str, tag: str = "") -> None:
        acc: set[int] = set()
        for i in indices:
            acc ^= {i}
        self.detectors.append(DetectorDef(len(self.detectors), tuple(sorted(acc)), kind, tag))


def _xor(*groups) -> tuple[int, ...]:
    acc: set[int] = set()
    for g in groups:
        for i in g:
            acc ^= {i}
    return tuple(sorted(acc))


def build_bacon_shor_circuit(d: int, cycles: int, noise: NoiseModel = NoiseModel()) -> ScheduledCircuit:
    """Initial cycle, ``cycles`` repeat cycles, then single-qubit readout."""
    if d < 2 or cycles < 0:
        raise ValueError("need d >= 2 and cycles >= 0")
    layout = CodeLayout.square(d)
    xx = [Edge("XX", r, c) for r in range(d) for c in range(d - 1)]
    zz = [Edge("ZZ", r, c) for r in range(d - 1) for c in range(d)]
    b = _Builder(layout, noise)
    last: dict[int, dict[Edge, int]] = {}
    for cycle in range(cycles + 1):
        rec = b.measure_round(xx)
        if 0 in last:
            for a in range(1, d):
                col = [e for e in xx if e.col + 1 == a]
                b.detector(
                    [rec[e] for e in col] + [last[0][e] for e in col], "permanent", f"c{cycle} r0 col{a}"
                )
        last[0] = rec
        rec = b.measure_round(zz)
        for row in range(1, d):
            line = [e for e in zz if e.row + 1 == row]
            if 1 in last:
                b.detector(
                    [rec[e] for e in line] + [last[1][e] for e in line], "permanent", f"c{cycle} r1 row{row}"
                )
            else:
                b.detector([rec[e] for e in line], "initial", f"c{cycle} r1 row{row}")
        last[1] = rec
    b.readout()
    for e in zz:
        q0, q1 = e.qubits(layout)
        b.detector([last[1][e], b.readout_base + q0, b.readout_base + q1], "final", f"final {e.row},{e.col}")
    observables = [ObservableDef(0, tuple(b.readout_bits(layout.row_mask(0))), "static_Z")]
    circuit = ScheduledCircuit(
        layout.n, b.instructions, b.detectors, observables, layout, b.rounds, cycles + 1
    )
    circuit.validate()
    return circuit


def _segments(bounds: Sequence[int], size: int) -> list[tuple[int, int]]:
    cuts = [0] + sorted(bounds) + [size]
    return [(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1)]


class _FloquetDetectors:
    """Detector operators of each round type, as edge lists."""

    def __init__(self, layout: CodeLayout, defects: Sequence[DefectSite]):
        L, M = layout.rows, layout.cols
        ad = sorted({s.ad_col for s in defects})
        bc = sorted({s.bc_col for s in defects})
        ab = sorted({s.ab_row for s in defects})
        cd = sorted({s.cd_row for s in defects})
        plain_cols = [a for a in range(1, M) if a not in ad and a not in bc]
        plain_rows = [b for b in range(1, L) if b not in ab and b not in cd]

        def col_segment(a, lo, hi):
            return [Edge("XX", r, a - 1) for r in range(lo, hi)]

        def row_segment(b, lo, hi):
            return [Edge("ZZ", b - 1, c) for c in range(lo, hi)]

        # (temporary detectors, reference round), (permanent detectors, reference round)
        self.temporary: dict[int, list[tuple[str, list[Edge]]]] = {}
        self.permanent: dict[int, list[tuple[str, list[Edge]]]] = {}
        self.temporary[0] = [
            (f"col{a} rows{lo}-{hi}", col_segment(a, lo, hi))
            for a in plain_cols
            for lo, hi in _segments(cd, L)
        ]
        self.permanent[0] = [(f"col{a}", col_segment(a, 0, L)) for a in bc]
        self.temporary[1] = [
            (f"row{b} cols{lo}-{hi}", row_segment(b, lo, hi))
            for b in plain_rows
            for lo, hi in _segments(ad, M)
        ]
        self.permanent[1] = [(f"row{b}", row_segment(b, 0, M)) for b in cd]
        self.temporary[2] = [
            (f"col{a} rows{lo}-{hi}", col_segment(a, lo, hi))
            for a in plain_cols
            for lo, hi in _segments(ab, L)
        ]
        self.permanent[2] = [(f"col{a}", col_segment(a, 0, L)) for a in ad]
        self.temporary[3] = [
            (f"row{b} cols{lo}-{hi}", row_segment(b, lo, hi))
            for b in plain_rows
            for lo, hi in _segments(bc, M)
        ]
        self.permanent[3] = [(f"row{b}", row_segment(b, 0, M)) for b in ab]
        self.cd_permanents = [(f"row{b}", row_segment(b, 0, M)) for b in cd]
        # reference round for each detector family
        self.temporary_ref = {0: 2, 1: 3, 2: 0, 3: 1}


def _defect_line(s: DefectSite, r: int) -> int:
    """The line whose permanent stabilizer is compared at round r."""
    return (s.bc_col, s.cd_row, s.ad_col, s.ab_row)[r]


def round_sequence(cycles: int, mode: str = "standard", repeats: int = 1) -> list[int]:
    """Round types in time order, including the initial cycle."""
    if mode == "standard":
        if cycles < 0:
            raise ValueError("cycles must be >= 0")
        return [0, 1, 2, 3] * (cycles + 1)
    if mode == "repeated_rounds":
        if repeats < 1:
            raise ValueError("repeated_rounds needs R >= 1")
        return [0, 1, 2, 3] + [r for r in range(4) for _ in range(repeats)] + [0, 1, 2, 3]
    raise ValueError(f"unknown mode {mode!r}")


def build_fbs_circuit(
    d: int,
    defects: Sequence[DefectSite],
    cycles: int,
    noise: NoiseModel = NoiseModel(),
    mode: str = "standard",
    repeats: int = 1,
    skip_final_cd_detector: bool = False,
) -> ScheduledCircuit:
    """Floquet-Bacon-Shor circuit with one dynamical Z observable per defect.

    In ``repeated_rounds`` mode the schedule is one clean cycle, then each
    round repeated ``repeats`` times, then one more clean cycle; ``cycles`` is
    ignored.  Only the first repetition forms the usual detectors and frame
    updates; the others compare each check with its previous repetition.
    """
    layout = CodeLayout.square(d)
    for s in defects:
        s.validate(layout)
    specs = [build_round(layout, defects, r) for r in range(4)]
    dets = _FloquetDetectors(layout, defects)
    seq = round_sequence(cycles, mode, repeats)
    check_bases = [PauliGroupBasis(layout.n, tuple(rs.checks)) for rs in specs]

    def decompose(op: PauliString, r: int) -> list[Edge]:
        idx = check_bases[r].decompose(op)
        if idx is None:
            raise AssertionError(f"{op} is not a product of round-{r} checks")
        return [specs[r].edges[i] for i in idx]

    # Frame update at the start of round r: s_z^(r) from this round's records
    # and s_z^(r-1) from the latest round r-1.
    updates = [
        {
            r: (decompose(so.sz_now, r), decompose(so.sz_prev, (r - 1) % 4))
            for r in range(4)
            for so in [s_operators(layout, s, r)]
        }
        for s in defects
    ]

    b = _Builder(layout, noise)
    frames: list[list[int]] = [[] for _ in defects]
    latest: dict[int, dict[Edge, int]] = {}
    first: dict[int, dict[Edge, int]] = {}
    prev_type = None
    for step, r in enumerate(seq):
        rec = b.measure_round(specs[r].edges)
        label = f"s{step} r{r}"
        if prev_type == r:
            for e in specs[r].edges:
                b.detector([rec[e], latest[r][e]], "per-check-repeat", f"{label} {e.kind}{e.row},{e.col}")
        else:
            ref = dets.temporary_ref[r]
            for name, edges in dets.temporary[r]:
                if ref in latest:
                    b.detector(
                        [rec[e] for e in edges] + [latest[ref][e] for e in edges], "temporary", f"{label} {name}"
                    )
                elif r % 2 == 1:
                    b.detector([rec[e] for e in edges], "initial", f"{label} {name}")
            for name, edges in dets.permanent[r]:
                # If the defect edge on this line was measured repeatedly since
                # the last comparison, fold in its first and last repetition so
                # errors between repetitions stay graphlike.
                line = edges[0].col + 1 if r % 2 == 0 else edges[0].row + 1
                t = (r + 2) % 4
                folded = [
                    rec_t[s.edge(t)]
                    for s in defects
                    if t in latest and _defect_line(s, r) == line
                    for rec_t in (first[t], latest[t])
                ]
                if r in latest:
                    b.detector(
                        [rec[e] for e in edges] + [latest[r][e] for e in edges] + folded,
                        "permanent",
                        f"{label} {name}",
                    )
                elif r % 2 == 1:
                    b.detector([rec[e] for e in edges] + folded, "initial", f"{label} {name}")
            if prev_type is None:
                if r != 0:
                    raise AssertionError("schedule must start with round 0")
            else:
                if prev_type != (r - 1) % 4:
                    raise AssertionError("rounds must advance one at a time")
                for i in range(len(defects)):
                    now_edges, prev_edges = updates[i][r]
                    frames[i] += [rec[e] for e in now_edges]
                    frames[i] += [latest[prev_type][e] for e in prev_edges]
        if prev_type != r:
            first[r] = rec
        latest[r] = rec
        prev_type = r
    b.readout()
    last = seq[-1]
    if last % 2 != 1:
        raise AssertionError("readout must follow a ZZ round")
    for e in specs[last].edges:
        q0, q1 = e.qubits(layout)
        b.detector([latest[last][e], b.readout_base + q0, b.readout_base + q1], "final", f"final {e.kind}{e.row},{e.col}")
    if not skip_final_cd_detector:
        for name, edges in dets.cd_permanents:
            mask = 0
            for e in edges:
                for q in e.qubits(layout):
                    mask ^= 1 << q
            indices = [latest[1][e] for e in edges] + b.readout_bits(mask)
            # Fold in the final detectors of the CD edges on this row so that no
            # single readout-layer error touches three detectors.
            row = edges[0].row + 1
            for s in defects:
                if s.cd_row == row:
                    e = s.edge(3)
                    indices += [latest[3][e], *(b.readout_base + q for q in e.qubits(layout))]
            b.detector(indices, "final", f"final long {name}")
    observables = [ObservableDef(0, tuple(b.readout_bits(layout.row_mask(0))), "static_Z")]
    for i, s in enumerate(defects):
        z_final = dynamical_logicals(layout, s, last).z_op
        bits = _xor(frames[i], b.readout_bits(z_final.z_mask))
        observables.append(ObservableDef(i + 1, bits, f"dynamical_Z({i})"))
    n_cycles = len(seq) // 4 if mode == "standard" else 3
    circuit = ScheduledCircuit(layout.n, b.instructions, b.detectors, observables, layout, b.rounds, n_cycles)
    circuit.validate()
    return circuit
