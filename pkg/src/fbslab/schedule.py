"""Period-4 Floquet schedule with gauge defects on a d x d Bacon-Shor lattice.

A defect is the 2x2 block of gauge plaquettes around one lattice corner:

    A B        A = (y+1, x)   B = (y+1, x+1)
    D C        D = (y,   x)   C = (y,   x+1)

Plaquette column x is the AD column, x+1 the BC column; plaquette row y+1 is
the AB row and y the CD row.  Round r skips the checks of one defect line and
measures only the edge of that line lying between the two defect plaquettes:

    round 0: XX, skip AD columns, keep edge AD
    round 1: ZZ, skip AB rows,    keep edge AB
    round 2: XX, skip BC columns, keep edge BC
    round 3: ZZ, skip CD rows,    keep edge CD
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .lattice import CodeLayout, Edge, Plaquette, stabilizer_group, virtual_x, virtual_z
from .pauli import PauliGroupBasis, PauliString, commutes, multiply, same_up_to_phase
from .tableau import StabilizerState

ROUND_KIND = ("XX", "ZZ", "XX", "ZZ")


@dataclass(frozen=True)
class DefectSite:
    a: Plaquette
    b: Plaquette
    c: Plaquette
    d: Plaquette

    @staticmethod
    def at_corner(row: int, col: int) -> "DefectSite":
        """Defect around the lattice vertex (row, col), the top-right corner of D."""
        return DefectSite(
            a=Plaquette(row + 1, col),
            b=Plaquette(row + 1, col + 1),
            c=Plaquette(row, col + 1),
            d=Plaquette(row, col),
        )

    @property
    def corner(self) -> tuple[int, int]:
        return self.d.row, self.d.col

    @property
    def ad_col(self) -> int:
        return self.a.col

    @property
    def bc_col(self) -> int:
        return self.b.col

    @property
    def ab_row(self) -> int:
        return self.a.row

    @property
    def cd_row(self) -> int:
        return self.d.row

    def edge(self, r: int) -> Edge:
        """The single defect-line check measured at round r."""
        y, x = self.corner
        return (
            Edge("XX", y, x - 1),  # between A and D
            Edge("ZZ", y, x),  # between A and B
            Edge("XX", y, x),  # between B and C
            Edge("ZZ", y - 1, x),  # between C and D
        )[r % 4]

    def validate(self, layout: CodeLayout) -> None:
        y, x = self.corner
        if not (1 <= y <= layout.rows - 2 and 1 <= x <= layout.cols - 2):
            raise ValueError(f"defect at corner {self.corner} is not made of interior plaquettes")


def _spread(count: int, size: int) -> list[int]:
    """Lower-left corner coordinates of ``count`` defects along one axis of plaquettes 1..size-1."""
    free = size - 1 - 2 * count
    if free < 0:
        raise ValueError(f"{count} defects do not fit along a side of {size}")
    cuts = [(i * free) // (count + 1) for i in range(count + 2)]
    gaps = [cuts[i + 1] - cuts[i] for i in range(count + 1)]
    out, pos = [], 1
    for t in range(count):
        pos += gaps[t]
        out.append(pos)
        pos += 2
    return out


def place_defects(d: int, k: int = 1, mode: str = "grid") -> list[DefectSite]:
    """Defect placement on a d x d lattice.

    * k = 1: the central placement (odd and even d differ by one row).
    * k = m*m, mode "grid": an m x m grid with the leftover plaquettes spread
      as evenly as possible over the m+1 gaps on each axis.
    * mode "dense": d = 3q + 2 and k = q*q, one plaquette between neighbours
      and to the boundary.
    """
    m = int(round(k**0.5))
    if k < 1 or m * m != k:
        raise ValueError(f"defect count {k} is not a perfect square")
    if mode == "dense":
        if (d - 2) % 3 or (d - 2) // 3 != m:
            raise ValueError(f"dense mode needs d = 3q+2 with k = q^2; got d={d}, k={k}")
        corners = [3 * t + 2 for t in range(m)]
        sites = [DefectSite.at_corner(y, x) for y in corners for x in corners]
    elif mode == "grid":
        if k == 1:
            if d < 3:
                raise ValueError("a defect needs d >= 3")
            x = (d - 1) // 2 if d % 2 else d // 2 - 1
            y = (d - 1) // 2 if d % 2 else d // 2
            sites = [DefectSite.at_corner(y, x)]
        else:
            axis = _spread(m, d)
            sites = [DefectSite.at_corner(y, x) for y in axis for x in axis]
    else:
        raise ValueError(f"unknown placement mode {mode!r}")
    layout = CodeLayout.square(d)
    for s in sites:
        s.validate(layout)
    return sites


@dataclass(frozen=True)
class RoundSpec:
    round_index: int
    edges: tuple[Edge, ...]
    defect_edges: tuple[Edge, ...]
    layout: CodeLayout

    @property
    def kind(self) -> str:
        return ROUND_KIND[self.round_index]

    @property
    def checks(self) -> list[PauliString]:
        return [e.pauli(self.layout) for e in self.edges]


def build_round(layout: CodeLayout, defects: Sequence[DefectSite], r: int) -> RoundSpec:
    if r not in (0, 1, 2, 3):
        raise ValueError(f"round index must be 0..3, got {r}")
    if r % 2 == 0:
        skip = {s.ad_col if r == 0 else s.bc_col for s in defects}
        edges = [
            Edge("XX", row, c)
            for row in range(layout.rows)
            for c in range(layout.cols - 1)
            if c + 1 not in skip
        ]
    else:
        skip = {s.ab_row if r == 1 else s.cd_row for s in defects}
        edges = [
            Edge("ZZ", row, c)
            for row in range(layout.rows - 1)
            for c in range(layout.cols)
            if row + 1 not in skip
        ]
    defect_edges = tuple(s.edge(r) for s in defects)
    edges = sorted(set(edges) | set(defect_edges), key=lambda e: (e.row, e.col))
    return RoundSpec(r, tuple(edges), defect_edges, layout)


@dataclass(frozen=True)
class FloquetSchedule:
    layout: CodeLayout
    defects: tuple[DefectSite, ...]
    rounds: tuple[RoundSpec, ...]

    @staticmethod
    def build(d: int, defects: Sequence[DefectSite]) -> "FloquetSchedule":
        layout = CodeLayout.square(d)
        for s in defects:
            s.validate(layout)
        rounds = tuple(build_round(layout, defects, r) for r in range(4))
        return FloquetSchedule(layout, tuple(defects), rounds)

    @staticmethod
    def bacon_shor(d: int) -> "FloquetSchedule":
        """The plain period-2 schedule (all XX, then all ZZ), as two rounds."""
        layout = CodeLayout.square(d)
        xx = tuple(Edge("XX", r, c) for r in range(d) for c in range(d - 1))
        zz = tuple(Edge("ZZ", r, c) for r in range(d - 1) for c in range(d))
        return FloquetSchedule(layout, (), (RoundSpec(0, xx, (), layout), RoundSpec(1, zz, (), layout)))

    @property
    def period(self) -> int:
        return len(self.rounds)

    def dump(self) -> str:
        lines = []
        for rs in self.rounds:
            lines.append(f"ROUND {rs.round_index}")
            lines.extend(c.literal() for c in rs.checks)
        return "\n".join(lines) + "\n"

    @staticmethod
    def parse_dump(text: str) -> list[list[PauliString]]:
        rounds: list[list[PauliString]] = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("ROUND"):
                rounds.append([])
            else:
                if not rounds:
                    raise ValueError("check literal before the first ROUND header")
                rounds[-1].append(PauliString.parse(line))
        return rounds


# ---------------------------------------------------------------------------
# Instantaneous stabilizer groups


def grow_group(gens: list[PauliString], m: PauliString) -> int | None:
    """Update a measured-operator group in place after measuring m.

    Returns the index of the removed generator when m anticommuted with the
    group, else None.  Phases are dropped.
    """
    m = m.unsigned()
    anti = [i for i, v in enumerate(gens) if not commutes(m, v)]
    if not anti:
        if not PauliGroupBasis.from_operators(m.n_qubits, gens).contains(m):
            gens.append(m)
        return None
    first = anti[0]
    v1 = gens[first]
    for j in anti[1:]:
        gens[j] = multiply(gens[j], v1).unsigned()
    del gens[first]
    gens.append(m)
    return first


@dataclass
class ISG:
    round_index: int
    basis: PauliGroupBasis
    measured: PauliGroupBasis = field(default=None)

    def contains(self, op: PauliString) -> bool:
        return self.basis.contains(op)


def compute_isgs(layout: CodeLayout, defects: Sequence[DefectSite], cycles: int = 3) -> list[ISG]:
    """Run the noiseless schedule from |0...0> and return the steady-state ISGs.

    ``basis`` is the full stabilizer group of the state (rank n, including the
    logical Z operators fixed by the reset).  ``measured`` is the subgroup
    generated by the measurements alone, the code's ISG proper.
    """
    if cycles < 3:
        raise ValueError("steady state is checked between cycles 2 and 3")
    rounds = [build_round(layout, defects, r) for r in range(4)]
    state = StabilizerState(layout.n)
    gens: list[PauliString] = []
    history: list[list[tuple[PauliGroupBasis, PauliGroupBasis]]] = []
    for _ in range(cycles):
        per_round = []
        for rs in rounds:
            for check in rs.checks:
                state.measure(check)
                grow_group(gens, check)
            per_round.append(
                (state.stabilizer_group(), PauliGroupBasis.from_operators(layout.n, gens))
            )
        history.append(per_round)
    for r in range(4):
        for c in range(1, cycles - 1):
            a, b = history[c][r], history[c + 1][r]
            if not (a[0].same_group(b[0]) and a[1].same_group(b[1])):
                raise RuntimeError(f"ISG of round {r} not periodic between cycles {c + 1} and {c + 2}")
    return [ISG(r, history[1][r][0], history[1][r][1]) for r in range(4)]


# ---------------------------------------------------------------------------
# Dynamical logicals and their preservation


@dataclass(frozen=True)
class DynamicalLogicalPair:
    round_index: int
    x_op: PauliString
    z_op: PauliString
    defect: DefectSite


def _virtuals(layout: CodeLayout, s: DefectSite) -> tuple[dict, dict]:
    X = {name: virtual_x(layout, getattr(s, name)) for name in "abcd"}
    Z = {name: virtual_z(layout, getattr(s, name)) for name in "abcd"}
    return X, Z


def _prod(layout: CodeLayout, ops: Iterable[PauliString]) -> PauliString:
    out = PauliString(layout.n)
    for op in ops:
        out = multiply(out, op)
    return out


# Logical pair per round, as the plaquettes whose virtual operators multiply.
LOGICAL_TABLE = {
    0: ("a", "ad"),
    1: ("ab", "b"),
    2: ("b", "bc"),
    3: ("cd", "c"),
}

# Rows of the s-operator table: (s_x^(r), s_x^(r-1), s_z^(r), s_z^(r-1)).
S_TABLE = {
    0: ("adc", "", "", "cda"),
    1: ("", "b", "dab", ""),
    2: ("a", "", "", "c"),
    3: ("", "bcd", "b", ""),
}


def dynamical_logicals(layout: CodeLayout, defect: DefectSite, r: int) -> DynamicalLogicalPair:
    X, Z = _virtuals(layout, defect)
    xs, zs = LOGICAL_TABLE[r % 4]
    return DynamicalLogicalPair(
        r % 4, _prod(layout, (X[c] for c in xs)), _prod(layout, (Z[c] for c in zs)), defect
    )


@dataclass(frozen=True)
class SOperators:
    sx_now: PauliString
    sx_prev: PauliString
    sz_now: PauliString
    sz_prev: PauliString


def s_operators(layout: CodeLayout, defect: DefectSite, r: int) -> SOperators:
    X, Z = _virtuals(layout, defect)
    sxn, sxp, szn, szp = S_TABLE[r % 4]
    return SOperators(
        _prod(layout, (X[c] for c in sxn)),
        _prod(layout, (X[c] for c in sxp)),
        _prod(layout, (Z[c] for c in szn)),
        _prod(layout, (Z[c] for c in szp)),
    )


@dataclass
class PreservationResult:
    round_index: int
    x_ok: bool
    z_ok: bool
    x_phase_equal: bool
    z_phase_equal: bool
    membership_ok: bool
    diff: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.x_ok and self.z_ok and self.membership_ok


def check_preservation(
    layout: CodeLayout,
    defect: DefectSite,
    r: int,
    isgs: Sequence[ISG] | None = None,
) -> PreservationResult:
    """Verify s^(r) L^(r) == s^(r-1) L^(r-1) for the X and Z logicals.

    When ISGs are supplied, also check s^(r) in S^(r) and s^(r-1) in S^(r-1)
    using the measurement-generated groups.
    """
    r %= 4
    s = s_operators(layout, defect, r)
    now = dynamical_logicals(layout, defect, r)
    prev = dynamical_logicals(layout, defect, r - 1)
    lhs_x, rhs_x = multiply(s.sx_now, now.x_op), multiply(s.sx_prev, prev.x_op)
    lhs_z, rhs_z = multiply(s.sz_now, now.z_op), multiply(s.sz_prev, prev.z_op)
    diff = []
    x_ok = same_up_to_phase(lhs_x, rhs_x)
    z_ok = same_up_to_phase(lhs_z, rhs_z)
    if not x_ok:
        diff.append(f"X: {lhs_x} != {rhs_x}")
    if not z_ok:
        diff.append(f"Z: {lhs_z} != {rhs_z}")
    membership_ok = True
    if isgs is not None:
        here, before = isgs[r].measured, isgs[(r - 1) % 4].measured
        for name, op, group in (
            ("s_x^(r)", s.sx_now, here),
            ("s_x^(r-1)", s.sx_prev, before),
            ("s_z^(r)", s.sz_now, here),
            ("s_z^(r-1)", s.sz_prev, before),
        ):
            if not group.contains(op):
                membership_ok = False
                diff.append(f"{name} = {op} not in its ISG")
    return PreservationResult(
        r, x_ok, z_ok, lhs_x.phase == rhs_x.phase, lhs_z.phase == rhs_z.phase, membership_ok, diff
    )


def static_logicals(layout: CodeLayout) -> tuple[PauliString, PauliString]:
    return virtual_x(layout, Plaquette(0, 0)), virtual_z(layout, Plaquette(0, 0))


def permanent_stabilizers(layout: CodeLayout) -> PauliGroupBasis:
    return stabilizer_group(layout)
