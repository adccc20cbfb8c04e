"""Bacon-Shor lattice geometry, checks and virtual-qubit operators.

Qubits sit at (row, col) with row 0 at the bottom of the lattice, so moving
"up" increases the row index.  The flat index is ``row * cols + col``.

A plaquette is named by its top-right corner: plaquette (b, a) spans rows
{b-1, b} and columns {a-1, a}.  Every plaquette with 0 <= b < L, 0 <= a < M
carries one virtual qubit:

* 1 <= b, 1 <= a: a gauge qubit,
* b == 0, a >= 1: a vertical X-type stabilizer (two full columns),
* a == 0, b >= 1: a horizontal Z-type stabilizer (two full rows),
* (0, 0): the logical qubit (X on the left column, Z on the bottom row).

virtual_x(b, a) is X on columns {a-1, a} for rows b..L-1 and virtual_z(b, a) is
Z on rows {b-1, b} for columns a..M-1; index -1 is simply dropped.  The X
operators of two plaquettes stacked vertically multiply to the XX check on
the edge between them, and likewise for Z side by side.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

from .pauli import PauliGroupBasis, PauliString, commutes, gf2_rref, multiply


@dataclass(frozen=True)
class CodeLayout:
    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 2 or self.cols < 2:
            raise ValueError(f"lattice must be at least 2x2, got {self.rows}x{self.cols}")

    @staticmethod
    def square(d: int) -> "CodeLayout":
        return CodeLayout(d, d)

    @property
    def n(self) -> int:
        return self.rows * self.cols

    def qubit_index(self, row: int, col: int) -> int:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise ValueError(f"qubit ({row}, {col}) outside {self.rows}x{self.cols} lattice")
        return row * self.cols + col

    def coords(self, q: int) -> tuple[int, int]:
        return divmod(q, self.cols)

    def row_mask(self, row: int) -> int:
        return ((1 << self.cols) - 1) << (row * self.cols)

    def col_mask(self, col: int) -> int:
        return sum(1 << (r * self.cols + col) for r in range(self.rows))


class Plaquette(NamedTuple):
    row: int
    col: int

    def shifted(self, drow: int, dcol: int) -> "Plaquette":
        return Plaquette(self.row + drow, self.col + dcol)


class Edge(NamedTuple):
    """A weight-2 check.  XX joins (row, col)-(row, col+1); ZZ joins (row, col)-(row+1, col)."""

    kind: str
    row: int
    col: int

    def qubit_pairs(self) -> tuple[tuple[int, int], tuple[int, int]]:
        if self.kind == "XX":
            return (self.row, self.col), (self.row, self.col + 1)
        return (self.row, self.col), (self.row + 1, self.col)

    def qubits(self, layout: CodeLayout) -> tuple[int, int]:
        a, b = self.qubit_pairs()
        return layout.qubit_index(*a), layout.qubit_index(*b)

    def pauli(self, layout: CodeLayout) -> PauliString:
        q0, q1 = self.qubits(layout)
        mask = (1 << q0) | (1 << q1)
        if self.kind == "XX":
            return PauliString(layout.n, mask, 0)
        return PauliString(layout.n, 0, mask)

    @property
    def plaquette_line(self) -> int:
        """Plaquette column holding an XX edge, or plaquette row holding a ZZ edge."""
        return self.col + 1 if self.kind == "XX" else self.row + 1


def xx_check(layout: CodeLayout, row: int, col: int) -> PauliString:
    """XX on (row, col) and (row, col+1)."""
    if not (0 <= row < layout.rows and 0 <= col < layout.cols - 1):
        raise ValueError(f"no horizontal edge at ({row}, {col})")
    return Edge("XX", row, col).pauli(layout)


def zz_check(layout: CodeLayout, row: int, col: int) -> PauliString:
    """ZZ on (row, col) and (row+1, col)."""
    if not (0 <= row < layout.rows - 1 and 0 <= col < layout.cols):
        raise ValueError(f"no vertical edge at ({row}, {col})")
    return Edge("ZZ", row, col).pauli(layout)


def xx_edges(layout: CodeLayout) -> Iterator[Edge]:
    for r in range(layout.rows):
        for c in range(layout.cols - 1):
            yield Edge("XX", r, c)


def zz_edges(layout: CodeLayout) -> Iterator[Edge]:
    for r in range(layout.rows - 1):
        for c in range(layout.cols):
            yield Edge("ZZ", r, c)


def all_checks(layout: CodeLayout) -> list[PauliString]:
    return [e.pauli(layout) for e in xx_edges(layout)] + [
        e.pauli(layout) for e in zz_edges(layout)
    ]


def _check_plaquette(layout: CodeLayout, p: Plaquette) -> None:
    if not (0 <= p.row < layout.rows and 0 <= p.col < layout.cols):
        raise ValueError(f"plaquette {tuple(p)} outside {layout.rows}x{layout.cols} lattice")


def plaquette_kind(layout: CodeLayout, p: Plaquette) -> str:
    _check_plaquette(layout, p)
    if p.row == 0 and p.col == 0:
        return "logical"
    if p.row == 0:
        return "x_stabilizer"
    if p.col == 0:
        return "z_stabilizer"
    return "gauge"


def virtual_x(layout: CodeLayout, p: Plaquette | tuple[int, int]) -> PauliString:
    p = Plaquette(*p)
    _check_plaquette(layout, p)
    cols = [c for c in (p.col - 1, p.col) if c >= 0]
    mask = 0
    for r in range(p.row, layout.rows):
        for c in cols:
            mask |= 1 << layout.qubit_index(r, c)
    return PauliString(layout.n, mask, 0)


def virtual_z(layout: CodeLayout, p: Plaquette | tuple[int, int]) -> PauliString:
    p = Plaquette(*p)
    _check_plaquette(layout, p)
    rows = [r for r in (p.row - 1, p.row) if r >= 0]
    mask = 0
    for c in range(p.col, layout.cols):
        for r in rows:
            mask |= 1 << layout.qubit_index(r, c)
    return PauliString(layout.n, 0, mask)


def plaquettes(layout: CodeLayout) -> Iterator[Plaquette]:
    for b in range(layout.rows):
        for a in range(layout.cols):
            yield Plaquette(b, a)


def gauge_plaquettes(layout: CodeLayout) -> Iterator[Plaquette]:
    for b in range(1, layout.rows):
        for a in range(1, layout.cols):
            yield Plaquette(b, a)


def x_stabilizer(layout: CodeLayout, col: int) -> PauliString:
    """Product of all XX checks between columns col-1 and col."""
    return virtual_x(layout, Plaquette(0, col))


def z_stabilizer(layout: CodeLayout, row: int) -> PauliString:
    """Product of all ZZ checks between rows row-1 and row."""
    return virtual_z(layout, Plaquette(row, 0))


def logical_x(layout: CodeLayout) -> PauliString:
    return virtual_x(layout, Plaquette(0, 0))


def logical_z(layout: CodeLayout) -> PauliString:
    return virtual_z(layout, Plaquette(0, 0))


@dataclass(frozen=True)
class CodeParameters:
    n: int
    k: int
    g: int
    s: int


def code_parameters(layout: CodeLayout) -> CodeParameters:
    L, M = layout.rows, layout.cols
    return CodeParameters(n=L * M, k=1, g=(L - 1) * (M - 1), s=(L - 1) + (M - 1))


def gauge_group(layout: CodeLayout) -> PauliGroupBasis:
    return PauliGroupBasis(layout.n, tuple(all_checks(layout)))


def stabilizer_group(layout: CodeLayout) -> PauliGroupBasis:
    gens = [x_stabilizer(layout, a) for a in range(1, layout.cols)]
    gens += [z_stabilizer(layout, b) for b in range(1, layout.rows)]
    return PauliGroupBasis(layout.n, tuple(gens))


def virtual_operators(layout: CodeLayout) -> list[tuple[str, Plaquette, PauliString]]:
    """Stabilizer, gauge and logical virtual operators in canonical order, X before Z.

    Destabilizers are left out, so these span the centralizer of the stabilizer group.
    """
    stab_x = [Plaquette(0, a) for a in range(1, layout.cols)]
    stab_z = [Plaquette(b, 0) for b in range(1, layout.rows)]
    gauge = list(gauge_plaquettes(layout))
    out = [("X", p, virtual_x(layout, p)) for p in stab_x]
    out += [("Z", p, virtual_z(layout, p)) for p in stab_z]
    out += [("X", p, virtual_x(layout, p)) for p in gauge]
    out += [("Z", p, virtual_z(layout, p)) for p in gauge]
    origin = Plaquette(0, 0)
    out += [("X", origin, virtual_x(layout, origin)), ("Z", origin, virtual_z(layout, origin))]
    return out


def to_virtual(layout: CodeLayout, op: PauliString, ops=None) -> int:
    """Bit i set when op contains the i-th virtual operator (phase ignored)."""
    ops = ops or virtual_operators(layout)
    v = 0
    for i, (kind, p, _) in enumerate(ops):
        partner = virtual_z(layout, p) if kind == "X" else virtual_x(layout, p)
        if not commutes(op, partner):
            v |= 1 << i
    return v


def from_virtual(layout: CodeLayout, v: int, ops=None) -> PauliString:
    ops = ops or virtual_operators(layout)
    out = PauliString(layout.n)
    for i, (_, _, op) in enumerate(ops):
        if (v >> i) & 1:
            out = multiply(out, op)
    return out.unsigned()


def virtual_canonical_basis(layout: CodeLayout, group: PauliGroupBasis) -> PauliGroupBasis:
    """Generators of ``group`` in fully reduced echelon form over virtual operators.

    For the groups met here this yields single virtual operators wherever the
    group contains them, plus the few two-plaquette products it fixes.
    """
    ops = virtual_operators(layout)
    rows = [to_virtual(layout, g, ops) for g in group.generators]
    return PauliGroupBasis(layout.n, tuple(from_virtual(layout, r, ops) for r in gf2_rref(rows)))
