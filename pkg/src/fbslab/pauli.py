"""Pauli operators over GF(2) with exact phase tracking.

An operator is stored as ``i**phase * X(x_mask) * Z(z_mask)``: the X factors
are written to the left of the Z factors.  With that ordering ``X*Z == -iY``,
so a single-qubit ``Y`` has ``x=z=1`` and ``phase=1``.

Bit ``q`` of a mask refers to qubit ``q``.  Python integers act as packed
bit-vectors, so every set operation is word-parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

# Phase of the product X*Z relative to Y, as a power of i (X*Z = i**3 * Y).
XZ_PHASE_OF_Y = 3

_SIGN_PREFIXES = {"+": 0, "+i": 1, "-": 2, "-i": 3}
_PREFIX_OF = {0: "+", 1: "+i", 2: "-", 3: "-i"}


def popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x_mask: int = 0
    z_mask: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.n_qubits < 0:
            raise ValueError("n_qubits must be non-negative")
        limit = 1 << self.n_qubits
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise ValueError("mask has bits outside the qubit range")
        object.__setattr__(self, "phase", self.phase % 4)

    @staticmethod
    def identity(n: int) -> "PauliString":
        return PauliString(n)

    @staticmethod
    def hermitian(n: int, x_mask: int, z_mask: int, negative: bool = False) -> "PauliString":
        """Build the Hermitian operator whose literal sign is + (or - if negative)."""
        phase = popcount(x_mask & z_mask) + (2 if negative else 0)
        return PauliString(n, x_mask, z_mask, phase)

    @staticmethod
    def from_sparse(n: int, paulis: dict[int, str], negative: bool = False) -> "PauliString":
        """``from_sparse(5, {0: 'X', 3: 'Z'})`` is X on qubit 0 and Z on qubit 3."""
        x = z = 0
        for q, p in paulis.items():
            if not 0 <= q < n:
                raise ValueError(f"qubit {q} out of range for n={n}")
            if p in "XY":
                x |= 1 << q
            if p in "ZY":
                z |= 1 << q
            if p not in "IXYZ":
                raise ValueError(f"unknown Pauli {p!r}")
        return PauliString.hermitian(n, x, z, negative)

    @staticmethod
    def x_type(n: int, qubits: Iterable[int]) -> "PauliString":
        return PauliString(n, _mask(qubits), 0)

    @staticmethod
    def z_type(n: int, qubits: Iterable[int]) -> "PauliString":
        return PauliString(n, 0, _mask(qubits))

    @staticmethod
    def parse(text: str) -> "PauliString":
        """Parse a literal such as ``"+XXIII"`` or ``"-iYZ"``."""
        text = text.strip()
        for prefix in ("+i", "-i", "+", "-"):
            if text.startswith(prefix):
                sign = _SIGN_PREFIXES[prefix]
                body = text[len(prefix):]
                break
        else:
            raise ValueError(f"Pauli literal needs a sign prefix: {text!r}")
        x = z = 0
        for q, ch in enumerate(body):
            if ch == "X":
                x |= 1 << q
            elif ch == "Z":
                z |= 1 << q
            elif ch == "Y":
                x |= 1 << q
                z |= 1 << q
            elif ch not in "I_":
                raise ValueError(f"bad character {ch!r} in Pauli literal")
        return PauliString(len(body), x, z, sign + popcount(x & z))

    def literal(self) -> str:
        sign = (self.phase - popcount(self.x_mask & self.z_mask)) % 4
        chars = []
        for q in range(self.n_qubits):
            bx = (self.x_mask >> q) & 1
            bz = (self.z_mask >> q) & 1
            chars.append("IXZY"[bx | (bz << 1)])
        return _PREFIX_OF[sign] + "".join(chars)

    def __str__(self) -> str:
        return self.literal()

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    @property
    def support(self) -> int:
        return self.x_mask | self.z_mask

    @property
    def weight(self) -> int:
        return popcount(self.x_mask | self.z_mask)

    @property
    def is_hermitian(self) -> bool:
        return (self.phase - popcount(self.x_mask & self.z_mask)) % 2 == 0

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    @property
    def sign(self) -> int:
        """The literal sign as a power of i (0 for '+', 2 for '-')."""
        return (self.phase - popcount(self.x_mask & self.z_mask)) % 4

    def unsigned(self) -> "PauliString":
        return PauliString.hermitian(self.n_qubits, self.x_mask, self.z_mask)

    def negated(self) -> "PauliString":
        return PauliString(self.n_qubits, self.x_mask, self.z_mask, self.phase + 2)

    def vector(self) -> int:
        """Symplectic vector packed as x | z << n (X block in the low bits)."""
        return self.x_mask | (self.z_mask << self.n_qubits)

    def qubits(self) -> list[int]:
        s = self.support
        return [q for q in range(self.n_qubits) if (s >> q) & 1]


def _mask(qubits: Iterable[int]) -> int:
    m = 0
    for q in qubits:
        m |= 1 << q
    return m


def _check_sizes(a: PauliString, b: PauliString) -> None:
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Exact product a*b.  Moving Z(za) past X(xb) costs (-1)**|za & xb|."""
    _check_sizes(a, b)
    phase = a.phase + b.phase + 2 * popcount(a.z_mask & b.x_mask)
    return PauliString(a.n_qubits, a.x_mask ^ b.x_mask, a.z_mask ^ b.z_mask, phase)


def product(ops: Iterable[PauliString], n: int) -> PauliString:
    out = PauliString(n)
    for op in ops:
        out = multiply(out, op)
    return out


def commutes(a: PauliString, b: PauliString) -> bool:
    _check_sizes(a, b)
    return popcount((a.x_mask & b.z_mask) ^ (a.z_mask & b.x_mask)) % 2 == 0


def weight(a: PauliString) -> int:
    return a.weight


def same_up_to_phase(a: PauliString, b: PauliString) -> bool:
    return a.n_qubits == b.n_qubits and a.x_mask == b.x_mask and a.z_mask == b.z_mask


# ---------------------------------------------------------------------------
# GF(2) linear algebra on packed vectors


class EchelonTable:
    """Incremental row echelon form keyed by each row's lowest set bit.

    Each stored row also carries a bitmask over the indices of the original
    vectors that combine into it, so decompositions come for free.
    """

    def __init__(self):
        self.rows: dict[int, tuple[int, int]] = {}

    def reduce(self, v: int) -> tuple[int, int]:
        """Return (residual, combination) with v == residual ^ span(combination)."""
        combo = 0
        rows = self.rows
        while v:
            low = v & -v
            hit = rows.get(low)
            if hit is None:
                return v, combo
            v ^= hit[0]
            combo ^= hit[1]
        return 0, combo

    def insert(self, v: int, tag: int) -> bool:
        """Insert v with combination bitmask ``tag``; False if v was dependent."""
        res, combo = self.reduce(v)
        if res == 0:
            return False
        self.rows[res & -res] = (res, combo ^ tag)
        return True

    def __len__(self) -> int:
        return len(self.rows)


def gf2_rank(vectors: Iterable[int]) -> int:
    table = EchelonTable()
    for v in vectors:
        table.insert(v, 0)
    return len(table)


def gf2_nullspace(rows: Sequence[int], n_cols: int) -> list[int]:
    """Basis of {v : popcount(row & v) even for every row}."""
    pivots: dict[int, int] = {}  # pivot column -> fully reduced row
    for r in rows:
        for col, pr in pivots.items():
            if (r >> col) & 1:
                r ^= pr
        if r == 0:
            continue
        col = (r & -r).bit_length() - 1
        for c in list(pivots):
            if (pivots[c] >> col) & 1:
                pivots[c] ^= r
        pivots[col] = r
    basis = []
    for free in range(n_cols):
        if free in pivots:
            continue
        v = 1 << free
        for col, pr in pivots.items():
            if (pr >> free) & 1:
                v |= 1 << col
        basis.append(v)
    return basis


def gf2_rref(rows: Iterable[int]) -> list[int]:
    """Fully reduced row echelon form, pivots at each row's lowest set bit."""
    pivots: dict[int, int] = {}
    for r in rows:
        for low, pr in pivots.items():
            if r & low:
                r ^= pr
        if r == 0:
            continue
        low = r & -r
        for k in list(pivots):
            if pivots[k] & low:
                pivots[k] ^= r
        pivots[low] = r
    return [pivots[k] for k in sorted(pivots)]


@dataclass
class MembershipResult:
    in_group: bool
    decomposition: tuple[int, ...] | None
    phase_match: bool | None = None


@dataclass
class PauliGroupBasis:
    """An independent generating set of a Pauli group (phases kept, mostly ignored)."""

    n_qubits: int
    generators: tuple[PauliString, ...] = ()
    _table: EchelonTable = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.generators = tuple(self.generators)
        table = EchelonTable()
        for i, g in enumerate(self.generators):
            if g.n_qubits != self.n_qubits:
                raise ValueError("generator size mismatch")
            if not table.insert(g.vector(), 1 << i):
                raise ValueError(f"generator {i} ({g}) is dependent on earlier ones")
        self._table = table

    @staticmethod
    def from_operators(n: int, ops: Iterable[PauliString]) -> "PauliGroupBasis":
        """Keep the independent operators of ``ops`` in order, dropping the rest."""
        table = EchelonTable()
        kept = []
        for op in ops:
            if table.insert(op.vector(), 1 << len(kept)):
                kept.append(op)
        return PauliGroupBasis(n, tuple(kept))

    @property
    def rank(self) -> int:
        return len(self.generators)

    def __len__(self) -> int:
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)

    def contains(self, op: PauliString) -> bool:
        res, _ = self._table.reduce(op.vector())
        return res == 0

    def decompose(self, op: PauliString) -> tuple[int, ...] | None:
        res, combo = self._table.reduce(op.vector())
        if res:
            return None
        return tuple(i for i in range(len(self.generators)) if (combo >> i) & 1)

    def element(self, indices: Iterable[int]) -> PauliString:
        return product((self.generators[i] for i in sorted(indices)), self.n_qubits)

    def is_subgroup_of(self, other: "PauliGroupBasis") -> bool:
        return all(other.contains(g) for g in self.generators)

    def same_group(self, other: "PauliGroupBasis") -> bool:
        """Phase-insensitive group equality by mutual membership."""
        return self.rank == other.rank and self.is_subgroup_of(other)

    def extended(self, ops: Iterable[PauliString]) -> "PauliGroupBasis":
        return PauliGroupBasis.from_operators(self.n_qubits, list(self.generators) + list(ops))

    def is_abelian(self) -> bool:
        gens = self.generators
        return all(commutes(gens[i], gens[j]) for i in range(len(gens)) for j in range(i))

    def literals(self) -> list[str]:
        return [g.literal() for g in self.generators]


def rank_and_membership(
    basis: PauliGroupBasis, candidate: PauliString, phase_exact: bool = False
) -> MembershipResult:
    """Decide whether ``candidate`` lies in the group, up to phase.

    The decomposition lists generator indices; the product of those generators
    taken in increasing index order is the reference for the phase comparison.
    """
    decomposition = basis.decompose(candidate)
    if decomposition is None:
        return MembershipResult(False, None, False if phase_exact else None)
    phase_match = None
    if phase_exact:
        phase_match = basis.element(decomposition).phase == candidate.phase
    return MembershipResult(True, decomposition, phase_match)


def centralizer_basis(group: PauliGroupBasis, n: int | None = None) -> PauliGroupBasis:
    """All Paulis commuting with every generator, as a Hermitian basis."""
    n = group.n_qubits if n is None else n
    # <P, g> = x_P . z_g + z_P . x_g; swap the blocks of g to get a dot product.
    rows = [g.z_mask | (g.x_mask << n) for g in group.generators]
    full = (1 << n) - 1
    ops = [
        PauliString.hermitian(n, v & full, v >> n) for v in gf2_nullspace(rows, 2 * n)
    ]
    return PauliGroupBasis(n, tuple(ops))


def intersection(a: PauliGroupBasis, b: PauliGroupBasis) -> PauliGroupBasis:
    """Phase-insensitive intersection of two groups (Zassenhaus construction)."""
    n = a.n_qubits
    width = 2 * n
    table = EchelonTable()
    for g in a.generators:
        v = g.vector()
        table.insert(v | (v << width), 0)
    for g in b.generators:
        table.insert(g.vector(), 0)
    full = (1 << n) - 1
    ops = []
    for low, (row, _) in sorted(table.rows.items()):
        if low >> width:
            w = row >> width
            ops.append(PauliString.hermitian(n, w & full, w >> n))
    return PauliGroupBasis.from_operators(n, ops)


def center(group: PauliGroupBasis) -> PauliGroupBasis:
    return intersection(centralizer_basis(group), group)
