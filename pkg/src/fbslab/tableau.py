"""Stabilizer tableau simulator with native Pauli-product measurement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import PauliGroupBasis, PauliString, popcount


@dataclass(frozen=True)
class RandomStream:
    """Counter-based random stream; (seed, stream_id) fixes every draw."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = (self.seed & (2**64 - 1)) | ((self.stream_id & (2**64 - 1)) << 64)
        return np.random.Generator(np.random.Philox(key=key))


@dataclass
class MeasurementRecord:
    index: int
    operator: PauliString
    outcome: int
    deterministic: bool

    @property
    def bit(self) -> int:
        return 0 if self.outcome == 1 else 1


class StabilizerState:
    """Tableau of n stabilizer and n destabilizer rows.

    Row i is ``i**phase[i] * X(x[i]) * Z(z[i])``; stabilizer rows are 0..n-1 and
    destabilizer rows n..2n-1.
    """

    def __init__(self, n: int, rng: RandomStream | np.random.Generator | None = None):
        if n < 1:
            raise ValueError("need at least one qubit")
        self.n = n
        self.x = [0] * n + [1 << q for q in range(n)]
        self.z = [1 << q for q in range(n)] + [0] * n
        self.phase = [0] * (2 * n)
        if isinstance(rng, RandomStream):
            rng = rng.generator()
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.records: list[MeasurementRecord] = []

    # -- inspection ---------------------------------------------------------
    def _row(self, i: int) -> PauliString:
        return PauliString(self.n, self.x[i], self.z[i], self.phase[i])

    @property
    def stabilizers(self) -> list[PauliString]:
        return [self._row(i) for i in range(self.n)]

    @property
    def destabilizers(self) -> list[PauliString]:
        return [self._row(i) for i in range(self.n, 2 * self.n)]

    def stabilizer_group(self) -> PauliGroupBasis:
        return PauliGroupBasis(self.n, tuple(self.stabilizers))

    def copy(self) -> "StabilizerState":
        other = StabilizerState.__new__(StabilizerState)
        other.n = self.n
        other.x = list(self.x)
        other.z = list(self.z)
        other.phase = list(self.phase)
        other.rng = self.rng
        other.records = list(self.records)
        return other

    def check_invariants(self) -> None:
        n = self.n
        for i in range(2 * n):
            for j in range(i):
                anti = popcount((self.x[i] & self.z[j]) ^ (self.z[i] & self.x[j])) & 1
                expected = 1 if (i >= n) != (j >= n) and i % n == j % n else 0
                if anti != expected:
                    raise AssertionError(f"tableau rows {j} and {i} have wrong commutation")
        for i in range(n):
            if (self.phase[i] - popcount(self.x[i] & self.z[i])) % 2:
                raise AssertionError(f"stabilizer row {i} is not Hermitian")

    # -- updates ------------------------------------------------------------
    def _anticommutes(self, i: int, x: int, z: int) -> bool:
        return popcount((self.x[i] & z) ^ (self.z[i] & x)) & 1 == 1

    def _mul_into(self, i: int, j: int) -> None:
        """row_i <- row_j * row_i."""
        self.phase[i] = (self.phase[j] + self.phase[i] + 2 * popcount(self.z[j] & self.x[i])) % 4
        self.x[i] ^= self.x[j]
        self.z[i] ^= self.z[j]

    def apply_pauli(self, err: PauliString) -> None:
        if err.n_qubits != self.n:
            raise ValueError("size mismatch")
        for i in range(2 * self.n):
            if self._anticommutes(i, err.x_mask, err.z_mask):
                self.phase[i] = (self.phase[i] + 2) % 4

    def peek(self, op: PauliString) -> int | None:
        """Outcome (+1/-1) if op is determined by the state, else None."""
        n = self.n
        x, z = op.x_mask, op.z_mask
        for i in range(n):
            if self._anticommutes(i, x, z):
                return None
        acc_x = acc_z = acc_p = 0
        for i in range(n):
            if self._anticommutes(n + i, x, z):
                acc_p = (acc_p + self.phase[i] + 2 * popcount(acc_z & self.x[i])) % 4
                acc_x ^= self.x[i]
                acc_z ^= self.z[i]
        if acc_x != x or acc_z != z:
            raise AssertionError("commuting operator not in stabilizer span")
        return 1 if acc_p == op.phase else -1

    def measure(self, op: PauliString) -> MeasurementRecord:
        if op.n_qubits != self.n:
            raise ValueError("size mismatch")
        if not op.is_hermitian:
            raise ValueError(f"cannot measure non-Hermitian operator {op}")
        n = self.n
        x, z = op.x_mask, op.z_mask
        pivot = next((i for i in range(n) if self._anticommutes(i, x, z)), None)
        if pivot is None:
            outcome = self.peek(op)
            deterministic = True
        else:
            for i in range(2 * n):
                if i != pivot and self._anticommutes(i, x, z):
                    self._mul_into(i, pivot)
            d = n + pivot
            self.x[d], self.z[d], self.phase[d] = self.x[pivot], self.z[pivot], self.phase[pivot]
            outcome = 1 if self.rng.integers(2) == 0 else -1
            self.x[pivot], self.z[pivot] = x, z
            self.phase[pivot] = op.phase if outcome == 1 else (op.phase + 2) % 4
            deterministic = False
        rec = MeasurementRecord(len(self.records), op, outcome, deterministic)
        self.records.append(rec)
        return rec

    def apply_depolarizing(self, qubit: int, p: float) -> str:
        _check_probability(p)
        if p == 0 or self.rng.random() >= p:
            return "I"
        choice = "XYZ"[int(self.rng.integers(3))]
        self.apply_pauli(PauliString.from_sparse(self.n, {qubit: choice}))
        return choice

    def apply_bitflip(self, qubit: int, p: float) -> str:
        _check_probability(p)
        if p == 0 or self.rng.random() >= p:
            return "I"
        self.apply_pauli(PauliString.from_sparse(self.n, {qubit: "X"}))
        return "X"


def _check_probability(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")


def reset_all_zero(n: int, rng: RandomStream | np.random.Generator | None = None) -> StabilizerState:
    return StabilizerState(n, rng)


def measure(state: StabilizerState, op: PauliString) -> MeasurementRecord:
    return state.measure(op)


def apply_pauli(state: StabilizerState, err: PauliString) -> None:
    state.apply_pauli(err)
