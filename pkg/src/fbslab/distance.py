"""Code-distance tools: graphlike, brute force, ISG/subsystem and unmasked."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from .circuits import ScheduledCircuit
from .dem import BOUNDARY, DecodingGraph, GraphEdge, Mechanism, enumerate_mechanisms
from .pauli import (
    PauliGroupBasis,
    PauliString,
    centralizer_basis,
    commutes,
    intersection,
    multiply,
)
from .schedule import grow_group


@dataclass
class DistanceReport:
    value: float
    witness: object
    method: str
    exact: bool = True
    notes: str = ""

    def record(self) -> str:
        if isinstance(self.witness, PauliString):
            w = self.witness.literal()
        elif isinstance(self.witness, (list, tuple)):
            w = ";".join(_witness_item(x) for x in self.witness)
        else:
            w = str(self.witness)
        exact = "exact" if self.exact else "bound"
        line = f"method={self.method} value={self.value} {exact} witness={w}"
        return f"{line} notes={self.notes}" if self.notes else line


def _witness_item(x) -> str:
    if isinstance(x, GraphEdge):
        v = "B" if x.v == BOUNDARY else x.v
        return f"{x.u}-{v}:obs{x.obs_mask}"
    if isinstance(x, Mechanism):
        return f"{x.pauli}@{tuple(x.location)}"
    return str(x)


# ---------------------------------------------------------------------------
# graphlike distance


def graphlike_distance(graph: DecodingGraph, observables: Sequence[int] | None = None) -> DistanceReport:
    """Fewest graph edges forming a cycle (boundary counts as a node) with odd observable parity.

    For each observable j, nodes are doubled into parity layers and the answer
    is min over v of the layer-crossing distance from (v, 0) to (v, 1).
    """
    n = graph.num_detectors + 1
    edges = graph.edges
    obs_list = range(graph.num_observables) if observables is None else observables
    best_value, best_witness = math.inf, []
    for j in obs_list:
        pairs: dict[tuple[int, int], GraphEdge] = {}
        sources = set()
        for e in edges:
            u, v = graph.node(e.u), graph.node(e.v)
            bit = (e.obs_mask >> j) & 1
            for layer in (0, 1):
                a, b = u + layer * n, v + (layer ^ bit) * n
                key = (min(a, b), max(a, b))
                pairs.setdefault(key, e)
            if bit:
                sources.update((u, v))
        if not sources:
            continue
        rows = [k[0] for k in pairs] + [k[1] for k in pairs]
        cols = [k[1] for k in pairs] + [k[0] for k in pairs]
        adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(2 * n, 2 * n)).tocsr()
        adj.data[:] = 1.0
        src = sorted(sources)
        dist, pred = shortest_path(adj, unweighted=True, directed=False, indices=src, return_predecessors=True)
        cross = dist[np.arange(len(src)), np.array(src) + n]
        i = int(np.argmin(cross))
        value = cross[i]
        if value < best_value:
            path = [src[i] + n]
            while path[-1] != src[i]:
                path.append(int(pred[i, path[-1]]))
            witness = []
            for a, b in zip(path, path[1:]):
                witness.append(pairs[(min(a, b), max(a, b))])
            best_value, best_witness = value, witness
    if math.isinf(best_value):
        return DistanceReport(math.inf, [], "graphlike")
    report = DistanceReport(int(best_value), best_witness, "graphlike")
    if not validate_graph_witness(graph, best_witness):
        raise AssertionError("graphlike witness failed validation")
    return report


def validate_graph_witness(graph: DecodingGraph, witness: Sequence[GraphEdge]) -> bool:
    boundary: set[int] = set()
    obs = 0
    for e in witness:
        boundary ^= {e.u}
        if e.v != BOUNDARY:
            boundary ^= {e.v}
        obs ^= e.obs_mask
    return not boundary and obs != 0


# ---------------------------------------------------------------------------
# brute force over circuit mechanisms


def brute_force_distance(
    circuit: ScheduledCircuit, max_weight: int = 8, max_combinations: int = 5 * 10**7
) -> DistanceReport:
    """Smallest set of unit mechanisms (Y counted once) with no detection event and a logical flip.

    Mechanisms with identical signatures are merged first, since only the
    signature matters.
    """
    D = len(circuit.detectors)
    by_sig: dict[int, Mechanism] = {}
    for m in enumerate_mechanisms(circuit):
        sig = sum(1 << d for d in m.detectors) | (m.obs_mask << D)
        if sig and sig not in by_sig:
            by_sig[sig] = m
    sigs = list(by_sig)
    det_mask = (1 << D) - 1
    budget = 0
    for w in range(1, max_weight + 1):
        budget += math.comb(len(sigs), w)
        if budget > max_combinations:
            raise ValueError(f"instance too large: {len(sigs)} distinct mechanisms at weight {w}")
        hit = _search_weight(sigs, w, det_mask)
        if hit is not None:
            witness = [by_sig[s] for s in hit]
            return DistanceReport(w, witness, "brute_force")
    raise ValueError(f"no logical found up to weight {max_weight}")


def _search_weight(sigs: list[int], w: int, det_mask: int) -> tuple[int, ...] | None:
    # meet in the middle on the detector part: pair (w-1)-subsets with singles
    if w == 1:
        for s in sigs:
            if s & det_mask == 0:
                return (s,)
        return None
    for combo in itertools.combinations(sigs, w):
        acc = 0
        for s in combo:
            acc ^= s
        if acc & det_mask == 0 and acc:
            return combo
    return None


# ---------------------------------------------------------------------------
# algebraic distances


def _is_css(group: PauliGroupBasis) -> bool:
    return all(g.x_mask == 0 or g.z_mask == 0 for g in group.generators)


def min_weight_outside(
    centralizer_of: PauliGroupBasis,
    excluded: PauliGroupBasis,
    n: int,
    max_weight: int | None = None,
) -> tuple[int, PauliString | None, bool]:
    """Minimum weight of P commuting with ``centralizer_of`` and not in ``excluded``.

    Returns (weight, witness, exact).  CSS inputs are searched over pure X and
    pure Z supports, which suffices: if X(a)Z(b) qualifies then so does X(a) or
    Z(b).  Other inputs fall back to all 4**n Paulis (n <= 9).
    """
    if _is_css(centralizer_of) and _is_css(excluded):
        return _css_min_weight(centralizer_of, excluded, n, max_weight)
    if n > 9:
        raise ValueError("non-CSS exhaustive search is limited to n <= 9")
    return _full_min_weight(centralizer_of, excluded, n)


def _css_min_weight(U, G, n, max_weight):
    z_parts = [g.z_mask for g in U.generators if g.z_mask]
    x_parts = [g.x_mask for g in U.generators if g.x_mask]
    gx = PauliGroupBasis.from_operators(n, [g for g in G.generators if g.x_mask])
    gz = PauliGroupBasis.from_operators(n, [g for g in G.generators if g.z_mask])
    limit = n if max_weight is None else max_weight
    for w in range(1, limit + 1):
        for kind, checks, group in (("X", z_parts, gx), ("Z", x_parts, gz)):
            for mask in _kernel_vectors_of_weight(checks, n, w):
                op = PauliString(n, mask, 0) if kind == "X" else PauliString(n, 0, mask)
                if not group.contains(op):
                    return w, op, True
    return math.inf, None, max_weight is None


def _kernel_vectors_of_weight(checks: list[int], n: int, w: int, chunk: int = 1 << 20):
    """Yield n-bit masks of weight w whose overlap with every check is even."""
    checks_arr = np.array(checks, dtype=np.uint64) if checks else np.zeros(0, dtype=np.uint64)
    for block in _weight_blocks(n, w, chunk):
        ok = np.ones(block.shape[0], dtype=bool)
        for c in checks_arr:
            ok &= (np.bitwise_count(block & c) & 1) == 0
        for v in block[ok]:
            yield int(v)


def _weight_blocks(n: int, w: int, chunk: int):
    """All n-bit masks of weight w, as uint64 arrays, in lexicographic chunks."""
    if n > 64:
        raise ValueError("bit masks limited to 64 qubits")
    bits = np.array([1 << i for i in range(n)], dtype=np.uint64)
    buf = []
    size = 0
    for combo in itertools.combinations(range(n - 1, -1, -1), w - 1) if w > 1 else [()]:
        base = np.uint64(0)
        for i in combo:
            base |= bits[i]
        top = min(combo) if combo else n
        if top == 0:
            continue
        arr = base | bits[:top]
        buf.append(arr)
        size += len(arr)
        if size >= chunk:
            yield np.concatenate(buf)
            buf, size = [], 0
    if buf:
        yield np.concatenate(buf)


def _full_min_weight(U, G, n):
    """Enumerate all 4**n Paulis via vectorized symplectic checks (n <= 9)."""
    total = 1 << (2 * n)
    vecs = np.arange(total, dtype=np.uint64)
    xs = vecs & np.uint64((1 << n) - 1)
    zs = vecs >> np.uint64(n)
    ok = np.ones(total, dtype=bool)
    for g in U.generators:
        par = np.bitwise_count((xs & np.uint64(g.z_mask)) ^ (zs & np.uint64(g.x_mask))) & 1
        ok &= par == 0
    weights = np.bitwise_count(xs | zs)
    ok &= weights > 0
    cand = np.nonzero(ok)[0]
    order = cand[np.argsort(weights[cand], kind="stable")]
    for v in order:
        op = PauliString(n, int(xs[v]), int(zs[v]))
        if not G.contains(op):
            return int(weights[v]), op.unsigned(), True
    return math.inf, None, True


def isg_and_subsystem_distance(isgs: Sequence[PauliGroupBasis]) -> dict[str, DistanceReport]:
    """ISG distance: min over rounds of min wt(Z(S_r) minus S_r).

    Subsystem distance: for each pair of consecutive rounds, the gauge group
    G = <S_r, S_r+1>, stabilizer S = center(G), and min wt(Z(S) minus G).
    """
    n = isgs[0].n_qubits
    isg_best = (math.inf, None)
    for S in isgs:
        w, op, _ = min_weight_outside(S, S, n)
        if w < isg_best[0]:
            isg_best = (w, op)
    sub_best = (math.inf, None)
    for r in range(len(isgs)):
        G = isgs[r].extended(isgs[(r + 1) % len(isgs)].generators)
        S = intersection(centralizer_basis(G), G)
        w, op, _ = min_weight_outside(S, G, n)
        if w < sub_best[0]:
            sub_best = (w, op)
    return {
        "isg": DistanceReport(isg_best[0], isg_best[1], "isg"),
        "subsystem": DistanceReport(sub_best[0], sub_best[1], "subsystem"),
    }


# ---------------------------------------------------------------------------
# unmasked distance


@dataclass
class UnmaskedSets:
    V: list[PauliString] = field(default_factory=list)
    C: list[PauliString] = field(default_factory=list)
    P_tilde: list[PauliString] = field(default_factory=list)
    U_tilde: list[PauliString] = field(default_factory=list)
    destabilizers: list[PauliString] = field(default_factory=list)
    C_history: list[list[PauliString]] = field(default_factory=list)


def unmasked_sets(
    rounds: Sequence[Sequence[PauliString]], start_round: int, isg: PauliGroupBasis, n_rounds: int | None = None
) -> UnmaskedSets:
    """Replay the measurements after ``start_round`` applying the growth rules (A)-(D).

    ``rounds`` are the check lists of one period; ``isg`` is the ISG of the
    start round.  Elements of C are dropped (rule D(i)) into P_tilde, and the
    measurement that removed each one is kept as its destabilizer.
    """
    n = isg.n_qubits
    period = len(rounds)
    n_rounds = period if n_rounds is None else n_rounds
    st = UnmaskedSets(C=[g.unsigned() for g in isg.generators])
    for step in range(1, n_rounds + 1):
        for m in rounds[(start_round + step) % period]:
            m = m.unsigned()
            v_anti = [i for i, v in enumerate(st.V) if not commutes(m, v)]
            v1 = st.V[v_anti[0]] if v_anti else None
            c_anti = [i for i, c in enumerate(st.C) if not commutes(m, c)]
            if c_anti:
                if v1 is None:
                    c = st.C[c_anti[0]]
                    for i in c_anti[1:]:
                        st.C[i] = multiply(c, st.C[i]).unsigned()
                    del st.C[c_anti[0]]
                    st.P_tilde.append(c)
                    st.destabilizers.append(m)
                else:
                    for i in c_anti:
                        st.C[i] = multiply(v1, st.C[i]).unsigned()
            grow_group(st.V, m)
            if c_anti and v1 is not None:
                # an updated element already fixed by the current measurements
                # has been compared in full: it becomes trivial
                span = PauliGroupBasis.from_operators(n, st.V)
                keep = []
                for i, c in enumerate(st.C):
                    if i in c_anti and (c.is_identity or span.contains(c)):
                        if not c.is_identity:
                            st.U_tilde.append(c)
                        continue
                    keep.append(c)
                st.C = keep
        both = intersection(
            PauliGroupBasis.from_operators(n, st.C), PauliGroupBasis.from_operators(n, st.V)
        )
        st.U_tilde.extend(both.generators)
        st.C_history.append(list(st.C))
    return st


def unmasked_distance(
    rounds: Sequence[Sequence[PauliString]],
    start_round: int,
    isg: PauliGroupBasis,
    permanent: PauliGroupBasis | None = None,
    max_weight: int | None = None,
) -> tuple[DistanceReport, UnmaskedSets]:
    """Minimum weight over centralizer(U) minus G with G = <P_tilde, destabilizers, U>."""
    n = isg.n_qubits
    st = unmasked_sets(rounds, start_round, isg)
    if permanent is not None and len(st.C_history) >= 3:
        after3 = PauliGroupBasis.from_operators(n, st.C_history[2])
        if not after3.same_group(permanent):
            raise RuntimeError("C did not reduce to the permanent stabilizers by round 3")
    U = PauliGroupBasis.from_operators(n, st.U_tilde)
    G = PauliGroupBasis.from_operators(n, list(st.P_tilde) + list(st.destabilizers) + list(U.generators))
    w, op, exact = min_weight_outside(U, G, n, max_weight)
    notes = (
        f"destabilizers: the anticommuting measured check for each of the {len(st.P_tilde)} "
        f"elements moved to P_tilde; |U_tilde|={U.rank}"
    )
    report = DistanceReport(w, op, "unmasked", exact=exact, notes=notes)
    if op is not None:
        if not all(commutes(op, u) for u in U.generators) or G.contains(op):
            raise AssertionError("unmasked witness failed validation")
    return report, st
