"""Monte Carlo sampling of logical error rates, presets and result files.

Shots are grouped into fixed-size chunks and chunk ``i`` draws from the Philox
stream ``(seed, i)``.  The chunk layout depends only on the config, so totals
are the same for any number of worker threads.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .circuits import NoiseModel, ScheduledCircuit, build_bacon_shor_circuit, build_fbs_circuit
from .dem import DecodingGraph, extract_decoding_graph, site_signatures
from .matching import BatchMatcher
from .schedule import place_defects
from .tableau import RandomStream

CHUNK_SHOTS = 1000
CI99_Z = 2.576

CSV_HEADER = (
    "config_id,code,d,k,cycles,p_depol,p_reset,p_meas,mode,shots,"
    "logical_errors,p_hat,per_cycle,per_round,stderr,ci99"
)


@dataclass(frozen=True)
class ExperimentConfig:
    code: str = "fbs"
    d: int = 5
    k: int = 1
    q: int | None = None  # dense defect family: d = 3q + 2, k = q*q defects
    cycles: int = 5
    p_depol: float = 5e-3
    p_reset: float = 0.0
    p_meas: float = 0.0
    mode: str = "standard"
    repeats: int = 1
    shots_max: int = 100_000
    errors_max: int = 200
    seed: int = 0
    skip_final_cd_detector: bool = False
    normalization: str = "per_cycle"
    config_id: str = ""

    def __post_init__(self):
        if self.code not in ("bs", "fbs"):
            raise ValueError(f"code must be 'bs' or 'fbs', got {self.code!r}")
        if self.shots_max < 1:
            raise ValueError("shots_max must be >= 1")
        if self.errors_max < 1:
            raise ValueError("errors_max must be >= 1")
        if self.mode not in ("standard", "repeated_rounds"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.code == "bs" and self.mode != "standard":
            raise ValueError("the Bacon-Shor baseline only runs in standard mode")
        if self.normalization not in ("per_cycle", "per_round"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.q is not None:
            if self.q < 1:
                raise ValueError("q must be >= 1")
            if self.d != 3 * self.q + 2:
                object.__setattr__(self, "d", 3 * self.q + 2)
        if self.cycles < 0:
            raise ValueError("cycles must be >= 0")
        NoiseModel(self.p_depol, self.p_reset, self.p_meas)  # range checks

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(self.p_depol, self.p_reset, self.p_meas)

    @property
    def num_defects(self) -> int:
        if self.code == "bs":
            return 0
        return self.q * self.q if self.q is not None else self.k

    @property
    def logical_qubits(self) -> int:
        """Static logical plus one per defect."""
        return 1 + self.num_defects

    @property
    def label(self) -> str:
        if self.config_id:
            return self.config_id
        parts = [self.code, f"d{self.d}"]
        if self.code == "fbs":
            parts.append(f"q{self.q}" if self.q is not None else f"k{self.k}")
        if self.mode == "repeated_rounds":
            parts += [self.mode, f"R{self.repeats}"]  # cycles is not used here
        else:
            parts += [f"c{self.cycles}", self.mode]
        return "-".join(parts)


def build_circuit(config: ExperimentConfig) -> ScheduledCircuit:
    if config.code == "bs":
        return build_bacon_shor_circuit(config.d, config.cycles, config.noise)
    if config.q is not None:
        defects = place_defects(config.d, config.q * config.q, mode="dense")
    else:
        defects = place_defects(config.d, config.k)
    return build_fbs_circuit(
        config.d,
        defects,
        config.cycles,
        config.noise,
        mode=config.mode,
        repeats=config.repeats,
        skip_final_cd_detector=config.skip_final_cd_detector,
    )


@dataclass
class RateEstimate:
    p_hat: float
    per_cycle: float
    per_round: float
    stderr: float
    ci99_halfwidth: float
    shots_used: int
    logical_errors: int
    cycles: int = 1
    rounds: int = 1
    normalization: str = "per_cycle"

    @staticmethod
    def from_counts(
        errors: int, shots: int, cycles: int, rounds: int, normalization: str = "per_cycle"
    ) -> "RateEstimate":
        p = errors / shots
        raw = math.sqrt(p * (1 - p) / shots)
        divisor = cycles if normalization == "per_cycle" else rounds
        stderr = raw / divisor
        return RateEstimate(
            p_hat=p,
            per_cycle=p / cycles,
            per_round=p / rounds,
            stderr=stderr,
            ci99_halfwidth=CI99_Z * stderr,
            shots_used=shots,
            logical_errors=errors,
            cycles=cycles,
            rounds=rounds,
            normalization=normalization,
        )

    @property
    def reported_rate(self) -> float:
        return self.per_cycle if self.normalization == "per_cycle" else self.per_round

    def interval(self) -> tuple[float, float]:
        r = self.reported_rate
        return r - self.ci99_halfwidth, r + self.ci99_halfwidth


# ---------------------------------------------------------------------------
# sampling


@dataclass
class _NoiseClass:
    p: float
    sites: int  # independent locations per shot
    width: int  # mechanisms per location (3 for depolarizing, else 1)
    offset: int  # first mechanism column


class ShotSampler:
    """Samples detector and observable flips from the unit-mechanism table.

    Each depolarizing location fires with probability p and then picks X, Y or
    Z uniformly; bit-flip and measurement locations fire with their own p.
    The number of firing locations in a chunk is binomial and their positions
    are drawn without replacement, which is exact for independent locations.
    """

    def __init__(self, circuit: ScheduledCircuit):
        self.circuit = circuit
        self.num_detectors = len(circuit.detectors)
        self.num_observables = len(circuit.observables)
        sigs = site_signatures(circuit)
        n = circuit.n_qubits
        cols: list[tuple[tuple[int, ...], int]] = []
        groups: dict[tuple[str, float], list[list[tuple[tuple[int, ...], int]]]] = {}
        for s in range(len(sigs.instruction)):
            p = sigs.probability[s]
            if p == 0:
                continue
            kind = sigs.kind[s]
            for q in range(n):
                xs, zs = sigs.x_sig[s][q], sigs.z_sig[s][q]
                if kind == "bitflip":
                    groups.setdefault((kind, p), []).append([xs])
                else:
                    ys = (tuple(sorted(set(xs[0]) ^ set(zs[0]))), xs[1] ^ zs[1])
                    groups.setdefault((kind, p), []).append([xs, ys, zs])
        for m, sig in enumerate(sigs.meas_sig):
            p = sigs.meas_prob[m]
            if p > 0:
                groups.setdefault(("meas", p), []).append([sig])
        self.classes: list[_NoiseClass] = []
        for (kind, p), locs in groups.items():
            width = 3 if kind == "depol" else 1
            self.classes.append(_NoiseClass(p, len(locs), width, len(cols)))
            for loc in locs:
                cols.extend(loc)
        self.num_mechanisms = len(cols)
        rows, targets = [], []
        D = self.num_detectors
        for i, (dets, obs) in enumerate(cols):
            for t in dets:
                rows.append(i)
                targets.append(t)
            j = 0
            while obs >> j:
                if (obs >> j) & 1:
                    rows.append(i)
                    targets.append(D + j)
                j += 1
        self.effects = sparse.csr_matrix(
            (np.ones(len(rows), dtype=np.int32), (rows, targets)),
            shape=(max(self.num_mechanisms, 1), D + self.num_observables),
        )

    def sample(self, shots: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Return (detector flips, observable flips) as uint8 arrays."""
        D = self.num_detectors
        shot_idx, mech_idx = [], []
        for cls in self.classes:
            total = cls.sites * shots
            count = int(rng.binomial(total, cls.p))
            if count == 0:
                continue
            pos = rng.choice(total, size=count, replace=False)
            which = rng.integers(0, cls.width, size=count) if cls.width > 1 else 0
            shot_idx.append(pos // cls.sites)
            mech_idx.append(cls.offset + (pos % cls.sites) * cls.width + which)
        if not shot_idx:
            zeros = np.zeros((shots, D + self.num_observables), dtype=np.uint8)
            return zeros[:, :D], zeros[:, D:]
        r = np.concatenate(shot_idx)
        c = np.concatenate(mech_idx)
        fired = sparse.csr_matrix(
            (np.ones(len(r), dtype=np.int32), (r, c)), shape=(shots, self.effects.shape[0])
        )
        out = (fired @ self.effects).toarray() & 1
        out = out.astype(np.uint8)
        return out[:, :D], out[:, D:]


@dataclass
class ExperimentSetup:
    config: ExperimentConfig
    circuit: ScheduledCircuit
    graph: DecodingGraph
    sampler: ShotSampler
    matcher: BatchMatcher


def prepare(config: ExperimentConfig) -> ExperimentSetup:
    """Build circuit, decoding graph, sampler and matcher once per config."""
    circuit = build_circuit(config)
    graph = extract_decoding_graph(circuit, strict=config.p_meas == 0)
    return ExperimentSetup(config, circuit, graph, ShotSampler(circuit), BatchMatcher(graph))


def _run_chunk(setup: ExperimentSetup, index: int, shots: int) -> np.ndarray:
    """Per-shot logical-error flags for chunk ``index``."""
    rng = RandomStream(setup.config.seed, index).generator()
    dets, obs = setup.sampler.sample(shots, rng)
    fails = np.zeros(shots, dtype=bool)
    active = np.flatnonzero(dets.any(axis=1))
    if active.size:
        pred = setup.matcher.decode_batch(dets[active])
        fails[active] = (pred != obs[active]).any(axis=1)
    quiet = np.setdiff1d(np.arange(shots), active, assume_unique=True)
    fails[quiet] = obs[quiet].any(axis=1)
    return fails


def run_shots(
    config: ExperimentConfig, workers: int = 1, setup: ExperimentSetup | None = None
) -> RateEstimate:
    """Sample until shots_max shots or errors_max logical errors, whichever first."""
    setup = setup or prepare(config)
    n_chunks = -(-config.shots_max // CHUNK_SHOTS)
    sizes = [min(CHUNK_SHOTS, config.shots_max - i * CHUNK_SHOTS) for i in range(n_chunks)]
    errors = shots = 0
    done = False
    workers = max(1, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        start = 0
        while start < n_chunks and not done:
            batch = range(start, min(start + workers, n_chunks))
            results = list(pool.map(lambda i: _run_chunk(setup, i, sizes[i]), batch))
            for fails in results:
                need = config.errors_max - errors
                hits = np.flatnonzero(fails)
                if hits.size >= need:
                    shots += int(hits[need - 1]) + 1
                    errors += need
                    done = True
                    break
                errors += int(hits.size)
                shots += fails.size
            start += workers
    circuit = setup.circuit
    return RateEstimate.from_counts(
        errors, shots, circuit.cycles, circuit.rounds_measured, config.normalization
    )


# ---------------------------------------------------------------------------
# presets and result files


def kdn_ratio(q: int) -> Fraction:
    """k*d/n for the dense family: k = q^2 + 1, d = 4, n = (3q + 2)^2."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return Fraction(4 * (q * q + 1), (3 * q + 2) ** 2)


@dataclass(frozen=True)
class PresetEntry:
    config: ExperimentConfig
    expected_distance: int | None = None


def preset(name: str, scale: float = 1.0, seed: int = 0) -> list[PresetEntry]:
    """Named sweeps at desk scale.  ``scale`` multiplies the shot budget."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    shots = max(1, int(round(100_000 * scale)))
    base = dict(shots_max=shots, errors_max=200, seed=seed)
    out: list[PresetEntry] = []
    if name == "fig6":
        for code in ("bs", "fbs"):
            for d in (5, 9, 13, 17):
                out.append(PresetEntry(ExperimentConfig(code=code, d=d, cycles=d, p_depol=5e-3, **base)))
    elif name == "fig7":
        for code in ("bs", "fbs"):
            for d in range(3, 11):
                expected = d if code == "bs" else 2 * ((d - 1) // 2)
                cfg = ExperimentConfig(code=code, d=d, cycles=d, p_depol=5e-3, **base)
                out.append(PresetEntry(cfg, expected))
    elif name == "fig8":
        for q in range(2, 7):
            cfg = ExperimentConfig(code="fbs", q=q, d=3 * q + 2, cycles=3, p_depol=5e-3, **base)
            out.append(PresetEntry(cfg, 4))
    elif name == "fig9":
        for d in (5, 9, 13, 17):
            noise = dict(p_depol=1e-3, p_reset=1e-3, p_meas=1e-3)
            out.append(
                PresetEntry(
                    ExperimentConfig(
                        code="fbs", d=d, cycles=d + 1, normalization="per_round", **noise, **base
                    )
                )
            )
            out.append(
                PresetEntry(
                    ExperimentConfig(
                        code="fbs",
                        d=d,
                        mode="repeated_rounds",
                        repeats=d,
                        normalization="per_round",
                        **noise,
                        **base,
                    )
                )
            )
    else:
        raise ValueError(f"unknown preset {name!r}")
    return out


def _fmt(x: float) -> str:
    return repr(float(x))


def csv_row(config: ExperimentConfig, est: RateEstimate) -> list[str]:
    k = config.logical_qubits
    return [
        config.label,
        config.code,
        str(config.d),
        str(k),
        str(config.cycles if config.mode == "standard" else est.cycles),
        _fmt(config.p_depol),
        _fmt(config.p_reset),
        _fmt(config.p_meas),
        config.mode,
        str(est.shots_used),
        str(est.logical_errors),
        _fmt(est.p_hat),
        _fmt(est.per_cycle),
        _fmt(est.per_round),
        _fmt(est.stderr),
        _fmt(est.ci99_halfwidth),
    ]


def write_csv(rows: Iterable[tuple[ExperimentConfig, RateEstimate]], stream: io.TextIOBase) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for config, est in rows:
        writer.writerow(csv_row(config, est))


def config_to_text(config: ExperimentConfig) -> str:
    """Flat ``key = value`` lines, readable by parse_config_text."""
    lines = []
    for key, value in asdict(config).items():
        if value is None or value == "":
            continue
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


_FIELD_TYPES = {
    "code": str,
    "d": int,
    "k": int,
    "q": int,
    "cycles": int,
    "p_depol": float,
    "p_reset": float,
    "p_meas": float,
    "mode": str,
    "repeats": int,
    "shots_max": int,
    "errors_max": int,
    "seed": int,
    "skip_final_cd_detector": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "normalization": str,
    "config_id": str,
}

# flag spellings accepted in config files alongside the field names
_ALIASES = {"shots": "shots_max", "max_errors": "errors_max"}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` (or ``key: value``) lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, value = line.split(sep, 1)
                break
        else:
            raise ValueError(f"line {lineno}: expected key = value")
        key = key.strip().replace("-", "_")
        key = _ALIASES.get(key, key)
        if key not in _FIELD_TYPES:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        out[key] = _FIELD_TYPES[key](value.strip())
    return out


# ---------------------------------------------------------------------------
# plotting


def svg_rate_plot(
    series: dict[str, Sequence[tuple[int, float]]], title: str = "logical error rate vs d"
) -> str:
    """A self-contained SVG line plot with a log-scale y axis."""
    width, height, pad = 640, 420, 60
    points = [(d, r) for pts in series.values() for d, r in pts if r > 0]
    if not points:
        points = [(0, 1e-6), (1, 1e-5)]
    ds = [d for d, _ in points]
    lo = math.floor(math.log10(min(r for _, r in points)))
    hi = math.ceil(math.log10(max(r for _, r in points)))
    if hi == lo:
        hi = lo + 1
    d0, d1 = min(ds), max(ds)
    if d1 == d0:
        d1 = d0 + 1

    def xy(d: float, r: float) -> tuple[float, float]:
        x = pad + (d - d0) / (d1 - d0) * (width - 2 * pad)
        y = height - pad - (math.log10(r) - lo) / (hi - lo) * (height - 2 * pad)
        return x, y

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="24" text-anchor="middle" font-size="16">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
    ]
    for e in range(lo, hi + 1):
        _, y = xy(d0, 10.0**e)
        parts.append(f'<text x="{pad - 6}" y="{y + 4:.1f}" text-anchor="end" font-size="11">1e{e}</text>')
    for d in sorted(set(ds)):
        x, _ = xy(d, 10.0**lo)
        parts.append(f'<text x="{x:.1f}" y="{height - pad + 16}" text-anchor="middle" font-size="11">{d}</text>')
    for i, (name, pts) in enumerate(series.items()):
        color = colors[i % len(colors)]
        coords = [xy(d, r) for d, r in pts if r > 0]
        if coords:
            path = " ".join(f"{x:.1f},{y:.1f}" for x, y in coords)
            parts.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
            for x, y in coords:
                parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3" fill="{color}"/>')
        parts.append(
            f'<text x="{width - pad}" y="{pad + 16 * i}" text-anchor="end" font-size="12" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
