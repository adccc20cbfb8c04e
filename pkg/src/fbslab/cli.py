"""Command line entry point: ``fbslab <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 invariant violation.
"""

from __future__ import annotations

import argparse
import io
import sys
from pathlib import Path

from .dem import HypergraphError, extract_decoding_graph
from .distance import (
    brute_force_distance,
    graphlike_distance,
    isg_and_subsystem_distance,
    unmasked_distance,
)
from .harness import (
    ExperimentConfig,
    build_circuit,
    config_to_text,
    kdn_ratio,
    parse_config_text,
    prepare,
    preset,
    run_shots,
    svg_rate_plot,
    write_csv,
)
from .lattice import CodeLayout, stabilizer_group, virtual_canonical_basis
from .schedule import FloquetSchedule, check_preservation, compute_isgs, place_defects

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT = 0, 1, 2


class UsageError(Exception):
    pass


class InvariantViolation(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--code", choices=["bs", "fbs"])
    p.add_argument("--d", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--q", type=int, help="dense defect family, d = 3q + 2")
    p.add_argument("--cycles", type=int)
    p.add_argument("--p-depol", type=float)
    p.add_argument("--p-reset", type=float)
    p.add_argument("--p-meas", type=float)
    p.add_argument("--mode", choices=["standard", "repeated_rounds"])
    p.add_argument("--repeats", type=int)
    p.add_argument("--shots", type=int, dest="shots_max")
    p.add_argument("--max-errors", type=int, dest="errors_max")
    p.add_argument("--seed", type=int)
    p.add_argument("--skip-final-cd-detector", action="store_true", default=None)
    p.add_argument("--normalization", choices=["per_cycle", "per_round"])
    p.add_argument("--out", help="output file (default: stdout)")


_CONFIG_KEYS = (
    "code d k q cycles p_depol p_reset p_meas mode repeats shots_max errors_max seed "
    "skip_final_cd_detector normalization"
).split()


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if getattr(args, "config", None):
        try:
            values.update(parse_config_text(Path(args.config).read_text()))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
    for key in _CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if values.get("q") is not None and "d" not in values:
        values["d"] = 3 * values["q"] + 2
    try:
        return ExperimentConfig(**values)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_build(args) -> int:
    cfg = config_from_args(args)
    if args.what == "schedule":
        if cfg.code == "bs":
            sched = FloquetSchedule.bacon_shor(cfg.d)
        else:
            defects = (
                place_defects(cfg.d, cfg.q * cfg.q, mode="dense") if cfg.q else place_defects(cfg.d, cfg.k)
            )
            sched = FloquetSchedule.build(cfg.d, defects)
        _emit(sched.dump(), args.out)
    else:
        _emit(build_circuit(cfg).to_text(), args.out)
    return EXIT_OK


def cmd_distance(args) -> int:
    cfg = config_from_args(args)
    method = args.method
    if method in ("graphlike", "brute"):
        circuit = build_circuit(cfg)
        if method == "graphlike":
            report = graphlike_distance(extract_decoding_graph(circuit))
        else:
            report = brute_force_distance(circuit)
        _emit(report.record() + "\n", args.out)
        return EXIT_OK
    layout = CodeLayout.square(cfg.d)
    if cfg.code == "bs":
        defects = []
    elif cfg.q:
        defects = place_defects(cfg.d, cfg.q * cfg.q, mode="dense")
    else:
        defects = place_defects(cfg.d, cfg.k)
    isgs = compute_isgs(layout, defects)
    if method in ("isg", "subsystem"):
        reports = isg_and_subsystem_distance([i.measured for i in isgs])
        _emit(reports[method].record() + "\n", args.out)
        return EXIT_OK
    if cfg.code == "bs":
        raise UsageError("unmasked distance needs a Floquet schedule (--code fbs)")
    sched = FloquetSchedule.build(cfg.d, defects)
    rounds = [rs.checks for rs in sched.rounds]
    start = args.start_round % 4
    isg = virtual_canonical_basis(layout, isgs[start].measured)
    try:
        report, _ = unmasked_distance(rounds, start, isg, permanent=stabilizer_group(layout))
    except RuntimeError as exc:
        raise InvariantViolation(str(exc)) from exc
    _emit(report.record() + "\n", args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = config_from_args(args)
    est = run_shots(cfg, workers=args.workers)
    buf = io.StringIO()
    write_csv([(cfg, est)], buf)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_preset(args) -> int:
    try:
        entries = preset(args.name, scale=args.scale, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.max_d is not None:
        entries = [e for e in entries if e.config.d <= args.max_d]
    rows, audit, problems = [], [], []
    for i, entry in enumerate(entries):
        cfg = entry.config
        audit.append(f"[{i}] {cfg.label}\n" + config_to_text(cfg))
        setup = prepare(cfg)
        if entry.expected_distance is not None:
            dist = graphlike_distance(setup.graph).value
            audit.append(f"graphlike_distance = {dist} (expected {entry.expected_distance})\n")
            if dist != entry.expected_distance:
                problems.append(f"{cfg.label}: distance {dist} != {entry.expected_distance}")
        if cfg.q is not None:
            audit.append(f"kdn_ratio = {kdn_ratio(cfg.q)}\n")
        if not args.no_sample:
            rows.append((cfg, run_shots(cfg, workers=args.workers, setup=setup)))
    buf = io.StringIO()
    write_csv(rows, buf)
    _emit(buf.getvalue(), args.out)
    if args.out:
        Path(args.out).with_suffix(".configs.txt").write_text("\n".join(audit))
    if args.svg and rows:
        series: dict[str, list[tuple[int, float]]] = {}
        for cfg, est in rows:
            series.setdefault(f"{cfg.code} {cfg.mode}", []).append((cfg.d, est.reported_rate))
        Path(args.svg).write_text(svg_rate_plot(series, f"{args.name}: logical error rate vs d"))
    if problems:
        raise InvariantViolation("; ".join(problems))
    return EXIT_OK


def cmd_preserve_check(args) -> int:
    d = args.d or 5
    layout = CodeLayout.square(d)
    defects = place_defects(d, args.k or 1)
    isgs = compute_isgs(layout, defects)
    lines, failed = [], False
    for i, s in enumerate(defects):
        for r in range(4):
            res = check_preservation(layout, s, r, isgs)
            status = "ok" if res.ok else "FAIL"
            lines.append(
                f"defect {i} round {r}: {status} x={res.x_ok} z={res.z_ok} "
                f"membership={res.membership_ok} {' '.join(res.diff)}".rstrip()
            )
            failed |= not res.ok
    _emit("\n".join(lines) + "\n", args.out)
    if failed:
        raise InvariantViolation("preservation identity failed")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fbslab", description="Floquet Bacon-Shor simulation lab")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build", help="emit a circuit or schedule dump")
    _add_config_flags(p)
    p.add_argument("--what", choices=["circuit", "schedule"], default="circuit")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("distance", help="compute a code distance")
    _add_config_flags(p)
    p.add_argument(
        "--method", choices=["graphlike", "brute", "isg", "subsystem", "unmasked"], default="graphlike"
    )
    p.add_argument("--start-round", type=int, default=0)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("sample", help="Monte Carlo logical error rate for one config")
    _add_config_flags(p)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("preset", help="run a named sweep")
    p.add_argument("name", help="fig6, fig7, fig8 or fig9")
    p.add_argument("--scale", type=float, default=1.0, help="multiplies the shot budget")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-d", type=int, help="drop configs with larger d")
    p.add_argument("--no-sample", action="store_true", help="only build and check distances")
    p.add_argument("--svg", help="also write a rate-vs-d plot")
    p.add_argument("--out")
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("preserve-check", help="verify the logical preservation identities")
    p.add_argument("--d", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_preserve_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"fbslab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvariantViolation, HypergraphError) as exc:
        print(f"fbslab: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"fbslab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
