"""
Command-line entry point.

    gams-ldpc fer --bg 1 --z 384 --rate 1/3 --dec gams3-fx --mod qpsk --ebn0 1.0:0.25:3.0
    gams-ldpc latency --bg 1 --z 384 --rate 8/9 --iterations 4
    gams-ldpc memory --scheme 7,5,1
    gams-ldpc --manifest results.csv.manifest.json
"""

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .code_model import BaseGraphId, config_for_rate, derive_config, expand_prototype, load_standard_graph
from .complexity_memory import (
    complexity_table,
    compression_savings,
    memory_sizing,
    reduction_percentages,
    render_complexity_table,
)
from .core import ConfigurationError, GamsLdpcError, LdpcLogger, configure_logging, get_settings
from .quantized_gams import QuantScheme, build_lut
from .schedule_latency import (
    PipelineParams,
    build_oss,
    classify_rows,
    format_schedule,
    latency_summary,
    natural_schedule,
    parse_schedule,
    reorder_columns,
    throughput_table,
)
from .sim_harness import (
    CSV_COLUMNS,
    Modulation,
    SeedPolicy,
    SimulationSetup,
    StopRule,
    parameter_sweep,
    parse_grid,
    resolve_decoders,
    run_sweep,
)

logger = LdpcLogger("cli")

MANIFEST_SUFFIX = ".manifest.json"


@dataclass
class RunManifest:
    command: str
    config: dict
    version: str
    seed: int | None
    timestamp: str

    @classmethod
    def for_args(cls, args: argparse.Namespace) -> "RunManifest":
        config = {k: v for k, v in vars(args).items() if k not in ("handler", "manifest")}
        return cls(
            command=args.command,
            config=config,
            version=__version__,
            seed=getattr(args, "seed", None),
            timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        )

    def write(self, output: str | Path) -> Path:
        path = Path(f"{output}{MANIFEST_SUFFIX}")
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def read(cls, path: str | Path) -> "RunManifest":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
            return cls(**data)
        except FileNotFoundError:
            raise ConfigurationError(f"manifest not found: {path}")
        except (json.JSONDecodeError, TypeError):
            raise ConfigurationError(f"{path} is not a run manifest")


def _emit(args: argparse.Namespace, text: str):
    """Write a command's output to --out (with manifest) or stdout."""
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        manifest = RunManifest.for_args(args).write(args.out)
        logger.info(f"Wrote {args.out} and {manifest}")
    else:
        sys.stdout.write(text)


def _resolve_code(args: argparse.Namespace):
    bg_id = BaseGraphId.parse(args.bg)
    graph = load_standard_graph(bg_id, args.data_dir)
    k_u = args.ku or bg_id.k_u_max
    if args.E is not None:
        config = derive_config(graph, args.z, k_u, args.E)
    elif args.rate is not None:
        config = config_for_rate(graph, args.z, k_u, args.rate)
    else:
        raise ConfigurationError("give the code rate with --rate (e.g. 1/3) or the length with --E")
    return graph, config, expand_prototype(graph, config)


def _resolve_schedule(proto, choice: str):
    if choice == "natural":
        return natural_schedule(proto)
    if choice == "oss":
        return reorder_columns(proto, build_oss(proto))
    path = Path(choice)
    if not path.is_file():
        raise ConfigurationError(f"schedule must be natural, oss or a schedule file; {choice!r} not found")
    schedule = parse_schedule(path.read_text(encoding="utf-8"))
    schedule.validate(proto)
    return schedule


def _csv(rows: list[dict], columns=None) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns or rows[0].keys()), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def cmd_fer(args: argparse.Namespace) -> int:
    _, config, _ = _resolve_code(args)
    decoders = resolve_decoders(args.dec, config.bg_id)
    grid = parse_grid(args.ebn0)
    setup = SimulationSetup(
        seeds=SeedPolicy(args.seed),
        stop=StopRule(args.max_frames, args.target_errors, args.block_size),
        i_max=args.imax,
        schedule_kind=args.schedule,
        workers=args.workers,
        frequency_hz=args.frequency,
        data_dir=args.data_dir,
        allow_placeholder_shifts=args.allow_placeholder_shifts,
    )
    logger.audit_log(
        action="fer_sweep",
        resource=config.label(),
        details={"decoders": len(decoders), "points": len(grid), "seed": args.seed},
    )
    rows = run_sweep(decoders, grid, Modulation.parse(args.mod), config, setup)
    _emit(args, _csv([row.csv_row() for row in rows], CSV_COLUMNS))
    return 0


def cmd_sweep_params(args: argparse.Namespace) -> int:
    _, config, _ = _resolve_code(args)
    setup = SimulationSetup(
        seeds=SeedPolicy(args.seed),
        stop=StopRule(args.max_frames, args.target_errors, args.block_size),
        i_max=args.imax,
        schedule_kind=args.schedule,
        workers=args.workers,
        frequency_hz=args.frequency,
        data_dir=args.data_dir,
        allow_placeholder_shifts=args.allow_placeholder_shifts,
    )
    logger.audit_log(action="parameter_sweep", resource=config.label(), details={"kind": args.kind})
    outcome = parameter_sweep(
        args.kind, parse_grid(args.values), args.ebn0, Modulation.parse(args.mod), config, setup
    )
    rows = [
        {outcome["parameter"]: value} | stats.csv_row()
        for value, stats in zip(outcome["values"], outcome["rows"])
    ]
    text = _csv(rows, [outcome["parameter"], *CSV_COLUMNS])
    text += f"# best {outcome['parameter']}={outcome['best']:g}\n"
    _emit(args, text)
    return 0


def cmd_latency(args: argparse.Namespace) -> int:
    if args.table:
        rows = throughput_table(args.iterations, args.frequency, args.z, args.data_dir)
        logger.audit_log(action="throughput_table", resource="table", details={"iterations": args.iterations})
        if args.format == "csv":
            _emit(args, _csv(rows))
        else:
            lines = [
                f"BG{row['bg']} R={row['rate']}: L={row['simplified_cycles']} cycles, "
                f"{row['throughput_gbps']:.2f} Gbps"
                for row in rows
            ]
            _emit(args, "\n".join(lines) + "\n")
        return 0

    _, config, proto = _resolve_code(args)
    schedule = _resolve_schedule(proto, args.schedule)
    summary = latency_summary(
        config, proto, schedule, args.iterations, args.frequency, PipelineParams(args.register_delay)
    )
    logger.audit_log(action="latency_report", resource=config.label(), details={"schedule": args.schedule})
    if args.format == "csv":
        _emit(args, _csv([summary]))
        return 0
    lines = [
        f"code: {summary['code']} (R={config.rate})",
        f"schedule: {args.schedule}",
        f"iterations: {summary['iterations']}",
        f"bound (sum of row degrees): {summary['bound']}",
        f"dependency stalls per iteration: {summary['dep_stalls']}",
        f"sync stalls per iteration: {summary['sync_stalls']}",
        f"cycles per iteration: {summary['cycles_per_iteration']}",
        f"L (pipeline model): {summary['pipeline_cycles']}",
        f"L (simplified): {summary['simplified_cycles']}",
        f"throughput at {args.frequency / 1e6:g} MHz: {summary['throughput_gbps']:.2f} Gbps",
    ]
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_complexity(args: argparse.Namespace) -> int:
    rows = complexity_table(args.dc, args.dv, args.m, args.n, args.gamma)
    logger.audit_log(action="complexity_report", resource=f"dc{args.dc}/dv{args.dv}")
    text = render_complexity_table(rows, "csv" if args.format == "csv" else "markdown")
    reductions = reduction_percentages(args.dc, args.dv, args.m, args.n, args.gamma)
    text += "".join(f"# {name}: {value:.1f}%\n" for name, value in reductions.items())
    _emit(args, text)
    return 0


def cmd_memory(args: argparse.Namespace) -> int:
    scheme = QuantScheme.parse(args.scheme)
    bg_id = BaseGraphId.parse(args.bg)
    layout = memory_sizing(scheme, bg_id)
    savings = compression_savings(scheme, bg_id)
    logger.audit_log(action="memory_report", resource=scheme.label)
    if args.format == "csv":
        text = _csv(layout.rows())
    else:
        lines = [
            f"{row['memory']:<7} width {row['width_bits']:>4}  depth {row['depth']:>4}  "
            f"x{row['instances']}  {row['capacity_kb']:.2f} KB"
            for row in layout.rows()
        ]
        lines.append(f"total: {layout.total_kb:.2f} KB")
        lines.append(f"R-message compression savings: {savings:.2f}%")
        text = "\n".join(lines) + "\n"
    _emit(args, text)
    return 0


def cmd_lut_dump(args: argparse.Namespace) -> int:
    lut = build_lut(QuantScheme.parse(args.scheme), args.beta)
    logger.audit_log(action="lut_dump", resource=lut.scheme.label, details={"beta": args.beta})
    _emit(args, lut.dump())
    return 0


def cmd_schedule_gen(args: argparse.Namespace) -> int:
    _, config, proto = _resolve_code(args)
    schedule = build_oss(proto)
    if not args.layers_only:
        schedule = reorder_columns(proto, schedule)
    classes = classify_rows(proto)
    degrees = [int(proto.row_degrees[layer]) for layer in schedule.layer_order]
    header = "\n".join(
        [
            f"OSS schedule for {config.label()} (R={config.rate})",
            f"P0={list(classes.p0)} P1={list(classes.p1)} P2={list(classes.p2)}",
            f"row degrees in order: {' '.join(map(str, degrees))}",
        ]
    )
    logger.audit_log(action="schedule_gen", resource=config.label())
    _emit(args, format_schedule(schedule, header))
    return 0


def _add_code_args(parser: argparse.ArgumentParser):
    parser.add_argument("--bg", default="1", help="base graph: 1 or 2")
    parser.add_argument("--z", type=int, default=384, help="lifting size Z")
    parser.add_argument("--ku", type=int, default=None, help="information columns K_u (default: maximum)")
    parser.add_argument("--rate", default=None, help="code rate as a fraction, e.g. 1/3")
    parser.add_argument("--E", type=int, default=None, help="transmitted length; overrides --rate")


def _add_sim_args(parser: argparse.ArgumentParser):
    parser.add_argument("--mod", default="qpsk", help="bpsk, qpsk, qam16 or qam64")
    parser.add_argument("--imax", type=int, default=15)
    parser.add_argument("--max-frames", type=int, default=10_000)
    parser.add_argument("--target-errors", type=int, default=100)
    parser.add_argument("--block-size", type=int, default=16)
    parser.add_argument("--schedule", default="oss", choices=("natural", "oss"))
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--frequency", type=float, default=None, help="clock in Hz for the throughput model")
    parser.add_argument(
        "--allow-placeholder-shifts",
        action="store_true",
        default=None,
        help="run on base graphs whose shift coefficients are placeholders (smoke runs only)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gams-ldpc", description="GA-MS LDPC decoding toolkit for 5G NR codes")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--manifest", default=None, help="re-run the command recorded in a manifest file")
    parser.add_argument("--log-level", default=None)
    parser.add_argument("--data-dir", default=None, help="base-graph directory")
    parser.add_argument("--out", default=None, help="output file (a .manifest.json sidecar is written next to it)")
    sub = parser.add_subparsers(dest="command")

    fer = sub.add_parser("fer", help="FER/BER sweep over an Eb/N0 grid")
    _add_code_args(fer)
    _add_sim_args(fer)
    fer.add_argument("--dec", default="gams3-fx", help="decoder labels, comma separated, or all-float / all-fixed")
    fer.add_argument("--ebn0", required=True, help="start:step:stop in dB or a comma-separated list")
    fer.set_defaults(handler=cmd_fer)

    sweep = sub.add_parser("sweep-params", help="NMS alpha or OMS beta sweep at one Eb/N0")
    _add_code_args(sweep)
    _add_sim_args(sweep)
    sweep.add_argument("--kind", required=True, choices=("nms", "oms"))
    sweep.add_argument("--values", required=True, help="start:step:stop or a comma-separated list")
    sweep.add_argument("--ebn0", type=float, required=True)
    sweep.set_defaults(handler=cmd_sweep_params)

    latency = sub.add_parser("latency", help="pipeline latency and peak throughput")
    _add_code_args(latency)
    latency.add_argument("--iterations", type=int, default=4)
    latency.add_argument("--frequency", type=float, default=None)
    latency.add_argument("--schedule", default="oss", help="natural, oss or a schedule file")
    latency.add_argument("--register-delay", type=int, default=1)
    latency.add_argument("--table", action="store_true", help="throughput for the reference rate points")
    latency.add_argument("--format", default="text", choices=("text", "csv"))
    latency.set_defaults(handler=cmd_latency)

    complexity = sub.add_parser("complexity", help="per-iteration complexity table")
    complexity.add_argument("--dc", type=int, default=8)
    complexity.add_argument("--dv", type=int, default=5)
    complexity.add_argument("--m", type=int, default=17664)
    complexity.add_argument("--n", type=int, default=26112)
    complexity.add_argument("--gamma", type=int, default=3)
    complexity.add_argument("--format", default="markdown", choices=("markdown", "csv"))
    complexity.set_defaults(handler=cmd_complexity)

    memory = sub.add_parser("memory", help="decoder memory sizing")
    memory.add_argument("--scheme", default="7,5,1")
    memory.add_argument("--bg", default="1")
    memory.add_argument("--format", default="text", choices=("text", "csv"))
    memory.set_defaults(handler=cmd_memory)

    lut = sub.add_parser("lut-dump", help="print the box-plus lookup table")
    lut.add_argument("--scheme", default="7,5,1")
    lut.add_argument("--beta", type=float, default=0.25)
    lut.set_defaults(handler=cmd_lut_dump)

    schedule = sub.add_parser("schedule-gen", help="write the optimized static schedule")
    _add_code_args(schedule)
    schedule.add_argument("--layers-only", action="store_true", help="omit MIN/SEL column orders")
    schedule.set_defaults(handler=cmd_schedule_gen)
    return parser


def _fill_defaults(args: argparse.Namespace):
    settings = get_settings()
    if getattr(args, "workers", "absent") is None:
        args.workers = settings.workers
    if getattr(args, "seed", "absent") is None:
        args.seed = settings.seed
    if getattr(args, "frequency", "absent") is None:
        args.frequency = settings.frequency_hz
    if getattr(args, "allow_placeholder_shifts", "absent") is None:
        args.allow_placeholder_shifts = settings.allow_placeholder_shifts
    if args.data_dir is None and settings.data_dir is not None:
        args.data_dir = str(settings.data_dir)


_HANDLERS = {
    "fer": cmd_fer,
    "sweep-params": cmd_sweep_params,
    "latency": cmd_latency,
    "complexity": cmd_complexity,
    "memory": cmd_memory,
    "lut-dump": cmd_lut_dump,
    "schedule-gen": cmd_schedule_gen,
}


def _from_manifest(args: argparse.Namespace) -> argparse.Namespace:
    manifest = RunManifest.read(args.manifest)
    if manifest.command not in _HANDLERS:
        raise ConfigurationError(f"manifest names unknown command {manifest.command!r}")
    replay = argparse.Namespace(**manifest.config)
    replay.command = manifest.command
    replay.handler = _HANDLERS[manifest.command]
    replay.manifest = args.manifest
    if args.out:
        replay.out = args.out
    return replay


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        if args.manifest:
            args = _from_manifest(args)
        elif args.command is None:
            parser.print_usage(sys.stderr)
            return 2
        else:
            _fill_defaults(args)
        return args.handler(args)
    except (GamsLdpcError, OSError) as e:
        logger.debug(f"{args.command} failed: {e}")
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
