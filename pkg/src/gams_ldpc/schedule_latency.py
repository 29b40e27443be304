"""
Layer scheduling and the MIN/SEL pipeline latency model.

The decoder processes one layer per slot: the MIN phase of a layer runs
alongside the SEL phase of its predecessor. A MIN read of a block column
that the predecessor is still updating waits for the SEL write (data
dependency stall); a slot cannot end before the predecessor's SEL has
written all of its blocks (row synchronization stall).
"""

import logging
from dataclasses import dataclass, field

from .code_model import (
    PUNCTURED_COLUMNS,
    Z_MAX,
    CodeConfig,
    PrototypeMatrix,
    config_for_rate,
    expand_prototype,
    load_standard_graph,
)
from .core.errors import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_REGISTER_DELAY = 1


@dataclass(frozen=True)
class Schedule:
    """
    Layer order plus optional per-layer MIN and SEL visit orders.

    Column orders map a layer to a permutation of its block columns; layers
    without an entry are visited in natural column order.
    """

    layer_order: tuple[int, ...]
    column_order: dict[int, tuple[int, ...]] | None = field(default=None, hash=False)
    sel_order: dict[int, tuple[int, ...]] | None = field(default=None, hash=False)

    def __post_init__(self):
        if sorted(self.layer_order) != list(range(len(self.layer_order))):
            raise ConfigurationError(f"layer order {self.layer_order} is not a permutation")

    def columns_for(self, layer: int, attr: str) -> tuple[int, ...] | None:
        orders = getattr(self, attr)
        if orders is None:
            return None
        return orders.get(layer)

    def min_columns(self, proto: PrototypeMatrix, layer: int) -> tuple[int, ...]:
        return self.columns_for(layer, "column_order") or proto.layers[layer]

    def sel_columns(self, proto: PrototypeMatrix, layer: int) -> tuple[int, ...]:
        return self.columns_for(layer, "sel_order") or proto.layers[layer]

    def validate(self, proto: PrototypeMatrix):
        if len(self.layer_order) != proto.m_p:
            raise ConfigurationError(
                f"schedule covers {len(self.layer_order)} layers, code uses {proto.m_p}"
            )
        for attr in ("column_order", "sel_order"):
            for layer, columns in (getattr(self, attr) or {}).items():
                if not 0 <= layer < proto.m_p:
                    raise ConfigurationError(f"schedule references unused layer {layer}")
                if sorted(columns) != sorted(proto.layers[layer]):
                    raise ConfigurationError(
                        f"{attr} of layer {layer} is not a permutation of its block columns"
                    )


@dataclass(frozen=True)
class PuncturedClasses:
    p0: tuple[int, ...]
    p1: tuple[int, ...]
    p2: tuple[int, ...]

    def of(self, layer: int) -> int:
        for index, members in enumerate((self.p0, self.p1, self.p2)):
            if layer in members:
                return index
        raise KeyError(layer)


def natural_schedule(proto: PrototypeMatrix) -> Schedule:
    return Schedule(tuple(range(proto.m_p)))


def classify_rows(proto: PrototypeMatrix) -> PuncturedClasses:
    """Group layers by how many punctured block columns they touch."""
    classes: list[list[int]] = [[], [], []]
    for layer, columns in enumerate(proto.layers):
        classes[sum(1 for col in PUNCTURED_COLUMNS if col in columns)].append(layer)
    return PuncturedClasses(*(tuple(members) for members in classes))


def build_oss(proto: PrototypeMatrix) -> Schedule:
    """
    Optimized static layer order.

    P0 then P1 by ascending degree, then P2 by descending degree; ties keep
    the original row order.
    """
    classes = classify_rows(proto)
    degrees = proto.row_degrees
    order = (
        sorted(classes.p0, key=lambda layer: (degrees[layer], layer))
        + sorted(classes.p1, key=lambda layer: (degrees[layer], layer))
        + sorted(classes.p2, key=lambda layer: (-degrees[layer], layer))
    )
    logger.debug(f"OSS order {order} (P0={len(classes.p0)}, P1={len(classes.p1)}, P2={len(classes.p2)})")
    return Schedule(tuple(int(layer) for layer in order))


def reorder_columns(proto: PrototypeMatrix, schedule: Schedule) -> Schedule:
    """
    Column visit orders that hide data dependencies between consecutive layers.

    MIN reads columns not shared with the previous layer first, then the
    shared ones, each group in natural order. SEL writes the columns shared
    with the next layer first, in the order the next layer's MIN reads them.
    """
    order = schedule.layer_order
    count = len(order)
    column_order = {}
    for position, layer in enumerate(order):
        previous = set(proto.layers[order[position - 1]])
        columns = proto.layers[layer]
        column_order[layer] = tuple(c for c in columns if c not in previous) + tuple(
            c for c in columns if c in previous
        )
    sel_order = {}
    for position, layer in enumerate(order):
        following = order[(position + 1) % count]
        columns = set(proto.layers[layer])
        shared = tuple(c for c in column_order[following] if c in columns)
        sel_order[layer] = shared + tuple(c for c in proto.layers[layer] if c not in shared)
    return Schedule(order, column_order=column_order, sel_order=sel_order)


@dataclass(frozen=True)
class PipelineParams:
    # cycles between a SEL write and the earliest MIN read of the same block
    register_delay: int = DEFAULT_REGISTER_DELAY

    def __post_init__(self):
        if self.register_delay < 0:
            raise ConfigurationError("register delay must be non-negative")


@dataclass(frozen=True)
class LayerTiming:
    layer: int
    degree: int
    dep_stalls: int
    sync_stalls: int

    @property
    def cycles(self) -> int:
        return self.degree + self.dep_stalls + self.sync_stalls


@dataclass(frozen=True)
class LatencyReport:
    iterations: int
    layers: tuple[LayerTiming, ...]

    @property
    def bound(self) -> int:
        return sum(t.degree for t in self.layers)

    @property
    def dep_stalls(self) -> int:
        return sum(t.dep_stalls for t in self.layers)

    @property
    def sync_stalls(self) -> int:
        return sum(t.sync_stalls for t in self.layers)

    @property
    def cycles_per_iteration(self) -> int:
        return self.bound + self.dep_stalls + self.sync_stalls

    @property
    def total_cycles(self) -> int:
        return self.iterations * self.cycles_per_iteration


def simulate_pipeline(
    proto: PrototypeMatrix,
    schedule: Schedule | None = None,
    params: PipelineParams | None = None,
    iterations: int = 1,
) -> LatencyReport:
    """
    Cycle-step the two-stage pipeline in steady state.

    Each layer's slot starts with MIN(layer) and SEL(previous) together; the
    previous layer is the schedule predecessor, cyclically. SEL writes one
    block per cycle in its SEL order; a write at cycle k is readable from
    cycle k + register_delay. MIN reads one block per cycle in its MIN order
    and waits on blocks the previous layer has not yet written.

    A slot lasts max(MIN cycles, predecessor degree). Synchronization stalls
    are max(d_prev - d_c, 0) per layer; dependency stalls are the MIN cycles
    that run past that bound.
    """
    if iterations < 0:
        raise ConfigurationError("iteration count must be non-negative")
    schedule = schedule or natural_schedule(proto)
    schedule.validate(proto)
    params = params or PipelineParams()
    order = schedule.layer_order
    timings = []
    for position, layer in enumerate(order):
        previous = order[position - 1]
        written_at = {col: k for k, col in enumerate(schedule.sel_columns(proto, previous))}
        cycle = 0
        for col in schedule.min_columns(proto, layer):
            if col in written_at:
                cycle = max(cycle, written_at[col] + params.register_delay)
            cycle += 1
        degree = len(proto.layers[layer])
        sync_bound = max(degree, len(proto.layers[previous]))
        timings.append(
            LayerTiming(layer, degree, max(cycle - sync_bound, 0), sync_bound - degree)
        )
    report = LatencyReport(iterations=iterations, layers=tuple(timings))
    logger.debug(
        f"pipeline: bound {report.bound}, dependency stalls {report.dep_stalls}, "
        f"sync stalls {report.sync_stalls} per iteration"
    )
    return report


def latency_simplified(proto: PrototypeMatrix, iterations: int) -> int:
    """I * (sum of row degrees + |d_max - d_min|) over the used layers."""
    degrees = proto.row_degrees
    return iterations * (int(degrees.sum()) + int(degrees.max() - degrees.min()))


def peak_throughput(config: CodeConfig | int, cycles: int, frequency_hz: float) -> float:
    """Z_max * N_p / L * F in bits per second."""
    if cycles <= 0:
        raise ConfigurationError(f"latency must be positive, got {cycles}")
    n_p = config.n_p_used if isinstance(config, CodeConfig) else int(config)
    return Z_MAX * n_p / cycles * frequency_hz


def format_schedule(schedule: Schedule, header: str | None = None) -> str:
    lines = []
    if header:
        lines.extend(f"# {line}" for line in header.splitlines())
    lines.append("layers: " + " ".join(str(layer) for layer in schedule.layer_order))
    for prefix, orders in (("min", schedule.column_order), ("sel", schedule.sel_order)):
        for layer in schedule.layer_order:
            if orders and layer in orders:
                lines.append(f"{prefix} {layer}: " + " ".join(str(c) for c in orders[layer]))
    return "\n".join(lines) + "\n"


def parse_schedule(text: str) -> Schedule:
    layer_order = None
    orders: dict[str, dict[int, tuple[int, ...]]] = {"min": {}, "sel": {}}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, values = line.partition(":")
        try:
            numbers = tuple(int(v) for v in values.split())
            if key.strip() == "layers":
                layer_order = numbers
                continue
            prefix, layer = key.split()
            orders[prefix][int(layer)] = numbers
        except (ValueError, KeyError):
            raise ConfigurationError(f"schedule line {line_no}: cannot parse {raw.strip()!r}")
    if layer_order is None:
        raise ConfigurationError("schedule file has no 'layers:' line")
    return Schedule(
        layer_order,
        column_order=orders["min"] or None,
        sel_order=orders["sel"] or None,
    )


def latency_summary(
    config: CodeConfig,
    proto: PrototypeMatrix,
    schedule: Schedule,
    iterations: int,
    frequency_hz: float,
    params: PipelineParams | None = None,
) -> dict:
    """Pipeline decomposition, simplified latency and peak throughput for one code."""
    report = simulate_pipeline(proto, schedule, params, iterations)
    simplified = latency_simplified(proto, iterations)
    throughput = peak_throughput(config, simplified, frequency_hz) if simplified else 0.0
    return {
        "code": config.label(),
        "iterations": iterations,
        "bound": report.bound,
        "dep_stalls": report.dep_stalls,
        "sync_stalls": report.sync_stalls,
        "cycles_per_iteration": report.cycles_per_iteration,
        "pipeline_cycles": report.total_cycles,
        "simplified_cycles": simplified,
        "frequency_hz": frequency_hz,
        "throughput_gbps": round(throughput / 1e9, 2),
    }


# (base graph, code rate) points of the published peak-throughput comparison
THROUGHPUT_POINTS = ((1, "1/3"), (1, "8/9"), (2, "1/5"), (2, "2/3"))


def throughput_table(
    iterations: int,
    frequency_hz: float,
    z: int = Z_MAX,
    data_dir: str | None = None,
    points=THROUGHPUT_POINTS,
) -> list[dict]:
    """Latency summary under OSS for each (base graph, rate) point at full information length."""
    rows = []
    for bg, rate in points:
        graph = load_standard_graph(bg, data_dir)
        config = config_for_rate(graph, z, graph.k_u_max, rate)
        proto = expand_prototype(graph, config)
        schedule = reorder_columns(proto, build_oss(proto))
        rows.append(
            {"bg": int(graph.bg_id), "rate": rate}
            | latency_summary(config, proto, schedule, iterations, frequency_hz)
        )
    return rows
