"""
Per-iteration complexity and decoder memory models.

Closed-form operation counts for SP, A-Min*, MS, OMS, NMS, A-MS and GA-MS on
regular codes, live counters driven by the floating-point decoders, and
the memory organization of the block-parallel decoder including the
compressed R-message format.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .code_model import BaseGraph, BaseGraphId, PrototypeMatrix
from .core.errors import ConfigurationError, InstrumentationError
from .float_decoders import DecoderVariant, layered_decode
from .quantized_gams import INDEX_BITS, QuantScheme

logger = logging.getLogger(__name__)

ALGORITHMS = ("sp", "amin", "ms", "oms", "nms", "a-ms", "gams")
_ALIASES = {"amin*": "amin", "a-min*": "amin", "ams": "a-ms"}

# symbolic cells, in the order comparisons / additions / LUTs / memory
FORMULA_CELLS = {
    "sp": ("-", "d_v*N + (2*d_c - 1)*M", "2*d_c*M", "d_c*M + N"),
    "amin": ("(d_c - 1)*M", "d_v*N + (2*d_c - 1)*M", "(d_c - 1)*M", "3*M + N"),
    "ms": ("(2*d_c - 3)*M", "d_v*N", "-", "2*M + N"),
    "oms": ("(2*d_c - 3)*M", "d_v*N + 2*M", "-", "2*M + N"),
    "nms": ("(2*d_c - 3)*M", "d_v*N + 2*M", "-", "2*M + N"),
    "a-ms": ("(2*d_c - 3)*M", "d_v*N + (3*d_c - 6)*M", "(2*d_c - 4)*M", "3*M + N"),
    "gams": ("(gamma*d_c - (gamma + 1)*gamma/2)*M", "d_v*N + 2*M", "(gamma - 1)*M", "2*M + N"),
}

LANES_PER_INSTANCE = 24
MEMORY_INSTANCES = 16
KB = 1024

_NONZERO_ENTRIES = {BaseGraphId.BG1: 316, BaseGraphId.BG2: 197}


@dataclass(frozen=True)
class OpCounts:
    comparisons: int = 0
    additions: int = 0
    lut_ops: int = 0
    memory_units: int = 0

    def __post_init__(self):
        for name in ("comparisons", "additions", "lut_ops", "memory_units"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be non-negative")

    @property
    def add_and_compare(self) -> int:
        return self.comparisons + self.additions

    def as_dict(self) -> dict:
        return {
            "comparisons": self.comparisons,
            "additions": self.additions,
            "lut_ops": self.lut_ops,
            "memory_units": self.memory_units,
        }


@dataclass
class OpCounter:
    """Running tallies fed by the decoder datapath."""

    comparisons: int = 0
    additions: int = 0
    lut_ops: int = 0
    memory_units: int = 0

    def add(self, comparisons: int = 0, additions: int = 0, lut_ops: int = 0):
        self.comparisons += int(comparisons)
        self.additions += int(additions)
        self.lut_ops += int(lut_ops)

    def snapshot(self) -> OpCounts:
        return OpCounts(self.comparisons, self.additions, self.lut_ops, self.memory_units)


def normalize_algorithm(name: str) -> tuple[str, int | None]:
    """Canonical algorithm name plus a gamma parsed from labels like 'gams3'."""
    text = name.strip().lower()
    text = _ALIASES.get(text, text)
    if text.startswith("gams") and text[4:].isdigit():
        return "gams", int(text[4:])
    if text not in ALGORITHMS:
        raise ConfigurationError(
            f"unknown algorithm {name!r}; expected one of {', '.join(ALGORITHMS)}"
        )
    return text, None


def counts_formula(algorithm: str, d_c: int, d_v: int, m: int, n: int, gamma: int = 3) -> OpCounts:
    """Evaluate the per-iteration complexity cells for a (d_v, d_c)-regular code."""
    name, parsed_gamma = normalize_algorithm(algorithm)
    gamma = parsed_gamma or gamma
    vn_additions = d_v * n
    match name:
        case "sp":
            return OpCounts(0, vn_additions + (2 * d_c - 1) * m, 2 * d_c * m, d_c * m + n)
        case "amin":
            return OpCounts(
                (d_c - 1) * m, vn_additions + (2 * d_c - 1) * m, (d_c - 1) * m, 3 * m + n
            )
        case "ms":
            return OpCounts((2 * d_c - 3) * m, vn_additions, 0, 2 * m + n)
        case "oms" | "nms":
            return OpCounts((2 * d_c - 3) * m, vn_additions + 2 * m, 0, 2 * m + n)
        case "a-ms":
            return OpCounts(
                (2 * d_c - 3) * m,
                vn_additions + (3 * d_c - 6) * m,
                (2 * d_c - 4) * m,
                3 * m + n,
            )
        case "gams":
            if gamma < 2:
                raise ConfigurationError(f"GA-MS gamma must be at least 2, got {gamma}")
            comparisons = (gamma * d_c - (gamma + 1) * gamma // 2) * m
            return OpCounts(comparisons, vn_additions + 2 * m, (gamma - 1) * m, 2 * m + n)


def _reduction(new: int, old: int) -> float:
    return 100.0 * (1.0 - new / old)


def reduction_percentages(d_c: int, d_v: int, m: int, n: int, gamma: int = 3) -> dict[str, float]:
    """Savings of GA-MS-gamma against A-MS and SP, in percent."""
    gams = counts_formula("gams", d_c, d_v, m, n, gamma)
    ams = counts_formula("a-ms", d_c, d_v, m, n)
    sp = counts_formula("sp", d_c, d_v, m, n)
    return {
        "add_compare_vs_ams": _reduction(gams.add_and_compare, ams.add_and_compare),
        "memory_vs_ams": _reduction(gams.memory_units, ams.memory_units),
        "lut_vs_ams": _reduction(gams.lut_ops, ams.lut_ops),
        "lut_vs_sp": _reduction(gams.lut_ops, sp.lut_ops),
    }


def complexity_table(d_c: int, d_v: int, m: int, n: int, gamma: int = 3) -> list[dict]:
    """One row per algorithm with symbolic cells and evaluated counts."""
    rows = []
    for name in ALGORITHMS:
        counts = counts_formula(name, d_c, d_v, m, n, gamma)
        label = f"gams{gamma}" if name == "gams" else name
        comparisons, additions, luts, memory = FORMULA_CELLS[name]
        rows.append(
            {
                "algorithm": label,
                "comparisons_formula": comparisons,
                "additions_formula": additions,
                "lut_formula": luts,
                "memory_formula": memory,
                **counts.as_dict(),
            }
        )
    return rows


def render_complexity_table(rows: list[dict], fmt: str = "markdown") -> str:
    columns = ["algorithm", "comparisons", "additions", "lut_ops", "memory_units"]
    if fmt == "csv":
        lines = [",".join(columns)]
        lines.extend(",".join(str(row[c]) for c in columns) for row in rows)
        return "\n".join(lines) + "\n"
    lines = ["| " + " | ".join(columns) + " |", "|" + "---|" * len(columns)]
    for row in rows:
        lines.append("| " + " | ".join(str(row[c]) for c in columns) + " |")
    return "\n".join(lines) + "\n"


def counts_instrumented(
    algorithm: str,
    proto: PrototypeMatrix,
    iterations: int = 1,
    gamma: int = 3,
    y=None,
) -> OpCounts:
    """
    Count datapath operations of an actual layered decode.

    Runs `iterations` full iterations without early exit and returns the
    per-iteration tallies; memory_units counts stored messages (channel
    LLRs plus R words). Zero iterations yields all zeros.

    Raises:
        InstrumentationError: the algorithm has no decoder with counting hooks.
    """
    name, parsed_gamma = normalize_algorithm(algorithm)
    if name == "a-ms":
        raise InstrumentationError("A-MS has no decoder with counting hooks; use counts_formula")
    if name == "gams":
        variant = DecoderVariant.gams(parsed_gamma or gamma)
    else:
        variant = DecoderVariant.parse(name)
    counter = OpCounter()
    if y is None:
        y = np.full(proto.n_p * proto.z, 4.0)
    layered_decode(variant, None, proto, y, iterations, counter=counter, early_exit=False)
    if iterations == 0:
        return OpCounts()
    totals = counter.snapshot()
    logger.debug(f"instrumented {variant.label}: {totals} over {iterations} iteration(s)")
    return OpCounts(
        comparisons=totals.comparisons // iterations,
        additions=totals.additions // iterations,
        lut_ops=totals.lut_ops // iterations,
        memory_units=totals.memory_units,
    )


@dataclass(frozen=True)
class MemoryBank:
    name: str
    width_bits: int
    depth: int
    instances: int

    @property
    def capacity_bytes(self) -> float:
        return self.width_bits * self.depth * self.instances / 8

    @property
    def capacity_kb(self) -> float:
        return self.capacity_bytes / KB


@dataclass(frozen=True)
class MemoryLayout:
    scheme: QuantScheme
    banks: tuple[MemoryBank, ...] = field(default_factory=tuple)

    @property
    def total_bytes(self) -> float:
        return sum(bank.capacity_bytes for bank in self.banks)

    @property
    def total_kb(self) -> float:
        return self.total_bytes / KB

    def bank(self, name: str) -> MemoryBank:
        for bank in self.banks:
            if bank.name == name:
                return bank
        raise KeyError(name)

    def rows(self) -> list[dict]:
        return [
            {
                "memory": bank.name,
                "width_bits": bank.width_bits,
                "depth": bank.depth,
                "instances": bank.instances,
                "capacity_kb": round(bank.capacity_kb, 2),
            }
            for bank in self.banks
        ]


def _graph_shape(bg: BaseGraph | BaseGraphId | int) -> tuple[int, int, int]:
    if isinstance(bg, BaseGraph):
        return bg.n_rows, bg.n_cols, bg.nnz
    bg_id = BaseGraphId.parse(bg)
    return bg_id.n_rows, bg_id.n_cols, _NONZERO_ENTRIES[bg_id]


def r_magnitude_word_bits(scheme: QuantScheme) -> int:
    """Two CN magnitudes plus the compressed critical-column index."""
    return 2 * (scheme.b_cn - 1) + INDEX_BITS


def memory_sizing(scheme: QuantScheme, bg: BaseGraph | BaseGraphId | int = BaseGraphId.BG1) -> MemoryLayout:
    """Q, T, R-sign and R-magnitude memories of the 16 x 24-lane decoder."""
    n_rows, n_cols, nnz = _graph_shape(bg)
    banks = (
        MemoryBank("Q", LANES_PER_INSTANCE * scheme.b_vn, n_cols, MEMORY_INSTANCES),
        MemoryBank("T", LANES_PER_INSTANCE * scheme.b_vn, n_cols, MEMORY_INSTANCES),
        MemoryBank("R-sign", LANES_PER_INSTANCE, nnz, MEMORY_INSTANCES),
        MemoryBank(
            "R-mag",
            LANES_PER_INSTANCE * r_magnitude_word_bits(scheme),
            n_rows,
            MEMORY_INSTANCES,
        ),
    )
    return MemoryLayout(scheme=scheme, banks=banks)


def compression_savings(scheme: QuantScheme, bg: BaseGraph | BaseGraphId | int = BaseGraphId.BG1) -> float:
    """Percent of R-message bits saved per lane versus storing every message."""
    n_rows, _, nnz = _graph_shape(bg)
    compressed = nnz + n_rows * r_magnitude_word_bits(scheme)
    return 100.0 * (1.0 - compressed / (nnz * scheme.b_cn))
