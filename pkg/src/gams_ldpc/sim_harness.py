"""
AWGN Monte-Carlo harness.

Gray-mapped modulation, max-log-MAP demapping, frame generation with
per-frame random streams, frame-parallel FER/BER estimation with binomial
confidence intervals and average-iteration statistics.
"""

import csv
import logging
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from math import sqrt
from pathlib import Path

import numpy as np
from scipy import stats

from .code_model import (
    BaseGraphId,
    CodeConfig,
    PrototypeMatrix,
    Z_MAX,
    derive_config,
    encode,
    expand_prototype,
    load_standard_graph,
)
from .core.errors import ConfigurationError, PlaceholderShiftsError
from .float_decoders import DecodeResult, DecoderVariant, layered_decode
from .quantized_gams import SCHEME_751, SCHEME_862, QuantScheme, build_lut, decode_quantized, quantize_llr
from .schedule_latency import build_oss, latency_simplified, natural_schedule, reorder_columns

logger = logging.getLogger(__name__)

DEFAULT_I_MAX = 15
DEFAULT_BLOCK_SIZE = 16
CONFIDENCE = 0.95
# below this many error events the normal interval is replaced by Clopper-Pearson
EXACT_CI_THRESHOLD = 30

CSV_COLUMNS = (
    "decoder", "bg", "Z", "Ku", "E", "R", "modulation", "ebn0_db", "frames",
    "frame_errors", "fer", "fer_ci_lo", "fer_ci_hi", "ber", "avg_iters",
)

FIXED_BETA = {
    ("gams3-fx", BaseGraphId.BG1): 0.25,
    ("gams3-fx", BaseGraphId.BG2): 0.1,
    ("gams4-fx", BaseGraphId.BG1): 0.1,
    ("gams4-fx", BaseGraphId.BG2): 0.1,
}
FLOAT_GROUP = ("sp", "ms", "nms", "oms", "amin", "gams3", "gams4")
FIXED_GROUP = ("gams3-fx", "gams4-fx")


class Modulation(str, Enum):
    BPSK = "bpsk"
    QPSK = "qpsk"
    QAM16 = "qam16"
    QAM64 = "qam64"

    @property
    def bits_per_symbol(self) -> int:
        return {"bpsk": 1, "qpsk": 2, "qam16": 4, "qam64": 6}[self.value]

    @property
    def symmetric(self) -> bool:
        """All-zero codeword statistics carry over to random data."""
        return self in (Modulation.BPSK, Modulation.QPSK)

    @classmethod
    def parse(cls, value) -> "Modulation":
        try:
            return cls(str(value).strip().lower().replace("-", ""))
        except ValueError:
            raise ConfigurationError(
                f"unknown modulation {value!r}; expected bpsk, qpsk, qam16 or qam64"
            )


def _gray_to_binary(bits: np.ndarray) -> np.ndarray:
    """MSB-first Gray code rows to their integer index."""
    value = np.zeros(bits.shape[0], dtype=np.int64)
    running = np.zeros(bits.shape[0], dtype=np.int64)
    for column in bits.T:
        running ^= column
        value = (value << 1) | running
    return value


def _pam_levels(bits: np.ndarray) -> np.ndarray:
    m = bits.shape[1]
    return (2 ** m - 1) - 2 * _gray_to_binary(bits)


@lru_cache(maxsize=None)
def constellation(modulation: Modulation) -> tuple[np.ndarray, np.ndarray]:
    """Unit-energy points and their bit labels, shape (2^m,) and (2^m, m)."""
    m = modulation.bits_per_symbol
    labels = ((np.arange(2 ** m)[:, None] >> np.arange(m - 1, -1, -1)) & 1).astype(np.int64)
    points = _map(labels, modulation)
    points.setflags(write=False)
    labels.setflags(write=False)
    return points, labels


def _map(groups: np.ndarray, modulation: Modulation) -> np.ndarray:
    if modulation is Modulation.BPSK:
        return (1.0 - 2.0 * groups[:, 0]).astype(complex)
    half = modulation.bits_per_symbol // 2
    symbols = _pam_levels(groups[:, :half]) + 1j * _pam_levels(groups[:, half:])
    # mean energy of the square grid: 2 * (4^half - 1) / 3
    return symbols / sqrt(2 * (4 ** half - 1) / 3)


def modulate(bits, modulation: Modulation) -> np.ndarray:
    """Gray-mapped unit-average-energy symbols; bit 0 maps to the positive side."""
    bits = np.asarray(bits, dtype=np.int64).reshape(-1)
    m = modulation.bits_per_symbol
    if bits.size % m:
        raise ConfigurationError(
            f"{bits.size} bits do not fill whole {modulation.value} symbols of {m} bits"
        )
    return _map(bits.reshape(-1, m), modulation)


def demap_maxlogmap(received, modulation: Modulation, sigma2: float) -> np.ndarray:
    """
    Per-bit max-log LLRs, positive for bit 0.

    LLR = (min distance over points labelled 1 - min over points labelled 0) / (2 sigma^2)
    with sigma^2 the noise variance per real dimension.
    """
    if sigma2 <= 0:
        raise ConfigurationError(f"noise variance must be positive, got {sigma2}")
    received = np.asarray(received, dtype=complex).reshape(-1)
    points, labels = constellation(modulation)
    distances = np.abs(received[:, None] - points[None, :]) ** 2
    llrs = np.empty((received.size, modulation.bits_per_symbol))
    for bit in range(modulation.bits_per_symbol):
        ones = labels[:, bit] == 1
        llrs[:, bit] = distances[:, ones].min(axis=1) - distances[:, ~ones].min(axis=1)
    return (llrs / (2.0 * sigma2)).reshape(-1)


@dataclass(frozen=True)
class ChannelConfig:
    modulation: Modulation
    ebn0_db: float
    config: CodeConfig

    @property
    def noise_variance(self) -> float:
        """Per real dimension, for unit-energy symbols."""
        rate = float(self.config.rate)
        return 1.0 / (2.0 * rate * self.modulation.bits_per_symbol * 10 ** (self.ebn0_db / 10))


@dataclass(frozen=True)
class DecoderSpec:
    """A named decoder: floating-point variant or fixed-point GA-MS bundle."""

    name: str
    variant: DecoderVariant
    scheme: QuantScheme | None = None
    lut_beta: float = 0.0

    @property
    def fixed_point(self) -> bool:
        return self.scheme is not None

    def decode(self, config: CodeConfig, proto: PrototypeMatrix, llrs, i_max: int, schedule=None) -> DecodeResult:
        if not self.fixed_point:
            return layered_decode(self.variant, config, proto, llrs, i_max, schedule)
        lut = _cached_lut(self.scheme, self.lut_beta)
        y_fixed = quantize_llr(self.scheme, llrs)
        result, _ = decode_quantized(
            config, proto, self.scheme, lut, self.variant.gamma, y_fixed, i_max, schedule
        )
        return result


@lru_cache(maxsize=16)
def _cached_lut(scheme: QuantScheme, beta: float):
    return build_lut(scheme, beta)


def decoder_spec(label: str, bg_id: BaseGraphId | int = BaseGraphId.BG1) -> DecoderSpec:
    """Resolve a single decoder label such as 'nms', 'gams3' or 'gams3-fx'."""
    text = label.strip().lower()
    bg_id = BaseGraphId.parse(bg_id)
    if text.endswith("-fx"):
        gamma = {"gams3-fx": 3, "gams4-fx": 4}.get(text)
        if gamma is None:
            raise ConfigurationError(f"unknown fixed-point decoder {label!r}; expected gams3-fx or gams4-fx")
        scheme = SCHEME_751 if gamma == 3 else SCHEME_862
        return DecoderSpec(text, DecoderVariant.gams(gamma), scheme, FIXED_BETA[(text, bg_id)])
    variant = DecoderVariant.parse(text)
    return DecoderSpec(variant.label, variant)


def resolve_decoders(labels, bg_id: BaseGraphId | int = BaseGraphId.BG1) -> list[DecoderSpec]:
    """Expand labels and the 'all-float' / 'all-fixed' groups into decoder specs."""
    if isinstance(labels, str):
        labels = labels.split(",")
    specs = []
    for label in labels:
        text = label.strip().lower()
        if text == "all-float":
            specs.extend(decoder_spec(name, bg_id) for name in FLOAT_GROUP)
        elif text == "all-fixed":
            specs.extend(decoder_spec(name, bg_id) for name in FIXED_GROUP)
        elif text:
            specs.append(decoder_spec(text, bg_id))
    if not specs:
        raise ConfigurationError("no decoder selected")
    return specs


@dataclass(frozen=True)
class StopRule:
    max_frames: int
    target_errors: int | None = None
    block_size: int = DEFAULT_BLOCK_SIZE

    def __post_init__(self):
        if self.max_frames <= 0:
            raise ConfigurationError("at least one frame must be requested")
        if self.block_size <= 0:
            raise ConfigurationError("block size must be positive")

    def reached(self, frames: int, frame_errors: int) -> bool:
        if frames >= self.max_frames:
            return True
        return self.target_errors is not None and frame_errors >= self.target_errors


@dataclass(frozen=True)
class SeedPolicy:
    """Per-frame random streams derived from a master seed."""

    master: int

    def rng(self, snr_key: int, frame: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.master, spawn_key=(snr_key, frame)))


def snr_key(ebn0_db: float) -> int:
    # non-negative integer identity of an SNR point, in millidecibels
    return int(round(ebn0_db * 1000)) + 1_000_000


@dataclass(frozen=True)
class SimStats:
    decoder: str
    config: CodeConfig
    modulation: Modulation
    ebn0_db: float
    frames: int = 0
    frame_errors: int = 0
    bit_errors: int = 0
    iterations: int = 0
    cycles_per_iteration: int = 0
    frequency_hz: float = 0.0

    def merge(self, other: "SimStats") -> "SimStats":
        return replace(
            self,
            frames=self.frames + other.frames,
            frame_errors=self.frame_errors + other.frame_errors,
            bit_errors=self.bit_errors + other.bit_errors,
            iterations=self.iterations + other.iterations,
        )

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames * self.config.k) if self.frames else 0.0

    @property
    def fer_ci(self) -> tuple[float, float]:
        return binomial_ci(self.frame_errors, self.frames)

    @property
    def avg_iterations(self) -> float:
        return self.iterations / self.frames if self.frames else 0.0

    @property
    def avg_throughput_model(self) -> float:
        """Z_max * N_p * F / (avg iterations * cycles per iteration), bits/s."""
        if not self.avg_iterations or not self.cycles_per_iteration:
            return 0.0
        return Z_MAX * self.config.n_p_used * self.frequency_hz / (
            self.avg_iterations * self.cycles_per_iteration
        )

    def csv_row(self) -> dict:
        lo, hi = self.fer_ci
        return {
            "decoder": self.decoder,
            "bg": int(self.config.bg_id),
            "Z": self.config.z,
            "Ku": self.config.k_u,
            "E": self.config.e,
            "R": str(self.config.rate),
            "modulation": self.modulation.value,
            "ebn0_db": f"{self.ebn0_db:g}",
            "frames": self.frames,
            "frame_errors": self.frame_errors,
            "fer": f"{self.fer:.6e}",
            "fer_ci_lo": f"{lo:.6e}",
            "fer_ci_hi": f"{hi:.6e}",
            "ber": f"{self.ber:.6e}",
            "avg_iters": f"{self.avg_iterations:.4f}",
        }


def binomial_ci(errors: int, trials: int, confidence: float = CONFIDENCE) -> tuple[float, float]:
    """Normal-approximation interval, Clopper-Pearson when errors are scarce."""
    if trials == 0:
        return 0.0, 1.0
    alpha = 1.0 - confidence
    if errors < EXACT_CI_THRESHOLD:
        lo = 0.0 if errors == 0 else float(stats.beta.ppf(alpha / 2, errors, trials - errors + 1))
        hi = 1.0 if errors == trials else float(stats.beta.ppf(1 - alpha / 2, errors + 1, trials - errors))
        return lo, hi
    p = errors / trials
    half = float(stats.norm.ppf(1 - alpha / 2)) * sqrt(p * (1 - p) / trials)
    return max(0.0, p - half), min(1.0, p + half)


@dataclass(frozen=True)
class FrameTask:
    """Everything a worker needs to simulate a contiguous block of frames."""

    decoder: DecoderSpec
    channel: ChannelConfig
    seeds: SeedPolicy
    i_max: int
    schedule_kind: str
    data_dir: str | None
    start: int
    stop: int


@lru_cache(maxsize=8)
def _code(bg_id: BaseGraphId, z: int, k_u: int, e: int, data_dir: str | None):
    graph = load_standard_graph(bg_id, data_dir)
    config = derive_config(graph, z, k_u, e)
    return config, expand_prototype(graph, config)


@lru_cache(maxsize=8)
def _schedule(proto: PrototypeMatrix, kind: str):
    if kind == "natural":
        return natural_schedule(proto)
    if kind == "oss":
        return reorder_columns(proto, build_oss(proto))
    raise ConfigurationError(f"unknown schedule {kind!r}; expected natural or oss")


def simulate_frame(task: FrameTask, config: CodeConfig, proto: PrototypeMatrix, schedule, frame: int):
    """Returns (frame error, bit errors, iterations) for one frame."""
    channel = task.channel
    modulation = channel.modulation
    rng = task.seeds.rng(snr_key(channel.ebn0_db), frame)
    if modulation.symmetric:
        codeword = np.zeros(config.n, dtype=np.uint8)
    else:
        message = rng.integers(0, 2, config.k, dtype=np.uint8)
        codeword = encode(config, proto, message).bits
    transmitted = codeword[config.transmitted_slice]
    symbols = modulate(transmitted, modulation)
    sigma = sqrt(channel.noise_variance)
    noise = sigma * rng.standard_normal(symbols.size)
    if modulation is not Modulation.BPSK:
        noise = noise + 1j * sigma * rng.standard_normal(symbols.size)
    llrs = np.zeros(config.n)
    llrs[config.transmitted_slice] = demap_maxlogmap(symbols + noise, modulation, channel.noise_variance)
    result = task.decoder.decode(config, proto, llrs, task.i_max, schedule)
    bit_errors = int(np.count_nonzero(result.hard_decisions[: config.k] != codeword[: config.k]))
    return bit_errors > 0, bit_errors, result.iterations


def simulate_block(task: FrameTask) -> tuple[int, int, int, int]:
    """Aggregate (frames, frame errors, bit errors, iterations) over frames [start, stop)."""
    c = task.channel.config
    config, proto = _code(c.bg_id, c.z, c.k_u, c.e, task.data_dir)
    schedule = _schedule(proto, task.schedule_kind)
    frame_errors = bit_errors = iterations = 0
    for frame in range(task.start, task.stop):
        failed, bits, used = simulate_frame(task, config, proto, schedule, frame)
        frame_errors += failed
        bit_errors += bits
        iterations += used
    return task.stop - task.start, frame_errors, bit_errors, iterations


@dataclass
class SimulationSetup:
    """Shared knobs of a sweep."""

    seeds: SeedPolicy
    stop: StopRule
    i_max: int = DEFAULT_I_MAX
    schedule_kind: str = "oss"
    workers: int = 1
    frequency_hz: float = 895e6
    data_dir: str | None = None
    # FER on stand-in shift coefficients is a smoke test, not a 5G NR result
    allow_placeholder_shifts: bool = False
    executor: Executor | None = field(default=None, repr=False)


def run_fer_point(decoder: DecoderSpec, channel: ChannelConfig, setup: SimulationSetup) -> SimStats:
    """
    Simulate frames until the stop rule fires.

    Frames run in blocks of `stop.block_size` in index order; the stop rule
    is checked after each block in order, so the frames counted never depend
    on how many workers ran them.
    """
    stop = setup.stop
    config = channel.config
    graph = load_standard_graph(config.bg_id, setup.data_dir)
    if graph.placeholder_shifts and not setup.allow_placeholder_shifts:
        raise PlaceholderShiftsError(
            f"{config.bg_id.name} tables in use carry placeholder shift coefficients; install the "
            "published tables (header shifts=published) or allow placeholder shifts for a smoke run"
        )
    _, proto = _code(config.bg_id, config.z, config.k_u, config.e, setup.data_dir)
    if config.e % channel.modulation.bits_per_symbol:
        raise ConfigurationError(
            f"E={config.e} is not a multiple of {channel.modulation.bits_per_symbol} bits per symbol"
        )
    totals = SimStats(
        decoder=decoder.name,
        config=config,
        modulation=channel.modulation,
        ebn0_db=channel.ebn0_db,
        cycles_per_iteration=latency_simplified(proto, 1),
        frequency_hz=setup.frequency_hz,
    )
    tasks = (
        FrameTask(
            decoder, channel, setup.seeds, setup.i_max, setup.schedule_kind,
            setup.data_dir, start, min(start + stop.block_size, stop.max_frames),
        )
        for start in range(0, stop.max_frames, stop.block_size)
    )
    wave = max(1, setup.workers)
    finished = False
    while not finished:
        batch = [task for _, task in zip(range(wave), tasks)]
        if not batch:
            break
        if setup.executor is not None and len(batch) > 1:
            outcomes = list(setup.executor.map(simulate_block, batch))
        else:
            outcomes = [simulate_block(task) for task in batch]
        for frames, frame_errors, bit_errors, iterations in outcomes:
            totals = totals.merge(
                replace(totals, frames=frames, frame_errors=frame_errors,
                        bit_errors=bit_errors, iterations=iterations)
            )
            if stop.reached(totals.frames, totals.frame_errors):
                finished = True
                break
    logger.info(
        f"{decoder.name} {config.label()} {channel.modulation.value} {channel.ebn0_db:g} dB: "
        f"{totals.frame_errors}/{totals.frames} frame errors, avg {totals.avg_iterations:.2f} iterations"
    )
    return totals


def _with_executor(setup: SimulationSetup, run):
    if setup.executor is not None or setup.workers <= 1:
        return run(setup)
    with ProcessPoolExecutor(max_workers=setup.workers) as executor:
        return run(replace(setup, executor=executor))


def run_sweep(
    decoders: list[DecoderSpec],
    ebn0_grid,
    modulation: Modulation,
    config: CodeConfig,
    setup: SimulationSetup,
) -> list[SimStats]:
    """One SimStats per (decoder, Eb/N0), decoder-major, deterministic under the seed policy."""
    grid = [float(x) for x in ebn0_grid]
    if not grid:
        raise ConfigurationError("Eb/N0 grid is empty")

    def run(active: SimulationSetup) -> list[SimStats]:
        rows = []
        for decoder in decoders:
            curve = [
                run_fer_point(decoder, ChannelConfig(modulation, ebn0, config), active)
                for ebn0 in grid
            ]
            _warn_if_not_monotone(decoder, grid, curve)
            rows.extend(curve)
        return rows

    return _with_executor(setup, run)


def _warn_if_not_monotone(decoder: DecoderSpec, grid: list[float], curve: list[SimStats]):
    if grid != sorted(grid):
        return
    for lower, higher in zip(curve, curve[1:]):
        if higher.fer > lower.fer_ci[1]:
            logger.warning(
                f"{decoder.name}: FER rises from {lower.fer:.3e} at {lower.ebn0_db:g} dB "
                f"to {higher.fer:.3e} at {higher.ebn0_db:g} dB"
            )


def parameter_sweep(
    kind: str,
    values,
    ebn0_db: float,
    modulation: Modulation,
    config: CodeConfig,
    setup: SimulationSetup,
) -> dict:
    """
    FER of NMS over alpha values or OMS over beta values at one SNR.

    Returns the per-value statistics and the value with the lowest FER
    (ties go to the first value).
    """
    kind = kind.strip().lower()
    values = [float(v) for v in values]
    if kind == "nms":
        specs = [DecoderSpec(f"nms:{v:g}", DecoderVariant.nms(v)) for v in values]
    elif kind == "oms":
        specs = [DecoderSpec(f"oms:{v:g}", DecoderVariant.oms(v)) for v in values]
    else:
        raise ConfigurationError(f"parameter sweeps support nms and oms, got {kind!r}")
    if not specs:
        raise ConfigurationError("parameter grid is empty")
    channel = ChannelConfig(modulation, ebn0_db, config)

    def run(active: SimulationSetup) -> list[SimStats]:
        return [run_fer_point(spec, channel, active) for spec in specs]

    rows = _with_executor(setup, run)
    best = min(range(len(rows)), key=lambda i: (rows[i].fer, i))
    parameter = "alpha" if kind == "nms" else "beta"
    return {"parameter": parameter, "values": values, "rows": rows, "best": values[best]}


def parse_grid(text: str) -> list[float]:
    """'start:step:stop' (inclusive) or a comma-separated list."""
    text = text.strip()
    try:
        if ":" not in text:
            return [float(v) for v in text.split(",") if v.strip()]
        start, step, stop = (Fraction(part) for part in text.split(":"))
    except ValueError:
        raise ConfigurationError(f"cannot parse grid {text!r}; use start:step:stop or a list")
    if step <= 0 or stop < start:
        raise ConfigurationError(f"grid {text!r} needs a positive step and stop >= start")
    count = int((stop - start) / step) + 1
    return [float(start + i * step) for i in range(count)]


def write_csv(rows: list[SimStats], path: str | Path):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row.csv_row())


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ConfigurationError(f"{path} does not follow the FER CSV schema")
        return list(reader)

