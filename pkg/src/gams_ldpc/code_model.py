"""5G NR quasi-cyclic LDPC code model.

Base-graph ingestion, lifting-size validation, prototype expansion, rate
matching by puncturing, and a systematic encoder used by the simulation
harness whenever the all-zero codeword shortcut does not apply.
"""

import logging
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from functools import cached_property, lru_cache
from math import ceil
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import sparse

from .core.context import get_settings
from .core.errors import (
    BaseGraphFormatError,
    ConfigurationError,
    DataFileNotFoundError,
    SingularCoreError,
    SizeGuardError,
)

logger = logging.getLogger(__name__)

LIFTING_SET_FACTORS = (2, 3, 5, 7, 9, 11, 13, 15)
Z_MIN = 2
Z_MAX = 384
PUNCTURED_COLUMNS = (0, 1)
CORE_PARITY_BLOCKS = 4
COEFFICIENTS_PER_ENTRY = len(LIFTING_SET_FACTORS)
DENSE_COLUMN_LIMIT = 100_000


class BaseGraphId(IntEnum):
    BG1 = 1
    BG2 = 2

    @property
    def n_rows(self) -> int:
        return _DIMENSIONS[self][0]

    @property
    def n_cols(self) -> int:
        return _DIMENSIONS[self][1]

    @property
    def k_u_max(self) -> int:
        return _DIMENSIONS[self][2]

    @classmethod
    def parse(cls, value) -> "BaseGraphId":
        """Accept 1, "1", "bg1" or "BG1"."""
        text = str(value).strip().lower().removeprefix("bg")
        try:
            return cls(int(text))
        except ValueError:
            raise ConfigurationError(f"unknown base graph {value!r}; expected 1 or 2")


_DIMENSIONS = {
    BaseGraphId.BG1: (46, 68, 22),
    BaseGraphId.BG2: (42, 52, 10),
}


class BaseGraphEntry(NamedTuple):
    row: int
    col: int
    coefficients: tuple[int, ...]


@dataclass(frozen=True)
class BaseGraph:
    """A 5G NR base graph with one shift coefficient per lifting set."""

    bg_id: BaseGraphId
    n_rows: int
    n_cols: int
    k_u_max: int
    entries: tuple[BaseGraphEntry, ...]
    # coefficients are stand-ins; the layout alone is trustworthy
    placeholder_shifts: bool = False

    def __post_init__(self):
        seen = set()
        for entry in self.entries:
            key = (entry.row, entry.col)
            if key in seen:
                raise BaseGraphFormatError(
                    f"duplicate entry at row {entry.row}, column {entry.col}"
                )
            seen.add(key)
            if not (0 <= entry.row < self.n_rows and 0 <= entry.col < self.n_cols):
                raise BaseGraphFormatError(
                    f"entry ({entry.row}, {entry.col}) outside a "
                    f"{self.n_rows}x{self.n_cols} base graph"
                )
            if len(entry.coefficients) != COEFFICIENTS_PER_ENTRY:
                raise BaseGraphFormatError(
                    f"entry ({entry.row}, {entry.col}) has "
                    f"{len(entry.coefficients)} coefficients, expected "
                    f"{COEFFICIENTS_PER_ENTRY}"
                )
            if any(v < 0 for v in entry.coefficients):
                raise BaseGraphFormatError(
                    f"negative shift coefficient at ({entry.row}, {entry.col})"
                )

    @property
    def nnz(self) -> int:
        return len(self.entries)

    @cached_property
    def _by_row(self) -> dict[int, dict[int, tuple[int, ...]]]:
        rows: dict[int, dict[int, tuple[int, ...]]] = {r: {} for r in range(self.n_rows)}
        for entry in self.entries:
            rows[entry.row][entry.col] = entry.coefficients
        return rows

    def row_columns(self, row: int) -> tuple[int, ...]:
        return tuple(sorted(self._by_row[row]))

    def column_degrees(self) -> np.ndarray:
        degrees = np.zeros(self.n_cols, dtype=int)
        for entry in self.entries:
            degrees[entry.col] += 1
        return degrees

    def extension_parity_columns(self) -> dict[int, tuple[int, ...]]:
        """Degree-1 columns of each extension row (rows 4 and up)."""
        degrees = self.column_degrees()
        return {
            row: tuple(c for c in self.row_columns(row) if degrees[c] == 1)
            for row in range(CORE_PARITY_BLOCKS, self.n_rows)
        }


SHIFT_KINDS = ("published", "placeholder")


def _parse_header(line: str, line_no: int) -> tuple[BaseGraphId, int, int, bool]:
    """`BG<1|2> rows=<r> cols=<c>` with an optional `shifts=published|placeholder`."""
    fields = line.split()
    try:
        if len(fields) not in (3, 4) or not fields[0].upper().startswith("BG"):
            raise ValueError
        bg_id = BaseGraphId(int(fields[0][2:]))
        key_values = dict(field.split("=", 1) for field in fields[1:])
        shifts = key_values.pop("shifts", "published")
        if shifts not in SHIFT_KINDS or set(key_values) != {"rows", "cols"}:
            raise ValueError
        return bg_id, int(key_values["rows"]), int(key_values["cols"]), shifts == "placeholder"
    except (ValueError, KeyError):
        raise BaseGraphFormatError(
            f"line {line_no}: malformed header {line.strip()!r}; "
            "expected 'BG<1|2> rows=<r> cols=<c> [shifts=published|placeholder]'"
        )


def load_base_graph(path: str | Path, bg_id: BaseGraphId | int) -> BaseGraph:
    """
    Load a base graph from the text format shipped under data/.

    The first non-comment line is the header
    `BG<1|2> rows=<r> cols=<c> [shifts=published|placeholder]`;
    every following line is `r c V0 .. V7`. Lines starting with '#' are
    comments.

    Raises:
        DataFileNotFoundError: the file does not exist.
        BaseGraphFormatError: malformed line, duplicate entry, or a dimension
            or structure mismatch with `bg_id`.
    """
    path = Path(path)
    bg_id = BaseGraphId(bg_id)
    if not path.is_file():
        raise DataFileNotFoundError(path)

    header = None
    entries = []
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if header is None:
                header = _parse_header(stripped, line_no)
                continue
            fields = stripped.split()
            if len(fields) != 2 + COEFFICIENTS_PER_ENTRY:
                raise BaseGraphFormatError(
                    f"line {line_no}: malformed entry {stripped!r}; expected "
                    f"'r c' followed by {COEFFICIENTS_PER_ENTRY} coefficients"
                )
            try:
                values = [int(field) for field in fields]
            except ValueError:
                raise BaseGraphFormatError(
                    f"line {line_no}: non-integer field in {stripped!r}"
                )
            entries.append(BaseGraphEntry(values[0], values[1], tuple(values[2:])))

    if header is None:
        raise BaseGraphFormatError(f"{path}: missing 'BG<1|2> rows= cols=' header")
    file_bg, rows, cols, placeholder = header
    if file_bg != bg_id:
        raise BaseGraphFormatError(f"{path}: file declares {file_bg.name}, expected {bg_id.name}")
    if (rows, cols) != (bg_id.n_rows, bg_id.n_cols):
        raise BaseGraphFormatError(
            f"{path}: dimension mismatch, {rows}x{cols} declared but "
            f"{bg_id.name} is {bg_id.n_rows}x{bg_id.n_cols}"
        )

    graph = BaseGraph(bg_id, rows, cols, bg_id.k_u_max, tuple(entries), placeholder)
    for row, columns in graph.extension_parity_columns().items():
        if len(columns) != 1:
            raise BaseGraphFormatError(
                f"{path}: extension row {row} has {len(columns)} degree-1 "
                "parity columns, expected exactly one"
            )
    logger.info(f"Loaded {bg_id.name} from {path} ({graph.nnz} entries)")
    if placeholder:
        logger.warning(f"{path} carries placeholder shift coefficients; FER runs need the published tables")
    return graph


@lru_cache(maxsize=8)
def load_standard_graph(bg_id: BaseGraphId | int, data_dir: str | None = None) -> BaseGraph:
    """Load bg1.txt / bg2.txt from the configured data directory."""
    bg_id = BaseGraphId(bg_id)
    path = get_settings().base_graph_path(bg_id, data_dir)
    return load_base_graph(path, bg_id)


def validate_lifting_size(z: int) -> tuple[bool, int | None]:
    """Return (valid, lifting-set index) for a lifting size Z."""
    if not isinstance(z, (int, np.integer)) or not Z_MIN <= z <= Z_MAX:
        return False, None
    for set_index, factor in enumerate(LIFTING_SET_FACTORS):
        if z % factor:
            continue
        power = z // factor
        if power & (power - 1) == 0:
            return True, set_index
    return False, None


def lifting_sizes() -> list[int]:
    """All 51 valid lifting sizes in ascending order."""
    return [z for z in range(Z_MIN, Z_MAX + 1) if validate_lifting_size(z)[0]]


@dataclass(frozen=True)
class CodeConfig:
    bg_id: BaseGraphId
    z: int
    k_u: int
    e: int
    set_index: int
    n_p_used: int
    m_p_used: int

    @property
    def k(self) -> int:
        return self.k_u * self.z

    @property
    def rate(self) -> Fraction:
        return Fraction(self.k, self.e)

    @property
    def n(self) -> int:
        """Codeword length before puncturing."""
        return self.n_p_used * self.z

    @property
    def punctured_columns(self) -> tuple[int, ...]:
        return PUNCTURED_COLUMNS

    @property
    def tail_zero_llrs(self) -> int:
        return self.n - len(PUNCTURED_COLUMNS) * self.z - self.e

    @property
    def transmitted_slice(self) -> slice:
        start = len(PUNCTURED_COLUMNS) * self.z
        return slice(start, start + self.e)

    def label(self) -> str:
        return f"bg{int(self.bg_id)}/z{self.z}/ku{self.k_u}/e{self.e}"


def derive_config(bg: BaseGraph | BaseGraphId | int, z: int, k_u: int, e: int) -> CodeConfig:
    """
    Resolve rate-matching parameters for (bg, Z, K_u, E).

    n_p_used = 2 + ceil(E/Z) columns are used, of which the first two are
    punctured; m_p_used = n_p_used - K_u rows are decoded.
    """
    bg_id = bg.bg_id if isinstance(bg, BaseGraph) else BaseGraphId(bg)
    valid, set_index = validate_lifting_size(z)
    if not valid:
        raise ConfigurationError(f"invalid lifting size Z={z}")
    if not 1 <= k_u <= bg_id.k_u_max:
        raise ConfigurationError(
            f"K_u={k_u} outside 1..{bg_id.k_u_max} for {bg_id.name}"
        )
    if e <= 0:
        raise ConfigurationError(f"transmitted length E must be positive, got {e}")

    n_p_used = len(PUNCTURED_COLUMNS) + ceil(e / z)
    m_p_used = n_p_used - k_u
    if m_p_used > bg_id.n_rows:
        raise ConfigurationError(
            f"E={e} too large for {bg_id.name}: needs {m_p_used} rows, "
            f"only {bg_id.n_rows} available"
        )
    if m_p_used < CORE_PARITY_BLOCKS:
        raise ConfigurationError(
            f"E={e} too small: {m_p_used} rows used, the core parity part "
            f"needs {CORE_PARITY_BLOCKS}"
        )
    return CodeConfig(bg_id, z, k_u, e, set_index, n_p_used, m_p_used)


def parse_rate(rate: str | Fraction | float) -> Fraction:
    if isinstance(rate, Fraction):
        value = rate
    else:
        try:
            value = Fraction(str(rate).strip())
        except (ValueError, ZeroDivisionError):
            raise ConfigurationError(f"invalid code rate {rate!r}; use a fraction like 1/3")
    if not 0 < value <= 1:
        raise ConfigurationError(f"code rate must lie in (0, 1], got {value}")
    return value


def config_for_rate(bg, z: int, k_u: int, rate: str | Fraction | float) -> CodeConfig:
    """derive_config with E resolved from a code rate (E = K/R, rounded)."""
    rate = parse_rate(rate)
    e = round(Fraction(k_u * z) / rate)
    return derive_config(bg, z, k_u, e)


def used_base_columns(config: CodeConfig) -> tuple[int, ...]:
    """Base-graph columns used by a config, in codeword order."""
    k_u_max = config.bg_id.k_u_max
    info = tuple(range(config.k_u))
    parity = tuple(range(k_u_max, k_u_max + config.m_p_used))
    return info + parity


@dataclass(frozen=True, eq=False)
class PrototypeMatrix:
    """Lifted prototype: shift per (layer, block column), -1 where absent."""

    z: int
    shifts: np.ndarray
    base_columns: tuple[int, ...]
    bg_id: BaseGraphId | None = None
    k_u: int | None = None

    def __post_init__(self):
        shifts = np.array(self.shifts, dtype=np.int64)
        if shifts.ndim != 2:
            raise ConfigurationError("prototype shifts must be a two-dimensional array")
        if len(self.base_columns) != shifts.shape[1]:
            raise ConfigurationError("base_columns must name every prototype column")
        if np.any((shifts < -1) | (shifts >= self.z)):
            raise ConfigurationError(f"prototype shifts must lie in {{-1}} or [0, {self.z})")
        shifts.setflags(write=False)
        object.__setattr__(self, "shifts", shifts)

    @classmethod
    def from_shifts(cls, shifts, z: int) -> "PrototypeMatrix":
        """Toy prototype without a base graph behind it."""
        shifts = np.asarray(shifts)
        return cls(z=z, shifts=shifts, base_columns=tuple(range(shifts.shape[1])))

    @property
    def m_p(self) -> int:
        return self.shifts.shape[0]

    @property
    def n_p(self) -> int:
        return self.shifts.shape[1]

    @cached_property
    def layers(self) -> tuple[tuple[int, ...], ...]:
        """Present block columns of every layer, ascending."""
        return tuple(tuple(int(v) for v in np.flatnonzero(row >= 0)) for row in self.shifts)

    @cached_property
    def row_degrees(self) -> np.ndarray:
        return (self.shifts >= 0).sum(axis=1)

    @cached_property
    def column_degrees(self) -> np.ndarray:
        return (self.shifts >= 0).sum(axis=0)

    def shift(self, layer: int, col: int) -> int:
        return int(self.shifts[layer, col])


def expand_prototype(bg: BaseGraph, config: CodeConfig) -> PrototypeMatrix:
    """Select the lifting-set coefficients and reduce them modulo Z."""
    if config.bg_id != bg.bg_id:
        raise ConfigurationError(f"config is for {config.bg_id.name}, graph is {bg.bg_id.name}")
    columns = used_base_columns(config)
    position = {col: index for index, col in enumerate(columns)}
    shifts = np.full((config.m_p_used, config.n_p_used), -1, dtype=np.int64)
    for entry in bg.entries:
        if entry.row < config.m_p_used and entry.col in position:
            shifts[entry.row, position[entry.col]] = entry.coefficients[config.set_index] % config.z
    return PrototypeMatrix(
        z=config.z,
        shifts=shifts,
        base_columns=columns,
        bg_id=bg.bg_id,
        k_u=config.k_u,
    )


def rotate_block(block: np.ndarray, shift: int) -> np.ndarray:
    """Apply the circulant of `shift`: out[k] = block[(k + shift) mod Z]."""
    return np.roll(block, -shift, axis=0)


def unrotate_block(block: np.ndarray, shift: int) -> np.ndarray:
    return np.roll(block, shift, axis=0)


def expand_full_h(proto: PrototypeMatrix) -> sparse.csr_matrix:
    """Binary (m_p*Z) x (n_p*Z) parity-check matrix."""
    z = proto.z
    if proto.n_p * z > DENSE_COLUMN_LIMIT:
        raise SizeGuardError(
            f"expanded matrix would have {proto.n_p * z} columns "
            f"(limit {DENSE_COLUMN_LIMIT})"
        )
    lanes = np.arange(z)
    rows, cols = [], []
    for layer, columns in enumerate(proto.layers):
        for col in columns:
            rows.append(layer * z + lanes)
            cols.append(col * z + (lanes + proto.shift(layer, col)) % z)
    if rows:
        row_index = np.concatenate(rows)
        col_index = np.concatenate(cols)
    else:
        row_index = col_index = np.zeros(0, dtype=np.int64)
    data = np.ones(row_index.size, dtype=np.uint8)
    return sparse.csr_matrix(
        (data, (row_index, col_index)), shape=(proto.m_p * z, proto.n_p * z)
    )


def syndrome(proto: PrototypeMatrix, bits: np.ndarray) -> np.ndarray:
    """Per-layer parity of hard decisions, shape (m_p, Z)."""
    blocks = np.asarray(bits, dtype=np.uint8).reshape(proto.n_p, proto.z)
    parity = np.zeros((proto.m_p, proto.z), dtype=np.uint8)
    for layer, columns in enumerate(proto.layers):
        for col in columns:
            parity[layer] ^= rotate_block(blocks[col], proto.shift(layer, col))
    return parity


@dataclass(frozen=True, eq=False)
class Codeword:
    bits: np.ndarray
    config: CodeConfig

    @property
    def message(self) -> np.ndarray:
        return self.bits[: self.config.k]


def _circulant(z: int, shift: int) -> np.ndarray:
    block = np.zeros((z, z), dtype=bool)
    lanes = np.arange(z)
    block[lanes, (lanes + shift) % z] = True
    return block


def _gf2_inverse(matrix: np.ndarray) -> np.ndarray:
    n = matrix.shape[0]
    work = np.concatenate([matrix.astype(bool), np.eye(n, dtype=bool)], axis=1)
    for col in range(n):
        candidates = np.flatnonzero(work[col:, col])
        if candidates.size == 0:
            raise SingularCoreError(
                f"core parity system is singular at column {col}; check the "
                "base-graph shift coefficients"
            )
        pivot = col + int(candidates[0])
        if pivot != col:
            work[[col, pivot]] = work[[pivot, col]]
        rows = np.flatnonzero(work[:, col])
        rows = rows[rows != col]
        if rows.size:
            work[rows] ^= work[col]
    return work[:, n:].astype(np.int32)


@lru_cache(maxsize=32)
def _core_inverse(z: int, core_blocks: tuple[tuple[int, int, int], ...]) -> np.ndarray:
    size = CORE_PARITY_BLOCKS * z
    matrix = np.zeros((size, size), dtype=bool)
    for row, block_col, shift in core_blocks:
        matrix[row * z:(row + 1) * z, block_col * z:(block_col + 1) * z] ^= _circulant(z, shift)
    inverse = _gf2_inverse(matrix)
    inverse.setflags(write=False)
    logger.debug(f"Solved {CORE_PARITY_BLOCKS}x{CORE_PARITY_BLOCKS} circulant core for Z={z}")
    return inverse


def encode(config: CodeConfig, proto: PrototypeMatrix, message_bits) -> Codeword:
    """
    Systematic encoding on the used rows.

    The four core parity blocks are solved jointly through the cached GF(2)
    inverse of the circulant core; each extension parity block then follows
    from its own row.
    """
    message = np.asarray(message_bits, dtype=np.uint8).reshape(-1)
    if message.size != config.k:
        raise ConfigurationError(f"message has {message.size} bits, expected K={config.k}")
    z, k_u = proto.z, config.k_u
    core = range(k_u, k_u + CORE_PARITY_BLOCKS)
    blocks = np.zeros((proto.n_p, z), dtype=np.uint8)
    blocks[:k_u] = message.reshape(k_u, z)

    core_syndrome = np.zeros((CORE_PARITY_BLOCKS, z), dtype=np.uint8)
    core_blocks = []
    for row in range(CORE_PARITY_BLOCKS):
        for col in proto.layers[row]:
            if col < k_u:
                core_syndrome[row] ^= rotate_block(blocks[col], proto.shift(row, col))
            elif col in core:
                core_blocks.append((row, col - k_u, proto.shift(row, col)))
            else:
                raise ConfigurationError(
                    f"core row {row} references extension column {col}"
                )
    inverse = _core_inverse(z, tuple(core_blocks))
    solution = (inverse @ core_syndrome.reshape(-1).astype(np.int32)) % 2
    blocks[k_u:k_u + CORE_PARITY_BLOCKS] = solution.reshape(CORE_PARITY_BLOCKS, z)

    for row in range(CORE_PARITY_BLOCKS, proto.m_p):
        own = k_u + row
        accumulated = np.zeros(z, dtype=np.uint8)
        for col in proto.layers[row]:
            if col == own:
                continue
            if col >= own:
                raise ConfigurationError(
                    f"extension row {row} references a later parity column {col}"
                )
            accumulated ^= rotate_block(blocks[col], proto.shift(row, col))
        if proto.shift(row, own) < 0:
            raise ConfigurationError(f"extension row {row} lacks its parity column")
        blocks[own] = unrotate_block(accumulated, proto.shift(row, own))
    return Codeword(bits=blocks.reshape(-1), config=config)
