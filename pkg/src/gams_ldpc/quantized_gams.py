"""
Fixed-point GA-MS decoding.

Uniform channel quantization, the two-input box-plus lookup table with the
offset beta folded in, minima tracking through a pruned sorter, compressed
R-message storage, re-rotation of stored posteriors and early termination
by partial parity checks.
"""

import logging
from bisect import bisect_right
from dataclasses import dataclass, field, replace

import numpy as np

from .code_model import CodeConfig, PrototypeMatrix, rotate_block, syndrome, unrotate_block
from .core.errors import CompressionError, ConfigurationError
from .float_decoders import DecodeResult, box_plus_correction, layer_order

logger = logging.getLogger(__name__)

INDEX_BITS = 5
R_STORAGE_MODES = ("compressed", "explicit")
ROTATION_MODES = ("rerotate", "naive")


@dataclass(frozen=True)
class QuantScheme:
    """(B_VN, B_CN, B_f) fixed-point format."""

    b_vn: int
    b_cn: int
    b_f: int

    def __post_init__(self):
        if not self.b_vn > self.b_cn >= 2:
            raise ConfigurationError(
                f"quantization scheme needs B_VN > B_CN >= 2, got {self.label}"
            )
        if self.b_f < 0:
            raise ConfigurationError(f"fractional bits must be non-negative, got {self.b_f}")

    @classmethod
    def parse(cls, text: str) -> "QuantScheme":
        try:
            b_vn, b_cn, b_f = (int(part) for part in str(text).split(","))
        except ValueError:
            raise ConfigurationError(
                f"unknown quantization scheme {text!r}; expected 'B_VN,B_CN,B_f' such as 7,5,1"
            )
        return cls(b_vn, b_cn, b_f)

    @property
    def label(self) -> str:
        return f"{self.b_vn},{self.b_cn},{self.b_f}"

    @property
    def delta(self) -> float:
        return 2.0 ** -self.b_f

    @property
    def vn_max(self) -> int:
        return 2 ** (self.b_vn - 1) - 1

    @property
    def cn_max(self) -> int:
        return 2 ** (self.b_cn - 1) - 1

    @property
    def lut_size(self) -> int:
        return 2 ** (self.b_cn - 1)

    @property
    def sentinel(self) -> int:
        """Minima register reset value, one past the CN magnitude range."""
        return self.lut_size


SCHEME_751 = QuantScheme(7, 5, 1)
SCHEME_862 = QuantScheme(8, 6, 2)


def quantize_llr(scheme: QuantScheme, y):
    """sgn(y) * min(floor(|y|/delta + 0.5), 2^(B_VN-1) - 1)."""
    y = np.asarray(y, dtype=float)
    magnitude = np.minimum(np.floor(np.abs(y) / scheme.delta + 0.5), scheme.vn_max)
    out = (np.sign(y) * magnitude).astype(np.int32)
    return int(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class BoxPlusLut:
    scheme: QuantScheme
    beta: float
    table: np.ndarray

    def __call__(self, a, b):
        return self.table[a, b]

    def fold(self, values) -> int:
        """Left fold of the table over magnitudes; sentinel entries are skipped."""
        values = [int(v) for v in values if v <= self.scheme.cn_max]
        if not values:
            return self.scheme.sentinel
        result = values[0]
        for value in values[1:]:
            result = int(self.table[result, value])
        return result

    def dump(self) -> str:
        lines = [f"scheme={self.scheme.label} beta={self.beta:g}"]
        lines.extend(" ".join(str(int(v)) for v in row) for row in self.table)
        return "\n".join(lines) + "\n"


def build_lut(scheme: QuantScheme, beta: float) -> BoxPlusLut:
    """
    Two-input box-plus table in the CN magnitude domain.

    table[a][b] = max(min(a, b) - floor(|D(a*delta, b*delta)|/delta + beta + 0.5), 0)
    where D is the correction term of the box-plus decomposition.
    """
    if beta < 0:
        raise ConfigurationError(f"LUT offset beta must be non-negative, got {beta}")
    steps = np.arange(scheme.lut_size)
    a = steps[:, None]
    b = steps[None, :]
    correction = np.abs(box_plus_correction(a * scheme.delta, b * scheme.delta))
    table = np.maximum(
        np.minimum(a, b) - np.floor(correction / scheme.delta + beta + 0.5), 0
    ).astype(np.int32)
    table.setflags(write=False)
    return BoxPlusLut(scheme=scheme, beta=beta, table=table)


def parse_lut_dump(text: str) -> BoxPlusLut:
    lines = [line for line in text.strip().splitlines() if line.strip()]
    try:
        header = dict(part.split("=", 1) for part in lines[0].split())
        scheme = QuantScheme.parse(header["scheme"])
        beta = float(header["beta"])
        table = np.array([[int(v) for v in line.split()] for line in lines[1:]], dtype=np.int32)
    except (IndexError, KeyError, ValueError):
        raise ConfigurationError("malformed LUT dump; expected 'scheme=<B_VN>,<B_CN>,<B_f> beta=<beta>' header")
    if table.shape != (scheme.lut_size, scheme.lut_size):
        raise ConfigurationError(f"LUT dump has shape {table.shape}, expected {scheme.lut_size}x{scheme.lut_size}")
    table.setflags(write=False)
    return BoxPlusLut(scheme=scheme, beta=beta, table=table)


@dataclass(frozen=True)
class MinimaSet:
    """Ascending gamma minima, block-column position of the first, running sign."""

    m: tuple[int, ...]
    v_min: int = -1
    s: int = 1

    @classmethod
    def initial(cls, scheme: QuantScheme, gamma: int) -> "MinimaSet":
        return cls(m=(scheme.sentinel,) * gamma)

    @property
    def gamma(self) -> int:
        return len(self.m)

    def with_sign(self, sign: int) -> "MinimaSet":
        return replace(self, s=self.s * (-1 if sign < 0 else 1))


def sort_min(state: MinimaSet, new_mag: int, new_col: int) -> MinimaSet:
    """Insert one magnitude into the kept minima (pruned gamma+1 -> gamma sorter)."""
    m = list(state.m)
    position = bisect_right(m, new_mag)
    if position < len(m):
        m.insert(position, new_mag)
        m.pop()
    v_min = new_col if new_mag < state.m[0] else state.v_min
    return replace(state, m=tuple(m), v_min=v_min)


def lut_min(lut: BoxPlusLut, state: MinimaSet, v: int) -> int:
    """Outgoing magnitude for block column v: critical skips m[0]."""
    if v == state.v_min:
        return lut.fold(state.m[1:])
    return lut.fold(state.m)


def _sort_min_lanes(m: np.ndarray, v_min: np.ndarray, mag: np.ndarray, col: int):
    sorted_m = np.empty_like(m)
    sorted_m[0] = np.minimum(m[0], mag)
    for i in range(1, m.shape[0]):
        sorted_m[i] = np.minimum(m[i], np.maximum(m[i - 1], mag))
    return sorted_m, np.where(mag < m[0], col, v_min)


def _fold_lanes(lut: BoxPlusLut, values: np.ndarray) -> np.ndarray:
    cn_max = lut.scheme.cn_max
    result = values[0]
    for value in values[1:]:
        looked_up = lut.table[np.minimum(result, cn_max), np.minimum(value, cn_max)]
        result = np.where(
            (result <= cn_max) & (value <= cn_max),
            looked_up,
            np.where(result <= cn_max, result, value),
        )
    return result


@dataclass(frozen=True)
class CompressedRRow:
    mag_crit: int
    mag_noncrit: int
    idx: int
    signs: tuple[bool, ...]

    def __post_init__(self):
        if not 0 <= self.idx < 2 ** INDEX_BITS:
            raise CompressionError(f"critical index {self.idx} does not fit {INDEX_BITS} bits")
        if self.idx >= len(self.signs):
            raise CompressionError(f"critical index {self.idx} outside a row of {len(self.signs)} edges")

    @property
    def d_c(self) -> int:
        return len(self.signs)


def compress_r(r_row, critical_pos: int | None = None) -> CompressedRRow:
    """
    Pack a row of R-messages into two magnitudes, an index and sign bits.

    Raises:
        CompressionError: the row does not hold one critical magnitude and
            one shared non-critical magnitude.
    """
    row = [int(v) for v in r_row]
    mags = [abs(v) for v in row]
    if critical_pos is None:
        critical_pos = _infer_critical(mags)
    others = {mag for pos, mag in enumerate(mags) if pos != critical_pos}
    if len(others) > 1:
        raise CompressionError(
            f"R-message row has more than two distinct magnitudes: {sorted(set(mags))}"
        )
    mag_noncrit = others.pop() if others else mags[critical_pos]
    return CompressedRRow(
        mag_crit=mags[critical_pos],
        mag_noncrit=mag_noncrit,
        idx=critical_pos,
        signs=tuple(v < 0 for v in row),
    )


def _infer_critical(mags: list[int]) -> int:
    distinct = set(mags)
    if len(distinct) == 1:
        return 0
    if len(distinct) > 2:
        raise CompressionError(f"R-message row has more than two distinct magnitudes: {sorted(distinct)}")
    singles = [pos for pos, mag in enumerate(mags) if mags.count(mag) == 1]
    return max(singles, key=lambda pos: mags[pos])


def expand_r(row: CompressedRRow, columns) -> np.ndarray:
    """Signed R-messages in the order of the layer's column list."""
    if len(columns) != row.d_c:
        raise CompressionError(f"compressed row holds {row.d_c} edges, layer has {len(columns)}")
    mags = np.full(row.d_c, row.mag_noncrit, dtype=np.int32)
    mags[row.idx] = row.mag_crit
    return np.where(np.array(row.signs), -mags, mags)


class _ExplicitRMemory:
    def __init__(self, proto: PrototypeMatrix):
        self._rows = [np.zeros((len(c), proto.z), dtype=np.int32) for c in proto.layers]

    def read(self, layer: int) -> np.ndarray:
        return self._rows[layer]

    def write(self, layer: int, r: np.ndarray, crit_idx: np.ndarray, crit: np.ndarray, noncrit: np.ndarray):
        self._rows[layer] = r


class _CompressedRMemory:
    """Per-layer words: two magnitudes and a 5-bit index per lane, plus sign bits."""

    def __init__(self, proto: PrototypeMatrix):
        z = proto.z
        self._words = []
        for columns in proto.layers:
            if len(columns) > 2 ** INDEX_BITS:
                raise CompressionError(f"row degree {len(columns)} exceeds the {INDEX_BITS}-bit index")
            self._words.append(
                (
                    np.zeros(z, dtype=np.int32),
                    np.zeros(z, dtype=np.int32),
                    np.zeros(z, dtype=np.uint8),
                    np.zeros((len(columns), z), dtype=bool),
                )
            )

    def read(self, layer: int) -> np.ndarray:
        crit, noncrit, idx, signs = self._words[layer]
        positions = np.arange(signs.shape[0])[:, None]
        mags = np.where(positions == idx[None, :], crit[None, :], noncrit[None, :])
        return np.where(signs, -mags, mags)

    def write(self, layer: int, r: np.ndarray, crit_idx: np.ndarray, crit: np.ndarray, noncrit: np.ndarray):
        self._words[layer] = (crit, noncrit, crit_idx.astype(np.uint8), r < 0)


@dataclass
class PpcState:
    """One pass flag per used layer, reset at the start of every sweep."""

    flags: np.ndarray

    @classmethod
    def for_layers(cls, n_layers: int) -> "PpcState":
        return cls(flags=np.zeros(n_layers, dtype=bool))

    def reset(self):
        self.flags[:] = False


def ppc_update_and_check(ppc: PpcState, layer: int, q_layer, previous_q=None) -> bool:
    """
    Update the partial parity check of `layer` and report whether all pass.

    `q_layer` holds the updated posteriors of the layer's edges, shape
    (d_c, Z), in the layer's rotated frame; `previous_q` the values before
    the update. The layer passes when each of its Z parity checks is even,
    no posterior is zero and no hard decision flipped.
    """
    q_layer = np.asarray(q_layer)
    hard = q_layer < 0
    passed = not np.any(np.bitwise_xor.reduce(hard, axis=0)) and bool(np.all(q_layer != 0))
    if passed and previous_q is not None:
        passed = bool(np.array_equal(np.asarray(previous_q) < 0, hard))
    ppc.flags[layer] = passed
    return bool(ppc.flags.all())


def _column_order(proto: PrototypeMatrix, schedule, layer: int, attr: str) -> tuple[int, ...]:
    """Positions into proto.layers[layer] in MIN ('column_order') or SEL ('sel_order') order."""
    columns = proto.layers[layer]
    order = None if schedule is None else schedule.columns_for(layer, attr)
    if order is None:
        return tuple(range(len(columns)))
    if sorted(order) != sorted(columns):
        raise ConfigurationError(f"schedule column order of layer {layer} does not match its columns")
    position = {col: pos for pos, col in enumerate(columns)}
    return tuple(position[col] for col in order)


def rerotation_offset(
    proto: PrototypeMatrix, c: int, v: int, schedule=None, first_sweep: bool = False
) -> int:
    """
    Rotation that moves stored column v from its previous layer's frame into layer c's.

    The previous layer is the most recent one in schedule order (cyclically)
    that contains v. On the first sweep, a column not yet visited is stored
    unrotated and the offset is the shift of layer c itself.
    """
    z = proto.z
    current = proto.shift(c, v)
    if current < 0:
        raise ConfigurationError(f"block ({c}, {v}) is absent")
    order = layer_order(proto, schedule)
    position = order.index(c)
    if first_sweep:
        earlier = order[:position][::-1]
    else:
        earlier = order[:position][::-1] + order[position:][::-1]
    for previous in earlier:
        if proto.shift(previous, v) >= 0:
            return (z + current - proto.shift(previous, v)) % z
    return current


@dataclass(frozen=True)
class IterationTrace:
    iteration: int
    layers_passed: int
    ppc_fired: bool


@dataclass(frozen=True, eq=False)
class DecodeTrace:
    iterations: list[IterationTrace] = field(default_factory=list)
    r_messages: tuple[np.ndarray, ...] = ()


def _saturate(x: np.ndarray, limit: int) -> np.ndarray:
    return np.clip(x, -limit, limit)


def _check_inputs(proto: PrototypeMatrix, scheme: QuantScheme, lut: BoxPlusLut, gamma: int, y_fixed):
    if gamma < 2:
        raise ConfigurationError(f"GA-MS gamma must be at least 2, got {gamma}")
    if lut.scheme != scheme:
        raise ConfigurationError(f"LUT built for {lut.scheme.label}, decoder uses {scheme.label}")
    y = np.asarray(y_fixed, dtype=np.int32).reshape(-1)
    if y.size != proto.n_p * proto.z:
        raise ConfigurationError(f"expected {proto.n_p * proto.z} quantized LLRs, got {y.size}")
    if np.any(np.abs(y) > scheme.vn_max):
        raise ConfigurationError(f"quantized LLRs exceed the {scheme.b_vn}-bit VN range")
    return y


def decode_quantized(
    config: CodeConfig | None,
    proto: PrototypeMatrix,
    scheme: QuantScheme,
    lut: BoxPlusLut,
    gamma: int,
    y_fixed,
    i_max: int,
    schedule=None,
    *,
    r_storage: str = "compressed",
    rotation: str = "rerotate",
) -> tuple[DecodeResult, DecodeTrace]:
    """
    Quantized layered GA-MS decoding with a MIN phase and a SEL phase per layer.

    MIN gathers t = q - r, tracks the gamma smallest CN-domain magnitudes and
    the sign product; SEL emits r = s * sgn(t) * LUT-min and q = t + r.
    Decoding stops after the first sweep in which every layer's partial
    parity check passed.
    """
    if r_storage not in R_STORAGE_MODES:
        raise ConfigurationError(f"r_storage must be one of {R_STORAGE_MODES}")
    if rotation not in ROTATION_MODES:
        raise ConfigurationError(f"rotation must be one of {ROTATION_MODES}")
    y = _check_inputs(proto, scheme, lut, gamma, y_fixed)
    if config is not None and config.n != y.size:
        raise ConfigurationError("quantized LLR length does not match the code config")

    z, vn_max, cn_max = proto.z, scheme.vn_max, scheme.cn_max
    order = layer_order(proto, schedule)
    memory = _CompressedRMemory(proto) if r_storage == "compressed" else _ExplicitRMemory(proto)
    rerotate = rotation == "rerotate"
    q = y.reshape(proto.n_p, z).copy()
    ppc = PpcState.for_layers(proto.m_p)
    trace = DecodeTrace()

    plans = {}
    for layer in order:
        columns = proto.layers[layer]
        plans[layer] = (
            columns,
            _column_order(proto, schedule, layer, "column_order"),
            _column_order(proto, schedule, layer, "sel_order"),
            [rerotation_offset(proto, layer, col, schedule, first_sweep=True) for col in columns],
            [rerotation_offset(proto, layer, col, schedule) for col in columns],
        )
    frame = np.zeros(proto.n_p, dtype=np.int64)

    iterations = 0
    fired = False
    for iteration in range(1, i_max + 1):
        ppc.reset()
        for layer in order:
            columns, min_order, sel_order, first_offsets, offsets = plans[layer]
            d_c = len(columns)
            r_old = memory.read(layer)
            q_before = np.empty((d_c, z), dtype=np.int32)
            t = np.empty((d_c, z), dtype=np.int32)
            m = np.full((gamma, z), scheme.sentinel, dtype=np.int32)
            v_min = np.full(z, -1, dtype=np.int64)
            negative = np.zeros(z, dtype=bool)

            # MIN
            for pos in min_order:
                col = columns[pos]
                if rerotate:
                    offset = first_offsets[pos] if iteration == 1 else offsets[pos]
                    q_before[pos] = rotate_block(q[col], offset)
                else:
                    q_before[pos] = rotate_block(q[col], proto.shift(layer, col))
                t[pos] = _saturate(q_before[pos] - r_old[pos], vn_max)
                magnitude = np.minimum(np.abs(t[pos]), cn_max)
                m, v_min = _sort_min_lanes(m, v_min, magnitude, pos)
                negative ^= t[pos] < 0

            # SEL
            non_critical = _fold_lanes(lut, m)
            critical = _fold_lanes(lut, m[1:])
            r_new = np.empty((d_c, z), dtype=np.int32)
            q_after = np.empty((d_c, z), dtype=np.int32)
            for pos in sel_order:
                col = columns[pos]
                magnitude = np.where(v_min == pos, critical, non_critical)
                r_new[pos] = np.where(negative ^ (t[pos] < 0), -magnitude, magnitude)
                q_after[pos] = _saturate(t[pos] + r_new[pos], vn_max)
                if rerotate:
                    q[col] = q_after[pos]
                    frame[col] = proto.shift(layer, col)
                else:
                    q[col] = unrotate_block(q_after[pos], proto.shift(layer, col))
            assert np.all(np.abs(r_new) <= cn_max)
            memory.write(layer, r_new, v_min, critical, non_critical)
            ppc_update_and_check(ppc, layer, q_after, q_before)

        iterations = iteration
        fired = bool(ppc.flags.all())
        trace.iterations.append(IterationTrace(iteration, int(ppc.flags.sum()), fired))
        if fired:
            break

    if rerotate:
        for col in range(proto.n_p):
            q[col] = unrotate_block(q[col], int(frame[col]))
    hard = (q < 0).astype(np.uint8).reshape(-1)
    weight = int(syndrome(proto, hard).sum())
    logger.debug(f"gams{gamma}-fx: {iterations} iterations, PPC fired={fired}, syndrome {weight}")
    result = DecodeResult(
        hard_decisions=hard,
        converged=fired,
        iterations=iterations,
        syndrome_weight=weight,
        posteriors=q.reshape(-1).copy(),
    )
    trace = replace(trace, r_messages=tuple(memory.read(layer).copy() for layer in range(proto.m_p)))
    return result, trace


def decode_quantized_reference(
    config: CodeConfig | None,
    proto: PrototypeMatrix,
    scheme: QuantScheme,
    lut: BoxPlusLut,
    gamma: int,
    y_fixed,
    i_max: int,
    schedule=None,
) -> tuple[DecodeResult, DecodeTrace]:
    """
    Straight-line scalar transcription of the quantized layered decoder.

    One check row at a time, explicit R storage indexed by (layer, edge,
    row), posteriors addressed through the circulant index and never kept
    rotated. Used as the bit-exact oracle for decode_quantized.
    """
    y = _check_inputs(proto, scheme, lut, gamma, y_fixed)
    z, vn_max, cn_max = proto.z, scheme.vn_max, scheme.cn_max
    order = layer_order(proto, schedule)
    q = [int(v) for v in y]
    r = {
        (layer, pos, k): 0
        for layer, columns in enumerate(proto.layers)
        for pos in range(len(columns))
        for k in range(z)
    }
    trace = DecodeTrace()
    iterations = 0
    fired = False
    for iteration in range(1, i_max + 1):
        passed_layers = 0
        for layer in order:
            columns = proto.layers[layer]
            min_order = _column_order(proto, schedule, layer, "column_order")
            sel_order = _column_order(proto, schedule, layer, "sel_order")
            layer_ok = True
            for k in range(z):
                index = {
                    pos: col * z + (k + proto.shift(layer, col)) % z
                    for pos, col in enumerate(columns)
                }
                t = {}
                state = MinimaSet.initial(scheme, gamma)
                for pos in min_order:
                    t[pos] = max(-vn_max, min(vn_max, q[index[pos]] - r[(layer, pos, k)]))
                    state = sort_min(state, min(abs(t[pos]), cn_max), pos)
                    state = state.with_sign(t[pos])
                parity = 0
                for pos in sel_order:
                    magnitude = lut_min(lut, state, pos)
                    sign = state.s * (-1 if t[pos] < 0 else 1)
                    r[(layer, pos, k)] = sign * magnitude
                    before = q[index[pos]]
                    after = max(-vn_max, min(vn_max, t[pos] + sign * magnitude))
                    q[index[pos]] = after
                    parity ^= after < 0
                    if after == 0 or (before < 0) != (after < 0):
                        layer_ok = False
                if parity:
                    layer_ok = False
            passed_layers += layer_ok
        iterations = iteration
        fired = passed_layers == proto.m_p
        trace.iterations.append(IterationTrace(iteration, passed_layers, fired))
        if fired:
            break

    posteriors = np.array(q, dtype=np.int32)
    hard = (posteriors < 0).astype(np.uint8)
    r_messages = tuple(
        np.array(
            [[r[(layer, pos, k)] for k in range(z)] for pos in range(len(columns))],
            dtype=np.int32,
        ).reshape(len(columns), z)
        for layer, columns in enumerate(proto.layers)
    )
    result = DecodeResult(
        hard_decisions=hard,
        converged=fired,
        iterations=iterations,
        syndrome_weight=int(syndrome(proto, hard).sum()),
        posteriors=posteriors,
    )
    return result, replace(trace, r_messages=r_messages)
