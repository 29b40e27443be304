"""Floating-point layered decoders: SP, MS, NMS, OMS, A-Min* and GA-MS."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from .code_model import CodeConfig, PrototypeMatrix, rotate_block, syndrome, unrotate_block
from .core.errors import ConfigurationError

if TYPE_CHECKING:
    from .complexity_memory import OpCounter

logger = logging.getLogger(__name__)

LLR_SATURATION = 1e9
# smallest magnitude fed to phi; keeps phi finite for zero-valued inputs
_PHI_MIN_ARG = 1e-300

DEFAULT_NMS_ALPHA = 0.75
DEFAULT_OMS_BETA = 0.5


class DecoderKind(str, Enum):
    SP = "sp"
    MS = "ms"
    NMS = "nms"
    OMS = "oms"
    AMIN_STAR = "amin"
    GAMS = "gams"


@dataclass(frozen=True)
class DecoderVariant:
    """Check-node rule plus its tuning parameters."""

    kind: DecoderKind
    alpha: float = 1.0
    beta: float = 0.0
    gamma: int = 2

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigurationError(f"NMS factor alpha must lie in (0, 1], got {self.alpha}")
        if self.beta < 0.0:
            raise ConfigurationError(f"offset beta must be non-negative, got {self.beta}")
        if self.gamma < 2:
            raise ConfigurationError(f"GA-MS gamma must be at least 2, got {self.gamma}")

    @classmethod
    def sp(cls):
        return cls(DecoderKind.SP)

    @classmethod
    def ms(cls):
        return cls(DecoderKind.MS)

    @classmethod
    def nms(cls, alpha: float = DEFAULT_NMS_ALPHA):
        return cls(DecoderKind.NMS, alpha=alpha)

    @classmethod
    def oms(cls, beta: float = DEFAULT_OMS_BETA):
        return cls(DecoderKind.OMS, beta=beta)

    @classmethod
    def amin_star(cls):
        return cls(DecoderKind.AMIN_STAR)

    @classmethod
    def gams(cls, gamma: int, beta: float = 0.0):
        return cls(DecoderKind.GAMS, beta=beta, gamma=gamma)

    @classmethod
    def parse(cls, label: str) -> "DecoderVariant":
        """Build a preset from a label such as 'ms', 'nms' or 'gams3'."""
        text = label.strip().lower()
        if text.startswith("gams"):
            try:
                return cls.gams(int(text[4:] or 2))
            except ValueError:
                raise ConfigurationError(f"unknown decoder {label!r}")
        presets = {
            "sp": cls.sp,
            "ms": cls.ms,
            "nms": cls.nms,
            "oms": cls.oms,
            "amin": cls.amin_star,
            "amin*": cls.amin_star,
        }
        if text not in presets:
            raise ConfigurationError(
                f"unknown decoder {label!r}; expected sp, ms, nms, oms, amin or gams<gamma>"
            )
        return presets[text]()

    @property
    def label(self) -> str:
        if self.kind is DecoderKind.GAMS:
            return f"gams{self.gamma}"
        return self.kind.value

    def r_words_per_row(self, d_c: int) -> int:
        """Stored R words per check row (Table-I style message count)."""
        if self.kind is DecoderKind.SP:
            return d_c
        if self.kind is DecoderKind.AMIN_STAR:
            return 3
        return 2


@dataclass(frozen=True, eq=False)
class DecodeResult:
    hard_decisions: np.ndarray
    converged: bool
    iterations: int
    syndrome_weight: int
    posteriors: np.ndarray | None = None


def _saturate(x):
    return np.clip(x, -LLR_SATURATION, LLR_SATURATION)


def _signs(x: np.ndarray) -> np.ndarray:
    # zero counts as a positive LLR (hard decision 0)
    return np.where(x < 0, -1.0, 1.0)


def box_plus_correction(a, b):
    """Non-linear term of the box-plus decomposition (always <= 0)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))


def box_plus_exact(a, b):
    """2*atanh(tanh(a/2)*tanh(b/2)) via the sign/min/correction decomposition."""
    a = _saturate(np.asarray(a, dtype=float))
    b = _saturate(np.asarray(b, dtype=float))
    sign = _signs(a) * _signs(b)
    result = sign * np.minimum(np.abs(a), np.abs(b)) + box_plus_correction(a, b)
    return float(result) if result.ndim == 0 else result


def _box_plus_magnitude(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.minimum(a, b) + np.log1p(np.exp(-(a + b))) - np.log1p(np.exp(-np.abs(a - b)))


class _Tally:
    """Adds per-row operation counts for `lanes` parallel rows; inert without a counter."""

    def __init__(self, counter: "OpCounter | None", lanes: int):
        self.counter = counter
        self.lanes = lanes

    def __call__(self, comparisons: int = 0, additions: int = 0, lut_ops: int = 0):
        if self.counter is not None:
            self.counter.add(
                comparisons=comparisons * self.lanes,
                additions=additions * self.lanes,
                lut_ops=lut_ops * self.lanes,
            )


def _fold_box_plus(values, tally: _Tally, with_additions: bool = False) -> np.ndarray:
    """Sequential box-plus; every step is one table lookup."""
    # with_additions: each operand is offset into the table index (1) and each correction applied (1)
    extra = 1 if with_additions else 0
    result = values[0]
    tally(additions=extra)
    for value in values[1:]:
        result = _box_plus_magnitude(result, value)
        tally(lut_ops=1, additions=2 * extra)
    return result


def _phi(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", divide="ignore"):
        return np.log1p(2.0 / np.expm1(x))


def _sp_magnitudes(mags: np.ndarray, tally: _Tally) -> np.ndarray:
    """
    Leave-one-out sums in the phi domain.

    The running total keeps a compensation term, so an edge whose phi value
    dominates the row still gets the tiny sum of the others back exactly.
    """
    phis = _phi(np.maximum(mags, _PHI_MIN_ARG))
    tally(lut_ops=len(phis))
    total = phis[0]
    carry = np.zeros_like(total)
    for term in phis[1:]:
        partial = total + term
        carry += np.where(total >= term, (total - partial) + term, (term - partial) + total)
        total = partial
        tally(additions=1)
    others = np.empty_like(phis)
    for j, term in enumerate(phis):
        others[j] = (total - term) + carry
        tally(additions=1)
    out = _phi(np.maximum(others, 0.0))
    tally(lut_ops=len(phis))
    return np.minimum(out, LLR_SATURATION)


def _min_scan(mags: np.ndarray, tally: _Tally) -> tuple[np.ndarray, np.ndarray]:
    """Smallest magnitude per lane and the position of its first occurrence."""
    smallest = mags[0]
    position = np.zeros(smallest.shape, dtype=int)
    for j in range(1, len(mags)):
        below = mags[j] < smallest
        tally(comparisons=1)
        smallest = np.where(below, mags[j], smallest)
        position = np.where(below, j, position)
    return smallest, position


def _two_min_scan(mags: np.ndarray, tally: _Tally) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Smallest and second-smallest magnitude per lane plus the smallest's position."""
    swap = mags[1] < mags[0]
    tally(comparisons=1)
    first = np.where(swap, mags[1], mags[0])
    second = np.where(swap, mags[0], mags[1])
    position = swap.astype(int)
    for j in range(2, len(mags)):
        below_first = mags[j] < first
        below_second = mags[j] < second
        tally(comparisons=2)
        second = np.where(below_first, first, np.where(below_second, mags[j], second))
        first = np.where(below_first, mags[j], first)
        position = np.where(below_first, j, position)
    return first, second, position


def _pruned_sort(mags: np.ndarray, keep: int, tally: _Tally) -> tuple[list[np.ndarray], np.ndarray]:
    """
    Insertion sorter that holds only the `keep` smallest magnitudes.

    Each arriving input runs one compare-and-swap against every filled slot,
    so input j costs min(j, keep) comparators. Returns the kept magnitudes
    in ascending order and the position of the smallest one.
    """
    slots: list[np.ndarray] = []
    positions: list[np.ndarray] = []
    for j, value in enumerate(mags):
        position = np.full(value.shape, j)
        for k in range(len(slots)):
            smaller = value < slots[k]
            tally(comparisons=1)
            slots[k], value = np.where(smaller, value, slots[k]), np.where(smaller, slots[k], value)
            positions[k], position = (
                np.where(smaller, position, positions[k]),
                np.where(smaller, positions[k], position),
            )
        if len(slots) < keep:
            slots.append(value)
            positions.append(position)
    return slots, positions[0]


def _others(mags: np.ndarray, skip: np.ndarray) -> np.ndarray:
    """Every magnitude except the one at `skip`, in arrival order, per lane."""
    d_c, lanes = mags.shape
    kept = np.arange(d_c)[None, :] != skip[:, None]
    return mags.T[kept].reshape(lanes, d_c - 1).T


def cn_update(variant: DecoderVariant, t_row, counter: "OpCounter | None" = None) -> np.ndarray:
    """
    Outgoing R-messages of one check row.

    Args:
        variant: check-node rule.
        t_row: T-messages, shape (d_c,) or (d_c, Z) for Z parallel rows.
        counter: optional operation counter, fed as the datapath runs.

    Returns:
        R-messages with the shape of `t_row`.
    """
    t = np.asarray(t_row, dtype=float)
    squeeze = t.ndim == 1
    if squeeze:
        t = t[:, None]
    d_c, lanes = t.shape
    if d_c < 2:
        raise ConfigurationError(f"check-node update needs d_c >= 2, got {d_c}")

    t = _saturate(t)
    signs = _signs(t)
    out_signs = np.prod(signs, axis=0)[None, :] * signs
    mags = np.abs(t)
    rows = np.arange(d_c)[:, None]
    tally = _Tally(counter, lanes)
    kind = variant.kind

    if kind is DecoderKind.SP:
        out = _sp_magnitudes(mags, tally)
    elif kind in (DecoderKind.MS, DecoderKind.NMS, DecoderKind.OMS):
        first, second, position = _two_min_scan(mags, tally)
        if kind is DecoderKind.NMS:
            first, second = variant.alpha * first, variant.alpha * second
            tally(additions=2)
        elif kind is DecoderKind.OMS:
            first = np.maximum(first - variant.beta, 0.0)
            second = np.maximum(second - variant.beta, 0.0)
            tally(additions=2)
        out = np.where(rows == position[None, :], second, first)
    elif kind is DecoderKind.AMIN_STAR:
        smallest, position = _min_scan(mags, tally)
        critical = _fold_box_plus(_others(mags, position), tally, with_additions=True)
        non_critical = _box_plus_magnitude(smallest, critical)
        tally(lut_ops=1, additions=2)
        out = np.where(rows == position[None, :], critical, non_critical)
    else:
        slots, position = _pruned_sort(mags, min(variant.gamma, d_c), tally)
        critical = _fold_box_plus(slots[1:], tally)
        non_critical = _box_plus_magnitude(slots[0], critical)
        tally(lut_ops=1)
        critical = np.maximum(critical - variant.beta, 0.0)
        non_critical = np.maximum(non_critical - variant.beta, 0.0)
        tally(additions=2)
        out = np.where(rows == position[None, :], critical, non_critical)

    r = out_signs * out
    return r[:, 0] if squeeze else r


def layer_order(proto: PrototypeMatrix, schedule=None) -> tuple[int, ...]:
    """Validated layer processing order (natural order without a schedule)."""
    if schedule is None:
        return tuple(range(proto.m_p))
    order = tuple(int(layer) for layer in schedule.layer_order)
    unused = [layer for layer in order if not 0 <= layer < proto.m_p]
    if unused:
        raise ConfigurationError(
            f"schedule references unused layer(s) {unused}; code has {proto.m_p} layers"
        )
    if sorted(order) != list(range(proto.m_p)):
        raise ConfigurationError("schedule layer order must be a permutation of the used layers")
    return order


def layered_decode(
    variant: DecoderVariant,
    config: CodeConfig | None,
    proto: PrototypeMatrix,
    y,
    i_max: int,
    schedule=None,
    counter: "OpCounter | None" = None,
    early_exit: bool = True,
) -> DecodeResult:
    """
    Layered message passing: t = q - r, r = CN(t), q = t + r per layer.

    Stops at the end of the first iteration whose full syndrome on the used
    rows is zero, unless `early_exit` is False.
    """
    z = proto.z
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != proto.n_p * z:
        raise ConfigurationError(f"expected {proto.n_p * z} channel LLRs, got {y.size}")
    if config is not None and config.n != y.size:
        raise ConfigurationError("channel LLR length does not match the code config")
    order = layer_order(proto, schedule)

    q = _saturate(y.reshape(proto.n_p, z).copy())
    r = [np.zeros((len(columns), z)) for columns in proto.layers]
    if counter is not None and i_max > 0:
        words = sum(variant.r_words_per_row(len(c)) for c in proto.layers)
        counter.memory_units = proto.n_p * z + words * z

    iterations = 0
    weight = int(syndrome(proto, (q < 0).reshape(-1)).sum())
    # a zero posterior carries no decision, so it never counts as converged
    decided = bool(np.all(q != 0))
    for iteration in range(1, i_max + 1):
        for layer in order:
            columns = proto.layers[layer]
            shifts = [proto.shift(layer, col) for col in columns]
            rotated = np.stack([rotate_block(q[col], s) for col, s in zip(columns, shifts)])
            t = rotated - r[layer]
            r[layer] = cn_update(variant, t, counter)
            updated = _saturate(t + r[layer])
            for j, (col, s) in enumerate(zip(columns, shifts)):
                q[col] = unrotate_block(updated[j], s)
            if counter is not None:
                counter.add(additions=t.size)
        iterations = iteration
        weight = int(syndrome(proto, (q < 0).reshape(-1)).sum())
        decided = bool(np.all(q != 0))
        if weight == 0 and decided and early_exit:
            break

    logger.debug(f"{variant.label}: {iterations} iterations, syndrome weight {weight}")
    hard = (q < 0).astype(np.uint8).reshape(-1)
    return DecodeResult(
        hard_decisions=hard,
        converged=weight == 0 and decided,
        iterations=iterations,
        syndrome_weight=weight,
        posteriors=q.reshape(-1).copy(),
    )
