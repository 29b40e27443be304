import itertools
import math
from types import SimpleNamespace

import numpy as np
import pytest

from gams_ldpc.code_model import PrototypeMatrix
from gams_ldpc.complexity_memory import OpCounter
from gams_ldpc.core import ConfigurationError
from gams_ldpc.float_decoders import (
    DecoderKind,
    DecoderVariant,
    box_plus_exact,
    cn_update,
    layered_decode,
)

ALL_VARIANTS = [
    DecoderVariant.sp(),
    DecoderVariant.ms(),
    DecoderVariant.nms(),
    DecoderVariant.oms(),
    DecoderVariant.amin_star(),
    DecoderVariant.gams(3),
    DecoderVariant.gams(4, beta=0.1),
]


def _noiseless(proto, magnitude=10.0):
    y = np.full(proto.n_p * proto.z, magnitude)
    y[: 2 * proto.z] = 0.0
    return y


def test_box_plus_examples():
    assert box_plus_exact(0.5, -1.0) == pytest.approx(-0.2273, abs=1e-3)
    assert box_plus_exact(1.7, math.inf) == pytest.approx(1.7)
    assert box_plus_exact(-2.5, math.inf) == pytest.approx(-2.5)


def test_box_plus_matches_tanh_rule_and_is_symmetric():
    rng = np.random.default_rng(0)
    a, b = rng.uniform(-8, 8, 1000), rng.uniform(-8, 8, 1000)
    expected = 2 * np.arctanh(np.tanh(a / 2) * np.tanh(b / 2))
    np.testing.assert_allclose(box_plus_exact(a, b), expected, atol=1e-9)
    np.testing.assert_array_equal(box_plus_exact(a, b), box_plus_exact(b, a))
    assert np.all(np.abs(box_plus_exact(a, b)) <= np.minimum(np.abs(a), np.abs(b)) + 1e-12)


def test_ms_row_update():
    r = cn_update(DecoderVariant.ms(), [0.5, -1.0, 2.0])
    np.testing.assert_allclose(r, [-1.0, 0.5, -0.5])


def test_gams2_row_update():
    r = cn_update(DecoderVariant.gams(2), [0.5, -1.0, 2.0])
    np.testing.assert_allclose(r, [-1.0, 0.2273, -0.2273], atol=1e-3)


def test_nms_and_oms_adjust_the_minimum():
    t = [0.5, -1.0, 2.0]
    np.testing.assert_allclose(cn_update(DecoderVariant.nms(0.5), t), [-0.5, 0.25, -0.25])
    np.testing.assert_allclose(cn_update(DecoderVariant.oms(0.75), t), [-0.25, 0.0, -0.0])


def test_gams_with_full_gamma_equals_amin_star():
    rng = np.random.default_rng(1)
    t = rng.normal(0, 3, size=(9, 500))
    np.testing.assert_allclose(
        cn_update(DecoderVariant.gams(9), t), cn_update(DecoderVariant.amin_star(), t), atol=1e-12
    )


def test_gamma_above_degree_uses_whole_row():
    t = [1.5, -0.25, 3.0]
    np.testing.assert_allclose(cn_update(DecoderVariant.gams(5), t), cn_update(DecoderVariant.gams(3), t))


def test_amin_star_structure():
    t = np.array([2.0, -0.3, 1.1, 4.0])
    r = cn_update(DecoderVariant.amin_star(), t)
    others = box_plus_exact(box_plus_exact(2.0, 1.1), 4.0)
    everything = box_plus_exact(others, 0.3)
    assert abs(r[1]) == pytest.approx(others, abs=1e-12)
    np.testing.assert_allclose(np.abs(r[[0, 2, 3]]), everything, atol=1e-12)


@pytest.mark.parametrize("variant", ALL_VARIANTS, ids=lambda v: v.label)
def test_sign_is_product_of_other_signs(variant):
    rng = np.random.default_rng(2)
    t = rng.uniform(-6, 6, size=(7, 200))
    r = cn_update(variant, t)
    signs = np.where(t < 0, -1, 1)
    expected = np.prod(signs, axis=0)[None, :] * signs
    nonzero = r != 0
    np.testing.assert_array_equal(np.sign(r)[nonzero], expected[nonzero])


@pytest.mark.parametrize("gamma", [2, 3, 4])
def test_gams_row_has_two_magnitudes(gamma):
    rng = np.random.default_rng(gamma)
    for _ in range(50):
        r = cn_update(DecoderVariant.gams(gamma, beta=0.1), rng.normal(0, 2, 10))
        assert len(set(np.round(np.abs(r), 12))) <= 2


def test_magnitude_non_increasing_in_gamma():
    rng = np.random.default_rng(2024)
    d_c = 8
    t = rng.uniform(-10, 10, size=(d_c, 100_000))
    previous = None
    for gamma in range(2, d_c + 1):
        mags = np.abs(cn_update(DecoderVariant.gams(gamma), t))
        if previous is not None:
            assert np.all(mags <= previous + 1e-12)
        previous = mags
    full = np.abs(cn_update(DecoderVariant.amin_star(), t))
    assert np.all(previous >= full - 1e-12)


def test_cn_update_rejects_degree_one():
    with pytest.raises(ConfigurationError):
        cn_update(DecoderVariant.ms(), [1.0])


@pytest.mark.parametrize("magnitude", [40.0, 300.0])
def test_sp_keeps_large_magnitudes(magnitude):
    r = cn_update(DecoderVariant.sp(), [1e-6, magnitude, magnitude])
    assert r[0] == pytest.approx(magnitude - math.log(2), abs=1e-9)
    assert r[0] == pytest.approx(box_plus_exact(magnitude, magnitude), abs=1e-9)
    np.testing.assert_allclose(r[1:], box_plus_exact(1e-6, magnitude), rtol=1e-9)


def test_sp_matches_folded_box_plus_with_one_weak_edge():
    rng = np.random.default_rng(5)
    t = rng.uniform(15.0, 60.0, size=(6, 200))
    t[0] = rng.uniform(1e-6, 1e-2, 200)
    r = cn_update(DecoderVariant.sp(), t)
    expected = t[1]
    for row in t[2:]:
        expected = box_plus_exact(expected, row)
    np.testing.assert_allclose(r[0], expected, atol=1e-9)


@pytest.mark.parametrize(
    "variant, expected",
    [
        (DecoderVariant.sp(), (0, 9, 10)),
        (DecoderVariant.ms(), (7, 0, 0)),
        (DecoderVariant.nms(), (7, 2, 0)),
        (DecoderVariant.oms(), (7, 2, 0)),
        (DecoderVariant.amin_star(), (4, 9, 4)),
        (DecoderVariant.gams(2), (7, 2, 1)),
        (DecoderVariant.gams(3), (9, 2, 2)),
    ],
    ids=lambda v: v.label if isinstance(v, DecoderVariant) else None,
)
def test_row_update_operation_counts(variant, expected):
    t = np.random.default_rng(3).normal(0, 3, size=(5, 4))
    counter = OpCounter()
    cn_update(variant, t, counter)
    assert (counter.comparisons, counter.additions, counter.lut_ops) == tuple(4 * c for c in expected)


def test_sorter_comparators_independent_of_arrival_order():
    ascending = np.arange(1.0, 9.0)
    tallies = []
    for t in (ascending, ascending[::-1]):
        counter = OpCounter()
        cn_update(DecoderVariant.gams(3), t, counter)
        tallies.append(counter.comparisons)
    assert tallies == [18, 18]


@pytest.mark.parametrize(
    "label, kind, gamma",
    [("sp", DecoderKind.SP, 2), ("NMS", DecoderKind.NMS, 2), ("amin*", DecoderKind.AMIN_STAR, 2), ("gams4", DecoderKind.GAMS, 4)],
)
def test_variant_parse(label, kind, gamma):
    variant = DecoderVariant.parse(label)
    assert variant.kind is kind and variant.gamma == gamma


@pytest.mark.parametrize("label", ["bp", "gamsx", "gams1"])
def test_variant_parse_rejects(label):
    with pytest.raises(ConfigurationError):
        DecoderVariant.parse(label)


def test_single_layer_min_sum_trace():
    proto = PrototypeMatrix.from_shifts([[0, 0, 0]], 1)
    result = layered_decode(DecoderVariant.ms(), None, proto, [1.0, 2.0, -3.0], 1, early_exit=False)
    np.testing.assert_allclose(result.posteriors, [-1.0, 1.0, -2.0])
    np.testing.assert_array_equal(result.hard_decisions, [1, 0, 1])


@pytest.mark.parametrize("variant", ALL_VARIANTS, ids=lambda v: v.label)
def test_noiseless_input_converges_in_one_iteration(bg2_small, variant):
    config, proto = bg2_small
    result = layered_decode(variant, config, proto, _noiseless(proto), 15)
    assert result.converged
    assert result.iterations == 1
    assert not result.hard_decisions.any()


def test_zero_input_never_converges(bg2_small):
    config, proto = bg2_small
    result = layered_decode(DecoderVariant.gams(3), config, proto, np.zeros(config.n), 5)
    assert not result.converged
    assert result.iterations == 5


def test_schedule_with_unused_layer_rejected(bg2_small):
    config, proto = bg2_small
    schedule = SimpleNamespace(layer_order=tuple(range(proto.m_p - 1)) + (proto.m_p + 3,))
    with pytest.raises(ConfigurationError, match="unused layer"):
        layered_decode(DecoderVariant.ms(), config, proto, _noiseless(proto), 2, schedule)


def test_llr_length_checked(bg2_small):
    config, proto = bg2_small
    with pytest.raises(ConfigurationError):
        layered_decode(DecoderVariant.ms(), config, proto, np.zeros(10), 2)


def test_sum_product_matches_exact_marginals_on_a_tree():
    proto = PrototypeMatrix.from_shifts([[0, 0, 0, -1, -1], [-1, -1, 0, 0, 0]], 1)
    y = np.array([0.7, -1.2, 0.4, 1.9, -0.6])
    result = layered_decode(DecoderVariant.sp(), None, proto, y, 3, early_exit=False)

    weights = {0: np.zeros(5), 1: np.zeros(5)}
    for bits in itertools.product((0, 1), repeat=5):
        x = np.array(bits)
        if (x[0] ^ x[1] ^ x[2]) or (x[2] ^ x[3] ^ x[4]):
            continue
        weight = math.exp(float(np.sum((1 - 2 * x) * y)) / 2)
        for v in range(5):
            weights[int(x[v])][v] += weight
    exact = np.log(weights[0]) - np.log(weights[1])
    np.testing.assert_allclose(result.posteriors, exact, atol=1e-9)
