import numpy as np
import pytest

from gams_ldpc.code_model import BaseGraphId
from gams_ldpc.complexity_memory import (
    ALGORITHMS,
    OpCounts,
    complexity_table,
    compression_savings,
    counts_formula,
    counts_instrumented,
    memory_sizing,
    normalize_algorithm,
    reduction_percentages,
    render_complexity_table,
)
from gams_ldpc.core import ConfigurationError, InstrumentationError
from gams_ldpc.quantized_gams import SCHEME_751, SCHEME_862, QuantScheme

# (d_c, d_v, M, N) used by the published comparison
REFERENCE_CODE = (8, 5, 17664, 26112)


def test_formula_examples():
    d_c, d_v, m, n = REFERENCE_CODE
    assert counts_formula("ms", d_c, d_v, m, n) == OpCounts(13 * m, d_v * n, 0, 2 * m + n)
    assert counts_formula("sp", d_c, d_v, m, n).lut_ops == 16 * m
    assert counts_formula("a-ms", d_c, d_v, m, n).lut_ops == 12 * m
    assert counts_formula("gams3", d_c, d_v, m, n) == OpCounts(18 * m, d_v * n + 2 * m, 2 * m, 2 * m + n)


def test_gams_gamma_argument_and_label_agree():
    assert counts_formula("gams", 8, 5, 10, 16, gamma=4) == counts_formula("gams4", 8, 5, 10, 16)
    with pytest.raises(ConfigurationError):
        counts_formula("gams", 8, 5, 10, 16, gamma=1)


@pytest.mark.parametrize(
    "name, expected",
    [("A-Min*", ("amin", None)), ("AMS", ("a-ms", None)), ("gams4", ("gams", 4)), ("nms", ("nms", None))],
)
def test_normalize_algorithm(name, expected):
    assert normalize_algorithm(name) == expected


def test_normalize_algorithm_rejects_unknown():
    with pytest.raises(ConfigurationError):
        normalize_algorithm("bp")


def test_reduction_percentages():
    reductions = reduction_percentages(*REFERENCE_CODE, gamma=3)
    assert reductions["add_compare_vs_ams"] == pytest.approx(28.7, abs=0.05)
    assert reductions["memory_vs_ams"] == pytest.approx(22.3, abs=0.05)
    assert reductions["lut_vs_ams"] == pytest.approx(83.3, abs=0.05)
    assert reductions["lut_vs_sp"] == pytest.approx(87.5, abs=0.05)


def test_complexity_table_rows():
    rows = complexity_table(*REFERENCE_CODE, gamma=3)
    assert [row["algorithm"] for row in rows] == ["sp", "amin", "ms", "oms", "nms", "a-ms", "gams3"]
    assert rows[-1]["comparisons_formula"].startswith("(gamma*d_c")
    csv_text = render_complexity_table(rows, "csv")
    assert csv_text.splitlines()[0] == "algorithm,comparisons,additions,lut_ops,memory_units"
    assert len(render_complexity_table(rows).splitlines()) == len(ALGORITHMS) + 2


@pytest.mark.parametrize("algorithm", ["sp", "amin", "ms", "oms", "nms", "gams2", "gams3", "gams4", "gams8"])
def test_instrumented_counts_match_formula(regular_toy, algorithm):
    m = regular_toy.m_p * regular_toy.z
    n = regular_toy.n_p * regular_toy.z
    expected = counts_formula(algorithm, 8, 5, m, n)
    assert counts_instrumented(algorithm, regular_toy) == expected
    assert counts_instrumented(algorithm, regular_toy, iterations=3) == expected


def test_instrumented_gams_comparisons(regular_toy):
    counts = counts_instrumented("gams3", regular_toy)
    assert counts.comparisons == 18 * regular_toy.m_p * regular_toy.z


def test_instrumented_zero_iterations(regular_toy):
    assert counts_instrumented("ms", regular_toy, iterations=0) == OpCounts()


def test_instrumented_ams_unavailable(regular_toy):
    with pytest.raises(InstrumentationError):
        counts_instrumented("a-ms", regular_toy)


def test_negative_counts_rejected():
    with pytest.raises(ConfigurationError):
        OpCounts(comparisons=-1)


def test_memory_sizing_751():
    layout = memory_sizing(SCHEME_751)
    widths = {bank.name: bank.width_bits for bank in layout.banks}
    assert widths == {"Q": 168, "T": 168, "R-sign": 24, "R-mag": 312}
    assert layout.bank("R-sign").capacity_bytes == 15168
    assert layout.bank("R-sign").capacity_kb == pytest.approx(14.81, abs=0.005)
    assert layout.total_bytes == 89568
    assert layout.total_kb == pytest.approx(87.47, abs=0.005)


def test_memory_sizing_862():
    layout = memory_sizing(SCHEME_862)
    assert layout.total_bytes == 100512
    assert layout.total_kb == pytest.approx(98.16, abs=0.005)
    assert [row["memory"] for row in layout.rows()] == ["Q", "T", "R-sign", "R-mag"]


def test_memory_sizing_bg2_depths():
    layout = memory_sizing(SCHEME_751, BaseGraphId.BG2)
    depths = {bank.name: bank.depth for bank in layout.banks}
    assert depths == {"Q": 52, "T": 52, "R-sign": 197, "R-mag": 42}
    with pytest.raises(KeyError):
        layout.bank("P")


def test_compression_savings():
    assert compression_savings(SCHEME_751) == pytest.approx(42.15, abs=0.005)
    assert compression_savings(SCHEME_862) == pytest.approx(46.94, abs=0.005)


def test_savings_grow_with_cn_width():
    savings = [compression_savings(QuantScheme(b + 2, b, 1)) for b in range(3, 9)]
    assert savings == sorted(savings)
    assert len(set(savings)) == len(savings)


def test_instrumented_counts_follow_row_degrees(bg2_small):
    _, proto = bg2_small
    degrees = [len(columns) for columns in proto.layers]
    ms = counts_instrumented("ms", proto)
    assert ms.comparisons == sum(2 * d - 3 for d in degrees) * proto.z
    assert ms.additions == sum(degrees) * proto.z
    gams = counts_instrumented("gams3", proto)
    assert gams.comparisons == sum(3 * d - 6 for d in degrees) * proto.z
    assert gams.lut_ops == 2 * len(degrees) * proto.z


@pytest.mark.parametrize("algorithm", ["sp", "amin", "ms", "gams3"])
def test_instrumented_counts_ignore_llr_values(regular_toy, algorithm):
    y = np.random.default_rng(11).normal(1.0, 4.0, regular_toy.n_p * regular_toy.z)
    assert counts_instrumented(algorithm, regular_toy, y=y) == counts_instrumented(algorithm, regular_toy)
