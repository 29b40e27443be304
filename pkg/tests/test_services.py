import json

import pytest

from gams_ldpc.services import graph_instances, hardware_reports, quantization, scheduling, simulation


class FakeMCP:
    """Collects the functions registered through the tool decorator."""

    def __init__(self):
        self.tools = {}

    def tool(self):
        def decorator(func):
            self.tools[func.__name__] = func
            return func

        return decorator


@pytest.fixture(scope="module")
def tools():
    graph_instances.initialize_graphs()
    mcp = FakeMCP()
    for module in (hardware_reports, quantization, scheduling, simulation):
        module.register(mcp)
    return mcp.tools


def _call(tools, name, **kwargs):
    return json.loads(tools[name](**kwargs))


def test_all_tools_registered(tools):
    assert set(tools) == {
        "complexity_report",
        "memory_report",
        "lut_table",
        "latency_report",
        "throughput_table_report",
        "oss_schedule",
        "fer_point",
    }


def test_graphs_loaded():
    assert graph_instances.initialize_graphs()
    assert [graph.n_rows for graph in graph_instances.loaded_graphs()] == [46, 42]


def test_latency_report(tools):
    result = _call(tools, "latency_report", bg=1, z=384, rate="8/9", iterations=4)
    assert result["status"] == "success"
    assert result["simplified_cycles"] == 380
    assert result["throughput_gbps"] == pytest.approx(24.42)


def test_throughput_table_report(tools):
    rows = _call(tools, "throughput_table_report", iterations=4)["rows"]
    assert [row["throughput_gbps"] for row in rows] == pytest.approx([17.60, 24.42, 21.90, 25.18], abs=0.01)


def test_oss_schedule(tools):
    result = _call(tools, "oss_schedule", bg=1, rate="8/9")
    assert result["layer_order"] == [1, 0, 2, 3, 4]
    assert result["classes"]["p1"] == [1]
    assert "layers: 1 0 2 3 4" in result["schedule_file"]


def test_memory_and_complexity(tools):
    memory = _call(tools, "memory_report", scheme="8,6,2")
    assert memory["total_kb"] == pytest.approx(98.16)
    assert memory["compression_savings_percent"] == pytest.approx(46.94)
    complexity = _call(tools, "complexity_report")
    assert complexity["reductions_percent"]["lut_vs_ams"] == pytest.approx(83.3)
    assert len(complexity["rows"]) == 7


def test_lut_table(tools):
    table = _call(tools, "lut_table", scheme="7,5,1", beta=0.25)["table"]
    assert table[15][15] == 13 and table[1][1] == 0


def test_fer_point_noiseless(tools):
    result = _call(
        tools,
        "fer_point",
        decoder="gams3-fx",
        ebn0_db=40.0,
        bg=2,
        z=16,
        rate="2/3",
        max_frames=16,
        allow_placeholder_shifts=True,
    )
    assert result["status"] == "success"
    assert (result["frames"], result["frame_errors"], result["avg_iters"]) == (16, 0, "1.0000")


def test_fer_point_refuses_placeholder_tables(tools):
    result = _call(tools, "fer_point", decoder="ms", ebn0_db=40.0, bg=2, z=16, rate="2/3", max_frames=8)
    assert result["status"] == "error"
    assert result["message"].startswith("PlaceholderShiftsError: ")


@pytest.mark.parametrize(
    "name, kwargs",
    [
        ("latency_report", {"rate": "3/2"}),
        ("memory_report", {"scheme": "7,5"}),
        ("lut_table", {"beta": -0.5}),
        ("fer_point", {"decoder": "gams9-fx", "bg": 2, "z": 16, "rate": "2/3"}),
    ],
)
def test_errors_are_reported_in_the_envelope(tools, name, kwargs):
    result = _call(tools, name, **kwargs)
    assert result["status"] == "error"
    assert result["message"].startswith("ConfigurationError: ")
