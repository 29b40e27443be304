from ..core import LdpcLogger, get_settings
from ..schedule_latency import (
    PipelineParams,
    build_oss,
    classify_rows,
    format_schedule,
    latency_summary,
    natural_schedule,
    reorder_columns,
    throughput_table,
)
from ..utils.helpers import error_response, success_response
from . import graph_instances

logger = LdpcLogger("services.scheduling")


def register(mcp_instance):
    """Register the schedule and latency tools with the MCP instance."""

    @mcp_instance.tool()
    def latency_report(
        bg: int = 1,
        z: int = 384,
        rate: str = "8/9",
        iterations: int = 4,
        schedule: str = "oss",
        frequency_hz: float | None = None,
        register_delay: int = 1,
    ) -> str:
        """
        Pipeline latency and peak throughput of the block-parallel decoder.

        Args:
            bg: Base graph (1 or 2)
            z: Lifting size
            rate: Code rate as a fraction, e.g. "8/9"
            iterations: Decoding iterations
            schedule: "oss" or "natural"
            frequency_hz: Clock frequency (default from GAMS_LDPC_FREQUENCY_HZ)
            register_delay: Cycles between a SEL write and a MIN read of the same block

        Returns:
            Stall decomposition, pipeline and simplified latency, throughput in Gbps
        """
        try:
            config, proto = graph_instances.resolve_code(bg, z, rate)
            if schedule == "natural":
                plan = natural_schedule(proto)
            else:
                plan = reorder_columns(proto, build_oss(proto))
            frequency = frequency_hz or get_settings().frequency_hz
            summary = latency_summary(
                config, proto, plan, iterations, frequency, PipelineParams(register_delay)
            )
            logger.audit_log(action="latency_report", resource=config.label(), details={"schedule": schedule})
            return success_response(schedule=schedule, rate=rate, **summary)
        except Exception as e:
            logger.error(f"latency_report failed: {e}")
            return error_response(e)

    @mcp_instance.tool()
    def throughput_table_report(iterations: int = 4, frequency_hz: float | None = None) -> str:
        """
        Peak throughput under OSS for the reference (base graph, rate) points.

        Args:
            iterations: Decoding iterations
            frequency_hz: Clock frequency (default from GAMS_LDPC_FREQUENCY_HZ)

        Returns:
            One row per point with latency in cycles and throughput in Gbps
        """
        try:
            frequency = frequency_hz or get_settings().frequency_hz
            rows = throughput_table(iterations, frequency, data_dir=graph_instances.get_data_dir())
            logger.audit_log(action="throughput_table", resource="table", details={"iterations": iterations})
            return success_response(rows=rows)
        except Exception as e:
            logger.error(f"throughput_table failed: {e}")
            return error_response(e)

    @mcp_instance.tool()
    def oss_schedule(bg: int = 1, z: int = 384, rate: str = "1/3") -> str:
        """
        Optimized static schedule for a code.

        Args:
            bg: Base graph (1 or 2)
            z: Lifting size
            rate: Code rate as a fraction

        Returns:
            Layer order, punctured-column classes and the schedule file text
        """
        try:
            config, proto = graph_instances.resolve_code(bg, z, rate)
            plan = reorder_columns(proto, build_oss(proto))
            classes = classify_rows(proto)
            logger.audit_log(action="oss_schedule", resource=config.label())
            return success_response(
                code=config.label(),
                layer_order=list(plan.layer_order),
                classes={"p0": list(classes.p0), "p1": list(classes.p1), "p2": list(classes.p2)},
                schedule_file=format_schedule(plan, f"OSS schedule for {config.label()}"),
            )
        except Exception as e:
            logger.error(f"oss_schedule failed: {e}")
            return error_response(e)
