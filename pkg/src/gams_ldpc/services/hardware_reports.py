from ..complexity_memory import (
    complexity_table,
    compression_savings,
    memory_sizing,
    reduction_percentages,
)
from ..core import LdpcLogger
from ..quantized_gams import QuantScheme
from ..utils.helpers import error_response, success_response
from . import graph_instances

logger = LdpcLogger("services.hardware_reports")


def register(mcp_instance):
    """Register the complexity and memory tools with the MCP instance."""

    @mcp_instance.tool()
    def complexity_report(d_c: int = 8, d_v: int = 5, m: int = 17664, n: int = 26112, gamma: int = 3) -> str:
        """
        Per-iteration operation counts for a (d_v, d_c)-regular code.

        Args:
            d_c: Check-node degree
            d_v: Variable-node degree
            m: Number of check nodes
            n: Number of variable nodes
            gamma: GA-MS truncation length

        Returns:
            Table rows per algorithm and the GA-MS reduction percentages
        """
        try:
            rows = complexity_table(d_c, d_v, m, n, gamma)
            reductions = {k: round(v, 1) for k, v in reduction_percentages(d_c, d_v, m, n, gamma).items()}
            logger.audit_log(action="complexity_report", resource=f"dc{d_c}/dv{d_v}")
            return success_response(rows=rows, reductions_percent=reductions)
        except Exception as e:
            logger.error(f"complexity_report failed: {e}")
            return error_response(e)

    @mcp_instance.tool()
    def memory_report(scheme: str = "7,5,1", bg: int = 1) -> str:
        """
        Memory sizing of the 16-instance decoder.

        Args:
            scheme: Quantization scheme "B_VN,B_CN,B_f"
            bg: Base graph (1 or 2)

        Returns:
            Q, T, R-sign and R-magnitude banks, total KB and compression savings
        """
        try:
            parsed = QuantScheme.parse(scheme)
            graph = graph_instances.get_graph(bg)
            layout = memory_sizing(parsed, graph)
            logger.audit_log(action="memory_report", resource=parsed.label, details={"bg": bg})
            return success_response(
                scheme=parsed.label,
                banks=layout.rows(),
                total_kb=round(layout.total_kb, 2),
                compression_savings_percent=round(compression_savings(parsed, graph), 2),
            )
        except Exception as e:
            logger.error(f"memory_report failed: {e}")
            return error_response(e)
