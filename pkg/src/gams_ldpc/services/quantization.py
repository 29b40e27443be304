from ..core import LdpcLogger
from ..quantized_gams import QuantScheme, build_lut
from ..utils.helpers import error_response, success_response

logger = LdpcLogger("services.quantization")


def register(mcp_instance):
    """Register the fixed-point tools with the MCP instance."""

    @mcp_instance.tool()
    def lut_table(scheme: str = "7,5,1", beta: float = 0.25) -> str:
        """
        Two-input box-plus lookup table of the fixed-point decoder.

        Args:
            scheme: Quantization scheme "B_VN,B_CN,B_f"
            beta: Offset added before rounding the correction term

        Returns:
            The table as a list of rows, indexed by the two input magnitudes
        """
        try:
            lut = build_lut(QuantScheme.parse(scheme), beta)
            logger.audit_log(action="lut_table", resource=lut.scheme.label, details={"beta": beta})
            return success_response(scheme=lut.scheme.label, beta=beta, table=lut.table.tolist())
        except Exception as e:
            logger.error(f"lut_table failed: {e}")
            return error_response(e)
