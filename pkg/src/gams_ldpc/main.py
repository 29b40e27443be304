import json
import logging
from contextlib import asynccontextmanager
from typing import Any, AsyncIterator, Dict

from mcp.server.fastmcp import FastMCP

from . import __version__
from .core import configure_logging, get_settings
from .services import graph_instances

logger = logging.getLogger(__name__)


@asynccontextmanager
async def gams_lifespan(server) -> AsyncIterator[Dict[str, Any]]:
    """Load the base graphs once for the lifetime of the server."""
    logger.info("Initializing GA-MS LDPC MCP server...")
    try:
        settings = get_settings()
        graph_instances.initialize_graphs()
        logger.info(f"Server initialized with data directory: {settings.data_dir}")
        yield {
            "graphs": graph_instances.loaded_graphs(),
            "data_dir": settings.data_dir,
            "seed": settings.seed,
        }
    except Exception as e:
        logger.error(f"Failed to initialize decoder context: {str(e)}")
        raise
    finally:
        logger.info("Shutting down GA-MS LDPC MCP server...")


mcp = FastMCP(
    "GA-MS LDPC",
    description="Decode, simulate and size GA-MS LDPC decoders for 5G NR codes",
    lifespan=gams_lifespan,
    dependencies=["mcp>=1.0.0", "numpy", "scipy", "python-dotenv"],
)


@mcp.resource("gams://base-graphs")
def base_graphs_resource() -> str:
    """Summary of the loaded 5G NR base graphs"""
    try:
        result = [
            {
                "id": graph.bg_id.name,
                "rows": graph.n_rows,
                "columns": graph.n_cols,
                "k_u_max": graph.k_u_max,
                "nonzero_entries": graph.nnz,
            }
            for graph in graph_instances.loaded_graphs()
        ]
        return json.dumps({"version": __version__, "base_graphs": result}, indent=2)
    except Exception as e:
        return json.dumps({"error": str(e)}, indent=2)


def register_services():
    """Register all service modules with the MCP instance."""
    from .services import hardware_reports, quantization, scheduling, simulation

    for module in (hardware_reports, quantization, scheduling, simulation):
        module.register(mcp)
        logger.info(f"Registered service: {module.__name__.rsplit('.', 1)[-1]}")


def main():
    configure_logging()
    logger.info("Starting GA-MS LDPC MCP server")
    register_services()
    mcp.run()


if __name__ == "__main__":
    main()
