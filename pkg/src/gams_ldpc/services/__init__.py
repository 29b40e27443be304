"""
gams-ldpc MCP services package.
This package contains service modules that register tools and resources with the MCP server.
"""

from . import graph_instances, hardware_reports, quantization, scheduling, simulation
