import logging

from ..code_model import BaseGraph, BaseGraphId, config_for_rate, expand_prototype, load_standard_graph
from ..core.errors import GamsLdpcError

logger = logging.getLogger(__name__)

# Loaded base graphs, keyed by id
_graphs: dict[BaseGraphId, BaseGraph] = {}
_data_dir = None


def initialize_graphs(data_dir=None):
    """Load both base graphs into the process-wide cache."""
    global _data_dir

    _data_dir = data_dir
    loaded = True
    for bg_id in BaseGraphId:
        try:
            _graphs[bg_id] = load_standard_graph(bg_id, data_dir)
        except GamsLdpcError as e:
            logger.error(f"Failed to load {bg_id.name}: {e}")
            loaded = False
    logger.info(f"Base graphs available: {', '.join(g.name for g in _graphs) or 'none'}")
    return loaded


def get_graph(bg_id) -> BaseGraph:
    """Get a loaded base graph, loading it on first use."""
    bg_id = BaseGraphId.parse(bg_id)
    if bg_id not in _graphs:
        logger.warning(f"{bg_id.name} not initialized. Attempting to load...")
        _graphs[bg_id] = load_standard_graph(bg_id, _data_dir)
    return _graphs[bg_id]


def get_data_dir():
    """Get the base-graph directory the cache was initialized with."""
    return _data_dir


def loaded_graphs() -> list[BaseGraph]:
    return [_graphs[bg_id] for bg_id in sorted(_graphs)]


def resolve_code(bg, z: int, rate: str, k_u: int | None = None):
    """Code config and prototype for a (base graph, Z, rate) request."""
    graph = get_graph(bg)
    config = config_for_rate(graph, z, k_u or graph.k_u_max, rate)
    return config, expand_prototype(graph, config)
