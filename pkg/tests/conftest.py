import numpy as np
import pytest

from gams_ldpc.code_model import (
    BaseGraphId,
    PrototypeMatrix,
    config_for_rate,
    derive_config,
    expand_prototype,
    load_standard_graph,
)
from gams_ldpc.core import get_settings


@pytest.fixture(autouse=True)
def _isolated_settings(monkeypatch):
    for name in (
        "GAMS_LDPC_DATA_DIR",
        "GAMS_LDPC_WORKERS",
        "GAMS_LDPC_SEED",
        "GAMS_LDPC_FREQUENCY_HZ",
        "GAMS_LDPC_ALLOW_PLACEHOLDER_SHIFTS",
    ):
        monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture(scope="session")
def bg1():
    return load_standard_graph(BaseGraphId.BG1)


@pytest.fixture(scope="session")
def bg2():
    return load_standard_graph(BaseGraphId.BG2)


@pytest.fixture(scope="session")
def bg1_r89(bg1):
    config = derive_config(bg1, 384, 22, 9504)
    return config, expand_prototype(bg1, config)


@pytest.fixture(scope="session")
def bg2_small(bg2):
    """BG2, Z=16, full information length, rate 2/3 (7 layers)."""
    config = config_for_rate(bg2, 16, 10, "2/3")
    return config, expand_prototype(bg2, config)


@pytest.fixture(scope="session")
def regular_toy():
    """(d_v=5, d_c=8)-regular QC toy: 5 x 8 fully populated prototype, Z=7."""
    rng = np.random.default_rng(7)
    return PrototypeMatrix.from_shifts(rng.integers(0, 7, size=(5, 8)), 7)
