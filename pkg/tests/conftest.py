import numpy as np
import pytest

from veritas_py.core.labels import LabelSpace
from veritas_py.core.volumes import GridMeta


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def space3():
    return LabelSpace(("a", "b", "c"))


@pytest.fixture
def space4():
    return LabelSpace(("bg", "wm", "csf", "gm"))


@pytest.fixture
def meta8():
    return GridMeta((8, 8, 8), (1.0, 1.0, 1.0))


@pytest.fixture
def no_env(monkeypatch):
    for name in ("VERITAS_SEED", "VERITAS_THREADS", "VERITAS_LOG_LEVEL", "VERITAS_LOG_FILE"):
        monkeypatch.delenv(name, raising=False)
    return monkeypatch
