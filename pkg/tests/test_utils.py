import json
import logging

import pytest

from veritas_py.utils.config import env_int, load_json, require_keys, save_json
from veritas_py.utils.exceptions import (
    ConfigError,
    ContradictionError,
    FallbackContradictionError,
    NumericalError,
    ValidationError,
)
from veritas_py.utils.helpers import parallel_map, percentile, resolve_seed, resolve_threads
from veritas_py.utils.logger import enable_debug_logging, get_logger, setup_logging


def test_error_hierarchy():
    assert issubclass(FallbackContradictionError, ValidationError)
    assert issubclass(ContradictionError, NumericalError)
    assert issubclass(ValidationError, ValueError)
    assert not issubclass(NumericalError, ValidationError)


def test_json_round_trip(tmp_path):
    path = tmp_path / "nested" / "cfg.json"
    save_json({"b": 1, "a": [1.5, "x"]}, path)
    assert load_json(path) == {"a": [1.5, "x"], "b": 1}
    assert path.read_text().index('"a"') < path.read_text().index('"b"')


def test_load_json_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_json(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ConfigError):
        load_json(tmp_path / "bad.json")


def test_require_keys():
    require_keys({"a": 1, "b": 2}, ["a"], "cfg")
    with pytest.raises(ConfigError, match="missing keys"):
        require_keys({"a": 1}, ["a", "b"], "cfg")
    with pytest.raises(ConfigError):
        require_keys([], ["a"], "cfg")


def test_env_fallbacks(no_env):
    assert resolve_seed(None) == 0
    assert resolve_seed(7) == 7
    no_env.setenv("VERITAS_SEED", "42")
    assert resolve_seed(None) == 42
    assert resolve_seed(3) == 3

    no_env.setenv("VERITAS_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(0) == 1

    no_env.setenv("VERITAS_THREADS", "many")
    with pytest.raises(ConfigError):
        env_int("VERITAS_THREADS")


def test_percentile_interpolates():
    assert percentile(range(1, 21), 95) == pytest.approx(19.05)
    with pytest.raises(ValueError):
        percentile([], 50)


@pytest.mark.parametrize("threads", [1, 2, 4])
def test_parallel_map_preserves_order(threads):
    assert parallel_map(lambda x: x * x, range(10), threads) == [x * x for x in range(10)]


def test_logging_to_file(tmp_path, no_env):
    log_file = tmp_path / "veritas.log"
    root = setup_logging(level="debug", log_file=str(log_file))
    try:
        assert root.level == logging.DEBUG
        logger = get_logger("tests.logging")
        assert logger.name == "veritas_py.tests.logging"
        logger.debug("hello from the test")
        for handler in root.handlers:
            handler.flush()
        assert "hello from the test" in log_file.read_text()
    finally:
        setup_logging(level="WARNING")


def test_logging_level_from_env(no_env):
    no_env.setenv("VERITAS_LOG_LEVEL", "error")
    try:
        assert setup_logging().level == logging.ERROR
    finally:
        setup_logging(level="WARNING")


def test_save_json_is_stable(tmp_path):
    save_json({"z": 0, "m": {"y": 1, "x": 2}}, tmp_path / "a.json")
    save_json({"m": {"x": 2, "y": 1}, "z": 0}, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert json.loads((tmp_path / "a.json").read_text())["m"] == {"x": 2, "y": 1}


def test_enable_debug_logging(no_env):
    try:
        enable_debug_logging()
        assert logging.getLogger("veritas_py").level == logging.DEBUG
    finally:
        setup_logging(level="WARNING")
