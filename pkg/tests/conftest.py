from __future__ import annotations
from collections.abc import Iterable
from pathlib import Path

from numpy.random import Generator, default_rng
from pytest import fixture

from lindsim.config import Config, get_config, load_config
from lindsim.model import Lindbladian, random_lindbladian

TESTS = Path(__file__).parent
ROOT = TESTS.parent
CONFIG_FILE = str(TESTS / "config.test.toml")
MODELS = ROOT / "models"


@fixture(scope="session", autouse=True)
def test_config() -> Iterable[Config]:
    load_config(CONFIG_FILE).unwrap()
    yield get_config()


@fixture
def rng(test_config: Config) -> Generator:
    return default_rng(test_config.execution.seed)


@fixture
def qubit_model(rng: Generator) -> Lindbladian:
    return random_lindbladian(rng, 2, 2)


@fixture
def two_qubit_model(rng: Generator) -> Lindbladian:
    return random_lindbladian(rng, 4, 1)
