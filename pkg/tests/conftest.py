import pytest

from ontoquery.engine import Engine, EngineConfig, FIXTURES_DIR


@pytest.fixture(scope="session")
def base_config() -> EngineConfig:
    return EngineConfig.load(FIXTURES_DIR / "config.yaml")


@pytest.fixture()
def engine() -> Engine:
    """A fresh engine per test; tests may mutate the KG."""
    return Engine()


@pytest.fixture(scope="module")
def shared_engine() -> Engine:
    """One read-only engine for query-only tests in a module."""
    return Engine()


@pytest.fixture()
def two_smith_engine() -> Engine:
    return Engine(extra_abox=[FIXTURES_DIR / "smiths.ttl"])


Q1 = "Who is responsible for the fire safety of the gas liquefaction units?"
Q2 = "Which is his phone?"
TANK_TEXT = "In the first tank of the gas liquefaction unit. In the second tank. In the third tank."


@pytest.fixture(scope="session")
def q1() -> str:
    return Q1


@pytest.fixture(scope="session")
def q2() -> str:
    return Q2


@pytest.fixture(scope="session")
def tank_text() -> str:
    return TANK_TEXT
