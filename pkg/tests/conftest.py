import numpy as np
import pytest

from gtdispatch.scenario import ScenarioTable, generate_scenario


@pytest.fixture(scope="session")
def default_year():
    return generate_scenario(0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_scenario(rng, hours, price_range=(0.0, 300.0)):
    """Short scenario with random prices, demand and ambient (cold and warm hours)."""
    return ScenarioTable.constant(
        hours,
        price=rng.uniform(*price_range, hours),
        demand=rng.uniform(0.0, 35.0, hours),
        temperature=rng.uniform(-25.0, 35.0, hours),
        pressure=rng.uniform(88.0, 98.0, hours),
        rel_humidity=rng.uniform(5.0, 100.0, hours),
    )
