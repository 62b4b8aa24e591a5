import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from prefrank import load_net, sample_items  # noqa: E402

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")


@pytest.fixture(scope="session")
def flight_net():
    return load_net(os.path.join(FIXTURES, "flight.json"))


@pytest.fixture(scope="session")
def flight_path():
    return os.path.join(FIXTURES, "flight.json")


@pytest.fixture(scope="session")
def flight_items(flight_net):
    # all 32 outcomes of the flight net
    return sample_items(flight_net, 32, seed=0)


@pytest.fixture(scope="session")
def flights_csv_path():
    return os.path.join(FIXTURES, "flights.csv")
