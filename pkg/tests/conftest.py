import pytest
from metro_energy.model import Model
from tests.helpers import path_sample, load_sample


@pytest.fixture
def l3vpn() -> Model:
    return load_sample("l3vpn.metromodel.json")


@pytest.fixture
def path_l3vpn() -> str:
    return path_sample("l3vpn.metromodel.json")


@pytest.fixture
def path_l3vpn_power() -> str:
    return path_sample("l3vpn_power.csv")
