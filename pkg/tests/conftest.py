import json
from pathlib import Path

import pytest

from models import NsvhParams

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
SEED = 20240101


def data_path(name: str) -> str:
    return str(DATA_DIR / name)


def load_data_params(name: str) -> NsvhParams:
    with open(DATA_DIR / f"params_{name}.json") as fh:
        return NsvhParams.from_dict(json.load(fh))


@pytest.fixture
def seed():
    return SEED


@pytest.fixture(scope="session")
def return_summaries():
    with open(DATA_DIR / "return_summaries.json") as fh:
        return json.load(fh)


@pytest.fixture
def su_params():
    """A lambda = 1 parameter set with unit-sized returns."""
    return load_data_params("sp500_lambda1")


@pytest.fixture
def swaption_params():
    return load_data_params("1y1y_lambda1")
