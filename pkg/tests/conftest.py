import pathlib
import warnings

import pytest

CORPUS = pathlib.Path(__file__).resolve().parent.parent / "corpus"
SCRIPTS = pathlib.Path(__file__).resolve().parent.parent / "scripts"


@pytest.fixture(autouse=True)
def _quiet_heuristic_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


@pytest.fixture
def corpus():
    return CORPUS


@pytest.fixture
def scripts():
    return SCRIPTS
