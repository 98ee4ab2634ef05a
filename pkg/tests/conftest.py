import os

import pytest

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")
GOLDENS = os.path.join(os.path.dirname(__file__), "goldens")


@pytest.fixture
def fixtures_dir():
    return os.path.abspath(FIXTURES)


@pytest.fixture
def goldens_dir():
    return os.path.abspath(GOLDENS)
