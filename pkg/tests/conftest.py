"""Shared fixtures."""

import pytest
from click.testing import CliRunner

from torsion_flow.config import configure_logging
from torsion_flow.lie_algebra import NormalizedContactData


@pytest.fixture(autouse=True, scope="session")
def quiet_logging():
    configure_logging("warning", "console")


@pytest.fixture
def su2():
    return NormalizedContactData.from_free(c2_13=-1.0, c3_12=1.0)


@pytest.fixture
def heisenberg():
    return NormalizedContactData.from_free()


@pytest.fixture
def sl2_hyperbolic():
    return NormalizedContactData.from_free(c2_13=1.0, c3_12=-1.0)


@pytest.fixture
def runner():
    return CliRunner()
