import socket
import warnings

import pytest

from anonprep.csvio import parse_dataset
from anonprep.hierarchy import GeneralizationHierarchy
from anonprep.synth import generate_adult_like

DECADES = [{"lo": a, "hi": a + 9} for a in range(0, 60, 10)]

GRANULAR_DOC = {
    "attributes": [
        {
            "name": "age",
            "kind": "numeric",
            "integer": True,
            "levels": [DECADES + [{"label": "old", "lo": 60, "hi": 120}]],
        },
        {"name": "sex", "kind": "binary"},
        {
            "name": "country",
            "kind": "categorical",
            "levels": [
                {"Europe": ["France", "Germany", "Spain"], "Asia": ["Japan", "India"]},
                {"World": ["Europe", "Asia"]},
            ],
        },
    ]
}

GRANULAR_CSV = "age,sex,country,y\n26,m,France,0\n[40-49],f,?,1\nold,?,Europe,1\n"

# three records: original age + sex, generalized age, missing sex
SAMPLE_DOC = {
    "attributes": [
        {"name": "age", "kind": "numeric", "integer": True, "levels": [DECADES + [{"lo": 60, "hi": 99}]]},
        {"name": "sex", "kind": "binary"},
    ]
}

SAMPLE_CSV = "age,sex,y\n52,w,1\n[50-59],m,0\n42,?,1\n"


@pytest.fixture
def granular_h():
    return GeneralizationHierarchy.from_dict(GRANULAR_DOC)


@pytest.fixture
def granular(granular_h):
    return parse_dataset(GRANULAR_CSV, hierarchy=granular_h, name="granular")


@pytest.fixture
def sample_h():
    return GeneralizationHierarchy.from_dict(SAMPLE_DOC)


@pytest.fixture
def sample(sample_h):
    return parse_dataset(SAMPLE_CSV, hierarchy=sample_h, name="sample")


@pytest.fixture(scope="session")
def adult_small():
    return generate_adult_like(400, seed=7)


@pytest.fixture(autouse=True)
def _quiet_degenerate_columns():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="no original values")
        yield


@pytest.fixture(scope="session")
def adult_like_5000():
    return generate_adult_like(5000, seed=42)


class NetworkAccess(AssertionError):
    pass


def _refuse(*args, **kwargs):
    raise NetworkAccess("network access attempted during tests")


@pytest.fixture(autouse=True)
def no_network(monkeypatch):
    monkeypatch.setattr(socket.socket, "connect", _refuse)
    monkeypatch.setattr(socket.socket, "connect_ex", _refuse)
    monkeypatch.setattr(socket, "getaddrinfo", _refuse)
    monkeypatch.setattr(socket, "create_connection", _refuse)


# acceptance lines collected by tests/test_acceptance.py, printed in the summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
