import math

import numpy as np
import pytest

from solvcheck import data_path
from solvcheck.netmodel import Branch, Bus, NetworkCase, load_case, reduce

# (criterion, passed, detail) rows filled in by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in sorted(ACCEPTANCE, key=lambda r: int(r[0].split()[0][2:])):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")


def two_bus(z, s=-1.0 + 0j, kind="pq_load"):
    return NetworkCase((Bus(0, "slack"), Bus(1, kind, s_base=complex(s))), (Branch(0, 1, complex(z)),))


def resistive_root(z, p):
    """High-voltage root of V^2 - V + z p = 0 (real line z, real absorbed power p)."""
    return (1.0 + math.sqrt(1.0 - 4.0 * z * p)) / 2.0


def reactive_root(x, p):
    """Voltage at the end of a lossless line jx drawing real power p from 1 pu."""
    re = (1.0 + math.sqrt(1.0 - 4.0 * x * x * p * p)) / 2.0
    return complex(re, -x * p)


@pytest.fixture
def two_bus_net():
    return reduce(two_bus(0.1))


@pytest.fixture(scope="session")
def feeder_case():
    return load_case(data_path("feeder56.case"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
