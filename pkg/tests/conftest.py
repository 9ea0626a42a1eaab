"""Shared lifted fields.  Lifts are the expensive step, so each is computed once."""
import time
from types import SimpleNamespace

import numpy as np
import pytest

from loopflat.connection import extract_connection
from loopflat.flows import kdpw_lift, seed_from_alignment
from loopflat.obstruction import CATALOG, construction_pair


def lifted(key, L=1.0, h=1.0 / 16, rng=0):
    start = time.perf_counter()
    pair, conv, V = construction_pair(CATALOG[key])
    seed, alignment = seed_from_alignment(pair, V, rng=rng, L=L, h=h)
    field = kdpw_lift(seed, pair, case=key)
    conn = extract_connection(field, pair)
    return SimpleNamespace(key=key, pair=pair, conv=conv, V=V, seed=seed, alignment=alignment,
                           field=field, conn=conn, h=h,
                           elapsed=time.perf_counter() - start)


@pytest.fixture(scope="session")
def sphere33():
    return lifted("sphere:n=4,k=2")


@pytest.fixture(scope="session")
def cpn33():
    return lifted("cpn_real:n=2")


@pytest.fixture(scope="session")
def g2_33():
    return lifted("g2")


@pytest.fixture(scope="session")
def refinement():
    """Each constructed case on [-1/2, 1/2]^2 at h = 1/16 and h = 1/32."""
    out = {}
    for key in ("sphere:n=4,k=2", "cpn_real:n=2", "g2"):
        out[key] = (lifted(key, L=0.5, h=1.0 / 16), lifted(key, L=0.5, h=1.0 / 32))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
