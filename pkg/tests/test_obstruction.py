import json

import numpy as np
import pytest

from loopflat.errors import ConfigurationError, DomainError
from loopflat.obstruction import (
    CATALOG,
    check_witness,
    chn_witness,
    chn_witness_model,
    format_table,
    full_table,
    hyperbolic_isomorphism_residual,
    parse_case_key,
    secondary_pair,
    table_json,
    twist_fixed_sets_agree,
    verdict,
)


@pytest.fixture(scope="module")
def table():
    return {r.key: r for r in full_table(rng=0)}


@pytest.mark.parametrize("n", range(2, 8))
def test_sphere_verdicts_follow_rank_threshold(table, n):
    for k in range(1, n):
        row = table[f"sphere:n={n},k={k}"]
        assert row.exists == (k <= (n + 1) / 2)
        assert row.dim_p_prime == k


# frozen (dim p', rank) pairs for the non-sphere rows
GOLDEN = {
    "cpn_complex:n=2,k=1": (2, 1, False),
    "cpn_complex:n=3,k=1": (2, 1, False),
    "cpn_complex:n=3,k=2": (4, 2, False),
    "cpn_real:n=2": (2, 2, True),
    "cpn_real:n=3": (3, 3, True),
    "hpn:n=2": (4, 3, False),
    "hyperbolic:n=3,k=1": (1, 1, True),
    "hyperbolic:n=3,k=2": (2, 2, True),
    "hyperbolic:n=4,k=2": (2, 2, True),
    "hyperbolic:n=4,k=3": (3, 2, False),
    "chn_complex:n=2,k=1": (2, 1, False),
    "chn_complex:n=3,k=1": (2, 1, False),
    "chn_real:n=2": (2, 2, True),
    "chn_real:n=3": (3, 3, True),
    "hhn:n=2": (4, 3, False),
    "g2": (4, 2, False),
}


@pytest.mark.parametrize("key", sorted(GOLDEN))
def test_golden_rows(table, key):
    row = table[key]
    assert (row.dim_p_prime, row.rank, row.exists) == GOLDEN[key]
    assert row.matches


def test_every_row_matches_reference(table):
    assert all(r.matches for r in table.values())
    assert table["rspace"].path == "excluded" and table["rspace"].exists is None


def test_chn_witness_in_its_model():
    for n in (2, 3):
        _, model = chn_witness_model(n)
        ok, resid, smin = check_witness(model, chn_witness(n))
        assert ok
        assert resid < 1e-12
        assert smin >= 1e-6


def test_chn_witness_row(table):
    row = verdict(CATALOG["chn_real:n=2"], rng=0)
    assert row.witness_ok and row.exists
    assert len(row.witness) == 2


def test_broken_witness_rejected():
    _, model = chn_witness_model(2)
    W = chn_witness(2)
    W[0] = W[0] + 0.1 * np.outer(np.eye(3)[0], np.eye(3)[2])
    assert not check_witness(model, W)[0]


def test_aligned_witness_for_existing_row():
    row = verdict(CATALOG["sphere:n=4,k=2"], rng=0, with_witness=True)
    assert row.witness_ok
    assert row.witness_residual < 1e-9


@pytest.mark.parametrize("key", ["hyperbolic:n=3,k=1", "chn_real:n=2", "hhn:n=2"])
def test_twisted_and_untwisted_fixed_sets_agree(key):
    pair, _ = secondary_pair(CATALOG[key])
    angle, da, db = twist_fixed_sets_agree(pair)
    assert da == db > 0
    assert angle < 1e-10


@pytest.mark.parametrize("n,k", [(3, 1), (3, 2), (4, 2), (4, 3)])
def test_hyperbolic_twist_isomorphism(n, k):
    assert hyperbolic_isomorphism_residual(n, k) < 1e-12


def test_case_keys():
    assert parse_case_key(" sphere:k=2,n=4 ").key == "sphere:n=4,k=2"
    assert parse_case_key("sphere:n=9,k=3").n == 10
    for bad in ("sphere:n=4,k=4", "sphere:n=x", "nothing", "cpn_real:n=9"):
        with pytest.raises(ConfigurationError):
            parse_case_key(bad)
    with pytest.raises(DomainError):
        CATALOG["rspace"].build()


def test_table_output(table):
    rows = list(table.values())
    text = format_table(rows)
    assert text.splitlines()[0].startswith("case")
    assert len(text.splitlines()) == len(rows) + 1
    data = json.loads(table_json(rows))
    assert {d["key"] for d in data} == set(table)
