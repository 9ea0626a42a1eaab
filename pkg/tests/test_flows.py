import numpy as np
import pytest
from scipy.linalg import expm

from loopflat.connection import extract_connection
from loopflat.errors import ConfigurationError, ValidationError
from loopflat.flows import (
    CurvedFlatSeed,
    curved_flat_frame,
    kdpw_lift,
    lift_points,
    regularity_probe,
)


def test_zero_seed_lifts_to_identity(sphere33):
    m = sphere33.seed.generators.shape[1]
    seed = CurvedFlatSeed(np.zeros((2, m, m)), 0.25, 0.125)
    with pytest.raises(ValidationError):
        seed.check()
    field = kdpw_lift(seed, sphere33.pair, lambdas=(0.5, 1.0, 2.0))
    assert np.abs(field.frames[field.mask] - np.eye(m)).max() < 1e-14
    assert np.abs(field.mc[field.mask]).max() < 1e-14


def test_seed_validation(sphere33):
    with pytest.raises(ValidationError):
        CurvedFlatSeed(np.zeros((2, 3, 4)))
    with pytest.raises(ValidationError):
        CurvedFlatSeed(np.zeros((1, 3, 3)), L=-1.0)
    A = np.zeros((2, 3, 3))
    A[0, 0, 1], A[0, 1, 0] = 1, -1
    A[1, 1, 2], A[1, 2, 1] = 1, -1
    with pytest.raises(ValidationError):
        CurvedFlatSeed(A).check()


def test_seed_generators_commute_and_lie_in_u_minus(sphere33):
    seed, pair = sphere33.seed, sphere33.pair
    A = seed.generators
    assert np.abs(A[0] @ A[1] - A[1] @ A[0]).max() < 1e-12
    for a in A:
        c = pair.algebra.coords(a)
        assert np.abs(c - pair.project("u-", c)).max() < 1e-12
    x = np.array([0.3, -0.2])
    assert np.allclose(curved_flat_frame(seed, x, 2.0), expm(2.0 * seed.psi(x)))


def test_lift_base_point_and_unitarity(sphere33):
    f = sphere33.field
    F = f.frames[f.mask]
    assert np.abs(f.frames[f.base_index] - np.eye(F.shape[-1])).max() < 1e-12
    assert np.abs(np.swapaxes(F, -1, -2) @ F - np.eye(F.shape[-1])).max() < 1e-10
    assert f.info["masked_fraction"] == 0.0


def test_one_dimensional_domain(sphere33):
    seed = CurvedFlatSeed(sphere33.seed.generators[:1], 0.5, 1.0 / 16)
    field = kdpw_lift(seed, sphere33.pair)
    conn = extract_connection(field, sphere33.pair)
    assert field.r == 1
    assert conn.info["max_fit_residual"] < 1e-8


def test_alpha_at_one_lies_in_k_plus_p(sphere33):
    pair, conn = sphere33.pair, sphere33.conn
    a = conn.at_lambda(1.0)[conn.mask].reshape(-1, *conn.alpha0_pp.shape[-2:])
    worst = 0.0
    for X in a[::37]:
        c = pair.algebra.coords(X)
        worst = max(worst, np.abs(c - pair.project("k'", c) - pair.project("p'", c)).max())
    assert worst < 1e-9


def test_regularity_probe(sphere33):
    flags = regularity_probe(sphere33.conn, sphere33.pair)
    assert flags[sphere33.conn.mask].all()


def test_lift_points_match_grid(sphere33):
    f = sphere33.field
    i, j = 5, 20
    x = np.array([f.axes[0][i], f.axes[1][j]])
    lams = [0.5, 1.0, 2.0]
    F = lift_points(sphere33.seed, sphere33.pair, x, lams, d=f.info["degree"])
    for k, lam in enumerate(lams):
        assert np.abs(F[0, k] - f.at(lam)[i, j]).max() < 1e-10
    with pytest.raises(ConfigurationError):
        lift_points(sphere33.seed, sphere33.pair, np.zeros((1, 3)))


def test_unsampled_lambda_rejected(sphere33):
    with pytest.raises(ConfigurationError):
        sphere33.field.at(3.0)


def test_thread_count_does_not_change_result(sphere33, monkeypatch):
    seed = CurvedFlatSeed(sphere33.seed.generators, 0.25, 0.125)
    monkeypatch.setenv("LOOPFLAT_THREADS", "1")
    a = kdpw_lift(seed, sphere33.pair)
    monkeypatch.setenv("LOOPFLAT_THREADS", "3")
    b = kdpw_lift(seed, sphere33.pair)
    assert np.array_equal(a.frames, b.frames)
