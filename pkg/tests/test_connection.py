import dataclasses

import numpy as np
import pytest

from loopflat.connection import (
    EQUATIONS,
    extract_connection,
    fit_lambda,
    mc_residuals,
    refinement_ratios,
    zero_connection,
)
from loopflat.errors import ConfigurationError, ConnectionOrderError

LAMS = np.array([0.5, 0.8, 1.0, 1.25, 2.0])


def test_fit_recovers_synthetic_components(rng):
    A, B, C = rng.standard_normal((3, 4, 4))
    D = np.stack([A + B * (l - 1 / l) + C * (l + 1 / l) for l in LAMS])
    a, b, c, res = fit_lambda(D, LAMS)
    assert np.allclose(a, A) and np.allclose(b, B) and np.allclose(c, C)
    assert res < 1e-12


def test_fit_flags_extra_lambda_degree(rng):
    A = rng.standard_normal((4, 4))
    D = np.stack([A * (1 + 0.01 * l ** 2) for l in LAMS])
    assert fit_lambda(D, LAMS)[3] > 1e-4


def test_fit_needs_four_lambdas():
    with pytest.raises(ConfigurationError):
        fit_lambda(np.zeros((3, 2, 2)), [0.5, 1.0, 2.0])


def test_zero_connection_satisfies_every_equation():
    axes = [np.linspace(-1, 1, 9)] * 2
    res = mc_residuals(zero_connection(axes, 4))
    assert all(res[k] == 0.0 for k in EQUATIONS)
    with pytest.raises(ConfigurationError):
        mc_residuals(zero_connection(axes, 4), norm="l1")


def test_lifted_field_has_connection_order_one(sphere33):
    c = sphere33.conn
    assert c.info["max_fit_residual"] < 1e-9
    assert c.projection_residual < 1e-9
    assert c.method == "exact"


def test_fd_route_agrees_with_exact(sphere33):
    fd = extract_connection(sphere33.field, sphere33.pair, method="fd", strict=False)
    ex = sphere33.conn
    m = fd.mask
    assert m.sum() > 0.5 * m.size
    for name in ("alpha0_pp", "alpha1_pm", "alpha1_mm"):
        diff = np.abs(getattr(fd, name)[m] - getattr(ex, name)[m]).max()
        assert diff < 1e-4
    assert fd.projection_residual < 1e-5


def test_perturbed_frames_fail_connection_order(sphere33):
    f = sphere33.field
    F = f.frames.copy()
    bump = np.zeros(F.shape[-2:])
    bump[0, 1], bump[1, 0] = 1e-3, -1e-3
    F[..., -1, :, :] = F[..., -1, :, :] @ (np.eye(bump.shape[0]) + bump)
    bad = dataclasses.replace(f, frames=F, mc=None)
    with pytest.raises(ConnectionOrderError):
        extract_connection(bad, sphere33.pair, method="fd")


def test_exact_requires_data(sphere33):
    bare = dataclasses.replace(sphere33.field, mc=None)
    with pytest.raises(ConfigurationError):
        extract_connection(bare, method="exact")
    with pytest.raises(ConfigurationError):
        extract_connection(sphere33.field, method="spline")


def test_residuals_small_on_lifted_field(sphere33):
    res = mc_residuals(sphere33.conn)
    h = sphere33.h
    for k in EQUATIONS:
        assert res[k] < 0.1 * h * h


def test_refinement_ratio_floor():
    r = refinement_ratios({"a": 4e-4, "b": 1e-15}, {"a": 1e-4, "b": 2e-15})
    assert r["a"] == pytest.approx(4.0)
    assert r["b"] is None
