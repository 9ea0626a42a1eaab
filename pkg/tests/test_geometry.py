import dataclasses

import numpy as np
import pytest

from loopflat.errors import ConfigurationError
from loopflat.flows import FrameField
from loopflat.geometry import (
    curvature_report,
    expected_ratio,
    g2_report,
    gauss_curvature_extrinsic,
    hopf_point,
    lagrangian_diagnostics,
    metric_scaling,
    normal_curvature,
    project,
    span_fit,
)


def test_expected_ratio_values():
    assert expected_ratio(2.0) == pytest.approx(1.5625)
    assert expected_ratio(1.0) == 1.0
    assert expected_ratio(np.exp(1j * np.pi / 6)).real == pytest.approx(0.75)


def test_samples_have_unit_norm(sphere33, cpn33):
    for case in (sphere33, cpn33):
        for lam in (1.0, 2.0):
            s = project(case.field, case.conv, "UK", lam)
            n = np.linalg.norm(s.flat()[:, : case.conv.size], axis=1)
            assert np.abs(n - 1).max() < 1e-12


def test_sphere_metric_ratio(sphere33):
    r = metric_scaling(sphere33.field, sphere33.conv, 2.0)
    v = r[np.isfinite(r)]
    assert v.mean() == pytest.approx(1.5625, abs=1e-10)
    assert np.abs(v / v.mean() - 1).max() < 1e-6
    assert np.nanmax(np.abs(metric_scaling(sphere33.field, sphere33.conv, 1.0) - 1)) < 1e-12


def test_complex_lambda_metric_via_connection(sphere33):
    lam = np.exp(1j * np.pi / 6)
    r = metric_scaling(sphere33.conn, sphere33.conv, lam)
    v = r[np.isfinite(r)]
    assert np.abs(v - 0.75).max() < 1e-8


def test_sphere_reports(sphere33):
    h = sphere33.h
    one = curvature_report(sphere33.field, sphere33.conv, 1.0)
    two = curvature_report(sphere33.field, sphere33.conv, 2.0)
    assert one.sff_norm < 1e-6
    assert two.sff_norm > 1e-2
    assert two.curvature_connection == pytest.approx(0.64, abs=1e-3)
    assert abs(two.curvature_extrinsic - two.curvature_connection) < 10 * h * h
    assert one.flags["estimators_agree"] and two.flags["finite"]
    assert normal_curvature(sphere33.field, sphere33.conv, 2.0) < 10 * h * h
    dist, _ = span_fit(project(sphere33.field, sphere33.conv, "UK", 1.0), 2)
    assert dist < 1e-6


def test_extrinsic_curvature_is_rotation_invariant(sphere33, rng):
    s = project(sphere33.field, sphere33.conv, "UK", 2.0)
    Q = np.linalg.qr(rng.standard_normal((5, 5)))[0]
    K1 = gauss_curvature_extrinsic(s.points, sphere33.field.spacing, s.mask)
    K2 = gauss_curvature_extrinsic(s.points @ Q.T, sphere33.field.spacing, s.mask)
    assert np.nanmax(np.abs(K1 - K2)) < 1e-10


def test_cpn_reports(cpn33):
    for lam, c in ((1.0, 1.0), (2.0, 0.64)):
        rep = curvature_report(cpn33.field, cpn33.conv, lam)
        assert rep.curvature_connection == pytest.approx(c, abs=1e-3)
        assert rep.curvature_extrinsic == pytest.approx(c, abs=1e-3)
    lg = lagrangian_diagnostics(cpn33.field, cpn33.conv, 1.0)
    assert lg["totally_real_residual"] < 1e-10
    assert lg["legendrian_residual"] < 1e-10
    assert not lg["degenerate"]
    with pytest.raises(ConfigurationError):
        lagrangian_diagnostics(cpn33.field, dataclasses.replace(cpn33.conv, kind="sphere"), 1.0)


def test_hopf_point_is_phase_invariant(rng):
    z = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    f = np.concatenate([z.real, z.imag])
    w = z * np.exp(0.7j)
    g = np.concatenate([w.real, w.imag])
    assert np.allclose(hopf_point(f), hopf_point(g))


def test_g2_report_at_one(g2_33):
    rep = g2_report(g2_33.field, g2_33.conn, 1.0)
    assert all(rep.flags[k] for k in ("tangent_in_Y", "j_invariant", "totally_geodesic",
                                      "immersion", "complex_curve", "pattern_ok"))
    assert not rep.flags["degenerate"]
    assert max(rep.extra["pattern_mass"].values()) <= 1e-7


def test_identity_field_is_degenerate(g2_33):
    f = g2_33.field
    F = np.broadcast_to(np.eye(7), f.frames.shape).copy()
    ident = FrameField(f.axes, f.lambdas, F, f.mask, f.base_index, np.zeros_like(f.mc), "g2")
    conn = dataclasses.replace(g2_33.conn, alpha0_pp=np.zeros_like(g2_33.conn.alpha0_pp),
                               alpha1_pm=np.zeros_like(g2_33.conn.alpha1_pm),
                               alpha1_mm=np.zeros_like(g2_33.conn.alpha1_mm))
    rep = g2_report(ident, conn, 1.0)
    assert rep.flags["degenerate"]
    assert not rep.flags["complex_curve"]


def test_unknown_projection_target(sphere33):
    with pytest.raises(ConfigurationError):
        project(sphere33.field, sphere33.conv, "bogus")
