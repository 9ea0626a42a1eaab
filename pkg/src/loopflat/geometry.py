"""Projections of frame fields and the geometric diagnostics computed from them.

Column conventions (coset representatives) per construction kind:

``sphere`` (so(n+1), k-dimensional): f = last column; tangent columns 0..k-1;
normal columns k..n-1.

``cpn`` (su(n+1) in the real (2n+2)-dimensional representation): the columns
are [X, f, JX, Jf] with X = 0..n-1, f = n, JX = n+1..2n, Jf = 2n+1; the point
of CP^n is the complex line of z = f_top + i f_bottom.

``g2`` (g2 on R^7): columns [f, N, X, Y] = [0 | 1, 2 | 3, 4 | 5, 6].

Quantities derived from connection forms use the exact Maurer-Cartan data of
the frame field (or a fitted connection) and the cell-centred discretisation
of the ``connection`` module.  Extrinsic quantities use finite differences of
embedded samples.
"""
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .connection import _avg, _d, _derivative, cell_mask, interior_mask
from .errors import ConfigurationError
from .octonions import right_multiplication


@dataclass(frozen=True)
class FrameConvention:
    kind: str
    size: int
    f_col: int
    tangent_cols: tuple  # tangent directions of the reflective submanifold (lambda = 1)
    normal_cols: tuple
    coframe_rows: tuple  # rows of the f-column giving the (projected) coframe
    metric_rows: tuple  # rows entering the induced metric
    sigma_matrix: np.ndarray = field(repr=False)
    tau_matrix: np.ndarray = field(repr=False)
    curvature_scale: float = 1.0  # multiplies the curvature of the extrinsic embedding

    @property
    def connection_rows(self):
        return self.coframe_rows


def sphere_convention(n, k):
    T = tuple(range(k))
    N = tuple(range(k, n))
    return FrameConvention(
        "sphere", n + 1, n, T, N, T, tuple(range(n)),
        np.diag([1.0] * k + [-1.0] * (n + 1 - k)), np.diag([1.0] * n + [-1.0]),
    )


def cpn_convention(n):
    X = tuple(range(n))
    JX = tuple(range(n + 1, 2 * n + 1))
    return FrameConvention(
        "cpn", 2 * n + 2, n, JX, X + (2 * n + 1,), JX, X + JX,
        np.diag([1.0] * (n + 1) + [-1.0] * (n + 1)),
        np.diag([1.0] * n + [-1.0] + [1.0] * n + [-1.0]),
        curvature_scale=2.0,
    )


G2_BLOCKS = {"f": (0,), "N": (1, 2), "X": (3, 4), "Y": (5, 6)}


def g2_convention():
    return FrameConvention(
        "g2", 7, 0, G2_BLOCKS["Y"], G2_BLOCKS["N"] + G2_BLOCKS["X"],
        G2_BLOCKS["X"] + G2_BLOCKS["Y"], tuple(range(1, 7)),
        np.diag([1.0] * 3 + [-1.0] * 4), np.diag([1.0, -1, -1, 1, 1, -1, -1]),
    )


# ---------------------------------------------------------------------------
# projections


@dataclass
class ImmersionSamples:
    case: str
    lam: float
    points: np.ndarray  # grid_shape + (D,)
    mask: np.ndarray
    frames: Optional[np.ndarray] = None

    def flat(self):
        return self.points[self.mask]


def hopf_point(f):
    """Veronese image z z^H (as a real vector) of the complex line through f."""
    m = f.shape[-1] // 2
    z = f[..., :m] + 1j * f[..., m:]
    P = z[..., :, None] * z[..., None, :].conj()
    return np.concatenate([P.real.reshape(P.shape[:-2] + (-1,)),
                           P.imag.reshape(P.shape[:-2] + (-1,))], axis=-1)


def project(field, conv, target="UK", lam=1.0):
    """Coset representatives of the frame field at one lambda.

    target 'UK': the distinguished column f (for cpn the Veronese image of its
    complex line is appended after f);  'UUplus': the Cartan embedding
    F P F^{-1} with P the matrix of sigma; 'UKcapUplus': both Cartan embeddings
    F P F^{-1} and F Q F^{-1} (Q the matrix of tau).
    """
    F = field.at(lam)
    if np.iscomplexobj(F):
        if np.abs(F.imag[field.mask]).max() > 1e-10:
            raise ConfigurationError("frames are not real at this lambda")
        F = F.real
    if target == "UK":
        pts = F[..., :, conv.f_col]
        if conv.kind == "cpn":
            pts = np.concatenate([pts, hopf_point(pts)], axis=-1)
    elif target == "UUplus":
        pts = _cartan_embedding(F, conv.sigma_matrix)
    elif target == "UKcapUplus":
        pts = np.concatenate([_cartan_embedding(F, conv.sigma_matrix),
                              _cartan_embedding(F, conv.tau_matrix)], axis=-1)
    else:
        raise ConfigurationError(f"unknown projection target {target!r}")
    return ImmersionSamples(conv.kind, lam, pts, field.mask.copy(), F)


def _cartan_embedding(F, P):
    Finv = np.swapaxes(F, -1, -2)  # orthogonal frames
    E = F @ P @ Finv
    return E.reshape(E.shape[:-2] + (-1,))


# ---------------------------------------------------------------------------
# metric and curvature


def mc_at(source, lam):
    """Maurer-Cartan coefficients (grid + (r, m, m)) at lambda.

    ``source`` is a FrameField (exact data, sampled lambdas only) or a
    ConnectionData11 (any complex lambda, by the connection-order formula).
    """
    if hasattr(source, "alpha0_pp"):
        return source.at_lambda(lam)
    return source.mc_at(lam)


def induced_metric(source, conv, lam):
    """First fundamental form g_{mu nu} (grid + (r, r)), bilinear in the coframe."""
    a = mc_at(source, lam)
    col = a[..., list(conv.metric_rows), conv.f_col]  # grid + (r, rows)
    return np.einsum("...ui,...vi->...uv", col, col)


def metric_scaling(source, conv, lam, lam_ref=1.0):
    """Per-point quotient of first fundamental forms (Frobenius norms)."""
    g1 = induced_metric(source, conv, lam)
    g0 = induced_metric(source, conv, lam_ref)
    n1 = np.sqrt((np.abs(g1) ** 2).sum(axis=(-1, -2)))
    n0 = np.sqrt((np.abs(g0) ** 2).sum(axis=(-1, -2)))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = n1 / n0
    # keep the phase for complex lambda: g1 = R g0 with R possibly real anyway
    if np.iscomplexobj(g1):
        inner = np.einsum("...uv,...uv->...", g1, g0.conj())
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = inner / (n0 ** 2)
        if np.abs(ratio.imag[np.isfinite(ratio)]).max(initial=0) < 1e-10:
            ratio = ratio.real
    mask = getattr(source, "mask", None)
    if mask is not None:
        ratio = np.where(mask & (n0 > 1e-14), ratio, np.nan)
    return ratio


def expected_ratio(lam, lam_ref=1.0):
    R = lambda l: (l + 1.0 / l) ** 2 / 4.0  # noqa: E731
    return R(lam) / R(lam_ref)


def curvature_from_connection(source, conv, lam, plane=(0, 1)):
    """Least-squares c in d omega + omega ^ omega = c theta ^ theta^T.

    omega = alpha[rows, rows], theta = alpha[rows, f] for the coframe rows.
    Returns (c over all usable cells, per-cell values).
    """
    a = mc_at(source, lam)
    a = np.where(np.isfinite(a), a, 0.0)
    rows = list(conv.coframe_rows)
    om = a[..., rows, :][..., :, rows]
    th = a[..., rows, conv.f_col][..., None]
    mu, nu = plane
    ndim = om.ndim - 3
    spacing = [float(ax[1] - ax[0]) for ax in source.axes]
    dom = _d(om[..., mu, :, :], om[..., nu, :, :], plane, spacing, ndim)
    om_mu, om_nu = _avg(om[..., mu, :, :], plane, ndim), _avg(om[..., nu, :, :], plane, ndim)
    th_mu, th_nu = _avg(th[..., mu, :, :], plane, ndim), _avg(th[..., nu, :, :], plane, ndim)
    lhs = dom + om_mu @ om_nu - om_nu @ om_mu
    tt = lambda x: np.swapaxes(x, -1, -2)  # noqa: E731
    rhs = th_mu @ tt(th_nu) - th_nu @ tt(th_mu)
    cm = cell_mask(source.mask, plane)
    L, R = lhs[cm], rhs[cm]
    num = np.einsum("kab,kab->k", L, R.conj())
    den = np.einsum("kab,kab->k", R, R.conj())
    c_all = float(np.real(num.sum() / den.sum()))
    with np.errstate(divide="ignore", invalid="ignore"):
        per_cell = np.real(num / den)
    return c_all, per_cell


def gauss_curvature_extrinsic(points, spacing, mask, scale=1.0, order=4, margin=4):
    """Gauss curvature of an embedded surface (grid + (D,)) from the Gauss equation.

    K = (<h11, h22> - |h12|^2) / det g with h the component of the second
    derivatives normal to the tangent plane.  Values on points closer than
    ``margin`` to the boundary or to a masked point are NaN.
    """
    if points.ndim != 3:
        raise ConfigurationError("extrinsic curvature needs a 2-dimensional domain")
    P = np.where(mask[..., None], points, 0.0)
    h0, h1 = spacing
    P0 = _derivative(P, 0, h0, order)
    P1 = _derivative(P, 1, h1, order)
    P00 = _second(P, 0, h0, order)
    P11 = _second(P, 1, h1, order)
    P01 = _derivative(P0, 1, h1, order)
    E = (P0 * P0).sum(-1)
    Fm = (P0 * P1).sum(-1)
    G = (P1 * P1).sum(-1)
    det = E * G - Fm ** 2
    T = np.stack([P0, P1], axis=-1)  # (..., D, 2)
    g = np.stack([np.stack([E, Fm], -1), np.stack([Fm, G], -1)], -2)
    with np.errstate(divide="ignore", invalid="ignore"):
        ginv = np.linalg.inv(np.where(det[..., None, None] > 0, g, np.eye(2)))

    def normal(V):
        c = np.einsum("...ij,...dj,...d->...i", ginv, T, V)
        return V - np.einsum("...di,...i->...d", T, c)

    n00, n11, n01 = normal(P00), normal(P11), normal(P01)
    with np.errstate(divide="ignore", invalid="ignore"):
        K = ((n00 * n11).sum(-1) - (n01 * n01).sum(-1)) / det
    ok = interior_mask(mask.shape, margin) & mask
    for axis in range(2):
        for s in range(-margin, margin + 1):
            ok &= np.roll(mask, s, axis=axis)
    ok &= det > 1e-14
    return np.where(ok, scale * K, np.nan)


def _second(F, axis, h, order):
    n = F.shape[axis]

    def sl(i):
        idx = [slice(None)] * F.ndim
        idx[axis] = i
        return tuple(idx)

    out = np.full_like(F, np.nan)
    out[sl(slice(1, n - 1))] = (F[sl(slice(2, n))] - 2 * F[sl(slice(1, n - 1))]
                                + F[sl(slice(0, n - 2))]) / h ** 2
    if order == 4 and n >= 5:
        out[sl(slice(2, n - 2))] = (
            -F[sl(slice(4, n))] + 16 * F[sl(slice(3, n - 1))] - 30 * F[sl(slice(2, n - 2))]
            + 16 * F[sl(slice(1, n - 3))] - F[sl(slice(0, n - 4))]
        ) / (12 * h ** 2)
    return out


def adapted_sff(source, conv, lam):
    """Second fundamental form from an adapted frame: h^a = alpha[a, T] theta^{-1}.

    ``theta`` is the coframe alpha[T, f].  Valid wherever the tangent space is
    spanned by the tangent columns (all lambda for spheres, lambda = 1 for the
    cpn and g2 conventions).  Returns the per-point Frobenius norm.
    """
    a = mc_at(source, lam)
    T, N = list(conv.tangent_cols), list(conv.normal_cols)
    theta = a[..., T, conv.f_col]  # grid + (r, k)
    omegaNT = a[..., N, :][..., :, T]  # grid + (r, |N|, k)
    if theta.shape[-1] != theta.shape[-2]:
        raise ConfigurationError("adapted second fundamental form needs dim M = dim T")
    # omega^a_i (e_mu) = sum_j h^a_ij theta^j(e_mu)  ->  solve per point
    th = np.where(np.isfinite(theta), theta, 0.0)
    om = np.where(np.isfinite(omegaNT), omegaNT, 0.0)
    det_ok = np.abs(np.linalg.det(th)) > 1e-14
    thinv = np.linalg.inv(np.where(det_ok[..., None, None], th, np.eye(th.shape[-1])))
    h = np.einsum("...mai,...jm->...aij", om, thinv)  # (|N|, k, k) per point
    norm = np.sqrt((np.abs(h) ** 2).sum(axis=(-1, -2, -3)))
    mask = getattr(source, "mask", np.ones(norm.shape, bool))
    return np.where(mask & det_ok, norm, np.nan)


def tangent_residual(source, conv, lam):
    """Largest component of df outside the tangent columns (adaptedness)."""
    a = mc_at(source, lam)
    rows = [i for i in range(conv.size) if i not in conv.tangent_cols and i != conv.f_col]
    v = np.abs(a[..., rows, conv.f_col])
    mask = getattr(source, "mask", None)
    return float(np.nanmax(v[mask])) if mask is not None else float(np.nanmax(v))


def span_fit(samples, dim):
    """Distance of the samples from the best-fitting linear subspace of dimension dim+1.

    Unit-norm samples lying in a (dim+1)-dimensional subspace lie on a great
    dim-sphere.  Returns (max distance, singular values).
    """
    X = samples.flat()[:, : samples.frames.shape[-1]] if samples.frames is not None else samples.flat()
    _, s, Vt = np.linalg.svd(X, full_matrices=False)
    B = Vt[: dim + 1]
    resid = X - (X @ B.T) @ B
    return float(np.linalg.norm(resid, axis=1).max()), s


def normal_curvature(source, conv, lam, plane=(0, 1)):
    """Max cell norm of d omega_N + omega_N ^ omega_N, omega_N = alpha[N, N]."""
    a = mc_at(source, lam)
    a = np.where(np.isfinite(a), a, 0.0)
    N = list(conv.normal_cols)
    om = a[..., N, :][..., :, N]
    mu, nu = plane
    ndim = om.ndim - 3
    spacing = [float(ax[1] - ax[0]) for ax in source.axes]
    dom = _d(om[..., mu, :, :], om[..., nu, :, :], plane, spacing, ndim)
    om_mu, om_nu = _avg(om[..., mu, :, :], plane, ndim), _avg(om[..., nu, :, :], plane, ndim)
    R = dom + om_mu @ om_nu - om_nu @ om_mu
    cm = cell_mask(source.mask, plane)
    return float(np.abs(R[cm]).max()) if cm.any() else 0.0


def curved_flat_wedge(source, pair, lam, plane=(0, 1)):
    """Max cell norm of alpha_{u-} ^ alpha_{u-} for the projection to U/U_+."""
    a = mc_at(source, lam)
    a = np.where(np.isfinite(a), a, 0.0)
    alg = pair.algebra
    flat = a.reshape((-1,) + a.shape[-2:])
    v = flat.reshape(flat.shape[0], -1)
    c = np.concatenate([v.real, v.imag], axis=1) @ alg._design_pinv.T
    Pm = pair.projectors["+-"] + pair.projectors["--"]
    um = np.einsum("nd,dab->nab", c @ Pm.T, alg.basis).reshape(a.shape)
    mu, nu = plane
    ndim = um.ndim - 3
    x, y = _avg(um[..., mu, :, :], plane, ndim), _avg(um[..., nu, :, :], plane, ndim)
    W = x @ y - y @ x
    cm = cell_mask(source.mask, plane)
    return float(np.abs(W[cm]).max()) if cm.any() else 0.0


# ---------------------------------------------------------------------------
# reports


@dataclass
class GeometryReport:
    case: str
    lam: float
    metric_ratio: Optional[float] = None
    metric_ratio_spread: Optional[float] = None
    curvature_connection: Optional[float] = None
    curvature_connection_spread: Optional[float] = None
    curvature_extrinsic: Optional[float] = None
    curvature_extrinsic_spread: Optional[float] = None
    sff_norm: Optional[float] = None
    normal_curvature_norm: Optional[float] = None
    lagrangian_residual: Optional[float] = None
    legendrian_residual: Optional[float] = None
    transversality: Optional[float] = None
    flags: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _summary(values):
    v = np.asarray(values)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return float("nan"), float("nan")
    mean = float(v.mean())
    return mean, float(np.abs(v - mean).max())


def curvature_report(field, conv, lam, lam_ref=1.0, h=None):
    """Curvature by the connection route and by the extrinsic route, with the
    metric ratio against ``lam_ref`` and case-specific extras."""
    rep = GeometryReport(conv.kind, float(lam))
    ratio = metric_scaling(field, conv, lam, lam_ref)
    rep.metric_ratio, spread = _summary(ratio)
    rep.metric_ratio_spread = spread / abs(rep.metric_ratio) if rep.metric_ratio else float("nan")
    h = h or max(field.spacing)
    if field.r == 2 and conv.kind in ("sphere", "cpn"):
        c, per_cell = curvature_from_connection(field, conv, lam)
        rep.curvature_connection = c
        rep.curvature_connection_spread = _summary(per_cell)[1]
        samples = project(field, conv, "UK", lam)
        pts = samples.points
        if conv.kind == "cpn":
            pts = pts[..., conv.size:]
        K = gauss_curvature_extrinsic(pts, field.spacing, field.mask, conv.curvature_scale)
        rep.curvature_extrinsic, rep.curvature_extrinsic_spread = _summary(K)
        agree = abs(rep.curvature_extrinsic - c) <= 10 * h ** 2
        rep.flags["estimators_agree"] = bool(agree)
        if not agree:
            warnings.warn("curvature estimators disagree: grid may be under-resolved")
        rep.extra["expected_curvature"] = 4.0 / (lam + 1.0 / lam) ** 2
    if conv.kind == "sphere":
        rep.sff_norm = float(np.nanmax(adapted_sff(field, conv, lam)))
        if field.r == 2 and len(conv.normal_cols) > 0:
            rep.normal_curvature_norm = normal_curvature(field, conv, lam)
    elif abs(lam - 1.0) < 1e-14:
        rep.sff_norm = float(np.nanmax(adapted_sff(field, conv, lam)))
    rep.flags["finite"] = bool(np.all(np.isfinite(ratio[field.mask])))
    return rep


def lagrangian_diagnostics(field, conv, lam):
    """Totally-real, Legendrian and transversality numbers for the cpn convention."""
    if conv.kind != "cpn":
        raise ConfigurationError("Lagrangian diagnostics apply to the cpn convention only")
    a = mc_at(field, lam)
    n = len(conv.tangent_cols)
    X = list(range(n))
    Jf = 2 * n + 1
    m = field.mask
    tr = np.abs(a[..., X, conv.f_col])[m]
    lg = np.abs(a[..., Jf, conv.f_col])[m]
    theta = a[..., list(conv.coframe_rows), conv.f_col][m]
    s = np.linalg.svd(theta, compute_uv=False).min(axis=-1) if theta.size else np.zeros(1)
    out = {
        "totally_real_residual": float(tr.max()) if tr.size else 0.0,
        "legendrian_residual": float(lg.max()) if lg.size else 0.0,
        "transversality": float(s.min()) if s.size else 0.0,
    }
    out["degenerate"] = out["transversality"] < 1e-10
    return out


# ---------------------------------------------------------------------------
# G2 report

_G2_A = [("f", "f")] + [(b, b) for b in ("N", "X", "Y")]
_G2_B = [("f", "X"), ("X", "f"), ("N", "Y"), ("Y", "N")]
_G2_C = [("f", "Y"), ("Y", "f"), ("N", "X"), ("X", "N")]


def _block_mask(pairs):
    M = np.zeros((7, 7), dtype=bool)
    for r, c in pairs:
        for i in G2_BLOCKS[r]:
            for j in G2_BLOCKS[c]:
                M[i, j] = True
    return M


def g2_pattern_mass(conn):
    """Largest entry of each connection component outside its allowed blocks."""
    out = {}
    for name, arr, pairs in (("alpha0", conn.alpha0_pp, [p for p in _G2_A if p != ("f", "f")]),
                             ("alpha1_pm", conn.alpha1_pm, _G2_B),
                             ("alpha1_mm", conn.alpha1_mm, _G2_C)):
        allowed = _block_mask(pairs)
        vals = np.abs(arr[conn.mask])[..., ~allowed]
        out[name] = float(vals.max()) if vals.size else 0.0
    return out


def g2_bundle_equations(conn, plane=(0, 1)):
    """Cell residuals of the three sub-bundle curvature equations.

    d w1 + w1^w1 = 4 b1^b1t, d w2 + w2^w2 = 4 b1t^b1, d w3 + w3^w3 = 4 t2^t2t with
    w_i the diagonal blocks N, X, Y of alpha0, b1 = alpha1_mm[N, X] and
    t2 = alpha1_mm[Y, f].
    """
    A = np.where(np.isfinite(conn.alpha0_pp), conn.alpha0_pp, 0.0)
    C = np.where(np.isfinite(conn.alpha1_mm), conn.alpha1_mm, 0.0)
    Nb, Xb, Yb = (list(G2_BLOCKS[k]) for k in ("N", "X", "Y"))
    mu, nu = plane
    ndim = A.ndim - 3
    h = conn.spacing
    cm = cell_mask(conn.mask, plane)
    tt = lambda x: np.swapaxes(x, -1, -2)  # noqa: E731

    def curv(w):
        dw = _d(w[..., mu, :, :], w[..., nu, :, :], plane, h, ndim)
        a, b = _avg(w[..., mu, :, :], plane, ndim), _avg(w[..., nu, :, :], plane, ndim)
        return dw + a @ b - b @ a

    def wedge(x, y):
        xa, xb = _avg(x[..., mu, :, :], plane, ndim), _avg(x[..., nu, :, :], plane, ndim)
        ya, yb = _avg(y[..., mu, :, :], plane, ndim), _avg(y[..., nu, :, :], plane, ndim)
        return xa @ yb - xb @ ya

    b1 = C[..., Nb, :][..., :, Xb]
    t2 = C[..., Yb, :][..., :, [0]]
    res = {
        "eta1": curv(A[..., Nb, :][..., :, Nb]) - 4 * wedge(b1, tt(b1)),
        "eta2": curv(A[..., Xb, :][..., :, Xb]) - 4 * wedge(tt(b1), b1),
        "eta3": curv(A[..., Yb, :][..., :, Yb]) - 4 * wedge(t2, tt(t2)),
    }
    return {k: float(np.sqrt((np.abs(v[cm]) ** 2).mean())) if cm.any() else 0.0
            for k, v in res.items()}, {k: float(np.abs(v[cm]).max()) if cm.any() else 0.0
                                        for k, v in res.items()}


def g2_j_invariance(field, lam):
    """Largest failure of right multiplication by f to preserve span(N), span(X), span(Y)."""
    F = field.at(lam)
    F = F.real if np.iscomplexobj(F) else F
    worst = 0.0
    for idx in zip(*np.nonzero(field.mask)):
        Fi = F[idx]
        Rf = right_multiplication(Fi[:, 0])
        for key in ("N", "X", "Y"):
            B = Fi[:, list(G2_BLOCKS[key])]
            img = Rf @ B
            worst = max(worst, float(np.abs(img - B @ (B.T @ img)).max()))
    return worst


def g2_report(field, conn, lam):
    """Block pattern, bundle equations, J-invariance and the complex-curve flags."""
    conv = g2_convention()
    rep = GeometryReport("g2", float(lam))
    mass = g2_pattern_mass(conn)
    rep.extra["pattern_mass"] = mass
    rms, mx = g2_bundle_equations(conn)
    rep.extra["bundle_equations_rms"] = rms
    rep.extra["bundle_equations_max"] = mx
    rep.extra["j_invariance"] = g2_j_invariance(field, lam)
    a = mc_at(field, lam)
    m = field.mask
    degenerate = bool(np.abs(a[m]).max() < 1e-14) if m.any() else True
    rep.flags["degenerate"] = degenerate
    if abs(lam - 1.0) < 1e-14:
        Y = list(G2_BLOCKS["Y"])
        tangent_out = tangent_residual(field, conv, lam)
        sff = float(np.nanmax(adapted_sff(field, conv, lam))) if not degenerate else 0.0
        rep.sff_norm = sff
        rep.extra["tangent_outside_Y"] = tangent_out
        theta = a[..., Y, 0][m]
        smin = float(np.linalg.svd(theta, compute_uv=False).min()) if theta.size else 0.0
        rep.extra["coframe_margin"] = smin
        rep.flags["tangent_in_Y"] = tangent_out <= 1e-7 and not degenerate
        rep.flags["j_invariant"] = rep.extra["j_invariance"] <= 1e-7
        rep.flags["totally_geodesic"] = sff <= 1e-6 and not degenerate
        rep.flags["immersion"] = smin > 1e-8
        rep.flags["complex_curve"] = all(
            rep.flags[k] for k in ("tangent_in_Y", "j_invariant", "totally_geodesic", "immersion"))
    rep.flags["pattern_ok"] = max(mass.values()) <= 1e-7
    return rep
