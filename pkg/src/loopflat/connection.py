"""Connection-order (-1, 1) data extracted from frame fields, and the
component equations of the Maurer-Cartan equation.

For a frame of connection order (-1, 1) fixed by the three involutions,

    F^{-1} dF = a0 + a1pm (lambda - 1/lambda) + a1mm (lambda + 1/lambda)

with a0 in u^{++}, a1pm in u^{+-}, a1mm in u^{--}.  The Maurer-Cartan equation
splits into five equations (ordered as below in ``EQUATIONS``).

Discretisation of the equations is cell centred: for a coordinate 2-plane
(mu, nu) every quantity is evaluated at the centre of a grid cell.  Exterior
derivatives use differences of edge averages and wedge products use the
averages of the four corner values, so every equation, including the purely
algebraic ones, is consistent to second order in the spacing.
"""
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import ConfigurationError, ConnectionOrderError

FIT_TOL = 1e-6
EQUATIONS = ("structure", "transport_pm", "transport_mm", "mixed", "balance")


@dataclass
class ConnectionData11:
    """Per grid point and direction: shape grid_shape + (r, m, m) each."""

    axes: list
    alpha0_pp: np.ndarray
    alpha1_pm: np.ndarray
    alpha1_mm: np.ndarray
    mask: np.ndarray  # points where the data is usable
    fit_residual: np.ndarray  # per grid point
    projection_residual: float = float("nan")
    method: str = "exact"
    info: dict = field(default_factory=dict)

    @property
    def r(self):
        return len(self.axes)

    @property
    def spacing(self):
        return [float(a[1] - a[0]) for a in self.axes]

    def at_lambda(self, lam):
        """Full Maurer-Cartan coefficients at one lambda."""
        return (self.alpha0_pp + self.alpha1_pm * (lam - 1.0 / lam)
                + self.alpha1_mm * (lam + 1.0 / lam))


def _derivative(F, axis, h, order):
    """Finite-difference derivative along a grid axis.

    order 4: 4th-order central stencil in the interior, 2nd-order central next
    to the boundary and 2nd-order one-sided at the boundary.
    """
    n = F.shape[axis]
    out = np.empty_like(F)

    def sl(i):
        idx = [slice(None)] * F.ndim
        idx[axis] = i
        return tuple(idx)

    if n < 3:
        raise ConfigurationError("need at least three points per axis")
    out[sl(0)] = (-3 * F[sl(0)] + 4 * F[sl(1)] - F[sl(2)]) / (2 * h)
    out[sl(n - 1)] = (3 * F[sl(n - 1)] - 4 * F[sl(n - 2)] + F[sl(n - 3)]) / (2 * h)
    out[sl(slice(1, n - 1))] = (F[sl(slice(2, n))] - F[sl(slice(0, n - 2))]) / (2 * h)
    if order == 4 and n >= 5:
        out[sl(slice(2, n - 2))] = (
            -F[sl(slice(4, n))] + 8 * F[sl(slice(3, n - 1))]
            - 8 * F[sl(slice(1, n - 3))] + F[sl(slice(0, n - 4))]
        ) / (12 * h)
    return out


def interior_mask(shape, width=2):
    m = np.zeros(shape, dtype=bool)
    m[tuple(slice(width, s - width) for s in shape)] = True
    return m


def fit_lambda(D, lambdas):
    """Least-squares fit D(lambda) = A + B (lambda - 1/lambda) + C (lambda + 1/lambda).

    ``D`` has the lambda axis at position -3.  Returns A, B, C and the max-abs
    fit residual per leading index.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if len(np.unique(lambdas)) < 4:
        raise ConfigurationError("the lambda fit needs at least four distinct samples")
    V = np.stack([np.ones_like(lambdas), lambdas - 1 / lambdas, lambdas + 1 / lambdas], axis=1)
    pinv = np.linalg.pinv(V)  # (3, nl)
    coef = np.einsum("kl,...lab->...kab", pinv, D)
    fitted = np.einsum("lk,...kab->...lab", V, coef)
    res = np.abs(fitted - D).max(axis=(-3, -2, -1))
    return coef[..., 0, :, :], coef[..., 1, :, :], coef[..., 2, :, :], res


def extract_connection(field, pair=None, method="auto", strict=True, tol=FIT_TOL):
    """Split the Maurer-Cartan form of a frame field into its three components.

    ``method`` is 'exact' (use the frame field's propagated derivatives), 'fd'
    (4th-order central differences of the frames) or 'auto' (exact when
    available).  With ``strict`` a fit residual above ``tol`` on the usable
    domain raises ConnectionOrderError.
    """
    if method == "auto":
        method = "exact" if field.mc is not None else "fd"
    shape = field.grid_shape
    r = field.r
    if method == "exact":
        if field.mc is None:
            raise ConfigurationError("no exact derivative data on this frame field")
        D = field.mc  # grid + (r, nl, m, m)
        usable = field.mask.copy()
    elif method == "fd":
        F = field.frames
        Finv = np.linalg.inv(np.where(np.isfinite(F), F, np.eye(F.shape[-1])))
        D = np.stack([
            Finv @ _derivative(F, axis, h, 4) for axis, h in enumerate(field.spacing)
        ], axis=len(shape))
        usable = field.mask & interior_mask(shape)
        # a masked neighbour within the stencil spoils the derivative
        for axis in range(r):
            for s in (-2, -1, 1, 2):
                usable &= np.roll(field.mask, s, axis=axis)
    else:
        raise ConfigurationError(f"unknown extraction method {method!r}")
    A, B, C, res = fit_lambda(D, field.lambdas)
    res = res.max(axis=-1) if res.ndim > len(shape) else res
    res = np.where(usable, res, np.nan)
    conn = ConnectionData11(list(field.axes), A, B, C, usable, res, method=method)
    if pair is not None:
        conn.projection_residual = projection_residual(conn, pair)
    worst = float(np.nanmax(res)) if usable.any() else 0.0
    conn.info["max_fit_residual"] = worst
    if strict and worst > tol:
        raise ConnectionOrderError(
            f"lambda fit residual {worst:.3e} exceeds {tol:.1e}: not of connection order (-1, 1)"
        )
    return conn


def _coords_batch(alg, X):
    flat = X.reshape(X.shape[0], -1)
    v = np.concatenate([flat.real, flat.imag], axis=1)
    return v @ alg._design_pinv.T


def projection_residual(conn, pair):
    """Largest distance of the three components from u^{++}, u^{+-}, u^{--}."""
    alg = pair.algebra
    worst = 0.0
    for data, key in ((conn.alpha0_pp, "++"), (conn.alpha1_pm, "+-"), (conn.alpha1_mm, "--")):
        X = data[conn.mask].reshape((-1,) + data.shape[-2:])
        if X.shape[0] == 0:
            continue
        c = _coords_batch(alg, X)
        back = np.einsum("nd,dab->nab", c, alg.basis)
        outside = np.abs(back - X).max()
        off = c @ (np.eye(alg.dim) - pair.projectors[key]).T
        off_mat = np.einsum("nd,dab->nab", off, alg.basis)
        worst = max(worst, float(outside), float(np.abs(off_mat).max()))
    return worst


# ---------------------------------------------------------------------------
# component equations


def _cell(arr, plane_axes, ndim):
    """Corner values of each cell in the (mu, nu) plane: four shifted views."""
    mu, nu = plane_axes

    def take(i, j):
        idx = [slice(None)] * ndim
        idx[mu] = slice(i, arr.shape[mu] - 1 + i)
        idx[nu] = slice(j, arr.shape[nu] - 1 + j)
        return arr[tuple(idx)]

    return take(0, 0), take(1, 0), take(0, 1), take(1, 1)


def _avg(arr, plane, ndim):
    a, b, c, d = _cell(arr, plane, ndim)
    return (a + b + c + d) / 4


def _d(arr_mu, arr_nu, plane, h, ndim):
    """(d alpha)(e_mu, e_nu) at cell centres from nodal coefficient arrays."""
    mu, nu = plane
    a00, a10, a01, a11 = _cell(arr_nu, plane, ndim)
    dmu_anu = ((a10 + a11) - (a00 + a01)) / (2 * h[mu])
    b00, b10, b01, b11 = _cell(arr_mu, plane, ndim)
    dnu_amu = ((b01 + b11) - (b00 + b10)) / (2 * h[nu])
    return dmu_anu - dnu_amu


def _wedge(a_mu, a_nu, b_mu, b_nu):
    return a_mu @ b_nu - a_nu @ b_mu


def cell_mask(mask, plane):
    ndim = mask.ndim
    a, b, c, d = _cell(mask, plane, ndim)
    return a & b & c & d


def component_fields(conn, plane=(0, 1)):
    """Residual matrix fields (cell centred) of the five equations and of the
    reduced structure equation d a0 + a0 ^ a0 + 4 a1mm ^ a1mm."""
    if conn.r < 2:
        raise ConfigurationError("component equations need a domain of dimension >= 2")
    mu, nu = plane
    ndim = conn.mask.ndim
    h = conn.spacing
    comps = {}
    for name, arr in (("a0", conn.alpha0_pp), ("pm", conn.alpha1_pm), ("mm", conn.alpha1_mm)):
        arr = np.where(np.isfinite(arr), arr, 0.0)
        comps[name] = (arr[..., mu, :, :], arr[..., nu, :, :])
    avg = {k: (_avg(v[0], plane, ndim), _avg(v[1], plane, ndim)) for k, v in comps.items()}
    d = {k: _d(v[0], v[1], plane, h, ndim) for k, v in comps.items()}

    def w(x, y):
        return _wedge(avg[x][0], avg[x][1], avg[y][0], avg[y][1])

    out = {
        "structure": d["a0"] + w("a0", "a0") + 2 * (w("mm", "mm") - w("pm", "pm")),
        "transport_pm": d["pm"] + w("a0", "pm") + w("pm", "a0"),
        "transport_mm": d["mm"] + w("a0", "mm") + w("mm", "a0"),
        "mixed": w("pm", "mm") + w("mm", "pm"),
        "balance": w("mm", "mm") + w("pm", "pm"),
        "reduced": d["a0"] + w("a0", "a0") + 4 * w("mm", "mm"),
    }
    return out, cell_mask(conn.mask, plane)


def mc_residuals(conn, norm="max"):
    """Residual norm of each component equation over usable cells.

    ``norm`` is 'max' or 'rms'.  For domains of dimension > 2 every coordinate
    2-plane is evaluated and the worst value is kept.  Keys: the names in
    EQUATIONS plus 'reduced'.
    """
    if norm not in ("max", "rms"):
        raise ConfigurationError(f"unknown norm {norm!r}")
    result = {k: 0.0 for k in EQUATIONS + ("reduced",)}
    for plane in combinations(range(conn.r), 2):
        fields, cm = component_fields(conn, plane)
        for k, v in fields.items():
            vals = np.abs(v[cm]) if cm.any() else np.zeros(1)
            if vals.size == 0:
                continue
            val = float(vals.max()) if norm == "max" else float(np.sqrt((vals ** 2).mean()))
            result[k] = max(result[k], val)
    return result


ROUNDOFF_FLOOR = 1e-12


def refinement_ratios(coarse, fine, floor=ROUNDOFF_FLOOR):
    """Ratios coarse/fine of residual dictionaries from two grid spacings.

    An equation whose residual is below ``floor`` on both grids is satisfied to
    rounding error and gets the ratio None.
    """
    out = {}
    for k in coarse:
        if coarse[k] <= floor and fine[k] <= floor:
            out[k] = None
        else:
            out[k] = coarse[k] / max(fine[k], np.finfo(float).tiny)
    return out


def zero_connection(axes, m, dtype=float):
    shape = tuple(len(a) for a in axes)
    z = np.zeros(shape + (len(axes), m, m), dtype=dtype)
    return ConnectionData11(list(axes), z, z.copy(), z.copy(), np.ones(shape, dtype=bool),
                            np.zeros(shape))
