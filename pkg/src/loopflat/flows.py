"""Curved-flat families and their lift to connection-order (-1, 1) frames.

The curved flat is F_plus(x, lambda) = exp(lambda psi(x)), psi(x) = sum x_i A_i
with commuting A_i in u_-.  For each grid point the loop

    W = (tau F_plus)^{-1} F_plus = exp(tau(psi) / lambda) exp(lambda psi)

is Birkhoff-factorized as W = W_plus W_minus, W_minus = P y^{-1}, and the lifted
frame is F = F_plus y P^{-1/2}.  The square root of the normalizing constant P
is the gauge that makes F fixed by tau (the plain choice F_plus y P^{-1} is
tau-fixed only up to a constant right factor).

Derivatives in x are propagated exactly through the Toeplitz solve, so the
Maurer-Cartan coefficients alpha_mu = F^{-1} dF/dx_mu are available without
finite differences.
"""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy import ndimage

from .birkhoff import factorize, toeplitz_rhs, _toeplitz
from .cartan_align import align_cartan
from .errors import (
    ConfigurationError,
    EmptyDomainError,
    LoopflatError,
    ValidationError,
)
from .lie_core import _range_basis, orthonormalize
from .loops import LaurentLoop, exp_loop, multiply

DEFAULT_LAMBDAS = (0.5, 0.8, 1.0, 1.25, 2.0)


@dataclass(frozen=True)
class CurvedFlatSeed:
    generators: np.ndarray  # (r, m, m)
    L: float = 1.0
    h: float = 1.0 / 16

    def __post_init__(self):
        A = np.asarray(self.generators)
        object.__setattr__(self, "generators", A)
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise ValidationError("generators must have shape (r, m, m)")
        if self.L <= 0 or self.h <= 0:
            raise ValidationError("domain half-width and spacing must be positive")

    @property
    def r(self):
        return self.generators.shape[0]

    def check(self, tol=1e-10):
        """Raise ValidationError unless the generators commute and are independent."""
        A = self.generators
        scale = max(1.0, np.abs(A).max()) ** 2
        for i in range(self.r):
            for j in range(i + 1, self.r):
                c = np.abs(A[i] @ A[j] - A[j] @ A[i]).max()
                if c > tol * scale:
                    raise ValidationError(f"generators {i}, {j} do not commute ({c:.3e})")
        s = np.linalg.svd(A.reshape(self.r, -1), compute_uv=False)
        if s.min() < 1e-8:
            raise ValidationError("generators are linearly dependent")

    def grid_axes(self):
        n = int(round(2 * self.L / self.h)) + 1
        if n % 2 == 0:
            n += 1
        return [np.linspace(-self.L, self.L, n) for _ in range(self.r)]

    def psi(self, x):
        return np.tensordot(np.asarray(x, dtype=float), self.generators, axes=(0, 0))


def curved_flat_frame(seed, x, lam):
    """exp(lambda * sum x_i A_i)."""
    return sla.expm(lam * seed.psi(x))


def seed_from_alignment(pair, V, seed_scale=0.5, mode="constructive", rng=None,
                        L=1.0, h=1.0 / 16):
    """Curved-flat seed whose generators project orthonormally onto V.

    The aligned Cartan subalgebra m satisfies pi_V(m) = V; each generator is the
    minimum-norm element of m projecting onto one vector of an orthonormal basis
    of V.  All generators are then scaled by one factor so the largest spectral
    norm equals ``seed_scale``.
    """
    res = align_cartan(pair, V, mode=mode, rng=rng)
    G = pair.inner_product
    Vo = orthonormalize(_range_basis(np.asarray(V, dtype=float)), G)
    M = res.cartan
    proj = Vo.T @ G @ M  # pi_V on m in V-coordinates
    C = np.linalg.pinv(proj)  # columns: preimages of V's basis
    coords = M @ C
    mats = pair.algebra.elements(coords)
    mats = mats.real if not np.iscomplexobj(pair.algebra.basis) else mats
    norm = max(np.linalg.norm(a, 2) for a in mats)
    mats = mats * (seed_scale / norm)
    seed = CurvedFlatSeed(mats, L, h)
    seed.check()
    return seed, res


@dataclass
class FrameField:
    """Frames F(x; lambda) on a grid, F = I at the base point.

    ``frames`` has shape grid_shape + (n_lambda, m, m); ``mc`` (optional) holds
    the exact Maurer-Cartan coefficients F^{-1} dF/dx_mu with shape
    grid_shape + (r, n_lambda, m, m).
    """

    axes: list
    lambdas: np.ndarray
    frames: np.ndarray
    mask: np.ndarray
    base_index: tuple
    mc: Optional[np.ndarray] = None
    case: str = ""
    info: dict = field(default_factory=dict)

    @property
    def r(self):
        return len(self.axes)

    @property
    def grid_shape(self):
        return tuple(len(a) for a in self.axes)

    @property
    def spacing(self):
        return [float(a[1] - a[0]) for a in self.axes]

    def lambda_index(self, lam):
        idx = np.nonzero(np.isclose(self.lambdas, lam, rtol=0, atol=1e-12))[0]
        if idx.size == 0:
            raise ConfigurationError(f"lambda = {lam} was not sampled")
        return int(idx[0])

    def at(self, lam):
        return self.frames[..., self.lambda_index(lam), :, :]

    def mc_at(self, lam):
        if self.mc is None:
            raise ConfigurationError("frame field carries no exact Maurer-Cartan data")
        return self.mc[..., self.lambda_index(lam), :, :]


@dataclass
class _PointResult:
    frames: np.ndarray
    mc: np.ndarray
    degree: int
    fixed_residual: float


class _Lifter:
    """Per-point KDPW computation for one seed."""

    def __init__(self, seed, tau_group, lambdas, rho=None, d=8, tangents=True):
        self.seed = seed
        self.tau = tau_group
        self.lambdas = np.asarray(lambdas, dtype=float)
        self.rho = rho
        self.d = d
        self.tangents = tangents
        self.tauA = np.array([tau_group(a) for a in seed.generators])

    def loop_W(self, psi):
        Ep = exp_loop(psi, +1)
        Em = exp_loop(self.tau(psi), -1)
        return multiply(Em, Ep).trim(0.0)

    def __call__(self, x):
        seed = self.seed
        m = seed.generators.shape[1]
        psi = seed.psi(x)
        W = self.loop_W(psi)
        fac, sol = factorize(W, d=self.d, return_solve=True)
        y = fac.y
        P = fac.P
        S = sla.sqrtm(P)
        if np.iscomplexobj(S) and np.abs(S.imag).max() < 1e-12 * max(1.0, np.abs(S).max()):
            S = S.real
        Sinv = np.linalg.inv(S)
        lams = self.lambdas
        Yl = y.evaluate(lams)  # (nl, m, m)
        Yinv = np.linalg.inv(Yl)
        Fp = np.array([sla.expm(l * psi) for l in lams])
        frames = Fp @ Yl @ Sinv
        mc = np.zeros((seed.r, len(lams), m, m), dtype=frames.dtype)
        if self.tangents:
            d = sol.d
            for mu in range(seed.r):
                A = seed.generators[mu]
                dW = W.left(self.tauA[mu]).shift(-1) + W.right(A).shift(1)
                dT = _toeplitz(dW, d)
                Ystack = sol.Y.reshape(d * m, m)
                dY = sol.solve(toeplitz_rhs(dW, d) - dT @ Ystack).reshape(d, m, m)
                dy = LaurentLoop(-d, np.concatenate([dY[::-1], np.zeros((1, m, m), dY.dtype)]))
                dP = multiply(dW, y).coeff(0) + multiply(W, dy).coeff(0)
                dS = sla.solve_sylvester(S, S, dP)
                dYl = dy.evaluate(lams)
                term1 = Yinv @ (lams[:, None, None] * A) @ Yl
                term2 = Yinv @ dYl
                mc[mu] = S @ (term1 + term2) @ Sinv - dS @ Sinv
        return _PointResult(frames, mc, fac.degree, 0.0)


def _threads():
    try:
        return max(1, int(os.environ.get("LOOPFLAT_THREADS", "1")))
    except ValueError:
        return 1


def largest_component(ok, base_index):
    """Connected (4-neighbour) component of ``ok`` containing the base point."""
    labels, _ = ndimage.label(ok)
    lab = labels[base_index]
    if lab == 0:
        return np.zeros_like(ok, dtype=bool)
    return labels == lab


def kdpw_lift(seed, pair, lambdas=DEFAULT_LAMBDAS, d=None, tangents=True, case=""):
    """Lift a curved-flat seed to a frame field on the seed's grid.

    Grid points where the Birkhoff factorization fails are masked; the result
    keeps the connected unmasked region containing the base point.
    """
    tau = pair.tau.group_action
    if tau is None:
        raise ConfigurationError("tau needs a group action for the lift")
    axes = seed.grid_axes()
    shape = tuple(len(a) for a in axes)
    base = tuple(s // 2 for s in shape)
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(lambdas == 0):
        raise ConfigurationError("lambda = 0 is not allowed")
    m = seed.generators.shape[1]

    lifter = _Lifter(seed, tau, lambdas, d=8, tangents=tangents)
    if d is None:
        # the factorization degree needed at the domain corners bounds the interior
        corners = []
        for corner in np.ndindex(*(2,) * seed.r):
            x = np.array([axes[i][0 if c == 0 else -1] for i, c in enumerate(corner)])
            try:
                corners.append(factorize(lifter.loop_W(seed.psi(x)), d=8).degree)
            except LoopflatError:
                pass
        d = max(corners) if corners else 8
    lifter.d = d

    dtype = complex if np.iscomplexobj(seed.generators) else float
    frames = np.zeros(shape + (len(lambdas), m, m), dtype=dtype)
    mc = np.zeros(shape + (seed.r, len(lambdas), m, m), dtype=dtype)
    ok = np.zeros(shape, dtype=bool)
    degrees = np.zeros(shape, dtype=int)
    points = list(np.ndindex(*shape))

    def work(idx):
        x = np.array([axes[i][j] for i, j in enumerate(idx)])
        try:
            return idx, lifter(x)
        except LoopflatError:
            return idx, None

    nthreads = _threads()
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            results = list(ex.map(work, points))
    else:
        results = [work(p) for p in points]
    for idx, res in results:
        if res is None:
            continue
        ok[idx] = True
        frames[idx] = res.frames
        mc[idx] = res.mc
        degrees[idx] = res.degree
    mask = largest_component(ok, base)
    if not mask.any():
        raise EmptyDomainError("no grid point around the base point could be lifted")
    frames[~mask] = np.nan
    mc[~mask] = np.nan
    info = {
        "masked_fraction": float(1.0 - mask.mean()),
        "degree": int(degrees[mask].max()),
        "lambdas": [float(l) for l in lambdas],
    }
    return FrameField(axes, lambdas, frames, mask, base, mc if tangents else None, case, info)


def lifted_loop(seed, pair, x, d=16):
    """The lifted frame at one point as a Laurent loop (for fixedness checks).

    Returns exp(lambda psi) y P^{-1/2} with the exponential expanded as a series.
    """
    lifter = _Lifter(seed, pair.tau.group_action, [1.0], d=d, tangents=False)
    psi = seed.psi(x)
    W = lifter.loop_W(psi)
    fac = factorize(W, d=d)
    S = sla.sqrtm(fac.P)
    if np.iscomplexobj(S) and np.abs(S.imag).max() < 1e-12:
        S = S.real
    return multiply(exp_loop(psi, +1), fac.y).right(np.linalg.inv(S))


def regularity_probe(conn, pair, tol=1e-6):
    """Per-point flag: the alpha_1^{--} coefficients of all directions are independent."""
    B = conn.alpha1_mm  # grid + (r, m, m)
    shape = B.shape[:-3]
    r = B.shape[-3]
    out = np.zeros(shape, dtype=bool)
    flat = B.reshape((-1, r) + B.shape[-2:])
    mask = conn.mask.reshape(-1)
    for i in range(flat.shape[0]):
        if not mask[i]:
            continue
        M = flat[i].reshape(r, -1)
        if not np.all(np.isfinite(M)):
            continue
        s = np.linalg.svd(M, compute_uv=False)
        out.reshape(-1)[i] = s.min() >= tol
    return out


def lift_points(seed, pair, X, lambdas=(1.0,), d=16):
    """Lifted frames at arbitrary domain points, shape (n, n_lambda, m, m).

    The frames are normalized by the same rule as ``kdpw_lift`` (identity at
    x = 0).  Points where the factorization fails give NaN frames.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != seed.r:
        raise ConfigurationError(f"points must have {seed.r} coordinates")
    lifter = _Lifter(seed, pair.tau.group_action, lambdas, d=d, tangents=False)
    m = seed.generators.shape[1]
    dtype = complex if np.iscomplexobj(seed.generators) else float
    out = np.full((X.shape[0], len(lambdas), m, m), np.nan, dtype=dtype)
    for i, x in enumerate(X):
        try:
            out[i] = lifter(x).frames
        except LoopflatError:
            pass
    return out
