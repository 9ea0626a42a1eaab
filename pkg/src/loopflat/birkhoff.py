"""Birkhoff factorization x = x_plus x_minus of near-identity truncated loops.

With y = x_minus^{-1} P (P a constant), the product x y has no negative powers
of lambda.  Writing y = I + y_{-1} lambda^{-1} + ... + y_{-d} lambda^{-d}, the
vanishing of the degrees -1..-d of x y is a block-Toeplitz linear system for
y_{-1}, ..., y_{-d}.  Then P is the constant term of x y, x_plus = (x y) P^{-1}
and x_minus = P y^{-1}, which makes x_plus(0) = I exactly.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import (
    InternalConsistencyError,
    OutsideBigCellError,
    TruncationFailureError,
    ValidationError,
)
from .loops import LaurentLoop, is_in_H, apply_involution, multiply, series_inverse

COND_LIMIT = 1e12
RESIDUAL_TOL = 1e-10
D_MAX = 40
SAMPLE_RADII = (0.5, 0.8, 1.25, 2.0)


def residual_lambdas():
    circle = np.exp(2j * np.pi * np.arange(16) / 16)
    return np.concatenate([circle, np.array(SAMPLE_RADII, dtype=complex)])


@dataclass(frozen=True)
class BirkhoffFactors:
    plus: LaurentLoop
    minus: LaurentLoop
    residual: float
    degree: int
    condition: float
    y: LaurentLoop = field(repr=False)  # normalized inverse of the minus factor: minus = P y^{-1}
    P: np.ndarray = field(repr=False)


@dataclass
class ToeplitzSolve:
    """Solution of the block-Toeplitz system, kept for derivative solves."""

    d: int
    m: int
    lu: tuple
    Y: np.ndarray  # (d, m, m): Y[j-1] = y_{-j}
    condition: float

    def solve(self, rhs):
        """Solve T Z = rhs for a stacked (d*m, m) right-hand side."""
        return sla.lu_solve(self.lu, rhs)


def _toeplitz(x, d):
    """Block matrix with block (k, j) = x_{j-k}, k, j = 1..d."""
    m = x.size
    window = window_coeffs(x, -(d - 1), d - 1)  # index i <-> degree i - (d - 1)
    k = np.arange(d)
    blocks = window[(k[None, :] - k[:, None]) + d - 1]  # (d, d, m, m)
    return blocks.transpose(0, 2, 1, 3).reshape(d * m, d * m)


def window_coeffs(x, lo, hi):
    """Coefficients of degrees lo..hi as one array, zero outside the loop's window."""
    out = np.zeros((hi - lo + 1,) + x.coeffs.shape[1:], dtype=x.coeffs.dtype)
    a, b = max(lo, x.lo), min(hi, x.hi)
    if a <= b:
        out[a - lo: b - lo + 1] = x.coeffs[a - x.lo: b - x.lo + 1]
    return out


def toeplitz_rhs(x, d):
    return -window_coeffs(x, -d, -1)[::-1].reshape(d * x.size, x.size)


def solve_normalizer(x, d):
    """Coefficients of y (window [-d, 0], y_0 = I) killing degrees -1..-d of x y."""
    m = x.size
    T = _toeplitz(x, d)
    cond = np.linalg.cond(T)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise OutsideBigCellError(f"Toeplitz system ill-conditioned (cond {cond:.3e})")
    lu = sla.lu_factor(T)
    Y = sla.lu_solve(lu, toeplitz_rhs(x, d)).reshape(d, m, m)
    return ToeplitzSolve(d, m, lu, Y, float(cond))


def y_loop(sol, annulus):
    m = sol.m
    C = np.concatenate([sol.Y[::-1], np.eye(m, dtype=sol.Y.dtype)[None]], axis=0)
    return LaurentLoop(-sol.d, C, 0.0, annulus)


def _factors_for_degree(x, d):
    sol = solve_normalizer(x, d)
    y = y_loop(sol, x.annulus)
    xy = multiply(x, y)
    P = xy.coeff(0)
    cond_p = np.linalg.cond(P)
    if not np.isfinite(cond_p) or cond_p > COND_LIMIT:
        raise OutsideBigCellError("normalizing constant is singular")
    Pinv = np.linalg.inv(P)
    plus = xy.truncate(0, max(0, xy.hi)).right(Pinv)
    yinv = series_inverse(y, 2 * d + 8)
    minus = yinv.left(P)
    lams = residual_lambdas()
    recomposed = plus.evaluate(lams) @ minus.evaluate(lams)
    res = float(np.abs(recomposed - x.evaluate(lams)).max())
    return BirkhoffFactors(plus, minus, res, d, sol.condition, y, P), sol


def factorize(x, d=8, d_max=D_MAX, tol=RESIDUAL_TOL, return_solve=False):
    """Birkhoff factors of x with x_plus(0) = I.

    The truncation degree is raised by 4 until the recomposition residual is
    below ``tol``; failure at ``d_max`` raises TruncationFailureError.
    """
    best = None
    while d <= d_max:
        out, sol = _factors_for_degree(x, d)
        if out.residual <= tol + x.trunc_bound:
            return (out, sol) if return_solve else out
        best = out
        d += 4
    raise TruncationFailureError(
        f"residual {best.residual:.3e} above {tol:.1e} at degree {d_max}"
    )


def factorize_in_subgroup(x, pair, fixed_by=("sigma", "rho"), d=8, d_max=D_MAX,
                          tol=RESIDUAL_TOL, subgroup_tol=1e-7):
    """Factorize a loop fixed by a set of involutions and check both factors are too."""
    for which in fixed_by:
        r = apply_involution(x, which, pair).max_coeff_diff(x)
        if r > 1e-9 + x.trunc_bound:
            raise ValidationError(f"input loop not fixed by {which} (residual {r:.3e})")
    out = factorize(x, d=d, d_max=d_max, tol=tol)
    worst = subgroup_residual(out, pair, fixed_by)
    if worst > subgroup_tol:
        raise InternalConsistencyError(f"factors leave the subgroup (residual {worst:.3e})")
    return out


def subgroup_residual(factors, pair, fixed_by=("sigma", "rho")):
    worst = 0.0
    for which in fixed_by:
        for f in (factors.plus, factors.minus):
            worst = max(worst, apply_involution(f, which, pair).max_coeff_diff(f))
    return float(worst)


__all__ = [
    "BirkhoffFactors",
    "factorize",
    "factorize_in_subgroup",
    "solve_normalizer",
    "subgroup_residual",
    "is_in_H",
]
