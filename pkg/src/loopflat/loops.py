"""Truncated Laurent loops with matrix coefficients and the loop involutions.

A loop is sum_{i=lo}^{hi} c_i lambda^i.  ``trunc_bound`` bounds, on the
annulus ``r_min <= |lambda| <= r_max``, the norm of everything that was
dropped when the loop was produced (series tails, window truncations).
"""
from dataclasses import dataclass
from math import factorial

import numpy as np

from .errors import ConfigurationError, NumericalDegeneracyError

DEFAULT_ANNULUS = (0.5, 2.0)
INVOLUTIONS = ("rho", "sigma", "tau", "rho2", "rho_tilde")


@dataclass(frozen=True)
class LaurentLoop:
    lo: int
    coeffs: np.ndarray  # shape (hi - lo + 1, m, m)
    trunc_bound: float = 0.0
    annulus: tuple = DEFAULT_ANNULUS

    @property
    def hi(self):
        return self.lo + self.coeffs.shape[0] - 1

    @property
    def window(self):
        return (self.lo, self.hi)

    @property
    def size(self):
        return self.coeffs.shape[1]

    @classmethod
    def constant(cls, c, annulus=DEFAULT_ANNULUS):
        return cls(0, np.asarray(c)[None], 0.0, annulus)

    @classmethod
    def identity(cls, m, annulus=DEFAULT_ANNULUS):
        return cls.constant(np.eye(m), annulus)

    @classmethod
    def from_dict(cls, terms, annulus=DEFAULT_ANNULUS):
        """Build from {degree: matrix}."""
        lo, hi = min(terms), max(terms)
        m = next(iter(terms.values())).shape[0]
        dtype = np.result_type(*terms.values())
        C = np.zeros((hi - lo + 1, m, m), dtype=dtype)
        for k, v in terms.items():
            C[k - lo] = v
        return cls(lo, C, 0.0, annulus)

    def coeff(self, k):
        if self.lo <= k <= self.hi:
            return self.coeffs[k - self.lo]
        return np.zeros(self.coeffs.shape[1:], dtype=self.coeffs.dtype)

    def evaluate(self, lam):
        """Value at a scalar lambda, or stacked values for an array of lambdas."""
        lam_arr = np.asarray(lam)
        powers = lam_arr[..., None] ** np.arange(self.lo, self.hi + 1)
        return np.tensordot(powers, self.coeffs, axes=(-1, 0))

    def sup_bound(self):
        """Upper bound for the loop's norm on its annulus (sum of coefficient norms)."""
        norms = np.sqrt((np.abs(self.coeffs) ** 2).sum(axis=(1, 2)))  # Frobenius >= spectral
        r0, r1 = self.annulus
        degs = np.arange(self.lo, self.hi + 1)
        scale = np.maximum(r0 ** degs, r1 ** degs)
        return float(norms @ scale)

    def __matmul__(self, other):
        return multiply(self, other)

    def __add__(self, other):
        lo = min(self.lo, other.lo)
        hi = max(self.hi, other.hi)
        C = np.zeros((hi - lo + 1,) + self.coeffs.shape[1:],
                     dtype=np.result_type(self.coeffs, other.coeffs))
        C[self.lo - lo: self.hi - lo + 1] += self.coeffs
        C[other.lo - lo: other.hi - lo + 1] += other.coeffs
        return LaurentLoop(lo, C, self.trunc_bound + other.trunc_bound, _meet(self, other))

    def scale(self, s):
        return LaurentLoop(self.lo, self.coeffs * s, abs(s) * self.trunc_bound, self.annulus)

    def left(self, M):
        """Constant matrix times the loop."""
        return LaurentLoop(self.lo, np.einsum("ab,kbc->kac", M, self.coeffs),
                           np.linalg.norm(M, 2) * self.trunc_bound, self.annulus)

    def right(self, M):
        return LaurentLoop(self.lo, np.einsum("kab,bc->kac", self.coeffs, M),
                           np.linalg.norm(M, 2) * self.trunc_bound, self.annulus)

    def shift(self, k):
        """Multiply by lambda^k."""
        r0, r1 = self.annulus
        return LaurentLoop(self.lo + k, self.coeffs, self.trunc_bound * max(r0 ** k, r1 ** k),
                           self.annulus)

    def truncate(self, lo, hi):
        """Restrict to degrees [lo, hi]; the dropped part's bound is added."""
        lo_eff, hi_eff = max(lo, self.lo), min(hi, self.hi)
        if lo_eff > hi_eff:
            raise ConfigurationError("truncation window misses the loop entirely")
        dropped = [k for k in range(self.lo, self.hi + 1) if k < lo_eff or k > hi_eff]
        extra = 0.0
        r0, r1 = self.annulus
        for k in dropped:
            extra += np.linalg.norm(self.coeff(k)) * max(r0 ** k, r1 ** k)
        C = self.coeffs[lo_eff - self.lo: hi_eff - self.lo + 1]
        return LaurentLoop(lo_eff, C, self.trunc_bound + extra, self.annulus)

    def trim(self, tol=0.0):
        """Drop leading/trailing coefficients with norm <= tol (bound updated)."""
        norms = np.abs(self.coeffs).max(axis=(1, 2))
        keep = np.nonzero(norms > tol)[0]
        if keep.size == 0:
            return LaurentLoop(0, np.zeros((1,) + self.coeffs.shape[1:], self.coeffs.dtype),
                               self.trunc_bound, self.annulus)
        return self.truncate(self.lo + keep[0], self.lo + keep[-1])

    def map_coefficients(self, f):
        return LaurentLoop(self.lo, np.array([f(c) for c in self.coeffs]),
                           self.trunc_bound, self.annulus)

    def max_coeff_diff(self, other):
        lo = min(self.lo, other.lo)
        hi = max(self.hi, other.hi)
        return max(np.abs(self.coeff(k) - other.coeff(k)).max() for k in range(lo, hi + 1))


def _meet(x, y):
    return (max(x.annulus[0], y.annulus[0]), min(x.annulus[1], y.annulus[1]))


def multiply(x, y):
    """Loop product; the window is (x.lo + y.lo, x.hi + y.hi)."""
    P = np.matmul(x.coeffs[:, None], y.coeffs[None, :])
    nx, ny = x.coeffs.shape[0], y.coeffs.shape[0]
    out = np.zeros((nx + ny - 1,) + P.shape[2:], dtype=P.dtype)
    for i in range(nx):
        out[i: i + ny] += P[i]
    ann = _meet(x, y)
    bound = 0.0
    if x.trunc_bound or y.trunc_bound:
        xs = LaurentLoop(x.lo, x.coeffs, 0.0, ann).sup_bound()
        ys = LaurentLoop(y.lo, y.coeffs, 0.0, ann).sup_bound()
        bound = x.trunc_bound * (ys + y.trunc_bound) + y.trunc_bound * xs
    return LaurentLoop(x.lo + y.lo, out, bound, ann)


def series_inverse(x, degree):
    """Inverse of a one-sided loop as a one-sided series truncated at ``degree`` terms.

    The loop must have window inside [0, inf) or (-inf, 0] with an invertible
    constant coefficient.  Uses the Neumann-type recursion on coefficients.
    """
    if x.lo >= 0 and x.lo != 0:
        raise ConfigurationError("constant coefficient missing")
    if x.lo < 0 and x.hi != 0:
        raise ConfigurationError("series inverse needs a one-sided loop")
    sign = 1 if x.lo == 0 else -1
    c0 = x.coeff(0)
    cond = np.linalg.cond(c0)
    if not np.isfinite(cond) or cond > 1e12:
        raise NumericalDegeneracyError("constant coefficient not invertible")
    inv0 = np.linalg.inv(c0)
    m = x.size
    Z = np.zeros((degree + 1, m, m), dtype=np.result_type(x.coeffs, float))
    Z[0] = inv0
    span = x.hi - x.lo
    for k in range(1, degree + 1):
        acc = np.zeros((m, m), dtype=Z.dtype)
        for j in range(1, min(k, span) + 1):
            acc += x.coeff(sign * j) @ Z[k - j]
        Z[k] = -inv0 @ acc
    if sign == 1:
        return LaurentLoop(0, Z, 0.0, x.annulus)
    return LaurentLoop(-degree, Z[::-1].copy(), 0.0, x.annulus)


def exp_loop(psi, power=1, annulus=DEFAULT_ANNULUS, tol=1e-17, max_terms=80):
    """exp(lambda^power * psi) for power in {1, -1}, with a certified tail bound.

    Terms are added until (|psi| r)^(N+1)/(N+1)! * exp(|psi| r) <= tol, r the
    relevant annulus radius.
    """
    psi = np.asarray(psi)
    m = psi.shape[0]
    nrm = np.linalg.norm(psi, 2)
    r = annulus[1] if power > 0 else 1.0 / annulus[0]
    a = nrm * r
    terms = [np.eye(m, dtype=psi.dtype)]
    N = 0
    while True:
        tail = a ** (N + 1) / factorial(N + 1) * np.exp(a)
        if tail <= tol or N >= max_terms:
            break
        N += 1
        terms.append(terms[-1] @ psi / N)
    C = np.array(terms)
    if power > 0:
        return LaurentLoop(0, C, float(tail), annulus)
    return LaurentLoop(-N, C[::-1].copy(), float(tail), annulus)


def exp_laurent(x, tol=1e-17, max_terms=80):
    """exp of a Laurent polynomial loop by its Taylor series.

    Terms are added until sup(x)^(N+1)/(N+1)! * exp(sup(x)) <= tol, with sup(x)
    the coefficient-norm bound on the annulus.
    """
    a = x.sup_bound()
    m = x.size
    term = LaurentLoop.identity(m, x.annulus)
    total = term
    N = 0
    while True:
        tail = a ** (N + 1) / factorial(N + 1) * np.exp(a)
        if tail <= tol or N >= max_terms:
            break
        N += 1
        term = multiply(term, x).scale(1.0 / N)
        total = total + term
    return LaurentLoop(total.lo, total.coeffs, float(tail) + total.trunc_bound, x.annulus)


# ---------------------------------------------------------------------------
# involutions on loops


def _coefficient_map(pair, which, level):
    """Coefficient-level action of tau, sigma or the real structure."""
    if which == "rho":
        if not pair.algebra.is_complex:
            return np.conj
        if level == "algebra":
            return pair.algebra.real_structure
        rho = getattr(pair, "rho_group", None)
        if rho is None:
            raise ConfigurationError("group-level conjugation unavailable for this representation")
        return rho
    inv = pair.tau if which == "tau" else pair.sigma
    if level == "algebra":
        return inv.action
    if inv.kind != "conjugation" or inv.group_action is None:
        raise ConfigurationError(f"{which} has no coefficient-wise group action")
    return inv.group_action


def apply_involution(loop, which, pair, level="group"):
    """Apply a loop involution.

    sigma: c_i -> sigma(c_i) (-1)^i;  tau: c'_j = tau(c_{-j}) (-1)^j;
    rho: c_i -> rho(c_i);  rho2: c'_j = rho(c_{-j});
    rho_tilde: c_i -> rho(tau(sigma(c_i))).
    ``level`` selects whether coefficients are group or Lie algebra elements.
    """
    if which not in INVOLUTIONS:
        raise ConfigurationError(f"unknown involution {which!r}")
    degs = np.arange(loop.lo, loop.hi + 1)
    if which == "sigma":
        f = _coefficient_map(pair, "sigma", level)
        C = np.array([f(c) * (-1) ** int(k) for c, k in zip(loop.coeffs, degs)])
        return LaurentLoop(loop.lo, C, loop.trunc_bound, loop.annulus)
    if which == "tau":
        f = _coefficient_map(pair, "tau", level)
        C = np.array([f(c) * (-1) ** int(k) for c, k in zip(loop.coeffs[::-1], -degs[::-1])])
        return LaurentLoop(-loop.hi, C, loop.trunc_bound, _reflect(loop.annulus))
    if which == "rho":
        return loop.map_coefficients(_coefficient_map(pair, "rho", level))
    if which == "rho2":
        f = _coefficient_map(pair, "rho", level)
        C = np.array([f(c) for c in loop.coeffs[::-1]])
        return LaurentLoop(-loop.hi, C, loop.trunc_bound, _reflect(loop.annulus))
    fr = _coefficient_map(pair, "rho", level)
    ft = _coefficient_map(pair, "tau", level)
    fs = _coefficient_map(pair, "sigma", level)
    return loop.map_coefficients(lambda c: fr(ft(fs(c))))


def _reflect(annulus):
    return (1.0 / annulus[1], 1.0 / annulus[0])


def pointwise_involution(F, which, pair, lam, level="group"):
    """Value of the involuted loop at lam, from a callable F(lambda)."""
    f = {
        "sigma": lambda: _coefficient_map(pair, "sigma", level)(F(-lam)),
        "tau": lambda: _coefficient_map(pair, "tau", level)(F(-1.0 / lam)),
        "rho": lambda: _coefficient_map(pair, "rho", level)(F(np.conj(lam))),
        "rho2": lambda: _coefficient_map(pair, "rho", level)(F(1.0 / np.conj(lam))),
    }
    if which == "rho_tilde":
        fr = _coefficient_map(pair, "rho", level)
        ft = _coefficient_map(pair, "tau", level)
        fs = _coefficient_map(pair, "sigma", level)
        return fr(ft(fs(F(np.conj(lam)))))
    return f[which]()


def is_in_H(loop, pair, reality="rho", level="group"):
    """Fixedness under sigma, tau and the reality condition; returns (flag, residual)."""
    if reality not in ("rho", "rho2", "rho_tilde"):
        raise ConfigurationError(f"unknown reality condition {reality!r}")
    res = 0.0
    for which in ("sigma", "tau", reality):
        res = max(res, apply_involution(loop, which, pair, level).max_coeff_diff(loop))
    tol = 1e-9 + loop.trunc_bound
    return res <= tol, float(res)
