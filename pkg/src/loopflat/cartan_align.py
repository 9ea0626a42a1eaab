"""Aligning a maximal abelian subspace of u_- so that it projects onto a given V.

All computations happen in coordinates of u_- that are orthonormal for the
pair's inner product, so orthogonal projections are plain matrix products.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, ObstructionError, SearchFailureError
from .lie_core import (
    _range_basis,
    _rng,
    commutation_residual,
    maximal_abelian_in,
    rank_of,
)

SURJECTIVE_TOL = 1e-6
COMMUTE_TOL = 1e-9


@dataclass(frozen=True)
class AlignmentResult:
    cartan: np.ndarray  # algebra coordinates, shape (d, r)
    matrices: np.ndarray  # shape (r, m, m)
    steps: int
    projection_rank: int
    sigma_min: float
    mode: str

    @property
    def dim(self):
        return self.cartan.shape[1]


class _Frame:
    """Orthonormal coordinates on u_- for a pair."""

    def __init__(self, pair):
        self.pair = pair
        self.alg = pair.algebra
        if not pair.secondary_riemannian:
            raise DomainError("alignment needs a definite inner product on u_-")
        self.Q = pair.orthonormal_basis("u-")  # d x N
        self.G = pair.inner_product

    def to_local(self, C):
        return self.Q.T @ self.G @ C

    def to_algebra(self, v):
        return self.Q @ v


def projection_singular_values(Vloc, Mloc):
    """Singular values of pi_V restricted to span(M), both orthonormal locally."""
    if Mloc.shape[1] == 0 or Vloc.shape[1] == 0:
        return np.zeros(0)
    return np.linalg.svd(Vloc.T @ Mloc, compute_uv=False)


def _proj_rank(Vloc, Mloc, tol=SURJECTIVE_TOL):
    s = projection_singular_values(Vloc, Mloc)
    return int(np.sum(s >= tol)), (s.min() if s.size else 0.0)


def _orthonormal_local(frame, V):
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    loc = frame.to_local(V)
    back = frame.to_algebra(loc)
    if np.abs(back - V).max() > 1e-8 * max(1.0, np.abs(V).max()):
        raise DomainError("V is not contained in u_-")
    basis = _range_basis(loc, tol=1e-8)
    if basis.shape[1] < V.shape[1]:
        raise DomainError(f"V has numerical rank {basis.shape[1]} < {V.shape[1]}")
    return basis


def _is_abelian(alg, C):
    return commutation_residual(alg, C) <= COMMUTE_TOL * max(1.0, np.abs(C).max() ** 2)


def _constructive(frame, Vloc, Mloc, rng, max_tries=8):
    """The flow iteration; returns (Mloc, steps) or None on stall."""
    alg = frame.alg
    k = Vloc.shape[1]
    steps = 0
    rank, _ = _proj_rank(Vloc, Mloc)
    while rank < k:
        # split m into a part mapping onto pi_V(m) and the kernel of pi_V on m
        U, s, Wt = np.linalg.svd(Vloc.T @ Mloc, full_matrices=True)
        j = int(np.sum(s >= SURJECTIVE_TOL))
        kernel = Mloc @ Wt[j:].T
        image = Vloc @ U[:, :j]
        # y in V orthogonal to pi_V(m); it is then orthogonal to m as well
        ycand = Vloc - image @ (image.T @ Vloc)
        ycand = _range_basis(ycand, tol=1e-8)
        progressed = False
        for _ in range(max_tries):
            a = kernel @ rng.standard_normal(kernel.shape[1])
            a /= np.linalg.norm(a)
            y = ycand @ rng.standard_normal(ycand.shape[1])
            y /= np.linalg.norm(y)
            Z = alg.bracket_coords(frame.to_algebra(a), frame.to_algebra(y))
            zn = np.linalg.norm(Z)
            if zn < 1e-10:
                continue
            adZ = alg.ad(Z)
            for kk in range(21):
                t = 2.0 ** (-kk) / zn
                phi = expm(t * adZ)
                Mnew_alg = phi @ frame.to_algebra(Mloc)
                Mnew = frame.to_local(Mnew_alg)
                if not _is_abelian(alg, frame.to_algebra(Mnew)):
                    continue
                new_rank, _ = _proj_rank(Vloc, Mnew)
                if new_rank > rank:
                    Mloc, rank = Mnew, new_rank
                    steps += 1
                    progressed = True
                    break
            if progressed:
                break
        if not progressed:
            return None
    return Mloc, steps


def align_cartan(pair, V, mode="constructive", rng=None, start=None, budget=10):
    """Maximal abelian subspace m of u_- with pi_V(m) = V.

    ``V`` and ``start`` are algebra coordinate matrices (columns).  In
    constructive mode the flow iteration is run from ``start`` (or from a
    random maximal abelian subspace) and restarted from fresh random subspaces
    on a stall.  Randomized mode samples maximal abelian subspaces until one
    projects onto V.
    """
    rng = _rng(rng)
    frame = _Frame(pair)
    alg = frame.alg
    Vloc = _orthonormal_local(frame, V)
    uminus = pair.bases["u-"]
    r = rank_of(alg, None, rng=rng, subspace=uminus)
    k = Vloc.shape[1]
    if k > r:
        raise ObstructionError(f"dim V = {k} exceeds the rank {r}")

    def finish(Mloc, steps, used):
        Q, _ = np.linalg.qr(Mloc)
        C = frame.to_algebra(Q)
        rank, smin = _proj_rank(Vloc, Q)
        return AlignmentResult(C, alg.elements(C), steps, rank, float(smin), used)

    # V already maximal abelian
    if k == r and _is_abelian(alg, frame.to_algebra(Vloc)):
        return finish(Vloc, 0, mode)

    if mode == "constructive":
        for attempt in range(budget):
            if attempt == 0 and start is not None:
                Mloc = _orthonormal_local(frame, start)
            else:
                m = maximal_abelian_in(alg, uminus, rng=rng, rank=r)
                Mloc = _range_basis(frame.to_local(m.coords))
            out = _constructive(frame, Vloc, Mloc, rng)
            if out is not None:
                return finish(out[0], out[1], mode)
        raise SearchFailureError("constructive alignment stalled on every restart")
    if mode == "randomized":
        for _ in range(max(budget, 50)):
            m = maximal_abelian_in(alg, uminus, rng=rng, rank=r)
            Mloc = _range_basis(frame.to_local(m.coords))
            rank, _ = _proj_rank(Vloc, Mloc)
            if rank == k:
                return finish(Mloc, 0, mode)
        raise SearchFailureError("no sampled maximal abelian subspace projects onto V")
    raise ValueError(f"unknown mode {mode!r}")
