"""Matrix Lie algebras with commuting involutions.

An algebra is stored as the real span of a list of (real or complex) matrices.
Coordinates of a matrix with respect to that list are obtained by least squares
on the stacked real and imaginary parts, so complex representations of real
forms (su(n), sp(n), ...) are handled exactly like real ones.

Subspaces are passed around as coordinate matrices of shape ``(d, k)``: column
``j`` holds the coordinates of the ``j``-th spanning element.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .errors import (
    ConfigurationError,
    DomainError,
    NumericalDegeneracyError,
    SearchFailureError,
    ValidationError,
)

MEMBERSHIP_TOL = 1e-9
DEFAULT_SEED = 20240601


def bracket(X, Y):
    return X @ Y - Y @ X


def _vec(X):
    X = np.asarray(X)
    flat = X.reshape(-1)
    return np.concatenate([flat.real, flat.imag])


def _range_basis(M, tol=1e-9):
    """Orthonormal basis (columns) of the column space of M."""
    if M.size == 0:
        return np.zeros((M.shape[0], 0))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((M.shape[0], 0))
    keep = s > tol * max(1.0, s[0])
    return U[:, keep]


def null_basis(M, tol=1e-9):
    """Orthonormal basis of the null space of M (columns)."""
    n = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(n)
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    scale = max(1.0, s[0]) if s.size else 1.0
    rank = int(np.sum(s > tol * scale))
    return Vt[rank:].T.conj()


@dataclass(frozen=True)
class LieAlgebraBasis:
    """Real Lie algebra spanned by ``basis`` (array of shape ``(d, m, m)``)."""

    name: str
    basis: np.ndarray
    killing: np.ndarray = field(repr=False)
    structure: np.ndarray = field(repr=False)  # structure[k, i, j] = coord_k([b_i, b_j])

    @property
    def dim(self):
        return self.basis.shape[0]

    @property
    def ambient_dim(self):
        return self.basis.shape[1]

    @property
    def is_complex(self):
        return np.iscomplexobj(self.basis)

    @cached_property
    def _design(self):
        return np.stack([_vec(b) for b in self.basis], axis=1)

    @cached_property
    def _design_pinv(self):
        return np.linalg.pinv(self._design)

    @cached_property
    def _basis_scale(self):
        return max(np.linalg.norm(b) for b in self.basis) if self.dim else 1.0

    def coords_with_residual(self, X):
        v = _vec(X)
        c = self._design_pinv @ v
        res = np.linalg.norm(self._design @ c - v)
        return c, res

    def coords(self, X, check=True):
        """Real coordinates of X; raises DomainError when X is outside the span."""
        c, res = self.coords_with_residual(X)
        if check and res > MEMBERSHIP_TOL * self._basis_scale * max(1.0, np.linalg.norm(c)):
            raise DomainError(f"element not in {self.name} (residual {res:.3e})")
        return c

    def element(self, c):
        return np.tensordot(np.asarray(c, dtype=float), self.basis, axes=(0, 0))

    def elements(self, C):
        """Matrices for each column of a coordinate matrix C of shape (d, k)."""
        return np.einsum("dk,dab->kab", np.asarray(C, dtype=float), self.basis)

    def ad(self, c):
        """Matrix of ad_X in coordinates, X given by coordinates c."""
        return np.einsum("kij,i->kj", self.structure, c)

    def bracket_coords(self, a, b):
        return np.einsum("kij,i,j->k", self.structure, a, b)

    def killing_form(self, a, b):
        return float(a @ self.killing @ b)

    def operator_matrix(self, action):
        """Coordinate matrix of a linear map given on ambient matrices."""
        cols = [self.coords(action(b), check=False) for b in self.basis]
        M = np.stack(cols, axis=1)
        res = max(
            self.coords_with_residual(action(b))[1] for b in self.basis
        )
        if res > 1e-8 * self._basis_scale:
            raise ValidationError(f"map does not preserve {self.name} (residual {res:.3e})")
        return M

    @cached_property
    def is_compact(self):
        w = np.linalg.eigvalsh(self.killing)
        return bool(w.max() < -1e-8 * max(1.0, abs(w).max()))

    @cached_property
    def real_structure(self):
        """Complex-conjugation map of the complexification fixing this real form.

        Returns a callable on complex ambient matrices.  A complex matrix Z is
        expanded as sum z_j b_j with complex z_j; the conjugation sends it to
        sum conj(z_j) b_j.
        """
        B = np.stack([b.reshape(-1).astype(complex) for b in self.basis], axis=1)
        pinv = np.linalg.pinv(B)
        shape = self.basis.shape[1:]
        basis = self.basis

        def rho(Z):
            z = pinv @ np.asarray(Z, dtype=complex).reshape(-1)
            return np.tensordot(z.conj(), basis, axes=(0, 0)).reshape(shape)

        return rho


def killing_from_structure(structure):
    ad = np.transpose(structure, (1, 0, 2))  # ad[i] = ad(b_i)
    return np.einsum("ikl,jlk->ij", ad, ad)


def make_algebra(name, mats):
    """Assemble a LieAlgebraBasis from a spanning list, checking closure."""
    basis = np.array(mats)
    if np.iscomplexobj(basis) and np.allclose(basis.imag, 0):
        basis = basis.real.copy()
    d = basis.shape[0]
    shell = LieAlgebraBasis(name, basis, np.zeros((d, d)), np.zeros((d, d, d)))
    structure = np.zeros((d, d, d))
    worst = 0.0
    for i in range(d):
        for j in range(i + 1, d):
            c, res = shell.coords_with_residual(bracket(basis[i], basis[j]))
            structure[:, i, j] = c
            structure[:, j, i] = -c
            worst = max(worst, res)
    if worst > 1e-10 * max(1.0, shell._basis_scale ** 2):
        raise ValidationError(f"{name}: span not closed under bracket (residual {worst:.3e})")
    K = killing_from_structure(structure)
    return LieAlgebraBasis(name, basis, K, structure)


# ---------------------------------------------------------------------------
# catalog of algebras


def _E(m, i, j, dtype=float):
    M = np.zeros((m, m), dtype=dtype)
    M[i, j] = 1
    return M


def _so(m):
    return [_E(m, i, j) - _E(m, j, i) for i in range(m) for j in range(i + 1, m)]


def _su_complex(m):
    out = []
    for i in range(m):
        for j in range(i + 1, m):
            out.append(_E(m, i, j, complex) - _E(m, j, i, complex))
            out.append(1j * (_E(m, i, j, complex) + _E(m, j, i, complex)))
    for j in range(m - 1):
        out.append(1j * (_E(m, j, j, complex) - _E(m, j + 1, j + 1, complex)))
    return out


def _realify(Z):
    """a + ib  ->  [[a, b], [-b, a]]."""
    a, b = Z.real, Z.imag
    return np.block([[a, b], [-b, a]])


def _constrained_span(m, constraints, complex_entries):
    """Real basis of {X (m x m) : constraints(X) = 0} for real-linear constraints."""
    nparam = m * m * (2 if complex_entries else 1)

    def unpack(p):
        if complex_entries:
            return (p[: m * m] + 1j * p[m * m:]).reshape(m, m)
        return p.reshape(m, m)

    cols = []
    for k in range(nparam):
        p = np.zeros(nparam)
        p[k] = 1.0
        cols.append(np.concatenate([_vec(c) for c in constraints(unpack(p))]))
    N = null_basis(np.stack(cols, axis=1))
    return [unpack(N[:, k].real) for k in range(N.shape[1])]


def _omega(m):
    I = np.eye(m)
    Z = np.zeros((m, m))
    return np.block([[Z, I], [-I, Z]])


def _sp_compact(m):
    Om = _omega(m)
    return _constrained_span(
        2 * m,
        lambda X: [X.conj().T + X, X.T @ Om + Om @ X],
        True,
    )


def _sl_real(m):
    out = [_E(m, i, j) for i in range(m) for j in range(m) if i != j]
    out += [_E(m, j, j) - _E(m, j + 1, j + 1) for j in range(m - 1)]
    return out


def _sp_real(m):
    Om = _omega(m)
    return _constrained_span(2 * m, lambda X: [X.T @ Om + Om @ X], False)


def _so_n1(n):
    J = np.diag([1.0] * n + [-1.0])
    return _constrained_span(n + 1, lambda X: [X.T @ J + J @ X], False)


def _su_n1(n):
    J = np.diag([1.0] * n + [-1.0])
    return _constrained_span(
        n + 1, lambda X: [X.conj().T @ J + J @ X, np.array([np.trace(X)])], True
    )


def _sp_n1(n):
    m = n + 1
    K = np.diag([1.0] * n + [-1.0] + [1.0] * n + [-1.0])
    Om = _omega(m)
    return _constrained_span(
        2 * m, lambda X: [X.conj().T @ K + K @ X, X.T @ Om + Om @ X], True
    )


FAMILIES = {
    # family: (builder, minimum n, maximum n, ambient size as function of n)
    "so": (lambda n: _so(n), 2, 16, lambda n: n),
    "su": (lambda n: _su_complex(n + 1), 1, 15, lambda n: n + 1),
    "su_real": (lambda n: [_realify(Z) for Z in _su_complex(n + 1)], 1, 7, lambda n: 2 * n + 2),
    "sp": (lambda n: _sp_compact(n + 1), 0, 7, lambda n: 2 * n + 2),
    "sl_real": (lambda n: _sl_real(n + 1), 1, 15, lambda n: n + 1),
    "sp_real": (lambda n: _sp_real(n + 1), 0, 7, lambda n: 2 * n + 2),
    "so_n1": (_so_n1, 1, 15, lambda n: n + 1),
    "su_n1": (_su_n1, 1, 15, lambda n: n + 1),
    "sp_n1": (_sp_n1, 1, 7, lambda n: 2 * n + 2),
}


def build_algebra(family, n=None):
    """Build a catalog algebra.

    Size conventions: ``so`` with n gives so(n) on n x n matrices; ``su``,
    ``su_real``, ``sp``, ``sl_real`` and ``sp_real`` with n give the algebras
    attached to n-dimensional projective spaces, i.e. su(n+1), sp(n+1),
    sl(n+1, R), sp(n+1, R).  ``su_real`` is su(n+1) in its real (2n+2)-dimensional
    representation a + ib -> [[a, b], [-b, a]].  ``so_n1``, ``su_n1``, ``sp_n1``
    are the non-compact so(n,1), su(n,1), sp(n,1).  ``g2`` ignores n and gives
    the derivations of the octonions acting on Im(O) = R^7.
    """
    if family == "g2":
        from .octonions import g2_basis

        return make_algebra("g2", g2_basis())
    if family not in FAMILIES:
        raise ConfigurationError(f"unknown algebra family {family!r}")
    builder, lo, hi, ambient = FAMILIES[family]
    if n is None or int(n) != n or not lo <= n <= hi or ambient(n) > 16:
        raise ConfigurationError(f"unsupported size n={n!r} for family {family!r}")
    return make_algebra(f"{family}:{n}", builder(int(n)))


def parse_algebra_key(key):
    """'so:5' -> build_algebra('so', 5); 'g2' -> g2."""
    if key == "g2":
        return build_algebra("g2")
    try:
        family, n = key.split(":")
        return build_algebra(family, int(n))
    except ValueError as exc:
        raise ConfigurationError(f"malformed algebra key {key!r}") from exc


def killing(alg, X, Y):
    """Killing form of two ambient matrices lying in the algebra."""
    return alg.killing_form(alg.coords(X), alg.coords(Y))


# ---------------------------------------------------------------------------
# involutions


@dataclass(frozen=True)
class Involution:
    """Involutive automorphism acting on ambient matrices.

    ``group_action`` is the corresponding map on group elements when it is
    known (always for conjugations).
    """

    kind: str
    action: Callable
    matrix: Optional[np.ndarray] = None
    group_action: Optional[Callable] = None
    label: str = ""

    @classmethod
    def conjugation(cls, P, label="Ad"):
        P = np.asarray(P)
        Pinv = np.linalg.inv(P)
        act = lambda X: P @ X @ Pinv  # noqa: E731
        return cls("conjugation", act, P, act, label)

    @classmethod
    def composite(cls, action, group_action=None, label="composite"):
        return cls("composite", action, None, group_action, label)

    @classmethod
    def identity(cls):
        f = lambda X: X  # noqa: E731
        return cls("conjugation", f, None, f, "id")

    def __call__(self, X):
        return self.action(X)

    def then(self, other, label=None):
        """Composite map X -> self(other(X))."""
        ga = None
        if self.group_action is not None and other.group_action is not None:
            ga = lambda g: self.group_action(other.group_action(g))  # noqa: E731
        return Involution.composite(
            lambda X: self.action(other.action(X)), ga, label or f"{self.label}*{other.label}"
        )


def check_involution(alg, inv, tol=1e-10):
    """Return the worst involutivity and automorphism residuals on basis pairs."""
    T = alg.operator_matrix(inv.action)
    invol = np.abs(T @ T - np.eye(alg.dim)).max()
    hom = 0.0
    for i in range(alg.dim):
        for j in range(i + 1, alg.dim):
            lhs = T @ alg.structure[:, i, j]
            rhs = alg.bracket_coords(T[:, i], T[:, j])
            hom = max(hom, np.abs(lhs - rhs).max())
    return T, invol, hom


# ---------------------------------------------------------------------------
# pairwise symmetric algebra


SIGNS = ("++", "+-", "-+", "--")


@dataclass(frozen=True)
class PairwiseSymmetricAlgebra:
    """(u, tau, sigma) with the four joint eigenspaces.

    Sign conventions: the first sign is the tau-eigenvalue, the second the
    sigma-eigenvalue.  k = u^{++} + u^{+-}, p = u^{-+} + u^{--},
    u_+ = u^{++} + u^{-+}, u_- = u^{+-} + u^{--}, k' = u^{++}, p' = u^{--}.
    """

    algebra: LieAlgebraBasis
    tau: Involution
    sigma: Involution
    T: np.ndarray
    S: np.ndarray
    projectors: dict
    bases: dict

    def subspace(self, name):
        return self.bases[name]

    def dims(self):
        return {k: v.shape[1] for k, v in self.bases.items()}

    def project(self, name, c):
        parts = {"k": ("++", "+-"), "p": ("-+", "--"), "u+": ("++", "-+"), "u-": ("+-", "--"),
                 "k'": ("++",), "p'": ("--",)}
        keys = parts.get(name, (name,))
        return sum(self.projectors[k] for k in keys) @ c

    @cached_property
    def inner_product(self):
        """Ad-invariant, definite-where-possible inner product on coordinates.

        -Killing when the algebra is compact.  Otherwise the Killing form with
        its sign flipped on u_+, which is positive definite exactly when the
        Killing form is definite on both u_+ and u_- with opposite signs
        (a Riemannian U/U_+ of non-compact type).
        """
        K = self.algebra.killing
        if self.algebra.is_compact:
            return -K
        Pp = self.projectors["++"] + self.projectors["-+"]
        Pm = self.projectors["+-"] + self.projectors["--"]
        return -Pp.T @ K @ Pp + Pm.T @ K @ Pm

    @cached_property
    def secondary_signature(self):
        """(positive, negative, zero) counts of the Killing form on u_-."""
        B = self.bases["u-"]
        if B.shape[1] == 0:
            return (0, 0, 0)
        w = np.linalg.eigvalsh(B.T @ self.algebra.killing @ B)
        scale = max(1.0, np.abs(w).max())
        return (int(np.sum(w > 1e-8 * scale)), int(np.sum(w < -1e-8 * scale)),
                int(np.sum(np.abs(w) <= 1e-8 * scale)))

    @property
    def secondary_riemannian(self):
        """Killing form definite on u_- and of opposite sign on u_+."""
        pos, neg, zero = self.secondary_signature
        if zero or (pos and neg):
            return False
        Bp = self.bases["u+"]
        if Bp.shape[1] == 0:
            return True
        w = np.linalg.eigvalsh(Bp.T @ self.algebra.killing @ Bp)
        return bool(w.max() < 0)

    def orthonormal_basis(self, name):
        """Basis of a subspace orthonormal for ``inner_product`` (coords, d x k)."""
        return orthonormalize(self.bases[name], self.inner_product)

    def bracket_relation_residuals(self):
        """Residuals of [k',p'] in p', [[p',p'],p'] in p', [k cap u_-, p'] in p'^perp."""
        alg = self.algebra
        kp, pp, km = self.bases["++"], self.bases["--"], self.bases["+-"]
        out_pp = np.eye(alg.dim) - self.projectors["--"]
        r1 = r2 = r3 = 0.0
        for a in kp.T:
            for b in pp.T:
                r1 = max(r1, np.abs(out_pp @ alg.bracket_coords(a, b)).max())
        for a in pp.T:
            for b in pp.T:
                ab = alg.bracket_coords(a, b)
                for c in pp.T:
                    r2 = max(r2, np.abs(out_pp @ alg.bracket_coords(ab, c)).max())
        for a in km.T:
            for b in pp.T:
                r3 = max(r3, np.abs(self.projectors["--"] @ alg.bracket_coords(a, b)).max())
        return r1, r2, r3


def orthonormalize(C, G):
    """Columns of C made G-orthonormal (G positive definite on their span)."""
    if C.shape[1] == 0:
        return C
    M = C.T @ G @ C
    w, V = np.linalg.eigh((M + M.T) / 2)
    if w.min() <= 0:
        raise NumericalDegeneracyError("inner product not definite on subspace")
    return C @ V @ np.diag(w ** -0.5)


def decompose(alg, tau, sigma, tol=1e-10):
    """Joint eigenspace decomposition of a pair of commuting involutions."""
    T, t_inv, t_hom = check_involution(alg, tau)
    S, s_inv, s_hom = check_involution(alg, sigma)
    scale = max(1.0, np.abs(T).max(), np.abs(S).max())
    for label, val in (("tau^2 = id", t_inv), ("tau bracket", t_hom),
                       ("sigma^2 = id", s_inv), ("sigma bracket", s_hom)):
        if val > tol * scale * 1e2:
            raise ValidationError(f"identity {label} fails (residual {val:.3e})")
    comm = np.abs(T @ S - S @ T).max()
    if comm > tol * scale * 1e2:
        raise ValidationError(f"identity tau*sigma = sigma*tau fails (residual {comm:.3e})")
    I = np.eye(alg.dim)
    proj = {}
    for signs in SIGNS:
        st = 1 if signs[0] == "+" else -1
        ss = 1 if signs[1] == "+" else -1
        proj[signs] = (I + st * T) @ (I + ss * S) / 4
    bases = {s: _range_basis(proj[s]) for s in SIGNS}
    bases["k"] = np.hstack([bases["++"], bases["+-"]])
    bases["p"] = np.hstack([bases["-+"], bases["--"]])
    bases["u+"] = np.hstack([bases["++"], bases["-+"]])
    bases["u-"] = np.hstack([bases["+-"], bases["--"]])
    bases["k'"] = bases["++"]
    bases["p'"] = bases["--"]
    return PairwiseSymmetricAlgebra(alg, tau, sigma, T, S, proj, bases)


# ---------------------------------------------------------------------------
# centralizers, rank and maximal abelian subspaces


def _rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(DEFAULT_SEED if rng is None else rng)


def centralizer_in(alg, elems, subspace, tol=1e-8):
    """Basis (coords) of {Y in subspace : [x, Y] = 0 for all x in elems}."""
    if subspace.shape[1] == 0:
        return subspace
    blocks = [alg.ad(x) @ subspace for x in np.atleast_2d(elems.T).reshape(-1, alg.dim)]
    M = np.vstack(blocks)
    scale = max(1.0, np.abs(M).max())
    N = null_basis(M / scale, tol=tol)
    return subspace @ N


def rank_of(alg, sigma, draws=5, rng=None, subspace=None):
    """Dimension of a maximal abelian subspace of the (-1)-eigenspace of sigma.

    Generic centralizer dimension in u_- of random elements; majority over
    ``draws`` samples, with one retry when the vote is not unanimous enough.
    """
    rng = _rng(rng)
    if subspace is None:
        S = alg.operator_matrix(sigma.action) if isinstance(sigma, Involution) else sigma
        subspace = _range_basis((np.eye(alg.dim) - S) / 2)
    if subspace.shape[1] == 0:
        raise DomainError("the (-1)-eigenspace is zero; rank undefined")
    for _ in range(3):
        votes = []
        for _ in range(max(5, draws)):
            x = subspace @ rng.standard_normal(subspace.shape[1])
            votes.append(centralizer_in(alg, x[:, None], subspace).shape[1])
        values, counts = np.unique(votes, return_counts=True)
        if counts.max() * 2 > len(votes):
            return int(values[np.argmax(counts)])
    raise NumericalDegeneracyError(f"inconsistent centralizer dimensions {votes}")


def commutation_residual(alg, C):
    worst = 0.0
    for i in range(C.shape[1]):
        for j in range(i + 1, C.shape[1]):
            worst = max(worst, np.abs(alg.bracket_coords(C[:, i], C[:, j])).max())
    return worst


@dataclass(frozen=True)
class CartanSubalgebra:
    """Maximal abelian subspace given by coordinates (columns) and matrices."""

    coords: np.ndarray
    matrices: np.ndarray

    @property
    def dim(self):
        return self.coords.shape[1]


def maximal_abelian_in(alg, subspace, rng=None, budget=10, rank=None):
    """Greedy maximal abelian subspace inside a subspace given by coordinates.

    Start with a random element, then repeatedly adjoin a random element of the
    common centralizer (taken orthogonal to what has been collected) until the
    centralizer equals the collected span.  The result is checked against the
    generic rank; failures are retried with fresh randomness.
    """
    rng = _rng(rng)
    if subspace.shape[1] == 0:
        raise DomainError("empty subspace")
    target = rank_of(alg, None, rng=rng, subspace=subspace) if rank is None else rank
    for _ in range(budget):
        x = subspace @ rng.standard_normal(subspace.shape[1])
        A = (x / np.linalg.norm(x))[:, None]
        while True:
            Z = centralizer_in(alg, A, subspace)
            # remove the part already in A
            Q, _ = np.linalg.qr(A)
            Zc = Z - Q @ (Q.T @ Z)
            Zc = _range_basis(Zc, tol=1e-7)
            if Zc.shape[1] == 0:
                break
            z = Zc @ rng.standard_normal(Zc.shape[1])
            A = np.hstack([A, (z / np.linalg.norm(z))[:, None]])
        if A.shape[1] == target and commutation_residual(alg, A) <= 1e-10 * max(1.0, alg._basis_scale):
            Q, _ = np.linalg.qr(A)
            return CartanSubalgebra(Q, alg.elements(Q))
    raise SearchFailureError(f"could not reach an abelian subspace of dimension {target}")


# ---------------------------------------------------------------------------
# twisted real forms


def twisted_algebra(alg, tau, sigma, name=None):
    """Real form fixed by rho o tau o sigma, rho the conjugation fixing ``alg``.

    It equals u^{tau sigma = +1} + i u^{tau sigma = -1}; tau and sigma act on it
    by the same (complex-linear) formulas.
    """
    T = alg.operator_matrix(tau.action)
    S = alg.operator_matrix(sigma.action)
    TS = T @ S
    I = np.eye(alg.dim)
    plus = _range_basis((I + TS) / 2)
    minus = _range_basis((I - TS) / 2)
    mats = [alg.element(c) for c in plus.T]
    mats += [1j * alg.element(c) for c in minus.T]
    return make_algebra(name or f"twist({alg.name})", [m.astype(complex) for m in mats])
