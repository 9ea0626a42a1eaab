"""Catalog of pairwise symmetric algebras and the rank obstruction verdicts.

A case ``exists`` when a regular curved flat in U/U_+ can be aligned onto the
whole of p' = p intersect u_-.  When U/U_+ is Riemannian this happens exactly
when dim p' <= rank(U/U_+).  For non-compact cases the algebra is first replaced
by its twisted real form (fixed points of rho o tau o sigma).  When the
secondary space is not Riemannian only an explicit abelian witness can decide,
and the verdict is never negative.
"""
import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .cartan_align import align_cartan
from .errors import ConfigurationError, DomainError, ObstructionError
from .lie_core import (
    Involution,
    build_algebra,
    commutation_residual,
    decompose,
    null_basis,
    orthonormalize,
    rank_of,
    twisted_algebra,
)

WITNESS_COMMUTE_TOL = 1e-12
SURJECTIVE_TOL = 1e-6


def _diag(*parts):
    return np.diag(np.concatenate([np.atleast_1d(np.asarray(p, dtype=float)) for p in parts]))


def _ones(k, s=1.0):
    return np.full(k, s)


@dataclass(frozen=True)
class GeometryCase:
    key: str
    description: str
    family: str
    n: Optional[int]
    k: Optional[int]
    involutions: Optional[Callable] = field(default=None, repr=False)  # alg -> (tau, sigma)
    compact: bool = True
    reality_mode: str = "rho"  # or 'rho_tilde'
    expected_verdict: Optional[bool] = None  # reference value, not used by verdict()
    construct: Optional[str] = None  # frame convention kind for construction runs
    witness: Optional[Callable] = field(default=None, repr=False)
    excluded: bool = False
    note: str = ""

    def build(self):
        """(algebra, pair) for the case as stated (before any twist)."""
        if self.excluded:
            raise DomainError(f"case {self.key} is excluded from computation")
        alg = build_algebra(self.family, self.n)
        tau, sigma = self.involutions(alg)
        return alg, decompose(alg, tau, sigma)


@dataclass
class VerdictRow:
    key: str
    dim_p_prime: Optional[int]
    rank: Optional[int]
    riemannian_secondary: Optional[bool]
    exists: Optional[bool]
    path: str = "rank"  # 'rank', 'witness', 'excluded'
    witness_residual: Optional[float] = None
    witness: Optional[list] = None
    witness_ok: Optional[bool] = None
    expected: Optional[bool] = None
    note: str = ""

    @property
    def matches(self):
        return self.expected is None or self.exists == self.expected

    def to_dict(self):
        return {
            "key": self.key, "dim_p_prime": self.dim_p_prime, "rank": self.rank,
            "riemannian_secondary": self.riemannian_secondary, "exists": self.exists,
            "path": self.path, "witness_residual": self.witness_residual,
            "witness_ok": self.witness_ok,
            "expected": self.expected, "matches": self.matches, "note": self.note,
        }


# ---------------------------------------------------------------------------
# involution data per geometry


def _sphere_inv(n, k):
    def make(alg):
        return (Involution.conjugation(_diag(_ones(n), -1), "tau"),
                Involution.conjugation(_diag(_ones(k), _ones(n + 1 - k, -1)), "sigma"))
    return make


def _cpn_complex_inv(n, k):
    # su(n+1) as complex matrices; CP^k spanned by the first k coordinates and f
    def make(alg):
        return (Involution.conjugation(_diag(_ones(n), -1), "tau"),
                Involution.conjugation(_diag(_ones(k), _ones(n + 1 - k, -1)), "sigma"))
    return make


def _cpn_real_inv(n):
    # su(n+1) in the real representation; sigma is complex conjugation
    def make(alg):
        return (Involution.conjugation(_diag(_ones(n), -1, _ones(n), -1), "tau"),
                Involution.conjugation(_diag(_ones(n + 1), _ones(n + 1, -1)), "sigma"))
    return make


def _hpn_inv(n):
    # sp(n+1) on C^{2n+2}; u_+ = u(n+1) embedded as diag(A, conj(A))
    def make(alg):
        return (Involution.conjugation(_diag(_ones(n), -1, _ones(n), -1), "tau"),
                Involution.conjugation(_diag(_ones(n + 1), _ones(n + 1, -1)), "sigma"))
    return make


def _chn_real_inv(n):
    J = _diag(_ones(n), -1)

    def sigma(X):
        return -J @ X.T @ J

    def make(alg):
        return (Involution.conjugation(J, "tau"),
                Involution.composite(sigma, lambda g: J @ np.linalg.inv(g).T @ J, "sigma"))
    return make


def _hhn_inv(n):
    m = n + 1

    def make(alg):
        K = _diag(_ones(n), -1, _ones(n), -1)
        Om = np.block([[np.zeros((m, m)), np.eye(m)], [-np.eye(m), np.zeros((m, m))]])
        return Involution.conjugation(K, "tau"), Involution.conjugation(Om, "sigma")
    return make


G2_TAU = (1, -1, -1, 1, 1, -1, -1)
G2_SIGMA = (1, 1, 1, -1, -1, -1, -1)


def _g2_inv(alg):
    return (Involution.conjugation(np.diag(np.array(G2_TAU, float)), "tau"),
            Involution.conjugation(np.diag(np.array(G2_SIGMA, float)), "sigma"))


def chn_witness(n):
    """Commuting matrices {E_1, ..., E_{n-1}, E_hat} in sl(n+1, R).

    E_i = e_i (e_n + e_{n+1})^T + (e_n - e_{n+1}) e_i^T and
    E_hat = (e_n - e_{n+1}) (e_n + e_{n+1})^T (1-based indices).
    """
    m = n + 1
    e = np.eye(m)
    u = e[n - 1] + e[n]
    w = e[n - 1] - e[n]
    mats = [np.outer(e[i], u) + np.outer(w, e[i]) for i in range(n - 1)]
    mats.append(np.outer(w, u))
    return np.array(mats)


def chn_witness_model(n):
    """The sl(n+1, R) model in which the witness is stated: tau = Ad_J and
    sigma(y) = -J y^T J with J = diag(I_n, -1)."""
    alg = build_algebra("sl_real", n)
    tau, sigma = _chn_real_inv(n)(alg)
    return alg, decompose(alg, tau, sigma)


# ---------------------------------------------------------------------------
# catalog


def _sphere_case(n, k):
    return GeometryCase(
        f"sphere:n={n},k={k}", f"S^{k} in S^{n}, flat normal bundle", "so", n + 1, k,
        _sphere_inv(n, k), expected_verdict=k <= (n + 1) / 2, construct="sphere")


def _catalog():
    cases = []
    for n in range(2, 8):
        for k in range(1, n):
            cases.append(_sphere_case(n, k))
    for n in (2, 3):
        for k in range(1, n):
            cases.append(GeometryCase(
                f"cpn_complex:n={n},k={k}", f"complex CP^{k} in CP^{n}", "su", n, k,
                _cpn_complex_inv(n, k), expected_verdict=False))
    for n in (2, 3):
        cases.append(GeometryCase(
            f"cpn_real:n={n}", f"totally real RP^{n} in CP^{n}", "su_real", n, None,
            _cpn_real_inv(n), expected_verdict=True, construct="cpn"))
    cases.append(GeometryCase(
        "hpn:n=2", "totally complex CP^2 in HP^2", "sp", 2, None, _hpn_inv(2),
        expected_verdict=False))
    for n, k in ((3, 1), (3, 2), (4, 2), (4, 3)):
        cases.append(GeometryCase(
            f"hyperbolic:n={n},k={k}", f"H^{k} in H^{n}, flat normal bundle", "so_n1", n, k,
            _sphere_inv(n, k), compact=False, reality_mode="rho_tilde",
            expected_verdict=k <= (n + 1) / 2))
    for n, k in ((2, 1), (3, 1)):
        cases.append(GeometryCase(
            f"chn_complex:n={n},k={k}", f"complex CH^{k} in CH^{n}", "su_n1", n, k,
            _cpn_complex_inv(n, k), compact=False, reality_mode="rho_tilde",
            expected_verdict=False))
    for n in (2, 3):
        cases.append(GeometryCase(
            f"chn_real:n={n}", f"totally real RH^{n} in CH^{n}", "su_n1", n, None,
            _chn_real_inv(n), compact=False, reality_mode="rho_tilde",
            expected_verdict=True, witness=chn_witness))
    cases.append(GeometryCase(
        "hhn:n=2", "totally complex CH^2 in HH^2", "sp_n1", 2, None, _hhn_inv(2),
        compact=False, reality_mode="rho_tilde", expected_verdict=False))
    cases.append(GeometryCase(
        "g2", "G2 frames over S^6 (full dimension of p')", "g2", None, None, _g2_inv,
        expected_verdict=False, construct="g2",
        note="surfaces (dim 2 <= rank) are constructible"))
    cases.append(GeometryCase(
        "rspace", "geometries attached to symmetric R-spaces", "", None, None,
        expected_verdict=None, excluded=True,
        note="excluded by cited classification results; no computation"))
    return {c.key: c for c in cases}


CATALOG = _catalog()


def parse_case_key(key):
    """'sphere:n=4,k=2' -> GeometryCase.  Parameters may be given in any order."""
    key = key.strip()
    if key in CATALOG:
        return CATALOG[key]
    name, _, params = key.partition(":")
    try:
        kv = dict(p.split("=") for p in params.split(",") if p)
        kv = {a.strip(): int(b) for a, b in kv.items()}
    except ValueError as exc:
        raise ConfigurationError(f"malformed case key {key!r}") from exc
    n, k = kv.get("n"), kv.get("k")
    if name == "sphere" and n is not None and k is not None:
        if not (1 <= k < n and n + 1 <= 16):
            raise ConfigurationError(f"sphere case needs 1 <= k < n <= 15, got {key!r}")
        return _sphere_case(n, k)
    canon = f"{name}:" + ",".join(f"{a}={kv[a]}" for a in ("n", "k") if a in kv)
    if canon in CATALOG:
        return CATALOG[canon]
    raise ConfigurationError(f"unknown case {key!r}")


# ---------------------------------------------------------------------------
# verdicts


def secondary_pair(case):
    """(pair as stated, pair used for the rank test: twisted when reality_mode is rho_tilde)."""
    alg, pair = case.build()
    if case.reality_mode != "rho_tilde":
        return pair, pair
    talg = twisted_algebra(alg, pair.tau, pair.sigma, name=f"twist({alg.name})")
    return pair, decompose(talg, pair.tau, pair.sigma)


def check_witness(pair, mats):
    """Commutators, membership in u_- and surjectivity of the projection onto p'.

    Returns (ok, worst commutator, smallest singular value of the projection).
    """
    alg = pair.algebra
    C = np.stack([alg.coords(M) for M in mats], axis=1)
    comm = max((np.abs(mats[i] @ mats[j] - mats[j] @ mats[i]).max()
                for i in range(len(mats)) for j in range(i + 1, len(mats))), default=0.0)
    outside = np.abs(C - pair.project("u-", C)).max()
    P = pair.bases["p'"]
    G = pair.inner_product if pair.secondary_riemannian else np.eye(alg.dim)
    Po = orthonormalize(P, G) if pair.secondary_riemannian else np.linalg.qr(P)[0]
    proj = Po.T @ G @ pair.project("p'", C)
    s = np.linalg.svd(proj, compute_uv=False)
    smin = float(s.min()) if s.size and s.size == P.shape[1] else 0.0
    ok = comm <= WITNESS_COMMUTE_TOL and outside <= 1e-9 and smin >= SURJECTIVE_TOL
    return bool(ok), float(max(comm, outside)), smin


def verdict(case, rng=None, with_witness=True):
    """Existence verdict for one catalog case."""
    if case.excluded:
        return VerdictRow(case.key, None, None, None, None, "excluded", note=case.note,
                          expected=case.expected_verdict)
    base, sec = secondary_pair(case)
    dim_pp = base.dims()["p'"]
    if sec.dims()["p'"] != dim_pp:
        raise ObstructionError("twisting changed dim p'")
    riem = sec.secondary_riemannian
    rank = rank_of(sec.algebra, None, rng=rng, subspace=sec.bases["u-"])
    row = VerdictRow(case.key, dim_pp, rank, riem, None, expected=case.expected_verdict,
                     note=case.note)
    if riem:
        row.exists = dim_pp <= rank
        if row.exists and with_witness:
            res = align_cartan(sec, sec.bases["p'"], rng=rng)
            row.witness_residual = float(commutation_residual(sec.algebra, res.cartan))
            row.witness_ok = res.projection_rank == dim_pp
            row.witness = res.cartan.T.tolist()
    if case.witness is not None:
        # explicit abelian witness, checked in the model where it is written
        _, model = chn_witness_model(case.n)
        ok, resid, _ = check_witness(model, case.witness(case.n))
        row.witness_residual = resid
        row.witness_ok = ok
        row.witness = [m.tolist() for m in case.witness(case.n)]
        if not riem:
            row.exists = True if ok else None
            row.path = "witness"
        elif ok and not row.exists:
            row.exists = True
            row.path = "witness"
    return row


def full_table(keys=None, rng=None):
    keys = list(CATALOG) if keys is None else keys
    return [verdict(CATALOG[k] if k in CATALOG else parse_case_key(k), rng=rng,
                    with_witness=False) for k in keys]


def format_table(rows):
    head = ("case", "dim p'", "rank", "riemannian", "exists", "path", "expected")
    body = [(r.key, _s(r.dim_p_prime), _s(r.rank), _s(r.riemannian_secondary), _s(r.exists),
             r.path, _s(r.expected)) for r in rows]
    widths = [max(len(x[i]) for x in [head] + body) for i in range(len(head))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(line, widths)).rstrip()
             for line in [head] + body]
    return "\n".join(lines)


def _s(v):
    return "-" if v is None else str(v)


def table_json(rows):
    return json.dumps([r.to_dict() for r in rows], indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# twist checks


def twist_fixed_sets_agree(pair, window=2):
    """Compare fixed loops of {sigma, tau, rho2} and {sigma, tau, rho_tilde}.

    Loops sum_k X_k lambda^k, |k| <= window, with X_k in the complexification
    g = u + i u, written in real coordinates (a_k, b_k) for X_k = a_k + i b_k.
    Loop involutions: (sigma X)_k = (-1)^k sigma X_k, (tau X)_k = (-1)^k tau X_{-k},
    (rho2 X)_k = rho X_{-k}, (rho_tilde X)_k = rho tau sigma X_k.
    Returns the largest principal-angle sine between the two fixed subspaces
    and their dimensions.
    """
    alg = pair.algebra
    d = alg.dim
    T, S = pair.T, pair.S
    I = np.eye(d)
    degs = list(range(-window, window + 1))
    nk = len(degs)
    N = 2 * d * nk

    def block(A, conj=False):
        # complex-linear map on (a, b); conj composes with rho: (a, b) -> (a, -b)
        Z = np.zeros((d, d))
        return np.block([[A, Z], [Z, -A if conj else A]])

    def loop_map(coeff_map, reverse):
        M = np.zeros((N, N))
        for i, k in enumerate(degs):
            j = degs.index(-k) if reverse else i
            M[2 * d * i: 2 * d * (i + 1), 2 * d * j: 2 * d * (j + 1)] = coeff_map(k)
        return M

    sig = loop_map(lambda k: (-1) ** abs(k) * block(S), False)
    tau = loop_map(lambda k: (-1) ** abs(k) * block(T), True)
    rho2 = loop_map(lambda k: block(I, conj=True), True)
    rhot = loop_map(lambda k: block(T @ S, conj=True), False)
    Id = np.eye(N)

    def fixed(*maps):
        return null_basis(np.vstack([m - Id for m in maps]))

    A, B = fixed(sig, tau, rho2), fixed(sig, tau, rhot)
    if A.shape[1] != B.shape[1]:
        return 1.0, A.shape[1], B.shape[1]
    if A.shape[1] == 0:
        return 0.0, 0, 0
    Qa, _ = np.linalg.qr(A)
    Qb, _ = np.linalg.qr(B)
    return float(np.linalg.norm(Qb - Qa @ (Qa.T @ Qb), 2)), A.shape[1], B.shape[1]


def hyperbolic_isomorphism_residual(n, k):
    """Ad_T with T = diag(I_k, i I_{n-k}, 1) maps the twisted so(n,1) onto so(k, n+1-k).

    Returns the worst of: imaginary part of the images, failure of the
    so(k, n+1-k) condition, dimension mismatch (as 1.0) and failure of Ad_T to
    commute with sigma on the twisted algebra.
    """
    case = CATALOG.get(f"hyperbolic:n={n},k={k}") or GeometryCase(
        f"hyperbolic:n={n},k={k}", "", "so_n1", n, k, _sphere_inv(n, k), compact=False,
        reality_mode="rho_tilde")
    _, sec = secondary_pair(case)
    T = np.diag(np.concatenate([np.ones(k), 1j * np.ones(n - k), [1.0]]))
    Ti = np.linalg.inv(T)
    J = _diag(_ones(k), _ones(n + 1 - k, -1))
    worst = 0.0
    imgs = []
    for X in sec.algebra.basis:
        Y = T @ X @ Ti
        worst = max(worst, np.abs(Y.imag).max(), np.abs(Y.T @ J + J @ Y).max())
        worst = max(worst, np.abs(T @ sec.sigma(X) @ Ti - sec.sigma(Y)).max())
        imgs.append(Y.real.ravel())
    target = (n + 1) * n // 2
    if np.linalg.matrix_rank(np.array(imgs), tol=1e-9) != target:
        worst = max(worst, 1.0)
    return float(worst)


# ---------------------------------------------------------------------------
# construction set-up for the three constructed geometries


def construction_pair(case):
    """(pair, frame convention, seed subspace V in algebra coordinates)."""
    from .geometry import cpn_convention, g2_convention, sphere_convention

    if case.construct is None:
        raise ConfigurationError(f"case {case.key} has no construction convention")
    _, pair = case.build()
    P = pair.bases["p'"]
    if case.construct == "sphere":
        return pair, sphere_convention(case.n - 1, case.k), P
    if case.construct == "cpn":
        return pair, cpn_convention(case.n), P
    # g2: the part of p' moving the f column into the Y block
    conv = g2_convention()
    alg = pair.algebra
    G = pair.inner_product
    Po = orthonormalize(P, G)
    L = np.array([[alg.element(c)[i, conv.f_col] for c in Po.T] for i in conv.tangent_cols])
    _, s, Vt = np.linalg.svd(L)
    rank = int(np.sum(s > 1e-9 * max(1.0, s.max())))
    return pair, conv, Po @ Vt[:rank].T
