"""Construction runs and the verification battery shared by the CLI and the estimator."""
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .connection import EQUATIONS, extract_connection, mc_residuals
from .errors import ConfigurationError, ObstructionError
from .flows import DEFAULT_LAMBDAS, CurvedFlatSeed, kdpw_lift, seed_from_alignment
from .geometry import (
    curvature_report,
    curved_flat_wedge,
    g2_report,
    gauss_curvature_extrinsic,
    lagrangian_diagnostics,
    project,
)
from .lie_core import _rng, orthonormalize
from .obstruction import construction_pair, parse_case_key, verdict

DEFAULT_TOLERANCES = {
    "fit": 1e-6,  # lambda-fit residual of the Maurer-Cartan form
    "projection": 1e-5,  # components outside u^{++}, u^{+-}, u^{--}
    "equation_coeff": 0.1,  # differential equations: residual allowed as coeff * h^2
    "algebraic_coeff": 0.02,  # algebraic equations (mixed, balance): coeff * h^2
    "unitarity": 1e-9,
    "base": 1e-9,
}


@dataclass
class RunConfig:
    case: str = "sphere:n=4,k=2"
    seed_mode: str = "aligned"  # aligned | explicit | random
    generators: Optional[list] = None  # explicit mode: list of r matrices
    r: Optional[int] = None  # random mode: dimension of the random subspace
    L: float = 1.0
    h: float = 1.0 / 16
    lambdas: tuple = (1.0, 2.0)
    degree: Optional[int] = None
    seed_scale: float = 0.5
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    out: Optional[str] = None
    rng_seed: int = 0
    force: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.seed_mode not in ("aligned", "explicit", "random"):
            raise ConfigurationError(f"unknown seed mode {self.seed_mode!r}")
        if self.seed_mode == "explicit" and not self.generators:
            raise ConfigurationError("explicit seed mode needs generators")
        if not (self.L > 0 and self.h > 0 and self.h <= self.L):
            raise ConfigurationError("grid needs 0 < h <= L")
        if self.seed_scale <= 0:
            raise ConfigurationError("seed_scale must be positive")
        if self.degree is not None and int(self.degree) < 1:
            raise ConfigurationError("degree must be a positive integer")
        lams = tuple(float(v) for v in self.lambdas)
        if not lams or any(v <= 0 for v in lams):
            raise ConfigurationError("lambdas must be positive reals")
        self.lambdas = lams
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(self.tolerances or {})
        if any(not (float(v) > 0) for v in tol.values()):
            raise ConfigurationError("tolerances must be positive")
        self.tolerances = {k: float(v) for k, v in tol.items()}

    def to_dict(self):
        d = asdict(self)
        d["lambdas"] = list(self.lambdas)
        return d

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigurationError("configuration must be a JSON object")
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown configuration keys {sorted(unknown)}")
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(str(exc)) from exc


def lift_lambdas(requested):
    """Sampled lambda set: the default set plus the requested values."""
    return tuple(sorted(set(DEFAULT_LAMBDAS) | {float(v) for v in requested}))


def build_seed(config, pair, V):
    rng = _rng(config.rng_seed)
    if config.seed_mode == "explicit":
        A = np.asarray(config.generators, dtype=complex if pair.algebra.is_complex else float)
        seed = CurvedFlatSeed(A, config.L, config.h)
        seed.check()
        for a in A:
            c = pair.algebra.coords(a)
            if np.abs(c - pair.project("u-", c)).max() > 1e-9:
                raise ConfigurationError("explicit generators must lie in u_-")
        return seed, None
    if config.seed_mode == "random":
        r = config.r or V.shape[1]
        if r > V.shape[1]:
            raise ConfigurationError(f"r = {r} exceeds dim p' = {V.shape[1]}")
        G = pair.inner_product
        Vo = orthonormalize(V, G)
        Q, _ = np.linalg.qr(rng.standard_normal((Vo.shape[1], r)))
        V = Vo @ Q
    return seed_from_alignment(pair, V, config.seed_scale, rng=rng, L=config.L, h=config.h)


def run_construction(config):
    """align -> lift -> extract -> project -> reports.  Returns a result dictionary."""
    case = parse_case_key(config.case)
    row = verdict(case, rng=config.rng_seed, with_witness=False)
    pair, conv, V = construction_pair(case)
    if config.seed_mode == "aligned" and V.shape[1] > row.rank and not config.force:
        raise ObstructionError(f"dim p' = {V.shape[1]} exceeds the rank {row.rank}")
    seed, alignment = build_seed(config, pair, V)
    lams = lift_lambdas(config.lambdas)
    field_ = kdpw_lift(seed, pair, lams, d=config.degree, case=case.key)
    conn = extract_connection(field_, pair, strict=False, tol=config.tolerances["fit"])
    result = {
        "case": case.key,
        "config": config.to_dict(),
        "verdict": row.to_dict(),
        "alignment": None if alignment is None else {
            "steps": alignment.steps, "projection_rank": alignment.projection_rank,
            "sigma_min": alignment.sigma_min, "mode": alignment.mode},
        "seed": seed.generators,
        "lift": field_.info,
        "connection": {
            "max_fit_residual": conn.info["max_fit_residual"],
            "projection_residual": conn.projection_residual,
            "equation_residuals": mc_residuals(conn) if seed.r >= 2 else {},
        },
        "reports": {},
    }
    samples = {}
    for lam in config.lambdas:
        samples[lam] = project(field_, conv, "UK", lam)
        rep = {}
        if conv.kind == "g2":
            rep = g2_report(field_, conn, lam).to_dict()
        else:
            rep = curvature_report(field_, conv, lam).to_dict()
            if conv.kind == "cpn":
                rep["lagrangian"] = lagrangian_diagnostics(field_, conv, lam)
        if seed.r >= 2:
            rep["uuplus_wedge"] = curved_flat_wedge(field_, pair, lam)
        if seed.r == 2:
            U = project(field_, conv, "UUplus", lam)
            K = gauss_curvature_extrinsic(U.points, field_.spacing, field_.mask)
            rep["uuplus_curvature_max"] = float(np.nanmax(np.abs(K)))
        samples_norm = np.linalg.norm(samples[lam].points[..., :conv.size], axis=-1)
        rep["unit_norm_residual"] = float(np.abs(samples_norm[field_.mask] - 1).max())
        result["reports"][_lam_key(lam)] = rep
    result["_field"] = field_
    result["_connection"] = conn
    result["_samples"] = samples
    result["_convention"] = conv
    result["_seed"] = seed
    result["_pair"] = pair
    return result


def _lam_key(lam):
    return format(float(lam), ".17g")


def verify_field(field_, pair, tolerances=None):
    """Invariant battery on a frame field; returns a dictionary of checks and 'pass'."""
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    checks = {}

    def add(name, value, limit):
        value = float(value)
        checks[name] = {"value": value, "tolerance": float(limit),
                        "pass": bool(np.isfinite(value) and value <= limit)}

    F = field_.frames[field_.mask]
    Fh = np.conj(np.swapaxes(F, -1, -2))
    add("unitarity", np.abs(Fh @ F - np.eye(F.shape[-1])).max(), tol["unitarity"])
    base = field_.frames[field_.base_index]
    add("base_identity", np.abs(base - np.eye(base.shape[-1])).max(), tol["base"])
    conn = extract_connection(field_, pair, method="auto", strict=False)
    add("lambda_fit", conn.info["max_fit_residual"], tol["fit"])
    add("projection", conn.projection_residual, tol["projection"])
    if field_.r >= 2:
        h = max(field_.spacing)
        res = mc_residuals(conn)
        for name in EQUATIONS:
            coeff = tol["algebraic_coeff"] if name in ("mixed", "balance") else tol["equation_coeff"]
            add(f"equation_{name}", res[name], coeff * h * h)
    return {"checks": checks, "method": conn.method,
            "pass": all(c["pass"] for c in checks.values())}


def pair_for_case(key):
    return construction_pair(parse_case_key(key))[0]
