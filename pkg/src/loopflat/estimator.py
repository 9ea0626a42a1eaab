"""scikit-learn style facade over a construction run.

``fit`` builds the case, aligns a curved flat and lifts it on the grid; the
training input only fixes the domain dimension (the geometry is determined by
the case, not by data).  ``transform`` maps domain points to the immersion at
``transform_lambda`` by lifting each point directly.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .flows import lift_points
from .geometry import hopf_point, metric_scaling
from .pipeline import RunConfig, run_construction


class LoopFlatImmersion(TransformerMixin, BaseEstimator):
    def __init__(self, case="sphere:n=4,k=2", lambdas=(1.0, 2.0), L=1.0, h=1.0 / 16,
                 degree=None, seed_scale=0.5, transform_lambda=1.0, random_state=0):
        self.case = case
        self.lambdas = lambdas
        self.L = L
        self.h = h
        self.degree = degree
        self.seed_scale = seed_scale
        self.transform_lambda = transform_lambda
        self.random_state = random_state

    def _config(self):
        lams = tuple(self.lambdas) + (float(self.transform_lambda),)
        return RunConfig(case=self.case, lambdas=tuple(dict.fromkeys(lams)), L=self.L, h=self.h,
                         degree=self.degree, seed_scale=self.seed_scale,
                         rng_seed=self.random_state)

    def fit(self, X=None, y=None):
        config = self._config()
        result = run_construction(config)
        field_ = result["_field"]
        if X is not None:
            X = check_array(X, dtype=float)
            if X.shape[1] != field_.r:
                raise ValueError(f"X has {X.shape[1]} features, the domain has {field_.r}")
        self.config_ = config
        self.field_ = field_
        self.connection_ = result["_connection"]
        self.convention_ = result["_convention"]
        self.seed_ = result["_seed"]
        self.pair_ = result["_pair"]
        self.reports_ = result["reports"]
        self.n_features_in_ = field_.r
        return self

    def transform(self, X):
        """Immersion points f(x) at ``transform_lambda`` (cpn: Veronese image appended)."""
        check_is_fitted(self, "field_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        F = lift_points(self.seed_, self.pair_, X, [float(self.transform_lambda)],
                        d=self.field_.info["degree"])[:, 0]
        F = F.real if np.iscomplexobj(F) else F
        f = F[:, :, self.convention_.f_col]
        if self.convention_.kind == "cpn":
            f = np.concatenate([f, hopf_point(f)], axis=-1)
        return f

    def metric_ratio(self, lam, lam_ref=1.0):
        """Mean first-fundamental-form ratio between two sampled lambdas."""
        check_is_fitted(self, "field_")
        r = metric_scaling(self.field_, self.convention_, lam, lam_ref)
        return float(np.nanmean(r))
