"""scikit-learn style front end to the solvability monitor."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .cindex import c_index
from .netmodel import NetworkCase, load_case, reduce
from .pfsolve import Divergence, SolveOptions, solve
from .sweep import SweepConfig, apply_penetration, convert_dgs, run_sweep


def _loadings(X) -> np.ndarray:
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected one loading factor per sample, got {X.shape[1]} columns")
        X = X[:, 0]
    if np.any(X < 0):
        raise ValueError("loading factors must be non-negative")
    return X


class CIndexMonitor(TransformerMixin, BaseEstimator):
    """Per-bus C-indices of a network as a function of the loading factor.

    ``fit`` takes a :class:`NetworkCase` (or a case-file path) and reduces it;
    ``transform`` maps loading factors to per-bus C-indices, one row per
    sample (NaN where the power flow has no solution); ``predict`` flags
    samples where the necessary condition for insolvability holds or the
    solution is lost.

    Parameters
    ----------
    penetration : float or None
        Resize the case's DGs to this percentage of base apparent load.
    dg_mode : {"hold_constant_power", "hold_constant_current"}
    tol, max_iter : Newton settings.
    """

    def __init__(self, penetration=None, dg_mode="hold_constant_power", tol=1e-8, max_iter=50):
        self.penetration = penetration
        self.dg_mode = dg_mode
        self.tol = tol
        self.max_iter = max_iter

    def _case(self, X) -> NetworkCase:
        if isinstance(X, (str, Path)):
            X = load_case(X)
        if not isinstance(X, NetworkCase):
            raise TypeError("fit expects a NetworkCase or a path to a case file")
        if self.penetration is not None:
            return apply_penetration(X, self.penetration, self.dg_mode)
        return convert_dgs(X, self.dg_mode)

    def fit(self, X, y=None):
        self.case_ = self._case(X)
        self.network_ = reduce(self.case_)
        self.bus_ids_ = self.network_.pq_ids
        self.n_features_out_ = self.network_.n
        return self

    def _options(self):
        return SolveOptions(tol=self.tol, max_iter=self.max_iter)

    def transform(self, X):
        check_is_fitted(self, "network_")
        lam = _loadings(X)
        out = np.full((lam.size, self.network_.n), np.nan)
        opts = self._options()
        for k, value in enumerate(lam):
            try:
                snap = solve(self.network_, loading=float(value), options=opts)
            except Divergence:
                continue
            out[k] = c_index(self.network_, snap)[0]
        return out

    def predict(self, X):
        C = self.transform(X)
        lost = np.isnan(C).any(axis=1)
        with np.errstate(invalid="ignore"):
            return lost | (np.nan_to_num(C, nan=np.inf).min(axis=1, initial=np.inf) <= 1.0)

    def sweep(self, step=0.01, max_loading=20.0):
        """Run the proportional load sweep on the fitted case."""
        check_is_fitted(self, "network_")
        return run_sweep(self.case_, SweepConfig(step=step, max_loading=max_loading, options=self._options()))

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "network_")
        return np.array([f"c_{b}" for b in self.bus_ids_], dtype=object)
