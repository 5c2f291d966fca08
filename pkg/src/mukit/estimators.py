"""scikit-learn style wrappers around the hull and roof solvers.

Both estimators are unsupervised and stateless apart from the configuration
resolved in ``fit``: ``predict`` maps query points (or states) to upper
bounds on the convex hull (or convex roof) value.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .hull import HullConfig, ObjectiveFunction, builtin_function, co_f_search
from .quantum import DensityMatrix, RoofConfig, RoofFunction, roof_optimize
from .spaces import Family, SetDescriptor


class ConvexEnvelope(BaseEstimator):
    """Convex hull ``co f`` of a function on one of the supported convex sets.

    Parameters
    ----------
    family : str
        A :class:`~mukit.spaces.Family` value, e.g. ``"StandardTruncatedSimplex"``.
    p : float, optional
        Exponent for the ``Lp`` families.
    a : array-like, optional
        Half-widths of a Hilbert cube.
    function : str or ObjectiveFunction
        Builtin name (see ``BUILTIN_FUNCTIONS``) or a ready objective.
    restarts, seed : int
        Passed to :class:`~mukit.hull.HullConfig`.

    Examples
    --------
    >>> est = ConvexEnvelope("L1ConeBounded", function="one_minus_norm").fit(np.eye(3))
    >>> float(est.predict([[0.5, 0.5, 0.0]])[0])
    0.0
    """

    def __init__(self, family="StandardTruncatedSimplex", p=None, a=None,
                 function="one_minus_norm", restarts=16, seed=0x5EED):
        self.family = family
        self.p = p
        self.a = a
        self.function = function
        self.restarts = restarts
        self.seed = seed

    def fit(self, X, y=None):
        """Read the ambient dimension from ``X`` (rows are points of the set)."""
        X = check_array(X, ensure_min_samples=1)
        fam = Family(self.family)
        a = None if self.a is None else np.asarray(self.a, dtype=float)
        dim = X.shape[1] if a is None else a.size
        self.set_ = SetDescriptor(fam, dim, self.p, a)
        self.objective_ = (self.function if isinstance(self.function, ObjectiveFunction)
                           else builtin_function(self.function, self.set_))
        self.config_ = HullConfig(restarts=self.restarts, seed=self.seed)
        self.n_features_in_ = dim
        return self

    def decompose(self, X):
        """Full :class:`~mukit.hull.HullSolution` per row."""
        check_is_fitted(self, "set_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return [co_f_search(self.set_, self.objective_, x, self.config_) for x in X]

    def predict(self, X):
        return np.array([s.value for s in self.decompose(X)])


class ConvexRoof(BaseEstimator):
    """Upper bounds on the convex roof of ``f`` composed with the partial trace.

    ``predict`` takes a sequence of bipartite :class:`DensityMatrix` objects;
    they are not array-like, so the sklearn array validators do not apply.
    """

    def __init__(self, function="alpha:2", m=None, restarts=16, seed=0x5EED):
        self.function = function
        self.m = m
        self.restarts = restarts
        self.seed = seed

    def fit(self, X=None, y=None):
        self.function_ = (self.function if isinstance(self.function, RoofFunction)
                          else RoofFunction.parse(self.function))
        self.config_ = RoofConfig(m=self.m, restarts=self.restarts, seed=self.seed)
        return self

    def optimize(self, states):
        check_is_fitted(self, "function_")
        if isinstance(states, DensityMatrix):
            states = [states]
        return [roof_optimize(s, self.function_, self.config_) for s in states]

    def predict(self, states):
        return np.array([r.upper_bound for r in self.optimize(states)])
