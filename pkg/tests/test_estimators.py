import doctest

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

import mukit.estimators
from mukit.estimators import ConvexEnvelope, ConvexRoof
from mukit.hull import HullSolution, ObjectiveFunction
from mukit.quantum import DensityMatrix, bell_state, product_ket
from mukit.spaces import Family


def test_docstring_examples():
    assert doctest.testmod(mukit.estimators).failed == 0


class TestConvexEnvelope:
    def test_params_roundtrip(self):
        est = ConvexEnvelope("SimplexDeltaP", p=2.0, restarts=3)
        params = est.get_params()
        assert params["family"] == "SimplexDeltaP" and params["p"] == 2.0 and params["restarts"] == 3
        est.set_params(restarts=5)
        twin = clone(est)
        assert twin.get_params() == est.get_params() and twin is not est

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            ConvexEnvelope().predict([[0.2, 0.2]])

    def test_fit_attributes(self):
        est = ConvexEnvelope("StandardTruncatedSimplex", function="zero").fit(np.eye(3))
        assert est.n_features_in_ == 3
        assert est.set_.family is Family.STANDARD_SIMPLEX
        assert est.config_.restarts == 16

    def test_concave_objective_on_simplex(self):
        # 1 - |x|_2 vanishes at the vertices, so its hull on the simplex is 0
        est = ConvexEnvelope("StandardTruncatedSimplex", function="one_minus_norm", restarts=2)
        pred = est.fit(np.eye(3)).predict([[1 / 3, 1 / 3, 1 / 3], [0.5, 0.5, 0.0]])
        assert pred.shape == (2,)
        assert np.all(np.abs(pred) <= 1e-9)

    def test_convex_objective_is_its_own_hull(self):
        f = ObjectiveFunction(lambda x: float(x @ x), declared_convex=True)
        est = ConvexEnvelope("L1ConeBounded", function=f).fit(np.zeros((1, 2)))
        x = np.array([0.2, 0.3])
        assert est.predict([x])[0] == pytest.approx(x @ x)

    def test_decompose(self):
        est = ConvexEnvelope("StandardTruncatedSimplex", function="one_minus_norm", restarts=2)
        sols = est.fit(np.eye(2)).decompose([[0.25, 0.75]])
        assert isinstance(sols[0], HullSolution)

    def test_feature_mismatch(self):
        est = ConvexEnvelope("StandardTruncatedSimplex", function="zero").fit(np.eye(3))
        with pytest.raises(ValueError):
            est.predict([[0.5, 0.5]])

    def test_hilbert_cube_dimension_from_a(self):
        est = ConvexEnvelope("HilbertCube", a=[1.0, 0.5, 0.25], function="zero").fit([[0.0]])
        assert est.n_features_in_ == 3


class TestConvexRoof:
    def test_params_and_clone(self):
        est = ConvexRoof(function="entropy", m=4, restarts=2)
        assert clone(est).get_params() == est.get_params()

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            ConvexRoof().predict([])

    def test_predict(self):
        phi = DensityMatrix.from_ket(bell_state("phi+"), (2, 2))
        prod = DensityMatrix.from_ket(product_ket(0, 1), (2, 2))
        pred = ConvexRoof(restarts=2).fit().predict([phi, prod])
        assert pred[0] == pytest.approx(1.0, abs=1e-12) and pred[1] == 0.0

    def test_single_state(self):
        phi = DensityMatrix.from_ket(bell_state("psi-"), (2, 2))
        assert ConvexRoof(function="entropy").fit().predict(phi)[0] == pytest.approx(1.0)

    def test_bad_function(self):
        with pytest.raises(ValueError):
            ConvexRoof(function="bogus").fit()
