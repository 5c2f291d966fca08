import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from mukit.spaces import (Family, Point, SetDescriptor, canonical_basis, contains,
                          finite_extreme_points, lp_norm, project_by_scaling, sample_points,
                          tail_norm)

finite = st.floats(-1e3, 1e3, allow_nan=False)


class TestNorms:
    def test_pythagorean(self):
        assert lp_norm([3.0, 4.0], 2) == 5.0

    @pytest.mark.parametrize("p", [1, 1.5, 2, 3.7, np.inf])
    def test_basis_vector_has_unit_norm(self, p):
        assert lp_norm(canonical_basis(3, 7), p) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("n", [1, 4, 25, 1000])
    def test_uniform_vector(self, n):
        assert lp_norm(np.full(n, 1.0 / n), 2) == pytest.approx(n ** -0.5, rel=1e-14)

    def test_sup_norm(self):
        assert lp_norm([1.0, -7.0, 2.0], np.inf) == 7.0

    def test_rejects_p_below_one(self):
        with pytest.raises(ValueError):
            lp_norm([1.0], 0.5)

    def test_no_underflow_for_tiny_coordinates(self):
        assert lp_norm([1e-200, 1e-200], 3) == pytest.approx(2 ** (1 / 3) * 1e-200, rel=1e-12)

    def test_tail_norm(self):
        assert tail_norm([3.0, 4.0, 12.0], 1, 2) == pytest.approx(np.hypot(4, 12))

    @given(arrays(float, st.integers(1, 12), elements=finite),
           arrays(float, st.integers(1, 12), elements=finite),
           st.sampled_from([1.0, 1.5, 2.0, 3.0]))
    def test_triangle_inequality(self, x, y, p):
        n = min(x.size, y.size)
        x, y = x[:n], y[:n]
        assert lp_norm(x + y, p) <= lp_norm(x, p) + lp_norm(y, p) + 1e-9 * (1 + lp_norm(x, p))

    @given(arrays(float, st.integers(1, 12), elements=finite), st.floats(-50, 50))
    def test_homogeneity(self, x, t):
        assert lp_norm(t * x, 2.5) == pytest.approx(abs(t) * lp_norm(x, 2.5), rel=1e-10, abs=1e-300)


class TestBasisAndPoints:
    def test_basis_is_one_based(self):
        assert canonical_basis(1, 3).coords.tolist() == [1.0, 0.0, 0.0]

    @pytest.mark.parametrize("i,N", [(0, 3), (4, 3), (1, 0)])
    def test_basis_out_of_range(self, i, N):
        with pytest.raises(IndexError):
            canonical_basis(i, N)

    def test_point_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Point([1.0, np.nan])

    def test_point_is_read_only(self):
        pt = Point([1.0, 2.0])
        with pytest.raises(ValueError):
            pt.coords[0] = 3.0


class TestDescriptor:
    def test_json_roundtrip(self):
        for desc in [SetDescriptor.l1_cone(4), SetDescriptor.lp_cone(2.5, 3),
                     SetDescriptor.delta_p(2, 5), SetDescriptor.hilbert_cube([1.0, 0.5]),
                     SetDescriptor.unit_ball(2), SetDescriptor.standard_simplex(3)]:
            back = SetDescriptor.from_json(json.dumps(desc.to_json()))
            assert back == desc

    def test_json_schema(self):
        assert SetDescriptor.delta_p(2, 5).to_json() == {"family": "SimplexDeltaP", "dim": 5,
                                                         "p": 2}

    @pytest.mark.parametrize("fam", [Family.LP_CONE, Family.DELTA_P])
    def test_p_must_exceed_one(self, fam):
        with pytest.raises(ValueError):
            SetDescriptor(fam, 3, 1.0)

    def test_cube_needs_positive_widths(self):
        with pytest.raises(ValueError):
            SetDescriptor.hilbert_cube([1.0, 0.0])


class TestMembership:
    def test_x_n_in_A_p_and_delta_p(self):
        x = np.full(9, 1 / 9)
        assert contains(SetDescriptor.lp_cone(2, 9), x)
        assert contains(SetDescriptor.delta_p(2, 9), x)

    def test_outside_delta_p(self):
        assert not contains(SetDescriptor.delta_p(2, 2), [1.0, 1.0])

    def test_A_p_is_larger_than_delta_p(self):
        x = [0.7, 0.7]
        assert contains(SetDescriptor.lp_cone(2, 2), x)
        assert not contains(SetDescriptor.delta_p(2, 2), x)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            contains(SetDescriptor.unit_ball(3), [0.0, 0.0])

    def test_cube_box(self):
        cube = SetDescriptor.hilbert_cube([1.0, 0.25])
        assert contains(cube, [-1.0, 0.25])
        assert not contains(cube, [0.0, 0.3])

    @pytest.mark.parametrize("desc", [SetDescriptor.l1_cone(5), SetDescriptor.lp_cone(3, 4),
                                      SetDescriptor.delta_p(1.5, 6),
                                      SetDescriptor.hilbert_cube([1, .5, .25]),
                                      SetDescriptor.unit_ball(4),
                                      SetDescriptor.standard_simplex(5)])
    def test_samples_and_projections_are_members(self, desc, rng):
        for y in sample_points(desc, 40, rng):
            assert contains(desc, y)
        for y in rng.standard_normal((40, desc.dim)) * 3:
            assert contains(desc, project_by_scaling(desc, y))

    def test_extreme_points(self):
        assert finite_extreme_points(SetDescriptor.delta_p(2, 3)).shape == (4, 3)
        assert finite_extreme_points(SetDescriptor.unit_ball(3)) is None
        assert finite_extreme_points(SetDescriptor.hilbert_cube([1, 2])).shape == (4, 2)
