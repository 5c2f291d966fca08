import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _oracles import cone_pointed_3d
from mukit.cones import (InvariantViolation, in_cone, pointed_cone_classify,
                         polyhedral_equivalence_check, random_cone, truncated_cone_outside_mass)
from mukit.measures import FiniteMeasure, barycenter


class TestClassify:
    def test_quadrant(self):
        v = pointed_cone_classify([[1, 0], [0, 1]])
        assert v.verdict == "pointed"
        assert np.allclose(v.axis, [1, 1])

    def test_line(self):
        v = pointed_cone_classify([[1, 0], [-1, 0]])
        assert v.verdict == "contains_line"
        assert np.allclose(np.abs(v.direction), [1, 0])

    def test_three_generators(self):
        G = np.array([[1, 0, 1], [0, 1, 1], [-1, -1, 1]], dtype=float)
        v = pointed_cone_classify(G)
        assert v.pointed
        assert np.all(G @ v.axis > 0)
        # (0, 0, 1) is an axis as well
        assert np.all(G @ [0, 0, 1] > 0)

    def test_zero_generator_rejected(self):
        with pytest.raises(ValueError):
            pointed_cone_classify([[0, 0], [1, 0]])

    @given(st.integers(0, 2 ** 31), st.integers(2, 6))
    @settings(max_examples=50)
    def test_postconditions(self, seed, d):
        G, _ = random_cone(np.random.default_rng(seed), d)
        v = pointed_cone_classify(G)
        Gn = G / np.linalg.norm(G, axis=1, keepdims=True)
        if v.verdict == "pointed":
            assert np.min(Gn @ v.axis) > 0
        else:
            assert v.verdict == "contains_line"
            assert in_cone(G, v.direction, 1e-8) and in_cone(G, -v.direction, 1e-8)


class TestTruncation:
    def test_certificate_level(self):
        v = pointed_cone_classify([[1, 0], [0, 1]])
        K = v.certificate([[0.5, 0.5]], eps=0.25)
        assert K.level == pytest.approx(4 * (0.5 * v.axis[0] + 0.5 * v.axis[1]))
        assert K.contains([0.5, 0.5]) and not K.contains([-1.0, 0.0])

    def test_line_has_no_truncation(self):
        with pytest.raises(ValueError):
            pointed_cone_classify([[1, 0], [-1, 0]]).truncation(1.0)

    @given(st.integers(0, 2 ** 31), st.floats(0.05, 1.0))
    @settings(max_examples=40)
    def test_outside_mass_bounded_by_eps(self, seed, eps):
        rng = np.random.default_rng(seed)
        G, _ = random_cone(rng, 3, pointed=True)
        v = pointed_cone_classify(G)
        k = int(rng.integers(1, 8))
        atoms = rng.random((k, len(G))) @ G * rng.exponential(1, (k, 1))
        mu = FiniteMeasure(atoms, rng.dirichlet(np.ones(k)))
        assert truncated_cone_outside_mass(v, barycenter(mu), mu, eps) <= eps + 1e-12


class TestEquivalence:
    def test_orthant(self):
        rep = polyhedral_equivalence_check(np.eye(3))
        assert rep.verdicts == (True, True, True, True)

    def test_half_plane(self):
        rep = polyhedral_equivalence_check([[1, 0], [-1, 0], [0, 1]])
        assert rep.verdicts == (False, False, False, False)

    def test_offset_does_not_matter(self):
        rep = polyhedral_equivalence_check(np.eye(3), offset=[2.0, -1.0, 0.5])
        assert rep.agree and rep.in_pointed_cone

    def test_dimension_cap(self):
        with pytest.raises(ValueError):
            polyhedral_equivalence_check(np.eye(11))

    def test_random_3d_against_bruteforce(self):
        for i in range(100):
            G, _ = random_cone(np.random.default_rng([7, i]), 3)
            rep = polyhedral_equivalence_check(G)
            assert rep.agree
            assert rep.in_pointed_cone == cone_pointed_3d(G)

    def test_strict_raises_on_disagreement(self, monkeypatch):
        import mukit.cones as cones
        monkeypatch.setattr(cones, "_line_free", lambda G, tol: False)
        with pytest.raises(InvariantViolation):
            polyhedral_equivalence_check(np.eye(2))

    @given(st.integers(0, 2 ** 31), st.integers(2, 8))
    @settings(max_examples=40)
    def test_agreement_property(self, seed, d):
        rng = np.random.default_rng(seed)
        G, pointed = random_cone(rng, d)
        rep = polyhedral_equivalence_check(G, offset=rng.standard_normal(d))
        assert rep.agree and rep.in_pointed_cone == pointed
