import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _oracles import deltap_block, greedy_blocks
from mukit.certificates import (CertificateFamilyError, TruncationTooSmall, ap_refute,
                                beyond_prefix_basis, block_lengths, block_starts, delta_p_refute, hilbert_cube_classify,
                                increasing_weights, tail_certificate_check)
from mukit.measures import FiniteMeasure, barycenter, mass_outside
from mukit.scenarios import random_l1_decomposition
from mukit.spaces import SetDescriptor, contains, lp_norm


class TestTailCertificate:
    def test_all_atoms_inside(self):
        mu = FiniteMeasure.uniform(np.eye(2))
        chk = tail_certificate_check([1.0, 2.0], [0.5, 0.5], mu, 0.5)
        assert chk.passed and chk.outside_mass == 0.0
        assert chk.threshold == 3.0

    def test_dirac(self):
        x = np.array([0.2, 0.3])
        chk = tail_certificate_check(increasing_weights(2), x, FiniteMeasure.dirac(x), 0.1)
        assert chk.passed and chk.outside_mass == 0.0

    def test_negative_functional_rejected(self):
        mu = FiniteMeasure.uniform(np.eye(2))
        with pytest.raises(CertificateFamilyError):
            tail_certificate_check([1.0, -1.0], [0.5, 0.5], mu, 0.5)

    def test_wrong_barycenter_can_fail(self):
        # mu does not represent x; Markov no longer applies
        mu = FiniteMeasure.dirac([0.0, 1.0])
        chk = tail_certificate_check([1.0, 2.0], [0.01, 0.0], mu, 0.5)
        assert not chk.passed
        assert chk.witness.outside_mass == 1.0

    def test_x_n_random_decompositions(self, rng):
        N = 12
        x = np.full(N, 1 / N)
        f = increasing_weights(N)
        for _ in range(1000):
            # random decomposition of x_n: split each coordinate between e_i and an interior atom
            t = rng.uniform(0, 1)
            interior = x / 1.0
            w_basis = t * x
            atoms = np.vstack([np.eye(N), interior])
            weights = np.concatenate([w_basis, [1 - t]])
            mu = FiniteMeasure(atoms, weights)
            assert np.allclose(barycenter(mu), x)
            chk = tail_certificate_check(f, x, mu, 0.1)
            assert chk.passed and chk.outside_mass <= 0.1

    @given(st.integers(0, 2 ** 31), st.integers(2, 40), st.floats(0.01, 0.99))
    def test_markov_never_fails(self, seed, N, eps):
        x, mu = random_l1_decomposition(np.random.default_rng(seed), N)
        assert tail_certificate_check(increasing_weights(N), x, mu, eps).passed


class TestDeltaP:
    def test_r4_block(self):
        w = delta_p_refute(2, r=4)
        block = w.point[w.point > 0]
        assert block.tolist() == [0.25] * 4
        assert lp_norm(w.point, 2) == 0.5
        assert w.outside_mass == 1.0

    def test_r1_single_atom(self):
        w = delta_p_refute(2, r=1)
        assert w.point.tolist() == [1.0]
        assert w.outside_mass == 1.0

    def test_p3_r8(self):
        w = delta_p_refute(3, r=8)
        assert w.details["block_length"] == 3
        assert w.details["power_sum"] == pytest.approx(1 / 9)
        assert w.details["power_sum"] <= 1 / 8

    def test_block_lengths(self):
        assert block_lengths(2, 5).tolist() == [1, 2, 3, 4, 5]
        assert block_lengths(3, 9).tolist() == [1, 2, 2, 2, 3, 3, 3, 3, 3]

    def test_truncation_too_small(self):
        with pytest.raises(TruncationTooSmall) as info:
            delta_p_refute(2, r=4, dim=5)
        assert info.value.required == 10

    def test_p_must_exceed_one(self):
        with pytest.raises(ValueError):
            delta_p_refute(1.0)

    @given(st.sampled_from([1.5, 2.0, 2.5, 3.0, 4.0]), st.integers(1, 30), st.integers(0, 3000))
    def test_invariants(self, p, r, prefix):
        w = delta_p_refute(p, r=r, prefix_N=prefix)
        start, L = deltap_block(p, r, prefix)
        assert (w.details["block_start"], w.details["block_length"]) == (start, L)
        assert w.outside_mass == 1.0
        assert w.details["barycenter_error"] <= 1e-12
        assert w.details["power_sum"] <= 1 / r + 1e-12
        assert w.details["in_compact_K"] and w.details["in_delta_p"]
        assert mass_outside(w.decomposition, beyond_prefix_basis(prefix)) == 1.0

    def test_shared_block_across_prefixes(self):
        a = delta_p_refute(2, r=1, prefix_N=11)
        b = delta_p_refute(2, r=1, prefix_N=12)
        assert a.point is b.point and a.excluded_prefix == 11 and b.excluded_prefix == 12
        assert not a.point.flags.writeable

    def test_block_table_growth(self):
        starts = block_starts(2, 500)
        assert starts[:5].tolist() == [1, 2, 4, 7, 11]
        assert np.array_equal(np.diff(starts), block_lengths(2, 499))
        w = delta_p_refute(2, r=1, prefix_N=20_000)
        assert w.details["block_start"] > 20_000
        assert w.details["block_start"] - w.details["block_length"] <= 20_000


class TestAp:
    def test_p2_prefix10(self):
        w = ap_refute(2, 10, 10 ** 4)
        assert 1 / 3 < w.outside_mass < 2 / 3
        desc = SetDescriptor.lp_cone(2, 10 ** 4)
        assert all(contains(desc, a) for a in w.decomposition.atoms)
        assert np.max(np.abs(barycenter(w.decomposition) - w.point)) <= 1e-12
        assert w.details["norm_x"] == pytest.approx(0.2565, abs=1e-3)

    def test_scale_guard(self):
        with pytest.raises(ValueError):
            ap_refute(2, 10, 10 ** 4, c=0.3)

    def test_p15(self):
        w = ap_refute(1.5, 5, 10 ** 5)
        assert 1 / 3 < w.outside_mass < 2 / 3
        assert w.details["norm_rest_atom"] <= 1

    def test_resize_request(self):
        with pytest.raises(TruncationTooSmall):
            ap_refute(2, 10, 20)

    @given(st.sampled_from([1.5, 2.0, 3.0]), st.integers(0, 200))
    @settings(max_examples=20)
    def test_invariants(self, p, prefix):
        w = ap_refute(p, prefix, 20_000)
        assert w.outside_mass > 1 / 3
        assert w.details["atoms_in_A_p"]


class TestHilbertCube:
    def test_geometric_is_compact(self):
        assert hilbert_cube_classify(2.0 ** -np.arange(1, 100)).verdict == "compact"

    def test_ones_blocks(self):
        v = hilbert_cube_classify(np.ones(10))
        assert v.blocks == [(i, i) for i in range(1, 11)]

    def test_inv_sqrt_blocks(self):
        a = 1 / np.sqrt(np.arange(1, 500))
        v = hilbert_cube_classify(a)
        assert v.verdict == "refuted"
        assert v.blocks[:2] == [(1, 1), (2, 4)]
        assert v.blocks == greedy_blocks(a)
        assert all(np.linalg.norm(v.block_vector(n)) >= 1 for n in range(len(v.blocks)))

    def test_witness(self):
        v = hilbert_cube_classify(1 / np.sqrt(np.arange(1, 500)))
        assert v.witness.outside_mass == 1.0
        assert v.witness.details["atoms_in_cube"]
        assert np.allclose(barycenter(v.witness.decomposition), 0)

    def test_inconclusive(self):
        # summable, but the truncation is too short to see the tail vanish
        assert hilbert_cube_classify(1 / np.arange(1, 50) ** 2).verdict == "inconclusive"

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            hilbert_cube_classify([1.0, 0.0])
