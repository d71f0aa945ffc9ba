"""Channel builders: thermal noise, LOS spherical wave, clustered NLOS
surrogate, synthetic fixed-rank fixtures, round-trip channel."""

import numpy as np
import pytest

from scmra.channel import (los_channel, modified_round_trip, noise_variance,
                           nlos_multipath_channel, synthetic_channel_matrix,
                           synthetic_rank_channel)
from scmra.linalg import PlanarArrayGeometry, hermitian_eigendecomposition


class TestNoiseVariance:
    def test_zero_figure_unit_bandwidth(self):
        # kappa * 290 evaluated directly
        np.testing.assert_allclose(noise_variance(0.0, 1.0), 4.004e-21, rtol=1e-3)

    def test_reference_receiver(self):
        # F = 3 dB, W = 10 MHz -> about -101 dBm
        var = noise_variance(3.0, 10e6)
        np.testing.assert_allclose(var, 7.99e-14, rtol=2e-3)
        np.testing.assert_allclose(10 * np.log10(var / 1e-3), -101.0, atol=0.05)

    def test_linearity_in_bandwidth(self):
        assert noise_variance(3.0, 2e6) == pytest.approx(2 * noise_variance(3.0, 1e6))

    def test_invalid_bandwidth(self):
        with pytest.raises(ValueError, match="invalid bandwidth"):
            noise_variance(3.0, 0.0)


class TestLosChannel:
    def test_single_pair_friis_amplitude_and_phase(self):
        lam = 0.003
        bs = PlanarArrayGeometry(1, 1, 0.0015)
        scm = PlanarArrayGeometry(1, 1, 0.0015, center_m=(0.0, 0.0, 10.0))
        h = los_channel(bs, scm, lam)
        np.testing.assert_allclose(abs(h[0, 0]), lam / (4 * np.pi * 10.0), rtol=1e-12)
        np.testing.assert_allclose(abs(h[0, 0]), 2.387e-5, rtol=1e-3)
        expected_phase = (-2 * np.pi * 10.0 / lam) % (2 * np.pi)
        got = np.angle(h[0, 0]) % (2 * np.pi)
        np.testing.assert_allclose(got, expected_phase, atol=1e-9)

    def test_far_field_inverse_distance(self):
        lam = 0.003
        bs = PlanarArrayGeometry(2, 2, lam / 2)
        near = los_channel(bs, PlanarArrayGeometry(2, 2, lam / 2, (0, 0, 50.0)), lam)
        far = los_channel(bs, PlanarArrayGeometry(2, 2, lam / 2, (0, 0, 100.0)), lam)
        np.testing.assert_allclose(np.abs(near) / np.abs(far), 2.0, rtol=1e-4)

    def test_paraxial_top_eigenvalue(self):
        # moderate arrays: curvature phases are tiny, so g a^2 M N holds to 1%
        lam = 0.003
        bs = PlanarArrayGeometry(10, 10, lam / 2)
        scm = PlanarArrayGeometry(8, 8, lam / 2, (0, 0, 10.0))
        h = los_channel(bs, scm, lam)
        g = 100.0
        top = g * np.linalg.svd(h, compute_uv=False)[0] ** 2
        approx = g * (lam / (4 * np.pi * 10.0)) ** 2 * 64 * 100
        np.testing.assert_allclose(top, approx, rtol=0.01)

    def test_colocated_rejected(self):
        bs = PlanarArrayGeometry(1, 1, 0.001)
        scm = PlanarArrayGeometry(1, 1, 0.001, center_m=(0.0, 0.0, 0.0))
        with pytest.raises(ValueError, match="co-located"):
            los_channel(bs, scm, 0.003)

    def test_element_gain_scaling(self):
        lam = 0.003
        bs = PlanarArrayGeometry(1, 1, 0.0015)
        scm = PlanarArrayGeometry(1, 1, 0.0015, center_m=(0.0, 0.0, 10.0))
        h1 = los_channel(bs, scm, lam, 1.0, 1.0)
        h4 = los_channel(bs, scm, lam, 2.0, 2.0)
        np.testing.assert_allclose(np.abs(h4), 2 * np.abs(h1))


class TestNlosChannel:
    lam = 0.003
    bs = PlanarArrayGeometry(4, 4, lam / 2)
    scm = PlanarArrayGeometry(3, 3, lam / 2, (1.0, -2.0, 10.0))

    def _mean_power(self, beta, seeds=400, clusters=5):
        total = 0.0
        for seed in range(seeds):
            h = nlos_multipath_channel(self.bs, self.scm, self.lam, clusters,
                                       9e-9, beta, np.random.default_rng(seed))
            total += np.linalg.norm(h) ** 2
        return total / seeds

    def _free_space_power(self):
        d = np.linalg.norm(np.asarray(self.scm.center_m) - np.asarray(self.bs.center_m))
        a = self.lam / (4 * np.pi * d)
        return self.bs.n_elements * self.scm.n_elements * a ** 2, d

    def test_single_cluster_rank_one(self):
        h = nlos_multipath_channel(self.bs, self.scm, self.lam, 1, 9e-9, 2.5,
                                   np.random.default_rng(0))
        s = np.linalg.svd(h, compute_uv=False)
        assert s[1] < 1e-10 * s[0]

    def test_power_calibration(self):
        fs_power, d = self._free_space_power()
        target = fs_power * d ** (2.0 - 2.5)
        np.testing.assert_allclose(self._mean_power(2.5), target, rtol=0.05)

    def test_beta_two_reduces_to_free_space_power(self):
        fs_power, _ = self._free_space_power()
        np.testing.assert_allclose(self._mean_power(2.0), fs_power, rtol=0.05)

    def test_seeded_reproducibility(self):
        h1 = nlos_multipath_channel(self.bs, self.scm, self.lam, 5, 9e-9, 2.5,
                                    np.random.default_rng(77))
        h2 = nlos_multipath_channel(self.bs, self.scm, self.lam, 5, 9e-9, 2.5,
                                    np.random.default_rng(77))
        np.testing.assert_array_equal(h1, h2)

    def test_invalid_cluster_count(self):
        with pytest.raises(ValueError):
            nlos_multipath_channel(self.bs, self.scm, self.lam, 0, 9e-9, 2.5,
                                   np.random.default_rng(0))


class TestSyntheticChannels:
    def test_rank_one_trace(self):
        a = synthetic_rank_channel(6, [3.5], np.random.default_rng(0))
        np.testing.assert_allclose(np.trace(a).real, 3.5, rtol=1e-12)
        vals, _ = hermitian_eigendecomposition(a)
        np.testing.assert_allclose(vals[0], 3.5, rtol=1e-12)
        np.testing.assert_allclose(vals[1:], 0.0, atol=1e-12)

    def test_recovers_requested_eigenvalues(self):
        requested = np.array([10.0, 4.0, 1.0])
        a = synthetic_rank_channel(16, requested, np.random.default_rng(5))
        vals, _ = hermitian_eigendecomposition(a)
        np.testing.assert_allclose(vals[:3], requested, rtol=1e-9)

    def test_rejects_bad_eigenvalues(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError, match="PSD violated"):
            synthetic_rank_channel(4, [1.0, -0.1], rng)
        with pytest.raises(ValueError):
            synthetic_rank_channel(4, [], rng)

    def test_channel_matrix_realizes_round_trip(self):
        g = 100.0
        requested = np.array([2e-3, 5e-4])
        h = synthetic_channel_matrix(6, 12, requested, g, np.random.default_rng(3))
        vals, _ = hermitian_eigendecomposition(modified_round_trip(h, g))
        np.testing.assert_allclose(vals[:2], requested, rtol=1e-10)


class TestModifiedRoundTrip:
    def test_scalar(self):
        np.testing.assert_allclose(modified_round_trip(np.array([[1.0]]), 2.0),
                                   [[2.0]])

    def test_svd_oracle(self):
        rng = np.random.default_rng(4)
        h = (rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3)))
        a = modified_round_trip(h, 3.0)
        vals, vecs = hermitian_eigendecomposition(a)
        u, s, vh = np.linalg.svd(h)
        np.testing.assert_allclose(vals, 3.0 * s ** 2, rtol=1e-10)
        # eigenvectors of A match right-singular vectors of H up to phase
        for j in range(3):
            overlap = abs(np.vdot(vh[j].conj(), vecs[:, j]))
            np.testing.assert_allclose(overlap, 1.0, atol=1e-8)

    def test_linear_in_gain(self):
        rng = np.random.default_rng(6)
        h = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        a1 = modified_round_trip(h, 1.0)
        a2 = modified_round_trip(h, 2.0)
        np.testing.assert_allclose(a2, 2 * a1)

    def test_rejects_non_positive_gain(self):
        with pytest.raises(ValueError):
            modified_round_trip(np.eye(2), 0.0)
