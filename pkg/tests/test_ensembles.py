import math

import numpy as np
import pytest
from scipy import stats

from sle_dyson.ensembles import (TWO_PI, BetaConvention, gap_cdf_n2,
                                 gap_normalization, ks_statistic,
                                 ks_threshold, ks_two_sample,
                                 ks_two_sample_threshold,
                                 log_density_unnormalized,
                                 pairwise_gap_statistics, row_gaps,
                                 sample_batch, sample_coe, sample_cse,
                                 sample_cue)
from sle_dyson.dyson import AngleConfig


class TestGapOracle:
    def test_normalization_beta1(self):
        # int_0^{2pi} sin(s/2) ds = 4 exactly
        assert gap_normalization(1.0) == pytest.approx(4.0, abs=1e-10)

    def test_normalization_beta2(self):
        # int_0^{2pi} sin^2(s/2) ds = pi exactly
        assert gap_normalization(2.0) == pytest.approx(math.pi, abs=1e-10)

    def test_cdf_beta2_closed_form(self):
        # antiderivative of sin^2(s/2)/pi is (s - sin s)/(2 pi)
        cdf = gap_cdf_n2(2.0)
        s = np.linspace(0.0, TWO_PI, 10_000)
        exact = (s - np.sin(s)) / TWO_PI
        assert np.max(np.abs(cdf(s) - exact)) < 1e-9

    def test_cdf_endpoints_and_monotone(self):
        cdf = gap_cdf_n2(1.5)
        s = np.linspace(0.0, TWO_PI, 2000)
        f = cdf(s)
        assert f[0] == pytest.approx(0.0, abs=1e-12)
        assert f[-1] == pytest.approx(1.0, abs=1e-9)
        assert np.all(np.diff(f) >= -1e-12)

    def test_convention_values(self):
        assert BetaConvention.DYSON_4_OVER_KAPPA.beta(8.0 / 3.0) == \
            pytest.approx(1.5)
        assert BetaConvention.CFT_2_OVER_KAPPA.beta(4.0) == pytest.approx(0.5)
        assert BetaConvention.CORRECTED_8_OVER_KAPPA.beta(4.0) == \
            pytest.approx(2.0)


class TestKsToolkit:
    def test_one_sample_matches_scipy(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(0.0, 1.0, 500)
        ours = ks_statistic(x, lambda v: np.asarray(v))
        ref = stats.kstest(x, "uniform").statistic
        assert ours == pytest.approx(ref, abs=1e-12)

    def test_two_sample_matches_scipy(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=400)
        b = rng.normal(size=300)
        assert ks_two_sample(a, b) == pytest.approx(
            stats.ks_2samp(a, b).statistic, abs=1e-12)

    def test_threshold_scaling(self):
        assert ks_threshold(10_000) == pytest.approx(
            math.sqrt(-0.5 * math.log(0.005)) / 100.0)
        assert ks_two_sample_threshold(5000, 5000) == pytest.approx(
            ks_threshold(5000) * math.sqrt(2.0))


def oriented_gaps(batch, seed):
    """Gap of each sorted pair with a uniformly random orientation.

    The sorted difference theta_1 - theta_0 is not rotation invariant
    (it depends on where the cut at angle 0 falls), so its law picks up a
    (2*pi - s) weighting; flipping a fair coin between s and 2*pi - s
    recovers the labeled-gap density sin^beta(s/2)/Z.
    """
    s = row_gaps(batch.rows)
    flip = np.random.default_rng(seed).random(s.size) < 0.5
    return np.where(flip, TWO_PI - s, s)


class TestMatrixSamplers:
    def test_shapes_sorted(self):
        for fn in (sample_cue, sample_coe, sample_cse):
            cfg = fn(4, 123)
            assert cfg.n == 4
            assert np.all(np.diff(cfg.angles) > 0)

    def test_cue_gap_law_n2(self):
        batch = sample_batch("CUE", 2, 4000, seed=2)
        d = ks_statistic(oriented_gaps(batch, 2), gap_cdf_n2(2.0))
        assert d < ks_threshold(4000)

    def test_coe_gap_law_n2(self):
        batch = sample_batch("COE", 2, 4000, seed=3)
        d = ks_statistic(oriented_gaps(batch, 3), gap_cdf_n2(1.0))
        assert d < ks_threshold(4000)

    def test_cse_gap_law_n2(self):
        batch = sample_batch("CSE", 2, 4000, seed=4)
        d = ks_statistic(oriented_gaps(batch, 4), gap_cdf_n2(4.0))
        assert d < ks_threshold(4000)

    def test_cue_angles_uniform_marginal(self):
        batch = sample_batch("CUE", 3, 2000, seed=5)
        d = ks_statistic(batch.rows.ravel(), lambda x: np.asarray(x) / TWO_PI)
        assert d < ks_threshold(6000)

    def test_determinism(self):
        a = sample_batch("COE", 3, 16, seed=6)
        b = sample_batch("COE", 3, 16, seed=6)
        assert np.array_equal(a.rows, b.rows)


class TestGapStatistics:
    def test_gaps_sum_to_circle(self):
        batch = sample_batch("CUE", 4, 50, seed=7)
        gaps = pairwise_gap_statistics(batch).reshape(50, 4)
        assert np.allclose(gaps.sum(axis=1), TWO_PI)

    def test_log_density_beta_scaling(self):
        cfg = AngleConfig(np.array([0.1, 1.7, 4.0]))
        assert log_density_unnormalized(cfg, 4.0) == pytest.approx(
            2.0 * log_density_unnormalized(cfg, 2.0))
