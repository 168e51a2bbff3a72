import json
import math

import numpy as np
import pytest
from scipy.stats import kstest

import mixtrial as mt

BETA_M4 = 1.0 - 0.8**0.25


class TestApproximateSampleSize:
    def test_reference_region(self, region):
        assert mt.approximate_sample_size(region, 0.05, 0.2) == pytest.approx(85.3, abs=0.1)

    def test_multicenter_target(self, region):
        assert mt.approximate_sample_size(region, 0.05, BETA_M4) == pytest.approx(152.4, abs=0.5)

    def test_single_corner_closed_form(self):
        r = mt.StrongEffectRegion.from_vectors([2.0], [1.0])
        za = mt.gaussian_quantile(0.95)
        zb = mt.gaussian_quantile(0.8)
        expected = ((math.sqrt(2) * za + zb * math.sqrt(2.0)) / 2.0) ** 2
        assert mt.approximate_sample_size(r, 0.05, 0.2) == pytest.approx(expected, rel=1e-12)

    def test_validation(self, region):
        with pytest.raises(ValueError):
            mt.approximate_sample_size(region, 0.6, 0.2)
        with pytest.raises(ValueError):
            mt.approximate_sample_size(region, 0.05, 0.5)


class TestPlanOneStage:
    def test_reference_region_exact(self, region):
        d = mt.plan_one_stage(region, 0.05, 0.2, "exact")
        assert d.n == 86
        assert d.eta == pytest.approx(0.251, abs=1e-3)

    def test_multicenter_target_exact(self, region):
        d = mt.plan_one_stage(region, 0.05, BETA_M4, "exact")
        assert abs(d.n - 153) <= 1

    def test_minimality(self, region):
        for mode in ("exact", "approximate"):
            d = mt.plan_one_stage(region, 0.05, 0.2, mode)
            assert mt.beta_se_one_stage(region, d.n, 0.05, mode) <= 0.2
            assert mt.beta_se_one_stage(region, d.n - 1, 0.05, mode) > 0.2

    def test_approximate_mode_matches_ceiling(self, region):
        n_approx = math.ceil(mt.approximate_sample_size(region, 0.05, 0.2))
        d = mt.plan_one_stage(region, 0.05, 0.2, "approximate")
        if mt.beta_se_one_stage(region, n_approx, 0.05, "approximate") <= 0.2:
            assert d.n == n_approx

    def test_rounding_sanity(self, region):
        for alpha in (0.01, 0.025, 0.05):
            for beta_max in (0.1, 0.2):
                d = mt.plan_one_stage(region, alpha, beta_max, "exact")
                n_clt = math.ceil(mt.approximate_sample_size(region, alpha, beta_max))
                assert abs(d.n - n_clt) <= 2

    def test_eta_invariant(self, region):
        d = mt.plan_one_stage(region, 0.05, 0.2)
        assert d.eta == pytest.approx(
            mt.gaussian_quantile(0.95) * math.sqrt(2.0 / d.n), abs=1e-9
        )

    def test_json_round_trip(self, region):
        d = mt.plan_one_stage(region, 0.05, 0.2)
        again = mt.OneStageDesign.from_json(d.to_json())
        assert again == d
        assert set(json.loads(d.to_json())) == {"n", "alpha", "eta"}


class TestOneStagePValue:
    def test_at_zero(self):
        assert mt.one_stage_p_value(0.0, 17) == pytest.approx(0.5, abs=1e-12)

    def test_threshold_level_pair(self):
        assert mt.one_stage_p_value(0.251, 86) == pytest.approx(0.05, abs=1e-3)

    def test_null_uniformity(self):
        """p-values of 1e5 simulated null trials pass a KS uniformity test."""
        n = 86
        rng = np.random.default_rng(11)
        xbar = rng.standard_normal(100_000) * math.sqrt(2.0 / n)
        from scipy.special import ndtr

        pvals = 1.0 - ndtr(xbar * math.sqrt(n / 2.0))  # same as one_stage_p_value
        sample = [mt.one_stage_p_value(x, n) for x in xbar[:50]]
        assert np.allclose(sample, pvals[:50])
        assert kstest(pvals, "uniform").pvalue > 0.01

    def test_level_monte_carlo(self, region):
        d = mt.plan_one_stage(region, 0.05, 0.2)
        rng = np.random.default_rng(3)
        xbar = rng.standard_normal(100_000) * math.sqrt(2.0 / d.n)
        rate = float(np.mean(xbar > d.eta))
        assert abs(rate - 0.05) <= 3 * math.sqrt(0.05 * 0.95 / 100_000)
