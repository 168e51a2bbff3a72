import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import mixtrial as mt
from mixtrial.model import binding_corner, one_stage_threshold


def _erf_series(x: float) -> float:
    """Taylor/continued-fraction-free erf for the quantile oracle (|x| < 6)."""
    # integrate the density by Simpson on [0, x]; independent of scipy
    n = 2000
    t = np.linspace(0.0, x, n + 1)
    f = np.exp(-t * t)
    h = x / n
    s = f[0] + f[-1] + 4 * f[1:-1:2].sum() + 2 * f[2:-1:2].sum()
    return 2.0 / math.sqrt(math.pi) * s * h / 3.0


def _quantile_oracle(q: float) -> float:
    lo, hi = -10.0, 10.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if 0.5 * (1.0 + _erf_series(mid / math.sqrt(2.0))) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestGaussians:
    def test_quantile_at_half(self):
        assert mt.gaussian_quantile(0.5) == pytest.approx(0.0, abs=1e-12)

    def test_inverse_pair(self):
        assert mt.gaussian_cdf(mt.gaussian_quantile(0.95)) == pytest.approx(0.95, abs=1e-12)
        for q in (0.01, 0.3, 0.6, 0.999):
            assert mt.gaussian_cdf(mt.gaussian_quantile(q)) == pytest.approx(q, abs=1e-12)

    def test_quantile_against_bisection_oracle(self):
        assert mt.gaussian_quantile(0.95) == pytest.approx(1.6449, abs=1e-4)
        assert mt.gaussian_quantile(0.95) == pytest.approx(_quantile_oracle(0.95), abs=1e-6)
        assert mt.gaussian_quantile(0.8) == pytest.approx(_quantile_oracle(0.8), abs=1e-6)

    def test_cdf_increasing(self):
        xs = np.linspace(-6, 6, 200)
        vals = [mt.gaussian_cdf(x) for x in xs]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_quantile_domain(self):
        with pytest.raises(ValueError):
            mt.gaussian_quantile(0.0)
        with pytest.raises(ValueError):
            mt.gaussian_quantile(1.0)


class TestRegion:
    def test_valid(self, region):
        assert region.mu == (2.0, 1.0, 0.7)
        assert region.p == (0.2, 0.4, 0.6)

    @pytest.mark.parametrize(
        "mu,p",
        [
            ([1, 2], [0.2, 0.4]),       # mu not decreasing
            ([2, 1], [0.4, 0.2]),       # p not increasing
            ([2, 1], [0.2, 1.2]),       # p > 1
            ([2, -1], [0.2, 0.4]),      # mu <= 0
            ([2, 1], [0.0, 0.4]),       # p1 must be > 0
            ([2, 1, 0.7], [0.2, 0.4]),  # length mismatch
        ],
    )
    def test_invalid(self, mu, p):
        with pytest.raises(ValueError):
            mt.StrongEffectRegion.from_vectors(mu, p)

    def test_p_equal_one_allowed(self):
        r = mt.StrongEffectRegion.from_vectors([2, 1], [0.5, 1.0])
        assert r.contains(1.0, 1.0)

    def test_membership(self, region):
        assert region.contains(2.0, 0.2)
        assert region.contains(2.5, 0.3)
        assert region.contains(0.7, 0.9)
        assert not region.contains(1.9, 0.2)   # below mu_1 on [p1, p2)
        assert not region.contains(0.9, 0.45)  # below mu_2 on [p2, p3)
        assert not region.contains(3.0, 0.1)   # p below p1
        assert not region.contains(0.65, 1.0)

    def test_json_round_trip(self, region):
        again = mt.StrongEffectRegion.from_json(region.to_json())
        assert again == region

    def test_json_rejects_garbage(self):
        with pytest.raises(ValueError):
            mt.StrongEffectRegion.from_json("[1, 2, 3]")

    @given(mu=st.floats(0.7, 4.0), bump=st.floats(0.0, 2.0), p=st.floats(0.2, 1.0))
    @settings(max_examples=50, deadline=None)
    def test_membership_monotone_in_mu(self, region, mu, bump, p):
        if region.contains(mu, p):
            assert region.contains(mu + bump, p)


class TestMixturePoint:
    def test_validation(self):
        with pytest.raises(ValueError):
            mt.MixturePoint(-0.1, 0.5)
        with pytest.raises(ValueError):
            mt.MixturePoint(1.0, 1.5)


class TestBetaSingle:
    def test_null_collapses_to_level_complement(self):
        val = mt.beta_single(86, 0.251, mt.MixturePoint(2.0, 0.0), "exact")
        assert val == pytest.approx(0.950, abs=1e-3)

    def test_degenerate_p_one(self):
        n, eta, mu = 40, 0.3, 1.2
        val = mt.beta_single(n, eta, mt.MixturePoint(mu, 1.0), "exact")
        expected = mt.gaussian_cdf((eta - mu) * math.sqrt(n / 2.0))
        assert val == pytest.approx(expected, abs=1e-12)

    def test_paper_sample_size_boundary(self, region):
        assert mt.beta_se_one_stage(region, 86, 0.05, "exact") <= 0.2
        assert mt.beta_se_one_stage(region, 85, 0.05, "exact") > 0.2

    def test_monte_carlo_oracle(self):
        """1e6 draws of the mixture mean vs the analytic tail probability."""
        n, alpha, mu, p = 86, 0.05, 2.0, 0.2
        eta = one_stage_threshold(n, alpha)
        rng = np.random.default_rng(42)
        k = rng.binomial(n, p, size=1_000_000)
        xbar = k * mu / n + rng.standard_normal(1_000_000) * math.sqrt(2.0 / n)
        emp = float(np.mean(xbar <= eta))
        val = mt.beta_single(n, eta, mt.MixturePoint(mu, p), "exact")
        se = math.sqrt(val * (1 - val) / 1_000_000)
        assert abs(emp - val) <= 3 * se

    def test_mode_agreement(self):
        """|exact - approximate| <= 0.01 for n >= 50, mu <= 2.5."""
        worst = 0.0
        for n in (50, 86, 150):
            for mu in (0.5, 1.0, 1.8, 2.5):
                for p in (0.1, 0.3, 0.6, 0.9):
                    for eta in (0.05, 0.2, 0.4):
                        pt = mt.MixturePoint(mu, p)
                        d = abs(
                            mt.beta_single(n, eta, pt, "exact")
                            - mt.beta_single(n, eta, pt, "approximate")
                        )
                        worst = max(worst, d)
        assert worst <= 0.01

    def test_monotone_in_eta(self):
        pt = mt.MixturePoint(1.0, 0.3)
        for mode in ("exact", "approximate"):
            vals = [mt.beta_single(50, eta, pt, mode) for eta in np.linspace(-0.2, 0.6, 30)]
            assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_monotone_in_mu_and_p(self):
        """Decreasing in mu and p on a 20x20 grid (fixed n, eta > 0)."""
        n, eta = 40, 0.25
        mus = np.linspace(0.1, 3.0, 20)
        ps = np.linspace(0.05, 0.95, 20)
        grid = np.array(
            [[mt.beta_single(n, eta, mt.MixturePoint(m, q), "exact") for q in ps] for m in mus]
        )
        assert np.all(np.diff(grid, axis=0) < 0)
        assert np.all(np.diff(grid, axis=1) < 0)

    def test_validation(self):
        with pytest.raises(ValueError):
            mt.beta_single(0, 0.2, mt.MixturePoint(1, 0.5))
        with pytest.raises(ValueError):
            mt.beta_single(10, 0.2, mt.MixturePoint(1, 0.5), "bogus")


class TestBetaSeOneStage:
    def test_reference_region_boundary(self, region):
        assert mt.beta_se_one_stage(region, 86, 0.05, "exact") <= 0.2

    def test_single_corner_region(self):
        r = mt.StrongEffectRegion.from_vectors([1.5], [1.0])
        eta = one_stage_threshold(70, 0.05)
        assert mt.beta_se_one_stage(r, 70, 0.05, "exact") == pytest.approx(
            mt.beta_single(70, eta, mt.MixturePoint(1.5, 1.0), "exact"), abs=1e-14
        )

    def test_binding_corner(self, region):
        assert binding_corner(region, 86, 0.05, "approximate") == mt.MixturePoint(2.0, 0.2)
        assert binding_corner(region, 86, 0.05, "exact") == mt.MixturePoint(2.0, 0.2)

    def test_corner_sufficiency(self, region):
        """Max over a dense grid of the region equals the corner max."""
        n, alpha = 86, 0.05
        eta = one_stage_threshold(n, alpha)
        corner_max = mt.beta_se_one_stage(region, n, alpha, "exact")
        grid_max = 0.0
        for mu in np.linspace(0.7, 3.5, 45):
            for p in np.linspace(0.2, 1.0, 33):
                if region.contains(mu, p):
                    grid_max = max(
                        grid_max, mt.beta_single(n, eta, mt.MixturePoint(mu, p), "exact")
                    )
        assert grid_max <= corner_max + 1e-9


class TestLikelihoodRatio:
    def test_null_equals_one(self):
        assert mt.likelihood_ratio_mean(0.7, 25, mt.MixturePoint(1.4, 0.0)) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_at_zero_closed_form(self):
        n, mu, p = 12, 1.1, 0.4
        k = np.arange(n + 1)
        from scipy.stats import binom

        expected = float(np.sum(binom.pmf(k, n, p) * np.exp(-(k * mu) ** 2 / (4 * n))))
        got = mt.likelihood_ratio_mean(0.0, n, mt.MixturePoint(mu, p))
        assert got == pytest.approx(expected, rel=1e-10)
        assert got < 1.0

    def test_monotone_scan(self):
        """Non-decreasing in xbar on [-3, 3] with step 0.01 (UMP property)."""
        pt = mt.MixturePoint(1.0, 0.3)
        xs = np.arange(-3.0, 3.0 + 1e-9, 0.01)
        vals = np.array([mt.likelihood_ratio_mean(x, 20, pt) for x in xs])
        assert np.all(np.diff(vals) >= 0.0)
