import json
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import ndtr
from scipy.stats import kstest, norm

import mixtrial as mt
from mixtrial.errors import InfeasibleDesignError, ResourceLimitError
from mixtrial.two_stage import SWEEP_HEADER, _q1_factor

BETA_M4 = 1.0 - 0.8**0.25


class TestComputeEta2:
    def test_single_center_value(self):
        assert mt.compute_eta2(55, 0.7, 0.026, 38, 0.05) == pytest.approx(0.26, abs=0.005)

    def test_four_center_value(self):
        assert mt.compute_eta2(100, 0.7, 0.026, 65, 0.05) == pytest.approx(0.19, abs=0.005)

    @pytest.mark.parametrize(
        "n1,alpha0,alpha1,n2,alpha",
        [(55, 0.7, 0.026, 38, 0.05), (100, 0.7, 0.026, 65, 0.05), (20, 0.6, 0.01, 200, 0.025)],
    )
    def test_residual_against_adaptive_quadrature(self, n1, alpha0, alpha1, n2, alpha):
        """The returned threshold satisfies the level equation to 1e-8."""
        e2 = mt.compute_eta2(n1, alpha0, alpha1, n2, alpha)
        e0 = norm.ppf(alpha0) * math.sqrt(2 / n1)
        e1 = norm.ppf(1 - alpha1) * math.sqrt(2 / n1)

        def f(x):
            t = ((n1 + n2) / n2 * e2 - n1 / n2 * x) * math.sqrt(n2 / 2)
            return math.sqrt(n1 / 2) * norm.pdf(x * math.sqrt(n1 / 2)) * (1 - ndtr(t))

        val, _ = quad(f, e0, e1, epsabs=1e-13, limit=200)
        assert abs(val + alpha1 - alpha) <= 1e-8

    def test_level_by_monte_carlo(self, single_design):
        """Rejection frequency of 1e6 null trials equals alpha within 3 sigma."""
        d = single_design
        rng = np.random.default_rng(5)
        x1 = rng.standard_normal(1_000_000) * math.sqrt(2 / d.n1)
        x2 = rng.standard_normal(1_000_000) * math.sqrt(2 / d.n2)
        pooled = (d.n1 * x1 + d.n2 * x2) / (d.n1 + d.n2)
        reject = (x1 > d.eta1) | ((x1 >= d.eta0) & (x1 <= d.eta1) & (pooled > d.eta2))
        rate = float(np.mean(reject))
        assert abs(rate - 0.05) <= 3 * math.sqrt(0.05 * 0.95 / 1_000_000)

    def test_inconsistent_inputs_rejected(self):
        with pytest.raises(ValueError):
            mt.compute_eta2(55, 0.96, 0.026, 38, 0.05)  # alpha >= 1 - alpha0
        with pytest.raises(ValueError):
            mt.compute_eta2(55, 0.7, 0.06, 38, 0.05)  # alpha1 >= alpha


class TestTwoStagePValue:
    def test_efficacy_boundary(self, single_design):
        d = single_design
        p = mt.two_stage_p_value(mt.TrialData(xbar1=d.eta1), d)
        assert p == pytest.approx(d.alpha1, abs=1e-9)

    def test_futility_boundary(self, single_design):
        d = single_design
        p = mt.two_stage_p_value(mt.TrialData(xbar1=d.eta0), d)
        assert p == pytest.approx(1 - d.alpha0, abs=1e-9)

    def test_continued_range(self, single_design):
        d = single_design
        rng = np.random.default_rng(0)
        for _ in range(200):
            x1 = rng.uniform(d.eta0, d.eta1)
            x2 = rng.normal(0, 0.5)
            p = mt.two_stage_p_value(mt.TrialData(x1, x2), d)
            assert d.alpha1 - 1e-9 <= p <= 1 - d.alpha0 + 1e-9

    def test_data_consistency_enforced(self, single_design):
        d = single_design
        with pytest.raises(ValueError):
            mt.two_stage_p_value(mt.TrialData(xbar1=0.2), d)  # inside, no stage-2 mean
        with pytest.raises(ValueError):
            mt.two_stage_p_value(mt.TrialData(xbar1=0.9, xbar2=0.1), d)  # outside, with one

    def test_null_uniformity(self, single_design):
        """KS test on 1e5 simulated null p-values at level 0.01."""
        d = single_design
        rng = np.random.default_rng(202)
        n = 100_000
        x1 = rng.standard_normal(n) * math.sqrt(2 / d.n1)
        x2 = rng.standard_normal(n) * math.sqrt(2 / d.n2)
        early = (x1 < d.eta0) | (x1 > d.eta1)
        pv = np.empty(n)
        pv[early] = 1.0 - ndtr(x1[early] * math.sqrt(d.n1 / 2))
        from mixtrial import kernels

        pv[~early] = kernels.pvalue2(
            d.n1, d.eta0, d.eta1, d.n2, d.alpha1, x1[~early], x2[~early]
        )
        assert kstest(pv, "uniform").pvalue > 0.01


class TestBeta2:
    def test_null_gives_level_complement(self, center4_design):
        for alpha_eval in (0.0125, 0.05, 0.8):
            v = mt.beta2(center4_design, alpha_eval, mt.MixturePoint(1.4, 0.0), "exact")
            assert v == pytest.approx(1 - alpha_eval, abs=1e-9)

    def test_single_center_planning_constraint(self, single_design):
        assert mt.beta2(single_design, 0.05, mt.MixturePoint(2, 0.2), "exact") <= 0.2

    def test_smallest_hochberg_threshold(self, center4_design):
        """Single-center error at alpha(1); the bound-table entry is 0.305."""
        v = mt.beta2(center4_design, 0.0125, mt.MixturePoint(2, 0.2), "exact")
        assert v == pytest.approx(0.305, abs=0.003)

    def test_simulation_oracle(self, center4_design):
        """1e5 replications at (1.2, 0.5) agree with the analytic value."""
        d = center4_design
        pt = mt.MixturePoint(1.2, 0.5)
        v = mt.beta2(d, 0.05, pt, "exact")
        rng = np.random.default_rng(31)
        n = 100_000
        k1 = rng.binomial(d.n1, pt.p, n)
        x1 = k1 * pt.mu / d.n1 + rng.standard_normal(n) * math.sqrt(2 / d.n1)
        k2 = rng.binomial(d.n2, pt.p, n)
        x2 = k2 * pt.mu / d.n2 + rng.standard_normal(n) * math.sqrt(2 / d.n2)
        pooled = (d.n1 * x1 + d.n2 * x2) / (d.n1 + d.n2)
        reject = (x1 > d.eta1) | ((x1 >= d.eta0) & (x1 <= d.eta1) & (pooled > d.eta2))
        emp = 1.0 - float(np.mean(reject))
        assert abs(emp - v) <= 3 * math.sqrt(v * (1 - v) / n)

    def test_mode_agreement(self, center4_design):
        for pt in (mt.MixturePoint(2, 0.2), mt.MixturePoint(1.2, 0.5)):
            for a in (0.0125, 0.05):
                e = mt.beta2(center4_design, a, pt, "exact")
                ap = mt.beta2(center4_design, a, pt, "approximate")
                assert abs(e - ap) <= 0.01


class TestBeta2Se:
    def test_four_center_meets_target(self, center4_design, region):
        assert mt.beta2_se(center4_design, 0.05, region, "exact") == pytest.approx(
            0.054, abs=0.002
        )

    def test_single_corner(self, center4_design):
        r = mt.StrongEffectRegion.from_vectors([2.0], [0.2])
        assert mt.beta2_se(center4_design, 0.05, r, "exact") == pytest.approx(
            mt.beta2(center4_design, 0.05, mt.MixturePoint(2, 0.2), "exact"), abs=1e-14
        )

    def test_corner_sufficiency_on_grid(self, single_design, region):
        corner_max = mt.beta2_se(single_design, 0.05, region, "exact")
        grid_max = 0.0
        for mu in np.linspace(0.7, 3.0, 24):
            for p in np.linspace(0.2, 1.0, 17):
                if region.contains(mu, p):
                    grid_max = max(
                        grid_max,
                        mt.beta2(single_design, 0.05, mt.MixturePoint(mu, p), "exact"),
                    )
        assert grid_max <= corner_max + 1e-6


class TestExpectedSizes:
    def test_q0_single_center(self, single_design):
        assert mt.expected_n_null(single_design) == pytest.approx(65.4, abs=0.1)

    def test_q0_four_center(self, center4_design):
        assert mt.expected_n_null(center4_design) == pytest.approx(117.8, abs=0.1)

    def test_q0_degenerates_to_n1(self):
        d = mt.make_design(60, 0.94, 0.004, 40, 0.05)
        assert mt.expected_n_null(d) == pytest.approx(60 + (1 - 0.94 - 0.004) * 40, abs=1e-12)
        assert mt.expected_n_null(d) < 63

    def test_q1_and_worst_point_single(self, single_design):
        diag = mt.expected_n_alt_max(single_design)
        assert diag.q1 == pytest.approx(75, abs=1)
        assert diag.worst_point.mu == pytest.approx(0.24, abs=0.01)
        assert diag.worst_point.p == 1.0
        assert diag.total == 93

    def test_q1_and_worst_point_four_center(self, center4_design):
        diag = mt.expected_n_alt_max(center4_design)
        assert diag.q1 == pytest.approx(134, abs=1)
        assert diag.worst_point.mu == pytest.approx(0.17, abs=0.01)

    def test_grid_search_validates_closed_form(self, single_design):
        """Exact stage-2 probability maximum vs the normal-theory factor."""
        closed = _q1_factor(single_design.alpha0, single_design.alpha1)
        best, arg = -1.0, None
        for mu in np.arange(0.02, 3.001, 0.02):
            for p in np.arange(0.05, 1.0001, 0.05):
                v = mt.second_stage_probability(single_design, mt.MixturePoint(mu, p), "exact")
                if v > best:
                    best, arg = v, (mu, p)
        assert abs(best - closed) <= 0.01
        worst = mt.expected_n_alt_max(single_design).worst_point
        assert abs(arg[0] - worst.mu) <= 0.02
        assert abs(arg[1] - worst.p) <= 0.05

    def test_dominance(self, single_design, center4_design):
        for d in (single_design, center4_design):
            diag = mt.expected_n_alt_max(d)
            assert d.n1 <= diag.q0 <= d.n1 + d.n2
            assert diag.q1 <= d.n1 + d.n2


class TestSecondStageProbability:
    def test_null_case(self, single_design):
        d = single_design
        v = mt.second_stage_probability(d, mt.MixturePoint(1.0, 0.0), "exact")
        assert v == pytest.approx(1 - d.alpha0 - d.alpha1, abs=1e-9)

    def test_worst_point_value(self, single_design):
        worst = mt.expected_n_alt_max(single_design).worst_point
        v = mt.second_stage_probability(single_design, worst, "exact")
        assert v == pytest.approx(0.52, abs=0.01)

    def test_monte_carlo(self, single_design):
        d = single_design
        pt = mt.MixturePoint(0.8, 0.45)
        v = mt.second_stage_probability(d, pt, "exact")
        rng = np.random.default_rng(17)
        n = 100_000
        k = rng.binomial(d.n1, pt.p, n)
        x1 = k * pt.mu / d.n1 + rng.standard_normal(n) * math.sqrt(2 / d.n1)
        emp = float(np.mean((x1 >= d.eta0) & (x1 <= d.eta1)))
        assert abs(emp - v) <= 3 * math.sqrt(v * (1 - v) / n)


class TestFeasibility:
    def test_reference_range(self, region):
        feas = mt.feasibility(region, 0.05, 0.2, 86)
        assert feas.n1_min == 12
        assert feas.n1_max == 86

    def test_beta_max_near_half_degenerates(self, region):
        feas = mt.feasibility(region, 0.05, 0.4999999, 86)
        assert feas.n1_min == 1

    def test_exhaustive_equivalence(self, region):
        """Grid pairs passing feasibility admit a plan; failing pairs do not."""
        feas = mt.feasibility(region, 0.05, 0.2, 86)
        for n1 in (12, 20, 45, 86):
            for alpha0 in np.round(np.arange(0.55, 0.951, 0.05), 10):
                allowed = feas.allows(n1, float(alpha0), 0.05)
                try:
                    a1 = mt.optimize_alpha1(n1, float(alpha0), 0.05, region, 0.2)
                    mt.solve_n2(n1, float(alpha0), a1, 0.05, region, 0.2)
                    solvable = True
                except (InfeasibleDesignError, ValueError):
                    solvable = False
                assert allowed == solvable, (n1, alpha0)


class TestOptimizeAlpha1:
    def test_single_center_cell(self, region):
        a1 = mt.optimize_alpha1(55, 0.7, 0.05, region, 0.2)
        assert a1 == pytest.approx(0.026, abs=0.002)

    def test_four_center_cell(self, region):
        a1 = mt.optimize_alpha1(100, 0.7, 0.05, region, BETA_M4)
        assert a1 == pytest.approx(0.026, abs=0.002)

    def test_local_optimality(self, region):
        """The winner beats both neighboring grid values in smooth q1."""
        from mixtrial.two_stage import _n2_real_batch

        a1 = mt.optimize_alpha1(55, 0.7, 0.05, region, 0.2, grid_step=0.005)

        def q1(a):
            n2r = _n2_real_batch(55, 0.7, np.array([a]), 0.05, region, 0.2, 900)[0]
            return 55 + _q1_factor(0.7, a) * n2r

        assert q1(a1) <= q1(a1 - 0.005) + 1e-9
        assert q1(a1) <= q1(a1 + 0.005) + 1e-9


class TestSolveN2:
    def test_single_center(self, region):
        assert abs(mt.solve_n2(55, 0.7, 0.026, 0.05, region, 0.2) - 38) <= 1

    def test_four_center(self, region):
        assert abs(mt.solve_n2(100, 0.7, 0.026, 0.05, region, BETA_M4) - 65) <= 1

    def test_minimality(self, region):
        n2 = mt.solve_n2(55, 0.7, 0.026, 0.05, region, 0.2)
        d_ok = mt.make_design(55, 0.7, 0.026, n2, 0.05)
        assert mt.beta2_se(d_ok, 0.05, region, "exact") <= 0.2
        assert mt.beta2_se(d_ok, 0.05, region, "approximate") <= 0.2
        d_small = mt.make_design(55, 0.7, 0.026, n2 - 1, 0.05)
        exact_fail = mt.beta2_se(d_small, 0.05, region, "exact") > 0.2
        approx_fail = mt.beta2_se(d_small, 0.05, region, "approximate") > 0.2
        assert exact_fail or approx_fail

    def test_infeasible_raises(self, region):
        with pytest.raises(InfeasibleDesignError):
            mt.solve_n2(55, 0.7, 0.026, 0.05, region, 0.2, cap=5)

    def test_exact_mode_direct_search(self, region):
        n2 = mt.solve_n2(55, 0.7, 0.026, 0.05, region, 0.2, mode="exact")
        d = mt.make_design(55, 0.7, 0.026, n2, 0.05)
        assert mt.beta2_se(d, 0.05, region, "exact") <= 0.2
        d_small = mt.make_design(55, 0.7, 0.026, n2 - 1, 0.05)
        assert mt.beta2_se(d_small, 0.05, region, "exact") > 0.2


class TestPlanTwoStage:
    def test_single_center_plan(self, region):
        d = mt.plan_two_stage(region, 0.05, 0.2, 55, 0.7)
        assert d.alpha1 == pytest.approx(0.026, abs=0.002)
        assert abs(d.n2 - 38) <= 1
        assert d.eta0 == pytest.approx(0.10, abs=0.005)
        assert d.eta1 == pytest.approx(0.37, abs=0.005)
        assert d.eta2 == pytest.approx(0.26, abs=0.005)

    def test_threshold_invariants(self, region):
        d = mt.plan_two_stage(region, 0.05, 0.2, 55, 0.7)
        assert d.eta0 == pytest.approx(
            mt.gaussian_quantile(d.alpha0) * math.sqrt(2 / d.n1), abs=1e-12
        )
        assert d.eta1 == pytest.approx(
            mt.gaussian_quantile(1 - d.alpha1) * math.sqrt(2 / d.n1), abs=1e-12
        )
        assert d.eta0 < d.eta1

    def test_json_round_trip(self, single_design):
        again = mt.TwoStageDesign.from_json(single_design.to_json())
        assert again == single_design


class TestSweep:
    def test_structure_and_determinism(self, region):
        rows = mt.sweep(region, 0.05, 0.2, [45, 55], [0.7, 0.75])
        rows2 = mt.sweep(region, 0.05, 0.2, [45, 55], [0.7, 0.75])
        assert rows == rows2
        assert len(rows) == 4
        for r in rows:
            assert r.feasible
            assert r.n1 <= r.q0 <= r.total
            assert r.q1 <= r.total
        csv = mt.sweep_to_csv(rows)
        assert csv.splitlines()[0] == SWEEP_HEADER
        assert len(csv.splitlines()) == 5

    def test_infeasible_flagged(self, region):
        rows = mt.sweep(region, 0.05, 0.2, [30], [0.55, 0.9])
        assert rows[0].feasible
        assert not rows[1].feasible  # alpha0 above the corner-wise bound
        csv = mt.sweep_to_csv(rows)
        assert csv.splitlines()[2].endswith(",false")

    def test_budget(self, region):
        with pytest.raises(ResourceLimitError):
            mt.sweep(region, 0.05, 0.2, list(range(40, 60)), [0.7, 0.75],
                     budget_seconds=1e-9)

    def test_threads_match_serial(self, region):
        serial = mt.sweep(region, 0.05, 0.2, [45, 50], [0.7, 0.75])
        threaded = mt.sweep(region, 0.05, 0.2, [45, 50], [0.7, 0.75], threads=3)
        assert serial == threaded


class TestFalseNegativeSurface:
    def test_null_row_and_monotonicity(self, single_design):
        mu_grid = np.linspace(0.2, 2.4, 8)
        p_grid = np.array([0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
        surf = mt.false_negative_surface(single_design, 0.05, mu_grid, p_grid, "exact")
        assert np.allclose(surf[:, 0], 0.95, atol=1e-9)
        assert np.all(np.diff(surf, axis=0) <= 1e-12)
        assert np.all(np.diff(surf, axis=1) <= 1e-12)

    def test_planning_point(self, single_design):
        surf = mt.false_negative_surface(single_design, 0.05, [2.0], [0.2], "exact")
        assert surf[0, 0] <= 0.2
