"""Two-stage design: thresholds, p-values, error rates, expected sample
sizes, and the (n1, alpha0) planning machinery.

A design stops early for futility when the stage-1 mean falls below eta0,
stops early for efficacy above eta1, and otherwise rejects when the pooled
mean exceeds eta2.  Planning fixes (n1, alpha0), picks alpha1 to minimize
the worst-case expected sample size, and then finds the smallest stage-2
size n2 meeting the type II constraint over the region of strong effect.
"""
from __future__ import annotations

import io
import json
import math
import os
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import kernels
from .errors import InfeasibleDesignError, ResourceLimitError
from .model import (
    APPROXIMATE,
    EXACT,
    EvaluationMode,
    MixturePoint,
    StrongEffectRegion,
    _check_mode,
    beta_single,
    gaussian_cdf,
    gaussian_quantile,
)
from .one_stage import approximate_sample_size


@dataclass(frozen=True)
class TwoStageDesign:
    """A fully determined two-stage design with derived thresholds."""

    n1: int
    n2: int
    alpha0: float
    alpha1: float
    alpha: float
    eta0: float
    eta1: float
    eta2: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "n1": self.n1,
                "n2": self.n2,
                "alpha0": self.alpha0,
                "alpha1": self.alpha1,
                "alpha": self.alpha,
                "eta0": self.eta0,
                "eta1": self.eta1,
                "eta2": self.eta2,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "TwoStageDesign":
        d = json.loads(text)
        return make_design(
            n1=int(d["n1"]),
            alpha0=float(d["alpha0"]),
            alpha1=float(d["alpha1"]),
            n2=int(d["n2"]),
            alpha=float(d["alpha"]),
        )


@dataclass(frozen=True)
class TrialData:
    """Observed stage means; the stage-2 mean is absent after an early stop."""

    xbar1: float
    xbar2: Optional[float] = None


@dataclass(frozen=True)
class PlanDiagnostics:
    """Expected-size summary of a design."""

    q0: float
    q1: float
    total: int
    worst_point: MixturePoint


def _validate_probs(alpha0: float, alpha1: float, alpha: float) -> None:
    if not 0.5 < alpha0 < 1.0:
        raise ValueError(f"alpha0 must be in (0.5, 1), got {alpha0}")
    if not 0.0 < alpha1 < alpha:
        raise ValueError(f"alpha1 must be in (0, alpha), got {alpha1}")
    # strictly positive stage-2 level budget; equality up to rounding puts
    # the final threshold at -infinity
    if not alpha < 1.0 - alpha0 - 1e-9:
        raise ValueError(
            f"need 1 - alpha0 > alpha > alpha1 (the second stage is pointless "
            f"otherwise); got alpha0={alpha0}, alpha={alpha}, alpha1={alpha1}"
        )


def stage1_thresholds(n1: int, alpha0: float, alpha1: float) -> tuple[float, float]:
    """Futility and efficacy stopping bounds for the stage-1 mean."""
    eta0 = gaussian_quantile(alpha0) * math.sqrt(2.0 / n1)
    eta1 = gaussian_quantile(1.0 - alpha1) * math.sqrt(2.0 / n1)
    return eta0, eta1


@lru_cache(maxsize=4096)
def compute_eta2(n1: int, alpha0: float, alpha1: float, n2: int, alpha: float) -> float:
    """Final rejection threshold making the overall level exactly alpha.

    Solves the level equation: the probability mass of continuing past stage
    one and then crossing the pooled-mean boundary, plus alpha1, equals alpha.
    The residual of the returned root is below 1e-10.
    """
    _validate_probs(alpha0, alpha1, alpha)
    if n1 < 1 or n2 < 1:
        raise ValueError("stage sizes must be positive")
    eta0, eta1 = stage1_thresholds(n1, alpha0, alpha1)
    out = kernels.solve_eta2(
        int(n1),
        eta0,
        np.array([eta1]),
        np.array([alpha1]),
        np.array([float(n2)]),
        alpha,
    )
    return float(out[0])


def make_design(n1: int, alpha0: float, alpha1: float, n2: int, alpha: float) -> TwoStageDesign:
    """Builds a design with all thresholds derived from its parameters."""
    eta0, eta1 = stage1_thresholds(n1, alpha0, alpha1)
    eta2 = compute_eta2(int(n1), float(alpha0), float(alpha1), int(n2), float(alpha))
    return TwoStageDesign(
        n1=int(n1),
        n2=int(n2),
        alpha0=float(alpha0),
        alpha1=float(alpha1),
        alpha=float(alpha),
        eta0=eta0,
        eta1=eta1,
        eta2=eta2,
    )


def two_stage_p_value(data: TrialData, design: TwoStageDesign) -> float:
    """p-value of an observed trial under the two-stage design.

    Early stops use the stage-1 tail probability; continued trials integrate
    the joint null density over the region more extreme than the observed
    pooled mean, which lands in [alpha1, 1 - alpha0].
    """
    d, x1 = design, data.xbar1
    inside = d.eta0 <= x1 <= d.eta1
    if data.xbar2 is None:
        if d.eta0 < x1 < d.eta1:
            raise ValueError(
                "stage-2 mean is required when the stage-1 mean lies strictly "
                "between eta0 and eta1"
            )
        return 1.0 - gaussian_cdf(x1 * math.sqrt(d.n1 / 2.0))
    if not inside:
        raise ValueError(
            "stage-2 mean supplied although the trial stops at stage 1 "
            f"(xbar1={x1}, bounds [{d.eta0}, {d.eta1}])"
        )
    out = kernels.pvalue2(
        d.n1, d.eta0, d.eta1, d.n2, d.alpha1, np.array([x1]), np.array([data.xbar2])
    )
    return float(out[0])


def beta2(
    design: TwoStageDesign,
    alpha_eval: float,
    point: MixturePoint,
    mode: EvaluationMode = EXACT,
) -> float:
    """False-negative probability of the design evaluated at level alpha_eval.

    For alpha_eval inside (alpha1, 1 - alpha0) the rejection region couples
    both stages and eta2 is re-solved at that level.  Outside the interval
    the event reduces to a stage-1 threshold crossing at z_{1-alpha_eval};
    the Monte Carlo oracle in the test-suite pins this reading down.
    """
    if not 0.0 < alpha_eval < 1.0:
        raise ValueError("alpha_eval must be in (0, 1)")
    exact = _check_mode(mode)
    d = design
    if d.alpha1 < alpha_eval < 1.0 - d.alpha0:
        eta2 = compute_eta2(d.n1, d.alpha0, d.alpha1, d.n2, alpha_eval)
        return kernels.beta2_point(
            d.n1, d.eta0, d.eta1, d.n2, eta2, point.mu, point.p, exact
        )
    eta = gaussian_quantile(1.0 - alpha_eval) * math.sqrt(2.0 / d.n1)
    return beta_single(d.n1, eta, point, mode)


def beta2_se(
    design: TwoStageDesign,
    alpha_eval: float,
    region: StrongEffectRegion,
    mode: EvaluationMode = EXACT,
) -> float:
    """Maximum two-stage type II error over the region (corner maximum)."""
    return max(beta2(design, alpha_eval, pt, mode) for pt in region.corner_points())


def expected_n_null(design: TwoStageDesign) -> float:
    """Expected per-arm treatment-group size under the null."""
    d = design
    return d.n1 + (1.0 - d.alpha0 - d.alpha1) * d.n2


def _q1_factor(alpha0: float, alpha1: float) -> float:
    z1 = gaussian_quantile(1.0 - alpha1)
    z0 = gaussian_quantile(alpha0)
    if not 0.0 < z0 < z1:
        raise ValueError("q1 requires 0 < z_alpha0 < z_{1-alpha1} (alpha0 > 0.5)")
    return 2.0 * gaussian_cdf((z1 - z0) / 2.0) - 1.0


def expected_n_alt_max(design: TwoStageDesign) -> PlanDiagnostics:
    """Worst-case expected per-arm size over alternatives.

    The maximizing alternative has p = 1 and mu halfway between the stopping
    bounds, where the probability of needing stage two peaks at
    ``2 Phi((z_{1-alpha1} - z_alpha0)/2) - 1``.
    """
    d = design
    z1 = gaussian_quantile(1.0 - d.alpha1)
    z0 = gaussian_quantile(d.alpha0)
    q1 = d.n1 + _q1_factor(d.alpha0, d.alpha1) * d.n2
    worst = MixturePoint((z1 + z0) / math.sqrt(2.0 * d.n1), 1.0)
    return PlanDiagnostics(
        q0=expected_n_null(d), q1=q1, total=d.n1 + d.n2, worst_point=worst
    )


def second_stage_probability(
    design: TwoStageDesign, point: MixturePoint, mode: EvaluationMode = EXACT
) -> float:
    """Probability that the trial continues to the second stage."""
    d = design
    return beta_single(d.n1, d.eta1, point, mode) - beta_single(d.n1, d.eta0, point, mode)


@dataclass(frozen=True)
class Feasibility:
    """Feasible (n1, alpha0) description for two-stage planning."""

    n1_min: int
    n1_max: int
    alpha0_upper: Callable[[int], float]

    def allows(self, n1: int, alpha0: float, alpha: float) -> bool:
        return (
            self.n1_min <= n1 <= self.n1_max
            and 0.5 < alpha0 < 1.0 - alpha
            and alpha0 < self.alpha0_upper(n1)
        )


def feasibility(
    region: StrongEffectRegion, alpha: float, beta_max: float, n_one_stage: int
) -> Feasibility:
    """Bounds on (n1, alpha0) for which a two-stage plan can exist.

    The futility stop must not already exhaust the type II budget: alpha0
    stays below a corner-wise normal bound, which in turn forces a minimum
    stage-1 size.  The one-stage n caps n1 from above.
    """
    zb = gaussian_quantile(1.0 - beta_max)

    bound = 0.0
    for mu, p in region.corners:
        v = 2.0 + (1.0 - p) * p * mu * mu
        bound = max(bound, (zb * math.sqrt(v) / (mu * p)) ** 2)
    n1_min = int(math.floor(bound)) + 1

    def alpha0_upper(n1: int) -> float:
        out = 1.0
        for mu, p in region.corners:
            arg = math.sqrt(n1 / 2.0) * mu * p - zb * math.sqrt(
                1.0 + (1.0 - p) * p * mu * mu / 2.0
            )
            out = min(out, gaussian_cdf(arg))
        return out

    return Feasibility(n1_min=n1_min, n1_max=int(n_one_stage), alpha0_upper=alpha0_upper)


def _corner_arrays(region: StrongEffectRegion) -> tuple[np.ndarray, np.ndarray]:
    return np.array(region.mu, dtype=float), np.array(region.p, dtype=float)


def _default_cap(region: StrongEffectRegion, alpha: float, beta_max: float) -> int:
    return max(50, int(math.ceil(10.0 * approximate_sample_size(region, alpha, beta_max))))


def _bse_approx_batch(
    n1: int,
    alpha0: float,
    alpha1s: np.ndarray,
    n2s: np.ndarray,
    alpha: float,
    mus: np.ndarray,
    ps: np.ndarray,
) -> np.ndarray:
    eta0 = gaussian_quantile(alpha0) * math.sqrt(2.0 / n1)
    eta1s = np.array([gaussian_quantile(1.0 - a) for a in alpha1s]) * math.sqrt(2.0 / n1)
    eta2s = kernels.solve_eta2(n1, eta0, eta1s, alpha1s, n2s, alpha)
    return kernels.beta2_se_approx(n1, eta0, eta1s, n2s, eta2s, mus, ps)


def _n2_real_batch(
    n1: int,
    alpha0: float,
    alpha1s: np.ndarray,
    alpha: float,
    region: StrongEffectRegion,
    beta_max: float,
    cap: int,
) -> np.ndarray:
    """Continuous stage-2 sizes meeting the approximate constraint (inf where none)."""
    mus, ps = _corner_arrays(region)
    B = len(alpha1s)
    feasible = (
        _bse_approx_batch(n1, alpha0, alpha1s, np.full(B, float(cap)), alpha, mus, ps)
        <= beta_max
    )
    lo = np.ones(B)
    hi = np.full(B, float(cap))
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        ok = _bse_approx_batch(n1, alpha0, alpha1s, mid, alpha, mus, ps) <= beta_max
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    return np.where(feasible, 0.5 * (lo + hi), np.inf)


def optimize_alpha1(
    n1: int,
    alpha0: float,
    alpha: float,
    region: StrongEffectRegion,
    beta_max: float,
    grid_step: float = 0.005,
    cap: Optional[int] = None,
    refine: bool = False,
) -> float:
    """Early-efficacy mass minimizing the worst-case expected sample size.

    The objective is q1 on the continuous relaxation (real-valued n2 from the
    CLT-mode constraint): optimizing against the integer n2 directly is
    unstable because q1 is flat to within a fraction of a patient while n2
    jumps by whole units.  Ties resolve toward the smaller alpha1.  With
    ``refine`` a golden-section pass polishes the grid winner on the same
    smooth objective.
    """
    _validate_probs(alpha0, min(grid_step, alpha / 2), alpha)
    cap = cap or _default_cap(region, alpha, beta_max)
    grid = np.round(np.arange(grid_step, alpha, grid_step), 12)
    grid = grid[(grid > 0.0) & (grid < alpha)]
    if len(grid) == 0:
        grid = np.array([alpha / 2.0])

    def q1_of(a1s: np.ndarray) -> np.ndarray:
        n2r = _n2_real_batch(n1, alpha0, a1s, alpha, region, beta_max, cap)
        f = np.array([_q1_factor(alpha0, a) for a in a1s])
        return n1 + f * n2r

    vals = q1_of(grid)
    if not np.any(np.isfinite(vals)):
        raise InfeasibleDesignError(
            f"no feasible alpha1 at (n1={n1}, alpha0={alpha0}) up to n2={cap}"
        )
    i = int(np.argmin(vals))
    best, best_val = float(grid[i]), float(vals[i])
    if refine:
        lo = float(grid[i - 1]) if i > 0 else grid_step / 4.0
        hi = float(grid[i + 1]) if i + 1 < len(grid) else min(alpha * 0.999, best + grid_step)
        inv = (math.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        c1, c2 = b - inv * (b - a), a + inv * (b - a)
        f1, f2 = q1_of(np.array([c1]))[0], q1_of(np.array([c2]))[0]
        for _ in range(25):
            if f1 <= f2:
                b, c2, f2 = c2, c1, f1
                c1 = b - inv * (b - a)
                f1 = q1_of(np.array([c1]))[0]
            else:
                a, c1, f1 = c1, c2, f2
                c2 = a + inv * (b - a)
                f2 = q1_of(np.array([c2]))[0]
        cand = (a + b) / 2.0
        cand_val = q1_of(np.array([cand]))[0]
        if cand_val < best_val:
            best, best_val = float(cand), float(cand_val)
    return best


def solve_n2(
    n1: int,
    alpha0: float,
    alpha1: float,
    alpha: float,
    region: StrongEffectRegion,
    beta_max: float,
    mode: EvaluationMode = APPROXIMATE,
    cap: Optional[int] = None,
    verify_exact: bool = True,
) -> int:
    """Smallest integer stage-2 size meeting the type II constraint.

    The search runs in the requested mode (CLT approximation by default);
    with ``verify_exact`` the result is then walked upward until the exact
    mixture computation also satisfies the constraint, which changes the
    outcome by at most a patient.
    """
    _validate_probs(alpha0, alpha1, alpha)
    cap = cap or _default_cap(region, alpha, beta_max)
    exact = _check_mode(mode)
    mus, ps = _corner_arrays(region)
    eta0 = gaussian_quantile(alpha0) * math.sqrt(2.0 / n1)
    eta1 = gaussian_quantile(1.0 - alpha1) * math.sqrt(2.0 / n1)

    def bse(n2: int, want_exact: bool) -> float:
        eta2 = compute_eta2(n1, alpha0, alpha1, n2, alpha)
        if want_exact:
            return kernels.beta2_se_exact(n1, eta0, eta1, n2, eta2, mus, ps)
        return float(
            kernels.beta2_se_approx(
                n1, eta0, np.array([eta1]), np.array([float(n2)]), np.array([eta2]), mus, ps
            )[0]
        )

    if bse(cap, exact) > beta_max:
        raise InfeasibleDesignError(
            f"no n2 <= {cap} meets beta_max={beta_max} at "
            f"(n1={n1}, alpha0={alpha0}, alpha1={alpha1})"
        )
    lo, hi = 1, cap
    while lo < hi:
        mid = (lo + hi) // 2
        if bse(mid, exact) <= beta_max:
            hi = mid
        else:
            lo = mid + 1
    n2 = lo
    if verify_exact and not exact:
        while n2 < cap and bse(n2, True) > beta_max:
            n2 += 1
    return n2


def plan_two_stage(
    region: StrongEffectRegion,
    alpha: float,
    beta_max: float,
    n1: int,
    alpha0: float,
    mode: EvaluationMode = APPROXIMATE,
    cap: Optional[int] = None,
) -> TwoStageDesign:
    """Completes a two-stage plan for a user-chosen (n1, alpha0)."""
    alpha1 = optimize_alpha1(n1, alpha0, alpha, region, beta_max, cap=cap)
    n2 = solve_n2(n1, alpha0, alpha1, alpha, region, beta_max, mode=mode, cap=cap)
    return make_design(n1, alpha0, alpha1, n2, alpha)


@dataclass(frozen=True)
class SweepRow:
    n1: int
    alpha0: float
    feasible: bool
    alpha1: float = math.nan
    n2: int = 0
    eta0: float = math.nan
    eta1: float = math.nan
    eta2: float = math.nan
    q0: float = math.nan
    q1: float = math.nan
    total: int = 0


SWEEP_HEADER = "n1,alpha0,alpha1,n2,eta0,eta1,eta2,q0,q1,total,feasible"


def sweep(
    region: StrongEffectRegion,
    alpha: float,
    beta_max: float,
    n1_grid: Sequence[int],
    alpha0_grid: Sequence[float],
    mode: EvaluationMode = APPROXIMATE,
    cap: Optional[int] = None,
    threads: Optional[int] = None,
    budget_seconds: Optional[float] = None,
) -> list[SweepRow]:
    """Plans every grid cell; infeasible cells are flagged, not skipped.

    Rows come back in (n1, alpha0) grid order regardless of how many worker
    threads evaluate them.  ``budget_seconds`` aborts long sweeps with a
    resource error (used by the HTTP service).
    """
    cap = cap or _default_cap(region, alpha, beta_max)
    feas = feasibility(region, alpha, beta_max, max(n1_grid))
    start = time.monotonic()

    def cell(n1: int, alpha0: float) -> SweepRow:
        if budget_seconds is not None and time.monotonic() - start > budget_seconds:
            raise ResourceLimitError(f"sweep exceeded budget of {budget_seconds}s")
        if not feas.allows(n1, alpha0, alpha) or alpha0 <= 0.5:
            return SweepRow(n1=n1, alpha0=alpha0, feasible=False)
        try:
            alpha1 = optimize_alpha1(n1, alpha0, alpha, region, beta_max, cap=cap)
            n2 = solve_n2(n1, alpha0, alpha1, alpha, region, beta_max, mode=mode, cap=cap)
            d = make_design(n1, alpha0, alpha1, n2, alpha)
        except InfeasibleDesignError:
            return SweepRow(n1=n1, alpha0=alpha0, feasible=False)
        return SweepRow(
            n1=n1,
            alpha0=alpha0,
            feasible=True,
            alpha1=alpha1,
            n2=n2,
            eta0=d.eta0,
            eta1=d.eta1,
            eta2=d.eta2,
            q0=expected_n_null(d),
            q1=d.n1 + _q1_factor(alpha0, alpha1) * n2,
            total=n1 + n2,
        )

    cells = [(int(n1), float(a0)) for n1 in n1_grid for a0 in alpha0_grid]
    threads = threads if threads is not None else int(os.environ.get("PLANNER_THREADS", "1"))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda c: cell(*c), cells))
    return [cell(*c) for c in cells]


def sweep_to_csv(rows: Iterable[SweepRow]) -> str:
    """Serializes sweep rows to the documented CSV schema."""
    buf = io.StringIO()
    buf.write(SWEEP_HEADER + "\n")
    for r in rows:
        if r.feasible:
            buf.write(
                f"{r.n1},{r.alpha0:.6f},{r.alpha1:.6f},{r.n2},"
                f"{r.eta0:.6f},{r.eta1:.6f},{r.eta2:.6f},"
                f"{r.q0:.6f},{r.q1:.6f},{r.total},true\n"
            )
        else:
            buf.write(f"{r.n1},{r.alpha0:.6f},,,,,,,,,false\n")
    return buf.getvalue()


def false_negative_surface(
    design: TwoStageDesign,
    alpha: float,
    mu_grid: Sequence[float],
    p_grid: Sequence[float],
    mode: EvaluationMode = EXACT,
) -> np.ndarray:
    """beta2 on a (mu, p) grid; rows follow mu_grid, columns follow p_grid."""
    out = np.empty((len(mu_grid), len(p_grid)))
    for i, mu in enumerate(mu_grid):
        for j, p in enumerate(p_grid):
            out[i, j] = beta2(design, alpha, MixturePoint(float(mu), float(p)), mode)
    return out
