"""Monte Carlo trial engine.

Simulates patient-level responses (control arm N(0,1); treatment arm the
two-component mixture), standardizes by the stage-specific control-group
estimates, runs the two-stage decision rule, and aggregates family-wise
error frequencies across centers.  Serves as the independent oracle for the
analytic error-rate computations.

Reproducibility: every (center, stage, role) triple owns a counter-based
Philox stream keyed by the seed, with the replication index advancing along
the stream, so results are bit-identical for a given (config, seed) and
independent of chunking.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from . import kernels
from .model import MixturePoint
from .multicenter import ErrorTable, MulticenterDesign, apply_step_up
from .two_stage import TwoStageDesign

_ROLE_TREAT, _ROLE_CONTROL, _ROLE_MIX, _ROLE_EFFECT = 0, 1, 2, 3
_CHUNK = 4096


@dataclass(frozen=True)
class SimulationConfig:
    """One multicenter simulation setup."""

    n_centers: int
    n_strong: int
    strong_point: MixturePoint
    delta: float = 0.0
    replications: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.n_strong <= self.n_centers:
            raise ValueError("need 0 <= M1 <= M")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")


@dataclass(frozen=True)
class CenterResult:
    """Outcome of one simulated center."""

    p_value: float
    stopped_early: bool
    stage1_mean: float
    stage2_mean: Optional[float]
    n_stage1: int
    n_stage2: int


def _stream(seed: int, center: int, stage: int, role: int) -> np.random.Generator:
    tag = center * 8 + (stage - 1) * 4 + role
    return np.random.Generator(np.random.Philox(key=[np.uint64(seed), np.uint64(tag)]))


def _mixture_sample(z: np.ndarray, u: np.ndarray, effect, p: float) -> np.ndarray:
    """Treatment responses: responders shift by the (possibly random) effect.

    ``effect`` broadcasts over replication rows: a random treatment effect is
    drawn once per center and replication and shared by that center's
    responders, so that a single response is marginally
    N(mu, 1 + delta^2) while the center's subgroup moves together.  A
    per-subject independent draw would leave the error rates almost
    unchanged; the strong degradation under a random effect comes from the
    center-level sharing.
    """
    if p <= 0.0:
        return z
    return np.where(u < p, effect + z, z)


def _stage_means(
    treat: np.ndarray, ctrl: np.ndarray, estimate_sigma: bool
) -> np.ndarray:
    """Standardized treatment-arm means, one per replication row."""
    mu_c = ctrl.mean(axis=1, keepdims=True)
    if estimate_sigma:
        sd_c = ctrl.std(axis=1, ddof=1, keepdims=True)
    else:
        sd_c = 1.0
    return ((treat - mu_c) / sd_c).mean(axis=1)


def simulate_center(
    design: TwoStageDesign,
    point: MixturePoint,
    delta: float = 0.0,
    rng: Optional[np.random.Generator] = None,
    estimate_sigma: bool = True,
) -> CenterResult:
    """Runs one center once; draws stage-wise (treatment, control, mixture)."""
    rng = rng if rng is not None else np.random.default_rng()
    d = design
    effect = point.mu + delta * rng.standard_normal() if delta > 0.0 else point.mu
    z_t = rng.standard_normal(d.n1)
    z_c = rng.standard_normal(d.n1)
    u = rng.random(d.n1)
    treat = _mixture_sample(z_t, u, effect, point.p)
    x1 = float(_stage_means(treat[None, :], z_c[None, :], estimate_sigma)[0])
    if not d.eta0 <= x1 <= d.eta1:
        return CenterResult(
            p_value=1.0 - _ndtr_scalar(x1 * math.sqrt(d.n1 / 2.0)),
            stopped_early=True,
            stage1_mean=x1,
            stage2_mean=None,
            n_stage1=d.n1,
            n_stage2=0,
        )
    z_t2 = rng.standard_normal(d.n2)
    z_c2 = rng.standard_normal(d.n2)
    u2 = rng.random(d.n2)
    treat2 = _mixture_sample(z_t2, u2, effect, point.p)
    x2 = float(_stage_means(treat2[None, :], z_c2[None, :], estimate_sigma)[0])
    p = float(
        kernels.pvalue2(d.n1, d.eta0, d.eta1, d.n2, d.alpha1, np.array([x1]), np.array([x2]))[0]
    )
    return CenterResult(
        p_value=p,
        stopped_early=False,
        stage1_mean=x1,
        stage2_mean=x2,
        n_stage1=d.n1,
        n_stage2=d.n2,
    )


def _ndtr_scalar(x: float) -> float:
    from scipy.special import ndtr

    return float(ndtr(x))


def _center_pvalues(
    design: TwoStageDesign,
    point: MixturePoint,
    delta: float,
    replications: int,
    seed: int,
    center: int,
    estimate_sigma: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Vector of final p-values (and early-stop flags) for one center."""
    d = design
    s_t1 = _stream(seed, center, 1, _ROLE_TREAT)
    s_c1 = _stream(seed, center, 1, _ROLE_CONTROL)
    s_u1 = _stream(seed, center, 1, _ROLE_MIX)
    s_t2 = _stream(seed, center, 2, _ROLE_TREAT)
    s_c2 = _stream(seed, center, 2, _ROLE_CONTROL)
    s_u2 = _stream(seed, center, 2, _ROLE_MIX)
    s_eff = _stream(seed, center, 1, _ROLE_EFFECT)

    from scipy.special import ndtr

    pvals = np.empty(replications)
    stopped = np.empty(replications, dtype=bool)
    for i in range(0, replications, _CHUNK):
        r = min(_CHUNK, replications - i)
        if delta > 0.0:
            effect = (point.mu + delta * s_eff.standard_normal((r, 1)))
        else:
            effect = point.mu
        treat = _mixture_sample(
            s_t1.standard_normal((r, d.n1)), s_u1.random((r, d.n1)), effect, point.p
        )
        x1 = _stage_means(treat, s_c1.standard_normal((r, d.n1)), estimate_sigma)
        treat2 = _mixture_sample(
            s_t2.standard_normal((r, d.n2)), s_u2.random((r, d.n2)), effect, point.p
        )
        x2 = _stage_means(treat2, s_c2.standard_normal((r, d.n2)), estimate_sigma)
        early = (x1 < d.eta0) | (x1 > d.eta1)
        p = np.empty(r)
        p[early] = 1.0 - ndtr(x1[early] * math.sqrt(d.n1 / 2.0))
        if np.any(~early):
            p[~early] = kernels.pvalue2(
                d.n1, d.eta0, d.eta1, d.n2, d.alpha1, x1[~early], x2[~early]
            )
        pvals[i : i + r] = p
        stopped[i : i + r] = early
    return pvals, stopped


def _stepup_rejections(pvals: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Vectorized step-up rule: boolean rejection matrix, one row per rep."""
    n = pvals.shape[1]
    order = np.argsort(pvals, axis=1, kind="stable")
    sp = np.take_along_axis(pvals, order, axis=1)
    ok = sp <= thresholds[None, :]
    any_ok = ok.any(axis=1)
    last = n - 1 - np.argmax(ok[:, ::-1], axis=1)
    cutoff = np.where(
        any_ok, np.take_along_axis(sp, last[:, None], axis=1)[:, 0], -np.inf
    )
    return pvals <= cutoff[:, None]


def multicenter_pvalues(
    design: MulticenterDesign,
    points: Sequence[MixturePoint],
    delta: float,
    replications: int,
    seed: int,
    estimate_sigma: bool = True,
) -> np.ndarray:
    """Matrix of per-center p-values, shape (replications, M)."""
    if len(points) != design.n_centers:
        raise ValueError("need one alternative per center")
    out = np.empty((replications, design.n_centers))
    for c, pt in enumerate(points):
        out[:, c], _ = _center_pvalues(
            design.center_design, pt, delta, replications, seed, c, estimate_sigma
        )
    return out


def empirical_beta_fw(
    config: SimulationConfig,
    design: MulticenterDesign,
    estimate_sigma: bool = True,
) -> ErrorTable:
    """Simulated family-wise type II error frequencies for m = 1..M1.

    The first M1 centers carry the strong effect, the rest are true nulls;
    each replication applies the step-up rule to the M final p-values and
    counts how many strong centers were not rejected.
    """
    if config.n_centers != design.n_centers:
        raise ValueError("config.n_centers does not match the design")
    null = MixturePoint(0.0, 0.0)
    points = [
        config.strong_point if c < config.n_strong else null
        for c in range(config.n_centers)
    ]
    pvals = multicenter_pvalues(
        design, points, config.delta, config.replications, config.seed, estimate_sigma
    )
    rej = _stepup_rejections(pvals, np.array(design.procedure.thresholds))
    failures = config.n_strong - rej[:, : config.n_strong].sum(axis=1)
    entries = {
        (config.n_strong, m): float(np.mean(failures >= m))
        for m in range(1, config.n_strong + 1)
    }
    return ErrorTable(
        kind="empirical",
        n_centers=config.n_centers,
        entries=entries,
        replications=config.replications,
        seed=config.seed,
        delta=config.delta,
    )


def empirical_type1(
    design: Union[TwoStageDesign, MulticenterDesign],
    replications: int,
    seed: int,
    estimate_sigma: bool = True,
) -> float:
    """All-null rejection frequency (any rejection, for multicenter)."""
    null = MixturePoint(0.0, 0.0)
    if isinstance(design, MulticenterDesign):
        pvals = multicenter_pvalues(
            design,
            [null] * design.n_centers,
            0.0,
            replications,
            seed,
            estimate_sigma,
        )
        rej = _stepup_rejections(pvals, np.array(design.procedure.thresholds))
        return float(np.mean(rej.any(axis=1)))
    pvals, _ = _center_pvalues(design, null, 0.0, replications, seed, 0, estimate_sigma)
    return float(np.mean(pvals < design.alpha))
