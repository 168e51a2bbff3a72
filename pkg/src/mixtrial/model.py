"""Mixture response model, the region of strong effect, and single-test
error rates.

The treatment-arm response is modelled as a two-component normal mixture:
a fraction ``p`` of subjects (drug responders) shifts by the standardized
effect ``mu`` while the rest behave like controls.  Everything downstream
(one-stage, two-stage and multicenter planning) is built on the exact and
CLT-approximate false-negative probabilities defined here.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy.special import logsumexp, ndtr, ndtri

from . import kernels

EvaluationMode = Literal["exact", "approximate"]

EXACT: EvaluationMode = "exact"
APPROXIMATE: EvaluationMode = "approximate"


def _check_mode(mode: str) -> bool:
    """Returns True for exact mode; raises on anything unknown."""
    if mode == EXACT:
        return True
    if mode == APPROXIMATE:
        return False
    raise ValueError(f"mode must be 'exact' or 'approximate', got {mode!r}")


def gaussian_cdf(x: float) -> float:
    """Standard normal distribution function."""
    return float(ndtr(x))


def gaussian_pdf(x: float) -> float:
    """Standard normal density."""
    return float(np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi))


def gaussian_quantile(q: float) -> float:
    """Standard normal quantile; the argument must lie strictly in (0, 1)."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile argument must be in (0, 1), got {q}")
    return float(ndtri(q))


@dataclass(frozen=True)
class MixturePoint:
    """One alternative: standardized effect ``mu`` and responder prevalence ``p``."""

    mu: float
    p: float

    def __post_init__(self):
        if self.mu < 0.0:
            raise ValueError(f"mu must be non-negative, got {self.mu}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {self.p}")


@dataclass(frozen=True)
class StrongEffectRegion:
    """Staircase region of alternatives the trial must detect.

    ``corners`` is the ordered list of pairs (mu_i, p_i) with mu strictly
    decreasing and p strictly increasing; an implicit p_{s+1} = 1 closes the
    region.  A pair (mu, p) belongs to the region iff mu >= mu_i for the
    segment [p_i, p_{i+1}] containing p.
    """

    corners: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.corners) < 1:
            raise ValueError("region needs at least one corner")
        mus = [c[0] for c in self.corners]
        ps = [c[1] for c in self.corners]
        if any(m <= 0.0 for m in mus):
            raise ValueError("corner mu values must be positive")
        if any(m2 >= m1 for m1, m2 in zip(mus, mus[1:])):
            raise ValueError("corner mu values must be strictly decreasing")
        if not 0.0 < ps[0]:
            raise ValueError("corner p values must be positive")
        if ps[-1] > 1.0:
            raise ValueError("corner p values must not exceed 1")
        if any(p2 <= p1 for p1, p2 in zip(ps, ps[1:])):
            raise ValueError("corner p values must be strictly increasing")

    @classmethod
    def from_vectors(cls, mu: Sequence[float], p: Sequence[float]) -> "StrongEffectRegion":
        if len(mu) != len(p):
            raise ValueError("mu and p vectors must have equal length")
        return cls(tuple((float(m), float(q)) for m, q in zip(mu, p)))

    @property
    def mu(self) -> tuple[float, ...]:
        return tuple(c[0] for c in self.corners)

    @property
    def p(self) -> tuple[float, ...]:
        return tuple(c[1] for c in self.corners)

    def contains(self, mu: float, p: float) -> bool:
        """Membership test for the staircase set."""
        if p < self.p[0] or p > 1.0 or mu <= 0.0:
            return False
        required = self.mu[-1]
        for m_i, p_i in reversed(self.corners):
            if p >= p_i:
                required = m_i
                break
        return mu >= required

    def corner_points(self) -> tuple[MixturePoint, ...]:
        return tuple(MixturePoint(m, q) for m, q in self.corners)

    def to_json(self) -> str:
        return json.dumps({"mu": list(self.mu), "p": list(self.p)})

    @classmethod
    def from_json(cls, text: str) -> "StrongEffectRegion":
        data = json.loads(text)
        if not isinstance(data, dict) or "mu" not in data or "p" not in data:
            raise ValueError('region JSON must be an object {"mu": [...], "p": [...]}')
        return cls.from_vectors(data["mu"], data["p"])


def beta_single(n: int, eta: float, point: MixturePoint, mode: EvaluationMode = EXACT) -> float:
    """False-negative probability of the one-stage mean test.

    Exact mode evaluates the binomial mixture of normal tails; approximate
    mode uses the CLT normal with matched mean ``mu p`` and variance
    ``(2 + (1-p) p mu^2) / n``.

    Args:
        n: per-arm sample size (>= 1).
        eta: rejection threshold for the standardized mean.
        point: the alternative (mu, p); p = 0 reduces to the null.
        mode: "exact" or "approximate".
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if _check_mode(mode):
        return float(kernels.beta_mix(int(n), np.array([eta]), point.mu, point.p)[0])
    v = 2.0 + (1.0 - point.p) * point.p * point.mu**2
    return float(ndtr(np.sqrt(n) * (eta - point.mu * point.p) / np.sqrt(v)))


def one_stage_threshold(n: int, alpha: float) -> float:
    """Threshold eta giving type I error alpha for the one-stage test."""
    return gaussian_quantile(1.0 - alpha) * np.sqrt(2.0 / n)


def beta_se_one_stage(
    region: StrongEffectRegion, n: int, alpha: float, mode: EvaluationMode = EXACT
) -> float:
    """Maximum type II error over the region, evaluated at its corners only.

    Restricting to corners is exact: the false-negative probability is
    decreasing in both mu and p, so the staircase maximum sits at a corner.
    """
    eta = one_stage_threshold(n, alpha)
    return max(beta_single(n, eta, pt, mode) for pt in region.corner_points())


def binding_corner(
    region: StrongEffectRegion, n: int, alpha: float, mode: EvaluationMode = EXACT
) -> MixturePoint:
    """Corner attaining the maximum type II error; first corner wins ties."""
    eta = one_stage_threshold(n, alpha)
    best, best_val = None, -1.0
    for pt in region.corner_points():
        val = beta_single(n, eta, pt, mode)
        if val > best_val + 1e-15:
            best, best_val = pt, val
    return best


def likelihood_ratio_mean(xbar: float, n: int, point: MixturePoint) -> float:
    """Likelihood ratio of the standardized mean, alternative over null.

    Equals ``sum_k C(n,k) p^k (1-p)^(n-k) exp(xbar k mu / 2 - k^2 mu^2 / (4n))``;
    non-decreasing in xbar whenever mu > 0, which is what makes the mean test
    uniformly most powerful.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    k0, pmf = kernels.binom_pmf_window(int(n), point.p)
    k = np.arange(k0, k0 + len(pmf))
    expo = xbar * k * point.mu / 2.0 - (k * point.mu) ** 2 / (4.0 * n)
    with np.errstate(divide="ignore"):
        logterms = np.log(pmf) + expo
    return float(np.exp(logsumexp(logterms)))
