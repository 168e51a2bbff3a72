"""Planning and evaluation of the single-center one-stage design."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .model import (
    APPROXIMATE,
    EXACT,
    EvaluationMode,
    StrongEffectRegion,
    beta_se_one_stage,
    gaussian_cdf,
    gaussian_quantile,
    one_stage_threshold,
)


@dataclass(frozen=True)
class OneStageDesign:
    """Reject when the standardized mean exceeds ``eta``; n subjects per arm."""

    n: int
    alpha: float
    eta: float

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "alpha": self.alpha, "eta": self.eta})

    @classmethod
    def from_json(cls, text: str) -> "OneStageDesign":
        d = json.loads(text)
        return cls(n=int(d["n"]), alpha=float(d["alpha"]), eta=float(d["eta"]))


def _validate_rates(alpha: float, beta_max: float) -> None:
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must be in (0, 0.5), got {alpha}")
    if not 0.0 < beta_max < 0.5:
        raise ValueError(f"beta_max must be in (0, 0.5), got {beta_max}")


def approximate_sample_size(
    region: StrongEffectRegion, alpha: float, beta_max: float
) -> float:
    """CLT estimate of the required per-arm size (not rounded).

    Maximizes ``((sqrt(2) z_{1-a} + z_{1-b} sqrt(2 + (1-p) p mu^2)) / (mu p))^2``
    over the region corners.
    """
    _validate_rates(alpha, beta_max)
    za = gaussian_quantile(1.0 - alpha)
    zb = gaussian_quantile(1.0 - beta_max)
    best = 0.0
    for mu, p in region.corners:
        v = 2.0 + (1.0 - p) * p * mu * mu
        best = max(best, ((math.sqrt(2.0) * za + zb * math.sqrt(v)) / (mu * p)) ** 2)
    return best


def plan_one_stage(
    region: StrongEffectRegion,
    alpha: float,
    beta_max: float,
    mode: EvaluationMode = EXACT,
) -> OneStageDesign:
    """Minimal per-arm sample size meeting the type II constraint.

    Walks locally from the CLT estimate (the maximum error over the region
    decreases in n, so the walk finds the exact minimum in a few steps).
    """
    _validate_rates(alpha, beta_max)
    n = max(1, int(math.floor(approximate_sample_size(region, alpha, beta_max))) - 5)
    if beta_se_one_stage(region, n, alpha, mode) <= beta_max:
        while n > 1 and beta_se_one_stage(region, n - 1, alpha, mode) <= beta_max:
            n -= 1
    else:
        while beta_se_one_stage(region, n, alpha, mode) > beta_max:
            n += 1
    return OneStageDesign(n=n, alpha=alpha, eta=one_stage_threshold(n, alpha))


def one_stage_p_value(xbar: float, n: int) -> float:
    """p-value of the observed standardized mean: 1 - Phi(xbar sqrt(n/2))."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    return 1.0 - gaussian_cdf(xbar * np.sqrt(n / 2.0))
