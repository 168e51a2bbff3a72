"""Step-up multiple testing across centers, multicenter planning, and the
family-wise type II error table (bounds and exact enumeration).

All centers run the same two-stage design; their final p-values are combined
by a step-up procedure (Hochberg by default).  A family-wise type II error of
order (M1, m) means at least m of the M1 strong-effect centers fail to
reject.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ResourceLimitError
from .model import EXACT, EvaluationMode, MixturePoint, StrongEffectRegion
from .one_stage import OneStageDesign, plan_one_stage
from .two_stage import TwoStageDesign, beta2, beta2_se, plan_two_stage

ENUMERATION_CAP = 7


@dataclass(frozen=True)
class StepUpProcedure:
    """Ordered rejection thresholds alpha(1) <= ... <= alpha(M)."""

    kind: str
    alpha: float
    thresholds: tuple[float, ...]

    def __post_init__(self):
        if len(self.thresholds) < 1:
            raise ValueError("at least one threshold required")
        if any(not 0.0 < t < 1.0 for t in self.thresholds):
            raise ValueError("thresholds must lie in (0, 1)")
        if any(b < a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValueError("thresholds must be non-decreasing")

    @property
    def n_centers(self) -> int:
        return len(self.thresholds)

    @classmethod
    def hochberg(cls, n_centers: int, alpha: float) -> "StepUpProcedure":
        t = tuple(alpha / (n_centers + 1 - k) for k in range(1, n_centers + 1))
        return cls("hochberg", alpha, t)

    @classmethod
    def benjamini_hochberg(cls, n_centers: int, alpha: float) -> "StepUpProcedure":
        t = tuple(k * alpha / n_centers for k in range(1, n_centers + 1))
        return cls("benjamini_hochberg", alpha, t)

    @classmethod
    def bonferroni(cls, n_centers: int, alpha: float) -> "StepUpProcedure":
        return cls("bonferroni", alpha, tuple([alpha / n_centers] * n_centers))

    @classmethod
    def custom(cls, thresholds: Sequence[float], alpha: Optional[float] = None) -> "StepUpProcedure":
        t = tuple(float(x) for x in thresholds)
        return cls("custom", float(alpha if alpha is not None else t[-1]), t)

    @classmethod
    def of_kind(cls, kind: str, n_centers: int, alpha: float) -> "StepUpProcedure":
        makers = {
            "hochberg": cls.hochberg,
            "benjamini_hochberg": cls.benjamini_hochberg,
            "bonferroni": cls.bonferroni,
        }
        if kind not in makers:
            raise ValueError(f"unknown procedure kind {kind!r}; expected one of {sorted(makers)}")
        return makers[kind](n_centers, alpha)

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "alpha": self.alpha,
                "M": self.n_centers,
                "thresholds": list(self.thresholds),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "StepUpProcedure":
        d = json.loads(text)
        proc = cls(kind=d["kind"], alpha=float(d["alpha"]), thresholds=tuple(d["thresholds"]))
        if "M" in d and int(d["M"]) != proc.n_centers:
            raise ValueError("threshold count does not match M")
        return proc


def apply_step_up(p_values: Sequence[float], procedure: StepUpProcedure) -> tuple[int, ...]:
    """Center indices rejected by the step-up rule.

    p-values are sorted ascending (ties broken by original index); the rule
    finds the largest k with p(k) <= alpha(k) and rejects the k smallest.
    """
    m = procedure.n_centers
    if len(p_values) != m:
        raise ValueError(f"expected {m} p-values, got {len(p_values)}")
    order = sorted(range(m), key=lambda i: (p_values[i], i))
    best_k = 0
    for k in range(1, m + 1):
        if p_values[order[k - 1]] <= procedure.thresholds[k - 1]:
            best_k = k
    return tuple(sorted(order[:best_k]))


def step_up_report(
    p_values: Sequence[float], procedure: StepUpProcedure, alpha1: Optional[float] = None
) -> dict:
    """Rejection set plus the centers whose early stop did not settle them.

    A center that stopped at stage 1 for efficacy (p-value below alpha1) can
    still land above its own rank threshold; its fate then hinges on the
    other centers' results.  Those centers are listed as deferred so reports
    can mark them.
    """
    rejected = apply_step_up(p_values, procedure)
    deferred: list[int] = []
    if alpha1 is not None:
        order = sorted(range(len(p_values)), key=lambda i: (p_values[i], i))
        for rank, i in enumerate(order, start=1):
            if p_values[i] <= alpha1 and p_values[i] > procedure.thresholds[rank - 1]:
                deferred.append(i)
    return {"rejected": list(rejected), "deferred": sorted(deferred)}


def per_center_targets(
    n_centers: int, alpha: float, beta_max: float, procedure_kind: str = "hochberg"
) -> tuple[float, float]:
    """Per-center (type I, type II) targets controlling the family-wise rates.

    Controlling the probability that any strong-effect center is missed at
    beta_max is equivalent to a per-center type II rate of
    ``1 - (1 - beta_max)^(1/M)`` evaluated at the largest threshold alpha(M).
    """
    if n_centers < 1:
        raise ValueError("n_centers must be positive")
    if not 0.0 < beta_max < 1.0 - 0.5**n_centers:
        raise ValueError(
            f"beta_max must be in (0, 1 - 0.5^M) = (0, {1.0 - 0.5 ** n_centers:.6g}) "
            f"for M={n_centers}, got {beta_max}"
        )
    proc = StepUpProcedure.of_kind(procedure_kind, n_centers, alpha)
    return proc.thresholds[-1], 1.0 - (1.0 - beta_max) ** (1.0 / n_centers)


@dataclass(frozen=True)
class MulticenterDesign:
    """Identical two-stage designs across centers plus the step-up rule."""

    procedure: StepUpProcedure
    center_design: TwoStageDesign
    beta_M_se: float

    @property
    def n_centers(self) -> int:
        return self.procedure.n_centers

    def to_json(self) -> str:
        return json.dumps(
            {
                "procedure": json.loads(self.procedure.to_json()),
                "center_design": json.loads(self.center_design.to_json()),
                "beta_M_se": self.beta_M_se,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "MulticenterDesign":
        d = json.loads(text)
        return cls(
            procedure=StepUpProcedure.from_json(json.dumps(d["procedure"])),
            center_design=TwoStageDesign.from_json(json.dumps(d["center_design"])),
            beta_M_se=float(d["beta_M_se"]),
        )


def plan_multicenter(
    n_centers: int,
    region: StrongEffectRegion,
    alpha: float,
    beta_max: float,
    n1: int,
    alpha0: float,
    procedure_kind: str = "hochberg",
    mode: EvaluationMode = "approximate",
) -> MulticenterDesign:
    """Plans the common center design against the per-center targets.

    Each center is a two-stage trial at level alpha(M) with type II target
    ``1 - (1-beta_max)^(1/M)``; for Bonferroni the constraint alpha1 < alpha/M
    holds automatically because alpha(M) = alpha/M.
    """
    alpha_m, beta_m = per_center_targets(n_centers, alpha, beta_max, procedure_kind)
    proc = StepUpProcedure.of_kind(procedure_kind, n_centers, alpha)
    center = plan_two_stage(region, alpha_m, beta_m, n1, alpha0, mode=mode)
    return MulticenterDesign(procedure=proc, center_design=center, beta_M_se=beta_m)


def plan_multicenter_one_stage(
    n_centers: int,
    region: StrongEffectRegion,
    alpha: float,
    beta_max: float,
    procedure_kind: str = "hochberg",
    mode: EvaluationMode = EXACT,
) -> OneStageDesign:
    """Per-center one-stage plan at the multicenter targets (for comparison)."""
    alpha_m, beta_m = per_center_targets(n_centers, alpha, beta_max, procedure_kind)
    return plan_one_stage(region, alpha_m, beta_m, mode)


def beta_j_se(
    design: MulticenterDesign,
    j: int,
    region: StrongEffectRegion,
    mode: EvaluationMode = EXACT,
) -> float:
    """Worst-case per-center type II error at the j-th threshold."""
    if not 1 <= j <= design.n_centers:
        raise ValueError(f"j must be in 1..{design.n_centers}")
    return beta2_se(design.center_design, design.procedure.thresholds[j - 1], region, mode)


def beta_fw_bound(
    design: MulticenterDesign,
    region: StrongEffectRegion,
    m_strong: int,
    m_missed: int,
    mode: EvaluationMode = EXACT,
) -> float:
    """Upper bound ``1 - (1 - beta_j)^j`` with j = M1 + 1 - m.

    Exact (not just a bound) when all centers carry strong effects and a
    single miss already counts as the error.
    """
    _check_triangle(design.n_centers, m_strong, m_missed)
    j = m_strong + 1 - m_missed
    b = beta_j_se(design, j, region, mode)
    return 1.0 - (1.0 - b) ** j


def _check_triangle(n_centers: int, m_strong: int, m_missed: int) -> None:
    if not 1 <= m_missed <= m_strong <= n_centers:
        raise ValueError(
            f"need 1 <= m <= M1 <= M, got m={m_missed}, M1={m_strong}, M={n_centers}"
        )


def _compositions(total: int, parts: int):
    """Weak compositions of `total` into `parts` ordered non-negative counts."""
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        comp = []
        for c in cuts:
            comp.append(c - prev - 1)
            prev = c
        comp.append(total + parts - 2 - prev)
        yield tuple(comp)


def _class_outcomes(survival: Sequence[float], count: int, n_intervals: int):
    """Per-class interval count patterns with probability and cumulatives.

    ``survival[j]`` is P(p-value >= alpha(j)) for j = 1..M (prepended 1,
    appended 0); class members are exchangeable so only interval counts
    matter, weighted by the multinomial coefficient.
    """
    s = [1.0] + list(survival) + [0.0]
    masses = [s[j - 1] - s[j] for j in range(1, n_intervals + 1)]
    out = []
    for comp in _compositions(count, n_intervals):
        prob = float(math.factorial(count))
        for c, w in zip(comp, masses):
            if c:
                if w <= 0.0:
                    prob = 0.0
                    break
                prob *= w**c / math.factorial(c)
        if prob == 0.0:
            continue
        cum = list(itertools.accumulate(comp))
        out.append((comp, prob, cum))
    return out


def _beta_fw_from_survival(
    strong_survival: Sequence[float],
    null_survival: Sequence[float],
    n_centers: int,
    m_strong: int,
    m_missed: int,
) -> float:
    """Family-wise type II probability from per-class survival curves.

    Sums the probability of every arrangement of p-values over the threshold
    intervals for which the step-up rule rejects fewer than M1 + 1 - m of the
    strong centers; strong and null centers collapse to interval counts.
    """
    n_int = n_centers + 1
    strong = _class_outcomes(strong_survival, m_strong, n_int)
    nulls = _class_outcomes(null_survival, n_centers - m_strong, n_int)
    total = 0.0
    for s_comp, s_prob, s_cum in strong:
        # smallest j with fewer than m strong p-values above alpha(j)
        jt = next(
            j for j in range(1, n_int + 1) if m_strong - s_cum[j - 1] < m_missed
        )
        for t_comp, t_prob, t_cum in nulls:
            err = True
            for j in range(jt, n_centers + 1):
                if s_cum[j - 1] + t_cum[j - 1] >= j:
                    err = False
                    break
            if err:
                total += s_prob * t_prob
    return total


def _strong_survival(
    center_design: TwoStageDesign,
    procedure: StepUpProcedure,
    strong_point: MixturePoint,
    mode: EvaluationMode,
) -> list[float]:
    return [beta2(center_design, t, strong_point, mode) for t in procedure.thresholds]


def beta_fw_exact(
    design: MulticenterDesign,
    strong_point: MixturePoint,
    m_strong: int,
    m_missed: int,
    procedure: Optional[StepUpProcedure] = None,
    mode: EvaluationMode = EXACT,
    enumeration_cap: int = ENUMERATION_CAP,
) -> float:
    """Exact family-wise type II error with M1 centers at ``strong_point``.

    The remaining centers are true nulls with uniform p-values.  Passing a
    ``procedure`` evaluates a different step-up rule against the same center
    design (the planned rule is the default).

    Raises:
        ResourceLimitError: when the center count exceeds the enumeration
            cap; use the simulation engine for larger trials.
    """
    proc = procedure if procedure is not None else design.procedure
    n_centers = proc.n_centers
    _check_triangle(n_centers, m_strong, m_missed)
    if n_centers > enumeration_cap:
        raise ResourceLimitError(
            f"exact enumeration is capped at M={enumeration_cap} centers "
            f"(requested {n_centers}); use the Monte Carlo engine instead"
        )
    strong = _strong_survival(design.center_design, proc, strong_point, mode)
    nulls = [1.0 - t for t in proc.thresholds]
    return _beta_fw_from_survival(strong, nulls, n_centers, m_strong, m_missed)


@dataclass(frozen=True)
class ErrorTable:
    """Triangular (M1, m) table of family-wise type II errors."""

    kind: str
    n_centers: int
    entries: dict[tuple[int, int], float] = field(compare=False)
    replications: Optional[int] = None
    seed: Optional[int] = None
    delta: Optional[float] = None

    def value(self, m_strong: int, m_missed: int) -> float:
        return self.entries[(m_strong, m_missed)]

    def to_csv(self) -> str:
        extra = self.replications is not None
        header = "M1,m,value,kind" + (",replications,seed,delta" if extra else "")
        lines = [header]
        for (m1, m), v in sorted(self.entries.items()):
            row = f"{m1},{m},{v:.6f},{self.kind}"
            if extra:
                row += f",{self.replications},{self.seed},{self.delta}"
            lines.append(row)
        return "\n".join(lines) + "\n"


def beta_fw_table(
    design: MulticenterDesign,
    strong_point: MixturePoint,
    procedure: Optional[StepUpProcedure] = None,
    mode: EvaluationMode = EXACT,
    enumeration_cap: int = ENUMERATION_CAP,
) -> ErrorTable:
    """Exact error table over the full triangle 1 <= m <= M1 <= M."""
    proc = procedure if procedure is not None else design.procedure
    n_centers = proc.n_centers
    if n_centers > enumeration_cap:
        raise ResourceLimitError(
            f"exact enumeration is capped at M={enumeration_cap} centers "
            f"(requested {n_centers}); use the Monte Carlo engine instead"
        )
    strong = _strong_survival(design.center_design, proc, strong_point, mode)
    nulls = [1.0 - t for t in proc.thresholds]
    entries = {}
    for m1 in range(1, n_centers + 1):
        for m in range(1, m1 + 1):
            entries[(m1, m)] = _beta_fw_from_survival(strong, nulls, n_centers, m1, m)
    return ErrorTable(kind="exact", n_centers=n_centers, entries=entries)


def beta_fw_bound_table(
    design: MulticenterDesign,
    region: StrongEffectRegion,
    mode: EvaluationMode = EXACT,
) -> ErrorTable:
    """Closed-form upper-bound table over the full triangle."""
    n_centers = design.n_centers
    entries = {}
    for m1 in range(1, n_centers + 1):
        for m in range(1, m1 + 1):
            entries[(m1, m)] = beta_fw_bound(design, region, m1, m, mode)
    return ErrorTable(kind="bound", n_centers=n_centers, entries=entries)
