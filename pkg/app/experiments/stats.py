"""
Summary and Pairwise Statistics
Per-condition mean/SD across seeds, Cohen's d with the averaged-variance
denominator, and the two-sample t-test (pooled by default, Welch on request).
"""
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel
from scipy.special import betainc

from app.core.exceptions import InsufficientSampleError
from app.experiments.conditions import Condition


# (first, second): Δ = mean(first) - mean(second)
PAIRWISE_PLAN: List[Tuple[Condition, Condition]] = [
    (Condition.CLOSED_LOOP, Condition.LLM_MAPPING),
    (Condition.CLOSED_LOOP, Condition.BLACK_BOX),
    (Condition.CLOSED_LOOP, Condition.FIXED_POLICY),
    (Condition.BLACK_BOX, Condition.FIXED_POLICY),
    (Condition.LLM_MAPPING, Condition.FIXED_POLICY),
    (Condition.CLOSED_LOOP, Condition.BASELINE),
]


class GroupSummary(BaseModel):
    n: int
    mean: float
    sd: Optional[float] = None  # absent below two observations
    min: float
    max: float


class TTestResult(BaseModel):
    t_statistic: float
    df: float
    p_value: float
    equal_var: bool = True


class PairwiseComparison(BaseModel):
    group_a: str
    group_b: str
    mean_a: float
    mean_b: float
    mean_diff: float
    improvement_pct: Optional[float] = None
    cohens_d: float
    t_statistic: float
    df: float
    p_value: float
    n_per_group: int
    equal_var: bool = True

    @property
    def significance(self) -> str:
        if self.p_value < 0.001:
            return "***"
        if self.p_value < 0.01:
            return "**"
        if self.p_value < 0.05:
            return "*"
        return ""


def _sample(values: Iterable[float], name: str) -> np.ndarray:
    arr = np.asarray(list(values), dtype=float)
    if arr.size < 2:
        raise InsufficientSampleError(f"{name} needs at least 2 observations, got {arr.size}")
    return arr


def summarize(values: Sequence[float]) -> GroupSummary:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise InsufficientSampleError("cannot summarise an empty sample")
    return GroupSummary(
        n=int(arr.size),
        mean=float(arr.mean()),
        sd=float(arr.std(ddof=1)) if arr.size >= 2 else None,
        min=float(arr.min()),
        max=float(arr.max()),
    )


def cohens_d(group_a: Sequence[float], group_b: Sequence[float]) -> float:
    """(mean_a - mean_b) / sqrt((sd_a^2 + sd_b^2) / 2), sample SDs"""
    a = _sample(group_a, "group_a")
    b = _sample(group_b, "group_b")
    diff = float(a.mean() - b.mean())
    spread = math.sqrt((a.var(ddof=1) + b.var(ddof=1)) / 2.0)
    if spread == 0.0:
        if diff == 0.0:
            return 0.0
        return math.copysign(math.inf, diff)
    return diff / spread


def t_distribution_two_sided(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with df degrees of freedom"""
    if df <= 0:
        raise InsufficientSampleError(f"degrees of freedom must be positive, got {df}")
    if math.isinf(t):
        return 0.0
    return float(betainc(df / 2.0, 0.5, df / (df + t * t)))


def two_sample_t(group_a: Sequence[float], group_b: Sequence[float], equal_var: bool = True) -> TTestResult:
    a = _sample(group_a, "group_a")
    b = _sample(group_b, "group_b")
    na, nb = a.size, b.size
    va, vb = a.var(ddof=1), b.var(ddof=1)
    diff = float(a.mean() - b.mean())

    if equal_var:
        df = float(na + nb - 2)
        pooled = ((na - 1) * va + (nb - 1) * vb) / df
        se = math.sqrt(pooled * (1.0 / na + 1.0 / nb))
    else:
        qa, qb = va / na, vb / nb
        se = math.sqrt(qa + qb)
        denom = qa * qa / (na - 1) + qb * qb / (nb - 1)
        df = float((qa + qb) ** 2 / denom) if denom > 0 else float(na + nb - 2)

    if se == 0.0:
        t = 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    else:
        t = diff / se
    return TTestResult(t_statistic=t, df=df, p_value=t_distribution_two_sided(t, df), equal_var=equal_var)


def t_test_two_sample(group_a: Sequence[float], group_b: Sequence[float], equal_var: bool = True) -> float:
    """Two-sided p-value; Student's pooled variance unless equal_var=False (Welch)"""
    return two_sample_t(group_a, group_b, equal_var).p_value


def compare_groups(
    label_a: str,
    group_a: Sequence[float],
    label_b: str,
    group_b: Sequence[float],
    equal_var: bool = True,
) -> PairwiseComparison:
    """
    One table row. improvement_pct = |Δ| / mean_b * 100, reported only when
    group a has the lower (better) mean.
    """
    test = two_sample_t(group_a, group_b, equal_var)
    mean_a = float(np.mean(group_a))
    mean_b = float(np.mean(group_b))
    diff = mean_a - mean_b
    improvement = abs(diff) / mean_b * 100.0 if diff < 0 and mean_b != 0 else None
    return PairwiseComparison(
        group_a=label_a,
        group_b=label_b,
        mean_a=mean_a,
        mean_b=mean_b,
        mean_diff=diff,
        improvement_pct=improvement,
        cohens_d=cohens_d(group_a, group_b),
        t_statistic=test.t_statistic,
        df=test.df,
        p_value=test.p_value,
        n_per_group=min(len(group_a), len(group_b)),
        equal_var=equal_var,
    )


def summary_table(finals: Dict[Condition, List[float]]) -> Dict[str, GroupSummary]:
    """Per-condition mean/SD/min/max keyed by condition value, in enum order"""
    return {
        condition.value: summarize(finals[condition])
        for condition in Condition
        if finals.get(condition)
    }


def pairwise_table(finals: Dict[Condition, List[float]], equal_var: bool = True) -> List[PairwiseComparison]:
    """Rows of PAIRWISE_PLAN whose two groups both have >= 2 observations"""
    rows = []
    for first, second in PAIRWISE_PLAN:
        a, b = finals.get(first, []), finals.get(second, [])
        if len(a) < 2 or len(b) < 2:
            continue
        rows.append(compare_groups(first.label, a, second.label, b, equal_var))
    return rows


def two_point_sample(mean: float, sd: float, n: int = 4) -> List[float]:
    """
    Symmetric sample of even size n with exactly this mean and sample SD
    (half the values at mean - a, half at mean + a).
    """
    if n < 2 or n % 2:
        raise InsufficientSampleError(f"two-point sample needs an even n >= 2, got {n}")
    a = sd * math.sqrt((n - 1) / n)
    half = n // 2
    return [mean - a] * half + [mean + a] * half
