"""Point estimators and Monte Carlo comparison statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class StudyResult:
    average: float
    sd: float
    sd_reduction_pct: float
    ci_lower: float
    ci_upper: float

    @property
    def ci_length(self) -> float:
        return self.ci_upper - self.ci_lower


def _weights_and_responses(sample):
    if hasattr(sample, "observations"):
        obs = sample.observations
        return [o.weights for o in obs], [o.y for o in obs]
    weights, ys = sample
    return list(weights), list(ys)


def estimate_pros(sample, H: int) -> float:
    """Prorated PROS estimate of the proportion.

    Each response is spread over the rank columns by its weight vector; every
    column with positive total weight contributes its weighted mean of Y, and
    the estimate averages those column means. Evaluated exactly in rational
    arithmetic and rounded once, so with unit weight vectors and n
    observations per rank it returns the plain sample mean bit-for-bit.

    ``sample`` is a ReplicateSample or a ``(weights, responses)`` pair.
    """
    weights, ys = _weights_and_responses(sample)
    if not ys:
        raise ValueError("empty sample")
    num = [Fraction(0)] * H
    den = [Fraction(0)] * H
    for w, y in zip(weights, ys):
        w = np.asarray(w, dtype=float)
        if w.shape != (H,):
            raise ValueError(f"weight vector of length {w.shape[-1]}, expected {H}")
        y = int(y)
        for h in range(H):
            if w[h] != 0.0:
                f = Fraction(float(w[h]))
                den[h] += f
                if y:
                    num[h] += f
    cols = [n / d for n, d in zip(num, den) if d > 0]
    if not cols:
        raise ValueError("every rank column has zero total weight")
    return float(sum(cols) / len(cols))


def estimate_pros_batch(weights, ys) -> np.ndarray:
    """Float version of `estimate_pros` for stacked replicates.

    ``weights`` is (B, N, H) and ``ys`` is (B, N). Numerator and column totals
    share one reduction order, so all-ones responses give exactly 1.
    """
    weights = np.asarray(weights, dtype=float)
    ys = np.asarray(ys, dtype=float)
    den = weights.sum(axis=1)
    num = (weights * ys[..., None]).sum(axis=1)
    live = den > 0
    ratio = np.where(live, num / np.where(live, den, 1.0), 0.0)
    return ratio.sum(axis=-1) / live.sum(axis=-1)


def estimate_rss(sample) -> float:
    """Mean of the measured responses (the RSS, logistic-RSS and SRS estimator)."""
    if hasattr(sample, "observations"):
        ys = [o.y for o in sample.observations]
    else:
        ys = list(sample)
    if not ys:
        raise ValueError("empty sample")
    return sum(int(y) for y in ys) / len(ys)


def series_sd(values: Sequence[float]) -> float:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ValueError("need at least 2 replicate estimates for an SD")
    return float(np.std(v, ddof=1))


def srs_sd_analytic(p: float, population_size: int, m: int) -> float:
    """SD of the SRS-without-replacement proportion, with finite population correction."""
    if not 0 <= p <= 1:
        raise ValueError(f"proportion {p} outside [0, 1]")
    if population_size < 2:
        raise ValueError("population size must be at least 2")
    if not 1 <= m <= population_size:
        raise ValueError(f"sample size {m} outside 1..{population_size}")
    fpc = (population_size - m) / (population_size - 1)
    return math.sqrt(fpc * p * (1 - p) / m)


def sd_reduction(candidate_sd: float, baseline_sd: float) -> float:
    """Percent SD reduction of a candidate design relative to the baseline."""
    if not baseline_sd > 0:
        raise ValueError("baseline SD must be positive")
    return (1.0 - candidate_sd / baseline_sd) * 100.0


def relative_efficiency(var_a: float, var_b: float) -> float:
    """Variance ratio var_a / var_b.

    Read as a sample-size ratio: design b needs ``RE * N_a`` units to match
    the precision design a reaches with ``N_a``.
    """
    if not var_b > 0:
        raise ValueError("reference variance must be positive")
    return var_a / var_b


def empirical_ci(values: Sequence[float], coverage: float = 0.90) -> tuple[float, float]:
    """Equal-tailed empirical quantile interval (linear interpolation between order stats)."""
    v = np.asarray(values, dtype=float)
    if v.size < 20:
        raise ValueError(f"need at least 20 replicate estimates for a CI, got {v.size}")
    if not 0 < coverage < 1:
        raise ValueError("coverage must lie in (0, 1)")
    tail = round((1 - coverage) / 2, 12)  # 1 - 0.9 is not exactly 0.1
    lo, hi = np.quantile(v, [tail, 1 - tail], method="linear")
    return float(lo), float(hi)


def summarize(values, baseline_sd: float, coverage: float = 0.90) -> StudyResult:
    lo, hi = empirical_ci(values, coverage)
    sd = series_sd(values)
    return StudyResult(float(np.mean(values)), sd, sd_reduction(sd, baseline_sd), lo, hi)
