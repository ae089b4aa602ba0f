"""Benchmark statistics: binomial credible intervals and sim/real correlation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np
from scipy import stats

from ..errors import CorrelationError, DimensionError, ValidationError


logger = logging.getLogger(__name__)


def credible_interval(successes: int, trials: int, level: float = 0.95,
                      clamp_boundary: bool = False) -> Tuple[float, float]:
    """
    Equal-tailed interval of the Beta(s + 1/2, n - s + 1/2) posterior (Jeffreys prior).

    With clamp_boundary the lower bound is 0 when s == 0 and the upper bound 1 when
    s == n, so the interval always contains s/n.
    """
    if isinstance(successes, bool) or isinstance(trials, bool):
        raise ValidationError("successes and trials must be integers")
    s, n = int(successes), int(trials)
    if s != successes or n != trials:
        raise ValidationError("successes and trials must be integers")
    if n < 1:
        raise ValidationError(f"trials must be >= 1 (got {n})")
    if not 0 <= s <= n:
        raise ValidationError(f"successes must be in [0, {n}] (got {s})")
    if not 0.0 < level < 1.0:
        raise ValidationError(f"level must be in (0, 1) (got {level})")
    alpha = (1.0 - level) / 2.0
    post = stats.beta(s + 0.5, n - s + 0.5)
    lo = float(post.ppf(alpha))
    hi = float(post.isf(alpha))
    if clamp_boundary:
        if s == 0:
            lo = 0.0
        if s == n:
            hi = 1.0
    return max(lo, 0.0), min(hi, 1.0)


@dataclass(frozen=True)
class Correlation:
    pearson: float
    spearman: float
    r_squared: float
    n: int

    def as_dict(self) -> Dict[str, float]:
        return {"pearson": self.pearson, "spearman": self.spearman, "r_squared": self.r_squared, "n": self.n}


def _check_pair(x: Sequence[float], y: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.ndim != 1 or ya.ndim != 1 or xa.shape != ya.shape:
        raise DimensionError(f"x and y must be equal-length vectors (got {xa.shape} and {ya.shape})")
    if xa.size < 3:
        raise DimensionError(f"correlation needs at least 3 pairs (got {xa.size})")
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ya))):
        raise ValidationError("correlation inputs must be finite")
    if np.ptp(xa) == 0.0 or np.ptp(ya) == 0.0:
        raise CorrelationError("correlation is undefined for a constant input")
    return xa, ya


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    xa, ya = _check_pair(x, y)
    return float(stats.pearsonr(xa, ya)[0])


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of mid-ranks (ties averaged)."""
    xa, ya = _check_pair(x, y)
    return float(stats.pearsonr(stats.rankdata(xa), stats.rankdata(ya))[0])


def correlation(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """(Pearson R, Spearman rho)."""
    c = correlation_summary(x, y)
    return c.pearson, c.spearman


def correlation_summary(x: Sequence[float], y: Sequence[float]) -> Correlation:
    xa, ya = _check_pair(x, y)
    r = float(np.clip(stats.pearsonr(xa, ya)[0], -1.0, 1.0))
    rho = float(np.clip(stats.pearsonr(stats.rankdata(xa), stats.rankdata(ya))[0], -1.0, 1.0))
    return Correlation(r, rho, r * r, int(xa.size))


@dataclass(frozen=True)
class RateRow:
    key: str
    successes: int
    trials: int
    lo: float
    hi: float

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else math.nan


def rate_table(counts: Mapping[str, Tuple[int, int]], level: float = 0.95) -> list:
    """One RateRow per key (sorted) from {key: (successes, trials)}; keys without trials are skipped."""
    rows = []
    for key in sorted(counts):
        k, n = counts[key]
        if n < 1:
            logger.warning("no trials for %s; skipped", key)
            continue
        lo, hi = credible_interval(k, n, level)
        rows.append(RateRow(key, int(k), int(n), lo, hi))
    return rows


def paired_rates(sim: Mapping[str, float], real: Mapping[str, float]) -> Tuple[list, np.ndarray, np.ndarray]:
    """Aligns two {key: rate} maps; the key sets must match exactly."""
    if set(sim) != set(real):
        only_sim = sorted(set(sim) - set(real))
        only_real = sorted(set(real) - set(sim))
        raise ValidationError(f"sim/real keys differ (sim only: {only_sim}, real only: {only_real})")
    keys = sorted(sim)
    return keys, np.array([float(sim[k]) for k in keys]), np.array([float(real[k]) for k in keys])


__all__ = [
    "Correlation",
    "RateRow",
    "correlation",
    "correlation_summary",
    "credible_interval",
    "paired_rates",
    "pearson",
    "rate_table",
    "spearman",
]
