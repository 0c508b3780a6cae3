"""Small Monte Carlo statistics helpers shared across modules."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["MCEstimate", "two_sample_z", "wilson_lower", "wilson_upper"]


@dataclass(frozen=True)
class MCEstimate:
    """A Monte Carlo point estimate with its standard error and sample size."""

    mean: float
    stderr: float
    reps: int

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("an estimate needs at least one replicate")
        if self.stderr < 0:
            raise ValueError("standard error cannot be negative")

    @classmethod
    def from_samples(cls, x) -> "MCEstimate":
        x = np.asarray(x, dtype=np.float64)
        n = len(x)
        if n < 2:
            raise ValueError("need at least two samples for a standard error")
        return cls(float(x.mean()), float(x.std(ddof=1) / math.sqrt(n)), n)

    @classmethod
    def from_binary(cls, successes: int, n: int) -> "MCEstimate":
        if n < 2:
            raise ValueError("need at least two trials")
        phat = successes / n
        # Bessel-corrected, so this agrees exactly with from_samples on 0/1 data
        return cls(phat, math.sqrt(phat * (1.0 - phat) / (n - 1)), n)

    def as_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "reps": self.reps}


def two_sample_z(a: MCEstimate, b: MCEstimate) -> float:
    """Unpooled two-sample z score (a - b).  Zero spread and zero gap give 0."""
    denom = math.sqrt(a.stderr**2 + b.stderr**2)
    diff = a.mean - b.mean
    if denom == 0.0:
        return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    return diff / denom


# Normal quantiles used by the Wilson score bounds.
_Z_FOR_CONF = {0.95: 1.6448536269514722, 0.99: 2.3263478740408408}


def _z_quantile(conf: float) -> float:
    if conf in _Z_FOR_CONF:
        return _Z_FOR_CONF[conf]
    # Acklam-style inverse normal for other confidence levels; accuracy far
    # beyond what a confidence bound needs.
    p = conf
    a = [-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
         1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00]
    b = [-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
         6.680131188771972e01, -1.328068155288572e01]
    c = [-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
         -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00]
    d = [7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
         3.754408661907416e00]
    plow, phigh = 0.02425, 1 - 0.02425
    if p < plow:
        q = math.sqrt(-2 * math.log(p))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1)
    if p <= phigh:
        q = p - 0.5
        r = q * q
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1)
    q = math.sqrt(-2 * math.log(1 - p))
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1)


def wilson_lower(successes: int, n: int, conf: float = 0.99) -> float:
    """Wilson score lower confidence bound for a binomial proportion."""
    if n < 1:
        raise ValueError("need at least one trial")
    z = _z_quantile(conf)
    phat = successes / n
    denom = 1.0 + z * z / n
    center = phat + z * z / (2 * n)
    rad = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4 * n * n))
    return max(0.0, (center - rad) / denom)


def wilson_upper(successes: int, n: int, conf: float = 0.99) -> float:
    """Wilson score upper confidence bound for a binomial proportion."""
    if n < 1:
        raise ValueError("need at least one trial")
    z = _z_quantile(conf)
    phat = successes / n
    denom = 1.0 + z * z / n
    center = phat + z * z / (2 * n)
    rad = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4 * n * n))
    return min(1.0, (center + rad) / denom)
