"""One-sample Kolmogorov-Smirnov test against a normal law, and large-sample
confidence intervals for a mean and a variance."""

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np
from scipy.special import ndtr

from .errors import DomainError

_TERM_CUTOFF = 1e-12


@dataclass(frozen=True)
class KSResult:
    statistic: float
    p_value: float
    sample_size: int


def kolmogorov_sf(lam: float) -> float:
    """P(K > lam) for the limiting Kolmogorov distribution.

    Uses 2 sum (-1)^(k-1) exp(-2 k^2 lam^2) for lam >= 1 and the dual theta
    series 1 - sqrt(2 pi)/lam sum exp(-(2k-1)^2 pi^2 / (8 lam^2)) below, since
    the alternating series converges too slowly there.  Both are truncated once
    a term drops under 1e-12.
    """
    if lam <= 0:
        return 1.0
    if lam < 1.0:
        acc = 0.0
        k = 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * math.pi ** 2 / (8 * lam * lam))
            acc += term
            if term < _TERM_CUTOFF:
                break
            k += 1
        p = 1.0 - math.sqrt(2 * math.pi) / lam * acc
    else:
        acc = 0.0
        k = 1
        while True:
            term = math.exp(-2.0 * k * k * lam * lam)
            acc += term if k % 2 else -term
            if term < _TERM_CUTOFF:
                break
            k += 1
        p = 2.0 * acc
    return min(1.0, max(0.0, p))


def ks_test_normal(sample, mu: float, sigma: float) -> KSResult:
    """Two-sided one-sample KS test of sample against Normal(mu, sigma^2).

    The p-value is asymptotic; for fewer than about 50 points it is only
    indicative.
    """
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    m = x.size
    if m < 8:
        raise DomainError("need at least 8 observations")
    if not np.all(np.isfinite(x)):
        raise DomainError("sample contains non-finite values")
    cdf = ndtr((x - mu) / sigma)
    i = np.arange(1, m + 1)
    d = float(max(np.max(i / m - cdf), np.max(cdf - (i - 1) / m)))
    d = min(1.0, max(0.0, d))
    return KSResult(d, kolmogorov_sf(math.sqrt(m) * d), m)


def _z(level):
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    return NormalDist().inv_cdf(0.5 + level / 2)


def mean_ci(sample, level: float = 0.95):
    """Normal-approximation interval mean +- z s / sqrt(m)."""
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 2:
        raise DomainError("need at least 2 observations")
    half = _z(level) * x.std(ddof=1) / math.sqrt(x.size)
    m = float(x.mean())
    return m - half, m + half


def variance_ci(sample, level: float = 0.95):
    """Large-sample interval for the variance, with Var(s^2) ~ (m4 - s^4) / m."""
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 2:
        raise DomainError("need at least 2 observations")
    s2 = float(x.var(ddof=1))
    c = x - x.mean()
    m4 = float(np.mean(c ** 4))
    half = _z(level) * math.sqrt(max(m4 - s2 * s2, 0.0) / x.size)
    return s2 - half, s2 + half
