"""Layer-to-layer laws for the angle between two inputs in a deep ReLU network.

``x = ln sin^2(theta)`` is the working variable.  Given the angle at one
layer and the width n of the next, x at the next layer is approximately
Normal(mu(theta, n), sigma^2(theta, n)).
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import _rng, _series
from .errors import DomainError
from .jfuncs import j_closed, sin_minus_x_cos

# below this angle the cancelling combinations come from exact series
SERIES_SWITCH = 0.25

QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


def _check_width(n):
    n_arr = np.asarray(n)
    if np.any(n_arr < 2):
        raise DomainError("width must be at least 2")


def rho(n):
    """Per-layer contraction constant of the simple update; about 2/n."""
    _check_width(n)
    n = np.asarray(n, dtype=float)
    out = np.log1p(6.0 / (n - 1.0)) - 10.0 * n / (n + 5.0) ** 2 + 6.0 * n / (n - 1.0) ** 2
    return float(out) if out.ndim == 0 else out


def one_minus_2j11(theta):
    """1 - 2 J(1,1; theta) = 1 - cos(theta') under the infinite-width map, without cancellation."""
    t = np.asarray(theta, dtype=float)
    return (2.0 * math.pi * np.sin(0.5 * t) ** 2 - sin_minus_x_cos(t)) / math.pi


def _ingredients(t):
    """J22 and the combinations s2 = 1 - 4 J11^2, K, L evaluated stably."""
    small = t < SERIES_SWITCH
    j11 = j_closed((1, 1), t)
    j22 = j_closed((2, 2), t)
    j31 = j_closed((3, 1), t)
    s2_direct = one_minus_2j11(t) * (1.0 + 2.0 * j11)
    k_direct = (8 * j11 ** 2 * j22 - 8 * j11 ** 4 + 4 * j11 ** 2 - 8 * j11 * j31 + j22 + 1)
    l_direct = 2 * j11 ** 2 - 4 * j11 * j31 + j22 + 1
    ts = np.where(small, t, 0.0)
    s2 = np.where(small, _series.evaluate("s2", ts), s2_direct)
    k = np.where(small, _series.evaluate("K", ts), k_direct)
    ell = np.where(small, _series.evaluate("L", ts), l_direct)
    return j22, s2, k, ell


@dataclass(frozen=True)
class LayerLaw:
    mu: object
    sigma_sq: object


@dataclass(frozen=True)
class RMoments:
    E_R: float
    Var_R: float
    E_Rsin2: float
    Var_Rsin2: float
    Cov: float

    def as_dict(self):
        return {"E_R": self.E_R, "Var_R": self.Var_R, "E_Rsin2": self.E_Rsin2,
                "Var_Rsin2": self.Var_Rsin2, "Cov": self.Cov}


def moments_of_R(theta: float, n: int) -> RMoments:
    """Mean/variance of the norm ratio R and of R sin^2(theta'), and their covariance.

    Exact in n: the expansions terminate at n^-3.
    """
    _check_width(n)
    if not 0.0 <= theta <= math.pi:
        raise DomainError("theta must lie in [0, pi]")
    j = {idx: j_closed(idx, theta) for idx in [(1, 1), (2, 2), (3, 1), (3, 3), (4, 2), (4, 4)]}
    J11, J22, J31, J33, J42, J44 = (j[(1, 1)], j[(2, 2)], j[(3, 1)], j[(3, 3)], j[(4, 2)], j[(4, 4)])
    n = float(n)
    e_r = (4 * J22 - 1) / n + 1
    var_r = (8 / n * (J22 + 1)
             + 16 / n ** 2 * (2 * J42 - 2.5 * J22 + J22 ** 2 + 0.625)
             + 16 / n ** 3 * (J44 - 2 * J42 - 2 * J22 ** 2 + 2 * J22 - 1.125))
    e_rs = (n - 1) * (1 - 4 * J11 ** 2) / n
    k = 8 * J11 ** 2 * J22 - 8 * J11 ** 4 + 4 * J11 ** 2 - 8 * J11 * J31 + J22 + 1
    var_rs = (8 / n * k
              + 2 / n ** 2 * (80 * J11 ** 4 - 96 * J11 ** 2 * J22 - 40 * J11 ** 2 + 96 * J11 * J31
                              + 24 * J22 ** 2 - 12 * J22 - 32 * J31 ** 2 + 5)
              + 2 / n ** 3 * (-48 * J11 ** 4 + 64 * J11 ** 2 * J22 + 24 * J11 ** 2 - 64 * J11 * J31
                              - 24 * J22 ** 2 + 8 * J22 + 32 * J31 ** 2 - 9))
    cov = ((16 * J11 ** 2 - 32 * J11 * J31 + 8 * J22 + 8) / n
           + (32 * J11 ** 2 * J22 - 40 * J11 ** 2 + 96 * J11 * J31 - 32 * J11 * J33 + 16 * J22 ** 2
              - 32 * J22 - 32 * J31 ** 2 + 16 * J42 + 10) / n ** 2
           + (24 * J11 ** 2 - 32 * J11 ** 2 * J22 - 64 * J11 * J31 + 32 * J11 * J33 - 16 * J22 ** 2
              + 24 * J22 + 32 * J31 ** 2 - 16 * J42 - 18) / n ** 3)
    return RMoments(float(e_r), float(var_r), float(e_rs), float(var_rs), float(cov))


def _check_open_angle(t):
    if np.any((t <= 0.0) | (t >= math.pi)) or np.any(np.isnan(t)):
        raise DomainError("theta must lie strictly inside (0, pi)")


def layer_law(theta, n) -> LayerLaw:
    """Conditional mean and variance of ln sin^2 of the next-layer angle.

    Vectorized over theta.  The expression is evaluated as is for every
    angle; near zero the vanishing numerators and denominators come from
    exact series so no 0/0 arises.
    """
    _check_width(n)
    t = np.asarray(theta, dtype=float)
    _check_open_angle(t)
    j22, s2, k, ell = _ingredients(t)
    n = float(n)
    d = 4 * j22 - 1 + n
    mu = (np.log((n - 1) * s2 / d)
          + 4 * (j22 + 1) / (n * ((4 * j22 - 1) / n + 1) ** 2)
          - 4 * (k / s2 ** 2) / (n * (1 - 1 / n) ** 2))
    sig = (8 * n * (j22 + 1) / d ** 2
           + 8 * n * (k / s2 ** 2) / (n - 1) ** 2
           - 16 * n * (ell / s2) / (d * (n - 1)))
    # the three terms cancel to 0 as theta -> pi; drop rounding below zero
    sig = np.maximum(sig, 0.0)
    if t.ndim == 0:
        return LayerLaw(float(mu), float(sig))
    return LayerLaw(mu, sig)


def zero_angle_variance(n) -> float:
    """Limit of the layer-law variance as theta -> 0 at fixed width."""
    n = float(n)
    return 20 * n / (n + 5) ** 2 + 12 * n / (n - 1) ** 2 - 24 * n / ((n + 5) * (n - 1))


def asymptotic_law(theta, n) -> LayerLaw:
    """Small-angle expansion of the layer law to second order in theta."""
    _check_width(n)
    t = np.asarray(theta, dtype=float)
    if np.any(t <= 0.0):
        raise DomainError("theta must be positive")
    pi = math.pi
    n = float(n)
    mu = (np.log(np.sin(t) ** 2) - 2 * t / (3 * pi) - rho(n) - 8 * t / (15 * pi * n)
          - (2 / (9 * pi ** 2) - 68 / (45 * pi ** 2 * n)) * t ** 2)
    sig = 8 / n - 64 / (15 * pi) * t / n - (8 + 296 / (45 * pi)) * t ** 2 / n
    if t.ndim == 0:
        return LayerLaw(float(mu), float(sig))
    return LayerLaw(mu, sig)


def log_sin2_to_angle(x):
    """Principal inverse of x = ln sin^2(theta), mapping into (0, pi/2]."""
    x = np.asarray(x, dtype=float)
    return np.arcsin(np.minimum(np.exp(0.5 * x), 1.0))


def simple_update(theta: float, n: int, include_rho: bool = True) -> float:
    """One step of ln sin^2(theta') = ln sin^2(theta) - 2 theta/(3 pi) - rho(n)."""
    if not 0.0 < theta <= 0.5 * math.pi:
        raise DomainError("theta must lie in (0, pi/2]")
    _check_width(n)
    drop = 2.0 * theta / (3.0 * math.pi) + (rho(n) if include_rho else 0.0)
    assert drop > 0.0
    x = math.log(math.sin(theta) ** 2) - drop
    return float(log_sin2_to_angle(x))


def infinite_width_update(theta):
    """Deterministic large-width map cos(theta') = 2 J(1,1; theta)."""
    t = np.asarray(theta, dtype=float)
    if np.any((t < 0) | (t > math.pi)):
        raise DomainError("theta must lie in [0, pi]")
    half = np.clip(0.5 * one_minus_2j11(t), 0.0, 1.0)
    out = 2.0 * np.arcsin(np.sqrt(half))
    return float(out) if out.ndim == 0 else out


def iterate(update, theta0: float, steps: int, *args, **kwargs) -> np.ndarray:
    """Angles theta^0 .. theta^steps under repeated application of update."""
    out = np.empty(steps + 1)
    out[0] = theta = theta0
    for k in range(1, steps + 1):
        theta = update(theta, *args, **kwargs)
        out[k] = theta
    return out


@dataclass
class TrajectoryPrediction:
    """Per-layer statistics of ln sin^2(theta^l), layer 0 being the input."""

    mode: str
    mean: np.ndarray
    variance: np.ndarray
    theta: np.ndarray
    quantiles: Optional[np.ndarray] = None
    clamped: Optional[np.ndarray] = None
    samples: Optional[np.ndarray] = None
    quantile_levels: Sequence[float] = field(default=QUANTILES)

    @property
    def depth(self) -> int:
        return len(self.mean) - 1

    @property
    def std(self):
        return np.sqrt(self.variance)


def _check_schedule(widths):
    widths = [int(w) for w in widths]
    if any(w < 2 for w in widths):
        raise DomainError("every width must be at least 2")
    return widths


def predict_trajectory(theta0: float, widths: Sequence[int], mode: str = "gaussian-sampling",
                       ensemble: int = 5000, seed: int = 0, include_rho: bool = True,
                       keep_samples: bool = False) -> TrajectoryPrediction:
    """Propagate the layer law through a width schedule.

    Modes:
      * ``mean-chain``: theta follows the conditional mean deterministically;
        the reported variance is the one-step conditional variance only.
      * ``gaussian-sampling``: ``ensemble`` independent chains, each drawing
        ln sin^2 at every layer from the Gaussian law.  Draws above 0 are
        clamped to 0 (theta = pi/2) and counted.
      * ``simple``: the linearized update without a variance model.

    ``include_rho=False`` removes the width correction rho(n) from the mean,
    which turns the chains into their infinite-width counterparts.
    """
    if not 0.0 < theta0 <= 0.5 * math.pi:
        raise DomainError("theta0 must lie in (0, pi/2]")
    widths = _check_schedule(widths)
    depth = len(widths)
    x0 = math.log(math.sin(theta0) ** 2)

    if mode in ("mean-chain", "simple"):
        mean = np.empty(depth + 1)
        var = np.zeros(depth + 1)
        th = np.empty(depth + 1)
        mean[0], th[0] = x0, theta0
        for ell, n in enumerate(widths, start=1):
            if mode == "simple":
                th[ell] = simple_update(th[ell - 1], n, include_rho=include_rho)
                mean[ell] = math.log(math.sin(th[ell]) ** 2)
            else:
                law = layer_law(th[ell - 1], n)
                mean[ell] = law.mu + (0.0 if include_rho else rho(n))
                var[ell] = law.sigma_sq
                th[ell] = float(log_sin2_to_angle(min(mean[ell], 0.0)))
        return TrajectoryPrediction(mode, mean, var, th)

    if mode != "gaussian-sampling":
        raise ValueError(f"unknown mode {mode!r}")
    if ensemble < 1:
        raise ValueError("ensemble must be positive")
    # one generator per chain so results do not depend on the ensemble split
    noise = np.empty((ensemble, depth))
    for c in range(ensemble):
        noise[c] = _rng.stream(seed, _rng.STREAM_CHAINS, c).standard_normal(depth)
    x = np.full(ensemble, x0)
    theta = np.full(ensemble, theta0)
    values = np.empty((depth + 1, ensemble))
    values[0] = x
    clamped = np.zeros(depth + 1, dtype=int)
    for ell, n in enumerate(widths, start=1):
        law = layer_law(theta, n)
        mu = law.mu + (0.0 if include_rho else rho(n))
        x = mu + np.sqrt(np.maximum(law.sigma_sq, 0.0)) * noise[:, ell - 1]
        over = x > 0.0
        clamped[ell] = int(np.count_nonzero(over))
        x = np.where(over, 0.0, x)
        # theta = pi/2 exactly only when clamped; keep strictly inside (0, pi)
        theta = np.clip(log_sin2_to_angle(x), np.finfo(float).tiny, 0.5 * math.pi)
        values[ell] = x
    return _summarize(values, clamped, keep_samples)


def _summarize(values, clamped, keep_samples):
    m = values.shape[1]
    mean = values.mean(axis=1)
    var = values.var(axis=1, ddof=1) if m > 1 else np.full(values.shape[0], np.nan)
    # the input layer is known exactly; avoid summation round-off there
    mean[0], var[0] = values[0, 0], 0.0
    q = np.quantile(values, QUANTILES, axis=1).T
    th = log_sin2_to_angle(mean)
    return TrajectoryPrediction("gaussian-sampling", mean, var, th, quantiles=q, clamped=clamped,
                                samples=values if keep_samples else None)


def chain_angles(theta0: float, widths: Sequence[int], include_rho: bool = True) -> List[float]:
    """Angles of the simple-update chain over a schedule (layer 0 included)."""
    out = [theta0]
    for n in _check_schedule(widths):
        out.append(simple_update(out[-1], n, include_rho=include_rho))
    return out
