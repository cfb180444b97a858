"""Independent numerical oracles for expectations over a correlated Gaussian pair.

Two families: a deterministic adaptive quadrature for J(a, b; theta), and
Monte Carlo estimators built on the construction H = G cos(theta) + W sin(theta).
"""

import heapq
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import _rng
from .errors import AccuracyNotReached
from .jfuncs import phi_moment


@dataclass(frozen=True)
class OracleResult:
    estimate: float
    std_error: float = 0.0
    abs_error_bound: float = 0.0


@dataclass(frozen=True)
class CorrelatedPairSpec:
    theta: float
    seed: int = 0
    samples: int = 100_000

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError("theta must lie in [0, pi]")
        if self.samples < 1:
            raise ValueError("samples must be positive")

    @property
    def correlation(self) -> float:
        return math.cos(self.theta)


_LOW = leggauss(10)
_HIGH = leggauss(16)


def _rule_on(box, rule):
    (u0, u1), (x0, x1) = box
    nodes, weights = rule
    hu, hx = 0.5 * (u1 - u0), 0.5 * (x1 - x0)
    u = u0 + hu * (nodes + 1.0)
    x = x0 + hx * (nodes + 1.0)
    w = np.outer(weights * hu, weights * hx)
    return u, x, w


def _panel(f, box):
    out = []
    for rule in (_LOW, _HIGH):
        u, x, w = _rule_on(box, rule)
        vals = f(u[:, None], x[None, :])
        out.append(float(np.sum(w * vals)))
    return out[1], abs(out[1] - out[0])


def _split(box):
    (u0, u1), (x0, x1) = box
    um, xm = 0.5 * (u0 + u1), 0.5 * (x0 + x1)
    return [((a, b), (c, d)) for a, b in ((u0, um), (um, u1)) for c, d in ((x0, xm), (xm, x1))]


def adaptive_tensor_gl(f, u_range, x_range, target_abs_err, max_nodes=4_000_000,
                       u_splits=2, x_splits=4):
    """Integrate f(u, x) over a rectangle with adaptive tensor Gauss-Legendre panels.

    Each panel is evaluated with 10- and 16-point rules; the difference is the
    panel's error estimate and the worst panel is quartered until the summed
    estimate meets the target.  Returns (estimate, error_bound).
    """
    per_panel = len(_LOW[0]) ** 2 + len(_HIGH[0]) ** 2
    us = np.linspace(*u_range, u_splits + 1)
    xs = np.linspace(*x_range, x_splits + 1)
    heap = []
    counter = 0
    for i in range(u_splits):
        for j in range(x_splits):
            box = ((us[i], us[i + 1]), (xs[j], xs[j + 1]))
            est, err = _panel(f, box)
            heapq.heappush(heap, (-err, counter, box, est))
            counter += 1
    used = counter * per_panel
    while True:
        total_err = -sum(item[0] for item in heap)
        if total_err <= target_abs_err:
            break
        if used + 4 * per_panel > max_nodes:
            raise AccuracyNotReached(
                f"quadrature stopped at error bound {total_err:.3g} > {target_abs_err:.3g}", total_err)
        _, _, box, _ = heapq.heappop(heap)
        for child in _split(box):
            est, err = _panel(f, child)
            heapq.heappush(heap, (-err, counter, child, est))
            counter += 1
        used += 4 * per_panel
    panels = sorted(heap, key=lambda item: item[1])
    return math.fsum(item[3] for item in panels), total_err


def _radial_moment_1d(m, target_abs_err, max_nodes):
    # E[relu(G)^m] as an integral over x in (0, 1) with g = x / (1 - x)
    def f(_, x):
        g = x / (1.0 - x)
        return g ** m * np.exp(-0.5 * g * g) / math.sqrt(2 * math.pi) / (1.0 - x) ** 2

    return adaptive_tensor_gl(f, (0.0, 1.0), (0.0, 1.0), target_abs_err, max_nodes, 1, 4)


def j_quadrature(idx, theta: float, target_abs_err: float = 1e-10, max_nodes: int = 4_000_000) -> OracleResult:
    """Deterministic quadrature estimate of J(a, b; theta).

    The positive quadrant {g > 0, h > 0} is written in polar coordinates of
    the whitened pair (G, W): with v the polar angle shifted by theta/2 the
    quadrant becomes |v| < (pi - theta)/2 and the integrand
    r^(a+b+1) cos^a(v + theta/2) cos^b(v - theta/2) exp(-r^2/2) / (2 pi)
    is smooth on the closed rectangle.  The radius is mapped to (0, 1) by
    r = x / (1 - x).
    """
    a, b = (int(v) for v in idx)
    if a < 0 or b < 0:
        raise ValueError("indices must be non-negative")
    if target_abs_err <= 0:
        raise ValueError("target_abs_err must be positive")
    theta = float(theta)
    if not 0.0 <= theta <= math.pi:
        raise ValueError("theta must lie in [0, pi]")
    if theta == math.pi:
        return OracleResult(0.0, 0.0, 0.0)
    if theta == 0.0:
        m = a + b
        if m == 0:
            return OracleResult(0.5, 0.0, 0.0)
        est, bound = _radial_moment_1d(m, target_abs_err, max_nodes)
        return OracleResult(est, 0.0, bound)

    half = 0.5 * theta
    width = 0.5 * (math.pi - theta)
    m = a + b + 1

    def f(v, x):
        r = x / (1.0 - x)
        radial = r ** m * np.exp(-0.5 * r * r) / (1.0 - x) ** 2
        ang = np.cos(v + half) ** a * np.cos(v - half) ** b
        return ang * radial / (2.0 * math.pi)

    est, bound = adaptive_tensor_gl(f, (-width, width), (0.0, 1.0), target_abs_err, max_nodes)
    return OracleResult(est, 0.0, bound)


BLOCK = 1 << 16


def _pair_block(gen, size, theta):
    g = gen.standard_normal(size)
    w = gen.standard_normal(size)
    return g, g * math.cos(theta) + w * math.sin(theta)


def _merge(count, mean, m2, n_b, mean_b, m2_b):
    # pairwise update of running mean and sum of squared deviations
    total = count + n_b
    delta = mean_b - mean
    mean = mean + delta * n_b / total
    m2 = m2 + m2_b + delta * delta * count * n_b / total
    return total, mean, m2


def mc_expectation(f, spec: CorrelatedPairSpec) -> OracleResult:
    """Monte Carlo mean of f(G, H) with std error; f must accept numpy arrays."""
    if spec.samples < 2:
        raise ValueError("samples must be at least 2")
    count, mean, m2 = 0, 0.0, 0.0
    n_blocks = -(-spec.samples // BLOCK)
    for k in range(n_blocks):
        size = min(BLOCK, spec.samples - k * BLOCK)
        gen = _rng.stream(spec.seed, _rng.STREAM_PAIRS, k)
        g, h = _pair_block(gen, size, spec.theta)
        vals = np.broadcast_to(np.asarray(f(g, h), dtype=float), (size,))
        mb = float(np.mean(vals))
        m2b = float(np.sum((vals - mb) ** 2))
        count, mean, m2 = _merge(count, mean, m2, size, mb, m2b)
    var = m2 / (count - 1)
    return OracleResult(mean, math.sqrt(var / count), 0.0)


@dataclass(frozen=True)
class RStatistics:
    mean_R: float
    var_R: float
    mean_Rsin2: float
    var_Rsin2: float
    cov: float
    se_mean_R: float
    se_var_R: float
    se_mean_Rsin2: float
    se_var_Rsin2: float
    se_cov: float
    trials: int

    def values(self):
        return {"E_R": self.mean_R, "Var_R": self.var_R, "E_Rsin2": self.mean_Rsin2,
                "Var_Rsin2": self.var_Rsin2, "Cov": self.cov}

    def errors(self):
        return {"E_R": self.se_mean_R, "Var_R": self.se_var_R, "E_Rsin2": self.se_mean_Rsin2,
                "Var_Rsin2": self.se_var_Rsin2, "Cov": self.se_cov}


def r_samples(theta: float, n: int, trials: int, seed: int):
    """Per-trial values of the norm ratio R and of R sin^2 from n pairs each.

    Both are evaluated as literal double sums over (i, j):
    R = 4/n^2 sum relu(G_i)^2 relu(H_j)^2 and
    R sin^2 = 2/n^2 sum (relu(G_i) relu(H_j) - relu(G_j) relu(H_i))^2.
    """
    if n < 2 or trials < 2:
        raise ValueError("need n >= 2 and trials >= 2")
    block = max(1, (1 << 20) // (n * n))
    r = np.empty(trials)
    rs = np.empty(trials)
    for k, start in enumerate(range(0, trials, block)):
        size = min(block, trials - start)
        gen = _rng.stream(seed, _rng.STREAM_R_STATS, n, k)
        g, h = _pair_block(gen, (size, n), theta)
        pg, ph = np.maximum(g, 0.0), np.maximum(h, 0.0)
        outer = pg[:, :, None] * ph[:, None, :]
        r[start:start + size] = 4.0 / n ** 2 * np.sum(outer * outer, axis=(1, 2))
        anti = outer - np.swapaxes(outer, 1, 2)
        rs[start:start + size] = 2.0 / n ** 2 * np.sum(anti * anti, axis=(1, 2))
    return r, rs


def _var_se(x):
    c = x - x.mean()
    s2 = np.mean(c * c)
    m4 = np.mean(c ** 4)
    return math.sqrt(max(m4 - s2 * s2, 0.0) / x.size)


def mc_R_statistics(theta: float, n: int, trials: int, seed: int) -> RStatistics:
    r, rs = r_samples(theta, n, trials, seed)
    m = trials
    cr, crs = r - r.mean(), rs - rs.mean()
    prod = cr * crs
    return RStatistics(
        mean_R=float(r.mean()),
        var_R=float(r.var(ddof=1)),
        mean_Rsin2=float(rs.mean()),
        var_Rsin2=float(rs.var(ddof=1)),
        cov=float(np.sum(prod) / (m - 1)),
        se_mean_R=float(r.std(ddof=1) / math.sqrt(m)),
        se_var_R=_var_se(r),
        se_mean_Rsin2=float(rs.std(ddof=1) / math.sqrt(m)),
        se_var_Rsin2=_var_se(rs),
        se_cov=float(prod.std(ddof=1) / math.sqrt(m)),
        trials=m,
    )
