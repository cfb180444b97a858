"""Monte Carlo ground truth: finite fully connected ReLU networks without biases.

Layer 1 is z = W x; layer l+1 is z = sqrt(2 / n_l) W relu(z_l), all weights
i.i.d. standard normal.  Two inputs are pushed through the same weights and
the angle between their post-activation vectors is recorded per layer.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _rng
from .dynamics import QUANTILES

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class NetworkConfig:
    widths: Sequence[int]
    input_dim: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.input_dim < 2:
            raise ValueError("input_dim must be at least 2")
        if len(self.widths) < 1:
            raise ValueError("need at least one hidden layer")
        if any(int(w) < 1 for w in self.widths):
            raise ValueError("widths must be positive")

    @property
    def depth(self) -> int:
        return len(self.widths)


def make_input_pair(theta0: float, dim: int = 2):
    """Two unit vectors e1 and cos(theta0) e1 + sin(theta0) e2."""
    if dim < 2:
        raise ValueError("dim must be at least 2")
    if not 0.0 <= theta0 <= math.pi:
        raise ValueError("theta0 must lie in [0, pi]")
    xa = np.zeros(dim)
    xb = np.zeros(dim)
    xa[0] = 1.0
    xb[0] = math.cos(theta0)
    xb[1] = math.sin(theta0)
    return xa, xb


def angle_between(u, v):
    """Angle between the last-axis vectors u and v (nan if either is zero).

    Uses 2 atan2(|u' - v'|, |u' + v'|) on the normalized vectors, which
    stays accurate for angles near 0 and near pi.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu = np.linalg.norm(u, axis=-1, keepdims=True)
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        uh, vh = u / nu, v / nv
        out = 2.0 * np.arctan2(np.linalg.norm(uh - vh, axis=-1), np.linalg.norm(uh + vh, axis=-1))
    bad = (nu[..., 0] == 0) | (nv[..., 0] == 0)
    return np.where(bad, np.nan, out)


def log_sin2(theta):
    theta = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(np.sin(theta) ** 2)


@dataclass
class TrialTrace:
    """Per-layer record for one network; index 0 is the input layer."""

    theta: np.ndarray
    log_sin2: np.ndarray
    norm_sq_alpha: np.ndarray
    norm_sq_beta: np.ndarray
    preact_norm_sq_alpha: np.ndarray
    degenerate: np.ndarray


def run_trial(config: NetworkConfig, theta0: float = None, trial: int = 0, inputs=None) -> TrialTrace:
    """Propagate one input pair through one freshly sampled network.

    The weights come from the stream (config.seed, trial).  Either theta0
    or an explicit (xa, xb) pair must be given.
    """
    if inputs is None:
        xa, xb = make_input_pair(theta0, config.input_dim)
    else:
        xa, xb = (np.asarray(v, dtype=float) for v in inputs)
    gen = _rng.stream(config.seed, _rng.STREAM_NETWORK, trial)
    depth = config.depth
    theta = np.empty(depth + 1)
    na = np.empty(depth + 1)
    nb = np.empty(depth + 1)
    pre = np.empty(depth + 1)
    dead = np.zeros(depth + 1, dtype=bool)

    h = np.stack([xa, xb], axis=1)
    theta[0] = angle_between(xa, xb)
    na[0], nb[0] = xa @ xa, xb @ xb
    pre[0] = na[0]
    prev = config.input_dim
    for ell, n in enumerate(config.widths, start=1):
        n = int(n)
        w = gen.standard_normal((n, prev))
        z = w @ h
        if ell > 1:
            z *= math.sqrt(2.0 / prev)
        h = np.maximum(z, 0.0)
        pre[ell] = z[:, 0] @ z[:, 0]
        na[ell] = h[:, 0] @ h[:, 0]
        nb[ell] = h[:, 1] @ h[:, 1]
        dead[ell] = dead[ell - 1] or na[ell] == 0.0 or nb[ell] == 0.0
        theta[ell] = np.nan if dead[ell] else angle_between(h[:, 0], h[:, 1])
        prev = n
    return TrialTrace(theta, log_sin2(theta), na, nb, pre, dead)


@dataclass
class EnsembleStats:
    """Per-layer aggregates of ln sin^2(theta^l) over the non-degenerate trials."""

    mean: np.ndarray
    variance: np.ndarray
    quantiles: np.ndarray
    theta_mean: np.ndarray
    degenerate: np.ndarray
    trials: int
    raw: Optional[np.ndarray] = None
    preact_ratio_mean: Optional[np.ndarray] = None
    quantile_levels: Sequence[float] = QUANTILES

    @property
    def depth(self) -> int:
        return len(self.mean) - 1


def _trial_rows(config, theta0, indices):
    rows = []
    for t in indices:
        tr = run_trial(config, theta0, trial=t)
        rows.append((tr.log_sin2, tr.theta, tr.degenerate, tr.preact_norm_sq_alpha))
    return rows


def run_ensemble(config: NetworkConfig, theta0: float, trials: int, keep_raw: bool = False,
                 workers: int = 1, trial_seeds: Optional[Sequence[int]] = None) -> EnsembleStats:
    """Run independent trials and aggregate per layer.

    Trial k uses the weight stream keyed by (config.seed, k), or by
    trial_seeds[k] when given.  Chunks may run on several threads; rows are
    reassembled in trial order so the output never depends on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    index = list(trial_seeds) if trial_seeds is not None else list(range(trials))
    if len(index) != trials:
        raise ValueError("trial_seeds must have one entry per trial")
    chunks = [index[i:i + 64] for i in range(0, trials, 64)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda c: _trial_rows(config, theta0, c), chunks))
    else:
        parts = [_trial_rows(config, theta0, c) for c in chunks]
    rows = [r for part in parts for r in part]
    x = np.array([r[0] for r in rows])
    th = np.array([r[1] for r in rows])
    dead = np.array([r[2] for r in rows])
    pre = np.array([r[3] for r in rows])

    depth = config.depth
    mean = np.full(depth + 1, np.nan)
    var = np.full(depth + 1, np.nan)
    q = np.full((depth + 1, len(QUANTILES)), np.nan)
    tmean = np.full(depth + 1, np.nan)
    for ell in range(depth + 1):
        ok = ~dead[:, ell]
        vals = x[ok, ell]
        # theta0 = 0 gives ln sin^2 = -inf; the aggregates then come out nan
        with np.errstate(invalid="ignore"):
            if vals.size >= 1:
                mean[ell] = vals.mean()
                tmean[ell] = th[ok, ell].mean()
                q[ell] = np.quantile(vals, QUANTILES)
            if vals.size >= 2:
                var[ell] = vals.var(ddof=1)
    ratio = pre.mean(axis=0) / pre[:, :1].mean()
    return EnsembleStats(mean, var, q, tmean, dead.sum(axis=0), trials,
                         raw=x if keep_raw else None, preact_ratio_mean=ratio)
