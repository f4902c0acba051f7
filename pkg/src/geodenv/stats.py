"""Goodness-of-fit and summary statistics shared by the experiments.

Small, exact implementations on numpy arrays: empirical CDFs, one- and
two-sample Kolmogorov-Smirnov distances, total-variation distance on finite
alphabets, batch-means confidence intervals, and lag correlations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import ParameterError

_Z975 = NormalDist().inv_cdf(0.975)


@dataclass
class EmpiricalDistribution:
    """Sorted continuous sample, or counts over a finite alphabet."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size == 0:
            raise ParameterError("empty sample")
        self.values = np.sort(v)

    @property
    def count(self) -> int:
        return self.values.size

    def cdf(self, x):
        return np.searchsorted(self.values, x, side="right") / self.count


def ks_distance(sample, cdf) -> float:
    """sup_x |F_hat(x) - F(x)| against a reference CDF callable.

    Both one-sided jumps of the empirical CDF are checked, so a single sample
    {0.5} against Uniform[0,1] scores 0.5 rather than 0.
    """
    v = np.sort(np.asarray(sample, dtype=float).ravel())
    if v.size == 0:
        raise ParameterError("empty sample")
    n = v.size
    f = np.asarray(cdf(v), dtype=float)
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    return float(max(np.max(hi - f), np.max(f - lo)))


def ks_two_sample(a, b) -> float:
    """sup_x |F_hat_a(x) - F_hat_b(x)| between two empirical samples."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ParameterError("empty sample")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def tv_distance(p, q) -> float:
    """Half L1 distance between two count vectors over the same alphabet.

    Accepts either aligned arrays of counts or dict-like {symbol: count};
    dicts are aligned on the union of keys.
    """
    if isinstance(p, dict) or isinstance(q, dict):
        keys = sorted(set(p) | set(q))
        pv = np.array([p.get(k, 0) for k in keys], dtype=float)
        qv = np.array([q.get(k, 0) for k in keys], dtype=float)
    else:
        pv = np.asarray(p, dtype=float).ravel()
        qv = np.asarray(q, dtype=float).ravel()
        if pv.shape != qv.shape:
            raise ParameterError(f"alphabet mismatch: {pv.shape} vs {qv.shape}")
    if np.any(pv < 0) or np.any(qv < 0):
        raise ParameterError("counts must be nonnegative")
    sp, sq = pv.sum(), qv.sum()
    if sp == 0 or sq == 0:
        raise ParameterError("empty distribution")
    return float(0.5 * np.abs(pv / sp - qv / sq).sum())


def batch_ci(series, batch_count: int) -> tuple[float, float]:
    """Batch-means 95% confidence interval (mean, half-width).

    Robust to short-range dependence within a series: the series is cut into
    ``batch_count`` contiguous batches and the CLT is applied to batch means.
    Uses the normal quantile; adequate at the batch counts used here (>= 16).
    """
    x = np.asarray(series, dtype=float).ravel()
    if batch_count < 2:
        raise ParameterError("need at least 2 batches")
    if x.size < 2 * batch_count:
        raise ParameterError(f"series of length {x.size} too short for {batch_count} batches")
    usable = (x.size // batch_count) * batch_count
    means = x[:usable].reshape(batch_count, -1).mean(axis=1)
    m = float(x.mean())
    s = float(means.std(ddof=1))
    return m, _Z975 * s / np.sqrt(batch_count)


def lag_correlation(x, lag: int = 1, axis: int = -1) -> float:
    """Sample correlation between a sequence and its lag-shifted copy.

    For 2-D input the lag runs along ``axis`` and pairs are pooled across the
    other axis, which measures e.g. horizontal vs vertical decorrelation of a
    weight field.
    """
    x = np.asarray(x, dtype=float)
    if lag < 1:
        raise ParameterError("lag must be >= 1")
    a = np.moveaxis(x, axis, -1)
    u = a[..., :-lag].ravel()
    v = a[..., lag:].ravel()
    if u.size < 2:
        raise ParameterError("too few pairs")
    u = u - u.mean()
    v = v - v.mean()
    denom = np.sqrt((u * u).sum() * (v * v).sum())
    if denom == 0:
        return 0.0
    return float((u * v).sum() / denom)


def pattern_counts(patterns: np.ndarray) -> np.ndarray:
    """Counts of 0/1 window patterns, encoded as base-2 integers.

    ``patterns`` has shape (n, w); returns a length ``2**w`` count vector.
    """
    p = np.asarray(patterns)
    if p.ndim != 2:
        raise ParameterError("patterns must be 2-D")
    w = p.shape[1]
    weights = 1 << np.arange(w - 1, -1, -1)
    codes = (p.astype(np.int64) * weights).sum(axis=1)
    return np.bincount(codes, minlength=1 << w)


def report_fragment(statistic: str, value: float, threshold: float, passed: bool) -> dict:
    """The JSON report fragment shape used everywhere: statistic/value/threshold/pass."""
    return {
        "statistic": statistic,
        "value": float(value),
        "threshold": float(threshold),
        "pass": bool(passed),
    }


def fragment_json(fragment: dict) -> str:
    return json.dumps(fragment, sort_keys=True)
