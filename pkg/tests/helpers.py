"""Shared test utilities: moment estimators with jackknife SEs and a normality test."""

from __future__ import annotations

import math

import numpy as np

STATS = ("mean", "var", "skew", "kurt")


def sample_moments(x: np.ndarray) -> dict[str, float]:
    x = np.asarray(x, dtype=float)
    m = x.mean()
    d = x - m
    m2 = np.mean(d**2)
    m3 = np.mean(d**3)
    m4 = np.mean(d**4)
    return {
        "mean": float(m),
        "var": float(m2 * x.size / (x.size - 1)),
        "skew": float(m3 / m2**1.5),
        "kurt": float(m4 / m2**2 - 3.0),
    }


def _stats_from_power_sums(n: float, s1: float, s2: float, s3: float, s4: float):
    """Moment statistics from sums of powers of (x - reference_mean)."""
    d = s1 / n
    m2 = s2 / n - d * d
    m3 = s3 / n - 3 * d * s2 / n + 2 * d**3
    m4 = s4 / n - 4 * d * s3 / n + 6 * d * d * s2 / n - 3 * d**4
    return {
        "mean": d,  # offset from the reference mean; caller adds it back
        "var": m2 * n / (n - 1),
        "skew": m3 / m2**1.5,
        "kurt": m4 / m2**2 - 3.0,
    }


def moments_with_se(x: np.ndarray, n_blocks: int = 40) -> dict[str, tuple[float, float]]:
    """(estimate, jackknife SE) for mean/var/skew/kurt, via delete-one-block sums."""
    x = np.asarray(x, dtype=float)
    n = x.size - (x.size % n_blocks)
    ref = float(x[:n].mean())
    c = (x[:n] - ref).reshape(n_blocks, -1)
    bs = np.stack([c.sum(axis=1), (c**2).sum(axis=1), (c**3).sum(axis=1), (c**4).sum(axis=1)])
    tot = bs.sum(axis=1)
    nb = n // n_blocks
    full = _stats_from_power_sums(n, *tot)
    jack = {k: [] for k in STATS}
    for b in range(n_blocks):
        st = _stats_from_power_sums(n - nb, *(tot - bs[:, b]))
        for k in STATS:
            jack[k].append(st[k])
    out = {}
    fac = (n_blocks - 1) / n_blocks
    for k in STATS:
        vals = np.asarray(jack[k])
        se = math.sqrt(fac * np.sum((vals - vals.mean()) ** 2))
        est = full[k] + (ref if k == "mean" else 0.0)
        out[k] = (est, se)
    return out


def moment_band(x: np.ndarray, stat: str, n_se: float = 3.0) -> tuple[float, float, float]:
    """(estimate, se, n_se) for asserting |estimate - truth| <= n_se * se."""
    est, se = moments_with_se(x)[stat]
    return est, se, n_se


def block_jackknife_se(values: np.ndarray, stat_fn, n_blocks: int = 40) -> float:
    """Jackknife SE of an arbitrary statistic of one sample (row-deleting blocks)."""
    v = np.asarray(values)
    n = v.shape[0] - (v.shape[0] % n_blocks)
    v = v[:n]
    idx = np.arange(n).reshape(n_blocks, -1)
    vals = np.array([stat_fn(np.delete(v, idx[b], axis=0)) for b in range(n_blocks)])
    return float(math.sqrt((n_blocks - 1) / n_blocks * np.sum((vals - vals.mean()) ** 2)))


def anderson_darling_normal(x: np.ndarray) -> tuple[float, float]:
    """AD statistic (mean/variance estimated) and its approximate p-value.

    Uses the small-sample adjustment A*^2 = A^2 (1 + 0.75/n + 2.25/n^2) and
    the standard piecewise-exponential p-value approximation.
    """
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    z = (x - x.mean()) / x.std(ddof=1)
    cdf = 0.5 * (1.0 + np.array([math.erf(v / math.sqrt(2)) for v in z]))
    cdf = np.clip(cdf, 1e-300, 1 - 1e-16)
    i = np.arange(1, n + 1)
    a2 = -n - np.mean((2 * i - 1) * (np.log(cdf) + np.log1p(-cdf[::-1])))
    a2_star = a2 * (1.0 + 0.75 / n + 2.25 / n**2)
    if a2_star >= 0.6:
        p = math.exp(1.2937 - 5.709 * a2_star + 0.0186 * a2_star**2)
    elif a2_star >= 0.34:
        p = math.exp(0.9177 - 4.279 * a2_star - 1.38 * a2_star**2)
    elif a2_star >= 0.2:
        p = 1.0 - math.exp(-8.318 + 42.796 * a2_star - 59.938 * a2_star**2)
    else:
        p = 1.0 - math.exp(-13.436 + 101.14 * a2_star - 223.73 * a2_star**2)
    return float(a2_star), float(min(max(p, 0.0), 1.0))
