"""Monte Carlo path moments and the closed-form regime mean/variance algebra.

``estimate_path_moments`` simulates the cluster-level mean outcome for one
treatment path: draw the latent spatial vector Q ~ N(0, Sigma), the
missingness residuals, and skew-t outcome errors; average the outcome over
available sub-units.  Replicates with every sub-unit missing are redrawn
(and counted).  Work proceeds in fixed 65536-replicate chunks, each on its
own RNG substream keyed by (seed, path, chunk), so the result is
bit-identical for any worker count.

The regime algebra converts per-path moments into the mean, N-scaled
variance and N-scaled covariance of inverse-probability-weighted regime
mean estimators.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._backend import ybar_and_count
from .design import Regime, SmartDesign, stage1_probs, stage2_prob
from .dists import SkewTParams, sample_st
from .errors import DegenerateMissingnessError
from .missing import MissingnessParams
from .rngs import CHUNK, MOMENTS, substream
from .spatial import CarModel, SpdMatrix, car_covariance

MAX_REDRAW_FRACTION = 0.01


@dataclass(frozen=True)
class OutcomeModel:
    """Spatial + error + missingness model for the sub-unit outcome."""

    car: CarModel
    st: SkewTParams
    mp: MissingnessParams

    def __post_init__(self):
        if self.st.location != 0.0:
            raise ValueError("outcome error must have location 0; path means carry the location")

    @cached_property
    def sigma(self) -> SpdMatrix:
        return car_covariance(self.car)


@dataclass(frozen=True)
class PathMoments:
    path: int
    mu: float
    sigma2: float
    n_samples: int
    n_redrawn: int = 0

    @property
    def se_mu(self) -> float:
        return math.sqrt(self.sigma2 / self.n_samples)


def _merge(n_a: int, mean_a: float, m2_a: float, n_b: int, mean_b: float, m2_b: float):
    """Chan/Welford merge of (count, mean, sum of squared deviations)."""
    n = n_a + n_b
    delta = mean_b - mean_a
    mean = mean_a + delta * (n_b / n)
    m2 = m2_a + m2_b + delta * delta * (n_a * n_b / n)
    return n, mean, m2


def _simulate_ybar(model: OutcomeModel, mu2d: np.ndarray, rng: np.random.Generator):
    """One batch of cluster outcomes; draw order: Q normals, eps0, outcome error."""
    n, t_dim = mu2d.shape
    zq = rng.standard_normal((n, t_dim))
    e0 = rng.standard_normal((n, t_dim))
    e1 = sample_st(model.st, n * t_dim, rng).reshape(n, t_dim)
    mp = model.mp
    return ybar_and_count(
        zq, e0, e1, model.sigma.chol, mu2d, mp.intercept, mp.loading, mp.sigma0, mp.cutoff
    )


def _chunk_moments(model: OutcomeModel, mu_vec: np.ndarray, seed: int, path_id: int, chunk: int, size: int):
    mu2d = np.tile(mu_vec, (size, 1))
    rng = substream(seed, MOMENTS, path_id, chunk, 0)
    ybar, n_avail = _simulate_ybar(model, mu2d, rng)
    n_redrawn = 0
    bad = np.flatnonzero(n_avail == 0)
    round_no = 1
    while bad.size:
        n_redrawn += bad.size
        if n_redrawn > MAX_REDRAW_FRACTION * size + 50:
            raise DegenerateMissingnessError(
                f"{n_redrawn} all-missing redraws in a {size}-replicate chunk; "
                "the missingness model implies near-total loss"
            )
        rng = substream(seed, MOMENTS, path_id, chunk, round_no)
        yb, na = _simulate_ybar(model, mu2d[: bad.size], rng)
        ybar[bad] = yb
        n_avail[bad] = na
        bad = bad[na == 0]
        round_no += 1
    mean = float(np.mean(ybar))
    m2 = float(np.sum((ybar - mean) ** 2))
    return size, mean, m2, n_redrawn


def estimate_path_moments(
    path_mu: np.ndarray,
    model: OutcomeModel,
    num: int,
    seed: int,
    path_id: int = 0,
    workers: int = 1,
) -> PathMoments:
    """Monte Carlo mean/variance of the cluster mean outcome for one path.

    ``path_mu`` is the per-sub-unit mean vector; ``num`` the replicate
    count; results are deterministic given (seed, path_id, num) and do not
    depend on ``workers``.
    """
    if num < 1:
        raise ValueError(f"num must be >= 1, got {num}")
    if num < 10_000:
        warnings.warn(f"num={num} is small; moment estimates will be noisy", stacklevel=2)
    mu_vec = np.asarray(path_mu, dtype=float)
    if mu_vec.shape != (model.sigma.dim,):
        raise ValueError(f"path mean has shape {mu_vec.shape}, expected ({model.sigma.dim},)")
    chunks = [(idx, min(CHUNK, num - start)) for idx, start in enumerate(range(0, num, CHUNK))]

    def run(args):
        idx, size = args
        return idx, _chunk_moments(model, mu_vec, seed, path_id, idx, size)

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(run, chunks))
    else:
        results = dict(map(run, chunks))

    n_tot, mean, m2, redrawn = 0, 0.0, 0.0, 0
    for idx, _ in chunks:
        n_c, mean_c, m2_c, red_c = results[idx]
        n_tot, mean, m2 = _merge(n_tot, mean, m2, n_c, mean_c, m2_c)
        redrawn += red_c
    if redrawn > MAX_REDRAW_FRACTION * num:
        raise DegenerateMissingnessError(
            f"{redrawn}/{num} replicates had every sub-unit missing; "
            "the missingness model implies near-total loss"
        )
    sigma2 = m2 / (n_tot - 1) if n_tot > 1 else 0.0
    return PathMoments(path_id, mean, sigma2, n_tot, redrawn)


def welford_reference(values: np.ndarray) -> tuple[float, float]:
    """Two-pass mean/sample-variance, used as the accumulation oracle."""
    v = np.asarray(values, dtype=float)
    mean = float(v.mean())
    var = float(np.sum((v - mean) ** 2) / (v.size - 1))
    return mean, var


# ---------------------------------------------------------------------------
# closed-form regime algebra (all variance-like values on the N x Var scale)


def regime_mean(mu_r: float, mu_nr: float, gamma: float) -> float:
    """gamma * mu_R + (1 - gamma) * mu_NR."""
    return gamma * mu_r + (1.0 - gamma) * mu_nr


def regime_variance(
    mu_r: float,
    sigma2_r: float,
    mu_nr: float,
    sigma2_nr: float,
    gamma: float,
    pi1: float,
    pi2_r: float,
    pi2_nr: float,
) -> float:
    """N x Var of the IPW regime mean estimator."""
    for name, p in (("pi1", pi1), ("pi2_r", pi2_r), ("pi2_nr", pi2_nr)):
        if not 0.0 < p <= 1.0:
            raise ValueError(f"{name} must be in (0,1], got {p}")
    w_r = pi1 * pi2_r
    w_nr = pi1 * pi2_nr
    return (
        gamma / w_r * (sigma2_r + (1.0 - w_r) * mu_r**2)
        + (1.0 - gamma) / w_nr * (sigma2_nr + (1.0 - w_nr) * mu_nr**2)
        + gamma * (1.0 - gamma) * (mu_r - mu_nr) ** 2
    )


def regime_covariance(
    mu1_r: float,
    sigma2_1r: float,
    mu1_nr: float,
    mu2_r: float,
    mu2_nr: float,
    gamma1: float,
    gamma2: float,
    pi1: float,
    pi2_r: float,
    shared_responder: bool,
) -> float:
    """N x Cov of two IPW regime mean estimators.

    ``shared_responder`` means the regimes share the initial arm and the
    responder path (so responders are consistent with both); the moments of
    the shared responder path enter through the regime-1 arguments and
    gamma1 must equal gamma2.  Without sharing, only the negative
    cross-product terms remain.
    """
    cov = -(
        gamma1 * gamma2 * mu1_r * mu2_r
        + gamma1 * (1.0 - gamma2) * mu1_r * mu2_nr
        + gamma2 * (1.0 - gamma1) * mu1_nr * mu2_r
        + (1.0 - gamma1) * (1.0 - gamma2) * mu1_nr * mu2_nr
    )
    if shared_responder:
        if gamma1 != gamma2:
            raise ValueError("regimes sharing an initial treatment must share its response rate")
        if not 0.0 < pi1 * pi2_r <= 1.0:
            raise ValueError("pi1 * pi2_r must be in (0,1]")
        cov += gamma1 / (pi1 * pi2_r) * (sigma2_1r + mu1_r**2)
    return cov


def regime_pair_is_shared(design: SmartDesign, r1: Regime, r2: Regime) -> bool:
    """Shared initial treatment; asserts the responder path is then identical."""
    if r1.arm != r2.arm:
        return False
    if r1.responder_path != r2.responder_path:
        raise ValueError(
            f"regimes {r1.index + 1} and {r2.index + 1} share arm {r1.arm + 1} but have "
            "different responder paths; the shared-arm covariance assumes a common one"
        )
    return True


def regime_pieces(design: SmartDesign, regime: Regime, pm: dict[int, PathMoments]):
    """(gamma, pi1, pi2_r, pi2_nr, PathMoments_R, PathMoments_NR) for one regime."""
    gamma = design.arms[regime.arm].response_rate
    pi1 = float(stage1_probs(design)[regime.arm])
    pi2_r = stage2_prob(design, regime.responder_path)
    pi2_nr = stage2_prob(design, regime.nonresp_path)
    return gamma, pi1, pi2_r, pi2_nr, pm[regime.responder_path], pm[regime.nonresp_path]
