"""Full-trial simulation, IPW estimation, and Monte Carlo power.

A simulated trial draws, per cluster: the stage-1 arm, the response
indicator, the stage-2 path (uniform over the arm's options for the
observed response status), and then the sub-unit outcomes/missingness with
the path's mean vector.  Clusters whose sub-units are all missing are
redrawn at that level.

Monte Carlo power replays the trial ``reps`` times; each replicate lives
on its own RNG substream keyed by (seed, domain, replicate), so results do
not depend on the worker count.  The Wald statistic uses the design-stage
closed-form variance by default; ``empirical_variance=True`` switches to
the per-dataset plug-in variant.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .design import Regime, SmartDesign, stage1_probs, stage2_prob
from .errors import DegenerateMissingnessError
from .moments import MAX_REDRAW_FRACTION, OutcomeModel, _simulate_ybar
from .power import TestSpec, reject, wald_z
from .rngs import POWER, TRIAL, substream

MAX_REDRAW_ROUNDS = 64


@dataclass(frozen=True)
class TrialDataset:
    """One simulated trial; arrays are per cluster (arm/path 0-based)."""

    arm: np.ndarray
    responder: np.ndarray
    path: np.ndarray
    ybar: np.ndarray
    n_units: np.ndarray
    n_redrawn: int = 0

    @property
    def n_clusters(self) -> int:
        return self.arm.size


@dataclass(frozen=True)
class PowerEstimate:
    power: float
    reps: int
    mean_abs_delta: float
    mcsd: float

    @property
    def se_power(self) -> float:
        return math.sqrt(self.power * (1.0 - self.power) / self.reps)


def simulate_trial(
    design: SmartDesign,
    model: OutcomeModel,
    n_clusters: int,
    seed: int,
    _key: tuple[int, ...] = (),
) -> TrialDataset:
    """Simulate one trial of ``n_clusters`` clusters.

    Draw order per trial: arm uniforms, response uniforms, stage-2
    uniforms, then the sub-unit blocks (redraw rounds append).
    """
    if n_clusters < 1:
        raise ValueError(f"n_clusters must be >= 1, got {n_clusters}")
    rng = substream(seed, TRIAL, *_key)
    pi1 = stage1_probs(design)
    arm = np.searchsorted(np.cumsum(pi1), rng.random(n_clusters), side="right")
    arm = np.minimum(arm, len(design.arms) - 1)
    gammas = np.array([a.response_rate for a in design.arms])
    responder = rng.random(n_clusters) < gammas[arm]

    resp_paths = [
        [p.index for p in design.paths if p.arm == a.index and p.responder]
        for a in design.arms
    ]
    nr_paths = [
        [p.index for p in design.paths if p.arm == a.index and not p.responder]
        for a in design.arms
    ]
    u = rng.random(n_clusters)
    path = np.empty(n_clusters, dtype=np.int64)
    for i in range(n_clusters):
        opts = resp_paths[arm[i]] if responder[i] else nr_paths[arm[i]]
        path[i] = opts[min(int(u[i] * len(opts)), len(opts) - 1)]

    mu_matrix = np.array([p.mu for p in design.paths])
    ybar, n_avail = _simulate_ybar(model, mu_matrix[path], rng)
    n_redrawn = 0
    bad = np.flatnonzero(n_avail == 0)
    rounds = 0
    while bad.size:
        rounds += 1
        if rounds > MAX_REDRAW_ROUNDS:
            raise DegenerateMissingnessError("cluster redraw did not terminate")
        n_redrawn += bad.size
        yb, na = _simulate_ybar(model, mu_matrix[path[bad]], rng)
        ybar[bad] = yb
        n_avail[bad] = na
        bad = bad[na == 0]
    if n_redrawn > MAX_REDRAW_FRACTION * n_clusters:
        raise DegenerateMissingnessError(
            f"{n_redrawn} redraws for {n_clusters} clusters; missingness is degenerate"
        )
    return TrialDataset(arm, responder, path, ybar, n_avail, n_redrawn)


def ipw_weights(ds: TrialDataset, design: SmartDesign, regime: Regime) -> np.ndarray:
    """Per-cluster IPW weight for one regime (zero when inconsistent)."""
    pi1 = stage1_probs(design)
    target_path = np.where(ds.responder, regime.responder_path, regime.nonresp_path)
    consistent = (ds.arm == regime.arm) & (ds.path == target_path)
    pi2_obs = np.array([stage2_prob(design, p) for p in ds.path])
    w = consistent / (pi1[ds.arm] * pi2_obs)
    if not consistent.any():
        warnings.warn(
            f"no cluster is consistent with regime {regime.index + 1}; estimate degenerates to 0",
            stacklevel=2,
        )
    return w


def ipw_estimate(ds: TrialDataset, design: SmartDesign, regime_ids: tuple[int, ...]) -> float:
    """IPW estimate of the regime mean (one id) or mean difference (two ids, 0-based)."""
    est = 0.0
    for sign, rid in zip((1.0, -1.0), regime_ids):
        w = ipw_weights(ds, design, design.regimes[rid])
        est += sign * float(np.mean(w * ds.ybar))
    return est


def _empirical_sigma_sq(ds: TrialDataset, design: SmartDesign, regime_ids: tuple[int, ...]) -> float:
    """Per-dataset estimate of sigma^2 = N Var(delta_hat) / 2 from the weighted contrasts."""
    contrast = np.zeros(ds.n_clusters)
    for sign, rid in zip((1.0, -1.0), regime_ids):
        w = ipw_weights(ds, design, design.regimes[rid])
        contrast += sign * w * ds.ybar
    return float(np.var(contrast, ddof=1)) / 2.0


def mc_power(
    design: SmartDesign,
    model: OutcomeModel,
    test: TestSpec,
    regime_ids: tuple[int, ...],
    n_clusters: int,
    sigma_sq: float,
    reps: int = 5000,
    seed: int = 0,
    workers: int = 1,
    empirical_variance: bool = False,
) -> PowerEstimate:
    """Monte Carlo power of the Wald test at the given N.

    ``sigma_sq`` is the design-stage closed-form variance (N x Var / 2)
    used in the test statistic unless ``empirical_variance`` is set.
    """
    if reps < 100:
        warnings.warn(f"reps={reps} is small; the power estimate will be noisy", stacklevel=2)

    def one_rep(rep: int) -> tuple[float, bool]:
        ds = simulate_trial(design, model, n_clusters, seed, _key=(POWER, rep))
        d_hat = ipw_estimate(ds, design, regime_ids)
        s_sq = _empirical_sigma_sq(ds, design, regime_ids) if empirical_variance else sigma_sq
        z = wald_z(d_hat, s_sq, n_clusters)
        return d_hat, reject(z, test.alpha)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one_rep, range(reps)))
    else:
        results = [one_rep(r) for r in range(reps)]
    deltas = np.array([d for d, _ in results])
    rejected = np.array([r for _, r in results])
    return PowerEstimate(
        power=float(np.mean(rejected)),
        reps=reps,
        mean_abs_delta=float(np.mean(np.abs(deltas))),
        mcsd=float(np.std(deltas, ddof=1)),
    )
