import math

import numpy as np
import pytest

import smartp
from smartp import (
    DegenerateMissingnessError,
    MissingnessParams,
    OutcomeModel,
    SkewTParams,
    default_car_model,
    estimate_path_moments,
    regime_covariance,
    regime_mean,
    regime_variance,
)
from smartp._backend import HAVE_NUMBA, active_backend, set_backend
from smartp.moments import _merge, welford_reference
from conftest import make_model

INF = math.inf


def reference_path_moments(model, mu_vec, num, seed):
    """Independent estimator: legacy MT19937 generator, plain vectorized numpy."""
    rs = np.random.RandomState(seed)
    t_dim = model.sigma.dim
    chol = model.sigma.chol
    kap = model.st.kappa
    vals = []
    for start in range(0, num, 50_000):
        m = min(50_000, num - start)
        q = rs.standard_normal((m, t_dim)) @ chol.T
        e0 = rs.standard_normal((m, t_dim))
        z0 = rs.standard_normal((m, t_dim))
        z1 = rs.standard_normal((m, t_dim))
        x = kap * np.abs(z0) + math.sqrt(1 - kap**2) * z1
        if math.isinf(model.st.dof):
            e1 = model.st.scale * x
        else:
            v = rs.standard_gamma(model.st.dof / 2, (m, t_dim)) * 2 / model.st.dof
            e1 = model.st.scale * x / np.sqrt(v)
        mp = model.mp
        avail = (mp.intercept + mp.loading * q + mp.sigma0 * e0) <= mp.cutoff
        n_avail = avail.sum(axis=1)
        keep = n_avail > 0
        ybar = ((mu_vec + q + e1) * avail).sum(axis=1)[keep] / n_avail[keep]
        vals.append(ybar)
    y = np.concatenate(vals)
    return y.mean(), y.var(ddof=1), y.size


def test_iid_limit():
    """No missingness and vanishing spatial effect: ybar is a plain mean of errors."""
    model = OutcomeModel(
        default_car_model(tau=1e-6),
        SkewTParams(0.0, 0.95, 0.0, INF),
        MissingnessParams(-30.0, 0.0),
    )
    pm = estimate_path_moments(np.zeros(28), model, 200_000, seed=3)
    want_var = 0.95**2 / 28
    assert abs(pm.mu) < 3 * pm.se_mu + 1e-9
    se_var = want_var * math.sqrt(2 / (pm.n_samples - 1))
    assert abs(pm.sigma2 - want_var) < 4 * se_var
    assert pm.n_redrawn == 0


def test_determinism_and_worker_independence(normal_model):
    mu = np.full(28, 2.0)
    a = estimate_path_moments(mu, normal_model, 150_000, seed=11, path_id=3, workers=1)
    b = estimate_path_moments(mu, normal_model, 150_000, seed=11, path_id=3, workers=1)
    c = estimate_path_moments(mu, normal_model, 150_000, seed=11, path_id=3, workers=4)
    assert (a.mu, a.sigma2, a.n_samples) == (b.mu, b.sigma2, b.n_samples)
    assert (a.mu, a.sigma2, a.n_samples) == (c.mu, c.sigma2, c.n_samples)
    d = estimate_path_moments(mu, normal_model, 150_000, seed=12, path_id=3)
    assert d.mu != a.mu


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
def test_backends_bit_identical(normal_model):
    mu = np.full(28, 0.5)
    current = active_backend()
    try:
        set_backend("numba")
        a = estimate_path_moments(mu, normal_model, 80_000, seed=4)
        set_backend("numpy")
        b = estimate_path_moments(mu, normal_model, 80_000, seed=4)
    finally:
        set_backend(current)
    assert a.mu == b.mu
    assert a.sigma2 == b.sigma2


def test_dual_implementation_cross_check(normal_model):
    """Informative missingness biases the path mean; two independent samplers agree."""
    mu = np.full(28, 2.0)
    pm = estimate_path_moments(mu, normal_model, 300_000, seed=21, path_id=1)
    ref_mean, ref_var, ref_n = reference_path_moments(normal_model, 2.0, 300_000, seed=987)
    joint_se = math.sqrt(pm.sigma2 / pm.n_samples + ref_var / ref_n)
    assert abs(pm.mu - ref_mean) < 4 * joint_se
    # the bias term is clearly negative: availability favours low spatial effects
    assert pm.mu < 2.0 - 0.1


def test_welford_merge_matches_two_pass():
    rng = np.random.default_rng(0)
    x = rng.normal(3.0, 2.0, 1000)
    n, mean, m2 = 0, 0.0, 0.0
    for chunk in np.array_split(x, 7):
        cm = chunk.mean()
        n, mean, m2 = _merge(n, mean, m2, chunk.size, cm, float(np.sum((chunk - cm) ** 2)))
    ref_mean, ref_var = welford_reference(x)
    assert mean == pytest.approx(ref_mean, rel=1e-12)
    assert m2 / (n - 1) == pytest.approx(ref_var, rel=1e-10)


def test_estimate_warns_below_floor(normal_model):
    with pytest.warns(UserWarning, match="small"):
        estimate_path_moments(np.zeros(28), normal_model, 2_000, seed=1)


def test_degenerate_missingness_raises():
    model = make_model(a0=6.0, b0=0.0)  # availability ~ 1e-9 per tooth
    with pytest.raises(DegenerateMissingnessError):
        estimate_path_moments(np.zeros(28), model, 20_000, seed=1)


def test_se_scales_with_num(normal_model):
    small = estimate_path_moments(np.zeros(28), normal_model, 50_000, seed=8)
    big = estimate_path_moments(np.zeros(28), normal_model, 200_000, seed=8)
    assert big.se_mu / small.se_mu == pytest.approx(0.5, abs=0.05)


# --- closed-form algebra ---------------------------------------------------


def test_regime_mean_trivials():
    assert regime_mean(5.0, 1.0, 1.0) == 5.0
    assert regime_mean(0.0, 2.0, 0.5) == 1.0


def test_regime_variance_hand_examples():
    # single path, no weighting inflation
    assert regime_variance(0.0, 2.5, 9.9, 9.9, 1.0, 1.0, 1.0, 0.25) == pytest.approx(2.5)
    # worked arithmetic: 1/0.5*... = 1 + 4 = 5
    v = regime_variance(0.0, 1.0, 0.0, 1.0, 0.5, 0.5, 1.0, 0.25)
    assert v == pytest.approx(5.0)
    with pytest.raises(ValueError):
        regime_variance(0, 1, 0, 1, 0.5, 0.0, 1.0, 0.25)


def test_regime_variance_lower_bound():
    rng = np.random.default_rng(1)
    for _ in range(200):
        g = rng.uniform(0.05, 0.95)
        pi1, p2r, p2nr = rng.uniform(0.1, 1.0, 3)
        mu_r, mu_nr = rng.normal(0, 3, 2)
        s_r, s_nr = rng.uniform(0, 4, 2)
        v = regime_variance(mu_r, s_r, mu_nr, s_nr, g, pi1, p2r, p2nr)
        assert v >= g * (1 - g) * (mu_r - mu_nr) ** 2 - 1e-12


def test_regime_covariance_trivials():
    # distinct arms, all means zero: every term carries a mean factor
    assert regime_covariance(0.0, 3.0, 0.0, 0.0, 0.0, 0.3, 0.6, 0.5, 1.0, False) == 0.0
    # shared responders only: gamma=1, unit weights -> sigma2_R
    assert regime_covariance(1.5, 2.0, 0.0, 1.5, 0.0, 1.0, 1.0, 1.0, 1.0, True) == pytest.approx(2.0)
    with pytest.raises(ValueError, match="response rate"):
        regime_covariance(0, 1, 0, 0, 0, 0.3, 0.4, 0.5, 1.0, True)


def test_pair_variance_nonnegative():
    rng = np.random.default_rng(2)
    for _ in range(200):
        g = rng.uniform(0.05, 0.95)
        pi1 = rng.uniform(0.1, 0.9)
        p2r, p2nr = rng.uniform(0.1, 1.0, 2)
        mu_r = rng.normal(0, 2)
        s_r = rng.uniform(0.1, 3)
        mu1_nr, mu3_nr = rng.normal(0, 2, 2)
        s1_nr, s3_nr = rng.uniform(0.1, 3, 2)
        v1 = regime_variance(mu_r, s_r, mu1_nr, s1_nr, g, pi1, p2r, p2nr)
        v3 = regime_variance(mu_r, s_r, mu3_nr, s3_nr, g, pi1, p2r, p2nr)
        cov = regime_covariance(mu_r, s_r, mu1_nr, mu_r, mu3_nr, g, g, pi1, p2r, True)
        assert v1 + v3 - 2 * cov > -1e-10


def test_shared_pair_requires_common_responder_path():
    d = smartp.periodontitis_default()
    with pytest.raises(ValueError, match="different responder paths"):
        smartp.moments.regime_pair_is_shared(
            d, smartp.Regime(0, 0, 1, 0), smartp.Regime(1, 2, 3, 0)
        )
