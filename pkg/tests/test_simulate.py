import numpy as np
import pytest
from scipy.stats import chi2

from arfima_ael.model import ModelSpec, ParamVector
from arfima_ael.simulate import (
    FAMILIES,
    draw_innovations,
    derive_rng,
    fractional_acvf,
    fractional_ma_weights,
    innovation_family,
    simulate_arfima,
)

PURE = ModelSpec(0, 0)
BETA_D3 = ParamVector(phi=[], theta=[], d=0.3, sigma2=1.0)


def test_family_variances():
    assert FAMILIES["gaussian"].variance == 1.0
    assert FAMILIES["t5"].variance == pytest.approx(5 / 3)
    assert FAMILIES["t10"].variance == pytest.approx(10 / 8)
    assert FAMILIES["exp1"].variance == 1.0
    assert FAMILIES["chisq5"].variance == 10.0


def test_unknown_family_rejected():
    with pytest.raises(ValueError, match="unknown innovation family"):
        innovation_family("cauchy")


def test_exp1_centered_mean():
    draws = draw_innovations("exp1", 10**6, seed=1)
    # CLT bound 4 sigma / sqrt(N) with sigma = 1
    assert abs(draws.mean()) < 4e-3


def test_chisq5_variance():
    draws = draw_innovations("chisq5", 10**6, seed=2)
    assert draws.var() == pytest.approx(10.0, rel=0.02)
    assert abs(draws.mean()) < 4 * np.sqrt(10) / 1e3


def test_draws_deterministic():
    a = draw_innovations("gaussian", 1000, seed=42)
    b = draw_innovations("gaussian", 1000, seed=42)
    np.testing.assert_array_equal(a, b)
    c = draw_innovations("gaussian", 1000, seed=43)
    assert not np.array_equal(a, c)


def test_derive_rng_distinct_streams():
    x = derive_rng(7, 0).standard_normal(5)
    y = derive_rng(7, 1).standard_normal(5)
    z = derive_rng(7, 0).standard_normal(5)
    np.testing.assert_array_equal(x, z)
    assert not np.array_equal(x, y)


def test_fractional_acvf_lag1_ratio():
    gam = fractional_acvf(0.3, 1.0, 1)
    assert gam[1] / gam[0] == pytest.approx(0.3 / 0.7, rel=1e-12)


def test_fractional_ma_weights_recursion():
    w = fractional_ma_weights(0.3, 4)
    np.testing.assert_allclose(w, [1.0, 0.3, 0.3 * 1.3 / 2, 0.3 * 1.3 * 2.3 / 6], rtol=1e-13)


def test_simulation_deterministic():
    spec = ModelSpec(1, 0)
    beta = ParamVector(phi=[0.2], theta=[], d=0.3, sigma2=1.0)
    a = simulate_arfima(spec, beta, "gaussian", 101, seed=7)
    b = simulate_arfima(spec, beta, "gaussian", 101, seed=7)
    np.testing.assert_array_equal(a.values, b.values)
    assert a.T == 101


def test_even_length_mapped_down():
    ts = simulate_arfima(PURE, BETA_D3, "t5", 50, seed=3)
    assert ts.T == 49
    assert ts.meta["requested_T"] == 50
    assert ts.meta["method"] == "truncated-ma"


def test_too_short_rejected():
    with pytest.raises(ValueError):
        simulate_arfima(PURE, BETA_D3, "gaussian", 4, seed=0)


def test_gaussian_path_uses_circulant_embedding():
    ts = simulate_arfima(PURE, BETA_D3, "gaussian", 101, seed=5)
    assert ts.meta["method"] == "davies-harte"
    assert ts.meta["fallback"] is False


def test_lag1_autocorrelation_near_theory():
    # gamma_1/gamma_0 = d/(1-d) = 3/7; sample ACF carries the usual
    # long-memory mean-subtraction bias, absorbed by the 0.05 margin.
    acs = []
    for s in range(200):
        z = simulate_arfima(PURE, BETA_D3, "gaussian", 2001, seed=100 + s).values
        x = z - z.mean()
        acs.append(np.sum(x[:-1] * x[1:]) / np.sum(x * x))
    assert abs(np.mean(acs) - 3 / 7) < 0.05


def test_acf_lags_1_to_5_within_3_mc_se():
    gam = fractional_acvf(0.3, 1.0, 5)
    rho = gam[1:] / gam[0]
    R = 200
    acf = np.empty((R, 5))
    for s in range(R):
        z = simulate_arfima(PURE, BETA_D3, "gaussian", 2001, seed=500 + s).values
        T = z.size
        # unbiased lag covariance over the true variance: E equals rho exactly,
        # so the 3-SE band is a fair test (sample-ACF ratio bias would not be)
        for h in range(1, 6):
            acf[s, h - 1] = np.sum(z[:-h] * z[h:]) / (T - h) / gam[0]
    mean = acf.mean(axis=0)
    se = acf.std(axis=0, ddof=1) / np.sqrt(R)
    assert np.all(np.abs(mean - rho) < 3 * se)


def test_near_zero_d_degenerates_to_white_noise():
    beta = ParamVector(phi=[], theta=[], d=1e-8, sigma2=1.0)
    cutoff = chi2.ppf(0.99, 10)
    ok = 0
    for s in range(200):
        z = simulate_arfima(PURE, beta, "gaussian", 1001, seed=900 + s).values
        T = z.size
        x = z - z.mean()
        denom = np.sum(x * x)
        lb = 0.0
        for h in range(1, 11):
            r = np.sum(x[:-h] * x[h:]) / denom
            lb += r * r / (T - h)
        lb *= T * (T + 2)
        ok += lb < cutoff
    assert ok >= 0.95 * 200


def test_sample_mean_shrinks_at_large_T():
    for s in range(5):
        z = simulate_arfima(PURE, BETA_D3, "gaussian", 4001, seed=50 + s).values
        assert abs(z.mean()) < 0.5


def test_nongaussian_variance_matches_core():
    # exp1 with sigma2=1: series variance should be gamma_0(d=0.3) ~ 1.3165
    gam0 = fractional_acvf(0.3, 1.0, 0)[0]
    vs = []
    for s in range(80):
        z = simulate_arfima(PURE, BETA_D3, "exp1", 801, seed=2000 + s).values
        vs.append(np.mean(z**2))
    assert np.mean(vs) == pytest.approx(gam0, rel=0.08)


def test_csv_roundtrip(tmp_path):
    ts = simulate_arfima(PURE, BETA_D3, "gaussian", 9, seed=1)
    out = tmp_path / "series.csv"
    ts.to_csv(out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "t,value"
    assert len(lines) == 10
    back = np.loadtxt(out, delimiter=",", skiprows=1)
    np.testing.assert_allclose(back[:, 1], ts.values, rtol=1e-16)
