import math

import numpy as np
import pytest
from scipy.special import expit

from prossim.logistic import chi2_sf, fit, fit_batch, likelihood_ratio_test, penalized_score, predict


def chi2_sf_series(x, df, terms=400):
    """Regularized upper incomplete gamma from the lower-gamma power series."""
    s, z = df / 2.0, x / 2.0
    term = 1.0 / s
    total = term
    for k in range(1, terms):
        term *= z / (s + k)
        total += term
    lower = math.exp(s * math.log(z) - z - math.lgamma(s)) * total
    return 1.0 - lower


@pytest.mark.parametrize("x,df", [(3.841, 1), (0.5, 1), (5.991, 2), (10.0, 4), (2.0, 3)])
def test_chi2_matches_series(x, df):
    assert chi2_sf(x, df) == pytest.approx(chi2_sf_series(x, df), abs=1e-10)


def test_chi2_edges():
    assert chi2_sf(0.0, 1) == 1.0
    assert chi2_sf(1e4, 1) == pytest.approx(0.0, abs=1e-300)


def test_recovers_known_coefficients():
    rng = np.random.default_rng(11)
    x = rng.normal(size=(5000, 2))
    y = (rng.random(5000) < expit(-1 + x @ [2.0, -0.5])).astype(float)
    f = fit(x, y)
    assert f.converged
    np.testing.assert_allclose(f.coef, [-1, 2, -0.5], atol=0.15)
    assert np.abs(penalized_score(f.coef, x, y)).max() < 1e-6
    stat, df, p = likelihood_ratio_test(f)
    assert df == 2 and stat > 100 and p < 1e-10


def test_separable_data_stays_finite():
    x = np.arange(20, dtype=float)
    y = (x >= 10).astype(float)
    f = fit(x, y, max_iter=100)
    assert np.isfinite(f.coef).all()
    assert predict(f, 0.0) < 0.01 and predict(f, 19.0) > 0.99


def test_batch_matches_single():
    rng = np.random.default_rng(2)
    X = rng.integers(1, 11, size=(5, 100, 2)).astype(float)
    y = (rng.random((5, 100)) < 0.4).astype(float)
    coef, conv, _ = fit_batch(X, y)
    assert conv.all()
    for b in range(5):
        np.testing.assert_allclose(coef[b], fit(X[b], y[b]).coef, atol=1e-9)


def test_input_validation():
    with pytest.raises(ValueError, match="too small"):
        fit(np.zeros((2, 1)), [0, 1])
    with pytest.raises(ValueError, match="binary"):
        fit(np.arange(5.0), [0, 1, 2, 0, 1])


def test_uninformative_covariate_has_large_p_value():
    rng = np.random.default_rng(4)
    x = rng.normal(size=400)
    y = (rng.random(400) < 0.3).astype(float)
    _, _, p = likelihood_ratio_test(fit(x, y))
    assert p > 0.01
