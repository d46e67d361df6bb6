from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from prossim.estimators import (empirical_ci, estimate_pros, estimate_pros_batch, estimate_rss,
                                relative_efficiency, sd_reduction, series_sd, srs_sd_analytic,
                                summarize)


@st.composite
def weighted_samples(draw):
    H = draw(st.integers(1, 6))
    m = draw(st.integers(1, 12))
    rows = []
    for _ in range(m):
        raw = draw(st.lists(st.integers(0, 4), min_size=H, max_size=H).filter(lambda r: sum(r) > 0))
        rows.append([x / sum(raw) for x in raw])
    ys = draw(st.lists(st.integers(0, 1), min_size=m, max_size=m))
    return H, np.array(rows), np.array(ys)


def _exact_oracle(W, ys):
    H = W.shape[1]
    means = []
    for h in range(H):
        den = sum(Fraction(float(w)) for w in W[:, h])
        if den > 0:
            means.append(sum(Fraction(float(w)) * int(y) for w, y in zip(W[:, h], ys)) / den)
    return sum(means) / len(means)


@given(weighted_samples())
def test_pros_matches_exact_oracle(sample):
    H, W, ys = sample
    est = estimate_pros((W, ys), H)
    assert est == float(_exact_oracle(W, ys))
    assert 0.0 <= est <= 1.0
    assert estimate_pros_batch(W[None], ys[None])[0] == pytest.approx(est, abs=1e-12)


@given(st.integers(1, 8), st.integers(1, 8), st.data())
def test_unit_weights_reduce_to_sample_mean(H, n, data):
    ys = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n * H, max_size=n * H)))
    W = np.repeat(np.eye(H), n, axis=0)
    assert estimate_pros((W, ys), H) == estimate_rss(ys)


def test_census_gives_exactly_one():
    W = np.random.default_rng(1).dirichlet(np.ones(7), size=(200, 21))
    ys = np.ones((200, 21))
    assert (estimate_pros_batch(W, ys) == 1.0).all()
    assert estimate_pros((W[0], ys[0]), 7) == 1.0


def test_zero_weight_columns_are_skipped():
    W = np.array([[1.0, 0.0, 0.0], [0.5, 0.0, 0.5]])
    assert estimate_pros((W, [1, 0]), 3) == pytest.approx((1 / 1.5 + 0.0) / 2)
    with pytest.raises(ValueError, match="zero total weight"):
        estimate_pros((np.zeros((2, 2)), [1, 0]), 2)
    with pytest.raises(ValueError):
        estimate_pros((W, [1, 0]), 4)


def test_srs_sd_analytic_oracle():
    # hypergeometric variance of a count divided by m^2
    N, K, m = 699, 241, 54
    var = m * (K / N) * (1 - K / N) * (N - m) / (N - 1) / m ** 2
    assert srs_sd_analytic(K / N, N, m) == pytest.approx(np.sqrt(var), rel=1e-14)
    assert srs_sd_analytic(0.3, 699, 699) == 0.0
    assert srs_sd_analytic(0.0, 699, 54) == 0.0 and srs_sd_analytic(1.0, 699, 54) == 0.0
    # frozen from the hypergeometric oracle above
    assert srs_sd_analytic(0.3499, 699, 54) == pytest.approx(0.0623903, abs=5e-8)
    with pytest.raises(ValueError):
        srs_sd_analytic(1.2, 699, 54)
    with pytest.raises(ValueError):
        srs_sd_analytic(0.3, 699, 700)


@pytest.mark.parametrize("values,sd", [((0.3, 0.3, 0.3), 0.0), ((0, 1), 0.5 ** 0.5), ((0.2, 0.4, 0.6), 0.2)])
def test_series_sd(values, sd):
    assert series_sd(values) == pytest.approx(sd, abs=1e-15)


def test_sd_reduction_and_efficiency():
    assert sd_reduction(0.05, 0.1) == pytest.approx(50.0)
    assert sd_reduction(0.1, 0.1) == 0.0
    with pytest.raises(ValueError):
        sd_reduction(0.1, 0.0)
    assert relative_efficiency(4.0, 2.0) == 2.0


def test_empirical_ci_uses_linear_quantiles():
    v = np.arange(101, dtype=float)
    assert empirical_ci(v) == (5.0, 95.0)
    with pytest.raises(ValueError, match="at least 20"):
        empirical_ci(v[:10])
    with pytest.raises(ValueError):
        series_sd([1.0])


def test_summarize():
    v = np.linspace(0, 1, 21)
    r = summarize(v, baseline_sd=1.0)
    assert r.average == pytest.approx(0.5)
    assert r.sd == pytest.approx(np.std(v, ddof=1))
    assert r.ci_length == pytest.approx(r.ci_upper - r.ci_lower)


def test_empirical_ci_examples():
    lo, hi = empirical_ci(np.arange(1, 101) / 100)
    assert (lo, hi) == (pytest.approx(0.0595), pytest.approx(0.9505))
    assert empirical_ci(np.full(30, 0.4)) == (0.4, 0.4)
    sym = np.concatenate([0.5 - np.linspace(0, 0.3, 25), 0.5 + np.linspace(0, 0.3, 25)])
    lo, hi = empirical_ci(sym)
    assert lo + hi == pytest.approx(1.0)


@given(st.lists(st.floats(0, 1), min_size=20, max_size=60), st.floats(0.5, 0.95), st.floats(0.0, 0.04))
def test_wider_coverage_never_shrinks(values, coverage, extra):
    lo1, hi1 = empirical_ci(values, coverage)
    lo2, hi2 = empirical_ci(values, coverage + extra)
    assert lo2 <= lo1 + 1e-15 and hi2 >= hi1 - 1e-15


@given(weighted_samples(), st.randoms(use_true_random=False))
def test_pros_is_permutation_invariant(sample, rnd):
    H, W, ys = sample
    order = list(range(len(ys)))
    rnd.shuffle(order)
    assert estimate_pros((W[order], ys[order]), H) == estimate_pros((W, ys), H)


@given(st.floats(1e-6, 1), st.floats(1e-6, 1))
def test_sd_reduction_sign(cand, base):
    red = sd_reduction(cand, base)
    assert (cand < base) == (red > 0)
