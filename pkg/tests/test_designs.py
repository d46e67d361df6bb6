import numpy as np
import pytest
from hypothesis import given, strategies as st

from prossim.dataset import SUBJECT_ID
from prossim.designs import (Design, DesignConfig, RankingModel, draw_pros, draw_rss_logistic,
                             draw_rss_one, draw_srs, draw_training, fit_training, floyd_resolve,
                             measure, prepare_model, rank_select, replicate_draws, simulate)
from prossim.estimators import estimate_pros, estimate_rss
from prossim.harness import model
from prossim.ranking import TieStructure
from prossim.streams import stream


@given(st.integers(1, 30), st.data())
def test_floyd_gives_distinct_units(N, data):
    k = data.draw(st.integers(1, N))
    t = [data.draw(st.integers(0, N - k + i)) for i in range(k)]
    out = floyd_resolve(np.array(t), N)
    assert len(set(out.tolist())) == k and out.min() >= 0 and out.max() < N


def test_floyd_subsets_are_uniform():
    rng = np.random.default_rng(0)
    N, k, B = 5, 2, 60_000
    t = rng.integers(0, np.broadcast_to(np.arange(N - k + 1, N + 1), (B, k)))
    out = np.sort(floyd_resolve(t, N), axis=1)
    codes = out[:, 0] * N + out[:, 1]
    _, counts = np.unique(codes, return_counts=True)
    assert counts.size == 10
    np.testing.assert_allclose(counts / B, 0.1, atol=0.006)


def test_config_validation():
    with pytest.raises(ValueError):
        DesignConfig(Design.PROS, 3, 18)
    with pytest.raises(ValueError, match="exactly one"):
        DesignConfig(Design.RSS_ONE, 3, 18, model("5"))
    with pytest.raises(ValueError):
        DesignConfig(Design.SRS, 0, 54)
    with pytest.raises(ValueError, match="sum to 1"):
        RankingModel("m", (("a", TieStructure()),), alpha=(0.5,))
    cfg = DesignConfig("pros_multi", 3, 2, model("1"))
    assert cfg.design is Design.PROS and cfg.size == 6
    assert cfg.ranks.tolist() == [1, 1, 2, 2, 3, 3]


def test_prepare_model_reverses_negative_correlation(pop):
    prep = prepare_model(pop, model("6"))
    assert prep.reverse == (False, False, True)
    assert sum(prep.alphas) == pytest.approx(1.0)
    forced = prepare_model(pop, RankingModel("m", ((SUBJECT_ID, TieStructure()),), reverse=(False,)))
    assert forced.reverse == (False,)


def test_disjoint_sets_share_no_units(pop):
    cfg = DesignConfig(Design.PROS, 6, 9, model("1"))
    d = replicate_draws(stream(1, 0, 0), cfg, pop.size)
    assert d["sets"].shape == (54, 6)
    assert np.unique(d["sets"]).size == 324
    indep = DesignConfig(Design.PROS, 6, 9, model("1"), disjoint_sets=False)
    d2 = replicate_draws(stream(1, 0, 0), indep, pop.size)
    assert all(np.unique(row).size == 6 for row in d2["sets"])


def test_rank_select_matches_sort_oracle():
    rng = np.random.default_rng(3)
    score = rng.integers(0, 4, size=(200, 5)).astype(float)
    keys = rng.random((200, 5))
    ranks = rng.integers(1, 6, size=200)
    sel = rank_select(score, keys, ranks)
    for b in range(200):
        order = np.lexsort((keys[b], score[b]))
        assert sel[b] == order[ranks[b] - 1]


def test_single_untied_concomitant_pros_equals_rss(pop):
    pros = DesignConfig(Design.PROS, 3, 18, RankingModel.of("id", SUBJECT_ID))
    rss = DesignConfig(Design.RSS_ONE, 3, 18, RankingModel.of("id", SUBJECT_ID))
    for j in range(5):
        a = draw_pros(pop, pros, rng=stream(9, 0, j))
        b = draw_rss_one(pop, rss, stream(9, 0, j))
        assert [o.unit for o in a.observations] == [o.unit for o in b.observations]
        assert estimate_pros(a, 3) == estimate_rss(b)


def test_draw_pros_sample_structure(pop):
    cfg = DesignConfig(Design.PROS, 3, 4, model("5", 3, ties=True))
    s = draw_pros(pop, cfg, rng=stream(2, 0, 0))
    assert len(s.observations) == 12 and s.H == 3
    assert [o.rank for o in s.observations] == cfg.ranks.tolist()
    np.testing.assert_allclose(s.weight_matrix.sum(axis=1), 1.0)
    for o in s.observations:
        assert o.weights[o.rank - 1] == o.weights.max()


def test_draw_srs_distinct(pop):
    s = draw_srs(pop, 54, np.random.default_rng(0))
    units = [o.unit for o in s.observations]
    assert len(set(units)) == 54
    assert s.ys.tolist() == [int(pop.response[u]) for u in units]


def test_logistic_path(pop):
    cfg = DesignConfig(Design.LOGISTIC, 3, 6, model("4"), training_size=100)
    train = draw_training(pop, cfg, np.random.default_rng(0))
    assert np.unique(train).size == 100
    fit = fit_training(pop, cfg, train)
    assert fit.converged and (fit.slopes > 0).all()
    s = draw_rss_logistic(pop, cfg, fit, np.random.default_rng(1))
    assert len(s.observations) == 18
    est = simulate(pop, cfg, [stream(4, 0, j) for j in range(20)])
    assert est.shape == (20,) and ((0 <= est) & (est <= 1)).all()


def test_measure_with_ties_picks_weighted_units(pop):
    cfg = DesignConfig(Design.PROS, 6, 9, model("1", 6, ties=True))
    prep = prepare_model(pop, cfg.model)
    draws = replicate_draws(stream(5, 0, 0), cfg, pop.size)
    units, w = measure(pop, cfg, {k: v[None] for k, v in draws.items()}, prep)
    assert units.shape == (1, 54) and w.shape == (1, 54, 6)
    np.testing.assert_allclose(w.sum(axis=-1), 1.0)
