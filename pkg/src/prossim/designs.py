"""Sampling designs: SRS, one-concomitant RSS, multi-concomitant PROS and logistic-ranked RSS.

Every design follows the same pattern: a replicate's randomness is drawn from
its own generator in a fixed layout (`replicate_draws`), then a batched kernel
turns stacked draws into measured units. The single-replicate ``draw_*``
functions run the kernel with a batch of one, so they agree exactly with the
Monte Carlo harness for the same stream.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from . import logistic
from .dataset import Population, correlation
from .estimators import estimate_pros_batch
from .ranking import TieStructure, discretize, select_units, strength_matrices, tie_blocks


class Design(str, Enum):
    SRS = "srs"
    RSS_ONE = "rss_one_concomitant"
    PROS = "pros_multi"
    LOGISTIC = "rss_logistic"


@dataclass(frozen=True)
class RankingModel:
    """Named concomitant set with a tie divisor per concomitant.

    ``alpha`` and ``reverse`` override the population-derived weights and
    ranking directions when given.
    """

    name: str
    concomitants: tuple[tuple[str, TieStructure], ...]
    alpha: tuple[float, ...] | None = None
    reverse: tuple[bool, ...] | None = None

    def __post_init__(self):
        if not self.concomitants:
            raise ValueError(f"model {self.name!r} has no concomitants")
        K = len(self.concomitants)
        if self.alpha is not None:
            if len(self.alpha) != K:
                raise ValueError(f"model {self.name!r}: {len(self.alpha)} alpha values for {K} concomitants")
            if any(a < 0 for a in self.alpha) or abs(sum(self.alpha) - 1) > 1e-9:
                raise ValueError(f"model {self.name!r}: explicit alpha must be non-negative and sum to 1")
        if self.reverse is not None and len(self.reverse) != K:
            raise ValueError(f"model {self.name!r}: {len(self.reverse)} reverse flags for {K} concomitants")

    @classmethod
    def of(cls, name: str, *concomitants: str, c: float = 1.0) -> "RankingModel":
        return cls(name, tuple((n, TieStructure(c)) for n in concomitants))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.concomitants)

    @property
    def c_spec(self) -> str:
        return ";".join(f"{n}:{t.divisor:g}" for n, t in self.concomitants)


@dataclass(frozen=True)
class DesignConfig:
    design: Design
    H: int
    n: int
    model: RankingModel | None = None
    training_size: int = 100
    fixed_training: bool = False
    disjoint_sets: bool = True

    def __post_init__(self):
        object.__setattr__(self, "design", Design(self.design))
        if self.H < 1 or self.n < 1:
            raise ValueError(f"set size H={self.H} and cycle size n={self.n} must be >= 1")
        if self.design is not Design.SRS and self.model is None:
            raise ValueError(f"design {self.design.value} needs a ranking model")
        if self.design is Design.RSS_ONE and len(self.model.concomitants) != 1:
            raise ValueError("one-concomitant RSS needs exactly one concomitant, "
                             f"model {self.model.name!r} has {len(self.model.concomitants)}")
        if self.design is Design.LOGISTIC and self.training_size < 1:
            raise ValueError("training_size must be positive")

    @property
    def size(self) -> int:
        return self.n * self.H

    @property
    def ranks(self) -> np.ndarray:
        # r-major: all n cycles for rank 1, then rank 2, ...
        return np.repeat(np.arange(1, self.H + 1), self.n)


@dataclass(frozen=True)
class ProsObservation:
    y: int
    weights: np.ndarray
    rank: int
    unit: int


@dataclass(frozen=True)
class ReplicateSample:
    observations: tuple[ProsObservation, ...]
    H: int

    @property
    def ys(self) -> np.ndarray:
        return np.array([o.y for o in self.observations])

    @property
    def weight_matrix(self) -> np.ndarray:
        return np.array([o.weights for o in self.observations])


@dataclass(frozen=True)
class PreparedModel:
    """A ranking model resolved against a population: columns, directions and weights."""

    names: tuple[str, ...]
    raw: np.ndarray
    disc: np.ndarray
    reverse: tuple[bool, ...]
    alphas: tuple[float, ...]


def prepare_model(pop: Population, model: RankingModel,
                  alphas: Mapping[str, float] | Sequence[float] | None = None) -> PreparedModel:
    names = model.names
    raw = pop.matrix(names)
    disc = np.column_stack([discretize(raw[:, k], t) for k, (_, t) in enumerate(model.concomitants)])
    rhos = None
    if model.reverse is None or (alphas is None and model.alpha is None):
        rhos = [correlation(pop, n) for n in names]
    reverse = model.reverse if model.reverse is not None else tuple(bool(r < 0) for r in rhos)
    if alphas is None:
        alphas = model.alpha
    if alphas is None:
        total = sum(abs(r) for r in rhos)
        if not total > 0:
            raise ValueError("no ranking information: every correlation is zero")
        alphas = tuple(abs(r) / total for r in rhos)
    elif isinstance(alphas, Mapping):
        alphas = tuple(float(alphas[n]) for n in names)
    alphas = tuple(float(a) for a in alphas)
    if len(alphas) != len(names):
        raise ValueError(f"{len(alphas)} alpha values for {len(names)} concomitants")
    for a in (raw, disc):
        a.flags.writeable = False
    return PreparedModel(names, raw, disc, tuple(reverse), alphas)


def floyd_resolve(t, N: int) -> np.ndarray:
    """Turn Floyd's raw draws into a uniform k-subset of range(N).

    ``t[..., i]`` must be uniform on 0..N-k+i. Vectorized over leading axes.
    """
    t = np.asarray(t)
    k = t.shape[-1]
    out = np.empty_like(t)
    for i in range(k):
        ti = t[..., i]
        dup = (out[..., :i] == ti[..., None]).any(axis=-1)
        out[..., i] = np.where(dup, N - k + i, ti)
    return out


def _check_draw(k: int, N: int):
    if k > N:
        raise ValueError(f"cannot draw {k} distinct units from a population of {N}")


def _floyd_highs(N: int, k: int) -> np.ndarray:
    _check_draw(k, N)
    return np.arange(N - k + 1, N + 1)


def replicate_draws(rng: np.random.Generator, cfg: DesignConfig, N: int,
                    with_training: bool = True) -> dict[str, np.ndarray]:
    """All random numbers one replicate consumes, in a fixed order.

    Returns population indices already resolved: ``sample`` for SRS, and for
    ranked designs ``training`` (logistic only), ``sets`` of shape (nH, H)
    and uniform tie-break ``keys`` of the same shape.
    """
    if cfg.design is Design.SRS:
        _check_draw(cfg.size, N)
        return {"sample": rng.choice(N, size=cfg.size, replace=False)}
    out = {}
    if cfg.design is Design.LOGISTIC and with_training and not cfg.fixed_training:
        _check_draw(cfg.training_size, N)
        out["training"] = rng.choice(N, size=cfg.training_size, replace=False)
    S, H = cfg.size, cfg.H
    if cfg.disjoint_sets:
        _check_draw(S * H, N)
        out["sets"] = rng.choice(N, size=S * H, replace=False).reshape(S, H)
    else:
        _check_draw(H, N)
        out["sets"] = floyd_resolve(rng.integers(0, np.broadcast_to(_floyd_highs(N, H), (S, H))), N)
    out["keys"] = rng.random((S, H))
    return out


def pros_select(prep: PreparedModel, idx, keys, ranks):
    """Selected position and weight vector for every stacked set."""
    vals = prep.disc[idx]
    dbar = np.zeros(idx.shape + idx.shape[-1:])
    for k in range(len(prep.names)):
        less, eq = tie_blocks(vals[..., k], prep.reverse[k])
        dbar = dbar + prep.alphas[k] * strength_matrices(less, eq)
    r = np.broadcast_to(ranks, idx.shape[:-1])
    sel = select_units(dbar, r, keys)
    w = np.take_along_axis(dbar, sel[..., None, None], axis=-2)[..., 0, :]
    return sel, w


def rank_select(score, keys, ranks):
    """Position holding rank r when ties in ``score`` are broken by ``keys``."""
    col, row = score[..., :, None], score[..., None, :]
    kc, kr = keys[..., :, None], keys[..., None, :]
    rank = 1 + np.count_nonzero((row < col) | ((row == col) & (kr < kc)), axis=-1)
    return np.argmax(rank == np.asarray(ranks)[..., None], axis=-1)


def _stack(draws: list[dict[str, np.ndarray]]) -> dict[str, np.ndarray]:
    return {k: np.stack([d[k] for d in draws]) for k in draws[0]}


def fit_training_batch(pop: Population, prep: PreparedModel, train_idx) -> np.ndarray:
    X = prep.raw[train_idx]
    y = pop.response[train_idx].astype(float)
    coef, conv, _ = logistic.fit_batch(X, y)
    if not conv.all():
        raise RuntimeError(f"{np.count_nonzero(~conv)} logistic fits did not converge")
    return coef


def measure(pop: Population, cfg: DesignConfig, draws: dict[str, np.ndarray],
            prep: PreparedModel | None = None, coef=None):
    """Population indices of the measured units (B, N) and weight vectors (B, N, H) or None."""
    if cfg.design is Design.SRS:
        return draws["sample"], None
    idx = draws["sets"]
    keys = draws["keys"]
    ranks = cfg.ranks
    weights = None
    if cfg.design is Design.PROS:
        sel, weights = pros_select(prep, idx, keys, ranks)
    elif cfg.design is Design.RSS_ONE:
        score = prep.raw[idx][..., 0]
        if prep.reverse[0]:
            score = -score
        sel = rank_select(score, keys, ranks)
    else:
        if coef is None:
            coef = fit_training_batch(pop, prep, draws["training"])
        coef = np.broadcast_to(coef, idx.shape[:1] + coef.shape[-1:])
        score = coef[:, 0, None, None] + np.einsum("bshk,bk->bsh", prep.raw[idx], coef[:, 1:])
        sel = rank_select(score, keys, ranks)
    units = np.take_along_axis(idx, sel[..., None], axis=-1)[..., 0]
    return units, weights


def estimates(pop: Population, cfg: DesignConfig, units, weights) -> np.ndarray:
    ys = pop.response[units].astype(float)
    if cfg.design is Design.PROS:
        return estimate_pros_batch(weights, ys)
    return ys.mean(axis=-1)


def simulate(pop: Population, cfg: DesignConfig, rngs, prep: PreparedModel | None = None,
             coef=None) -> np.ndarray:
    """Estimates for a batch of replicates, one generator per replicate."""
    draws = _stack([replicate_draws(g, cfg, pop.size, with_training=coef is None) for g in rngs])
    if prep is None and cfg.model is not None:
        prep = prepare_model(pop, cfg.model)
    units, weights = measure(pop, cfg, draws, prep, coef)
    return estimates(pop, cfg, units, weights)


def _to_sample(pop: Population, cfg: DesignConfig, units, weights) -> ReplicateSample:
    units = units[0]
    H = cfg.H if cfg.design is not Design.SRS else 1
    ranks = cfg.ranks if cfg.design is not Design.SRS else np.ones(units.size, dtype=int)
    obs = []
    for j, u in enumerate(units):
        if weights is not None:
            w = weights[0, j].copy()
        else:
            w = np.zeros(H)
            w[ranks[j] - 1] = 1.0
        obs.append(ProsObservation(int(pop.response[u]), w, int(ranks[j]), int(u)))
    return ReplicateSample(tuple(obs), H)


def draw_srs(pop: Population, m: int, rng: np.random.Generator) -> ReplicateSample:
    """m distinct records, uniformly without replacement."""
    cfg = DesignConfig(Design.SRS, 1, m)
    units, _ = measure(pop, cfg, _stack([replicate_draws(rng, cfg, pop.size)]))
    return _to_sample(pop, cfg, units, None)


def draw_pros(pop: Population, cfg: DesignConfig, alphas=None,
              rng: np.random.Generator | None = None) -> ReplicateSample:
    if cfg.design is not Design.PROS:
        raise ValueError(f"draw_pros needs a {Design.PROS.value} config")
    prep = prepare_model(pop, cfg.model, alphas)
    units, weights = measure(pop, cfg, _stack([replicate_draws(rng, cfg, pop.size)]), prep)
    return _to_sample(pop, cfg, units, weights)


def draw_rss_one(pop: Population, cfg: DesignConfig, rng: np.random.Generator) -> ReplicateSample:
    if cfg.design is not Design.RSS_ONE:
        raise ValueError(f"draw_rss_one needs a {Design.RSS_ONE.value} config")
    prep = prepare_model(pop, cfg.model)
    units, _ = measure(pop, cfg, _stack([replicate_draws(rng, cfg, pop.size)]), prep)
    return _to_sample(pop, cfg, units, None)


def draw_training(pop: Population, cfg: DesignConfig, rng: np.random.Generator) -> np.ndarray:
    _check_draw(cfg.training_size, pop.size)
    return rng.choice(pop.size, size=cfg.training_size, replace=False)


def fit_training(pop: Population, cfg: DesignConfig, train_idx) -> logistic.LogisticFit:
    train_idx = np.asarray(train_idx)
    return logistic.fit(pop.matrix(cfg.model.names)[train_idx], pop.response[train_idx])


def draw_rss_logistic(pop: Population, cfg: DesignConfig, fit: logistic.LogisticFit,
                      rng: np.random.Generator) -> ReplicateSample:
    """RSS ranked by the fitted linear predictor (monotone in the success probability)."""
    if cfg.design is not Design.LOGISTIC:
        raise ValueError(f"draw_rss_logistic needs a {Design.LOGISTIC.value} config")
    if not fit.converged:
        raise RuntimeError("logistic fit did not converge")
    if fit.slopes.size != len(cfg.model.concomitants):
        raise ValueError("fit and ranking model have different numbers of concomitants")
    prep = prepare_model(pop, cfg.model)
    draws = _stack([replicate_draws(rng, cfg, pop.size, with_training=False)])
    units, _ = measure(pop, cfg, draws, prep, coef=fit.coef[None])
    return _to_sample(pop, cfg, units, None)
