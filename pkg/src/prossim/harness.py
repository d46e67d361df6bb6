"""Monte Carlo study runner and the breast-cancer study presets.

Replicate j of config i always uses ``stream(master_seed, i, j)`` and
replicates are processed in fixed chunks, so results do not depend on the
number of workers.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataset import INDEPENDENT_COVARIATE, SUBJECT_ID, Population, population_proportion
from .designs import Design, DesignConfig, RankingModel, draw_training, fit_training, prepare_model, simulate
from .estimators import StudyResult, srs_sd_analytic, summarize
from .ranking import TieStructure
from .streams import TRAINING, stream

log = logging.getLogger(__name__)

CHUNK = 1000
TOTAL_SAMPLE = 54
SUBJECT_ID_RANGE = 13390977
ORDINAL_RANGE = 9  # 10 categories, 9 is rarely observed

BARE = "Bare Nuclei"
SIZE = "Uniformity of Cell Size"
SHAPE = "Uniformity of Cell Shape"
NUCLEOLI = "Normal Nucleoli"
EPITHELIAL = "Single Epithelial Cell Size"
CLUMP = "Clump Thickness"
CHROMATIN = "Bland Chromatin"

MODELS: dict[str, tuple[str, ...]] = {
    "1": (BARE,),
    "2": (SUBJECT_ID,),
    "3": (BARE, NUCLEOLI),
    "4": (BARE, EPITHELIAL),
    "5": (BARE, SIZE, SHAPE),
    "6": (BARE, SIZE, SUBJECT_ID),
    "7": (BARE, NUCLEOLI, CLUMP, CHROMATIN),
    "8": (NUCLEOLI, CLUMP, CHROMATIN),
    "9": (INDEPENDENT_COVARIATE,),
    "5*": (BARE, SHAPE),
}

RSS_CONCOMITANTS = (BARE, SHAPE, SIZE, NUCLEOLI, SUBJECT_ID, INDEPENDENT_COVARIATE)


def tie_divisor(name: str, H: int) -> float:
    """c roughly delta / H: 4, 3, 1.5 for ordinal concomitants at H = 2, 3, 6."""
    if name == SUBJECT_ID:
        return max(1.0, SUBJECT_ID_RANGE / H)
    c = {2: 4.0, 3: 3.0, 6: 1.5}.get(H, ORDINAL_RANGE / H)
    return max(1.0, c)


def model(key: str, H: int | None = None, ties: bool = False) -> RankingModel:
    """Registry lookup; with ``ties`` every concomitant gets c = tie_divisor(name, H)."""
    key = key.removeprefix("Model").strip()
    if key not in MODELS:
        raise KeyError(f"unknown ranking model {key!r}; known: {', '.join(MODELS)}")
    names = MODELS[key]
    ts = tuple((n, TieStructure(tie_divisor(n, H) if ties else 1.0)) for n in names)
    return RankingModel(f"Model {key}", ts)


@dataclass(frozen=True)
class StudySpec:
    configs: tuple[DesignConfig, ...]
    replicates: int
    master_seed: int
    name: str = "study"
    tables: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.replicates < 2:
            raise ValueError("a study needs at least 2 replicates")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class ConfigResult:
    index: int
    config: DesignConfig
    result: StudyResult
    estimates: np.ndarray


_worker_pop: Population | None = None
_prepared: dict = {}


def _init_worker(pop: Population):
    global _worker_pop
    _worker_pop = pop
    _prepared.clear()


def _prepared_model(pop, m):
    key = (id(pop), m)
    if key not in _prepared:
        _prepared[key] = prepare_model(pop, m)
    return _prepared[key]


def _run_chunk(task):
    ci, cfg, seed, start, stop, coef = task
    pop = _worker_pop
    prep = _prepared_model(pop, cfg.model) if cfg.model is not None else None
    rngs = [stream(seed, ci, j) for j in range(start, stop)]
    return ci, start, simulate(pop, cfg, rngs, prep, coef)


def _fixed_coef(pop, cfg, seed, ci):
    train = draw_training(pop, cfg, stream(seed, ci, 0, TRAINING))
    fit = fit_training(pop, cfg, train)
    if not fit.converged:
        raise RuntimeError(f"config {ci}: fixed training fit did not converge")
    return fit.coef[None]


def run_study(pop: Population, spec: StudySpec, workers: int = 1,
              chunk_size: int = CHUNK) -> list[ConfigResult]:
    """J replicates of every config; results in config order.

    Any config error aborts the whole study before results are returned.
    """
    J = spec.replicates
    tasks = []
    for ci, cfg in enumerate(spec.configs):
        if cfg.model is not None:
            prepare_model(pop, cfg.model)  # surface config errors up front
        coef = None
        if cfg.design is Design.LOGISTIC and cfg.fixed_training:
            coef = _fixed_coef(pop, cfg, spec.master_seed, ci)
        for start in range(0, J, chunk_size):
            tasks.append((ci, cfg, spec.master_seed, start, min(J, start + chunk_size), coef))

    out = [np.empty(J) for _ in spec.configs]
    if workers <= 1:
        _init_worker(pop)
        done = map(_run_chunk, tasks)
        for ci, start, est in done:
            out[ci][start:start + est.size] = est
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(pop,)) as ex:
            for ci, start, est in ex.map(_run_chunk, tasks):
                out[ci][start:start + est.size] = est

    p = population_proportion(pop)
    results = []
    for ci, cfg in enumerate(spec.configs):
        baseline = srs_sd_analytic(p, pop.size, cfg.size)
        results.append(ConfigResult(ci, cfg, summarize(out[ci], baseline), out[ci]))
        log.debug("config %d (%s) done", ci, cfg.design.value)
    return results


def sd_standard_error(values) -> float:
    """Large-sample standard error of the sample SD, using the sample kurtosis."""
    v = np.asarray(values, dtype=float)
    d = v - v.mean()
    m2 = np.mean(d ** 2)
    if m2 == 0:
        return 0.0
    kurt = np.mean(d ** 4) / m2 ** 2
    return float(np.sqrt(m2) * np.sqrt(max(kurt - 1.0, 0.0) / (4 * v.size)))


def ci_length_standard_error(values, coverage: float = 0.90, resamples: int = 200,
                             seed: int = 0) -> float:
    """Bootstrap standard error of the empirical CI length (fixed seed, so deterministic)."""
    v = np.asarray(values, dtype=float)
    rng = np.random.default_rng(seed)
    tail = round((1 - coverage) / 2, 12)
    lengths = np.empty(resamples)
    for b in range(resamples):
        lo, hi = np.quantile(v[rng.integers(0, v.size, v.size)], [tail, 1 - tail])
        lengths[b] = hi - lo
    return float(lengths.std(ddof=1))


def _grid(design, keys, set_sizes, ties=False):
    return [DesignConfig(design, H, TOTAL_SAMPLE // H, model(k, H, ties))
            for k in keys for H in set_sizes]


def study1_preset(pop: Population | None = None, replicates: int = 50_000,
                  master_seed: int = 2015, ties: bool = False) -> StudySpec:
    """SRS baseline, one-concomitant RSS, PROS Models 1-9 and logistic-RSS Models 1-9.

    H in {3, 6, 9} with nH = 54. ``ties`` applies the c = delta/H discretization
    to the PROS models; by default c = 1.
    """
    sizes = (3, 6, 9)
    srs = [DesignConfig(Design.SRS, 1, TOTAL_SAMPLE)]
    rss = [DesignConfig(Design.RSS_ONE, H, TOTAL_SAMPLE // H, RankingModel.of(n, n))
           for n in RSS_CONCOMITANTS for H in sizes]
    keys = [str(i) for i in range(1, 10)]
    pros = _grid(Design.PROS, keys, sizes, ties)
    logit = _grid(Design.LOGISTIC, keys, sizes)
    configs = srs + rss + pros + logit
    tables = {
        "rss_one_concomitant": list(range(0, 1 + len(rss))),
        "pros": list(range(1 + len(rss), 1 + len(rss) + len(pros))),
        "logistic_rss": list(range(1 + len(rss) + len(pros), len(configs))),
    }
    return StudySpec(tuple(configs), replicates, master_seed, "study1", tables)


def study2_preset(pop: Population | None = None, replicates: int = 50_000,
                  master_seed: int = 2015) -> StudySpec:
    """PROS with and without induced ties: Models 1, 2, 5*, 3, 5, 8, 9 at H in {2, 3, 6}."""
    sizes = (2, 3, 6)
    keys = ["1", "2", "5*", "3", "5", "8", "9"]
    plain = _grid(Design.PROS, keys, sizes, ties=False)
    tied = _grid(Design.PROS, keys, sizes, ties=True)
    tables = {
        "pros_no_ties": list(range(len(plain))),
        "pros_ties": list(range(len(plain), len(plain) + len(tied))),
    }
    return StudySpec(tuple(plain + tied), replicates, master_seed, "study2", tables)


@dataclass(frozen=True)
class PropertyCheck:
    name: str
    passed: bool
    detail: str


def _find(results, indices, model_name, H):
    for i in indices:
        r = results[i]
        if r.config.model is not None and r.config.model.name == model_name and r.config.H == H:
            return r
    return None


def monotone_in_h(results, indices, model_name, sizes) -> PropertyCheck | None:
    rows = [_find(results, indices, model_name, H) for H in sizes]
    if any(r is None for r in rows):
        return None
    red = [r.result.sd_reduction_pct for r in rows]
    ok = all(a < b for a, b in zip(red, red[1:]))
    detail = ", ".join(f"H={H}: {x:.2f}" for H, x in zip(sizes, red))
    return PropertyCheck(f"{model_name} SD reduction increasing in H", ok, detail)


def dominance(results, indices, strong, weak, H, margin_se=3.0) -> PropertyCheck | None:
    a = _find(results, indices, strong, H)
    b = _find(results, indices, weak, H)
    if a is None or b is None:
        return None
    se = float(np.hypot(sd_standard_error(a.estimates), sd_standard_error(b.estimates)))
    gap = b.result.sd - a.result.sd
    ok = gap >= margin_se * se
    return PropertyCheck(f"{strong} SD below {weak} SD at H={H}", ok,
                         f"{a.result.sd:.4f} vs {b.result.sd:.4f}, gap {gap:.4f}, {margin_se:g} SE = {margin_se * se:.4f}")


def ci_shrinking(results, indices, model_name, sizes, label="") -> PropertyCheck | None:
    rows = [_find(results, indices, model_name, H) for H in sizes]
    if any(r is None for r in rows):
        return None
    lengths = [r.result.ci_length for r in rows]
    ok = all(a > b for a, b in zip(lengths, lengths[1:]))
    detail = ", ".join(f"H={H}: {x:.4f}" for H, x in zip(sizes, lengths))
    return PropertyCheck(f"{model_name} CI length decreasing in H{label}", ok, detail)


def ties_not_longer(tied: ConfigResult, plain: ConfigResult, margin_se=3.0) -> PropertyCheck:
    se = float(np.hypot(ci_length_standard_error(tied.estimates),
                        ci_length_standard_error(plain.estimates)))
    excess = tied.result.ci_length - plain.result.ci_length
    return PropertyCheck(f"{tied.config.model.name} H={tied.config.H}: tied CI not longer than untied",
                         excess <= margin_se * se,
                         f"{tied.result.ci_length:.4f} vs {plain.result.ci_length:.4f}, "
                         f"{margin_se:g} SE = {margin_se * se:.4f}")


def property_checks(results: list[ConfigResult], spec: StudySpec) -> list[PropertyCheck]:
    """Shape checks on finished study results; checks whose configs are absent are skipped."""
    checks = []
    for table, idx in spec.tables.items():
        sizes = sorted({results[i].config.H for i in idx if results[i].config.design is not Design.SRS})
        pros = [i for i in idx if results[i].config.design is Design.PROS]
        if not pros:
            continue
        if spec.name == "study1":
            for m in ("Model 1", "Model 3", "Model 5"):
                checks.append(monotone_in_h(results, pros, m, sizes))
            for H in sizes:
                checks.append(dominance(results, pros, "Model 5", "Model 2", H))
        checks.append(ci_shrinking(results, pros, "Model 5", sizes, f" ({table})"))
    if spec.name == "study2" and {"pros_no_ties", "pros_ties"} <= set(spec.tables):
        H = max(results[i].config.H for i in spec.tables["pros_ties"])
        plain = _find(results, spec.tables["pros_no_ties"], "Model 5", H)
        tied = _find(results, spec.tables["pros_ties"], "Model 5", H)
        if plain is not None and tied is not None:
            checks.append(ties_not_longer(tied, plain))
    return [c for c in checks if c is not None]
