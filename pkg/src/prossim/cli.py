"""Command-line driver: population stats, the worked example, single simulations and study presets.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal error.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from . import harness, worked_example
from .dataset import DataError, INDEPENDENT_COVARIATE, MissingPolicy, load_population, summary
from .designs import Design, DesignConfig, RankingModel, prepare_model
from .ranking import TieStructure

log = logging.getLogger("prossim")

HEADER = ("design,model,H,n,c,replicates,average,sd,sd_reduction_pct,"
          "ci_lower,ci_upper,ci_length,seed")
DESIGNS = {"srs": Design.SRS, "rss": Design.RSS_ONE, "pros": Design.PROS, "logistic": Design.LOGISTIC}
SHORT = {v: k for k, v in DESIGNS.items()}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    data: str | None = None
    missing: str = "median"
    seed: int = 2015
    covariate_seed: int | None = 2015
    replicates: int = 10_000
    design: str = "pros"
    model: str | None = None
    concomitant: list[str] = field(default_factory=list)
    set_size: str = "3"
    cycles: int | None = None
    training_size: int = 100
    alpha: str | None = None
    out: str | None = None
    workers: int = 1


_INT_KEYS = {"seed", "replicates", "cycles", "training_size", "workers"}


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; repeated ``concomitant`` keys accumulate."""
    known = {f.name for f in fields(RunConfig)}
    values: dict = {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key == "concomitant":
            values.setdefault(key, []).append(value)
        else:
            values[key] = value
    return values


def _coerce(key, value):
    if value is None or key == "concomitant":
        return value
    if key in _INT_KEYS:
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {value!r}") from None
    if key == "covariate_seed":
        if str(value).lower() in ("none", "off", ""):
            return None
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"covariate_seed must be an integer or 'none', got {value!r}") from None
    return str(value)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Built-in defaults, then the config file, then PROS_DATA for the data path, then flags."""
    merged = {}
    if getattr(args, "config", None):
        merged.update(read_config_file(args.config))
    if "data" not in merged and os.environ.get("PROS_DATA"):
        merged["data"] = os.environ["PROS_DATA"]
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None and v != []:
            merged[f.name] = v
    cfg = RunConfig(**{k: _coerce(k, v) for k, v in merged.items()})
    if cfg.seed < 0 or cfg.seed >= 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg.replicates < 20:
        raise ConfigError("replicates must be at least 20 for the empirical CI")
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")
    return cfg


def _load(cfg: RunConfig):
    if not cfg.data:
        raise ConfigError("no dataset given: pass --data PATH or set PROS_DATA")
    path = Path(cfg.data)
    if not path.is_file():
        raise ConfigError(f"dataset not found: {path}")
    try:
        policy = MissingPolicy.parse(cfg.missing)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    return load_population(path, policy, seed=cfg.covariate_seed)


def _parse_concomitant(spec: str) -> tuple[str, TieStructure]:
    name, sep, c = spec.rpartition(":")
    if not sep:
        return spec.strip(), TieStructure(1.0)
    try:
        return name.strip(), TieStructure(float(c))
    except ValueError as e:
        raise ConfigError(f"bad concomitant {spec!r}: {e}") from None


def _model(cfg: RunConfig, H: int) -> RankingModel | None:
    design = DESIGNS[cfg.design]
    if design is Design.SRS:
        return None
    if cfg.model and cfg.concomitant:
        raise ConfigError("give either --model or --concomitant, not both")
    if cfg.model:
        try:
            m = harness.model(cfg.model, H)
        except KeyError as e:
            raise ConfigError(e.args[0]) from None
    elif cfg.concomitant:
        concs = [_parse_concomitant(s) for item in cfg.concomitant for s in item.split(";") if s.strip()]
        m = RankingModel("inline", tuple(concs))
    else:
        raise ConfigError(f"design {cfg.design} needs --model or --concomitant")
    if cfg.alpha:
        try:
            alpha = tuple(float(a) for a in cfg.alpha.split(","))
        except ValueError:
            raise ConfigError(f"alpha must be comma-separated numbers, got {cfg.alpha!r}") from None
        m = replace(m, alpha=alpha)
    return m


def build_configs(cfg: RunConfig, pop) -> list[DesignConfig]:
    if cfg.design not in DESIGNS:
        raise ConfigError(f"unknown design {cfg.design!r}; choose from {', '.join(DESIGNS)}")
    try:
        sizes = [int(h) for h in str(cfg.set_size).split(",")]
    except ValueError:
        raise ConfigError(f"set size must be an integer list, got {cfg.set_size!r}") from None
    configs = []
    for H in sizes:
        design = DESIGNS[cfg.design]
        try:
            if design is Design.SRS:
                n = cfg.cycles if cfg.cycles is not None else harness.TOTAL_SAMPLE
                dc = DesignConfig(design, 1, n)
            else:
                n = cfg.cycles if cfg.cycles is not None else max(1, harness.TOTAL_SAMPLE // H)
                dc = DesignConfig(design, H, n, _model(cfg, H), training_size=cfg.training_size)
            if dc.size > pop.size:
                raise ConfigError(f"sample size {dc.size} exceeds the population of {pop.size}")
            if dc.model is not None:
                prepare_model(pop, dc.model)
        except (ValueError, KeyError) as e:
            raise ConfigError(str(e.args[0] if e.args else e)) from None
        configs.append(dc)
    return configs


def _num(x: float) -> str:
    return f"{x:.4f}"


def results_csv(results, seed: int, replicates: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER.split(","))
    for r in results:
        c, R = r.config, r.result
        w.writerow([SHORT[c.design], c.model.name if c.model else "", c.H, c.n,
                    c.model.c_spec if c.model else "", replicates,
                    _num(R.average), _num(R.sd), _num(R.sd_reduction_pct),
                    _num(R.ci_lower), _num(R.ci_upper), _num(R.ci_length), seed])
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_stats(cfg: RunConfig) -> int:
    pop = _load(cfg)
    s = summary(pop)
    lines = [f"N = {s['size']}", f"malignant = {s['malignant']}", f"p = {s['p']:.4f}",
             "concomitant,correlation"]
    lines += [f"{name},{rho:.4f}" for name, rho in s["correlations"]]
    _emit("\n".join(lines) + "\n", cfg.out)
    return 0


def cmd_example(cfg: RunConfig) -> int:
    _emit(worked_example.run().format() + "\n", cfg.out)
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    pop = _load(cfg)
    configs = build_configs(cfg, pop)
    spec = harness.StudySpec(tuple(configs), cfg.replicates, cfg.seed, "simulate")
    results = harness.run_study(pop, spec, workers=cfg.workers)
    _emit(results_csv(results, cfg.seed, cfg.replicates), cfg.out)
    for r in results:
        R = r.result
        print(f"{SHORT[r.config.design]} {r.config.model.name if r.config.model else ''} "
              f"H={r.config.H}: average {R.average:.4f}, sd {R.sd:.4f}, "
              f"reduction {R.sd_reduction_pct:.2f}%", file=sys.stderr)
    return 0


def cmd_study(cfg: RunConfig, which: str) -> int:
    pop = _load(cfg)
    if which == "study2" and INDEPENDENT_COVARIATE not in pop.columns:
        raise ConfigError("study2 needs the independent covariate; set a covariate seed")
    if which == "study1" and INDEPENDENT_COVARIATE not in pop.columns:
        raise ConfigError("study1 needs the independent covariate; set a covariate seed")
    preset = harness.study1_preset if which == "study1" else harness.study2_preset
    spec = preset(pop, replicates=cfg.replicates, master_seed=cfg.seed)
    results = harness.run_study(pop, spec, workers=cfg.workers)
    outdir = Path(cfg.out or f"{which}_out")
    outdir.mkdir(parents=True, exist_ok=True)
    for table, idx in spec.tables.items():
        (outdir / f"{table}.csv").write_text(results_csv([results[i] for i in idx], cfg.seed, cfg.replicates))
    checks = harness.property_checks(results, spec)
    report = "\n".join(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}" for c in checks)
    (outdir / "property_checks.txt").write_text(report + "\n")
    print(report, file=sys.stderr)
    print(f"wrote {len(spec.tables)} tables to {outdir}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--data", help="dataset path (default: $PROS_DATA)")
    common.add_argument("--missing", help="drop, median or const=V (default median)")
    common.add_argument("--seed", type=int, help="master seed, unsigned 64-bit (default 2015)")
    common.add_argument("--covariate-seed", help="seed of the independent covariate column, or 'none'")
    common.add_argument("--replicates", type=int, help="Monte Carlo replicates J (default 10000)")
    common.add_argument("--workers", type=int, help="worker processes (default 1)")
    common.add_argument("--out", help="output file (simulate, stats, example) or directory (study)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="prossim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("stats", parents=[common], help="population size, prevalence and correlations")
    sub.add_parser("example", parents=[common], help="replay the five-unit ranking example")
    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo run of one design")
    sim.add_argument("--design", choices=sorted(DESIGNS))
    sim.add_argument("--model", help="registry model: 1-9 or 5*")
    sim.add_argument("--concomitant", action="append", metavar="NAME[:C]",
                     help="inline model member with optional tie divisor (repeatable)")
    sim.add_argument("--set-size", help="H, or a comma list of set sizes")
    sim.add_argument("--cycles", type=int, help="cycles n (default 54 // H)")
    sim.add_argument("--training-size", type=int, help="logistic training sample size (default 100)")
    sim.add_argument("--alpha", help="comma-separated importance weights overriding |rho| weights")
    st = sub.add_parser("study", parents=[common], help="run a study preset and write its tables")
    st.add_argument("which", choices=("study1", "study2"))
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "stats":
            return cmd_stats(cfg)
        if args.command == "example":
            return cmd_example(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        return cmd_study(cfg, args.which)
    except ConfigError as e:
        print(f"prossim: error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"prossim: data error: {e}", file=sys.stderr)
        return 3
    except Exception as e:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"prossim: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
