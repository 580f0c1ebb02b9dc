"""Command-line harness: seeded batches of tabu search runs with result files.

Example::

    tabu-forge --problem pole2 --runs 5 --snapshots 20,100,1000 --out-dir results/

Writes ``{problem}-{seed}.json`` and ``{problem}-{seed}-convergence.csv`` per
run and ``{problem}-summary.csv`` for the batch.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .problems import ENGINE_DEFAULTS, REGISTRY, get_problem
from .results import output_paths, result_payload, summarize, write_convergence_log, write_result_json
from .tabu import DEFAULT_SNAPSHOTS, SearchConfig, run_search

log = logging.getLogger("tabu_forge")

OUT_ENV = "TABU_FORGE_OUT"
RUN_DEFAULTS = {
    "seed": 0,
    "runs": 5,
    "out_dir": "results",
    "snapshots": list(DEFAULT_SNAPSHOTS),
    "strict_paper": False,
}
ENGINE_FIELDS = {f.name: f for f in dataclasses.fields(SearchConfig)}


class ConfigError(ValueError):
    pass


def _parse_scalar(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", "null", ""):
        return None
    for kind in (int, float):
        try:
            return kind(t)
        except ValueError:
            pass
    return t


def parse_value(text: str):
    """Scalar, or a comma-separated list of scalars."""
    if "," in text:
        return [_parse_scalar(p) for p in text.split(",") if p.strip()]
    return _parse_scalar(text)


def parse_config(text: str) -> dict:
    """Flat ``section.key = value`` lines into ``{section: {key: value}}``.

    Sections are ``engine``, ``problem`` and ``run``; ``#`` starts a comment.
    """
    out = {"engine": {}, "problem": {}, "run": {}}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        section, _, name = key.partition(".")
        if section not in out or not name:
            raise ConfigError(f"line {n}: key {key!r} needs an engine., problem. or run. prefix")
        name = name.replace("-", "_")
        if section == "engine" and name not in ENGINE_FIELDS:
            raise ConfigError(f"line {n}: unknown engine setting {name!r}")
        if section == "run" and name not in RUN_DEFAULTS and name != "max_evals":
            raise ConfigError(f"line {n}: unknown run setting {name!r}")
        out[section][name] = parse_value(value)
    return out


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _engine_config(problem: str, engine: dict, seed: int) -> SearchConfig:
    settings = dict(ENGINE_DEFAULTS.get(problem, {}))
    settings.update(engine)
    if settings.get("initial_step") is not None:
        step = settings["initial_step"]
        settings["initial_step"] = tuple(float(s) for s in (step if isinstance(step, list) else [step]))
    settings["seed"] = seed
    return SearchConfig(**settings)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tabu-forge", description="Seeded tabu search runs on the bundled benchmarks.")
    ap.add_argument("--problem", help=f"one of: {', '.join(REGISTRY)}")
    ap.add_argument("--seed", type=int, help="first seed (default 0)")
    ap.add_argument("--runs", type=int, help="number of runs; seeds are seed, seed+1, ... (default 5)")
    ap.add_argument("--max-evals", type=int, help="evaluation budget per run")
    ap.add_argument("--config", help="key=value file with engine.*, problem.* and run.* settings")
    ap.add_argument("--out-dir", help=f"output directory (default results; {OUT_ENV} overrides)")
    ap.add_argument("--snapshots", help="comma list of evaluation counts, e.g. 20,100,1000")
    ap.add_argument("--strict-paper", action="store_true", default=None, help="disable the aspiration rule")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def resolve(args: argparse.Namespace, cfg: dict) -> dict:
    """Merge defaults, config file and flags (flags win) into one config."""
    run = dict(RUN_DEFAULTS)
    run.update({k: v for k, v in cfg["run"].items() if k != "max_evals"})
    engine = dict(cfg["engine"])
    if "max_evals" in cfg["run"]:
        engine["max_evaluations"] = cfg["run"]["max_evals"]
    for name in ("seed", "runs", "out_dir", "strict_paper"):
        value = getattr(args, name)
        if value is not None:
            run[name] = value
    if args.snapshots is not None:
        run["snapshots"] = args.snapshots
    if args.max_evals is not None:
        engine["max_evaluations"] = args.max_evals
    if os.environ.get(OUT_ENV):
        run["out_dir"] = os.environ[OUT_ENV]
    snaps = run["snapshots"]
    if isinstance(snaps, str):
        snaps = [s for s in snaps.split(",") if s.strip()]
    elif not isinstance(snaps, list):
        snaps = [snaps]
    run["snapshots"] = sorted({int(s) for s in snaps})
    if any(s < 1 for s in run["snapshots"]):
        raise ConfigError("snapshots must be positive evaluation counts")
    run["seed"] = int(run["seed"])
    run["runs"] = int(run["runs"])
    if run["runs"] < 1:
        raise ConfigError("--runs must be at least 1")
    if run["strict_paper"]:
        engine["aspiration"] = False
    return {"engine": engine, "problem": dict(cfg["problem"]), "run": run}


def execute(problem: str, settings: dict) -> list:
    run = settings["run"]
    out_dir = Path(run["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    p = get_problem(problem, **settings["problem"])
    results = []
    for seed in range(run["seed"], run["seed"] + run["runs"]):
        cfg = _engine_config(problem, settings["engine"], seed)
        res = run_search(p, cfg, snapshots=run["snapshots"])
        echo = {
            "engine": res.config_dict(),
            "problem": settings["problem"],
            "run": {k: (str(v) if isinstance(v, Path) else v) for k, v in run.items() if k != "out_dir"},
        }
        json_path, csv_path = output_paths(out_dir, problem, seed)
        write_result_json(result_payload(res, echo, p.labels), json_path)
        write_convergence_log(res.history, csv_path)
        log.info(
            "%s seed %d: best %.6g (feasible=%s) after %d evaluations [%s]",
            problem, seed, res.best_penalized, res.feasible, res.evaluations, res.stop_reason,
        )
        results.append(res)
    summarize(results, out_dir / f"{problem}-summary.csv")
    return results


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.problem not in REGISTRY:
        ap.print_usage(sys.stderr)
        print(f"error: unknown problem {args.problem!r}; choose from {', '.join(REGISTRY)}", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config) if args.config else parse_config("")
        settings = resolve(args, cfg)
    except (ConfigError, ValueError) as exc:
        ap.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        execute(args.problem, settings)
    except Exception as exc:  # report any run failure as a clean exit status
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
