"""Result files: per-run JSON, per-run convergence CSV and a snapshot summary."""
from __future__ import annotations

import csv
import json
import statistics
from pathlib import Path
from typing import Optional, Sequence

from .problem import EvaluationRecord
from .tabu import Phase, RunResult

CONVERGENCE_COLUMNS = ("eval_index", "raw_objective", "penalized_objective", "best_so_far", "feasible", "phase")
SUMMARY_COLUMNS = ("snapshot", "min", "max", "median")


def _record_dict(r: EvaluationRecord) -> dict:
    return {
        "eval_index": r.eval_index,
        "index": list(r.vector.index),
        "values": list(r.vector.values),
        "raw_objective": r.raw_objective,
        "penalized_objective": r.penalized_objective,
        "feasible": r.feasible,
        "phase": r.phase,
        "accepted": r.accepted,
    }


def result_payload(result: RunResult, effective_config: Optional[dict] = None, labels=None) -> dict:
    """JSON-ready view of a run.  Only ``wall_time`` varies between reruns."""
    best_feasible = None
    if result.best_feasible is not None:
        best_feasible = {
            "values": list(result.best_feasible.vector.values),
            "raw_objective": result.best_feasible.raw_objective,
            "eval_index": result.best_feasible.eval_index,
        }
    return {
        "problem": result.problem_id,
        "seed": result.seed,
        "config": effective_config if effective_config is not None else {"engine": result.config_dict()},
        "labels": list(labels) if labels is not None else None,
        "best": {"index": list(result.best.index), "values": list(result.best.values)},
        "best_raw": result.best_raw,
        "best_penalized": result.best_penalized,
        "feasible": result.feasible,
        "best_feasible": best_feasible,
        "evaluations": result.evaluations,
        "stop_reason": result.stop_reason,
        "snapshots": result.snapshots,
        "trajectory": [_record_dict(r) for r in result.trajectory],
        "wall_time": result.wall_time,
    }


def write_result_json(payload: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def write_convergence_log(history: Sequence[EvaluationRecord], path) -> None:
    """One row per evaluation; ``best_so_far`` tracks the penalized objective."""
    if not history:
        raise ValueError("empty history")
    phases = {p.value for p in Phase}
    best = float("inf")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CONVERGENCE_COLUMNS)
        for r in history:
            if r.phase not in phases:
                raise ValueError(f"unknown phase {r.phase!r}")
            best = min(best, r.penalized_objective)
            w.writerow([
                r.eval_index,
                repr(float(r.raw_objective)),
                repr(float(r.penalized_objective)),
                repr(float(best)),
                int(r.feasible),
                r.phase,
            ])


def read_convergence_log(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summarize(results: Sequence[RunResult], path=None) -> list[tuple]:
    """Min, max and median of each snapshot across runs.

    Rows follow the snapshot order of the first run (evaluation counts
    ascending, ``converged`` last).  Writes a CSV when ``path`` is given.
    """
    if not results:
        raise ValueError("nothing to summarize")
    keys = list(results[0].snapshots)
    rows = []
    for key in keys:
        vals = [r.snapshots[key] for r in results]
        rows.append((key, min(vals), max(vals), statistics.median(vals)))
    if path is not None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_COLUMNS)
            for key, lo, hi, med in rows:
                w.writerow([key, repr(float(lo)), repr(float(hi)), repr(float(med))])
    return rows


def output_paths(out_dir, problem: str, seed: int) -> tuple[Path, Path]:
    out = Path(out_dir)
    return out / f"{problem}-{seed}.json", out / f"{problem}-{seed}-convergence.csv"
