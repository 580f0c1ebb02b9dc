"""Tabu search engine.

Hill climbing over a per-dimension move set, a FIFO short-term memory of
visited points, an elite list of the best points found, intensification
from the elite list, random diversification and step reduction.
"""
from __future__ import annotations

import bisect
import time
from collections import deque
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .problem import (
    EvaluationRecord,
    PenaltyConfig,
    ProblemDefinition,
    ProblemError,
    SolutionVector,
    evaluate,
)

DEFAULT_SNAPSHOTS = (20, 100, 1000)


class Phase(str, Enum):
    LOCAL = "LOCAL"
    INTENSIFIED = "INTENSIFIED"
    DIVERSIFIED = "DIVERSIFIED"
    REDUCED = "REDUCED"


class IntensificationUnavailable(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    """Tunables of one search run.

    ``initial_step`` is a per-dimension step in problem units; ``None`` means
    1/20 of each dimension's range.  ``tabu_tenure`` may be 0, which turns the
    engine into a plain steepest-descent climber.
    """

    tabu_tenure: int = 7
    best_memory_size: int = 5
    initial_step: Optional[tuple[float, ...]] = None
    step_reduction_factor: float = 0.5
    intensify_after: int = 10
    diversify_after: int = 15
    reduce_after: int = 25
    max_evaluations: int = 20000
    seed: int = 0
    aspiration: bool = True
    intensify: bool = True
    diversify: bool = True
    pattern_move: bool = False
    sample_dims: Optional[int] = None

    def __post_init__(self):
        if self.tabu_tenure < 0:
            raise ValueError("tabu_tenure must be >= 0")
        if self.best_memory_size < 1:
            raise ValueError("best_memory_size must be >= 1")
        if not 0 < self.step_reduction_factor < 1:
            raise ValueError("step_reduction_factor must lie in (0, 1)")
        if not 0 < self.intensify_after < self.diversify_after < self.reduce_after:
            raise ValueError("need 0 < intensify_after < diversify_after < reduce_after")
        if self.max_evaluations < 1:
            raise ValueError("evaluation budget must be at least 1")


class TabuMemory:
    """FIFO of the last ``tenure`` visited points."""

    def __init__(self, tenure: int, items: Iterable[SolutionVector] = ()):
        self.tenure = tenure
        self._recent: deque[SolutionVector] = deque(maxlen=tenure if tenure > 0 else 0)
        for x in items:
            self._recent.append(x)

    def __contains__(self, x: SolutionVector) -> bool:
        return x in self._recent

    def __len__(self) -> int:
        return len(self._recent)

    def __iter__(self):
        return iter(self._recent)

    @property
    def recent(self) -> list[SolutionVector]:
        return list(self._recent)


class BestMemory:
    """The ``capacity`` best distinct points, sorted by objective."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.entries: list[tuple[SolutionVector, float]] = []

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def worst(self) -> float:
        return self.entries[-1][1] if self.entries else np.inf

    def vectors(self) -> list[SolutionVector]:
        return [x for x, _ in self.entries]


def generate_neighbors(
    p: ProblemDefinition, x: SolutionVector, step: Sequence[int]
) -> list[SolutionVector]:
    """Axis moves ``x -/+ step[i]`` in lattice units, clamped into bounds.

    Order is dimension-major, negative direction first; moves that clamp back
    onto ``x`` are dropped.
    """
    if p.dimension == 0:
        raise ProblemError("zero-dimension problem")
    out = []
    seen = {x}
    base = list(x.index)
    for i, s in enumerate(step):
        for sign in (-1, 1):
            k = min(max(base[i] + sign * int(s), 0), int(p.n_steps[i]))
            if k == base[i]:
                continue
            idx = base.copy()
            idx[i] = k
            cand = p.vector(idx)
            if cand not in seen:
                seen.add(cand)
                out.append(cand)
    return out


def is_tabu(c: SolutionVector, mem: TabuMemory) -> bool:
    return c in mem


def select_move(
    candidates: Sequence[tuple[SolutionVector, float]],
    mem: TabuMemory,
    best_objective: float,
    aspiration: bool = True,
) -> tuple[SolutionVector, str]:
    """Pick the next point from ``(vector, objective)`` candidates.

    Returns the chosen vector and how it was admitted: ``"move"`` for a
    non-tabu candidate, ``"aspiration"`` for a tabu one that beats
    ``best_objective``, ``"escape"`` when everything is tabu.  The best
    candidate is taken even when it is worse than the current point.  Ties
    go to the earliest candidate, which under ``generate_neighbors``
    ordering means lowest dimension, then negative direction.
    """
    if not candidates:
        raise ValueError("no candidates to select from")
    best = None
    for order, (c, f) in enumerate(candidates):
        if is_tabu(c, mem):
            if not (aspiration and f < best_objective):
                continue
            kind = "aspiration"
        else:
            kind = "move"
        key = (f, order)
        if best is None or key < best[0]:
            best = (key, c, kind)
    if best is None:
        order = min(range(len(candidates)), key=lambda i: (candidates[i][1], i))
        return candidates[order][0], "escape"
    return best[1], best[2]


def record_visit(x: SolutionVector, mem: TabuMemory) -> TabuMemory:
    mem._recent.append(x)
    return mem


def update_best_memory(x: SolutionVector, f: float, bm: BestMemory) -> BestMemory:
    if any(y == x for y, _ in bm.entries):
        return bm
    if len(bm.entries) >= bm.capacity and not f < bm.worst:
        return bm
    keys = [g for _, g in bm.entries]
    bm.entries.insert(bisect.bisect_right(keys, f), (x, f))
    del bm.entries[bm.capacity:]
    return bm


def intensify(bm: BestMemory, p: ProblemDefinition) -> SolutionVector:
    """Componentwise mean of the elite points, snapped to the lattice.

    Halves round up (away from the lower bound); integer arithmetic keeps
    this exact.
    """
    if not bm.entries:
        raise IntensificationUnavailable("best memory is empty")
    n = len(bm.entries)
    sums = np.sum([x.index for x, _ in bm.entries], axis=0)
    idx = (2 * sums + n) // (2 * n)
    return p.vector(idx)


def diversify(p: ProblemDefinition, rng: np.random.Generator) -> SolutionVector:
    """Uniform random lattice point."""
    idx = [int(rng.integers(0, n + 1)) for n in p.n_steps]
    return p.vector(idx)


def initial_step_units(p: ProblemDefinition, cfg: SearchConfig) -> list[int]:
    if cfg.initial_step is None:
        raw = (p.upper - p.lower) / 20.0
    else:
        raw = np.asarray(cfg.initial_step, dtype=float)
        if raw.shape != p.lower.shape:
            raise ValueError("initial_step needs one entry per dimension")
    units = np.floor(raw / p.quantum + 0.5 + 1e-9).astype(np.int64)
    return [max(1, int(u)) for u in units]


@dataclass
class SearchState:
    current: SolutionVector
    current_objective: float
    best: SolutionVector
    best_objective: float
    step: list[int]
    stall: int = 0
    evaluation_count: int = 0
    phase: Phase = Phase.LOCAL


@dataclass
class RunResult:
    problem_id: str
    config: SearchConfig
    seed: int
    best: SolutionVector
    best_raw: float
    best_penalized: float
    feasible: bool
    evaluations: int
    snapshots: dict[str, float]
    history: list[EvaluationRecord]
    best_feasible: Optional[EvaluationRecord] = None
    stop_reason: str = ""
    wall_time: float = 0.0

    @property
    def trajectory(self) -> list[EvaluationRecord]:
        """Records that became the current point, in order."""
        return [r for r in self.history if r.accepted is not None]

    def best_so_far(self) -> list[float]:
        out, best = [], np.inf
        for r in self.history:
            best = min(best, r.penalized_objective)
            out.append(best)
        return out

    def config_dict(self) -> dict:
        d = asdict(self.config)
        if d["initial_step"] is not None:
            d["initial_step"] = list(d["initial_step"])
        return d


def _moved_dim(c: SolutionVector, x: SolutionVector) -> int:
    return next(i for i, (a, b) in enumerate(zip(c.index, x.index)) if a != b)


class _BudgetExhausted(Exception):
    pass


class _Run:
    def __init__(self, p, cfg, penalty, start, snapshots, on_eval):
        self.p = p
        self.cfg = cfg
        self.penalty = penalty
        self.start = start
        self.snapshot_points = tuple(sorted(set(snapshots)))
        self.on_eval = on_eval
        self.rng = np.random.default_rng(cfg.seed)
        self.history: list[EvaluationRecord] = []
        self.tabu = TabuMemory(cfg.tabu_tenure)
        self.elite = BestMemory(cfg.best_memory_size)
        self.best_record: Optional[EvaluationRecord] = None
        self.best_feasible: Optional[EvaluationRecord] = None
        self.snapshots: dict[str, float] = {}
        self.phase = Phase.LOCAL
        self.state: Optional[SearchState] = None

    def evaluate(self, x: SolutionVector) -> EvaluationRecord:
        if len(self.history) >= self.cfg.max_evaluations:
            raise _BudgetExhausted
        rec = evaluate(self.p, self.penalty, x, len(self.history) + 1, self.phase.value)
        self.history.append(rec)
        if self.state is not None:
            self.state.evaluation_count = len(self.history)
        if self.best_record is None or rec.penalized_objective < self.best_record.penalized_objective:
            self.best_record = rec
        if rec.feasible and (
            self.best_feasible is None or rec.raw_objective < self.best_feasible.raw_objective
        ):
            self.best_feasible = rec
        n = len(self.history)
        if n in self.snapshot_points:
            self.snapshots[str(n)] = self.best_record.penalized_objective
        if self.on_eval is not None:
            self.on_eval(rec)
        return rec

    def accept(self, rec: EvaluationRecord, kind: str) -> None:
        i = rec.eval_index - 1
        self.history[i] = replace(self.history[i], accepted=kind)
        record_visit(rec.vector, self.tabu)
        update_best_memory(rec.vector, rec.penalized_objective, self.elite)

    def restart(self, x: SolutionVector, kind: str, state: SearchState) -> None:
        state.phase = self.phase
        rec = self.evaluate(x)
        self.accept(rec, kind)
        # only the restart evaluation carries the event tag
        self.phase = Phase.LOCAL
        state.phase = Phase.LOCAL
        state.current = x
        state.current_objective = rec.penalized_objective

    def pattern(self, previous: SolutionVector, state: SearchState) -> None:
        # repeat a successful move for as long as it keeps improving
        while True:
            delta = np.subtract(state.current.index, previous.index)
            idx = np.clip(np.add(state.current.index, delta), 0, self.p.n_steps)
            x = self.p.vector(idx)
            if x == state.current or is_tabu(x, self.tabu):
                return
            rec = self.evaluate(x)
            if not rec.penalized_objective < state.current_objective:
                return
            self.accept(rec, "pattern")
            previous = state.current
            state.current = x
            state.current_objective = rec.penalized_objective

    def run(self) -> str:
        p, cfg = self.p, self.cfg
        x0 = self.start if self.start is not None else p.start
        if x0 is None:
            x0 = diversify(p, self.rng)
        rec = self.evaluate(x0)
        self.accept(rec, "start")
        state = SearchState(
            current=x0,
            current_objective=rec.penalized_objective,
            best=x0,
            best_objective=rec.penalized_objective,
            step=initial_step_units(p, cfg),
            evaluation_count=len(self.history),
        )
        self.state = state
        while True:
            neighbors = generate_neighbors(p, state.current, state.step)
            if cfg.sample_dims and cfg.sample_dims < p.dimension:
                dims = set(int(i) for i in self.rng.choice(p.dimension, cfg.sample_dims, replace=False))
                neighbors = [c for c in neighbors if _moved_dim(c, state.current) in dims]
            if neighbors:
                scored = []
                for c in neighbors:
                    r = self.evaluate(c)
                    scored.append((c, r.penalized_objective, r))
                chosen, kind = select_move(
                    [(c, f) for c, f, _ in scored], self.tabu, state.best_objective, cfg.aspiration
                )
                chosen_rec = next(r for c, _, r in scored if c == chosen)
                previous, previous_objective = state.current, state.current_objective
                self.accept(chosen_rec, kind)
                state.current = chosen
                state.current_objective = chosen_rec.penalized_objective
                if cfg.pattern_move and state.current_objective < previous_objective:
                    self.pattern(previous, state)
                if state.current_objective < state.best_objective:
                    state.best = state.current
                    state.best_objective = state.current_objective
                    state.stall = 0
                    continue
            state.stall += 1

            if state.stall >= cfg.reduce_after:
                if all(s <= 1 for s in state.step):
                    return "converged"
                state.step = [
                    max(1, int(np.floor(s * cfg.step_reduction_factor + 0.5))) for s in state.step
                ]
                state.stall = 0
                self.phase = Phase.REDUCED
                self.restart(state.best, "reduce", state)
            elif cfg.diversify and state.stall == cfg.diversify_after:
                self.phase = Phase.DIVERSIFIED
                self.restart(diversify(p, self.rng), "diversify", state)
            elif cfg.intensify and state.stall == cfg.intensify_after:
                try:
                    x = intensify(self.elite, p)
                except IntensificationUnavailable:
                    x = diversify(p, self.rng)
                    self.phase = Phase.DIVERSIFIED
                    self.restart(x, "diversify", state)
                else:
                    self.phase = Phase.INTENSIFIED
                    self.restart(x, "intensify", state)
            if state.current_objective < state.best_objective:
                state.best = state.current
                state.best_objective = state.current_objective
                state.stall = 0


def run_search(
    p: ProblemDefinition,
    cfg: SearchConfig,
    *,
    penalty: Optional[PenaltyConfig] = None,
    start: Optional[SolutionVector] = None,
    snapshots: Sequence[int] = DEFAULT_SNAPSHOTS,
    on_eval: Optional[Callable[[EvaluationRecord], None]] = None,
) -> RunResult:
    """Run one tabu search on ``p`` and return its full record.

    The start point is ``start``, else the problem's own start, else a random
    lattice point drawn from the run's generator.  The run stops when the
    evaluation budget is spent or a reduce event fires with every step
    already at its minimum.
    """
    if cfg.max_evaluations < 1:
        raise ValueError("evaluation budget must be at least 1")
    t0 = time.perf_counter()
    run = _Run(p, cfg, penalty, start, snapshots, on_eval)
    try:
        reason = run.run()
    except _BudgetExhausted:
        reason = "budget"
    final = run.best_record.penalized_objective
    snaps = {}
    for s in run.snapshot_points:
        snaps[str(s)] = run.snapshots.get(str(s), final)
    snaps["converged"] = final
    best = run.best_record
    return RunResult(
        problem_id=p.name,
        config=cfg,
        seed=cfg.seed,
        best=best.vector,
        best_raw=best.raw_objective,
        best_penalized=best.penalized_objective,
        feasible=best.feasible,
        evaluations=len(run.history),
        snapshots=snaps,
        history=run.history,
        best_feasible=run.best_feasible,
        stop_reason=reason,
        wall_time=time.perf_counter() - t0,
    )
