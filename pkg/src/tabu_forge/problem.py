"""Problem contract shared by the search engine and the benchmark problems.

A problem lives on a rectangular lattice: dimension ``i`` takes the values
``lower[i] + k * quantum[i]`` for ``k = 0 .. n_steps[i]``.  The engine works
on the integer indices ``k`` so that equality between vectors is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

#: Penalized objective assigned when the objective cannot be computed.
INFEASIBLE_SENTINEL = 1e30

_HALF_EPS = 1e-9


class ProblemError(ValueError):
    """Raised for an invalid problem definition."""


@dataclass(frozen=True)
class SolutionVector:
    """A point of the design lattice.

    Two vectors compare equal when their integer lattice indices match; the
    real-valued ``values`` are carried along for reporting only.
    """

    index: tuple[int, ...]
    values: tuple[float, ...] = field(compare=False)

    def __len__(self) -> int:
        return len(self.index)


@dataclass(frozen=True)
class Constraint:
    """Named constraint returning a violation magnitude (0 when satisfied)."""

    name: str
    func: Callable[[np.ndarray], float]
    weight: float = 1.0


@dataclass(frozen=True)
class PenaltyConfig:
    weights: tuple[float, ...]
    exponent: float = 2.0

    def __post_init__(self):
        if self.exponent < 1:
            raise ProblemError("penalty exponent must be >= 1")
        for w in self.weights:
            if not (math.isfinite(w) and w > 0):
                raise ProblemError(f"penalty weight must be finite and positive, got {w}")


@dataclass(frozen=True)
class EvaluationRecord:
    vector: SolutionVector
    raw_objective: float
    violations: tuple[float, ...]
    penalized_objective: float
    feasible: bool
    eval_index: int
    phase: str = "LOCAL"
    # set by the engine when this evaluation became the current point:
    # start, move, aspiration, escape, pattern, intensify, diversify, reduce
    accepted: Optional[str] = None


class ProblemDefinition:
    """Bounds, step quanta, objective and constraints of a design problem.

    ``objective`` receives the real-valued vector as a numpy array.  When
    ``evaluator`` is given it replaces the separate objective/constraint
    calls and must return ``(raw_objective, violations)``; problems whose
    constraints share an expensive analysis with the objective use it.
    """

    def __init__(
        self,
        name: str,
        lower: Sequence[float],
        upper: Sequence[float],
        min_steps: Sequence[float],
        objective: Optional[Callable[[np.ndarray], float]] = None,
        constraints: Sequence[Constraint] = (),
        *,
        evaluator: Optional[Callable[[np.ndarray], tuple[float, Sequence[float]]]] = None,
        constraint_names: Optional[Sequence[str]] = None,
        penalty: Optional[PenaltyConfig] = None,
        start: Optional[Sequence[float]] = None,
        labels: Optional[Sequence[str]] = None,
    ):
        self.name = name
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.quantum = np.asarray(min_steps, dtype=float)
        if self.lower.ndim != 1 or self.lower.size == 0:
            raise ProblemError("problem must have at least one dimension")
        if not (self.lower.shape == self.upper.shape == self.quantum.shape):
            raise ProblemError("bounds and steps must have equal length")
        if np.any(self.quantum <= 0):
            raise ProblemError("min steps must be positive")
        if np.any(self.lower > self.upper):
            raise ProblemError("lower bound exceeds upper bound")
        spans = (self.upper - self.lower) / self.quantum
        n_steps = np.rint(spans)
        if np.any(np.abs(spans - n_steps) > 1e-9 * np.maximum(1.0, spans)):
            raise ProblemError("bound range is not an integer multiple of the min step")
        self.n_steps = n_steps.astype(np.int64)

        if (objective is None) == (evaluator is None):
            raise ProblemError("give exactly one of objective or evaluator")
        self.objective = objective
        self.constraints = tuple(constraints)
        self.evaluator = evaluator
        if evaluator is not None:
            self.constraint_names = tuple(constraint_names or ())
        else:
            self.constraint_names = tuple(c.name for c in self.constraints)
        if penalty is None:
            if evaluator is not None:
                weights = (1.0,) * len(self.constraint_names)
            else:
                weights = tuple(c.weight for c in self.constraints)
            penalty = PenaltyConfig(weights)
        if len(penalty.weights) != len(self.constraint_names):
            raise ProblemError("one penalty weight per constraint required")
        self.penalty = penalty
        self.start = None if start is None else self.quantize(start)
        self.labels = tuple(labels) if labels is not None else tuple(f"x{i}" for i in range(self.dimension))

    @property
    def dimension(self) -> int:
        return int(self.lower.size)

    def values_of(self, index: Sequence[int]) -> tuple[float, ...]:
        idx = np.asarray(index, dtype=np.int64)
        return tuple(float(v) for v in self.lower + idx * self.quantum)

    def vector(self, index: Sequence[int]) -> SolutionVector:
        index = tuple(int(k) for k in index)
        if len(index) != self.dimension:
            raise ProblemError(f"expected {self.dimension} components, got {len(index)}")
        for k, n in zip(index, self.n_steps):
            if not 0 <= k <= n:
                raise ProblemError(f"lattice index {k} outside [0, {n}]")
        return SolutionVector(index, self.values_of(index))

    def quantize(self, x: Sequence[float]) -> SolutionVector:
        return quantize(self, x)

    def raw_parts(self, values: np.ndarray) -> tuple[float, list[float]]:
        if self.evaluator is not None:
            raw, violations = self.evaluator(values)
            return float(raw), [float(v) for v in violations]
        raw = float(self.objective(values))
        return raw, [float(c.func(values)) for c in self.constraints]


def quantize(p: ProblemDefinition, x: Sequence[float]) -> SolutionVector:
    """Clamp ``x`` into the bounds and snap it to the nearest lattice point.

    Exact halves round away from the lower bound.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != p.lower.shape:
        raise ProblemError(f"expected {p.dimension} components, got {x.size}")
    clamped = np.clip(x, p.lower, p.upper)
    k = np.floor((clamped - p.lower) / p.quantum + 0.5 + _HALF_EPS).astype(np.int64)
    k = np.clip(k, 0, p.n_steps)
    return p.vector(k)


def penalized(raw: float, violations: Sequence[float], pen: PenaltyConfig) -> float:
    total = raw
    for w, v in zip(pen.weights, violations):
        if v > 0:
            total += w * v ** pen.exponent
    return total


def evaluate(
    p: ProblemDefinition,
    pen: Optional[PenaltyConfig],
    x: SolutionVector,
    eval_index: int = 0,
    phase: str = "LOCAL",
) -> EvaluationRecord:
    """Evaluate ``x`` and compose the penalized objective.

    A numerical failure inside the problem (arithmetic, value or linear
    algebra error) or a non-finite result produces an infeasible record
    carrying ``INFEASIBLE_SENTINEL``.
    """
    pen = pen or p.penalty
    n_con = len(p.constraint_names)
    try:
        raw, violations = p.raw_parts(np.asarray(x.values))
    except (ArithmeticError, ValueError, np.linalg.LinAlgError):
        return EvaluationRecord(
            x, math.inf, (math.inf,) * n_con, INFEASIBLE_SENTINEL, False, eval_index, phase
        )
    violations = tuple(max(0.0, v) if not math.isnan(v) else math.inf for v in violations)
    if not math.isfinite(raw) or not all(math.isfinite(v) for v in violations):
        return EvaluationRecord(x, raw, violations, INFEASIBLE_SENTINEL, False, eval_index, phase)
    feasible = all(v == 0 for v in violations)
    value = raw if feasible else penalized(raw, violations, pen)
    if not math.isfinite(value):
        value = INFEASIBLE_SENTINEL
    return EvaluationRecord(x, raw, violations, value, feasible, eval_index, phase)
