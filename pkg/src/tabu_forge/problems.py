"""Registry of the bundled benchmark problems."""
from __future__ import annotations

from typing import Callable

import numpy as np

from .problem import ProblemDefinition

# Two-basin fixture: a shallow local well at LOCAL_CENTER sits between the
# default start and nothing else; the deeper global well is at GLOBAL_CENTER.
GLOBAL_CENTER = (2.5, 2.5)
LOCAL_CENTER = (-2.5, -2.5)
GLOBAL_DEPTH = 2.0
LOCAL_DEPTH = 1.0
WELL_WIDTH = 1.5
BOWL = 0.02


def two_basin(x: np.ndarray) -> float:
    """Two Gaussian wells on a weak quadratic bowl.

    Global minimum near GLOBAL_CENTER (about -1.75), local minimum near
    LOCAL_CENTER (about -0.75), separated by a ridge near the diagonal.
    """
    x = np.asarray(x, dtype=float)
    dg = np.sum((x - GLOBAL_CENTER) ** 2)
    dl = np.sum((x - LOCAL_CENTER) ** 2)
    return float(
        BOWL * np.sum(x ** 2)
        - GLOBAL_DEPTH * np.exp(-dg / (2 * WELL_WIDTH ** 2))
        - LOCAL_DEPTH * np.exp(-dl / (2 * WELL_WIDTH ** 2))
    )


def in_global_basin(x) -> bool:
    """True when ``x`` lies on the global side of the separating diagonal."""
    return float(x[0]) + float(x[1]) > 0.0


def make_two_basin(start=LOCAL_CENTER) -> ProblemDefinition:
    return ProblemDefinition(
        "twobasin",
        lower=[-5.0, -5.0],
        upper=[5.0, 5.0],
        min_steps=[0.1, 0.1],
        objective=two_basin,
        start=start,
        labels=["x", "y"],
    )


def _pole(k: int) -> Callable[..., ProblemDefinition]:
    def build(**options) -> ProblemDefinition:
        from .pole import make_pole_problem

        return make_pole_problem(k, **options)

    return build


def _tenbar(**options) -> ProblemDefinition:
    from .truss import MAX_AREA, TenBarDesign, make_ten_bar_problem

    # Start from the nominal layout with every area at its upper bound, a
    # heavy design that already meets every constraint.
    if options.get("start") is None:
        options["start"] = TenBarDesign.nominal(float(options.get("max_area", MAX_AREA))).vector()
    return make_ten_bar_problem(**options)


def _twobasin(**options) -> ProblemDefinition:
    return make_two_basin(**options)


REGISTRY: dict[str, Callable[..., ProblemDefinition]] = {
    "twobasin": _twobasin,
    "tenbar": _tenbar,
    "pole1": _pole(1),
    "pole2": _pole(2),
    "pole3": _pole(3),
    "pole4": _pole(4),
}


# Engine settings that differ from SearchConfig defaults, per problem.  The
# ten-bar lattice has 16 dimensions with up to 50000 points each; without
# sampling and pattern moves a 20000-evaluation budget stalls far from the
# optimum.
ENGINE_DEFAULTS: dict[str, dict] = {
    "tenbar": {"tabu_tenure": 20, "pattern_move": True, "sample_dims": 4},
}


def get_problem(name: str, **options) -> ProblemDefinition:
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {', '.join(REGISTRY)}") from None
    return factory(**options)
