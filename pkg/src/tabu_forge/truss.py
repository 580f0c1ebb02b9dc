"""Pin-jointed plane truss analysis and the ten-bar benchmark with movable nodes.

Units are cm, N, kg throughout.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .problem import PenaltyConfig, ProblemDefinition

YOUNGS_MODULUS = 6.88e6  # N/cm^2, aluminium
DENSITY = 2.7e-3  # kg/cm^3
STRESS_LIMIT = 17200.0  # N/cm^2
MIN_AREA = 0.01  # cm^2
AREA_STEP = 0.01  # cm^2
COORD_STEP = 1.0  # cm
MAX_AREA = 500.0  # cm^2
LENGTH_LIMIT = 1500.0  # cm
BAY = 914.4  # cm, 360 in
TIP_LOAD = 444822.0  # N, 100 kip
PIVOT_TOL = 1e-9


class KinematicInstability(np.linalg.LinAlgError):
    """The structure is a mechanism (singular stiffness)."""


class DegenerateGeometry(ValueError):
    pass


@dataclass(frozen=True)
class Member:
    a: int
    b: int
    area: float


@dataclass(frozen=True)
class TrussModel:
    nodes: tuple[tuple[float, float], ...]
    members: tuple[Member, ...]
    supports: dict[int, tuple[bool, bool]]
    loads: dict[int, tuple[float, float]]
    youngs_modulus: float = YOUNGS_MODULUS
    density: float = DENSITY
    labels: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        n = len(self.nodes)
        for m in self.members:
            if m.a == m.b or not (0 <= m.a < n and 0 <= m.b < n):
                raise DegenerateGeometry(f"member {m} does not join two distinct nodes")
            if m.area < MIN_AREA - 1e-12:
                raise ValueError(f"member area {m.area} below minimum {MIN_AREA}")
        fixed = sum(int(fx) + int(fy) for fx, fy in self.supports.values())
        if fixed < 3:
            raise ValueError("at least three constrained degrees of freedom needed")

    def member_length(self, m: Member) -> float:
        (xa, ya), (xb, yb) = self.nodes[m.a], self.nodes[m.b]
        return math.hypot(xb - xa, yb - ya)

    def with_areas(self, areas: Sequence[float]) -> "TrussModel":
        members = tuple(replace(m, area=float(a)) for m, a in zip(self.members, areas))
        return replace(self, members=members)


@dataclass(frozen=True)
class MemberState:
    length: float
    axial_force: float  # tension positive
    stress: float
    critical_buckling_load: float


@dataclass(frozen=True)
class TrussSolution:
    displacements: np.ndarray  # (n_nodes, 2)
    members: tuple[MemberState, ...]
    residual: float  # ||K u - F|| over free dofs
    load_norm: float


def critical_buckling_load(area: float, length: float, E: float = YOUNGS_MODULUS) -> float:
    """Euler load of a pinned solid circular bar, I = A^2 / (4 pi)."""
    inertia = area ** 2 / (4.0 * math.pi)
    return math.pi ** 2 * E * inertia / length ** 2


def _direction(model: TrussModel, m: Member):
    (xa, ya), (xb, yb) = model.nodes[m.a], model.nodes[m.b]
    L = math.hypot(xb - xa, yb - ya)
    if L == 0.0:
        raise DegenerateGeometry(f"member {m.a}-{m.b} has zero length")
    return L, (xb - xa) / L, (yb - ya) / L


def solve(model: TrussModel) -> TrussSolution:
    """Direct stiffness analysis.

    Raises KinematicInstability when an LU pivot of the reduced stiffness
    matrix falls below PIVOT_TOL times its largest diagonal entry.
    """
    n = len(model.nodes)
    ndof = 2 * n
    K = np.zeros((ndof, ndof))
    F = np.zeros(ndof)
    geom = []
    for m in model.members:
        L, c, s = _direction(model, m)
        v = np.array([-c, -s, c, s])
        dofs = [2 * m.a, 2 * m.a + 1, 2 * m.b, 2 * m.b + 1]
        K[np.ix_(dofs, dofs)] += model.youngs_modulus * m.area / L * np.outer(v, v)
        geom.append((L, v, dofs))
    for node, (fx, fy) in model.loads.items():
        F[2 * node] += fx
        F[2 * node + 1] += fy

    fixed = set()
    for node, (fx, fy) in model.supports.items():
        if fx:
            fixed.add(2 * node)
        if fy:
            fixed.add(2 * node + 1)
    free = [d for d in range(ndof) if d not in fixed]
    u = np.zeros(ndof)
    residual = 0.0
    if free:
        Kf = K[np.ix_(free, free)]
        diag = np.max(np.abs(np.diag(Kf))) if Kf.size else 0.0
        if diag == 0.0:
            raise KinematicInstability("free degrees of freedom carry no stiffness")
        with warnings.catch_warnings():
            # singular pivots are detected below and reported as a mechanism
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(Kf, check_finite=True)
        if np.min(np.abs(np.diag(lu))) < PIVOT_TOL * diag:
            raise KinematicInstability("stiffness matrix is singular: structure is a mechanism")
        u[free] = scipy.linalg.lu_solve((lu, piv), F[free])
        residual = float(np.linalg.norm(Kf @ u[free] - F[free]))

    states = []
    for m, (L, v, dofs) in zip(model.members, geom):
        force = model.youngs_modulus * m.area / L * float(v @ u[dofs])
        states.append(
            MemberState(
                length=L,
                axial_force=force,
                stress=force / m.area,
                critical_buckling_load=critical_buckling_load(m.area, L, model.youngs_modulus),
            )
        )
    return TrussSolution(u.reshape(n, 2), tuple(states), residual, float(np.linalg.norm(F[free])))


def mass(model: TrussModel) -> float:
    return sum(model.density * m.area * model.member_length(m) for m in model.members)


@dataclass(frozen=True)
class Violations:
    stress: tuple[float, ...]
    buckling: tuple[float, ...]
    length: tuple[float, ...]

    def flat(self) -> tuple[float, ...]:
        return self.stress + self.buckling + self.length

    @property
    def feasible(self) -> bool:
        return not any(self.flat())

    def describe(self, names: Optional[Sequence[str]] = None) -> list[str]:
        out = []
        for family, values in (("stress", self.stress), ("buckling", self.buckling), ("length", self.length)):
            for i, v in enumerate(values):
                if v > 0:
                    label = names[i] if names else f"member {i + 1}"
                    out.append(f"{family} {label}: {v:.6g}")
        return out


def check_constraints(
    model: TrussModel,
    states: Sequence[MemberState],
    stress_limit: float = STRESS_LIMIT,
    length_limit: float = LENGTH_LIMIT,
) -> Violations:
    stress, buckling, length = [], [], []
    for st in states:
        stress.append(max(0.0, abs(st.stress) - stress_limit))
        if st.axial_force < 0:
            buckling.append(max(0.0, -st.axial_force - st.critical_buckling_load))
        else:
            buckling.append(0.0)
        length.append(max(0.0, st.length - length_limit))
    return Violations(tuple(stress), tuple(buckling), tuple(length))


# --- ten-bar benchmark -------------------------------------------------------
#
# Nodes are numbered column by column, bottom row first:
#
#     4 ---- 5 ---- 6        node 1 and node 4 are built in at x = 0,
#     |      |      |        node 3 carries the tip load,
#     1 ---- 2 ---- 3        nodes 2, 5 and 6 are free to move.
#
# Coordinates are relative to node 1.  Member numbering (1-based node ids):
TEN_BAR_CONNECTIVITY = (
    (4, 5), (5, 6), (1, 2), (2, 3), (6, 3),
    (5, 2), (1, 5), (4, 2), (2, 6), (5, 3),
)
NOMINAL_NODES = {
    1: (0.0, 0.0),
    2: (BAY, 0.0),
    3: (2 * BAY, 0.0),
    4: (0.0, BAY),
    5: (BAY, BAY),
    6: (2 * BAY, BAY),
}
MOVABLE_NODES = (2, 5, 6)
# Reference optimum, coordinates (x2, y2, x5, y5, x6, y6) then areas A1..A10.
REFERENCE_COORDS = (445.0, -61.0, 807.0, 408.0, 1197.0, -112.0)
REFERENCE_AREAS = (60.39, 16.6, 183.17, 0.01, 239.9, 3.04, 0.01, 1.42, 310.26, 47.9)
REFERENCE_MASS = 1598.0
# Under TIP_LOAD the reference design, with A4 and A7 removed, is a little
# overloaded: these checks fail, by at most 15% (stress in A6).  It passes
# every check for tip loads up to REFERENCE_DESIGN_MAX_LOAD.
REFERENCE_DESIGN_VIOLATIONS = ("stress A1", "stress A6", "stress A10", "buckling A5", "buckling A9")
REFERENCE_DESIGN_MAX_LOAD = 387000.0
# Coordinate box for the movable nodes: x in [0, 1830], y in [-500, 1000].
COORD_LOWER = (0.0, -500.0)
COORD_UPPER = (1830.0, 1000.0)


@dataclass(frozen=True)
class TenBarDesign:
    coords: tuple[float, ...]  # x2, y2, x5, y5, x6, y6
    areas: tuple[float, ...]  # A1..A10

    @classmethod
    def from_vector(cls, values: Sequence[float]) -> "TenBarDesign":
        values = tuple(float(v) for v in values)
        return cls(values[:6], values[6:])

    @classmethod
    def reference(cls) -> "TenBarDesign":
        return cls(REFERENCE_COORDS, REFERENCE_AREAS)

    @classmethod
    def nominal(cls, area: float = MIN_AREA) -> "TenBarDesign":
        coords = []
        for node in MOVABLE_NODES:
            coords.extend(round(c) for c in NOMINAL_NODES[node])
        return cls(tuple(float(c) for c in coords), (area,) * 10)

    def vector(self) -> tuple[float, ...]:
        return self.coords + self.areas


def build_ten_bar(d: TenBarDesign, load: float = TIP_LOAD) -> TrussModel:
    if len(d.coords) != 6 or len(d.areas) != 10:
        raise ValueError("ten-bar design needs 6 coordinates and 10 areas")
    nodes = dict(NOMINAL_NODES)
    for j, node in enumerate(MOVABLE_NODES):
        nodes[node] = (float(d.coords[2 * j]), float(d.coords[2 * j + 1]))
    ordered = [nodes[i] for i in range(1, 7)]
    for i in range(6):
        for j in range(i + 1, 6):
            if ordered[i] == ordered[j]:
                raise DegenerateGeometry(f"nodes {i + 1} and {j + 1} coincide")
    members = tuple(Member(a - 1, b - 1, float(A)) for (a, b), A in zip(TEN_BAR_CONNECTIVITY, d.areas))
    return TrussModel(
        nodes=tuple(ordered),
        members=members,
        supports={0: (True, True), 3: (True, True)},
        loads={2: (0.0, -float(load))},
        labels=tuple(f"A{i}" for i in range(1, 11)),
    )


@dataclass
class ReductionResult:
    model: TrussModel
    removed: tuple[int, ...]  # 0-based member indices
    reduced: bool
    diagnostic: str = ""
    violations: Optional[Violations] = None


def reduce_topology(
    model: TrussModel,
    states: Optional[Sequence[MemberState]] = None,
    threshold: float = MIN_AREA,
    stress_limit: float = STRESS_LIMIT,
    length_limit: float = LENGTH_LIMIT,
) -> ReductionResult:
    """Drop members whose area is at or below ``threshold``.

    The reduced model is returned only when it solves and violates nothing;
    otherwise the original comes back with a diagnostic.  ``states`` is
    accepted for symmetry with the analysis pipeline but not needed.
    """
    removed = tuple(i for i, m in enumerate(model.members) if m.area <= threshold + 1e-12)
    if not removed:
        return ReductionResult(model, (), False, "no minimum-area members")
    keep = tuple(m for i, m in enumerate(model.members) if i not in removed)
    labels = None
    if model.labels is not None:
        labels = tuple(l for i, l in enumerate(model.labels) if i not in removed)
    candidate = replace(model, members=keep, labels=labels)
    try:
        sol = solve(candidate)
    except KinematicInstability as exc:
        return ReductionResult(model, removed, False, f"mechanism: {exc}")
    v = check_constraints(candidate, sol.members, stress_limit, length_limit)
    if not v.feasible:
        return ReductionResult(
            model, removed, False, "constraint violation: " + "; ".join(v.describe(labels)), v
        )
    return ReductionResult(candidate, removed, True, "", v)


# Penalty weights: kg per (N/cm^2)^2, kg per N^2, kg per cm^2 (exponent 2).
STRESS_WEIGHT = 1e-1
BUCKLING_WEIGHT = 1e-2
LENGTH_WEIGHT = 1.0


def ten_bar_analysis(
    values: Sequence[float],
    load: float = TIP_LOAD,
    stress_limit: float = STRESS_LIMIT,
    length_limit: float = LENGTH_LIMIT,
):
    model = build_ten_bar(TenBarDesign.from_vector(values), load)
    sol = solve(model)
    return model, sol, check_constraints(model, sol.members, stress_limit, length_limit)


def make_ten_bar_problem(
    load: float = TIP_LOAD,
    stress_limit: float = STRESS_LIMIT,
    length_limit: float = LENGTH_LIMIT,
    max_area: float = MAX_AREA,
    start: Optional[Sequence[float]] = None,
    stress_weight: float = STRESS_WEIGHT,
    buckling_weight: float = BUCKLING_WEIGHT,
    length_weight: float = LENGTH_WEIGHT,
    penalty_exponent: float = 2.0,
) -> ProblemDefinition:
    """16-variable ten-bar problem: (x2, y2, x5, y5, x6, y6, A1..A10).

    Minimizes mass under per-member stress, Euler buckling and length
    constraints.  Mechanisms and coincident nodes surface as failed
    evaluations.  Without ``start`` the search begins at a random point.
    """
    load, stress_limit, length_limit, max_area = map(float, (load, stress_limit, length_limit, max_area))

    def evaluator(x):
        model, sol, v = ten_bar_analysis(x, load, stress_limit, length_limit)
        return mass(model), v.flat()

    lower = list(COORD_LOWER) * 3 + [MIN_AREA] * 10
    upper = list(COORD_UPPER) * 3 + [max_area] * 10
    steps = [COORD_STEP] * 6 + [AREA_STEP] * 10
    names = [f"{fam}_{i}" for fam in ("stress", "buckling", "length") for i in range(1, 11)]
    weights = [float(stress_weight)] * 10 + [float(buckling_weight)] * 10 + [float(length_weight)] * 10

    return ProblemDefinition(
        "tenbar",
        lower,
        upper,
        steps,
        evaluator=evaluator,
        constraint_names=names,
        penalty=PenaltyConfig(tuple(weights), float(penalty_exponent)),
        start=start,
        labels=["x2", "y2", "x5", "y5", "x6", "y6"] + [f"A{i}" for i in range(1, 11)],
    )


# --- plain-text model files --------------------------------------------------

def dumps(model: TrussModel) -> str:
    """Serialize to the sectioned text format documented in the README."""
    lines = ["[material]", f"E {model.youngs_modulus!r}", f"density {model.density!r}", "", "[nodes]"]
    for i, (x, y) in enumerate(model.nodes, 1):
        lines.append(f"{i} {x!r} {y!r}")
    lines += ["", "[members]"]
    for i, m in enumerate(model.members, 1):
        lines.append(f"{i} {m.a + 1} {m.b + 1} {m.area!r}")
    lines += ["", "[supports]"]
    for node, (fx, fy) in sorted(model.supports.items()):
        lines.append(f"{node + 1} {int(fx)} {int(fy)}")
    lines += ["", "[loads]"]
    for node, (fx, fy) in sorted(model.loads.items()):
        lines.append(f"{node + 1} {fx!r} {fy!r}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> TrussModel:
    section = None
    nodes: dict[int, tuple[float, float]] = {}
    members = []
    supports: dict[int, tuple[bool, bool]] = {}
    node_loads: dict[int, tuple[float, float]] = {}
    material = {"E": YOUNGS_MODULUS, "density": DENSITY}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            continue
        parts = line.split()
        try:
            if section == "material":
                material[parts[0]] = float(parts[1])
            elif section == "nodes":
                nodes[int(parts[0])] = (float(parts[1]), float(parts[2]))
            elif section == "members":
                members.append((int(parts[1]), int(parts[2]), float(parts[3])))
            elif section == "supports":
                supports[int(parts[0]) - 1] = (bool(int(parts[1])), bool(int(parts[2])))
            elif section == "loads":
                node_loads[int(parts[0]) - 1] = (float(parts[1]), float(parts[2]))
            else:
                raise ValueError(f"line outside a known section: {line!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"truss file line {lineno}: {exc}") from None
    ids = sorted(nodes)
    if ids != list(range(1, len(ids) + 1)):
        raise ValueError("node ids must run 1..n")
    return TrussModel(
        nodes=tuple(nodes[i] for i in ids),
        members=tuple(Member(a - 1, b - 1, A) for a, b, A in members),
        supports=supports,
        loads=node_loads,
        youngs_modulus=material["E"],
        density=material["density"],
    )
