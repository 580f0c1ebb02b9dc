"""Pole-shape benchmark: ramped pole profiles and a surface-charge field model.

Two rotationally symmetric poles face each other across a gap.  Each pole
face is treated as a sheet of uniform magnetic surface charge (per unit
projected area) that follows the profile; the lower face carries +sigma and
the upper face -sigma so the gap field points along +z.  The face is cut
into concentric rings and the analytic field of a charged ring is summed.
Units: cm for lengths, sigma = 1, field in the matching units with the
1/(4 pi) convention (a charged disk gives sigma/2 on its surface).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ellipe, ellipk

from .problem import Constraint, PenaltyConfig, ProblemDefinition

POLE_RADIUS = 16.0
GAP_HALF_WIDTH = 10.0
MAX_HEIGHT = 6.0
RAMP_FRACTION = 0.05
N_RING = 200
ROI_RADIUS = 6.0
ROI_HALF_HEIGHT = 4.0
GRID_SHAPE = (9, 9)
OBJECTIVE_SCALE = 1e6
PARAM_STEP = 0.1
ORDER_MARGIN = 0.1
ORDER_WEIGHT = 1e5


class PoleError(ValueError):
    pass


@dataclass(frozen=True)
class PoleProfile:
    """Pole face with ``k`` ramps.

    Height is 0 from the axis up to the first break radius; at break ``j``
    the face ramps linearly over ``ramp_width`` (clipped at the next break)
    to plateau height ``heights[j]``.  Positive heights move the face into
    the gap.
    """

    breaks: tuple[float, ...]
    heights: tuple[float, ...]
    pole_radius: float = POLE_RADIUS
    gap_half_width: float = GAP_HALF_WIDTH
    max_height: float = MAX_HEIGHT
    ramp_fraction: float = RAMP_FRACTION
    validate: bool = True

    def __post_init__(self):
        if len(self.breaks) != len(self.heights):
            raise PoleError("need one height per break radius")
        if not 1 <= len(self.breaks) <= 4 and self.validate:
            raise PoleError("ramp count must be 1..4")
        if self.validate:
            edges = (0.0,) + tuple(self.breaks) + (self.pole_radius,)
            if any(b <= a for a, b in zip(edges, edges[1:])):
                raise PoleError(f"break radii must increase strictly inside (0, R): {self.breaks}")
            if any(abs(h) > self.max_height + 1e-12 for h in self.heights):
                raise PoleError(f"heights exceed +/-{self.max_height}: {self.heights}")

    @classmethod
    def from_params(cls, params: Sequence[float], **kw) -> "PoleProfile":
        params = [float(v) for v in params]
        if len(params) % 2:
            raise PoleError("parameters come in (radius, height) pairs")
        return cls(tuple(params[0::2]), tuple(params[1::2]), **kw)

    @property
    def scheme(self) -> int:
        return len(self.breaks)

    @property
    def ramp_width(self) -> float:
        return self.ramp_fraction * self.pole_radius

    def ramps(self) -> list[tuple[float, float, float]]:
        """(start, end, plateau height) per ramp."""
        out = []
        for j, (r0, h) in enumerate(zip(self.breaks, self.heights)):
            nxt = self.breaks[j + 1] if j + 1 < len(self.breaks) else self.pole_radius
            end = min(r0 + self.ramp_width, max(nxt, r0), self.pole_radius)
            out.append((r0, max(end, r0), h))
        return out

    def heights_at(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        h = np.zeros_like(r)
        prev = 0.0
        for start, end, level in self.ramps():
            if end > start:
                t = np.clip((r - start) / (end - start), 0.0, 1.0)
            else:
                t = (r >= start).astype(float)
            h = h + (level - prev) * t
            prev = level
        return h

    def polyline(self) -> list[tuple[float, float]]:
        pts = [(0.0, 0.0)]
        for start, end, _ in self.ramps():
            pts.append((start, float(self.heights_at(start))))
            pts.append((end, float(self.heights_at(end))))
        pts.append((self.pole_radius, float(self.heights_at(self.pole_radius))))
        return pts


def height_at(profile: PoleProfile, r: float) -> float:
    if not 0.0 <= r <= profile.pole_radius:
        raise PoleError(f"radius {r} outside [0, {profile.pole_radius}]")
    return float(profile.heights_at(r))


def ring_axial_field(q, a, z0, r, z):
    """Axial field at (r, z) of rings with charge ``q``, radius ``a`` at height ``z0``."""
    dz = np.asarray(z, dtype=float) - z0
    r = np.asarray(r, dtype=float)
    far2 = (a + r) ** 2 + dz ** 2
    near2 = (a - r) ** 2 + dz ** 2
    return q / (2.0 * math.pi ** 2) * dz * ellipe(4.0 * a * r / far2) / (near2 * np.sqrt(far2))


def ring_field(q, a, z0, r, z):
    """(B_r, B_z) at (r, z) of rings with charge ``q``, radius ``a`` at height ``z0``.

    Arrays broadcast.  Uses the complete elliptic integrals with parameter
    m = 4 a r / ((a + r)^2 + dz^2).
    """
    dz = np.asarray(z, dtype=float) - z0
    r = np.asarray(r, dtype=float)
    far2 = (a + r) ** 2 + dz ** 2
    near2 = (a - r) ** 2 + dz ** 2
    m = 4.0 * a * r / far2
    E = ellipe(m)
    root = np.sqrt(far2)
    bz = q / (4.0 * math.pi) * 2.0 * dz * E / (math.pi * near2 * root)
    with np.errstate(divide="ignore", invalid="ignore"):
        br = q / (4.0 * math.pi) * (ellipk(m) - (a ** 2 - r ** 2 + dz ** 2) / near2 * E) / (
            math.pi * r * root
        )
    br = np.where(r == 0.0, 0.0, br)
    return br, bz


def _rings(profile: PoleProfile, n_ring: int):
    dr = profile.pole_radius / n_ring
    a = (np.arange(n_ring) + 0.5) * dr
    q = 2.0 * math.pi * a * dr
    return a, q, profile.heights_at(a)


def face_field(profile: PoleProfile, r, z, face_z: float, sigma: float = 1.0, n_ring: int = N_RING, sign: int = -1):
    """Field of a single charged face.

    The face sits at ``face_z + sign * height``; ``sign=-1`` is a face whose
    raised parts move down (the upper pole).
    """
    a, q, h = _rings(profile, n_ring)
    zr = face_z + sign * h
    r = np.asarray(r, dtype=float)[..., None]
    z = np.asarray(z, dtype=float)[..., None]
    br, bz = ring_field(sigma * q, a, zr, r, z)
    return br.sum(axis=-1), bz.sum(axis=-1)


def _check_in_gap(profile: PoleProfile, r, z) -> None:
    r = np.asarray(r, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(r < 0) or np.any(r > profile.pole_radius):
        raise PoleError("sample point outside the pole radius")
    face = profile.gap_half_width - profile.heights_at(r)
    if np.any(np.abs(z) >= face):
        raise PoleError("sample point outside the gap")


def field_components(profile: PoleProfile, r, z, sigma: float = 1.0, n_ring: int = N_RING):
    """(B_r, B_z) between a mirror-symmetric pole pair."""
    _check_in_gap(profile, r, z)
    g = profile.gap_half_width
    br_u, bz_u = face_field(profile, r, z, g, -sigma, n_ring, sign=-1)
    br_l, bz_l = face_field(profile, r, z, -g, sigma, n_ring, sign=+1)
    return br_u + br_l, bz_u + bz_l


def field_at(profile: PoleProfile, r, z, sigma: float = 1.0, n_ring: int = N_RING):
    """Axial field between the pole pair at (r, z); accepts arrays."""
    _check_in_gap(profile, r, z)
    a, q, h = _rings(profile, n_ring)
    g = profile.gap_half_width
    r = np.asarray(r, dtype=float)[..., None]
    z = np.asarray(z, dtype=float)[..., None]
    upper = ring_axial_field(-sigma * q, a, g - h, r, z)
    lower = ring_axial_field(sigma * q, a, -(g - h), r, z)
    return (upper + lower).sum(axis=-1)


def disk_axial_field(sigma: float, radius: float, distance):
    """Closed-form on-axis field of a uniformly charged disk."""
    d = np.asarray(distance, dtype=float)
    return sigma / 2.0 * (1.0 - d / np.sqrt(d ** 2 + radius ** 2))


def sample_grid(radius: float = ROI_RADIUS, half_height: float = ROI_HALF_HEIGHT, shape=GRID_SHAPE):
    rr, zz = np.meshgrid(np.linspace(0.0, radius, shape[0]), np.linspace(-half_height, half_height, shape[1]), indexing="ij")
    return rr.ravel(), zz.ravel()


def uniformity(values) -> float:
    """Scaled spread of field samples: 1e6 * sum((B - mean)^2) / mean^2."""
    b = np.asarray(values, dtype=float)
    mean = b.mean()
    if mean == 0.0 or not np.isfinite(mean):
        raise PoleError("mean field is zero: degenerate configuration")
    return float(OBJECTIVE_SCALE * np.sum((b - mean) ** 2) / mean ** 2)


def uniformity_objective(profile: PoleProfile, grid=None, n_ring: int = N_RING) -> float:
    """Field uniformity over the sample grid (lower is better).

    The pole pair is mirror symmetric about z = 0, so the field is computed
    once per (r, |z|) and reused for the mirrored sample.
    """
    r, z = grid if grid is not None else sample_grid()
    pts = np.stack([np.asarray(r, dtype=float), np.abs(np.asarray(z, dtype=float))], axis=1)
    unique, inverse = np.unique(pts, axis=0, return_inverse=True)
    values = field_at(profile, unique[:, 0], unique[:, 1], n_ring=n_ring)
    return uniformity(values[np.ravel(inverse)])


def ordering_violation(breaks: Sequence[float], margin: float = ORDER_MARGIN) -> float:
    return float(sum(max(0.0, a - b + margin) for a, b in zip(breaks, breaks[1:])))


def make_pole_problem(
    k: int,
    n_ring: int = N_RING,
    max_height: float = MAX_HEIGHT,
    order_weight: float = ORDER_WEIGHT,
    start=None,
) -> ProblemDefinition:
    """Pole problem with ``k`` ramps and parameters (r1, h1, ..., rk, hk).

    Out-of-order break radii are reported through the ordering constraint;
    the objective itself is computed on the radius-sorted profile so the
    penalty stays smooth.
    """
    if k not in (1, 2, 3, 4):
        raise PoleError(f"ramp count must be 1..4, got {k}")
    k = int(k)
    n_ring = int(n_ring)
    max_height = float(max_height)
    grid = sample_grid()

    def objective(x):
        pairs = sorted(zip(x[0::2], x[1::2]), key=lambda p: p[0])
        profile = PoleProfile(
            tuple(p[0] for p in pairs), tuple(p[1] for p in pairs), max_height=max_height, validate=False
        )
        return uniformity_objective(profile, grid, n_ring)

    def order(x):
        return ordering_violation(list(x[0::2]))

    lower, upper, labels = [], [], []
    for j in range(1, k + 1):
        lower += [0.5, -max_height]
        upper += [POLE_RADIUS - 0.5, max_height]
        labels += [f"r{j}", f"h{j}"]
    return ProblemDefinition(
        f"pole{k}",
        lower,
        upper,
        [PARAM_STEP] * (2 * k),
        objective=objective,
        constraints=[Constraint("ordering", order, float(order_weight))],
        penalty=PenaltyConfig((float(order_weight),), 2.0),
        start=start,
        labels=labels,
    )


def write_profile_csv(profile: PoleProfile, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "h"])
        for r, h in profile.polyline():
            w.writerow([repr(float(r)), repr(float(h))])
