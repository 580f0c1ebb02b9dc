import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from tabu_forge.pole import (
    POLE_RADIUS,
    PoleError,
    PoleProfile,
    disk_axial_field,
    face_field,
    field_at,
    field_components,
    height_at,
    make_pole_problem,
    ordering_violation,
    ring_field,
    sample_grid,
    uniformity,
    uniformity_objective,
    write_profile_csv,
)
from tabu_forge.problem import evaluate

FLAT = PoleProfile((8.0,), (0.0,))


def test_height_examples():
    prof = PoleProfile((5.0,), (2.0,))
    assert prof.ramp_width == pytest.approx(0.8)
    assert height_at(prof, 0.0) == 0.0
    assert height_at(prof, 10.0) == 2.0
    assert height_at(prof, 5.4) == pytest.approx(1.0)
    with pytest.raises(PoleError):
        height_at(prof, POLE_RADIUS + 1)


def test_profile_validation():
    with pytest.raises(PoleError):
        PoleProfile((6.0, 4.0), (1.0, 2.0))
    with pytest.raises(PoleError):
        PoleProfile((6.0,), (7.0,))
    with pytest.raises(PoleError):
        PoleProfile((1.0, 2.0, 3.0, 4.0, 5.0), (0.0,) * 5)
    with pytest.raises(PoleError):
        PoleProfile.from_params([1.0, 2.0, 3.0])


def test_ring_field_matches_quadrature():
    q, a, z0, r, z = 2.0, 3.0, 0.5, 1.7, 2.2

    def integrand(phi, comp):
        dx = r - a * math.cos(phi)
        dy = -a * math.sin(phi)
        dz = z - z0
        d3 = (dx * dx + dy * dy + dz * dz) ** 1.5
        return (dx if comp == 0 else dz) / d3

    lam = q / (2 * math.pi)
    br = lam / (4 * math.pi) * integrate.quad(integrand, 0, 2 * math.pi, args=(0,), epsabs=1e-13)[0]
    bz = lam / (4 * math.pi) * integrate.quad(integrand, 0, 2 * math.pi, args=(1,), epsabs=1e-13)[0]
    got_r, got_z = ring_field(q, a, z0, r, z)
    assert got_r == pytest.approx(br, rel=1e-9)
    assert got_z == pytest.approx(bz, rel=1e-9)


@pytest.mark.parametrize("d", [1.0, 2.0, 5.0, 10.0, 14.0])
def test_flat_face_matches_charged_disk(d):
    bz = face_field(FLAT, 0.0, d, face_z=0.0, sigma=1.0, n_ring=200, sign=+1)[1]
    exact = disk_axial_field(1.0, POLE_RADIUS, d)
    assert abs(bz - exact) / exact < 1e-3


def test_flat_pole_pair_on_axis_matches_two_disks():
    z = np.linspace(-8, 8, 9)
    got = field_at(FLAT, np.zeros_like(z), z)
    exact = disk_axial_field(1.0, POLE_RADIUS, 10.0 + z) + disk_axial_field(1.0, POLE_RADIUS, 10.0 - z)
    assert np.all(np.abs(got - exact) / exact < 1e-3)


def test_midplane_axis_has_no_radial_field():
    prof = PoleProfile((4.0, 9.0), (1.5, -2.0))
    br, bz = field_components(prof, 0.0, 0.0)
    assert br == 0.0 and bz > 0


def test_axial_only_path_agrees_with_full_field():
    prof = PoleProfile((4.0, 9.0), (1.5, -2.0))
    r, z = sample_grid()
    assert np.allclose(field_at(prof, r, z), field_components(prof, r, z)[1], rtol=1e-13, atol=0)


def test_ring_count_convergence():
    prof = PoleProfile((6.0, 12.0), (0.5, 2.0))
    r, z = sample_grid()
    a = field_at(prof, r, z, n_ring=200)
    b = field_at(prof, r, z, n_ring=400)
    assert np.max(np.abs(a - b) / np.abs(b)) < 5e-4


def test_points_outside_gap_rejected():
    prof = PoleProfile((2.0,), (6.0,))
    with pytest.raises(PoleError):
        field_at(prof, 3.0, 4.5)
    with pytest.raises(PoleError):
        field_at(prof, 20.0, 0.0)


def test_uniformity_examples():
    assert uniformity(np.full(81, 3.2)) == pytest.approx(0.0, abs=1e-15)
    r, z = sample_grid()
    b = field_at(PoleProfile((6.0,), (1.0,)), r, z)
    assert uniformity(2 * b) == pytest.approx(uniformity(b), rel=1e-12)
    with pytest.raises(PoleError):
        uniformity(np.zeros(4))


def test_shaped_profile_beats_flat_pole():
    flat = uniformity_objective(FLAT)
    # coarse grid search over the two-ramp space as an independent oracle
    best = min(
        uniformity_objective(PoleProfile((r1, r2), (h1, h2)))
        for r1, r2, h1, h2 in itertools.product((4.0, 6.0, 8.0), (10.0, 12.0, 14.0), (0.0, 0.5, 1.0), (1.0, 2.0, 4.0))
    )
    assert best < flat
    assert uniformity_objective(PoleProfile((6.0, 12.0), (0.5, 2.0))) < 0.5 * flat


def test_problem_dimensions_and_ordering():
    assert make_pole_problem(2).dimension == 4
    assert make_pole_problem(4).dimension == 8
    p = make_pole_problem(2)
    rec = evaluate(p, None, p.quantize([9.0, 1.0, 5.0, 2.0]))
    assert rec.violations[0] > 0 and not rec.feasible
    # never silently reordered
    assert rec.vector.values[0] == 9.0
    ok = evaluate(p, None, p.quantize([5.0, 1.0, 9.0, 2.0]))
    assert ok.feasible and ok.violations == (0.0,)
    with pytest.raises(PoleError):
        make_pole_problem(5)


def test_ordering_violation_margin():
    assert ordering_violation([1.0, 5.0, 9.0]) == 0.0
    assert ordering_violation([5.0, 5.0]) == pytest.approx(0.1)
    assert ordering_violation([6.0, 5.0]) == pytest.approx(1.1)


def test_profile_csv(tmp_path):
    out = tmp_path / "profile.csv"
    write_profile_csv(PoleProfile((5.0,), (2.0,)), out)
    lines = out.read_text().splitlines()
    assert lines[0] == "r,h" and lines[-1] == "16.0,2.0"


profiles = st.integers(1, 4).flatmap(
    lambda k: st.tuples(
        st.lists(st.floats(0.5, 15.5), min_size=k, max_size=k, unique=True).map(sorted),
        st.lists(st.floats(-3.0, 3.0), min_size=k, max_size=k),
    )
).filter(lambda t: all(b - a > 1e-3 for a, b in zip(t[0], t[0][1:])))


@settings(max_examples=40, deadline=None)
@given(profiles, st.floats(0.0, 6.0), st.floats(0.05, 4.0))
def test_mirror_symmetry(params, r, z):
    prof = PoleProfile(tuple(params[0]), tuple(params[1]))
    up = field_at(prof, r, z)
    down = field_at(prof, r, -z)
    assert abs(up - down) <= 1e-9 * abs(up)


@settings(max_examples=30, deadline=None)
@given(profiles, st.floats(0.1, 50.0))
def test_linear_in_surface_charge(params, c):
    prof = PoleProfile(tuple(params[0]), tuple(params[1]))
    r, z = sample_grid()
    b1 = field_at(prof, r, z)
    bc = field_at(prof, r, z, sigma=c)
    assert np.allclose(bc, c * b1, rtol=1e-12, atol=0)
    assert uniformity(bc) == pytest.approx(uniformity(b1), rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(profiles)
def test_height_continuous(params):
    prof = PoleProfile(tuple(params[0]), tuple(params[1]))
    r = np.linspace(0.0, POLE_RADIUS, 20001)
    h = prof.heights_at(r)
    # a ramp clipped by the next break is steeper than nominal but still finite
    slope, prev = 0.0, 0.0
    for start, end, level in prof.ramps():
        slope += abs(level - prev) / (end - start)
        prev = level
    dr = r[1] - r[0]
    assert np.max(np.abs(np.diff(h))) <= slope * dr * (1 + 1e-9) + 1e-12


def test_objective_deterministic():
    prof = PoleProfile((3.0, 7.0, 11.0), (0.4, 1.2, 3.0))
    assert uniformity_objective(prof) == uniformity_objective(prof)
